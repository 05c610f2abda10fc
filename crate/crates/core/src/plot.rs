//! SVG rendering of success-rate curves: one polyline per `K`, success rate
//! against `M`. Output is byte-for-byte deterministic.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::GridCell;
use crate::io::write_string;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub fn render_svg(cells: &[GridCell]) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::InvalidConfig("nothing to plot: the grid has no cells".into()));
    }
    let mut ms: Vec<usize> = cells.iter().map(|c| c.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut ks: Vec<usize> = cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();

    let (m_lo, m_hi) = (ms[0] as f64, *ms.last().unwrap() as f64);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |m: usize| {
        if m_hi > m_lo {
            LEFT + (m as f64 - m_lo) / (m_hi - m_lo) * plot_w
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let py = |rate: f64| TOP + (1.0 - rate) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
    for &m in &ms {
        let x = px(m);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{m}</text>"#,
            y0 + 16.0
        );
    }
    for rate in [0.0, 0.5, 1.0] {
        let y = py(rate);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{rate:.1}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">M</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">success rate</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (idx, &k) in ks.iter().enumerate() {
        let colour = PALETTE[idx % PALETTE.len()];
        let mut row: Vec<&GridCell> = cells.iter().filter(|c| c.k == k).collect();
        row.sort_by_key(|c| c.m);
        let points: Vec<String> = row
            .iter()
            .map(|c| format!("{:.2},{:.2}", px(c.m), py(c.success_rate())))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * idx as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">K={k}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg_curves(cells: &[GridCell], path: &Path) -> Result<()> {
    write_string(path, &render_svg(cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(m: usize, k: usize, successes: usize) -> GridCell {
        GridCell { m, k, trials: 4, successes, mean_iters: 1.0, mean_rel_err: 0.0, seed: 0 }
    }

    #[test]
    fn one_polyline_per_k() {
        let cells = [cell(8, 1, 2), cell(16, 1, 4), cell(8, 2, 0), cell(16, 2, 3)];
        let svg = render_svg(&cells).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("K=1") && svg.contains("K=2"));
        assert!(svg.contains("viewBox"));
        assert_eq!(svg, render_svg(&cells).unwrap());
    }

    #[test]
    fn empty_grid_is_an_error() {
        assert!(render_svg(&[]).is_err());
    }

    #[test]
    fn single_m_is_centred() {
        let svg = render_svg(&[cell(8, 1, 4)]).unwrap();
        assert!(svg.contains("290.00,20.00"));
    }
}
