use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{ConcentrationReport, GridCell, GridResult, ScalingFit};
use crate::analysis::CheckReport;
use crate::error::{Error, Result};

pub const GRID_HEADER: &str = "m,k,trials,successes,success_rate,mean_iters,mean_rel_err,seed";
const SCALING_MAGIC: &str = "# omplab-scaling v1";
const CONCENTRATION_MAGIC: &str = "# omplab-coherence v1";

/// Results that serialize to a stable text format.
pub trait Export {
    fn to_text(&self) -> String;
}

impl Export for GridResult {
    fn to_text(&self) -> String {
        grid_csv(&self.cells)
    }
}

impl Export for [GridCell] {
    fn to_text(&self) -> String {
        grid_csv(self)
    }
}

impl Export for CheckReport {
    fn to_text(&self) -> String {
        CheckReport::to_text(self)
    }
}

impl Export for ScalingFit {
    fn to_text(&self) -> String {
        let mut out = format!("{SCALING_MAGIC}\n");
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "threshold {:.16e}", self.threshold);
        let _ = writeln!(out, "alpha {:.16e}", self.alpha);
        let _ = writeln!(out, "a {:.16e}", self.a);
        let _ = writeln!(out, "residual {:.16e}", self.residual);
        let _ = writeln!(out, "isotonic {}", self.isotonic_applied);
        let excluded: Vec<String> = self.excluded.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "excluded {}", excluded.join(","));
        for (k, m) in &self.critical {
            let _ = writeln!(out, "critical {k} {m}");
        }
        out
    }
}

impl Export for ConcentrationReport {
    fn to_text(&self) -> String {
        let mut out = format!("{CONCENTRATION_MAGIC}\n");
        let _ = writeln!(out, "m {}", self.m);
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "samples {}", self.samples);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "implied-c-mu {:.16e}", self.implied_c_mu);
        for (p, q) in &self.quantiles {
            let _ = writeln!(out, "quantile {p:.16e} {q:.16e}");
        }
        for mu in &self.mu_values {
            let _ = writeln!(out, "mu {mu:.16e}");
        }
        out
    }
}

fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = format!("{GRID_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{}",
            c.m,
            c.k,
            c.trials,
            c.successes,
            c.success_rate(),
            c.mean_iters,
            c.mean_rel_err,
            c.seed
        );
    }
    out
}

/// Writes `result` to `path`.
pub fn export_results<T: Export + ?Sized>(result: &T, path: &Path) -> Result<()> {
    std::fs::write(path, result.to_text()).map_err(|e| Error::io(path, e))
}

fn field<T: FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {name} {raw:?}")))
}

pub fn parse_grid_csv(text: &str) -> Result<Vec<GridCell>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == GRID_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header {GRID_HEADER:?}"))),
    }
    let mut cells = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != 8 {
            return Err(Error::parse(line, format!("expected 8 fields, found {}", parts.len())));
        }
        let cell = GridCell {
            m: field(line, "m", parts[0])?,
            k: field(line, "k", parts[1])?,
            trials: field(line, "trials", parts[2])?,
            successes: field(line, "successes", parts[3])?,
            mean_iters: field(line, "mean_iters", parts[5])?,
            mean_rel_err: field(line, "mean_rel_err", parts[6])?,
            seed: field(line, "seed", parts[7])?,
        };
        if cell.trials == 0 || cell.successes > cell.trials {
            return Err(Error::parse(line, "successes must lie in 0..=trials with trials >= 1"));
        }
        cells.push(cell);
    }
    Ok(cells)
}

/// `key value` lines after a magic header.
fn keyed_lines<'a>(text: &'a str, magic: &str) -> Result<Vec<(usize, &'a str, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == magic => {}
        _ => return Err(Error::parse(1, format!("expected header {magic:?}"))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            let (key, value) = l
                .trim()
                .split_once(' ')
                .ok_or_else(|| Error::parse(idx + 1, "expected `key value`"))?;
            Ok((idx + 1, key, value))
        })
        .collect()
}

fn missing(name: &str) -> Error {
    Error::parse(0, format!("missing {name}"))
}

pub fn parse_scaling_fit(text: &str) -> Result<ScalingFit> {
    let (mut n, mut threshold, mut alpha, mut a, mut residual, mut isotonic) = (None, None, None, None, None, None);
    let mut excluded = Vec::new();
    let mut critical = Vec::new();
    for (line, key, value) in keyed_lines(text, SCALING_MAGIC)? {
        match key {
            "n" => n = Some(field(line, key, value)?),
            "threshold" => threshold = Some(field(line, key, value)?),
            "alpha" => alpha = Some(field(line, key, value)?),
            "a" => a = Some(field(line, key, value)?),
            "residual" => residual = Some(field(line, key, value)?),
            "isotonic" => isotonic = Some(field(line, key, value)?),
            "excluded" => {
                excluded = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| field(line, key, s))
                    .collect::<Result<_>>()?
            }
            "critical" => {
                let (k, m) = value
                    .split_once(' ')
                    .ok_or_else(|| Error::parse(line, "expected `critical K M`"))?;
                critical.push((field(line, "K", k)?, field(line, "M", m)?));
            }
            other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
        }
    }
    Ok(ScalingFit {
        n: n.ok_or_else(|| missing("n"))?,
        threshold: threshold.ok_or_else(|| missing("threshold"))?,
        critical,
        excluded,
        isotonic_applied: isotonic.ok_or_else(|| missing("isotonic"))?,
        alpha: alpha.ok_or_else(|| missing("alpha"))?,
        a: a.ok_or_else(|| missing("a"))?,
        residual: residual.ok_or_else(|| missing("residual"))?,
    })
}

pub fn parse_concentration(text: &str) -> Result<ConcentrationReport> {
    let (mut m, mut n, mut samples, mut seed, mut c_mu) = (None, None, None, None, None);
    let mut quantiles = Vec::new();
    let mut mu_values = Vec::new();
    for (line, key, value) in keyed_lines(text, CONCENTRATION_MAGIC)? {
        match key {
            "m" => m = Some(field(line, key, value)?),
            "n" => n = Some(field(line, key, value)?),
            "samples" => samples = Some(field(line, key, value)?),
            "seed" => seed = Some(field(line, key, value)?),
            "implied-c-mu" => c_mu = Some(field(line, key, value)?),
            "quantile" => {
                let (p, q) = value
                    .split_once(' ')
                    .ok_or_else(|| Error::parse(line, "expected `quantile p value`"))?;
                quantiles.push((field(line, "level", p)?, field(line, "quantile", q)?));
            }
            "mu" => mu_values.push(field(line, key, value)?),
            other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
        }
    }
    Ok(ConcentrationReport {
        m: m.ok_or_else(|| missing("m"))?,
        n: n.ok_or_else(|| missing("n"))?,
        samples: samples.ok_or_else(|| missing("samples"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        mu_values,
        quantiles,
        implied_c_mu: c_mu.ok_or_else(|| missing("implied-c-mu"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_csv_round_trip_keeps_nan() {
        let cells = [
            GridCell { m: 8, k: 1, trials: 10, successes: 10, mean_iters: 1.0, mean_rel_err: 1.0 / 3.0, seed: u64::MAX },
            GridCell { m: 8, k: 6, trials: 10, successes: 0, mean_iters: f64::NAN, mean_rel_err: 0.7, seed: 3 },
        ];
        let parsed = parse_grid_csv(&cells[..].to_text()).unwrap();
        assert_eq!(parsed[0], cells[0]);
        assert!(parsed[1].mean_iters.is_nan());
        assert_eq!(parsed[1].mean_rel_err.to_bits(), cells[1].mean_rel_err.to_bits());
    }

    #[test]
    fn grid_csv_rejects_bad_rows() {
        assert!(parse_grid_csv("m,k\n").is_err());
        let bad = format!("{GRID_HEADER}\n8,1,10,11,1.1,1,0,0\n");
        assert!(matches!(parse_grid_csv(&bad), Err(Error::Parse { line: 2, .. })));
        let short = format!("{GRID_HEADER}\n8,1,10\n");
        assert!(parse_grid_csv(&short).is_err());
    }

    #[test]
    fn scaling_fit_round_trip() {
        let fit = ScalingFit {
            n: 64,
            threshold: 0.9,
            critical: vec![(1, 4), (2, 9), (3, 13)],
            excluded: vec![6],
            isotonic_applied: true,
            alpha: 1.234_567_890_123_456_7,
            a: 0.1,
            residual: 1e-3,
        };
        assert_eq!(parse_scaling_fit(&fit.to_text()).unwrap(), fit);
    }

    #[test]
    fn concentration_round_trip() {
        let report = ConcentrationReport {
            m: 8,
            n: 16,
            samples: 2,
            seed: 9,
            mu_values: vec![0.5, 0.75],
            quantiles: vec![(0.05, 0.5125), (0.95, 0.7375)],
            implied_c_mu: std::f64::consts::PI,
        };
        assert_eq!(parse_concentration(&report.to_text()).unwrap(), report);
    }

    #[test]
    fn export_reports_path_on_failure() {
        let path = Path::new("/nonexistent-dir/out.csv");
        let cells: Vec<GridCell> = Vec::new();
        match export_results(&cells[..], path) {
            Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected an I/O error, got {other:?}"),
        }
    }
}
