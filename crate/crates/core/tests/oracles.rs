//! Cross-checks against independent reference computations written here
//! from first principles (normal equations, closed-form eigenvalues).

use omplab::linalg::Vector;
use omplab::omp::{omp_solve_default, SparseVector};
use omplab::oracles::best_l_term_error;
use omplab::sensing::{coherence, gen_bernoulli, gen_gaussian_normalized, rip_delta_exhaustive, SensingMatrix, DEFAULT_CAP};

fn col(phi: &SensingMatrix, i: usize) -> Vec<f64> {
    phi.col(i).to_vec()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Residual norm of projecting `y` onto the given columns via the normal
/// equations and Gaussian elimination with partial pivoting.
fn reference_projection_residual(phi: &SensingMatrix, y: &[f64], cols: &[usize]) -> f64 {
    let k = cols.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &i) in cols.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            a[r][c] = dot(&col(phi, i), &col(phi, j));
        }
        a[r][k] = dot(&col(phi, i), y);
    }
    for p in 0..k {
        let pivot = (p..k).max_by(|&u, &v| a[u][p].abs().total_cmp(&a[v][p].abs())).unwrap();
        a.swap(p, pivot);
        for r in p + 1..k {
            let f = a[r][p] / a[p][p];
            let (top, bottom) = a.split_at_mut(r);
            for (dst, src) in bottom[0][p..].iter_mut().zip(&top[p][p..]) {
                *dst -= f * src;
            }
        }
    }
    let mut coef = vec![0.0; k];
    for p in (0..k).rev() {
        let s: f64 = (p + 1..k).map(|c| a[p][c] * coef[c]).sum();
        coef[p] = (a[p][k] - s) / a[p][p];
    }
    let mut r = y.to_vec();
    for (c, &i) in cols.iter().enumerate() {
        for (rv, pv) in r.iter_mut().zip(phi.col(i)) {
            *rv -= coef[c] * pv;
        }
    }
    dot(&r, &r).sqrt()
}

fn reference_sigma(phi: &SensingMatrix, y: &[f64], l: usize) -> f64 {
    let n = phi.n();
    let mut best = dot(y, y).sqrt();
    let mut idx: Vec<usize> = (0..l).collect();
    loop {
        best = best.min(reference_projection_residual(phi, y, &idx));
        let mut i = l;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < n - l + i {
                idx[i] += 1;
                for j in i + 1..l {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn sigma_matches_normal_equation_reference() {
    for seed in 0..6 {
        let phi = gen_gaussian_normalized(6, 10, seed).unwrap();
        let y: Vec<f64> = (0..6).map(|i| ((i as f64) * 1.7 + seed as f64).sin()).collect();
        let yv = Vector::new(y.clone()).unwrap();
        for l in 0..=3 {
            let got = best_l_term_error(&phi, &yv, l, DEFAULT_CAP).unwrap().sigma;
            let want = reference_sigma(&phi, &y, l);
            assert!((got - want).abs() < 1e-10, "seed {seed} l {l}: {got} vs {want}");
        }
    }
}

/// Eigenvalues of a symmetric 3×3 matrix by the trigonometric formula.
fn eig3(a: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q, q, q];
    }
    let mut b = a;
    for (i, row) in b.iter_mut().enumerate() {
        row[i] -= q;
        for v in row.iter_mut() {
            *v /= p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e3, 3.0 * q - e1 - e3, e1]
}

#[test]
fn order_three_delta_matches_closed_form() {
    for seed in 0..5 {
        let phi = if seed % 2 == 0 {
            gen_bernoulli(6, 9, seed).unwrap()
        } else {
            gen_gaussian_normalized(6, 9, seed).unwrap()
        };
        let mut want = 0.0f64;
        for i in 0..9 {
            for j in i + 1..9 {
                for k in j + 1..9 {
                    let s = [i, j, k];
                    let mut g = [[0.0; 3]; 3];
                    for a in 0..3 {
                        for b in 0..3 {
                            g[a][b] = dot(phi.col(s[a]), phi.col(s[b]));
                        }
                    }
                    let e = eig3(g);
                    want = want.max((e[2] - 1.0).max(1.0 - e[0]));
                }
            }
        }
        let got = rip_delta_exhaustive(&phi, 3, DEFAULT_CAP).unwrap().delta;
        assert!((got - want).abs() < 1e-10, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn coherence_matches_pairwise_scan() {
    for seed in 0..5 {
        let phi = gen_gaussian_normalized(7, 15, seed).unwrap();
        let mut want = (0.0f64, (0, 0));
        for i in 0..15 {
            for j in i + 1..15 {
                let v = dot(phi.col(i), phi.col(j)).abs();
                if v > want.0 {
                    want = (v, (i, j));
                }
            }
        }
        let got = coherence(&phi).unwrap();
        assert!((got.mu - want.0).abs() < 1e-14);
        assert_eq!(got.pair, want.1);
    }
}

/// OMP's residual at every step equals the reference projection residual
/// of `y` onto the columns it has selected.
#[test]
fn omp_residuals_match_reference_projection() {
    for seed in 0..5 {
        let phi = gen_gaussian_normalized(12, 24, seed).unwrap();
        let x = SparseVector::new(24, [(1, 1.0), (9, -0.6), (17, 0.3), (20, 2.0)]).unwrap();
        let y = phi.mul_vec(&x.to_dense()).unwrap();
        let trace = omp_solve_default(&phi, &y).unwrap();
        for step in trace.steps() {
            let want = reference_projection_residual(&phi, y.as_slice(), &step.support);
            assert!((step.residual_norm - want).abs() < 1e-9 * (1.0 + want));
        }
    }
}
