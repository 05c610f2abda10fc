//! Brute-force ground truth: best `l`-term approximation error and
//! exhaustive ℓ0 decoding. Subsets are enumerated lexicographically and the
//! first subset attaining an optimum wins.

use rayon::prelude::*;

use crate::combinatorics::{binomial, for_each_in_range, rank_ranges};
use crate::error::{Error, Result};
use crate::linalg::{least_squares_on_support, projection_residual, Vector};
use crate::omp::SparseVector;
use crate::sensing::SensingMatrix;

const CHUNKS_PER_THREAD: usize = 4;

/// `σ_l(y, Φ) = min_{|S| ≤ l} ‖y − P_S y‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct BestTermApproximation {
    pub l: usize,
    pub sigma: f64,
    pub best_support: Vec<usize>,
    pub supports_examined: u128,
}

fn check_inputs(phi: &SensingMatrix, y: &Vector, size: usize, cap: u64) -> Result<u128> {
    if y.len() != phi.m() {
        return Err(Error::DimensionMismatch {
            context: "measurement vector",
            expected: phi.m(),
            found: y.len(),
        });
    }
    if size > phi.n() {
        return Err(Error::InvalidConfig(format!(
            "subset size {size} exceeds N = {}",
            phi.n()
        )));
    }
    let count = binomial(phi.n(), size);
    if count > cap as u128 {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok(count)
}

/// Exhaustive best `l`-term approximation error of `y` over the columns of
/// `Φ`. Only supports of size exactly `l` (plus the empty one) are visited:
/// adding columns never increases a projection residual. Rank-deficient
/// subsets are projected onto their column span.
pub fn best_l_term_error(
    phi: &SensingMatrix,
    y: &Vector,
    l: usize,
    cap: u64,
) -> Result<BestTermApproximation> {
    if l > phi.m().min(phi.n()) {
        return Err(Error::InvalidConfig(format!(
            "l must lie in 0..={}, got {l}",
            phi.m().min(phi.n())
        )));
    }
    let count = check_inputs(phi, y, l, cap)?;
    let empty = BestTermApproximation {
        l,
        sigma: y.norm(),
        best_support: Vec::new(),
        supports_examined: 1,
    };
    if l == 0 {
        return Ok(empty);
    }

    let n = phi.n();
    let chunks = rayon::current_num_threads() * CHUNKS_PER_THREAD;
    let best = rank_ranges(count, chunks)
        .into_par_iter()
        .map(|(start, end)| -> Result<Option<(f64, Vec<usize>)>> {
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut failure = None;
            for_each_in_range(n, l, start, end, |s| {
                if failure.is_some() {
                    return;
                }
                match projection_residual(phi.dense(), y, s) {
                    Ok(r) => {
                        let sigma = r.norm();
                        if best.as_ref().is_none_or(|(b, _)| sigma < *b) {
                            best = Some((sigma, s.to_vec()));
                        }
                    }
                    Err(e) => failure = Some(e),
                }
            });
            match failure {
                Some(e) => Err(e),
                None => Ok(best),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    // Chunks are in rank order, so a strict comparison keeps the
    // lexicographically first minimizer.
    let mut result = empty;
    result.supports_examined = count + 1;
    for (sigma, support) in best.into_iter().flatten() {
        if sigma < result.sigma {
            result.sigma = sigma;
            result.best_support = support;
        }
    }
    Ok(result)
}

/// Coefficients below this relative magnitude are dropped before
/// de-duplicating ℓ0 solutions by support.
const ZERO_COEFFICIENT: f64 = 1e-12;

/// Every `K`-sparse `z` (one per support) with `‖y − Φz‖ ≤ tol`.
///
/// A fitting support that carries a (numerically) zero coefficient really
/// represents a sparser solution; such entries are pruned and duplicates
/// merged, keeping the lexicographically first representative.
pub fn l0_decode_exhaustive(
    phi: &SensingMatrix,
    y: &Vector,
    k: usize,
    tol: f64,
    cap: u64,
) -> Result<Vec<SparseVector>> {
    let count = check_inputs(phi, y, k, cap)?;
    if k == 0 {
        return Ok(if y.norm() <= tol {
            vec![SparseVector::zero(phi.n())]
        } else {
            Vec::new()
        });
    }
    if k > phi.m() {
        return Err(Error::InvalidConfig(format!(
            "K = {k} exceeds M = {}; every support is rank deficient",
            phi.m()
        )));
    }
    let n = phi.n();
    let chunks = rayon::current_num_threads() * CHUNKS_PER_THREAD;
    let found = rank_ranges(count, chunks)
        .into_par_iter()
        .map(|(start, end)| -> Result<Vec<SparseVector>> {
            let mut out = Vec::new();
            let mut failure = None;
            for_each_in_range(n, k, start, end, |s| {
                if failure.is_some() {
                    return;
                }
                let fit = match least_squares_on_support(phi.dense(), y, s) {
                    Ok(fit) => fit,
                    Err(Error::IllConditioned { .. }) => return,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                };
                if fit.residual.norm() > tol {
                    return;
                }
                let scale = fit.coefficients.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                let entries = fit
                    .support
                    .iter()
                    .copied()
                    .zip(fit.coefficients.iter().copied())
                    .filter(|&(_, c)| c.abs() > ZERO_COEFFICIENT * scale.max(1.0));
                match SparseVector::new(n, entries) {
                    Ok(z) => out.push(z),
                    Err(e) => failure = Some(e),
                }
            });
            match failure {
                Some(e) => Err(e),
                None => Ok(out),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut solutions: Vec<SparseVector> = Vec::new();
    for z in found.into_iter().flatten() {
        if !solutions.iter().any(|s| s.support() == z.support()) {
            solutions.push(z);
        }
    }
    Ok(solutions)
}
