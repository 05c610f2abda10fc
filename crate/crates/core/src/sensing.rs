//! Sensing-matrix ensembles and the two matrix properties the recovery
//! bounds are stated in: mutual coherence and restricted isometry constants.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::combinatorics::{binomial, for_each_in_range, rank_ranges};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, symmetric_eigenvalues, DenseMatrix, Vector};
use crate::rng::{self, Purpose};

/// Column norms must be within this distance of 1.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Default bound on the number of subsets an exhaustive search may visit.
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Monte-carlo trials used when an exhaustive RIP search is refused.
const HYPOTHESIS_MC_TRIALS: u64 = 10_000;

const CHUNKS_PER_THREAD: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ensemble {
    Bernoulli,
    GaussianNormalized,
    Explicit,
}

impl Ensemble {
    pub fn as_str(self) -> &'static str {
        match self {
            Ensemble::Bernoulli => "bernoulli",
            Ensemble::GaussianNormalized => "gaussian-normalized",
            Ensemble::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Ensemble::Bernoulli),
            "gaussian-normalized" | "gaussian" => Ok(Ensemble::GaussianNormalized),
            "explicit" => Ok(Ensemble::Explicit),
            other => Err(Error::InvalidConfig(format!("unknown ensemble {other:?}"))),
        }
    }
}

/// An `M × N` measurement operator with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    data: DenseMatrix,
    ensemble: Ensemble,
    seed: Option<u64>,
}

impl SensingMatrix {
    /// Wraps an explicit matrix, checking that every column has unit norm.
    pub fn from_dense(data: DenseMatrix) -> Result<Self> {
        Self::tagged(data, Ensemble::Explicit, None)
    }

    /// Rescales every column of `data` to unit norm.
    pub fn normalized(data: DenseMatrix) -> Result<Self> {
        let (m, n) = (data.rows(), data.cols());
        let mut entries = data.entries().to_vec();
        for c in 0..n {
            let nrm = norm(data.col(c));
            if nrm == 0.0 {
                return Err(Error::NotUnitNorm { column: c, norm: 0.0 });
            }
            for r in 0..m {
                entries[r * n + c] /= nrm;
            }
        }
        Self::from_dense(DenseMatrix::new(m, n, entries)?)
    }

    pub(crate) fn tagged(data: DenseMatrix, ensemble: Ensemble, seed: Option<u64>) -> Result<Self> {
        for c in 0..data.cols() {
            let nrm = norm(data.col(c));
            if (nrm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NotUnitNorm { column: c, norm: nrm });
            }
        }
        Ok(SensingMatrix { data, ensemble, seed })
    }

    pub fn m(&self) -> usize {
        self.data.rows()
    }

    pub fn n(&self) -> usize {
        self.data.cols()
    }

    pub fn dense(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// True when `M > N`; generated ensembles never are.
    pub fn is_tall(&self) -> bool {
        self.m() > self.n()
    }

    pub fn col(&self, i: usize) -> &[f64] {
        self.data.col(i)
    }

    pub fn column(&self, i: usize) -> Result<Vector> {
        self.data.column(i)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vector> {
        self.data.mul_vec(x)
    }

    /// Full `N × N` Gram matrix, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = dot(self.col(i), self.col(i));
            for j in i + 1..n {
                let v = dot(self.col(i), self.col(j));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }
}

fn check_generated_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidDimensions(format!(
            "generated ensembles need 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    Ok(())
}

/// Entries `±M^{-1/2}` with independent fair signs.
pub fn gen_bernoulli(m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    check_generated_dims(m, n)?;
    let scale = 1.0 / (m as f64).sqrt();
    let mut rng = rng::stream(seed, Purpose::Bernoulli, 0);
    let data = (0..m * n)
        .map(|_| if rng.random::<bool>() { scale } else { -scale })
        .collect();
    SensingMatrix::tagged(DenseMatrix::new(m, n, data)?, Ensemble::Bernoulli, Some(seed))
}

/// I.i.d. standard normal entries, each column then rescaled to unit norm.
pub fn gen_gaussian_normalized(m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    check_generated_dims(m, n)?;
    let mut rng = rng::stream(seed, Purpose::Gaussian, 0);
    let mut columns = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let col: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let nrm = norm(&col);
            if nrm > 0.0 {
                columns.push(col.into_iter().map(|v| v / nrm).collect());
                break;
            }
        }
    }
    SensingMatrix::tagged(
        DenseMatrix::from_columns(&columns)?,
        Ensemble::GaussianNormalized,
        Some(seed),
    )
}

pub fn generate(ensemble: Ensemble, m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    match ensemble {
        Ensemble::Bernoulli => gen_bernoulli(m, n, seed),
        Ensemble::GaussianNormalized => gen_gaussian_normalized(m, n, seed),
        Ensemble::Explicit => Err(Error::InvalidConfig(
            "explicit matrices cannot be generated".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    pub mu: f64,
    /// First pair `(i, j)`, `i < j`, in lexicographic order attaining `mu`.
    pub pair: (usize, usize),
}

/// `max_{i≠j} |⟨φ_i, φ_j⟩|` over all pairs.
pub fn coherence(phi: &SensingMatrix) -> Result<CoherenceReport> {
    let n = phi.n();
    if n < 2 {
        return Err(Error::InvalidDimensions(
            "coherence needs at least two columns".into(),
        ));
    }
    let mut best = CoherenceReport { mu: -1.0, pair: (0, 1) };
    for i in 0..n {
        for j in i + 1..n {
            let g = dot(phi.col(i), phi.col(j)).abs();
            if g > best.mu {
                best = CoherenceReport { mu: g, pair: (i, j) };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipMethod {
    Exhaustive,
    MonteCarlo,
}

impl fmt::Display for RipMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RipMethod::Exhaustive => "exhaustive",
            RipMethod::MonteCarlo => "monte-carlo",
        })
    }
}

/// Restricted isometry constant of a given order. Exhaustive estimates are
/// exact; monte-carlo estimates are lower bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipEstimate {
    pub order: usize,
    pub delta: f64,
    pub method: RipMethod,
    pub subsets_examined: u128,
    pub seed: Option<u64>,
}

impl RipEstimate {
    pub fn is_exact(&self) -> bool {
        self.method == RipMethod::Exhaustive
    }
}

/// `max(λ_max − 1, 1 − λ_min)` of the Gram block selected by `subset`.
fn subset_statistic(gram: &[f64], n: usize, subset: &[usize], scratch: &mut Vec<f64>) -> f64 {
    let k = subset.len();
    scratch.clear();
    for &a in subset {
        for &b in subset {
            scratch.push(gram[a * n + b]);
        }
    }
    let eig = symmetric_eigenvalues(scratch, k);
    (eig[k - 1] - 1.0).max(1.0 - eig[0])
}

fn check_order(phi: &SensingMatrix, order: usize) -> Result<()> {
    let limit = phi.m().min(phi.n());
    if order == 0 || order > limit {
        return Err(Error::InvalidConfig(format!(
            "RIP order must lie in 1..={limit}, got {order}"
        )));
    }
    Ok(())
}

fn exhaustive_delta(phi: &SensingMatrix, order: usize, total: u128) -> f64 {
    let n = phi.n();
    let gram = phi.gram();
    let chunks = rayon::current_num_threads() * CHUNKS_PER_THREAD;
    rank_ranges(total, chunks)
        .into_par_iter()
        .map(|(start, end)| {
            let mut worst = 0.0f64;
            let mut scratch = Vec::with_capacity(order * order);
            for_each_in_range(n, order, start, end, |s| {
                worst = worst.max(subset_statistic(&gram, n, s, &mut scratch));
            });
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Exact δ of `order`: the worst Gram-block eigenvalue deviation over every
/// column subset of that size. Refuses when there are more than `cap`
/// subsets.
pub fn rip_delta_exhaustive(phi: &SensingMatrix, order: usize, cap: u64) -> Result<RipEstimate> {
    check_order(phi, order)?;
    let total = binomial(phi.n(), order);
    if total > cap as u128 {
        return Err(Error::CapExceeded { count: total, cap });
    }
    Ok(RipEstimate {
        order,
        delta: exhaustive_delta(phi, order, total),
        method: RipMethod::Exhaustive,
        subsets_examined: total,
        seed: None,
    })
}

/// Lower bound on δ from `trials` uniformly sampled subsets. When `trials`
/// reaches the number of subsets the search is done exhaustively instead,
/// and the estimate is tagged exact.
pub fn rip_delta_monte_carlo(
    phi: &SensingMatrix,
    order: usize,
    trials: u64,
    seed: u64,
) -> Result<RipEstimate> {
    check_order(phi, order)?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let total = binomial(phi.n(), order);
    if trials as u128 >= total {
        let mut estimate = rip_delta_exhaustive(phi, order, u64::MAX)?;
        estimate.seed = Some(seed);
        return Ok(estimate);
    }
    let n = phi.n();
    let gram = phi.gram();
    let delta = (0..trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(order * order),
            |scratch, t| {
                let mut rng = rng::stream(seed, Purpose::RipSample, t);
                let mut subset = sample(&mut rng, n, order).into_vec();
                subset.sort_unstable();
                subset_statistic(&gram, n, &subset, scratch)
            },
        )
        .reduce(|| 0.0, f64::max);
    Ok(RipEstimate {
        order,
        delta,
        method: RipMethod::MonteCarlo,
        subsets_examined: trials as u128,
        seed: Some(seed),
    })
}

/// Constants of the sufficient recovery condition: RIP of order `⌊C K^1.2⌋`
/// with `δ = c K^{-0.2}`, and coherence at most `1 / (20 K^0.8)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub big_c: f64,
    pub small_c: f64,
}

impl TheoremConstants {
    pub const BIG_C: f64 = 2e5;
    pub const SMALL_C: f64 = 1e-6;

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }

    pub fn delta_of_k(&self, k: usize) -> f64 {
        self.small_c * (k as f64).powf(-0.2)
    }

    pub fn rip_order_of_k(&self, k: usize) -> u64 {
        (self.big_c * (k as f64).powf(1.2)).floor() as u64
    }

    pub fn coherence_bound_of_k(&self, k: usize) -> f64 {
        1.0 / (20.0 * (k as f64).powf(0.8))
    }
}

impl Default for TheoremConstants {
    fn default() -> Self {
        TheoremConstants {
            big_c: Self::BIG_C,
            small_c: Self::SMALL_C,
        }
    }
}

impl fmt::Display for TheoremConstants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C={:e} c={:e}", self.big_c, self.small_c)?;
        if !self.is_default() {
            f.write_str(" (overridden)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    /// Every hypothesis was measured exactly.
    Full,
    /// δ is only a monte-carlo lower bound.
    Partial,
    /// The required RIP order exceeds `min(M, N)`; δ cannot be measured.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub k: usize,
    pub constants: TheoremConstants,
    pub rip_order_required: u64,
    pub delta_required: f64,
    pub delta_measured: Option<RipEstimate>,
    pub mu_required: f64,
    pub mu_measured: f64,
    pub coherence_holds: bool,
    /// `Some(true/false)` when δ settles the RIP hypothesis, `None` otherwise.
    pub rip_holds: Option<bool>,
    pub feasibility: Feasibility,
}

/// Measures both hypotheses of the sufficient recovery condition for
/// sparsity `k`. Infeasibility is reported, never returned as an error.
pub fn theorem1_hypotheses(
    phi: &SensingMatrix,
    k: usize,
    constants: TheoremConstants,
    cap: u64,
) -> Result<Theorem1Report> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let rip_order_required = constants.rip_order_of_k(k);
    let delta_required = constants.delta_of_k(k);
    let mu_required = constants.coherence_bound_of_k(k);
    let mu_measured = if phi.n() >= 2 { coherence(phi)?.mu } else { 0.0 };

    let limit = phi.m().min(phi.n()) as u64;
    let (delta_measured, rip_holds, feasibility) = if rip_order_required == 0
        || rip_order_required > limit
    {
        (None, None, Feasibility::Infeasible)
    } else {
        let order = rip_order_required as usize;
        match rip_delta_exhaustive(phi, order, cap) {
            Ok(est) => (Some(est), Some(est.delta <= delta_required), Feasibility::Full),
            Err(Error::CapExceeded { .. }) => {
                let seed = phi.seed().unwrap_or(0);
                let est = rip_delta_monte_carlo(phi, order, HYPOTHESIS_MC_TRIALS.min(cap), seed)?;
                // A lower bound above the requirement settles it; anything else does not.
                let holds = (est.delta > delta_required).then_some(false);
                (Some(est), holds, Feasibility::Partial)
            }
            Err(e) => return Err(e),
        }
    };
    Ok(Theorem1Report {
        k,
        constants,
        rip_order_required,
        delta_required,
        delta_measured,
        mu_required,
        mu_measured,
        coherence_holds: mu_measured <= mu_required,
        rip_holds,
        feasibility,
    })
}
