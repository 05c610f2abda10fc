//! Seeded Monte Carlo experiments: recovery grids over `(M, K)`, fits of the
//! critical measurement count against `K`, coherence concentration, and the
//! check suites behind the `check` command.
//!
//! Every trial draws its matrix and signal from streams keyed by
//! `trial_seed(master, M, K, t)`, so results do not depend on how trials
//! are scheduled across threads.

mod concentration;
mod export;
pub mod suites;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{relative_error, verify_recovery};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::omp::{omp_solve_default, OmpTrace, SparseVector};
use crate::rng::{self, Purpose};
use crate::sensing::{self, Ensemble, SensingMatrix};

pub use concentration::{coherence_concentration_study, quantile, ConcentrationReport, QUANTILE_LEVELS};
pub use export::{export_results, parse_concentration, parse_grid_csv, parse_scaling_fit, Export, GRID_HEADER};

/// Default success rate defining the critical measurement count.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalModel {
    /// ±1 with fair signs.
    UnitValues,
    /// I.i.d. standard normal, redrawn on an exact zero.
    GaussianValues,
    /// Magnitude `2^{-j}` on the `j`-th drawn support element, fair signs.
    DecayingValues,
}

impl SignalModel {
    pub const ALL: [SignalModel; 3] = [
        SignalModel::UnitValues,
        SignalModel::GaussianValues,
        SignalModel::DecayingValues,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalModel::UnitValues => "unit-values",
            SignalModel::GaussianValues => "gaussian-values",
            SignalModel::DecayingValues => "decaying-values",
        }
    }
}

impl fmt::Display for SignalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-values" | "unit" => Ok(SignalModel::UnitValues),
            "gaussian-values" | "gaussian" => Ok(SignalModel::GaussianValues),
            "decaying-values" | "decaying" => Ok(SignalModel::DecayingValues),
            other => Err(Error::InvalidConfig(format!("unknown signal model {other:?}"))),
        }
    }
}

/// Draws a `k`-sparse signal in dimension `n`: support uniform among
/// `k`-subsets, values per `model`.
pub fn plant_signal(n: usize, k: usize, model: SignalModel, seed: u64) -> Result<SparseVector> {
    if k > n {
        return Err(Error::InvalidConfig(format!("K = {k} exceeds N = {n}")));
    }
    let mut support_rng = rng::stream(seed, Purpose::Support, 0);
    let mut value_rng = rng::stream(seed, Purpose::Signal, 0);
    let support = sample(&mut support_rng, n, k).into_vec();
    let entries = support.into_iter().enumerate().map(|(j, i)| {
        let v = match model {
            SignalModel::UnitValues => {
                if value_rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SignalModel::GaussianValues => loop {
                let v: f64 = value_rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            },
            SignalModel::DecayingValues => {
                let sign = if value_rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * 0.5f64.powi(j as i32)
            }
        };
        (i, v)
    });
    SparseVector::new(n, entries)
}

/// Seed of cell `(m, k)`.
pub fn cell_seed(master: u64, m: usize, k: usize) -> u64 {
    rng::mix(rng::mix(master, m as u64), k as u64)
}

/// Seed of trial `t` in cell `(m, k)`; matrix and signal streams derive
/// from it with distinct purpose tags.
pub fn trial_seed(master: u64, m: usize, k: usize, t: usize) -> u64 {
    rng::derive(cell_seed(master, m, k), Purpose::Trial, t as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub m_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub trials_per_cell: usize,
    pub ensemble: Ensemble,
    pub master_seed: u64,
    pub signal_model: SignalModel,
    pub success_tol: f64,
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m_values.is_empty() || self.k_values.is_empty() {
            return bad("M and K value lists must be non-empty".into());
        }
        if self.trials_per_cell == 0 {
            return bad("trials per cell must be at least 1".into());
        }
        if let Some(m) = self.m_values.iter().find(|&&m| m == 0 || m > self.n) {
            return bad(format!("M = {m} must lie in 1..={}", self.n));
        }
        let min_m = *self.m_values.iter().min().unwrap();
        if let Some(k) = self.k_values.iter().find(|&&k| k > min_m) {
            return bad(format!("K = {k} exceeds the smallest M = {min_m}"));
        }
        if self.ensemble == Ensemble::Explicit {
            return bad("grid trials need a generated ensemble".into());
        }
        if self.success_tol.is_nan() || self.success_tol < 0.0 {
            return bad(format!("success tolerance {} must be non-negative", self.success_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub m: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub iterations: usize,
    pub iterations_to_recovery: Option<usize>,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    /// Mean iterations-to-recovery over successful trials; NaN if none.
    pub mean_iters: f64,
    pub mean_rel_err: f64,
    /// Cell seed; trial seeds derive from it.
    pub seed: u64,
}

impl GridCell {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub config: GridConfig,
    pub cells: Vec<GridCell>,
    pub trials: Vec<TrialOutcome>,
}

impl GridResult {
    pub fn cell(&self, m: usize, k: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.m == m && c.k == k)
    }
}

/// Smallest `l` with `supp x ⊆ Λ^l` and the relative error of `x^l` at most
/// `tol`.
pub fn iterations_to_recovery(trace: &OmpTrace<'_>, x: &SparseVector, tol: f64) -> Option<usize> {
    (0..=trace.len()).find(|&l| {
        let support = trace.support_at(l).expect("l is within the trace");
        x.support().iter().all(|i| support.contains(i))
            && relative_error(trace.reconstruct(l).expect("l is within the trace").as_slice(), x) <= tol
    })
}

fn run_trial(config: &GridConfig, m: usize, k: usize, t: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(config.master_seed, m, k, t);
    let phi = sensing::generate(config.ensemble, m, config.n, rng::derive(seed, Purpose::Matrix, 0))?;
    let x = plant_signal(config.n, k, config.signal_model, rng::derive(seed, Purpose::Signal, 0))?;
    let y = phi.mul_vec(&x.to_dense())?;
    let trace = omp_solve_default(&phi, &y)?;
    let verdict = verify_recovery(&trace, &x, config.success_tol)?;
    Ok(TrialOutcome {
        m,
        k,
        trial: t,
        seed,
        success: verdict.success,
        iterations: verdict.iterations_used,
        iterations_to_recovery: iterations_to_recovery(&trace, &x, config.success_tol),
        relative_error: verdict.relative_error,
    })
}

fn summarize(m: usize, k: usize, seed: u64, outcomes: &[TrialOutcome]) -> GridCell {
    let successes = outcomes.iter().filter(|o| o.success).count();
    let recovered: Vec<usize> = outcomes
        .iter()
        .filter(|o| o.success)
        .filter_map(|o| o.iterations_to_recovery)
        .collect();
    let mean_iters = if recovered.is_empty() {
        f64::NAN
    } else {
        recovered.iter().sum::<usize>() as f64 / recovered.len() as f64
    };
    let mean_rel_err = outcomes.iter().map(|o| o.relative_error).sum::<f64>() / outcomes.len() as f64;
    GridCell {
        m,
        k,
        trials: outcomes.len(),
        successes,
        mean_iters,
        mean_rel_err,
        seed,
    }
}

/// Runs every trial of every `(M, K)` cell on the current rayon pool.
pub fn run_recovery_grid(config: &GridConfig) -> Result<GridResult> {
    config.validate()?;
    let tasks: Vec<(usize, usize, usize)> = config
        .m_values
        .iter()
        .flat_map(|&m| {
            config
                .k_values
                .iter()
                .flat_map(move |&k| (0..config.trials_per_cell).map(move |t| (m, k, t)))
        })
        .collect();
    let trials: Vec<TrialOutcome> = tasks
        .par_iter()
        .map(|&(m, k, t)| run_trial(config, m, k, t))
        .collect::<Result<_>>()?;
    let cells = trials
        .chunks(config.trials_per_cell)
        .map(|chunk| {
            let (m, k) = (chunk[0].m, chunk[0].k);
            summarize(m, k, cell_seed(config.master_seed, m, k), chunk)
        })
        .collect();
    Ok(GridResult {
        config: config.clone(),
        cells,
        trials,
    })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// A pair of cells at one `M` where the larger `K` recovers more often and
/// the two confidence intervals do not overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub m: usize,
    pub k_low: usize,
    pub k_high: usize,
    pub rate_low: f64,
    pub rate_high: f64,
}

/// Checks that success rate is non-increasing in `K` at every fixed `M`,
/// tolerating increases whose two-sided intervals (normal quantile `z`)
/// overlap.
pub fn monotonicity_violations(cells: &[GridCell], z: f64) -> Vec<MonotonicityViolation> {
    let mut out = Vec::new();
    for a in cells {
        for b in cells.iter().filter(|b| b.m == a.m && b.k > a.k) {
            if b.success_rate() <= a.success_rate() {
                continue;
            }
            let (_, a_hi) = wilson_interval(a.successes, a.trials, z);
            let (b_lo, _) = wilson_interval(b.successes, b.trials, z);
            if b_lo > a_hi {
                out.push(MonotonicityViolation {
                    m: a.m,
                    k_low: a.k,
                    k_high: b.k,
                    rate_low: a.success_rate(),
                    rate_high: b.success_rate(),
                });
            }
        }
    }
    out
}

/// Fit of `M* ≈ a · K^α · log N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub n: usize,
    pub threshold: f64,
    /// `(K, M*)` pairs entering the fit, after isotonic correction.
    pub critical: Vec<(usize, usize)>,
    /// K values whose `M*` was not bracketed by the grid.
    pub excluded: Vec<usize>,
    pub isotonic_applied: bool,
    pub alpha: f64,
    pub a: f64,
    /// Root-mean-square residual of the log-space fit.
    pub residual: f64,
}

/// Critical measurement count per `K`, fitted in log space. A `K` is usable
/// when some `M` reaches `threshold` and a smaller grid `M` does not.
pub fn fit_measurement_scaling(result: &GridResult, threshold: f64) -> Result<ScalingFit> {
    fit_cells(&result.cells, result.config.n, threshold)
}

pub fn fit_cells(cells: &[GridCell], n: usize, threshold: f64) -> Result<ScalingFit> {
    if n < 3 {
        return Err(Error::InvalidConfig("log log N needs N >= 3".into()));
    }
    let mut ks: Vec<usize> = cells.iter().map(|c| c.k).filter(|&k| k > 0).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut critical = Vec::new();
    let mut excluded = Vec::new();
    for &k in &ks {
        let mut row: Vec<&GridCell> = cells.iter().filter(|c| c.k == k).collect();
        row.sort_by_key(|c| c.m);
        match row.iter().position(|c| c.success_rate() >= threshold) {
            Some(pos) if pos > 0 => critical.push((k, row[pos].m)),
            _ => excluded.push(k),
        }
    }
    if critical.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "scaling fit needs at least 3 bracketed K values, found {}",
            critical.len()
        )));
    }
    let mut isotonic_applied = false;
    for i in 1..critical.len() {
        if critical[i].1 < critical[i - 1].1 {
            critical[i].1 = critical[i - 1].1;
            isotonic_applied = true;
        }
    }
    let loglog_n = (n as f64).ln().ln();
    let xs: Vec<f64> = critical.iter().map(|&(k, _)| (k as f64).ln()).collect();
    let ys: Vec<f64> = critical.iter().map(|&(_, m)| (m as f64).ln() - loglog_n).collect();
    let len = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / len;
    let y_mean = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let alpha = sxy / sxx;
    let log_a = y_mean - alpha * x_mean;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_a - alpha * x).powi(2))
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(ScalingFit {
        n,
        threshold,
        critical,
        excluded,
        isotonic_applied,
        alpha,
        a: log_a.exp(),
        residual,
    })
}

/// A planted instance: matrix, signal and measurements.
#[derive(Debug, Clone)]
pub struct Instance {
    pub phi: SensingMatrix,
    pub x: SparseVector,
    pub y: Vector,
}

/// Matrix generator keyed by a per-instance seed.
pub type MatrixSource<'a> = dyn Fn(u64) -> Result<SensingMatrix> + Sync + 'a;

pub fn ensemble_source(ensemble: Ensemble, m: usize, n: usize) -> impl Fn(u64) -> Result<SensingMatrix> + Sync {
    move |seed| sensing::generate(ensemble, m, n, seed)
}

/// Instance `index` of a seeded family.
pub fn planted_instance(
    source: &MatrixSource<'_>,
    master: u64,
    index: usize,
    k: usize,
    model: SignalModel,
) -> Result<Instance> {
    let seed = rng::derive(master, Purpose::Trial, index as u64);
    let phi = source(rng::derive(seed, Purpose::Matrix, 0))?;
    let x = plant_signal(phi.n(), k, model, rng::derive(seed, Purpose::Signal, 0))?;
    let y = phi.mul_vec(&x.to_dense())?;
    Ok(Instance { phi, x, y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::omp::omp_solve;
    use crate::omp::StopRule;

    fn config(n: usize, m_values: Vec<usize>, k_values: Vec<usize>, trials: usize) -> GridConfig {
        GridConfig {
            n,
            m_values,
            k_values,
            trials_per_cell: trials,
            ensemble: Ensemble::Bernoulli,
            master_seed: 5,
            signal_model: SignalModel::GaussianValues,
            success_tol: 1e-8,
        }
    }

    #[test]
    fn signal_models() {
        let x = plant_signal(20, 4, SignalModel::UnitValues, 1).unwrap();
        assert_eq!(x.sparsity(), 4);
        assert!(x.values().iter().all(|v| v.abs() == 1.0));
        let x = plant_signal(20, 4, SignalModel::DecayingValues, 1).unwrap();
        let mut mags: Vec<f64> = x.values().iter().map(|v| v.abs()).collect();
        mags.sort_by(f64::total_cmp);
        assert_eq!(mags, vec![0.125, 0.25, 0.5, 1.0]);
        assert_eq!(
            plant_signal(20, 4, SignalModel::GaussianValues, 9).unwrap(),
            plant_signal(20, 4, SignalModel::GaussianValues, 9).unwrap()
        );
        assert!(plant_signal(3, 4, SignalModel::UnitValues, 1).is_err());
    }

    #[test]
    fn zero_sparsity_grid() {
        let res = run_recovery_grid(&config(16, vec![4, 8], vec![0], 5)).unwrap();
        for c in &res.cells {
            assert_eq!(c.success_rate(), 1.0);
            assert_eq!(c.mean_iters, 0.0);
        }
        assert!(res.trials.iter().all(|t| t.iterations == 0));
    }

    #[test]
    fn square_grid_single_sparse() {
        let res = run_recovery_grid(&config(16, vec![16], vec![1], 20)).unwrap();
        let c = res.cell(16, 1).unwrap();
        assert_eq!(c.success_rate(), 1.0);
        assert_eq!(c.mean_iters, 1.0);
    }

    #[test]
    fn grid_counts_follow_trials() {
        let res = run_recovery_grid(&config(32, vec![8, 16], vec![1, 2, 3], 15)).unwrap();
        assert_eq!(res.trials.len(), 2 * 3 * 15);
        for c in &res.cells {
            let recount = res
                .trials
                .iter()
                .filter(|t| t.m == c.m && t.k == c.k && t.success)
                .count();
            assert_eq!(recount, c.successes);
            assert!(c.successes <= c.trials);
        }
        for t in res.trials.iter().filter(|t| t.success) {
            assert!(t.iterations_to_recovery.unwrap() <= t.m);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(run_recovery_grid(&config(16, vec![], vec![1], 1)).is_err());
        assert!(run_recovery_grid(&config(16, vec![20], vec![1], 1)).is_err());
        assert!(run_recovery_grid(&config(16, vec![4], vec![5], 1)).is_err());
        assert!(run_recovery_grid(&config(16, vec![4], vec![1], 0)).is_err());
    }

    #[test]
    fn iterations_to_recovery_on_identity() {
        let id = SensingMatrix::from_dense(DenseMatrix::identity(4)).unwrap();
        let x = SparseVector::new(4, [(2, 2.0)]).unwrap();
        let y = id.mul_vec(&x.to_dense()).unwrap();
        let trace = omp_solve_default(&id, &y).unwrap();
        assert_eq!(iterations_to_recovery(&trace, &x, 1e-8), Some(1));
        let partial = omp_solve(&id, &Vector::new(vec![1.0, 0.0, 2.0, 0.0]).unwrap(), StopRule::new(0.0, 1, 4).unwrap()).unwrap();
        let x2 = SparseVector::new(4, [(0, 1.0), (2, 2.0)]).unwrap();
        assert_eq!(iterations_to_recovery(&partial, &x2, 1e-8), None);
    }

    fn synthetic(n: usize, mstar: impl Fn(usize) -> usize) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for k in 1..=5 {
            for m in 1..=60 {
                let ok = m >= mstar(k);
                cells.push(GridCell {
                    m,
                    k,
                    trials: 10,
                    successes: if ok { 10 } else { 0 },
                    mean_iters: 0.0,
                    mean_rel_err: 0.0,
                    seed: 0,
                });
            }
        }
        let _ = n;
        cells
    }

    #[test]
    fn scaling_fit_linear_and_quadratic() {
        let fit = fit_cells(&synthetic(64, |k| 4 * k), 64, 0.9).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-6);
        assert!((fit.a - 4.0 / 64f64.ln()).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
        let fit = fit_cells(&synthetic(64, |k| 2 * k * k), 64, 0.9).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-6);
        assert!(!fit.isotonic_applied);
    }

    #[test]
    fn scaling_fit_excludes_unbracketed() {
        // K = 1 succeeds already at the smallest M; K = 5 never reaches 0.9.
        let cells = synthetic(64, |k| if k == 1 { 1 } else if k == 5 { 1000 } else { 4 * k });
        let fit = fit_cells(&cells, 64, 0.9).unwrap();
        assert_eq!(fit.excluded, vec![1, 5]);
        assert_eq!(fit.critical.len(), 3);
        let too_few = synthetic(64, |k| if k <= 3 { 1 } else { 4 * k });
        assert!(fit_cells(&too_few, 64, 0.9).is_err());
    }

    #[test]
    fn scaling_fit_isotonic_correction() {
        let cells = synthetic(64, |k| match k {
            1 => 4,
            2 => 10,
            3 => 8,
            k => 6 * k,
        });
        let fit = fit_cells(&cells, 64, 0.9).unwrap();
        assert!(fit.isotonic_applied);
        assert_eq!(fit.critical[2], (3, 10));
    }

    #[test]
    fn wilson_interval_bounds() {
        let (lo, hi) = wilson_interval(200, 200, Z_99);
        assert!(hi > 0.9999 && lo > 0.96);
        let (lo, hi) = wilson_interval(100, 200, Z_99);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_detects_clear_increase() {
        let mk = |k, s| GridCell { m: 8, k, trials: 200, successes: s, mean_iters: 0.0, mean_rel_err: 0.0, seed: 0 };
        assert!(monotonicity_violations(&[mk(1, 100), mk(2, 105)], Z_99).is_empty());
        assert_eq!(monotonicity_violations(&[mk(1, 50), mk(2, 150)], Z_99).len(), 1);
    }
}
