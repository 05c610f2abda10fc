use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::sensing::{coherence, gen_bernoulli};

/// Probabilities at which the coherence distribution is summarized.
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub m: usize,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Coherence of each sampled Bernoulli matrix, in sample order.
    pub mu_values: Vec<f64>,
    /// `(level, value)` pairs for [`QUANTILE_LEVELS`].
    pub quantiles: Vec<(f64, f64)>,
    /// `q_0.95 · √M / √(log N)`.
    pub implied_c_mu: f64,
}

impl ConcentrationReport {
    pub fn quantile_at(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|(p, _)| *p == level).map(|&(_, q)| q)
    }
}

/// Linear-interpolation sample quantile (type 7) of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Coherence distribution of `samples` Bernoulli matrices of shape `M×N`.
pub fn coherence_concentration_study(m: usize, n: usize, samples: usize, seed: u64) -> Result<ConcentrationReport> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidConfig("coherence needs N >= 2".into()));
    }
    let mu_values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let phi = gen_bernoulli(m, n, rng::derive(seed, Purpose::Coherence, s as u64))?;
            Ok(coherence(&phi)?.mu)
        })
        .collect::<Result<_>>()?;
    let mut sorted = mu_values.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles: Vec<(f64, f64)> = QUANTILE_LEVELS.iter().map(|&p| (p, quantile(&sorted, p))).collect();
    let q95 = quantile(&sorted, 0.95);
    Ok(ConcentrationReport {
        m,
        n,
        samples,
        seed,
        mu_values,
        quantiles,
        implied_c_mu: q95 * (m as f64).sqrt() / (n as f64).ln().sqrt(),
    })
}
