//! Checkers that evaluate the recovery inequalities on live pursuit traces.
//!
//! Every checker records each inequality instance it evaluates as
//! `(label, lhs, rhs, slack = rhs − lhs)`. An instance is a violation when
//! `lhs > rhs + 1e-9·(1 + |rhs|)`; the slack absorbs rounding only.
//! Instances whose hypotheses do not hold are recorded as skipped, never as
//! violations.
//!
//! Lemma checkers take a [`RipEstimate`]. A monte-carlo δ is only a lower
//! bound on the true constant, so reports built from one are marked
//! advisory instead of passed.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::omp::{energy_outside, OmpTrace, SparseVector};
use crate::oracles::best_l_term_error;
use crate::sensing::{RipEstimate, TheoremConstants};

/// Relative slack granted to every inequality.
pub const CHECK_TOL: f64 = 1e-9;

/// `‖y − Φx‖ ≤ MEASUREMENT_TOL·‖y‖` is required before checking bounds
/// stated for `y = Φx`.
pub const MEASUREMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    TheoremA,
    TheoremB,
    Lemma1a,
    Lemma1b,
    Lemma2,
    Lemma3,
    CoherenceCondition,
}

impl Claim {
    pub fn as_str(self) -> &'static str {
        match self {
            Claim::TheoremA => "theorem-a",
            Claim::TheoremB => "theorem-b",
            Claim::Lemma1a => "lemma-1a",
            Claim::Lemma1b => "lemma-1b",
            Claim::Lemma2 => "lemma-2",
            Claim::Lemma3 => "lemma-3",
            Claim::CoherenceCondition => "coherence-condition",
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Passed,
    Failed,
    /// No violations, but δ was not exact so the hypotheses are unverified.
    Advisory,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Passed => "passed",
            Verdict::Failed => "failed",
            Verdict::Advisory => "advisory",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Instance {
    pub fn is_violation(&self) -> bool {
        self.lhs > self.rhs + CHECK_TOL * (1.0 + self.rhs.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub claim: Claim,
    pub instances: Vec<Instance>,
    pub violations: Vec<Instance>,
    pub skipped: Vec<Skip>,
    /// Set when any contributing δ was a monte-carlo lower bound.
    pub advisory: bool,
    /// Largest observed `lhs / rhs` (Theorem B: `‖r^{2l}‖ / σ_l`), when
    /// tracked.
    pub max_ratio: Option<f64>,
}

impl CheckReport {
    pub fn new(claim: Claim) -> Self {
        CheckReport {
            claim,
            instances: Vec::new(),
            violations: Vec::new(),
            skipped: Vec::new(),
            advisory: false,
            max_ratio: None,
        }
    }

    pub(crate) fn record(&mut self, label: impl Into<String>, lhs: f64, rhs: f64) {
        let inst = Instance {
            label: label.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
        };
        if inst.is_violation() {
            self.violations.push(inst.clone());
        }
        self.instances.push(inst);
    }

    pub(crate) fn skip(&mut self, label: impl Into<String>, reason: impl Into<String>) {
        self.skipped.push(Skip {
            label: label.into(),
            reason: reason.into(),
        });
    }

    pub(crate) fn track_ratio(&mut self, ratio: f64) {
        if ratio.is_finite() {
            self.max_ratio = Some(self.max_ratio.map_or(ratio, |r| r.max(ratio)));
        }
    }

    pub fn instances_checked(&self) -> usize {
        self.instances.len()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn verdict(&self) -> Verdict {
        if !self.passed() {
            Verdict::Failed
        } else if self.advisory {
            Verdict::Advisory
        } else {
            Verdict::Passed
        }
    }

    /// Smallest `rhs − lhs` over all instances.
    pub fn worst_slack(&self) -> Option<f64> {
        self.instances.iter().map(|i| i.slack).reduce(f64::min)
    }

    /// Prefixes every label with `id`, e.g. a seed or instance number.
    pub fn tagged(mut self, id: &str) -> Self {
        for inst in self.instances.iter_mut().chain(self.violations.iter_mut()) {
            inst.label = format!("{id}:{}", inst.label);
        }
        for s in &mut self.skipped {
            s.label = format!("{id}:{}", s.label);
        }
        self
    }

    pub fn merge(&mut self, other: CheckReport) {
        debug_assert_eq!(self.claim, other.claim);
        self.instances.extend(other.instances);
        self.violations.extend(other.violations);
        self.skipped.extend(other.skipped);
        self.advisory |= other.advisory;
        if let Some(r) = other.max_ratio {
            self.track_ratio(r);
        }
    }

    /// Structured text: one `key value` line per field, then one line per
    /// violation. Floats carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let float = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.16e}"));
        writeln!(out, "claim {}", self.claim).unwrap();
        writeln!(out, "verdict {}", self.verdict()).unwrap();
        writeln!(out, "instances {}", self.instances_checked()).unwrap();
        writeln!(out, "violations {}", self.violations.len()).unwrap();
        writeln!(out, "skipped {}", self.skipped.len()).unwrap();
        writeln!(out, "worst-slack {}", float(self.worst_slack())).unwrap();
        writeln!(out, "max-ratio {}", float(self.max_ratio)).unwrap();
        for v in &self.violations {
            writeln!(
                out,
                "violation {} {:.16e} {:.16e} {:.16e}",
                v.label, v.lhs, v.rhs, v.slack
            )
            .unwrap();
        }
        out
    }
}

fn require_measurement(trace: &OmpTrace<'_>, x: &SparseVector) -> Result<()> {
    let phi = trace.matrix();
    if x.dim() != phi.n() {
        return Err(Error::DimensionMismatch {
            context: "signal dimension",
            expected: phi.n(),
            found: x.dim(),
        });
    }
    let y = trace.y();
    let mismatch = y.sub(&phi.mul_vec(&x.to_dense())?)?.norm();
    let bound = MEASUREMENT_TOL * y.norm().max(x.norm());
    if mismatch > bound {
        return Err(Error::Precondition(format!(
            "y is not Φx: ‖y − Φx‖ = {mismatch:e}"
        )));
    }
    Ok(())
}

/// Largest δ for which `(1+δ)/(1−δ) − 1 ≤ 3δ`.
pub const LEMMA1A_MAX_DELTA: f64 = 1.0 / 3.0;
/// Largest δ for which `1/(1−δ) ≤ 1 + 2δ`.
pub const LEMMA1B_MAX_DELTA: f64 = 0.5;
/// Lemma 2 rests on the first inequality of Lemma 1.
pub const LEMMA2_MAX_DELTA: f64 = LEMMA1A_MAX_DELTA;
/// Largest δ for which `9(1+δ)(1+2δ) ≤ 10`.
pub const LEMMA3_MAX_DELTA: f64 = 0.036_165_094_338_050_3;

/// Why δ cannot back an RIP argument needing sparsity `needed` with
/// `δ ≤ max`, if it can't.
fn delta_gate(delta: &RipEstimate, needed: usize, max: f64) -> Option<String> {
    if delta.order < needed {
        Some(format!("δ has order {} < required {needed}", delta.order))
    } else if delta.delta > max {
        Some(format!("δ = {} exceeds {max}", delta.delta))
    } else {
        None
    }
}

/// `‖r^l‖ ≤ |x|₁ l^{-1/2}` for every step of the trace.
pub fn check_theorem_a(trace: &OmpTrace<'_>, x: &SparseVector) -> Result<CheckReport> {
    require_measurement(trace, x)?;
    let mut report = CheckReport::new(Claim::TheoremA);
    let l1 = x.l1_norm();
    for (idx, step) in trace.steps().iter().enumerate() {
        let l = idx + 1;
        report.record(format!("l={l}"), step.residual_norm, l1 / (l as f64).sqrt());
    }
    Ok(report)
}

/// `‖r^{2l}‖ ≤ 3 σ_l(y, Φ)` for `1 ≤ l ≤ min(l_max, ⌊1/(20μ)⌋)`, with `σ_l`
/// from the exhaustive oracle. The largest ratio `‖r^{2l}‖ / σ_l` is kept
/// as data.
pub fn check_theorem_b(trace: &OmpTrace<'_>, mu: f64, l_max: usize, cap: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new(Claim::TheoremB);
    let l_bound = if mu > 0.0 {
        l_max.min((1.0 / (20.0 * mu)).floor() as usize)
    } else {
        l_max
    };
    let phi = trace.matrix();
    for l in 1..=l_bound {
        let lhs = trace.residual_norm_continued(2 * l).map_err(|_| {
            Error::Precondition(format!(
                "trace stopped ({}) after {} steps, before step {}",
                trace.termination(),
                trace.len(),
                2 * l
            ))
        })?;
        let sigma = best_l_term_error(phi, trace.y(), l, cap)
            .map_err(|e| Error::Oracle { l, source: Box::new(e) })?
            .sigma;
        if sigma > 0.0 {
            report.track_ratio(lhs / sigma);
        }
        report.record(format!("l={l}"), lhs, 3.0 * sigma);
    }
    Ok(report)
}

/// Both inequalities of the RIP lemma at step `l`:
/// `Σ_{i∈Λ^l} (z^l_i)² ≤ 3δ R(V_0∖Λ^l)` and `R(V_0∖Λ^l) ≤ (1+2δ)‖r^l‖²`.
/// Each is checked only when δ has order `K + l` and lies in the range
/// where it follows from RIP.
pub fn check_lemma1(
    trace: &OmpTrace<'_>,
    x: &SparseVector,
    delta: &RipEstimate,
    l: usize,
) -> Result<(CheckReport, CheckReport)> {
    require_measurement(trace, x)?;
    let support = trace.support_at(l)?;
    let mut first = CheckReport::new(Claim::Lemma1a);
    let mut second = CheckReport::new(Claim::Lemma1b);
    first.advisory = !delta.is_exact();
    second.advisory = !delta.is_exact();
    let label = format!("l={l}");
    let d = delta.delta;
    let z = trace.error_vector(x, l)?;
    let on_support: f64 = support.iter().map(|&i| z[i] * z[i]).sum();
    let remaining = energy_outside(x, support);
    let r = trace.residual_norm_at(l)?;
    let needed = x.sparsity() + l;
    match delta_gate(delta, needed, LEMMA1A_MAX_DELTA) {
        Some(reason) => first.skip(label.clone(), reason),
        None => first.record(label.clone(), on_support, 3.0 * d * remaining),
    }
    match delta_gate(delta, needed, LEMMA1B_MAX_DELTA) {
        Some(reason) => second.skip(label, reason),
        None => second.record(label, remaining, (1.0 + 2.0 * d) * r * r),
    }
    Ok((first, second))
}

/// `‖r^{l_k+p}‖² ≤ (R_k / p)(6δ C K^{1.2} + 2K)` with `R_k = R(V_0∖Λ^{l_k})`.
pub fn check_lemma2(
    trace: &OmpTrace<'_>,
    x: &SparseVector,
    delta: &RipEstimate,
    constants: TheoremConstants,
    l_k: usize,
    p: usize,
) -> Result<CheckReport> {
    if p == 0 {
        return Err(Error::InvalidConfig("p must be at least 1".into()));
    }
    require_measurement(trace, x)?;
    let support = trace.support_at(l_k)?;
    let r = trace.residual_norm_continued(l_k + p)?;
    let mut report = CheckReport::new(Claim::Lemma2);
    report.advisory = !delta.is_exact();
    let k = x.sparsity();
    let label = format!("lk={l_k},p={p}");
    let budget = constants.big_c * (k as f64).powf(1.2);
    if (l_k + k) as f64 > budget {
        report.skip(label, format!("l_k + K = {} exceeds C K^1.2", l_k + k));
        return Ok(report);
    }
    if let Some(reason) = delta_gate(delta, k + l_k, LEMMA2_MAX_DELTA) {
        report.skip(label, reason);
        return Ok(report);
    }
    let r_k = energy_outside(x, support);
    let rhs = r_k / p as f64 * (6.0 * delta.delta * budget + 2.0 * k as f64);
    report.record(label, r * r, rhs);
    Ok(report)
}

/// `R(V_k∖Λ^{l_k+2p}) ≤ 10 R(V_k∖W) + 30δ R_k` for `W ⊆ V_k = V_0∖Λ^{l_k}`
/// with `|W| = p`. Hypotheses `p ≤ K^0.8` and `p ≤ 1/(20μ)` gate the
/// instance; `l_k + 2p ≤ C K^1.2` is checked with the default constants.
#[allow(clippy::too_many_arguments)]
pub fn check_lemma3(
    trace: &OmpTrace<'_>,
    x: &SparseVector,
    mu: f64,
    delta: &RipEstimate,
    l_k: usize,
    p: usize,
    w: &[usize],
) -> Result<CheckReport> {
    require_measurement(trace, x)?;
    let support_k = trace.support_at(l_k)?;
    let later = trace.support_continued(l_k + 2 * p)?;
    let mut report = CheckReport::new(Claim::Lemma3);
    report.advisory = !delta.is_exact();

    let v_k: Vec<usize> = x
        .support()
        .iter()
        .copied()
        .filter(|i| !support_k.contains(i))
        .collect();
    if v_k.is_empty() {
        return Ok(report);
    }
    let k = x.sparsity();
    let label = format!("lk={l_k},p={p},W={w:?}");
    let mut distinct = w.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let gate = if p == 0 {
        Some("p must be at least 1".to_string())
    } else if distinct.len() != w.len() || w.len() != p {
        Some(format!("|W| = {} differs from p = {p}", w.len()))
    } else if !w.iter().all(|i| v_k.contains(i)) {
        Some("W is not a subset of V_k".to_string())
    } else if p as f64 > (k as f64).powf(0.8) {
        Some(format!("p = {p} exceeds K^0.8"))
    } else if mu > 0.0 && p as f64 > 1.0 / (20.0 * mu) {
        Some(format!("p = {p} exceeds 1/(20μ) with μ = {mu}"))
    } else if (l_k + 2 * p) as f64 > TheoremConstants::default().big_c * (k as f64).powf(1.2) {
        Some("l_k + 2p exceeds C K^1.2".to_string())
    } else {
        delta_gate(delta, k + l_k + 2 * p, LEMMA3_MAX_DELTA)
    };
    if let Some(reason) = gate {
        report.skip(label, reason);
        return Ok(report);
    }

    let energy = |pred: &dyn Fn(usize) -> bool| -> f64 {
        v_k.iter()
            .filter(|&&i| pred(i))
            .map(|&i| x.get(i) * x.get(i))
            .sum()
    };
    let lhs = energy(&|i| !later.contains(&i));
    let outside_w = energy(&|i| !w.contains(&i));
    let r_k = energy(&|_| true);
    report.record(label, lhs, 10.0 * outside_w + 30.0 * delta.delta * r_k);
    Ok(report)
}

/// The classical sufficient condition `μ < 1/(2K − 1)` for recovery in
/// exactly `K` steps.
pub fn coherence_condition(mu: f64, k: usize) -> bool {
    assert!(k >= 1, "coherence_condition needs K >= 1");
    mu < 1.0 / (2.0 * k as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    pub success: bool,
    pub support_match: bool,
    pub relative_error: f64,
    pub iterations_used: usize,
}

/// Relative ℓ2 error of `estimate` against `x`, guarded against `x = 0`.
pub(crate) fn relative_error(estimate: &[f64], x: &SparseVector) -> f64 {
    let dense = x.to_dense();
    let diff: f64 = estimate
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diff / x.norm().max(f64::EPSILON)
}

/// Success means `supp x ⊆ Λ_final` and relative error at most `tol`.
pub fn verify_recovery(trace: &OmpTrace<'_>, x: &SparseVector, tol: f64) -> Result<RecoveryReport> {
    if x.dim() != trace.matrix().n() {
        return Err(Error::DimensionMismatch {
            context: "signal dimension",
            expected: trace.matrix().n(),
            found: x.dim(),
        });
    }
    let final_support = trace.support();
    let support_match = x.support().iter().all(|i| final_support.contains(i));
    let estimate = trace.reconstruct(trace.len())?;
    let relative_error = relative_error(estimate.as_slice(), x);
    Ok(RecoveryReport {
        success: support_match && relative_error <= tol,
        support_match,
        relative_error,
        iterations_used: trace.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, Vector};
    use crate::omp::{omp_solve, omp_solve_default, StopRule};
    use crate::sensing::{gen_bernoulli, rip_delta_exhaustive, RipMethod, SensingMatrix, DEFAULT_CAP};

    fn identity(n: usize) -> SensingMatrix {
        SensingMatrix::from_dense(DenseMatrix::identity(n)).unwrap()
    }

    fn exact(order: usize, delta: f64) -> RipEstimate {
        RipEstimate {
            order,
            delta,
            method: RipMethod::Exhaustive,
            subsets_examined: 0,
            seed: None,
        }
    }

    fn planted(phi: &SensingMatrix, entries: &[(usize, f64)]) -> (SparseVector, Vector) {
        let x = SparseVector::new(phi.n(), entries.iter().copied()).unwrap();
        let y = phi.mul_vec(&x.to_dense()).unwrap();
        (x, y)
    }

    #[test]
    fn theorem_a_identity_example() {
        let id = identity(4);
        let (x, y) = planted(&id, &[(2, 2.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        let rep = check_theorem_a(&trace, &x).unwrap();
        assert_eq!(rep.instances_checked(), 1);
        assert_eq!(rep.instances[0].lhs, 0.0);
        assert_eq!(rep.instances[0].rhs, 2.0);
        assert_eq!(rep.verdict(), Verdict::Passed);
    }

    #[test]
    fn theorem_a_zero_signal_is_vacuous() {
        let id = identity(4);
        let trace = omp_solve_default(&id, &Vector::zeros(4)).unwrap();
        let rep = check_theorem_a(&trace, &SparseVector::zero(4)).unwrap();
        assert_eq!(rep.instances_checked(), 0);
        assert!(rep.passed());
    }

    #[test]
    fn theorem_a_rejects_foreign_measurement() {
        let id = identity(4);
        let (x, _) = planted(&id, &[(2, 2.0)]);
        let y = Vector::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let trace = omp_solve_default(&id, &y).unwrap();
        assert!(matches!(check_theorem_a(&trace, &x), Err(Error::Precondition(_))));
    }

    #[test]
    fn theorem_b_orthonormal_dictionary() {
        let id = identity(6);
        let (_, y) = planted(&id, &[(0, 5.0), (1, -4.0), (3, 3.0), (5, 1.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        let rep = check_theorem_b(&trace, 0.0, 2, DEFAULT_CAP).unwrap();
        assert_eq!(rep.instances_checked(), 2);
        // l = 1: keeping one coefficient leaves 16 + 9 + 1, and ‖r²‖² = 9 + 1.
        assert!((rep.instances[0].rhs - 3.0 * 26f64.sqrt()).abs() < 1e-12);
        assert!((rep.instances[0].lhs - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(rep.instances[1].lhs, 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn theorem_b_empty_range_when_coherent() {
        let phi = gen_bernoulli(8, 16, 1).unwrap();
        let (_, y) = planted(&phi, &[(1, 1.0), (4, 2.0)]);
        let trace = omp_solve_default(&phi, &y).unwrap();
        let rep = check_theorem_b(&trace, 0.05, 3, DEFAULT_CAP).unwrap();
        assert_eq!(rep.instances_checked(), 1);
        let rep = check_theorem_b(&trace, 0.25, 3, DEFAULT_CAP).unwrap();
        assert_eq!(rep.instances_checked(), 0);
        assert!(rep.passed());
    }

    #[test]
    fn theorem_b_reports_oracle_failure_with_l() {
        let id = identity(8);
        let (_, y) = planted(&id, &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        match check_theorem_b(&trace, 0.0, 2, 10) {
            Err(Error::Oracle { l: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lemma1_at_zero_and_final_steps() {
        let mut entries = DenseMatrix::identity(10).entries().to_vec();
        for (r, c) in [(0, 1), (3, 2), (7, 5), (2, 7), (9, 8)] {
            entries[r * 10 + c] = 0.1;
        }
        let phi = SensingMatrix::normalized(DenseMatrix::new(10, 10, entries).unwrap()).unwrap();
        let (x, y) = planted(&phi, &[(2, 1.0), (7, -0.5)]);
        let trace = omp_solve_default(&phi, &y).unwrap();
        let delta = rip_delta_exhaustive(&phi, 2, DEFAULT_CAP).unwrap();
        let (a, b) = check_lemma1(&trace, &x, &delta, 0).unwrap();
        assert_eq!(a.instances[0].lhs, 0.0);
        assert_eq!(b.instances[0].lhs, 1.25);
        assert!((b.instances[0].rhs - (1.0 + 2.0 * delta.delta) * y.norm().powi(2)).abs() < 1e-12);
        assert!(a.passed() && b.passed());

        let last = trace.len();
        let delta = rip_delta_exhaustive(&phi, 2 + last, DEFAULT_CAP).unwrap();
        let (a, b) = check_lemma1(&trace, &x, &delta, last).unwrap();
        assert!(verify_recovery(&trace, &x, 1e-8).unwrap().success);
        assert!(a.instances[0].lhs < 1e-20);
        assert_eq!(b.instances[0].lhs, 0.0);
        assert!(check_lemma1(&trace, &x, &delta, last + 1).is_err());
    }

    #[test]
    fn lemma1_gates_low_order_delta() {
        let id = identity(4);
        let (x, y) = planted(&id, &[(1, 1.0), (2, 1.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        let (a, _) = check_lemma1(&trace, &x, &exact(2, 0.0), 1).unwrap();
        assert_eq!(a.instances_checked(), 0);
        assert_eq!(a.skipped.len(), 1);
        let mut mc = exact(4, 0.0);
        mc.method = RipMethod::MonteCarlo;
        let (a, _) = check_lemma1(&trace, &x, &mc, 1).unwrap();
        assert_eq!(a.verdict(), Verdict::Advisory);
        // δ = 0.4 lies outside the first inequality's range but inside the second's.
        let (a, b) = check_lemma1(&trace, &x, &exact(4, 0.4), 1).unwrap();
        assert_eq!((a.instances_checked(), a.skipped.len()), (0, 1));
        assert_eq!((b.instances_checked(), b.skipped.len()), (1, 0));
    }

    #[test]
    fn delta_ranges_match_their_inequalities() {
        let d = LEMMA1A_MAX_DELTA;
        assert!(((1.0 + d) / (1.0 - d) - 1.0 - 3.0 * d).abs() < 1e-12);
        let d = LEMMA1B_MAX_DELTA;
        assert!((1.0 / (1.0 - d) - 1.0 - 2.0 * d).abs() < 1e-12);
        let d = LEMMA3_MAX_DELTA;
        assert!((9.0 * (1.0 + d) * (1.0 + 2.0 * d) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn lemma2_examples() {
        let id = identity(4);
        let (x, y) = planted(&id, &[(0, 3.0), (2, 1.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        let c = TheoremConstants::default();
        let rep = check_lemma2(&trace, &x, &exact(4, 0.0), c, 0, 1).unwrap();
        // ‖r¹‖² = 1 ≤ R_0·2K = 10·4.
        assert_eq!(rep.instances[0].lhs, 1.0);
        assert_eq!(rep.instances[0].rhs, 40.0);
        // Support fully captured at l_k = 2: both sides vanish.
        let rep = check_lemma2(&trace, &x, &exact(4, 0.0), c, 2, 1).unwrap();
        assert_eq!(rep.instances[0].lhs, 0.0);
        assert_eq!(rep.instances[0].rhs, 0.0);
        assert!(rep.passed());
        assert!(check_lemma2(&trace, &x, &exact(4, 0.0), c, 0, 0).is_err());
    }

    #[test]
    fn lemma3_vacuous_and_gated() {
        let id = identity(6);
        let (x, y) = planted(&id, &[(0, 3.0), (2, 2.0), (4, 1.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        let d = exact(6, 0.0);
        // V_k empty at the final step.
        let rep = check_lemma3(&trace, &x, 0.0, &d, 3, 1, &[]).unwrap();
        assert_eq!(rep.instances_checked(), 0);
        assert!(rep.skipped.is_empty());
        // W not inside V_k.
        let rep = check_lemma3(&trace, &x, 0.0, &d, 0, 1, &[1]).unwrap();
        assert_eq!(rep.skipped.len(), 1);
        // Coherence gate.
        let rep = check_lemma3(&trace, &x, 0.1, &d, 0, 1, &[0]).unwrap();
        assert_eq!(rep.skipped.len(), 1);
        let rep = check_lemma3(&trace, &x, 0.0, &d, 0, 1, &[4]).unwrap();
        assert_eq!(rep.instances_checked(), 1);
        // After two steps {0, 2} are captured; only 1 = x_4² remains.
        assert_eq!(rep.instances[0].lhs, 1.0);
        assert_eq!(rep.instances[0].rhs, 10.0 * 13.0);
        assert!(rep.passed());
    }

    #[test]
    fn coherence_condition_examples() {
        assert!(coherence_condition(0.0, 10));
        assert!(!coherence_condition(1.0 / 3.0, 2));
        assert!(coherence_condition(0.2, 2));
    }

    #[test]
    fn verify_recovery_examples() {
        let id = identity(4);
        let (x, y) = planted(&id, &[(2, 2.0)]);
        let trace = omp_solve_default(&id, &y).unwrap();
        let rep = verify_recovery(&trace, &x, 1e-8).unwrap();
        assert!(rep.success && rep.support_match);
        assert_eq!(rep.iterations_used, 1);
        let trace = omp_solve_default(&id, &Vector::zeros(4)).unwrap();
        let rep = verify_recovery(&trace, &SparseVector::zero(4), 1e-8).unwrap();
        assert!(rep.success);
        assert_eq!(rep.iterations_used, 0);
    }

    #[test]
    fn partial_trace_is_not_a_recovery() {
        let id = identity(4);
        let (x, y) = planted(&id, &[(0, 1.0), (3, 2.0)]);
        let trace = omp_solve(&id, &y, StopRule::new(0.0, 1, 4).unwrap()).unwrap();
        let rep = verify_recovery(&trace, &x, 1e-8).unwrap();
        assert!(!rep.success && !rep.support_match);
    }

    #[test]
    fn report_text_and_merge() {
        let mut rep = CheckReport::new(Claim::TheoremA);
        rep.record("l=1", 1.0, 2.0);
        let mut other = CheckReport::new(Claim::TheoremA);
        other.record("l=2", 3.0, 2.0);
        rep.merge(other.tagged("7"));
        assert_eq!(rep.instances_checked(), 2);
        assert_eq!(rep.violations[0].label, "7:l=2");
        assert_eq!(rep.verdict(), Verdict::Failed);
        assert_eq!(rep.worst_slack(), Some(-1.0));
        let text = rep.to_text();
        assert!(text.starts_with("claim theorem-a\nverdict failed\ninstances 2\nviolations 1\n"));
        assert!(text.contains("violation 7:l=2 3.0000000000000000e0"));
    }
}
