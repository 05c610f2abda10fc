//! Seeded batches of planted instances run through the checkers. Instances
//! are processed in parallel and merged in index order.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{planted_instance, Instance, MatrixSource, SignalModel};
use crate::analysis::{
    check_lemma1, check_lemma2, check_lemma3, check_theorem_a, check_theorem_b, coherence_condition,
    relative_error, CheckReport, Claim,
};
use crate::combinatorics::{next_subset, unrank};
use crate::error::{Error, Result};
use crate::omp::{omp_solve_default, Termination};
use crate::oracles::l0_decode_exhaustive;
use crate::sensing::{coherence, rip_delta_exhaustive, RipEstimate, TheoremConstants};

/// Shape and size of an instance family.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub m: usize,
    pub n: usize,
    pub k_values: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
    pub cap: u64,
}

impl SuiteConfig {
    fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("K value list must be non-empty".into()));
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k == 0 || k > self.m) {
            return Err(Error::InvalidConfig(format!("K = {k} must lie in 1..={}", self.m)));
        }
        Ok(())
    }

    fn k_for(&self, index: usize) -> usize {
        self.k_values[index % self.k_values.len()]
    }
}

fn run_instances<T: Send>(
    config: &SuiteConfig,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    config.validate()?;
    (0..config.instances).into_par_iter().map(f).collect()
}

fn instance(source: &MatrixSource<'_>, config: &SuiteConfig, index: usize, model: SignalModel) -> Result<Instance> {
    planted_instance(source, config.seed, index, config.k_for(index), model)
}

/// The residual decay bound over every step. Signal models cycle with the
/// instance index after the K values.
pub fn theorem_a_suite(source: &MatrixSource<'_>, config: &SuiteConfig) -> Result<CheckReport> {
    let reports = run_instances(config, |i| {
        let model = SignalModel::ALL[(i / config.k_values.len()) % SignalModel::ALL.len()];
        let inst = instance(source, config, i, model)?;
        let trace = omp_solve_default(&inst.phi, &inst.y)?;
        Ok(check_theorem_a(&trace, &inst.x)?.tagged(&format!("i={i}")))
    })?;
    Ok(merge_all(Claim::TheoremA, reports))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremBSummary {
    pub report: CheckReport,
    pub instances: usize,
    /// Instances where `⌊1/(20μ)⌋ = 0` leaves no `l` to check.
    pub vacuous: usize,
    pub min_mu: f64,
}

pub fn theorem_b_suite(source: &MatrixSource<'_>, config: &SuiteConfig, l_max: usize) -> Result<TheoremBSummary> {
    let results = run_instances(config, |i| {
        let inst = instance(source, config, i, SignalModel::GaussianValues)?;
        let mu = coherence(&inst.phi)?.mu;
        let trace = omp_solve_default(&inst.phi, &inst.y)?;
        let tag = format!("i={i}");
        let report = match check_theorem_b(&trace, mu, l_max, config.cap) {
            Ok(r) => r.tagged(&tag),
            Err(Error::Precondition(reason)) => {
                let mut r = CheckReport::new(Claim::TheoremB);
                r.skip(tag, reason);
                r
            }
            Err(e) => return Err(e),
        };
        let vacuous = (1.0 / (20.0 * mu)).floor() < 1.0;
        Ok((report, vacuous, mu))
    })?;
    let vacuous = results.iter().filter(|r| r.1).count();
    let min_mu = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(TheoremBSummary {
        report: merge_all(Claim::TheoremB, results.into_iter().map(|r| r.0).collect()),
        instances: config.instances,
        vacuous,
        min_mu,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSummary {
    pub lemma1a: CheckReport,
    pub lemma1b: CheckReport,
    pub lemma2: CheckReport,
    pub lemma3: CheckReport,
    /// Largest exact δ seen per order, for context.
    pub max_delta: Vec<(usize, f64)>,
}

impl LemmaSummary {
    pub fn reports(&self) -> [&CheckReport; 4] {
        [&self.lemma1a, &self.lemma1b, &self.lemma2, &self.lemma3]
    }
}

struct DeltaCache<'a> {
    phi: &'a crate::sensing::SensingMatrix,
    cap: u64,
    max_order: usize,
    known: HashMap<usize, RipEstimate>,
}

impl DeltaCache<'_> {
    /// Exact δ of `order`, or of the largest measurable order when `order`
    /// is out of reach so the checker's order gate rejects it.
    fn get(&mut self, order: usize) -> Result<RipEstimate> {
        let order = order.clamp(1, self.max_order);
        if let Some(d) = self.known.get(&order) {
            return Ok(*d);
        }
        let d = rip_delta_exhaustive(self.phi, order, self.cap)?;
        self.known.insert(order, d);
        Ok(d)
    }
}

/// Every step-level lemma on each instance, with exact δ up to `max_order`
/// and `1 ≤ p ≤ p_max`.
pub fn lemma_suite(
    source: &MatrixSource<'_>,
    config: &SuiteConfig,
    max_order: usize,
    p_max: usize,
    constants: TheoremConstants,
) -> Result<LemmaSummary> {
    let results = run_instances(config, |i| {
        let inst = instance(source, config, i, SignalModel::GaussianValues)?;
        let (phi, x) = (&inst.phi, &inst.x);
        let k = x.sparsity();
        let mu = coherence(phi)?.mu;
        let trace = omp_solve_default(phi, &inst.y)?;
        let mut deltas = DeltaCache {
            phi,
            cap: config.cap,
            max_order: max_order.min(phi.m()).min(phi.n()),
            known: HashMap::new(),
        };
        let tag = format!("i={i}");
        let mut l1a = CheckReport::new(Claim::Lemma1a);
        let mut l1b = CheckReport::new(Claim::Lemma1b);
        let mut l2 = CheckReport::new(Claim::Lemma2);
        let mut l3 = CheckReport::new(Claim::Lemma3);

        for l in 0..=trace.len() {
            let (a, b) = check_lemma1(&trace, x, &deltas.get(k + l)?, l)?;
            l1a.merge(a.tagged(&tag));
            l1b.merge(b.tagged(&tag));
        }
        for l_k in 0..=trace.len() {
            for p in 1..=p_max {
                match check_lemma2(&trace, x, &deltas.get(k + l_k)?, constants, l_k, p) {
                    Ok(r) => l2.merge(r.tagged(&tag)),
                    Err(Error::StepOutOfRange { .. }) => {
                        l2.skip(format!("{tag}:lk={l_k},p={p}"), "trace stopped before l_k + p")
                    }
                    Err(e) => return Err(e),
                }
                let support_k = trace.support_at(l_k)?;
                let v_k: Vec<usize> = x.support().iter().copied().filter(|j| !support_k.contains(j)).collect();
                if p > v_k.len() {
                    continue;
                }
                let delta = deltas.get(k + l_k + 2 * p)?;
                let mut pick = unrank(v_k.len(), p, 0);
                loop {
                    let w: Vec<usize> = pick.iter().map(|&j| v_k[j]).collect();
                    match check_lemma3(&trace, x, mu, &delta, l_k, p, &w) {
                        Ok(r) => l3.merge(r.tagged(&tag)),
                        Err(Error::StepOutOfRange { .. }) => {
                            l3.skip(format!("{tag}:lk={l_k},p={p},W={w:?}"), "trace stopped before l_k + 2p")
                        }
                        Err(e) => return Err(e),
                    }
                    if !next_subset(&mut pick, v_k.len()) {
                        break;
                    }
                }
            }
        }
        let mut seen: Vec<(usize, f64)> = deltas.known.values().map(|d| (d.order, d.delta)).collect();
        seen.sort_by_key(|d| d.0);
        Ok((l1a, l1b, l2, l3, seen))
    })?;

    let mut summary = LemmaSummary {
        lemma1a: CheckReport::new(Claim::Lemma1a),
        lemma1b: CheckReport::new(Claim::Lemma1b),
        lemma2: CheckReport::new(Claim::Lemma2),
        lemma3: CheckReport::new(Claim::Lemma3),
        max_delta: Vec::new(),
    };
    let mut max_delta: HashMap<usize, f64> = HashMap::new();
    for (a, b, c, d, seen) in results {
        summary.lemma1a.merge(a);
        summary.lemma1b.merge(b);
        summary.lemma2.merge(c);
        summary.lemma3.merge(d);
        for (order, delta) in seen {
            let e = max_delta.entry(order).or_insert(delta);
            *e = e.max(delta);
        }
    }
    summary.max_delta = max_delta.into_iter().collect();
    summary.max_delta.sort_by_key(|d| d.0);
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub instances: usize,
    /// Instances whose ℓ0 solution is unique.
    pub unique: usize,
    /// Unique instances where OMP reached a zero residual within `K` steps.
    pub omp_successes: usize,
    /// Successful instances whose estimate matched the ℓ0 solution.
    pub agreements: usize,
    /// Indices of successful instances whose estimate did not.
    pub mismatches: Vec<usize>,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares OMP against exhaustive ℓ0 decoding. Where the ℓ0 solution is
/// unique and OMP reports success (zero residual within `K` steps), the
/// final estimate must match it to relative accuracy `tol`.
pub fn oracle_equivalence_suite(source: &MatrixSource<'_>, config: &SuiteConfig, tol: f64) -> Result<OracleSummary> {
    let results = run_instances(config, |i| {
        let inst = instance(source, config, i, SignalModel::GaussianValues)?;
        let k = inst.x.sparsity();
        let solutions = l0_decode_exhaustive(&inst.phi, &inst.y, k, 1e-9 * inst.y.norm(), config.cap)?;
        if solutions.len() != 1 {
            return Ok(None);
        }
        let trace = omp_solve_default(&inst.phi, &inst.y)?;
        if trace.termination() != Termination::ResidualZero || trace.len() > k {
            return Ok(Some(None));
        }
        let agrees = relative_error(&trace.estimate().to_dense(), &solutions[0]) <= tol;
        Ok(Some(Some(agrees)))
    })?;
    let unique = results.iter().flatten().count();
    let omp_successes = results.iter().flatten().flatten().count();
    let mismatches: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == Some(Some(false)))
        .map(|(i, _)| i)
        .collect();
    Ok(OracleSummary {
        instances: config.instances,
        unique,
        omp_successes,
        agreements: omp_successes - mismatches.len(),
        mismatches,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceRow {
    pub k: usize,
    pub trials: usize,
    /// Trials with `μ < 1/(2K − 1)`.
    pub qualifying: usize,
    /// Qualifying trials recovered in exactly `K` steps.
    pub exact: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSummary {
    pub rows: Vec<CoherenceRow>,
    /// Qualifying trials that were not recovered in exactly `K` steps.
    pub failures: Vec<usize>,
}

impl CoherenceSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn qualifying(&self) -> usize {
        self.rows.iter().map(|r| r.qualifying).sum()
    }
}

/// The classical coherence condition: whenever `μ < 1/(2K − 1)`, OMP must
/// recover `x` in exactly `K` iterations to relative accuracy `tol`.
pub fn coherence_suite(source: &MatrixSource<'_>, config: &SuiteConfig, tol: f64) -> Result<CoherenceSummary> {
    let results = run_instances(config, |i| {
        let inst = instance(source, config, i, SignalModel::GaussianValues)?;
        let k = inst.x.sparsity();
        let mu = coherence(&inst.phi)?.mu;
        if !coherence_condition(mu, k) {
            return Ok((k, None));
        }
        let trace = omp_solve_default(&inst.phi, &inst.y)?;
        let mut support = trace.support().to_vec();
        support.sort_unstable();
        let exact = trace.len() == k
            && support == inst.x.support()
            && relative_error(&trace.estimate().to_dense(), &inst.x) <= tol;
        Ok((k, Some(exact)))
    })?;
    let rows = config
        .k_values
        .iter()
        .map(|&k| {
            let of_k = results.iter().filter(|r| r.0 == k);
            CoherenceRow {
                k,
                trials: of_k.clone().count(),
                qualifying: of_k.clone().filter(|r| r.1.is_some()).count(),
                exact: of_k.filter(|r| r.1 == Some(true)).count(),
            }
        })
        .collect();
    let failures = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1 == Some(false))
        .map(|(i, _)| i)
        .collect();
    Ok(CoherenceSummary { rows, failures })
}

fn merge_all(claim: Claim, reports: Vec<CheckReport>) -> CheckReport {
    let mut out = CheckReport::new(claim);
    for r in reports {
        out.merge(r);
    }
    out
}

/// Named check batches, as exposed by the `check` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    TheoremA,
    TheoremB,
    Lemma1,
    Lemma2,
    Lemma3,
    Lemmas,
    CoherenceCondition,
    OracleEquivalence,
}

impl SuiteKind {
    pub const NAMES: [&'static str; 8] = [
        "theorem-a",
        "theorem-b",
        "lemma-1",
        "lemma-2",
        "lemma-3",
        "lemmas",
        "coherence-condition",
        "oracle-equivalence",
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteKind::TheoremA => "theorem-a",
            SuiteKind::TheoremB => "theorem-b",
            SuiteKind::Lemma1 => "lemma-1",
            SuiteKind::Lemma2 => "lemma-2",
            SuiteKind::Lemma3 => "lemma-3",
            SuiteKind::Lemmas => "lemmas",
            SuiteKind::CoherenceCondition => "coherence-condition",
            SuiteKind::OracleEquivalence => "oracle-equivalence",
        }
    }

    /// The instance family used by the acceptance run of this check.
    pub fn default_config(self) -> SuiteConfig {
        let (m, n, k_values, instances, seed) = match self {
            SuiteKind::TheoremA => (16, 32, (1..=6).collect(), 1000, 1),
            SuiteKind::TheoremB => (8, 16, vec![2, 3], 100, 2),
            SuiteKind::Lemma1 | SuiteKind::Lemma2 | SuiteKind::Lemma3 | SuiteKind::Lemmas => {
                (10, 20, vec![2, 3], 50, 3)
            }
            SuiteKind::CoherenceCondition => (64, 256, vec![1, 2, 3], 200, 4),
            SuiteKind::OracleEquivalence => (6, 12, vec![2], 50, 5),
        };
        SuiteConfig {
            m,
            n,
            k_values,
            instances,
            seed,
            cap: crate::sensing::DEFAULT_CAP,
        }
    }
}

impl std::fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "theorem-a" => SuiteKind::TheoremA,
            "theorem-b" => SuiteKind::TheoremB,
            "lemma-1" => SuiteKind::Lemma1,
            "lemma-2" => SuiteKind::Lemma2,
            "lemma-3" => SuiteKind::Lemma3,
            "lemmas" => SuiteKind::Lemmas,
            "coherence-condition" => SuiteKind::CoherenceCondition,
            "oracle-equivalence" => SuiteKind::OracleEquivalence,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown claim {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteParams {
    pub l_max: usize,
    pub max_order: usize,
    pub p_max: usize,
    pub tol: f64,
    pub constants: TheoremConstants,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            l_max: 3,
            max_order: 8,
            p_max: 2,
            tol: 1e-8,
            constants: TheoremConstants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub passed: bool,
    pub text: String,
}

/// Runs one named batch and renders its report.
pub fn run_suite(
    kind: SuiteKind,
    source: &MatrixSource<'_>,
    config: &SuiteConfig,
    params: &SuiteParams,
) -> Result<SuiteOutcome> {
    use std::fmt::Write as _;
    let mut text = String::new();
    let passed = match kind {
        SuiteKind::TheoremA => {
            let r = theorem_a_suite(source, config)?;
            text.push_str(&r.to_text());
            r.passed()
        }
        SuiteKind::TheoremB => {
            let s = theorem_b_suite(source, config, params.l_max)?;
            text.push_str(&s.report.to_text());
            let _ = writeln!(text, "vacuous {} of {}", s.vacuous, s.instances);
            let _ = writeln!(text, "min-mu {:.16e}", s.min_mu);
            s.report.passed()
        }
        SuiteKind::Lemma1 | SuiteKind::Lemma2 | SuiteKind::Lemma3 | SuiteKind::Lemmas => {
            let s = lemma_suite(source, config, params.max_order, params.p_max, params.constants)?;
            let chosen: Vec<&CheckReport> = match kind {
                SuiteKind::Lemma1 => vec![&s.lemma1a, &s.lemma1b],
                SuiteKind::Lemma2 => vec![&s.lemma2],
                SuiteKind::Lemma3 => vec![&s.lemma3],
                _ => s.reports().to_vec(),
            };
            for r in &chosen {
                text.push_str(&r.to_text());
            }
            for (order, delta) in &s.max_delta {
                let _ = writeln!(text, "max-delta order={order} {delta:.16e}");
            }
            chosen.iter().all(|r| r.passed())
        }
        SuiteKind::CoherenceCondition => {
            let s = coherence_suite(source, config, params.tol)?;
            let _ = writeln!(text, "claim coherence-condition");
            for r in &s.rows {
                let _ = writeln!(
                    text,
                    "k {} trials {} qualifying {} exact {}",
                    r.k, r.trials, r.qualifying, r.exact
                );
            }
            let _ = writeln!(text, "failures {:?}", s.failures);
            s.passed()
        }
        SuiteKind::OracleEquivalence => {
            let s = oracle_equivalence_suite(source, config, params.tol)?;
            let _ = writeln!(text, "claim oracle-equivalence");
            let _ = writeln!(text, "instances {}", s.instances);
            let _ = writeln!(text, "unique {}", s.unique);
            let _ = writeln!(text, "omp-successes {}", s.omp_successes);
            let _ = writeln!(text, "agreements {}", s.agreements);
            let _ = writeln!(text, "mismatches {:?}", s.mismatches);
            s.passed()
        }
    };
    Ok(SuiteOutcome { passed, text })
}
