//! Orthogonal Matching Pursuit with a complete per-iteration trace.
//!
//! Starting from `r⁰ = y`, `x⁰ = 0`, `Λ⁰ = ∅`, each iteration adds the column
//! most correlated with the current residual to the support, refits `y` by
//! least squares on the whole support, and recomputes the residual. The
//! loop stops once the residual vanishes (up to a tolerance), when the
//! iteration budget is spent, or when the next column is numerically
//! dependent on the support already chosen.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, SupportFactorization, Vector};
use crate::sensing::SensingMatrix;

/// Default relative residual tolerance; scaled by `‖y‖` at the start of a solve.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-10;

/// A signal given by its support and the (nonzero) values on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a sparse vector from `(index, value)` pairs. Indices must be
    /// distinct and in range, values finite and nonzero. The support is
    /// stored in ascending order.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = entries.into_iter().collect();
        pairs.sort_by_key(|&(i, _)| i);
        for (pos, &(i, v)) in pairs.iter().enumerate() {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, len: dim });
            }
            if pos > 0 && pairs[pos - 1].0 == i {
                return Err(Error::DuplicateIndex(i));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if v == 0.0 {
                return Err(Error::Precondition(format!("zero value at support index {i}")));
            }
        }
        let (support, values) = pairs.into_iter().unzip();
        Ok(SparseVector { dim, support, values })
    }

    pub fn zero(dim: usize) -> Self {
        SparseVector {
            dim,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps the entries of a dense vector whose magnitude exceeds `threshold`.
    pub fn from_dense(dense: &[f64], threshold: f64) -> Result<Self> {
        SparseVector::new(
            dense.len(),
            dense
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > threshold)
                .map(|(i, &v)| (i, v)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.support
            .binary_search(&i)
            .map_or(0.0, |pos| self.values[pos])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// `R(V) = Σ_{i∈V} x_i²`; indices of `V` outside the support contribute 0.
pub fn support_energy(x: &SparseVector, v: &[usize]) -> f64 {
    x.iter()
        .filter(|(i, _)| v.contains(i))
        .map(|(_, val)| val * val)
        .sum()
}

/// `R(supp x ∖ exclude)`.
pub(crate) fn energy_outside(x: &SparseVector, exclude: &[usize]) -> f64 {
    x.iter()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(_, val)| val * val)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Absolute bound on `‖r‖`.
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl StopRule {
    /// A rule for a problem with `m` measurements.
    pub fn new(residual_tol: f64, max_iterations: usize, m: usize) -> Result<Self> {
        if !(residual_tol >= 0.0 && residual_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "residual tolerance must be finite and non-negative, got {residual_tol}"
            )));
        }
        if max_iterations == 0 || max_iterations > m {
            return Err(Error::InvalidConfig(format!(
                "max iterations must lie in 1..={m}, got {max_iterations}"
            )));
        }
        Ok(StopRule {
            residual_tol,
            max_iterations,
        })
    }

    /// `1e-10·‖y‖` and at most `M` iterations.
    pub fn default_for(phi: &SensingMatrix, y: &Vector) -> Self {
        StopRule {
            residual_tol: DEFAULT_RELATIVE_TOL * y.norm(),
            max_iterations: phi.m(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpTraceStep {
    /// 1-based iteration count after this step.
    pub iteration: usize,
    pub selected: usize,
    /// `|⟨r^{l-1}, φ_i⟩|` for every column, measured before selecting.
    pub correlations: Vec<f64>,
    /// `Λ^l` in selection order.
    pub support: Vec<usize>,
    /// `x^l` restricted to `support`, aligned with it.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ResidualZero,
    MaxIterations,
    IllConditioned,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::ResidualZero => "residual-zero",
            Termination::MaxIterations => "max-iterations",
            Termination::IllConditioned => "ill-conditioned",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpTrace<'a> {
    matrix: &'a SensingMatrix,
    y: Vector,
    stop: StopRule,
    steps: Vec<OmpTraceStep>,
    termination: Termination,
}

impl<'a> OmpTrace<'a> {
    pub fn matrix(&self) -> &'a SensingMatrix {
        self.matrix
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn stop_rule(&self) -> StopRule {
        self.stop
    }

    pub fn steps(&self) -> &[OmpTraceStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    fn check_step(&self, step: usize) -> Result<()> {
        if step > self.steps.len() {
            return Err(Error::StepOutOfRange {
                step,
                len: self.steps.len(),
            });
        }
        Ok(())
    }

    /// `Λ^step` in selection order.
    pub fn support_at(&self, step: usize) -> Result<&[usize]> {
        self.check_step(step)?;
        Ok(match step {
            0 => &[],
            l => &self.steps[l - 1].support,
        })
    }

    /// Final support.
    pub fn support(&self) -> &[usize] {
        self.steps.last().map_or(&[], |s| &s.support)
    }

    /// Stored `‖r^step‖`; `‖y‖` at step 0.
    pub fn residual_norm_at(&self, step: usize) -> Result<f64> {
        self.check_step(step)?;
        Ok(match step {
            0 => self.y.norm(),
            l => self.steps[l - 1].residual_norm,
        })
    }

    /// `‖r^l‖` for any `l`, continuing with zero past a trace that stopped
    /// on a vanishing residual. Errors when the trace stopped for another
    /// reason before reaching `l`.
    pub fn residual_norm_continued(&self, l: usize) -> Result<f64> {
        if l <= self.steps.len() {
            return self.residual_norm_at(l);
        }
        if self.termination == Termination::ResidualZero {
            return Ok(0.0);
        }
        Err(Error::StepOutOfRange {
            step: l,
            len: self.steps.len(),
        })
    }

    /// `Λ^l`, continuing with the final support past a trace that stopped on
    /// a vanishing residual.
    pub fn support_continued(&self, l: usize) -> Result<&[usize]> {
        if l <= self.steps.len() {
            return self.support_at(l);
        }
        if self.termination == Termination::ResidualZero {
            return Ok(self.support());
        }
        Err(Error::StepOutOfRange {
            step: l,
            len: self.steps.len(),
        })
    }

    /// Dense `x^step`; the zero vector at step 0.
    pub fn reconstruct(&self, step: usize) -> Result<Vector> {
        self.check_step(step)?;
        let mut x = vec![0.0; self.matrix.n()];
        if step > 0 {
            let s = &self.steps[step - 1];
            for (&i, &c) in s.support.iter().zip(&s.coefficients) {
                x[i] = c;
            }
        }
        Ok(Vector::from_raw(x))
    }

    /// Recomputes `r^step = y − Φ x^step`.
    pub fn residual_at(&self, step: usize) -> Result<Vector> {
        let x = self.reconstruct(step)?;
        self.y.sub(&self.matrix.mul_vec(x.as_slice())?)
    }

    /// `z^step = x − x^step` for the planted signal `x`.
    pub fn error_vector(&self, x: &SparseVector, step: usize) -> Result<Vector> {
        if x.dim() != self.matrix.n() {
            return Err(Error::DimensionMismatch {
                context: "signal dimension",
                expected: self.matrix.n(),
                found: x.dim(),
            });
        }
        let estimate = self.reconstruct(step)?;
        Vector::from_raw(x.to_dense()).sub(&estimate)
    }

    /// Final estimate as a sparse vector (exact zeros dropped).
    pub fn estimate(&self) -> SparseVector {
        let n = self.matrix.n();
        match self.steps.last() {
            None => SparseVector::zero(n),
            Some(s) => SparseVector::new(
                n,
                s.support
                    .iter()
                    .copied()
                    .zip(s.coefficients.iter().copied())
                    .filter(|&(_, c)| c != 0.0),
            )
            .expect("trace coefficients are finite and indices distinct"),
        }
    }

    /// One line per step: `l selected residual_norm support`, the support
    /// sorted ascending. Residual norms are written with 17 significant
    /// digits.
    pub fn export(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# omplab-trace v1").unwrap();
        writeln!(out, "m {}", self.matrix.m()).unwrap();
        writeln!(out, "n {}", self.matrix.n()).unwrap();
        writeln!(out, "steps {}", self.steps.len()).unwrap();
        writeln!(out, "termination {}", self.termination).unwrap();
        for s in &self.steps {
            let mut sorted = s.support.clone();
            sorted.sort_unstable();
            let list: Vec<String> = sorted.iter().map(usize::to_string).collect();
            writeln!(
                out,
                "{} {} {:.16e} {}",
                s.iteration,
                s.selected,
                s.residual_norm,
                list.join(",")
            )
            .unwrap();
        }
        out
    }
}

/// Column maximizing `|⟨r, φ_i⟩|` over all columns, smallest index on ties,
/// together with every magnitude.
pub fn select_next_index(phi: &SensingMatrix, r: &Vector) -> Result<(usize, Vec<f64>)> {
    if r.len() != phi.m() {
        return Err(Error::DimensionMismatch {
            context: "residual length",
            expected: phi.m(),
            found: r.len(),
        });
    }
    if r.norm() == 0.0 {
        return Err(Error::ZeroResidual);
    }
    Ok(argmax_correlation(phi.dense(), r.as_slice()))
}

fn argmax_correlation(phi: &DenseMatrix, r: &[f64]) -> (usize, Vec<f64>) {
    let magnitudes: Vec<f64> = (0..phi.cols()).map(|i| dot(phi.col(i), r).abs()).collect();
    let mut best = 0;
    for (i, &g) in magnitudes.iter().enumerate().skip(1) {
        if g > magnitudes[best] {
            best = i;
        }
    }
    (best, magnitudes)
}

/// Runs the pursuit on `y` until `stop` fires.
pub fn omp_solve<'a>(phi: &'a SensingMatrix, y: &Vector, stop: StopRule) -> Result<OmpTrace<'a>> {
    if y.len() != phi.m() {
        return Err(Error::DimensionMismatch {
            context: "measurement vector",
            expected: phi.m(),
            found: y.len(),
        });
    }
    if stop.max_iterations > phi.m() {
        return Err(Error::InvalidConfig(format!(
            "max iterations {} exceeds M = {}",
            stop.max_iterations,
            phi.m()
        )));
    }
    let mut factorization = SupportFactorization::new(phi.dense(), y)?;
    let mut steps = Vec::new();
    let termination = if y.norm() <= stop.residual_tol {
        Termination::ResidualZero
    } else {
        loop {
            let (selected, correlations) = argmax_correlation(phi.dense(), factorization.residual());
            if factorization.extend(selected).is_err() {
                // Either a dependent column or a re-selected one; both mean the
                // support cannot grow further.
                break Termination::IllConditioned;
            }
            let residual_norm = factorization.residual_norm();
            steps.push(OmpTraceStep {
                iteration: steps.len() + 1,
                selected,
                correlations,
                support: factorization.support().to_vec(),
                coefficients: factorization.coefficients(),
                residual_norm,
            });
            if residual_norm <= stop.residual_tol {
                break Termination::ResidualZero;
            }
            if steps.len() >= stop.max_iterations {
                break Termination::MaxIterations;
            }
        }
    };
    Ok(OmpTrace {
        matrix: phi,
        y: y.clone(),
        stop,
        steps,
        termination,
    })
}

/// `omp_solve` with [`StopRule::default_for`].
pub fn omp_solve_default<'a>(phi: &'a SensingMatrix, y: &Vector) -> Result<OmpTrace<'a>> {
    omp_solve(phi, y, StopRule::default_for(phi, y))
}
