//! Command-line front end. Every run prints its resolved configuration to
//! standard error before doing any work.
//!
//! Exit codes: 0 success, 1 check violations, 2 usage or input errors,
//! 3 I/O errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::suites::{run_suite, SuiteKind, SuiteParams};
use crate::experiments::{
    coherence_concentration_study, ensemble_source, export_results, fit_cells, parse_grid_csv,
    run_recovery_grid, Export, GridConfig, SignalModel, DEFAULT_THRESHOLD,
};
use crate::io;
use crate::linalg::Vector;
use crate::omp::{omp_solve, StopRule, DEFAULT_RELATIVE_TOL};
use crate::plot::emit_svg_curves;
use crate::analysis::verify_recovery;
use crate::sensing::{
    coherence, rip_delta_exhaustive, rip_delta_monte_carlo, theorem1_hypotheses, Ensemble, SensingMatrix,
    TheoremConstants, DEFAULT_CAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable consulted when a seed flag is absent.
pub const SEED_ENV: &str = "OMPLAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "omplab", version, about = "Orthogonal Matching Pursuit toolkit")]
struct Cli {
    /// Worker threads for `check` and `grid` (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a sensing matrix.
    Gen(GenArgs),
    /// Coherence, RIP constants and hypothesis checks for a matrix, or a
    /// coherence concentration study.
    Analyze(AnalyzeArgs),
    /// Run OMP and print its trace.
    Solve(SolveArgs),
    /// Run a seeded check suite.
    Check(CheckArgs),
    /// Run a recovery-probability grid.
    Grid(GridArgs),
    /// Fit the critical measurement count against K.
    Fit(FitArgs),
    /// Render grid results as SVG curves.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value = "bernoulli")]
    ensemble: Ensemble,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Matrix file to analyze.
    #[arg(long, required_unless_present = "concentration")]
    matrix: Option<PathBuf>,
    /// RIP order to estimate.
    #[arg(long)]
    rip_order: Option<usize>,
    #[arg(long, default_value = "exhaustive", value_parser = ["exhaustive", "monte-carlo"])]
    rip_method: String,
    #[arg(long, default_value_t = 10_000)]
    rip_trials: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Sparsity for the recovery hypotheses.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = TheoremConstants::BIG_C)]
    big_c: f64,
    #[arg(long, default_value_t = TheoremConstants::SMALL_C)]
    small_c: f64,
    /// Coherence concentration study over Bernoulli matrices.
    #[arg(long, conflicts_with = "matrix")]
    concentration: bool,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Sparse signal file; measurements are `Φx`.
    #[arg(long, conflicts_with = "y", required_unless_present = "y")]
    signal: Option<PathBuf>,
    /// Dense measurement vector file.
    #[arg(long)]
    y: Option<PathBuf>,
    /// Residual tolerance relative to ‖y‖.
    #[arg(long, default_value_t = DEFAULT_RELATIVE_TOL)]
    tol: f64,
    /// Iteration limit (default: M).
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    success_tol: f64,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    claim: SuiteKind,
    /// Fixed matrix; without it each instance draws its own.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value = "bernoulli")]
    ensemble: Ensemble,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Number of instances.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 3)]
    l_max: usize,
    #[arg(long, default_value_t = 8)]
    max_order: usize,
    #[arg(long, default_value_t = 2)]
    p_max: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = TheoremConstants::BIG_C)]
    big_c: f64,
    #[arg(long, default_value_t = TheoremConstants::SMALL_C)]
    small_c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value = "bernoulli")]
    ensemble: Ensemble,
    #[arg(long, default_value = "gaussian-values")]
    model: SignalModel,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Grid CSV file.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Grid CSV file.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the verb and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn resolve_seed(flag: Option<u64>, default: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(default),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))
}

fn dispatch(cli: Cli) -> Result<i32> {
    let parallel = matches!(cli.command, Command::Check(_) | Command::Grid(_));
    let workers = match cli.workers {
        Some(0) => return Err(Error::InvalidConfig("--workers must be at least 1".into())),
        Some(w) => w,
        None if parallel => std::thread::available_parallelism().map_or(1, |n| n.get()),
        None => 1,
    };
    let workers = if parallel { workers } else { 1 };
    let pool = pool(workers)?;
    pool.install(|| match cli.command {
        Command::Gen(a) => gen(a),
        Command::Analyze(a) => analyze(a),
        Command::Solve(a) => solve(a),
        Command::Check(a) => check(a, workers),
        Command::Grid(a) => grid(a, workers),
        Command::Fit(a) => fit(a),
        Command::Plot(a) => plot(a),
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => io::write_string(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(a: GenArgs) -> Result<i32> {
    let seed = resolve_seed(a.seed, 0)?;
    eprintln!(
        "config verb=gen ensemble={} m={} n={} seed={seed} out={}",
        a.ensemble,
        a.m,
        a.n,
        a.out.display()
    );
    let phi = crate::sensing::generate(a.ensemble, a.m, a.n, seed)?;
    io::write_matrix(&a.out, &phi)?;
    Ok(EXIT_OK)
}

fn analyze(a: AnalyzeArgs) -> Result<i32> {
    use std::fmt::Write as _;
    let seed = resolve_seed(a.seed, 7)?;
    if a.concentration {
        eprintln!(
            "config verb=analyze mode=concentration m={} n={} samples={} seed={seed}",
            a.m, a.n, a.samples
        );
        let report = coherence_concentration_study(a.m, a.n, a.samples, seed)?;
        return emit(&report.to_text(), a.out.as_deref()).map(|_| EXIT_OK);
    }
    let path = a.matrix.expect("clap requires --matrix");
    eprintln!(
        "config verb=analyze mode=matrix matrix={} rip-order={:?} rip-method={} rip-trials={} cap={} k={:?} big-c={:e} small-c={:e} seed={seed}",
        path.display(),
        a.rip_order,
        a.rip_method,
        a.rip_trials,
        a.cap,
        a.k,
        a.big_c,
        a.small_c
    );
    let phi = io::read_matrix(&path)?;
    let mut text = String::new();
    let _ = writeln!(text, "m {}\nn {}", phi.m(), phi.n());
    if phi.n() >= 2 {
        let c = coherence(&phi)?;
        let _ = writeln!(text, "coherence {:.16e} pair {},{}", c.mu, c.pair.0, c.pair.1);
    }
    if let Some(order) = a.rip_order {
        let est = if a.rip_method == "exhaustive" {
            rip_delta_exhaustive(&phi, order, a.cap)?
        } else {
            rip_delta_monte_carlo(&phi, order, a.rip_trials, seed)?
        };
        let _ = writeln!(
            text,
            "rip order {} delta {:.16e} method {} subsets {}",
            est.order, est.delta, est.method, est.subsets_examined
        );
    }
    if let Some(k) = a.k {
        let constants = TheoremConstants {
            big_c: a.big_c,
            small_c: a.small_c,
        };
        let r = theorem1_hypotheses(&phi, k, constants, a.cap)?;
        let _ = writeln!(text, "hypotheses k {} constants {}", r.k, r.constants);
        let _ = writeln!(
            text,
            "rip-order-required {} delta-required {:.16e} feasibility {:?} rip-holds {:?}",
            r.rip_order_required, r.delta_required, r.feasibility, r.rip_holds
        );
        let _ = writeln!(
            text,
            "mu-required {:.16e} mu-measured {:.16e} coherence-holds {}",
            r.mu_required, r.mu_measured, r.coherence_holds
        );
    }
    emit(&text, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn solve(a: SolveArgs) -> Result<i32> {
    eprintln!(
        "config verb=solve matrix={} signal={:?} y={:?} tol={:e} max-iter={:?} success-tol={:e}",
        a.matrix.display(),
        a.signal.as_ref().map(|p| p.display().to_string()),
        a.y.as_ref().map(|p| p.display().to_string()),
        a.tol,
        a.max_iter,
        a.success_tol
    );
    let phi = io::read_matrix(&a.matrix)?;
    let (x, y) = match (&a.signal, &a.y) {
        (Some(p), _) => {
            let x = io::read_signal(p)?;
            if x.dim() != phi.n() {
                return Err(Error::DimensionMismatch {
                    context: "signal dimension",
                    expected: phi.n(),
                    found: x.dim(),
                });
            }
            let y = phi.mul_vec(&x.to_dense())?;
            (Some(x), y)
        }
        (None, Some(p)) => {
            let y = Vector::new(io::vector_from_text(&io::read_to_string(p)?)?)?;
            (None, y)
        }
        (None, None) => unreachable!("clap requires --signal or --y"),
    };
    if y.len() != phi.m() {
        return Err(Error::DimensionMismatch {
            context: "measurement vector",
            expected: phi.m(),
            found: y.len(),
        });
    }
    let stop = StopRule::new(a.tol * y.norm(), a.max_iter.unwrap_or(phi.m()), phi.m())?;
    let trace = omp_solve(&phi, &y, stop)?;
    let mut text = trace.export();
    if let Some(x) = &x {
        let r = verify_recovery(&trace, x, a.success_tol)?;
        text.push_str(&format!(
            "recovery success {} support-match {} relative-error {:.16e}\n",
            r.success, r.support_match, r.relative_error
        ));
    }
    if let Some(p) = &a.trace_out {
        io::write_string(p, &trace.export())?;
    }
    match &a.out {
        Some(p) => {
            io::write_signal(p, &trace.estimate())?;
            print!("{text}");
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn check(a: CheckArgs, workers: usize) -> Result<i32> {
    let mut config = a.claim.default_config();
    config.seed = resolve_seed(a.seed, config.seed)?;
    config.cap = a.cap;
    let fixed: Option<SensingMatrix> = a.matrix.as_deref().map(io::read_matrix).transpose()?;
    if let Some(phi) = &fixed {
        config.m = phi.m();
        config.n = phi.n();
    }
    if let Some(m) = a.m {
        config.m = m;
    }
    if let Some(n) = a.n {
        config.n = n;
    }
    if let Some(k) = a.k {
        config.k_values = k;
    }
    if let Some(t) = a.trials {
        config.instances = t;
    }
    if let Some(phi) = &fixed {
        if (phi.m(), phi.n()) != (config.m, config.n) {
            return Err(Error::InvalidConfig(format!(
                "--m/--n ({}×{}) disagree with the matrix file ({}×{})",
                config.m,
                config.n,
                phi.m(),
                phi.n()
            )));
        }
    }
    let params = SuiteParams {
        l_max: a.l_max,
        max_order: a.max_order,
        p_max: a.p_max,
        tol: a.tol,
        constants: TheoremConstants {
            big_c: a.big_c,
            small_c: a.small_c,
        },
    };
    eprintln!(
        "config verb=check claim={} matrix={} ensemble={} m={} n={} k={:?} trials={} seed={} cap={} l-max={} max-order={} p-max={} tol={:e} constants={} workers={workers}",
        a.claim,
        a.matrix.as_ref().map_or("generated".to_string(), |p| p.display().to_string()),
        a.ensemble,
        config.m,
        config.n,
        config.k_values,
        config.instances,
        config.seed,
        config.cap,
        params.l_max,
        params.max_order,
        params.p_max,
        params.tol,
        params.constants
    );
    let outcome = match fixed {
        Some(phi) => {
            let source = move |_seed: u64| Ok(phi.clone());
            run_suite(a.claim, &source, &config, &params)?
        }
        None => {
            if a.ensemble == Ensemble::Explicit {
                return Err(Error::InvalidConfig("generated instances need a random ensemble".into()));
            }
            let source = ensemble_source(a.ensemble, config.m, config.n);
            run_suite(a.claim, &source, &config, &params)?
        }
    };
    emit(&outcome.text, a.out.as_deref())?;
    if a.out.is_some() {
        println!("{} {}", a.claim, if outcome.passed { "passed" } else { "failed" });
    }
    Ok(if outcome.passed { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn grid(a: GridArgs, workers: usize) -> Result<i32> {
    let config = GridConfig {
        n: a.n,
        m_values: a.m,
        k_values: a.k,
        trials_per_cell: a.trials,
        ensemble: a.ensemble,
        master_seed: resolve_seed(a.seed, 2024)?,
        signal_model: a.model,
        success_tol: a.tol,
    };
    eprintln!(
        "config verb=grid n={} m={:?} k={:?} trials={} ensemble={} model={} seed={} tol={:e} workers={workers}",
        config.n,
        config.m_values,
        config.k_values,
        config.trials_per_cell,
        config.ensemble,
        config.signal_model,
        config.master_seed,
        config.success_tol
    );
    let result = run_recovery_grid(&config)?;
    match &a.out {
        Some(p) => export_results(&result, p)?,
        None => print!("{}", result.to_text()),
    }
    if let Some(p) = &a.svg {
        emit_svg_curves(&result.cells, p)?;
    }
    Ok(EXIT_OK)
}

fn fit(a: FitArgs) -> Result<i32> {
    eprintln!(
        "config verb=fit grid={} n={} threshold={}",
        a.grid.display(),
        a.n,
        a.threshold
    );
    let cells = parse_grid_csv(&io::read_to_string(&a.grid)?)?;
    let fit = fit_cells(&cells, a.n, a.threshold)?;
    emit(&fit.to_text(), a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn plot(a: PlotArgs) -> Result<i32> {
    eprintln!("config verb=plot grid={} out={}", a.grid.display(), a.out.display());
    let cells = parse_grid_csv(&io::read_to_string(&a.grid)?)?;
    emit_svg_curves(&cells, &a.out)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_verb_and_flag_are_usage_errors() {
        assert_eq!(run(["omplab", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["omplab", "gen", "--m", "4", "--n", "8", "--bogus", "1", "--out", "x"]), EXIT_USAGE);
        assert_eq!(run(["omplab", "check", "--claim", "lemma-9"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(["omplab", "--help"]), EXIT_OK);
    }

    #[test]
    fn error_mapping() {
        assert_eq!(exit_code(&Error::io("x", std::io::Error::other("boom"))), EXIT_IO);
        assert_eq!(exit_code(&Error::EmptySupport), EXIT_USAGE);
    }
}
