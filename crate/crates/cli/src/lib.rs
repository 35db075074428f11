//! Command-line front end for `argen-core`.
//!
//! Three subcommands: `solve` runs one outer solve and writes its trace,
//! `bench` sweeps tolerances over problems and norms, and `region` classifies
//! a grid of steps of a two-dimensional regularized model.
//!
//! Exit codes: 0 on certified termination, 2 when a solve stops without a
//! certificate (the trace is still written), 1 on usage or I/O errors, in
//! which case no output file is created.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use argen_core::ar_driver::{self, Algorithm, Status};
use argen_core::bench::{loglog_slope, run_cell, start_point, BenchRow, Cell, Sweep};
use argen_core::problems::builtin_problem;
use argen_core::region::{connected_components, region_scan, RegionParams};
use argen_core::{ARConfig, Norm, RqminMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

pub mod trace;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] argen_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Parser)]
#[command(name = "argen", version, about = "Adaptive cubic regularization in l1, l2 and linf norms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize a built-in problem and write the iteration trace.
    Solve(SolveArgs),
    /// Sweep tolerances over problems and norms; one CSV row per run.
    Bench(BenchArgs),
    /// Classify grid points of a 2-D regularized model for contour plots.
    Region(RegionArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Eps1,
    Eps2,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value = "ar2gn")]
    pub algo: Algorithm,
    /// Taylor degree; AR2GN requires 2.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value = "l2")]
    pub norm: Norm,
    #[arg(long, default_value_t = 1e-5)]
    pub eps1: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Inner solver variant: full, relaxed1 or relaxed2.
    #[arg(long)]
    pub inner: Option<RqminMode>,
    #[arg(long, default_value_t = 500)]
    pub max_outer: usize,
    /// Try the Newton step first when the Hessian is positive definite.
    #[arg(long)]
    pub newton_first: bool,
    /// Trace destination; standard output when omitted.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Perturb the standard start by seeded U[-0.1, 0.1] noise.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "ar2gn")]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    /// Comma-separated `name` or `name:n` entries.
    #[arg(long, value_delimiter = ',', required = true)]
    pub problems: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "l1,l2,linf")]
    pub norms: Vec<Norm>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_list: Vec<f64>,
    /// Which tolerance the list sets; the other stays at 1e-5.
    #[arg(long, value_enum, default_value = "eps1")]
    pub sweep: SweepArg,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_outer: usize,
    /// Results destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RegionArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,1", allow_hyphen_values = true)]
    pub u: Vec<f64>,
    #[arg(long, default_value_t = 6.0)]
    pub sigma: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0", allow_hyphen_values = true)]
    pub g: Vec<f64>,
    #[arg(long, default_value = "l2")]
    pub norm: Norm,
    #[arg(long, default_value_t = 801)]
    pub grid: usize,
    /// Half-width of the scanned square; defaults to the level-set radius bound.
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub tol1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tol2: f64,
    /// Grid destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads(std::env::var("ARGEN_THREADS").ok().as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Region(a) => cmd_region(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// `ARGEN_THREADS` caps the worker pool; unset means one worker per core.
fn configure_threads(var: Option<&str>) -> Result<(), CliError> {
    let Some(v) = var else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("ARGEN_THREADS must be a positive integer, got {v:?}")))?;
    // A second initialization (tests calling in-process) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn check_unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must lie in (0, 1], got {v}")))
    }
}

fn base_config(algo: Algorithm, p: u32, sigma0: f64, max_outer: usize) -> Result<ARConfig, CliError> {
    if algo == Algorithm::Ar2gn && p != 2 {
        return Err(CliError::Usage(format!("ar2gn requires --p 2, got {p}")));
    }
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(CliError::Usage(format!("--sigma0 must be positive, got {sigma0}")));
    }
    let defaults = ARConfig::default();
    let cfg = ARConfig {
        p,
        sigma0,
        sigma_min: defaults.sigma_min.min(sigma0),
        max_outer,
        ..defaults
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Open the destination only after all validation has passed.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn cmd_solve(a: &SolveArgs) -> Result<ExitCode, CliError> {
    check_unit_interval("eps1", a.eps1)?;
    check_unit_interval("eps2", a.eps2)?;
    let cfg = ARConfig {
        eps1: a.eps1,
        eps2: a.eps2,
        inner: a.inner,
        newton_first: a.newton_first,
        ..base_config(a.algo, a.p, a.sigma0, a.max_outer)?
    };
    let mut problem = builtin_problem(&a.problem, a.n).map_err(|e| CliError::Usage(e.to_string()))?;
    let x0 = match a.seed {
        Some(seed) => start_point(&a.problem, a.n, seed, 1),
        None => start_point(&a.problem, a.n, 0, 0),
    };

    let (trace, failure) = match ar_driver::run(a.algo, &mut problem, &x0, &cfg, a.norm) {
        Ok((_, trace)) => (trace, None),
        Err(fail) => (fail.trace, Some(fail.reason)),
    };
    let rows = trace::rows(&trace);
    let mut out = sink(a.trace.as_deref())?;
    match a.format {
        Format::Csv => trace::write_csv(&mut out, &rows)?,
        Format::Json => trace::write_json(&mut out, &rows)?,
    }
    out.flush()?;

    let last = trace.last().expect("a trace always has a terminal record");
    eprintln!(
        "{} {} {}: status {:?}, {} iterations ({} successful), f = {}, dual grad norm = {}, n_f = {}, n_g = {}, n_H = {}",
        a.algo,
        a.problem,
        a.norm,
        trace.status,
        trace.iterations(),
        trace.successful,
        trace::fmt_float(last.f),
        trace::fmt_float(last.dual_grad_norm),
        trace.n_f,
        trace.n_g,
        trace.n_h,
    );
    Ok(match (trace.status, failure) {
        (Status::Converged, None) => ExitCode::SUCCESS,
        (_, reason) => {
            if let Some(r) = reason {
                eprintln!("no certified termination: {r}");
            }
            ExitCode::from(2)
        }
    })
}

/// `name` or `name:n`; bare names use dimension 2.
fn parse_problem(entry: &str) -> Result<(String, usize), CliError> {
    let (name, n) = match entry.split_once(':') {
        Some((name, n)) => {
            let n = n.parse().map_err(|_| CliError::Usage(format!("bad dimension in {entry:?}")))?;
            (name, n)
        }
        None => (entry, 2),
    };
    builtin_problem(name, n).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((name.to_string(), n))
}

pub fn cmd_bench(a: &BenchArgs) -> Result<ExitCode, CliError> {
    if a.problems.is_empty() || a.norms.is_empty() || a.eps_list.is_empty() || a.repeats == 0 {
        return Err(CliError::Usage("empty sweep: need problems, norms, eps values and repeats ≥ 1".into()));
    }
    for &e in &a.eps_list {
        check_unit_interval("eps-list", e)?;
    }
    let cfg = base_config(a.algo, a.p, ARConfig::default().sigma0, a.max_outer)?;
    let problems: Vec<(String, usize)> = a.problems.iter().map(|s| parse_problem(s)).collect::<Result<_, _>>()?;
    let sweep = match a.sweep {
        SweepArg::Eps1 => Sweep::Eps1,
        SweepArg::Eps2 => Sweep::Eps2,
    };
    let mut cells = Vec::new();
    for (name, n) in &problems {
        for &norm in &a.norms {
            for &eps in &a.eps_list {
                for repeat in 0..a.repeats {
                    cells.push(Cell { algorithm: a.algo, problem: name.clone(), n: *n, norm, eps, sweep, repeat });
                }
            }
        }
    }

    let started = Instant::now();
    let results: Vec<BenchRow> = cells
        .par_iter()
        .map(|c| run_cell(c, &cfg, a.seed))
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    for row in &results {
        w.serialize(row)?;
    }
    w.flush()?;

    for (name, n) in &problems {
        for &norm in &a.norms {
            let mut eps = Vec::new();
            let mut counts = Vec::new();
            for &e in &a.eps_list {
                let group: Vec<&BenchRow> = results
                    .iter()
                    .filter(|r| &r.problem == name && r.n == *n && r.norm == norm && r.eps == e)
                    .collect();
                let mean = group.iter().map(|r| r.successful as f64).sum::<f64>() / group.len() as f64;
                eps.push(e);
                counts.push(mean.max(1.0));
            }
            if let Ok(slope) = loglog_slope(&eps, &counts) {
                eprintln!("{name}:{n}/{norm}: log-log slope of successful iterations {slope:.3}");
            }
        }
    }
    eprintln!("{} cells in {:.2} s", results.len(), started.elapsed().as_secs_f64());
    Ok(ExitCode::SUCCESS)
}

fn pair(name: &str, v: &[f64]) -> Result<[f64; 2], CliError> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::Usage(format!("--{name} needs exactly two comma-separated values"))),
    }
}

pub fn cmd_region(a: &RegionArgs) -> Result<ExitCode, CliError> {
    let params = RegionParams {
        u: pair("u", &a.u)?,
        sigma: a.sigma,
        g: pair("g", &a.g)?,
        norm: a.norm,
        grid: a.grid,
        half_width: a.half_width,
        tol1: a.tol1,
        tol2: a.tol2,
    };
    let scan = region_scan(&params).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut out = sink(a.out.as_deref())?;
    let join = |v: &[f64; 2]| format!("{},{}", trace::fmt_float(v[0]), trace::fmt_float(v[1]));
    writeln!(
        out,
        "# u={} sigma={} g={} norm={} grid={} half_width={} tol1={} tol2={} lambda_min={}",
        join(&params.u),
        trace::fmt_float(params.sigma),
        join(&params.g),
        params.norm,
        params.grid,
        trace::fmt_float(scan.half_width),
        trace::fmt_float(params.tol1),
        trace::fmt_float(params.tol2),
        trace::fmt_float(scan.lambda_min),
    )?;
    writeln!(out, "# cells are row-major: s1 varies slowest; flags are 1 (true) or 0 (false)")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s1", "s2", "descent_ok", "noc1_band", "noc2_ok"])?;
    let flag = |b: bool| if b { "1" } else { "0" };
    for c in &scan.cells {
        w.write_record([
            trace::fmt_float(c.s[0]).as_str(),
            trace::fmt_float(c.s[1]).as_str(),
            flag(c.descent_ok),
            flag(c.noc1_band),
            flag(c.noc2_ok),
        ])?;
    }
    w.flush()?;

    let count = |pick: fn(&argen_core::region::RegionCell) -> bool| scan.cells.iter().filter(|c| pick(c)).count();
    let band = connected_components(&scan.mask(|c| c.noc1_band), params.grid);
    eprintln!(
        "{} cells: descent {}, first-order band {} in {} components, second-order {}",
        scan.cells.len(),
        count(|c| c.descent_ok),
        count(|c| c.noc1_band),
        band.len(),
        count(|c| c.noc2_ok),
    );
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_variable_validated() {
        assert!(configure_threads(None).is_ok());
        assert!(configure_threads(Some("0")).is_err());
        assert!(configure_threads(Some("many")).is_err());
    }

    #[test]
    fn problem_specs() {
        assert_eq!(parse_problem("rosenbrock:5").unwrap(), ("rosenbrock".to_string(), 5));
        assert_eq!(parse_problem("sixhumpcamel").unwrap(), ("sixhumpcamel".to_string(), 2));
        assert!(parse_problem("sixhumpcamel:3").is_err());
        assert!(parse_problem("rosenbrock:x").is_err());
        assert!(parse_problem("nope").is_err());
    }

    #[test]
    fn config_checks() {
        assert!(base_config(Algorithm::Ar2gn, 1, 1.0, 10).is_err());
        assert!(base_config(Algorithm::Ar1pgn, 1, 0.0, 10).is_err());
        assert!(base_config(Algorithm::Ar1pgn, 3, 1.0, 10).is_err());
        let cfg = base_config(Algorithm::Ar1pgn, 1, 1e-12, 10).unwrap();
        assert_eq!(cfg.sigma_min, 1e-12);
    }
}
