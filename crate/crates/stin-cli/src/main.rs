//! Scenario-file-driven front end: evaluate the closed-form coverage
//! analysis, run Monte Carlo simulations, cross-validate the two, and sweep
//! parameters. Emits long-format CSV (17 significant digits) or a JSON
//! envelope carrying the full resolved scenario and provenance.
//!
//! Exit codes: 0 ok, 1 quadrature nonconvergence, 2 config error,
//! 3 validation failure.

mod validate;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stin::analysis::{coverage_probability, load_aware_coverage, log_gamma_grid, CoverageCurve};
use stin::montecarlo::{empirical_coverage, percentile_rate_analytic, EmpiricalCurve, WILSON_Z};
use stin::numerics::QuadratureSpec;
use stin::scenario::{ScenarioConfig, ScenarioFile};
use stin::Error;

/// Commit the binary was built from, or "unknown" outside a checkout.
const GIT_HASH: &str = env!("GIT_HASH");

#[derive(Parser)]
#[command(
    name = "stin",
    version,
    about = "Downlink rate coverage of satellite-terrestrial integrated networks"
)]
struct Cli {
    /// Worker threads (default: all cores; env STIN_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    /// Smallest rate threshold in bits/s.
    #[arg(long, default_value_t = 1e5)]
    gamma_lo: f64,
    /// Largest rate threshold in bits/s.
    #[arg(long, default_value_t = 1e9)]
    gamma_hi: f64,
    /// Number of log-spaced thresholds.
    #[arg(long, default_value_t = 50)]
    gamma_points: usize,
}

impl GridArgs {
    fn build(&self) -> Result<Vec<f64>, Error> {
        if !(self.gamma_lo > 0.0 && self.gamma_lo.is_finite()) {
            return Err(Error::Config(format!(
                "--gamma-lo must be positive and finite, got {}",
                self.gamma_lo
            )));
        }
        if !(self.gamma_hi >= self.gamma_lo && self.gamma_hi.is_finite()) {
            return Err(Error::Config(format!(
                "--gamma-hi must be finite and >= --gamma-lo, got {}",
                self.gamma_hi
            )));
        }
        if self.gamma_points == 0 {
            return Err(Error::Config("--gamma-points must be at least 1".into()));
        }
        Ok(log_gamma_grid(self.gamma_lo, self.gamma_hi, self.gamma_points))
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a JSON envelope (config echo, provenance, curve) instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form coverage curve for a scenario.
    Analyze {
        scenario: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Rescale each layer's thresholds by its mean-load factor.
        #[arg(long)]
        load_aware: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimate the coverage curve by Monte Carlo network draws.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        load_aware: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cross-validate the analysis against Monte Carlo oracles.
    Validate {
        scenario: PathBuf,
        /// Trial budget for the curve cross-check; other checks scale off it.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Re-evaluate a scenario across values of one parameter.
    Sweep {
        scenario: PathBuf,
        /// Dotted TOML path and comma-separated values, e.g.
        /// `satellite.bias=1,2,5,10`.
        #[arg(long)]
        set: String,
        /// `median`, `p10`, or `coverage@<gamma_bps>`.
        #[arg(long)]
        metric: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        load_aware: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "exit_code": err.exit_code(),
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

/// Flag wins over STIN_THREADS; absent both, rayon picks all cores.
fn init_threads(flag: Option<usize>) {
    let from_env = std::env::var("STIN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = flag.or(from_env) {
        if n > 0 {
            // Ignore failure: the pool can only be set once per process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Analyze {
            scenario,
            grid,
            load_aware,
            out,
        } => {
            let (file, cfg) = load_scenario(&scenario)?;
            let grid = grid.build()?;
            let curve = if load_aware {
                load_aware_coverage(&cfg, &grid)?
            } else {
                coverage_probability(&cfg, &grid)?
            };
            let text = if out.json {
                analytic_json("analyze", &file, load_aware, None, &curve)?
            } else {
                analytic_csv(&curve)?
            };
            emit(&out.out, &text)
        }
        Command::Simulate {
            scenario,
            grid,
            trials,
            seed,
            load_aware,
            out,
        } => {
            let (file, cfg) = load_scenario(&scenario)?;
            let grid = grid.build()?;
            let curve = empirical_coverage(&cfg, &grid, trials, seed, load_aware)?;
            let text = if out.json {
                empirical_json(&file, load_aware, seed, &curve)?
            } else {
                empirical_csv(&curve)?
            };
            emit(&out.out, &text)
        }
        Command::Validate {
            scenario,
            trials,
            seed,
        } => {
            let (_, cfg) = load_scenario(&scenario)?;
            let report = validate::run_suite(&cfg, trials, seed)?;
            let mut failed = 0usize;
            for check in &report {
                let status = if check.pass { "PASS" } else { "FAIL" };
                println!("{status} {:<34} {}", check.name, check.detail);
                if !check.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Error::Validation(format!(
                    "{failed} of {} checks failed",
                    report.len()
                )));
            }
            println!("VALIDATION PASS ({} checks)", report.len());
            Ok(())
        }
        Command::Sweep {
            scenario,
            set,
            metric,
            grid,
            load_aware,
            out,
        } => {
            let text = run_sweep(&scenario, &set, &metric, &grid, load_aware)?;
            emit(&out.out, &text)
        }
    }
}

fn load_scenario(path: &PathBuf) -> Result<(ScenarioFile, ScenarioConfig), Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file = ScenarioFile::from_toml_str(&text)?;
    let cfg = file.resolve()?;
    Ok((file, cfg))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write stdout: {e}")))
        }
    }
}

/// 17 significant digits: round-trips f64 exactly.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn analytic_csv(curve: &CoverageCurve) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "gamma_bps",
        "p_cov",
        "p_cov_sat",
        "p_cov_terr",
        "pi_sat",
        "pi_terr",
        "quadrature_max_err",
    ])
    .map_err(csv_err)?;
    for p in &curve.points {
        w.write_record([
            fmt(p.gamma_bps),
            fmt(p.p_cov),
            fmt(p.p_cov_sat),
            fmt(p.p_cov_terr),
            fmt(curve.pi_sat),
            fmt(curve.pi_terr),
            fmt(p.quadrature_max_err),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn empirical_csv(curve: &EmpiricalCurve) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["gamma_bps", "p_cov", "wilson_halfwidth", "n_trials"])
        .map_err(csv_err)?;
    for j in 0..curve.thresholds_bps.len() {
        w.write_record([
            fmt(curve.thresholds_bps[j]),
            fmt(curve.coverage[j]),
            fmt(curve.wilson_halfwidth[j]),
            curve.n_trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv write failed: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, Error> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv not utf-8: {e}")))
}

fn tolerances_json() -> serde_json::Value {
    serde_json::json!({
        "quad_inner": {
            "abs_tol": QuadratureSpec::INNER.abs_tol,
            "rel_tol": QuadratureSpec::INNER.rel_tol,
        },
        "quad_outer": {
            "abs_tol": QuadratureSpec::OUTER.abs_tol,
            "rel_tol": QuadratureSpec::OUTER.rel_tol,
        },
        "wilson_z": WILSON_Z,
    })
}

fn analytic_json(
    command: &str,
    file: &ScenarioFile,
    load_aware: bool,
    seed: Option<u64>,
    curve: &CoverageCurve,
) -> Result<String, Error> {
    let value = serde_json::json!({
        "command": command,
        "git_hash": GIT_HASH,
        "scenario": file,
        "load_aware": load_aware,
        "seed": seed,
        "tolerances": tolerances_json(),
        "curve": curve,
    });
    serde_json::to_string_pretty(&value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Config(format!("json encode failed: {e}")))
}

fn empirical_json(
    file: &ScenarioFile,
    load_aware: bool,
    seed: u64,
    curve: &EmpiricalCurve,
) -> Result<String, Error> {
    let value = serde_json::json!({
        "command": "simulate",
        "git_hash": GIT_HASH,
        "scenario": file,
        "load_aware": load_aware,
        "seed": seed,
        "n_trials": curve.n_trials,
        "tolerances": tolerances_json(),
        "curve": curve,
    });
    serde_json::to_string_pretty(&value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Config(format!("json encode failed: {e}")))
}

// ---- Sweep ----------------------------------------------------------------

enum Metric {
    Median,
    P10,
    CoverageAt(f64),
}

impl Metric {
    fn parse(spec: &str) -> Result<Metric, Error> {
        match spec {
            "median" => Ok(Metric::Median),
            "p10" => Ok(Metric::P10),
            _ => {
                if let Some(rest) = spec.strip_prefix("coverage@") {
                    let gamma: f64 = rest.parse().map_err(|_| {
                        Error::Config(format!("bad coverage threshold in metric '{spec}'"))
                    })?;
                    if !(gamma >= 0.0) || !gamma.is_finite() {
                        return Err(Error::Config(format!(
                            "coverage threshold must be finite and >= 0, got {gamma}"
                        )));
                    }
                    Ok(Metric::CoverageAt(gamma))
                } else {
                    Err(Error::Config(format!(
                        "unknown metric '{spec}' (expected median, p10, or coverage@<gamma_bps>)"
                    )))
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Metric::Median => "median_rate_bps",
            Metric::P10 => "p10_rate_bps",
            Metric::CoverageAt(_) => "coverage",
        }
    }

    fn evaluate(
        &self,
        cfg: &ScenarioConfig,
        grid: &[f64],
        load_aware: bool,
    ) -> Result<f64, Error> {
        let curve = |g: &[f64]| {
            if load_aware {
                load_aware_coverage(cfg, g)
            } else {
                coverage_probability(cfg, g)
            }
        };
        match self {
            Metric::Median => percentile_rate_analytic(&curve(grid)?, 50.0),
            Metric::P10 => percentile_rate_analytic(&curve(grid)?, 10.0),
            Metric::CoverageAt(gamma) => Ok(curve(&[*gamma])?.points[0].p_cov),
        }
    }
}

/// Set a dotted-path key in a TOML document, using an integer literal when
/// the value is integral so integer-typed schema fields still parse.
fn patch_toml(doc: &mut toml::Value, path: &str, value: f64) -> Result<(), Error> {
    let mut node = doc;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(Error::Config(format!("empty segment in sweep path '{path}'")));
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("sweep path '{path}' crosses a non-table")))?;
        if parts.peek().is_none() {
            let literal = if value.fract() == 0.0 && value.abs() < 2f64.powi(53) {
                toml::Value::Integer(value as i64)
            } else {
                toml::Value::Float(value)
            };
            table.insert(part.to_string(), literal);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    unreachable!("split yields at least one part");
}

fn run_sweep(
    scenario: &PathBuf,
    set: &str,
    metric_spec: &str,
    grid_args: &GridArgs,
    load_aware: bool,
) -> Result<String, Error> {
    let metric = Metric::parse(metric_spec)?;
    let grid = grid_args.build()?;
    let (path, values_text) = set.split_once('=').ok_or_else(|| {
        Error::Config(format!("--set expects <dotted.path>=<v1,v2,...>, got '{set}'"))
    })?;
    let values: Vec<f64> = values_text
        .split(',')
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad sweep value '{v}'")))
        })
        .collect::<Result<_, _>>()?;

    let text = fs::read_to_string(scenario)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", scenario.display())))?;
    let base: toml::Value = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("scenario parse failed: {e}")))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "value", "metric", "result"])
        .map_err(csv_err)?;
    for &v in &values {
        let mut doc = base.clone();
        patch_toml(&mut doc, path, v)?;
        let doc_text = toml::to_string(&doc)
            .map_err(|e| Error::Config(format!("patched scenario serialize failed: {e}")))?;
        let cfg = ScenarioFile::from_toml_str(&doc_text)?.resolve()?;
        let result = metric.evaluate(&cfg, &grid, load_aware)?;
        w.write_record([path.to_string(), fmt(v), metric.name().to_string(), fmt(result)])
            .map_err(csv_err)?;
    }
    finish_csv(w)
}
