//! Command-line front end: solve, sweep, verify, simulate, and kappabar
//! commands with machine-readable JSON/CSV output and a flat key-value
//! config file.

use crate::dynamics::{
    self, evolve_semigroup, fit_exponent, fit_exponent_from_masses, quadratic_form_check,
    simulate_paths, ModelParams, TestFunction,
};
use crate::error::{Error, Result};
use crate::kernels::Strategy;
use crate::spectral::{
    eigen_step, kappa_bar, kappa_bar_residual_at, optimal_strategy, rayleigh_eigen, solve_optimal,
    GridSpec,
};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// Output schema version carried by every record.
pub const ARTIFACT_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "besselopt",
    about = "Optimal diffusion-rate switching for time-changed Bessel processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the optimal exponent and cutoff at given (n, V).
    Solve(CmdArgs),
    /// Evaluate the solver over a grid of n and/or V values.
    Sweep(CmdArgs),
    /// Cross-check the eigenvalue by independent methods.
    Verify(CmdArgs),
    /// Monte-Carlo simulate the diffusion and fit the tail exponent.
    Simulate(CmdArgs),
    /// Compute the limiting cutoff for a given dimension.
    Kappabar(CmdArgs),
}

#[derive(clap::Args, Debug, Default, Clone)]
pub struct CmdArgs {
    /// Dimension parameter, in (0, 2).
    #[arg(long)]
    pub n: Option<f64>,
    /// Rate ratio V = sqrt(r2/r1) (>= 1); alternative to --r1/--r2.
    #[arg(long = "V")]
    pub v_ratio: Option<f64>,
    /// Slow diffusion rate (default 1).
    #[arg(long)]
    pub r1: Option<f64>,
    /// Fast diffusion rate (default V^2 * r1).
    #[arg(long)]
    pub r2: Option<f64>,
    /// Horizon time for simulation (default 1).
    #[arg(long = "T")]
    pub t_horizon: Option<f64>,
    /// Starting radius for simulation (default 0).
    #[arg(long)]
    pub y: Option<f64>,
    /// Tolerance override for verification checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Grid: for verify, a cell count; for sweep, a range spec
    /// `var=lo:hi:count[:log]` with var in {n, V} (repeatable).
    #[arg(long)]
    pub grid: Vec<String>,
    /// Number of Monte-Carlo paths (default 100000).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Euler time step for simulation (default T/1000).
    #[arg(long)]
    pub dt: Option<f64>,
    /// RNG seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker pool size (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output format: json or csv (default json).
    #[arg(long)]
    pub format: Option<String>,
    /// Output path (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key-value config file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Fully resolved configuration after merging the config file, flags, and
/// defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: f64,
    pub v_ratio: f64,
    pub r1: f64,
    pub r2: f64,
    pub t_horizon: f64,
    pub y_start: f64,
    pub tol: Option<f64>,
    pub grid: Vec<String>,
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// One flat output record; unused fields stay empty.  Every numeric output
/// is paired with a residual or error-estimate field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ResultRecord {
    pub artifact_version: String,
    pub command: String,
    /// Record role: solution | kappabar | check | fit | bin | rate_fit | error.
    pub kind: String,
    pub check_name: Option<String>,
    pub error: Option<String>,
    pub n: Option<f64>,
    pub v_ratio: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub t_horizon: Option<f64>,
    pub y_start: Option<f64>,
    pub dt: Option<f64>,
    pub grid_cells: Option<u64>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub residual_eq1: Option<f64>,
    pub kappa: Option<f64>,
    pub residual_eq2: Option<f64>,
    pub kappa_bar: Option<f64>,
    pub kappa_bar_residual: Option<f64>,
    pub eigenvalue_e: Option<f64>,
    pub gamma: Option<f64>,
    pub cutoff: Option<f64>,
    pub inflection_x: Option<f64>,
    pub degenerate: Option<bool>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub target_slope: Option<f64>,
    pub eps: Option<f64>,
    pub mass: Option<f64>,
    pub count: Option<u64>,
    pub decay_rate: Option<f64>,
    pub value: Option<f64>,
    pub target: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
    pub wall_time_s: Option<f64>,
}

impl ResultRecord {
    pub fn new(command: &str, kind: &str) -> Self {
        ResultRecord {
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            kind: kind.to_string(),
            ..Default::default()
        }
    }
}

/// Entry point: parse arguments, dispatch, and map errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    run_command(&cli.command)
}

pub fn run_command(command: &Command) -> i32 {
    let (name, args) = match command {
        Command::Solve(a) => ("solve", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Verify(a) => ("verify", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Kappabar(a) => ("kappabar", a),
    };
    let cfg = match resolve_config(name, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("besselopt: {e}");
            return EXIT_VALIDATION;
        }
    };
    if let Some(t) = cfg.threads {
        // Best effort: the global pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let outcome = match name {
        "solve" => cmd_solve(&cfg),
        "sweep" => cmd_sweep(&cfg),
        "verify" => cmd_verify(&cfg),
        "simulate" => cmd_simulate(&cfg),
        "kappabar" => cmd_kappabar(&cfg),
        _ => unreachable!(),
    };
    match outcome {
        Ok((records, code)) => match emit(&records, cfg.format, cfg.out.as_deref()) {
            Ok(()) => code,
            Err(e) => {
                eprintln!("besselopt: {e}");
                EXIT_SOLVER
            }
        },
        Err(e) => {
            eprintln!("besselopt: {e}");
            match e {
                Error::Domain(_) | Error::Config(_) => EXIT_VALIDATION,
                _ => EXIT_SOLVER,
            }
        }
    }
}

/// Parse a flat `KEY=VALUE` config file (# comments, blank lines allowed).
fn parse_config_file(path: &std::path::Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected KEY=VALUE, got {line:?}",
                path.display(),
                i + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_from<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("config key {key}: cannot parse {raw:?}"))),
    }
}

fn resolve_config(command: &str, args: &CmdArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    const KNOWN: &[&str] = &[
        "n", "V", "r1", "r2", "T", "y", "tol", "grid", "paths", "dt", "seed", "threads",
        "format", "out",
    ];
    for key in file.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
    }
    let n = args
        .n
        .or(parse_from(&file, "n")?)
        .ok_or_else(|| Error::Config("missing required parameter n".into()))?;
    if !(n > 0.0 && n < 2.0) {
        return Err(Error::Config(format!("n = {n} outside the valid range (0, 2)")));
    }
    let v_flag = args.v_ratio.or(parse_from(&file, "V")?);
    let r1_flag = args.r1.or(parse_from(&file, "r1")?);
    let r2_flag = args.r2.or(parse_from(&file, "r2")?);
    let (v_ratio, r1, r2) = match (v_flag, r1_flag, r2_flag) {
        (Some(v), None, None) => (v, 1.0, v * v),
        (None, Some(r1), Some(r2)) => ((r2 / r1).sqrt(), r1, r2),
        (None, None, None) => (1.0, 1.0, 1.0),
        (Some(v), Some(r1), None) => (v, r1, v * v * r1),
        _ => {
            return Err(Error::Config(
                "give either --V (with optional --r1) or both --r1 and --r2".into(),
            ))
        }
    };
    if !(r1 > 0.0 && r2 >= r1) {
        return Err(Error::Config(format!(
            "rates must satisfy 0 < r1 <= r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    if !(v_ratio >= 1.0) {
        return Err(Error::Config(format!("V = {v_ratio} must be >= 1")));
    }
    let t_horizon = args.t_horizon.or(parse_from(&file, "T")?).unwrap_or(1.0);
    if !(t_horizon > 0.0) {
        return Err(Error::Config(format!("T = {t_horizon} must be positive")));
    }
    let y_start = args.y.or(parse_from(&file, "y")?).unwrap_or(0.0);
    if !(y_start >= 0.0) {
        return Err(Error::Config(format!("y = {y_start} must be nonnegative")));
    }
    let mut grid = args.grid.clone();
    if grid.is_empty() {
        if let Some(g) = file.get("grid") {
            grid = g.split(',').map(|s| s.trim().to_string()).collect();
        }
    }
    let paths = args.paths.or(parse_from(&file, "paths")?).unwrap_or(100_000);
    let dt = args
        .dt
        .or(parse_from(&file, "dt")?)
        .unwrap_or(t_horizon / 1000.0);
    if !(dt > 0.0 && dt <= t_horizon / 1000.0) {
        return Err(Error::Config(format!(
            "dt = {dt} must be in (0, T/1000] = (0, {}]",
            t_horizon / 1000.0
        )));
    }
    let seed = args.seed.or(parse_from(&file, "seed")?).unwrap_or(0);
    let threads = match args.threads.or(parse_from(&file, "threads")?) {
        Some(0) => return Err(Error::Config("threads must be positive".into())),
        other => other,
    };
    let format = match args
        .format
        .clone()
        .or(file.get("format").cloned())
        .unwrap_or_else(|| "json".into())
        .as_str()
    {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        other => {
            return Err(Error::Config(format!(
                "format must be json or csv, got {other:?}"
            )))
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from));
    let _ = command;
    Ok(RunConfig {
        n,
        v_ratio,
        r1,
        r2,
        t_horizon,
        y_start,
        tol: args.tol.or(parse_from(&file, "tol")?),
        grid,
        paths,
        dt,
        seed,
        threads,
        format,
        out,
    })
}

/// Verify-style cell count from the `--grid` flag (a bare integer).
fn grid_cells(cfg: &RunConfig) -> Result<usize> {
    match cfg.grid.first() {
        None => Ok(4000),
        Some(raw) => raw
            .parse()
            .map_err(|_| Error::Config(format!("--grid {raw:?}: expected a cell count"))),
    }
}

type CommandOutput = (Vec<ResultRecord>, i32);

fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput> {
    let start = Instant::now();
    let sol = solve_optimal(cfg.n, cfg.v_ratio)?;
    let (step, _) = optimal_strategy(cfg.n, cfg.r1, cfg.r2)?;
    let mut rec = ResultRecord::new("solve", "solution");
    rec.n = Some(cfg.n);
    rec.v_ratio = Some(cfg.v_ratio);
    rec.r1 = Some(cfg.r1);
    rec.r2 = Some(cfg.r2);
    rec.eta = Some(sol.eta);
    rec.residual_eq1 = Some(sol.residual_eq1);
    rec.kappa = Some(sol.kappa);
    rec.residual_eq2 = Some(sol.residual_eq2);
    rec.eigenvalue_e = Some(sol.eigenvalue_e);
    rec.gamma = Some(sol.gamma);
    rec.cutoff = Some(step.cutoff_c);
    rec.degenerate = Some(sol.degenerate);
    rec.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok((vec![rec], EXIT_OK))
}

fn cmd_kappabar(cfg: &RunConfig) -> Result<CommandOutput> {
    let start = Instant::now();
    let kb = kappa_bar(cfg.n)?;
    let residual = kappa_bar_residual_at(cfg.n, kb)?;
    let mut rec = ResultRecord::new("kappabar", "kappabar");
    rec.n = Some(cfg.n);
    rec.kappa_bar = Some(kb);
    rec.kappa_bar_residual = Some(residual);
    rec.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok((vec![rec], EXIT_OK))
}

/// One axis of a sweep: `var=lo:hi:count[:log]`.
struct SweepAxis {
    var: String,
    points: Vec<f64>,
}

fn parse_axis(raw: &str) -> Result<SweepAxis> {
    let err = || Error::Config(format!("--grid {raw:?}: expected var=lo:hi:count[:log]"));
    let (var, rest) = raw.split_once('=').ok_or_else(err)?;
    if var != "n" && var != "V" {
        return Err(Error::Config(format!(
            "--grid {raw:?}: sweep variable must be n or V"
        )));
    }
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 && parts.len() != 4 {
        return Err(err());
    }
    let lo: f64 = parts[0].parse().map_err(|_| err())?;
    let hi: f64 = parts[1].parse().map_err(|_| err())?;
    let count: usize = parts[2].parse().map_err(|_| err())?;
    let log = match parts.get(3) {
        None | Some(&"lin") => false,
        Some(&"log") => true,
        Some(_) => return Err(err()),
    };
    if count < 2 || !(hi > lo) || (log && !(lo > 0.0)) {
        return Err(err());
    }
    let points = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect();
    Ok(SweepAxis {
        var: var.to_string(),
        points,
    })
}

fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.grid.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one --grid var=lo:hi:count[:log] axis".into(),
        ));
    }
    let axes: Vec<SweepAxis> = cfg.grid.iter().map(|s| parse_axis(s)).collect::<Result<_>>()?;
    if axes.len() > 2 || (axes.len() == 2 && axes[0].var == axes[1].var) {
        return Err(Error::Config(
            "sweep takes at most one axis per variable".into(),
        ));
    }
    let n_axis = axes.iter().find(|a| a.var == "n");
    let v_axis = axes.iter().find(|a| a.var == "V");
    let n_points = n_axis.map_or_else(|| vec![cfg.n], |a| a.points.clone());
    let v_points = v_axis.map_or_else(|| vec![cfg.v_ratio], |a| a.points.clone());
    for &n in &n_points {
        if !(n > 0.0 && n < 2.0) {
            return Err(Error::Config(format!("sweep n = {n} outside (0, 2)")));
        }
    }
    let pairs: Vec<(f64, f64)> = n_points
        .iter()
        .flat_map(|&n| v_points.iter().map(move |&v| (n, v)))
        .collect();
    use rayon::prelude::*;
    let results: Vec<ResultRecord> = pairs
        .par_iter()
        .map(|&(n, v)| {
            let start = Instant::now();
            let mut rec = ResultRecord::new("sweep", "solution");
            rec.n = Some(n);
            rec.v_ratio = Some(v);
            match solve_optimal(n, v).and_then(|sol| Ok((sol, kappa_bar(n)?))) {
                Ok((sol, kb)) => {
                    rec.eta = Some(sol.eta);
                    rec.residual_eq1 = Some(sol.residual_eq1);
                    rec.kappa = Some(sol.kappa);
                    rec.residual_eq2 = Some(sol.residual_eq2);
                    rec.eigenvalue_e = Some(sol.eigenvalue_e);
                    rec.gamma = Some(sol.gamma);
                    rec.kappa_bar = Some(kb);
                    rec.degenerate = Some(sol.degenerate);
                }
                Err(e) => {
                    rec.kind = "error".into();
                    rec.error = Some(e.to_string());
                }
            }
            rec.wall_time_s = Some(start.elapsed().as_secs_f64());
            rec
        })
        .collect();
    let mut records = results;
    // Rate-fit summary of the large-V law n - eta ~ V^{n-2}, emitted when a
    // single-n sweep covers V >= 10 with enough successful points.
    if n_points.len() == 1 {
        let mut pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.kind == "solution")
            .filter_map(|r| match (r.v_ratio, r.eta) {
                (Some(v), Some(eta)) if v >= 10.0 && n_points[0] - eta > 0.0 => {
                    Some((v, n_points[0] - eta))
                }
                _ => None,
            })
            .collect();
        if pts.len() >= 4 {
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            let eps: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let gaps: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(fit) = fit_exponent_from_masses(&eps, &gaps) {
                let mut rec = ResultRecord::new("sweep", "rate_fit");
                rec.n = Some(n_points[0]);
                rec.slope = Some(fit.slope);
                rec.slope_stderr = Some(fit.stderr);
                rec.target_slope = Some(n_points[0] - 2.0);
                records.push(rec);
            }
        }
    }
    Ok((records, EXIT_OK))
}

struct CheckSink {
    records: Vec<ResultRecord>,
    all_pass: bool,
}

impl CheckSink {
    fn push(&mut self, name: &str, value: f64, target: f64, tolerance: f64) {
        let residual = (value - target).abs();
        let pass = residual <= tolerance;
        self.all_pass &= pass;
        let mut rec = ResultRecord::new("verify", "check");
        rec.check_name = Some(name.to_string());
        rec.value = Some(value);
        rec.target = Some(target);
        rec.residual = Some(residual);
        rec.tolerance = Some(tolerance);
        rec.pass = Some(pass);
        self.records.push(rec);
    }

    /// A one-sided check: `value` must be below `target` by more than `margin`.
    fn push_below(&mut self, name: &str, value: f64, target: f64, margin: f64) {
        let pass = value < target - margin;
        self.all_pass &= pass;
        let mut rec = ResultRecord::new("verify", "check");
        rec.check_name = Some(name.to_string());
        rec.value = Some(value);
        rec.target = Some(target);
        rec.residual = Some(target - value);
        rec.tolerance = Some(margin);
        rec.pass = Some(pass);
        self.records.push(rec);
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput> {
    let start = Instant::now();
    let cells = grid_cells(cfg)?;
    let sol = solve_optimal(cfg.n, cfg.v_ratio)?;
    let (step, _) = optimal_strategy(cfg.n, cfg.r1, cfg.r2)?;
    let strategy = Strategy::Step(step);
    let c_star = step.cutoff_c.max(cfg.n.sqrt() * cfg.r1.sqrt());
    let mut sink = CheckSink {
        records: Vec::new(),
        all_pass: true,
    };
    // 1. Matching-equation eigenvalue at the solved cutoff.
    let es = eigen_step(cfg.n, cfg.r1, cfg.r2, c_star)?;
    sink.push(
        "eigen_step_vs_solver",
        es.eigenvalue_e,
        sol.eigenvalue_e,
        cfg.tol.unwrap_or(1e-8),
    );
    // 2. Discretized Rayleigh-quotient eigenvalue.
    let x_max = c_star + 8.0 * cfg.r2.sqrt();
    let eig = rayleigh_eigen(cfg.n, &strategy, GridSpec { x_max, cells })?;
    sink.push(
        "rayleigh_vs_eigen_step",
        eig.eigenvalue,
        es.eigenvalue_e,
        cfg.tol.unwrap_or(1e-4),
    );
    // 3. Semigroup decay rate (half the eigenvalue).  The test Gaussian must
    // decay faster than e^{-x²/(4 r2)} so that weighted integrals against
    // w ~ e^{x²/(2 r2)} converge well inside the grid.
    let scale = (2.0 * cfg.r2).sqrt();
    let run = evolve_semigroup(
        cfg.n,
        &strategy,
        |x| (-(x / scale) * (x / scale)).exp(),
        GridSpec { x_max, cells },
        6.0,
        0.005,
    )?;
    sink.push(
        "semigroup_decay_vs_half_eigenvalue",
        2.0 * run.decay_rate,
        es.eigenvalue_e,
        cfg.tol.unwrap_or(1e-3),
    );
    // 4. Integration-by-parts identity for the quadratic form.
    let gaussian = |x: f64| (-(x / scale) * (x / scale)).exp();
    let d_gaussian = move |x: f64| -2.0 * x / (scale * scale) * gaussian(x);
    let d2_gaussian = move |x: f64| {
        (4.0 * x * x / (scale * scale) - 2.0) / (scale * scale) * gaussian(x)
    };
    let report = quadratic_form_check(
        cfg.n,
        &strategy,
        &TestFunction {
            f: &gaussian,
            df: &d_gaussian,
            d2f: &d2_gaussian,
        },
        x_max,
    )?;
    sink.push("quadratic_form_residual", report.rel_residual, 0.0, 1e-6);
    // 5. Perturbed cutoff must be strictly suboptimal.
    if !sol.degenerate {
        let perturbed = eigen_step(cfg.n, cfg.r1, cfg.r2, 1.2 * c_star)?;
        sink.push_below(
            "perturbed_cutoff_below_optimum",
            perturbed.eigenvalue_e,
            es.eigenvalue_e,
            1e-8,
        );
    }
    let code = if sink.all_pass { EXIT_OK } else { EXIT_VERIFICATION };
    let mut records = sink.records;
    if let Some(first) = records.first_mut() {
        first.n = Some(cfg.n);
        first.v_ratio = Some(cfg.v_ratio);
        first.grid_cells = Some(cells as u64);
        first.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok((records, code))
}

fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let start = Instant::now();
    let params = ModelParams {
        n: cfg.n,
        r1: cfg.r1,
        r2: cfg.r2,
        t_horizon: cfg.t_horizon,
        y_start: cfg.y_start,
    };
    let (strategy, target_slope) = if cfg.r2 > cfg.r1 {
        let (step, sol) = optimal_strategy(cfg.n, cfg.r1, cfg.r2)?;
        (Strategy::Step(step), cfg.n - sol.eta)
    } else {
        (Strategy::constant(cfg.r1), cfg.n)
    };
    let samples = simulate_paths(&params, &strategy, cfg.paths, cfg.dt, cfg.seed)?;
    let eps_grid = dynamics::default_eps_grid(&params, &samples, 50);
    let fit = fit_exponent(&samples, &eps_grid)?;
    let mut records = Vec::new();
    let mut rec = ResultRecord::new("simulate", "fit");
    rec.n = Some(cfg.n);
    rec.v_ratio = Some(cfg.v_ratio);
    rec.r1 = Some(cfg.r1);
    rec.r2 = Some(cfg.r2);
    rec.t_horizon = Some(cfg.t_horizon);
    rec.y_start = Some(cfg.y_start);
    rec.dt = Some(cfg.dt);
    rec.paths = Some(cfg.paths as u64);
    rec.seed = Some(cfg.seed);
    rec.slope = Some(fit.slope);
    rec.slope_stderr = Some(fit.stderr);
    rec.target_slope = Some(target_slope);
    rec.wall_time_s = Some(start.elapsed().as_secs_f64());
    records.push(rec);
    let counts = fit.counts.as_deref().unwrap_or(&[]);
    for (i, &eps) in fit.eps_grid.iter().enumerate() {
        let mut bin = ResultRecord::new("simulate", "bin");
        bin.seed = Some(cfg.seed);
        bin.eps = Some(eps);
        bin.mass = Some(fit.masses[i]);
        bin.count = counts.get(i).copied();
        records.push(bin);
    }
    Ok((records, EXIT_OK))
}

/// `f64` with 17 significant digits; parses back to the identical bits.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_value(records: &[ResultRecord]) -> Result<Value> {
    Ok(serde_json::to_value(records)?)
}

/// Print a JSON value with all floating-point numbers at 17 significant
/// digits (serde_json's default shortest-round-trip form can be shorter).
fn write_json(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(u) = num.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = num.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt17(num.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                write_json(out, item);
            }
            out.push_str("\n]");
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_json(out, item);
            }
            out.push('}');
        }
    }
}

pub fn records_to_json(records: &[ResultRecord]) -> Result<String> {
    let mut out = String::new();
    write_json(&mut out, &json_value(records)?);
    out.push('\n');
    Ok(out)
}

pub fn records_from_json(text: &str) -> Result<Vec<ResultRecord>> {
    Ok(serde_json::from_str(text)?)
}

fn csv_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(num) => {
            if let Some(u) = num.as_u64() {
                u.to_string()
            } else if let Some(i) = num.as_i64() {
                i.to_string()
            } else {
                fmt17(num.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn records_to_csv(records: &[ResultRecord]) -> Result<String> {
    let value = json_value(records)?;
    let rows = value.as_array().expect("record array");
    let Some(first) = rows.first() else {
        return Ok(String::new());
    };
    let headers: Vec<&String> = first.as_object().expect("record object").keys().collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&headers)?;
    for row in rows {
        let map = row.as_object().expect("record object");
        let cells: Vec<String> = headers.iter().map(|h| csv_cell(&map[h.as_str()])).collect();
        writer.write_record(&cells)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

pub fn records_from_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let mut map = serde_json::Map::new();
        for (header, cell) in headers.iter().zip(row.iter()) {
            if cell.is_empty() {
                continue;
            }
            const STRING_FIELDS: &[&str] =
                &["artifact_version", "command", "kind", "check_name", "error"];
            let value = if STRING_FIELDS.contains(&header) {
                Value::String(cell.to_string())
            } else if cell == "true" || cell == "false" {
                Value::Bool(cell == "true")
            } else if let Ok(u) = cell.parse::<u64>() {
                Value::Number(u.into())
            } else if let Ok(f) = cell.parse::<f64>() {
                serde_json::Number::from_f64(f)
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            } else {
                Value::String(cell.to_string())
            };
            map.insert(header.to_string(), value);
        }
        records.push(serde_json::from_value(Value::Object(map))?);
    }
    Ok(records)
}

fn emit(records: &[ResultRecord], format: OutputFormat, out: Option<&std::path::Path>) -> Result<()> {
    let text = match format {
        OutputFormat::Json => records_to_json(records)?,
        OutputFormat::Csv => records_to_csv(records)?,
    };
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
