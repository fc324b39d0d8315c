//! The `apev` command line: `analyze`, `constants`, `solve` and `lv-demo`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 contraction condition violated,
//! 3 no convergence, 4 invalid configuration or arguments. Every failure also
//! writes one JSON object on a single line to stderr.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::apfun::{find_almost_periods, Coefficient};
use crate::error::{Error, Result};
use crate::evolution::EvolutionSystem;
use crate::io::{to_json_string, write_json};
use crate::lotka::{demo_solver_defaults, lipschitz_bound, lv_demo, DemoOptions, LvNonlinearity};
use crate::solver::{
    constants, linear_bound_check, picard_solve, solve_linear, Constants, ContractionGate, ModalForcing, ModalSine,
    Plus, SolveConfig, Source, Trajectory,
};
use crate::spectral::eigenvalue;
use config::{Config, NonlinearityConfig};

#[derive(Debug, Parser)]
#[command(
    name = "apev",
    version,
    about = "Almost periodic analysis and mild solutions of semilinear parabolic systems"
)]
pub struct Cli {
    /// Output file (analyze, constants) or directory (solve, lv-demo).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "APEV_THREADS")]
    pub threads: Option<usize>,
    /// Seed of the randomized verification trials.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan a signal for almost periods and classify it.
    Analyze { config: PathBuf },
    /// Print the solution-operator constants.
    Constants {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long = "m-alpha", alias = "m_alpha", allow_negative_numbers = true)]
        m_alpha: f64,
        #[arg(long = "c-alpha", alias = "c_alpha", default_value_t = 0.0, allow_negative_numbers = true)]
        c_alpha: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        p: f64,
    },
    /// Compute the bounded mild solution of a linear or semilinear problem.
    Solve {
        config: PathBuf,
        #[arg(long, conflicts_with = "semilinear")]
        linear: bool,
        #[arg(long)]
        semilinear: bool,
        /// Iterate even if the contraction condition fails.
        #[arg(long)]
        force: bool,
    },
    /// Run the predator-prey pipeline and write its report bundle.
    LvDemo {
        config: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

/// Single-line JSON description of a failure.
pub fn error_line(err: &Error) -> String {
    let mut v = json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exitCode": err.exit_code(),
    });
    if let Error::Config { path, .. } = err {
        v["path"] = json!(path);
    }
    v.to_string()
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = Error::invalid(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", error_line(&err));
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            err.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        // a pool may already exist when called repeatedly in one process; results do not depend on it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Analyze { config } => cmd_analyze(config, cli.out.as_deref()),
        Command::Constants { alpha, gamma, delta, m_alpha, c_alpha, p } => {
            emit(&constants(*alpha, *gamma, *delta, *m_alpha, *c_alpha, *p)?, cli.out.as_deref())
        }
        Command::Solve { config, linear: _, semilinear, force } => {
            cmd_solve(config, *semilinear, *force, cli.out.as_deref())
        }
        Command::LvDemo { config, force } => cmd_lv_demo(config.as_deref(), *force, cli.seed, cli.out.as_deref()),
    }
}

/// Write JSON to `out` or stdout.
fn emit<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(to_json_string(value)?.as_bytes())?;
            Ok(())
        }
    }
}

pub fn cmd_analyze(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = Config::load(config)?;
    let analysis = cfg.analysis()?.clone();
    let signal = cfg.signal()?;
    let [lo, hi] = analysis.tau_range;
    let report = find_almost_periods(&signal, analysis.eps, analysis.norm(), (lo, hi), analysis.tau_step)?;
    emit(&report, out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveReport<T: Serialize> {
    mode: &'static str,
    delta: f64,
    constants: Constants,
    /// Constant the contraction condition is checked against.
    k_used: f64,
    result: T,
}

fn write_solution<T: Serialize>(u: &Trajectory, report: &SolveReport<T>, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut w = BufWriter::new(File::create(dir.join("solution.csv"))?);
            u.write_csv(&mut w)?;
            w.flush()?;
            write_json(&dir.join("report.json"), report)?;
            emit(report, None)
        }
        None => {
            let mut stdout = BufWriter::new(std::io::stdout().lock());
            u.write_csv(&mut stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn cmd_solve(config: &Path, semilinear: bool, force: bool, out: Option<&Path>) -> Result<()> {
    let cfg = Config::load(config)?;
    let system = cfg.system()?;
    let spatial = cfg.spatial()?;
    let solver = cfg.solver_over(&SolveConfig::default())?;
    let d1 = system.d1.clone();
    let d2 = system.d2.clone().unwrap_or_else(|| d1.clone());
    let b = system.b.clone().unwrap_or(Coefficient::constant(0.0));
    let window = (solver.t0 - solver.tail_cut - 1.0, solver.t1 + solver.tail_cut + 1.0);
    let sys = EvolutionSystem::new(d1, d2, b, spatial.length, spatial.modes, window, 2.5e-3)?;
    let delta = sys.delta();
    solver.validate(delta)?;
    let forcing = ModalForcing::new(2, spatial.modes, cfg.forcing.clone())
        .map_err(|e| Error::config("forcing", e.to_string()))?;
    let gamma = solver.gamma_ratio * delta;
    let m_alpha = sys.m_alpha_bound(solver.alpha, gamma)?;
    let k = constants(solver.alpha, gamma, delta, m_alpha, 0.0, solver.p)?;
    let k_used = k.k_inf.max(k.k_contraction);

    if !semilinear {
        let u = solve_linear(&sys, &forcing, &solver)?;
        let bounds = linear_bound_check(&u, &forcing, &k, &sys.weights(solver.alpha)?)?;
        let report = SolveReport { mode: "linear", delta, constants: k, k_used, result: bounds };
        return write_solution(&u, &report, out);
    }

    let nl = cfg
        .nonlinearity
        .clone()
        .ok_or_else(|| Error::config("nonlinearity", "section is required for --semilinear"))?;
    let picard = |f: &dyn Source, lipschitz: f64| {
        let gate = ContractionGate { lipschitz, k_contraction: k_used, force };
        picard_solve(&sys, &Plus(f, &forcing), &solver, &gate, None)
    };
    let (u, conv) = match nl {
        NonlinearityConfig::ModalSine { amplitude, lipschitz } => {
            let f = ModalSine { dim: 2 * spatial.modes, amplitude };
            // |A (sin x - sin y)|_0 <= |A| |x - y|_0 <= |A| lambda_1^(-alpha) |x - y|_alpha
            let bound = amplitude.abs() * eigenvalue(1, spatial.length).powf(-solver.alpha);
            picard(&f, lipschitz.unwrap_or(bound))?
        }
        NonlinearityConfig::LotkaVolterra { lipschitz } => {
            let lv = cfg.lv()?;
            if lv.modes != spatial.modes {
                return Err(Error::config("lv.modes", format!("must equal spatial.modes = {}", spatial.modes)));
            }
            if lv.length != spatial.length {
                return Err(Error::config("lv.length", format!("must equal spatial.length = {}", spatial.length)));
            }
            let f = LvNonlinearity::new(&lv)?;
            let bound = lipschitz_bound(&lv, solver.rho)?.sup;
            picard(&f, lipschitz.unwrap_or(bound))?
        }
    };
    let report = SolveReport { mode: "semilinear", delta, constants: k, k_used, result: conv };
    write_solution(&u, &report, out)
}

pub fn cmd_lv_demo(config: Option<&Path>, force: bool, seed: u64, out: Option<&Path>) -> Result<()> {
    let cfg = match config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out = out.ok_or_else(|| Error::config("--out", "lv-demo needs an output directory"))?;
    let params = cfg.lv()?;
    let solver = cfg.solver_over(&demo_solver_defaults())?;
    let mut opts = DemoOptions { seed, force, ..DemoOptions::default() };
    if cfg.analysis.is_some() {
        let a = cfg.analysis()?;
        opts.epsilon = a.eps;
        opts.tau_range = (a.tau_range[0], a.tau_range[1]);
        opts.tau_step = a.tau_step;
        opts.p = a.p.unwrap_or(opts.p);
    }
    let bundle = lv_demo(&params, &solver, &opts)?;
    bundle.write(out)?;
    emit(&bundle.verdict, None)
}
