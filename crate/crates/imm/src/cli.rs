//! Subcommands of the `imm` tool.
//!
//! Exit codes: 0 success, 1 invalid input (configuration, suite name,
//! returns file), 2 I/O failure, 3 failed validation.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use imm_core::information::KlAccumulator;
use imm_core::information::kl_path_mean;
use imm_core::stats::student_t_fit;
use imm_core::{InfoReport, RngStream};

use crate::config::{load_config, Overrides};
use crate::engine::Engine;
use crate::error::{AppError, AppResult};
use crate::io::{ap_log_returns, read_returns, unix_now, write_json, write_trajectories, RunManifest};
use crate::validate::{parse_suites, Harness, REFERENCE_SEED};

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// `eprintln!` that ignores a closed stderr.
macro_rules! esay {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stderr(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "imm", version, about = "Simulate and validate the information-minimizing stationary market model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths and write trajectory tables plus a run manifest.
    Simulate(Common),
    /// Run property suites and write a validation report.
    Validate(Common),
    /// Print and store information quantities of a configuration.
    Info(Common),
    /// Fit a Student-t law to log-returns from a file or a simulation.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration or run manifest (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Grid step in years.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Horizon in years.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Comma-separated suites, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// File of log-returns, one per line. `--dt` gives their spacing.
    #[arg(long, conflicts_with = "config")]
    pub returns: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, paths: self.paths, grid_step: self.dt, horizon: self.horizon }
    }

    fn required_config(&self) -> AppResult<&Path> {
        self.config.as_deref().ok_or_else(|| AppError::Usage("--config PATH is required".into()))
    }

    fn out_dir(&self) -> AppResult<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        Ok(dir)
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Messages go to stdout, errors to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            esay!("imm: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> AppResult<()> {
    let engine = Engine::from_env()?;
    match &cli.command {
        Command::Simulate(c) => simulate(&engine, c),
        Command::Validate(c) => validate(&engine, c),
        Command::Info(c) => info(&engine, c),
        Command::Fit(f) => fit(&engine, f),
    }
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        esay!("warning: {w}");
    }
}

fn simulate(engine: &Engine, c: &Common) -> AppResult<()> {
    let started = unix_now();
    let (cfg, warnings) = load_config(c.required_config()?, &c.overrides())?;
    print_warnings(&warnings);
    let out = c.out_dir()?;
    let set = engine.simulate(&cfg)?;
    let mut written = write_trajectories(&set, &out)?;
    let manifest_path = out.join("manifest.json");
    written.push(manifest_path.clone());
    RunManifest::new("simulate", &cfg, started, &written).write(&manifest_path)?;
    say!(
        "simulated {} path(s), n = {}, {} grid points, seed {}",
        cfg.paths,
        cfg.n,
        set.grid.len(),
        cfg.seed
    );
    for p in &written {
        say!("wrote {}", p.display());
    }
    Ok(())
}

fn validate(engine: &Engine, c: &Common) -> AppResult<()> {
    let suites = parse_suites(&c.suite)?;
    let mut seed = REFERENCE_SEED;
    if let Some(path) = &c.config {
        seed = load_config(path, &Overrides::default())?.0.seed;
    }
    if let Some(s) = c.seed {
        seed = s;
    }
    let out = c.out_dir()?;
    let report = Harness::new(engine, seed).run(&suites);
    for s in &report.suites {
        say!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.suite, s.description);
        for check in &s.checks {
            say!("  {check}");
        }
        if let Some(e) = &s.error {
            say!("  error: {e}");
        }
    }
    let path = out.join("validation.json");
    write_json(&path, &report)?;
    say!("wrote {}", path.display());
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.suites.iter().filter(|s| !s.passed).map(|s| s.suite.name()).collect();
        Err(AppError::TestFailure(format!("failed suites: {}", failed.join(", "))))
    }
}

/// Stationary draws used for the ω̄ estimators.
const OMEGA_BAR_SAMPLES: usize = 100_000;

fn info(engine: &Engine, c: &Common) -> AppResult<()> {
    let (cfg, warnings) = load_config(c.required_config()?, &c.overrides())?;
    print_warnings(&warnings);
    if !cfg.is_info_minimizing() {
        return Err(AppError::InvalidConfig(vec!["info requires mode = \"info_minimizing\"".into()]));
    }
    let mut rng = RngStream::new(cfg.seed, u64::MAX).rng();
    let mut report = InfoReport::closed_form(&cfg, OMEGA_BAR_SAMPLES, &mut rng)?;
    if cfg.paths >= 2 {
        let mut acc = KlAccumulator::new(cfg.n);
        acc.path_means = engine.map_paths(&cfg, |v| Ok(kl_path_mean(&v)))?;
        report.kl_monte_carlo = Some(acc.estimate()?);
    }
    say!("n = {}, λ̂ = {}, E[a] = {}", report.n, report.lambda_hat, report.mean_activity);
    for k in 0..report.n {
        say!(
            "atom {}: self-information {:.10}, log-mean {:.10}",
            k + 1,
            report.self_information[k],
            report.log_means[k]
        );
    }
    say!("total self-information {:.10}", report.total_self_information);
    say!("KL divergence (closed form, {}) {:.10}", report.kl_status, report.kl_closed_form);
    if let Some(mc) = &report.kl_monte_carlo {
        say!(
            "KL divergence (Monte Carlo, {} paths) {:.6} ± {:.6}{}",
            mc.paths,
            mc.value,
            mc.standard_error,
            if mc.heavy_tailed { " [heavy-tailed, see truncated value]" } else { "" }
        );
    }
    let path = c.out_dir()?.join("info.json");
    write_json(&path, &report)?;
    say!("wrote {}", path.display());
    Ok(())
}

/// Default spacing of returns read from a file: one trading day.
const DEFAULT_RETURN_SPACING: f64 = 1.0 / 252.0;

fn fit(engine: &Engine, f: &FitArgs) -> AppResult<()> {
    let c = &f.common;
    let (returns, horizon) = match (&f.returns, &c.config) {
        (Some(path), _) => (read_returns(path)?, c.dt.unwrap_or(DEFAULT_RETURN_SPACING)),
        (None, Some(path)) => {
            let (cfg, warnings) = load_config(path, &c.overrides())?;
            print_warnings(&warnings);
            let r: Vec<f64> = engine.map_paths(&cfg, ap_log_returns)?.into_iter().flatten().collect();
            (r, cfg.grid_step)
        }
        (None, None) => return Err(AppError::Usage("fit needs --returns FILE or --config PATH".into())),
    };
    let fit = engine.install(|| student_t_fit(&returns, horizon))?;
    say!(
        "ν = {:.4} ± {:.4}, location = {:.6e} ± {:.2e}, scale = {:.6e} ± {:.2e} ({} observations, Δ = {}){}",
        fit.nu,
        fit.nu_se,
        fit.location,
        fit.location_se,
        fit.scale,
        fit.scale_se,
        fit.observations,
        fit.horizon,
        if fit.converged { "" } else { " [not converged]" }
    );
    if c.out.is_some() {
        let path = c.out_dir()?.join("fit.json");
        write_json(&path, &fit)?;
        say!("wrote {}", path.display());
    }
    Ok(())
}
