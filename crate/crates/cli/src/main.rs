use std::path::{Path, PathBuf};
use std::process::ExitCode;

use batchelor::experiment::{
    audit_member, density_row, ito_cross_check, persist, run_ensemble, write_densities,
    write_densities_to, write_spectrum, write_spectrum_to, CrossCheckReport, ExperimentConfig,
    RunResult, WORKERS_ENV,
};
use batchelor::flux::{AuditStatus, FluxReport};
use batchelor::oracle::run_oracle;
use batchelor::Error;
use clap::{Args, Parser, Subcommand};

/// Slacks below this count as equality in the audit summary.
const EQUALITY_TOL: f64 = 1e-12;
/// Oracle agreement required for a zero exit.
const ORACLE_TOL: f64 = 1e-12;
/// Share of occupied shells that must sit within 3 pooled standard errors.
const CROSS_CHECK_PASS: f64 = 0.95;

#[derive(Parser)]
#[command(
    name = "batchelor",
    version,
    about = "Passive scalar cascade simulation and flux audit on the 2-torus"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Dotted override, e.g. `ensemble.M=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for the ensemble.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut config = ExperimentConfig::load(&self.config, &self.overrides)?;
        if self.workers.is_some() {
            config.ensemble.workers = self.workers;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble and write its run directory.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run directory (default: `output.dir`, else `runs/<hash>`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Flux-inequality audit of one ensemble member.
    Audit {
        #[command(flatten)]
        config: AuditSource,
        /// Member index to audit.
        #[arg(long, default_value_t = 0)]
        member: usize,
        /// Directory for `flux_audit.csv` (default: `audit-<hash>`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Shell spectrum of a persisted run.
    Spectrum {
        /// Run directory.
        #[arg(long)]
        run: PathBuf,
        /// Annulus width for the compensated `r m([r, r+h]) / h` column.
        #[arg(long)]
        h: Option<f64>,
        /// CSV destination (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Log-densities of the bad and overcharged sets of a persisted run.
    Density {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        alpha: f64,
        /// Window `a,b` (default: the run's reporting window).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        /// Pad every annulus by the mixing tail bound before testing.
        #[arg(long)]
        tail_in_bad_set: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare forced and unforced shell masses.
    CrossCheck {
        #[command(flatten)]
        config: ConfigArgs,
        /// Forced realizations (default: the unforced `ensemble.M`).
        #[arg(long)]
        forced_m: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check the fast right-hand side and flux sums against direct double sums.
    Oracle {
        #[arg(long, default_value_t = 8)]
        max_mode: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AuditSource {
    /// Configuration to audit.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Existing run directory whose configuration is re-run (read only).
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invariant(_) => 3,
            Error::Resolution(_) | Error::TailAbort { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn invariant(message: String) -> Failure {
    Failure { code: 3, message }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, out } => simulate(config.load()?, out),
        Command::Audit {
            config,
            member,
            out,
        } => audit(config, member, out),
        Command::Spectrum { run, h, out } => spectrum(&run, h, out),
        Command::Density {
            run,
            h,
            alpha,
            window,
            tail_in_bad_set,
            out,
        } => density(&run, h, alpha, window, tail_in_bad_set, out),
        Command::CrossCheck {
            config,
            forced_m,
            out,
        } => cross_check(config.load()?, forced_m, out),
        Command::Oracle {
            max_mode,
            trials,
            seed,
        } => oracle(max_mode, trials, seed),
    }
}

fn short_hash(config: &ExperimentConfig) -> String {
    config.hash()[..12].to_string()
}

fn simulate(config: ExperimentConfig, out: Option<PathBuf>) -> Result<(), Failure> {
    let dir = out
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(short_hash(&config)));
    let (result, flux) = run_ensemble(&config)?;
    persist(&dir, &result, flux.as_ref())?;
    print_summary(&result, &dir);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn print_summary(r: &RunResult, dir: &Path) {
    let c = &r.config;
    println!("run        {}", dir.display());
    println!("config     {}", &r.config_hash[..12]);
    println!(
        "setup      N = {}  nu = {:e}  T = {}  M = {}",
        c.grid.max_mode, c.physics.nu, c.physics.horizon, c.ensemble.members
    );
    println!(
        "energy     max |identity defect| = {:.3e}",
        r.max_energy_defect
    );
    println!(
        "tail       max truncation fraction = {:.3e}",
        r.max_tail_fraction
    );
    match &r.mixing {
        Some(m) => println!(
            "mixing     gamma = {:.4}  K = {:.4}  fit over t in [{}, {}] ({} pts)  tail bound = {:.3e}",
            m.gamma_hat,
            m.k_hat,
            m.window.0,
            m.window.1,
            m.points,
            r.tail_bound.unwrap_or(f64::NAN)
        ),
        None => println!("mixing     n/a: {}", r.mixing_error.as_deref().unwrap_or("")),
    }
    println!(
        "total      m([0, inf)) = {:.6}",
        r.estimate.measure().total()
    );
    println!(
        "scales     N0 = {:.4}  D = {}",
        r.n_zero,
        fmt_opt(r.dissipation_scale)
    );
    if let Some(e) = &r.dissipation_error {
        println!("           D n/a: {e}");
    }
    match r.window {
        Some((a, b)) => println!("window     [{a:.4}, {b:.4}]"),
        None => println!("window     empty (no densities or slope reported)"),
    }
    if let Some(fit) = &r.log_slope {
        println!(
            "cumulative slope = {:.4}  relative residual = {:.3}  ({} pts)",
            fit.slope, fit.relative_residual, fit.points
        );
    }
    if !r.doubling.is_empty() {
        let ratios: Vec<String> = r.doubling.iter().map(|(_, q)| format!("{q:.3}")).collect();
        println!("doubling   {}", ratios.join(" "));
    }
    for d in &r.densities {
        println!(
            "density    h = {} alpha = {}  mu(bad) = {:.4}  mu(over) = {:.4}  alpha* = {:.4e}",
            d.h, d.alpha, d.mu_bad, d.mu_overcharged, d.alpha_star
        );
    }
    match &r.flux {
        Some(f) => println!(
            "flux       {} rows audited, {} skipped, {} failed; min scaled slack = {}",
            f.audited,
            f.skipped,
            f.failed,
            f.min_scaled_slack
                .map_or("n/a".into(), |s| format!("{s:.4e}"))
        ),
        None => println!("flux       not audited"),
    }
}

fn audit(source: AuditSource, member: usize, out: Option<PathBuf>) -> Result<(), Failure> {
    let config = match (&source.config, &source.run) {
        (Some(path), _) => ExperimentConfig::load(path, &source.overrides)?,
        (None, Some(run)) => ExperimentConfig::load(&run.join("config.toml"), &source.overrides)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("audit-{}", short_hash(&config))));
    if let Some(run) = &source.run {
        if same_dir(run, &dir) {
            return Err(Error::Config("audit output must not be the run directory".into()).into());
        }
    }
    if member >= config.ensemble.members {
        return Err(Error::Config(format!(
            "member {member} is outside the ensemble of {}",
            config.ensemble.members
        ))
        .into());
    }
    let report = audit_member(&config, member)?;
    std::fs::create_dir_all(&dir)?;
    report.write_csv(&dir.join("flux_audit.csv"))?;
    let summary = report.summary();
    let max_abs = max_abs_slack(&report);
    println!("flux audit {}", dir.join("flux_audit.csv").display());
    println!(
        "rows       {} audited, {} skipped, {} failed",
        summary.audited, summary.skipped, summary.failed
    );
    if let Some(s) = summary.min_slack_bilinear {
        println!(
            "bilinear   min slack = {:.4e} at t = {}, r = {:.4}",
            s.slack, s.t, s.r
        );
    }
    if let Some(s) = summary.min_slack_young {
        println!(
            "young      min slack = {:.4e} at t = {}, r = {:.4}",
            s.slack, s.t, s.r
        );
    }
    if max_abs <= EQUALITY_TOL {
        println!("equality   all slacks within {EQUALITY_TOL:e} of zero");
    }
    if !summary.passed {
        return Err(invariant(format!(
            "{} audit rows violate the flux inequality",
            summary.failed
        )));
    }
    Ok(())
}

fn max_abs_slack(report: &FluxReport) -> f64 {
    report
        .rows
        .iter()
        .filter(|r| matches!(r.status, AuditStatus::Pass | AuditStatus::Fail))
        .map(|r| r.slack_bilinear.abs().max(r.slack_young.abs()))
        .fold(0.0, f64::max)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn refuse_run_dir(run: &Path, out: &Path) -> Result<(), Failure> {
    match out.parent() {
        Some(parent)
            if same_dir(
                run,
                if parent.as_os_str().is_empty() {
                    Path::new(".")
                } else {
                    parent
                },
            ) =>
        {
            Err(Error::Config(
                "post-processing output must not be written into the run directory".into(),
            )
            .into())
        }
        _ => Ok(()),
    }
}

fn spectrum(run: &Path, h: Option<f64>, out: Option<PathBuf>) -> Result<(), Failure> {
    let result = RunResult::load(run)?;
    if let Some(h) = h {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::Config(format!("h must be positive, got {h}")).into());
        }
    }
    match out {
        Some(path) => {
            refuse_run_dir(run, &path)?;
            write_spectrum(&path, &result, h)?;
        }
        None => write_spectrum_to(std::io::stdout().lock(), &result, h)?,
    }
    Ok(())
}

fn density(
    run: &Path,
    h: f64,
    alpha: f64,
    window: Option<Vec<f64>>,
    tail_in_bad_set: bool,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let result = RunResult::load(run)?;
    let (a, b) = match window.as_deref() {
        Some(&[a, b]) => (a, b),
        Some(_) => return Err(Error::Config("--window takes a,b".into()).into()),
        None => result.window.ok_or_else(|| {
            Error::Config("the run's reporting window is empty; pass --window a,b".into())
        })?,
    };
    let padding = if tail_in_bad_set {
        result
            .tail_bound
            .ok_or_else(|| Error::Config("no mixing fit, so no tail bound to add".into()))?
    } else {
        0.0
    };
    let row = density_row(&result.estimate, h, alpha, a, b, padding)?;
    let rows = [row];
    match out {
        Some(path) => {
            refuse_run_dir(run, &path)?;
            write_densities(&path, &rows)?;
        }
        None => write_densities_to(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn write_cross_check(path: &Path, report: &CrossCheckReport) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "radius",
        "forced_mean",
        "forced_se",
        "unforced_mean",
        "unforced_se",
        "z",
    ])?;
    for s in &report.shells {
        w.write_record(
            [
                s.radius,
                s.forced_mean,
                s.forced_se,
                s.unforced_mean,
                s.unforced_se,
                s.z,
            ]
            .map(|v| format!("{v:.10e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn cross_check(
    config: ExperimentConfig,
    forced_m: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let forced_m = forced_m.unwrap_or(config.ensemble.members);
    let report = ito_cross_check(&config, forced_m)?;
    if report.skipped {
        println!("cross-check skipped: no forced realizations");
        return Ok(());
    }
    if let Some(path) = &out {
        write_cross_check(path, &report)?;
    }
    println!(
        "{:>10} {:>14} {:>14} {:>8}",
        "radius", "forced", "unforced", "z"
    );
    for s in &report.shells {
        println!(
            "{:>10.4} {:>14.6e} {:>14.6e} {:>8.3}",
            s.radius, s.forced_mean, s.unforced_mean, s.z
        );
    }
    println!(
        "{} of {} occupied shells within 3 pooled standard errors ({:.1}%); M = {} forced, {} unforced",
        (report.fraction_within_3 * report.occupied as f64).round(),
        report.occupied,
        100.0 * report.fraction_within_3,
        report.forced_members,
        report.unforced_members
    );
    if report.fraction_within_3 < CROSS_CHECK_PASS {
        return Err(invariant(format!(
            "only {:.1}% of shells agree, below {:.0}%",
            100.0 * report.fraction_within_3,
            100.0 * CROSS_CHECK_PASS
        )));
    }
    Ok(())
}

fn oracle(max_mode: usize, trials: usize, seed: u64) -> Result<(), Failure> {
    let r = run_oracle(max_mode, trials, seed)?;
    println!("oracle     N = {}  trials = {}", r.max_mode, r.trials);
    println!("rhs        max relative error = {:.3e}", r.rhs_error);
    println!("bilinear   max relative error = {:.3e}", r.bilinear_error);
    if r.rhs_error > ORACLE_TOL || r.bilinear_error > ORACLE_TOL {
        return Err(invariant(format!(
            "fast paths disagree with direct sums beyond {ORACLE_TOL:e}"
        )));
    }
    Ok(())
}
