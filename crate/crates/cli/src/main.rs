use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kondo_cli::compare::{compare, grid_from_artifacts, samples_from_grid, write_compare};
use kondo_cli::config::{CriticalSection, FileConfig, NrgSection, SweepSection};
use kondo_cli::error::{CliError, Result};
use kondo_cli::flow::write_flow;
use kondo_cli::scan::{asymptote, critical_scan, CRITICAL_HEADER, CRITICAL_VERSION};
use kondo_cli::{run_sweep, with_output, write_sweep, Range, Spacing, SweepConfig};
use kondo_nrg::{
    estimate_tk, extract_constants, run, save_run, thermodynamics, tk_from_flow, tune_kc,
    tune_kc_in, ModelParams, NrgConfig,
};

#[derive(Parser)]
#[command(
    author,
    version,
    about = "Probe metrology sweeps and NRG runs for two Kondo impurities"
)]
struct Cli {
    /// Worker threads for grid sweeps; 0 uses every available core. Falls back to the
    /// KONDO_METRO_THREADS environment variable when not given.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a (T, K) grid with one backend and write the metrology CSV.
    Sweep(SweepArgs),
    /// Tabulate the universal critical-point solution on a scaled (T/T_K, dK/T_K) grid.
    Critical(CriticalArgs),
    /// Run one NRG flow and save it as an artifact directory.
    NrgRun(NrgRunArgs),
    /// Locate K_c by bisection and extract the critical-point constants.
    NrgTuneKc(TuneArgs),
    /// Kondo temperature of the decoupled (K = 0) flow.
    NrgTk(TkArgs),
    /// Compare saved zero-field NRG runs with the universal solution.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    sweep: SweepSection,
    #[command(flatten)]
    critical: CriticalSection,
    #[command(flatten)]
    nrg: NrgSection,
}

#[derive(Args)]
struct CriticalArgs {
    /// TOML configuration; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    critical: CriticalSection,
    /// Smallest T/T_K.
    #[arg(long, default_value_t = 1e-4)]
    t_min: f64,
    /// Largest T/T_K.
    #[arg(long, default_value_t = 1e-1)]
    t_max: f64,
    /// Log-spaced temperatures per detuning.
    #[arg(long, default_value_t = 40)]
    t_count: usize,
    /// Detunings dK/T_K.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        default_value = "-0.01,-0.001,0,0.001,0.01"
    )]
    detunings: Vec<f64>,
    /// Also fit the low-temperature asymptote of Q_SP(T) and print its parameter.
    #[arg(long)]
    fit_asymptote: bool,
    /// CSV destination; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Model settings shared by the NRG subcommands; unset values fall back to `[sweep]`.
#[derive(Args)]
struct ModelArgs {
    /// TOML configuration; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Kondo coupling J.
    #[arg(long)]
    exchange: Option<f64>,
    /// Conduction half-bandwidth D.
    #[arg(long)]
    halfwidth: Option<f64>,
    #[command(flatten)]
    nrg: NrgSection,
}

impl ModelArgs {
    fn resolve(&self) -> Result<(FileConfig, f64, NrgConfig)> {
        let file = FileConfig::load_optional(self.config.as_deref())?;
        let exchange = self.exchange.or(file.sweep.exchange).unwrap_or(1.0);
        let halfwidth = self.halfwidth.or(file.sweep.halfwidth).unwrap_or(1.0);
        let cfg = file
            .nrg
            .clone()
            .overlay(self.nrg.clone())
            .resolve(halfwidth)?;
        Ok((file, exchange, cfg))
    }
}

#[derive(Args)]
struct NrgRunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Inter-impurity coupling K.
    #[arg(long, allow_negative_numbers = true)]
    coupling: f64,
    /// Magnetic field B.
    #[arg(long, allow_negative_numbers = true)]
    field: Option<f64>,
    /// Artifact directory (manifest, shell tables and flow.csv).
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Starting bracket LOW,HIGH for K_c; grown automatically from K = 0 when absent.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    bracket: Option<Vec<f64>>,
    /// Detunings dK/T_K of the flows used to fit c.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        default_value = "0.05,-0.05"
    )]
    detunings: Vec<f64>,
    /// Writes the constants as a TOML file usable with --config.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TkArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// TOML configuration; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    critical: CriticalSection,
    /// NRG artifact directories, at least three couplings.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn sweep(args: SweepArgs) -> Result<()> {
    let file = FileConfig::load_optional(args.config.as_deref())?;
    let merged = FileConfig {
        sweep: file.sweep.overlay(args.sweep),
        critical: file.critical.overlay(args.critical),
        nrg: file.nrg.overlay(args.nrg),
    };
    let cfg = SweepConfig::resolve(merged)?;
    let rows = run_sweep(&cfg)?;
    with_output(cfg.output.as_deref(), |out| write_sweep(out, &rows))?;
    if cfg.output.is_some() {
        eprintln!("{} rows written", rows.len());
    }
    Ok(())
}

fn critical(args: CriticalArgs) -> Result<()> {
    let file = FileConfig::load_optional(args.config.as_deref())?;
    let consts = file.critical.overlay(args.critical).resolve()?;
    let range = Range {
        min: args.t_min,
        max: args.t_max,
        count: args.t_count,
        spacing: Spacing::Log,
    };
    range.validate("T/T_K")?;
    let ts = range.points();
    let rows = critical_scan(&consts, &ts, &args.detunings)?;
    with_output(args.output.as_deref(), |out| {
        writeln!(out, "{CRITICAL_VERSION}").map_err(csv::Error::from)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CRITICAL_HEADER)?;
        for r in &rows {
            w.write_record(r.record())?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    if args.fit_asymptote {
        let fit = asymptote(&consts, &ts, &args.detunings)?;
        eprintln!(
            "asymptote: a = {:.6e}, amplitude = {:.6e}, rms ln-residual = {:.3e}",
            fit.a, fit.amplitude, fit.rms_log_residual
        );
    }
    Ok(())
}

fn nrg_run(args: NrgRunArgs) -> Result<()> {
    let (file, exchange, cfg) = args.model.resolve()?;
    let field = args.field.or(file.sweep.field).unwrap_or(0.0);
    let params = ModelParams::new(args.coupling, exchange, field)?;
    let shells = run(&cfg, args.coupling, exchange, field)?;
    let reference = kondo_nrg::run_reference(&cfg, field)?;
    save_run(&args.output, &cfg, &params, &shells, &reference)?;
    let flow = thermodynamics(&shells, &reference)?;
    let flow_path = args.output.join("flow.csv");
    with_output(Some(&flow_path), |out| write_flow(out, &flow))?;
    eprintln!("{} shells saved to {}", shells.len(), args.output.display());
    match tk_from_flow(&flow) {
        Ok(t_k) => eprintln!("ln 2 crossing of S_imp: T = {t_k:.6e}"),
        Err(e) => eprintln!("no T_K from this flow: {e}"),
    }
    Ok(())
}

fn tune(args: TuneArgs) -> Result<()> {
    let (file, exchange, cfg) = args.model.resolve()?;
    let tuning = match args.bracket.as_deref() {
        Some(&[lo, hi]) => tune_kc_in(exchange, &cfg, (lo, hi))?,
        Some(_) => {
            return Err(CliError::Validation(
                "--bracket takes exactly two values".into(),
            ))
        }
        None => tune_kc(exchange, &cfg)?,
    };
    let x = extract_constants(exchange, &cfg, &tuning, &args.detunings)?;
    let c = x.constants;
    println!(
        "K_c = {:.10e} (bracket [{:.10e}, {:.10e}], {} runs)",
        c.k_c, tuning.lower, tuning.upper, tuning.runs
    );
    println!("T_K = {:.6e}", c.t_k);
    println!(
        "c = {:.6e} (fit rms {:.3e} over {} points)",
        c.c, x.c_fit_rms, x.c_fit_points
    );
    println!("C* = {:.6e}", c.c_star);
    println!(
        "1/2 ln 2 plateau: shells {}..={}, mean {:.5}",
        x.plateau.first_shell, x.plateau.last_shell, x.plateau.mean_entropy
    );
    if let Some(path) = &args.output {
        let out = FileConfig {
            sweep: SweepSection {
                exchange: Some(exchange),
                halfwidth: Some(cfg.band_halfwidth),
                ..file.sweep
            },
            critical: CriticalSection::from(&c),
            nrg: NrgSection::from(&cfg),
        };
        let text = toml::to_string(&out).map_err(|e| CliError::Validation(e.to_string()))?;
        std::fs::write(path, text).map_err(CliError::io(path))?;
    }
    Ok(())
}

fn tk(args: TkArgs) -> Result<()> {
    let (_, exchange, cfg) = args.model.resolve()?;
    println!("{:.10e}", estimate_tk(exchange, &cfg)?);
    Ok(())
}

fn compare_runs(args: CompareArgs) -> Result<()> {
    let file = FileConfig::load_optional(args.config.as_deref())?;
    let consts = file.critical.overlay(args.critical).resolve()?;
    let grid = grid_from_artifacts(&args.runs)?;
    let rows = compare(&samples_from_grid(&grid), &consts);
    with_output(args.output.as_deref(), |out| write_compare(out, &rows))?;
    let window: Vec<_> = rows.iter().filter(|r| r.in_window).collect();
    let worst = window
        .iter()
        .flat_map(|r| [r.dev_dc_dt.abs(), r.dev_dc_dk.abs()])
        .fold(0.0, f64::max);
    eprintln!(
        "{} of {} rows in the comparison window; largest derivative deviation there {:.3}",
        window.len(),
        rows.len(),
        worst
    );
    Ok(())
}

const THREADS_ENV: &str = "KONDO_METRO_THREADS";

/// The flag wins; the environment variable is only consulted (and validated) without it.
fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "{THREADS_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cli.threads)?)
        .build_global()
        .map_err(|e| CliError::Resource(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Critical(a) => critical(a),
        Command::NrgRun(a) => nrg_run(a),
        Command::NrgTuneKc(a) => tune(a),
        Command::NrgTk(a) => tk(a),
        Command::Compare(a) => compare_runs(a),
    }
}

fn main() -> ExitCode {
    // Usage errors are input errors (status 1); clap's own default of 2 is reserved for resources.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kondo-metro: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
