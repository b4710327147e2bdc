//! `cavity-heff`: effective Hamiltonians, full-vs-effective simulations and
//! parameter sweeps from TOML configs.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 parse or validation
//! error, 3 generalized James inapplicable (off resonance), 4 integration
//! quality error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use cavity_heff::config::{AnyConfig, ExperimentConfig, SimulateConfig, SweepConfig};
use cavity_heff::elimination::Method;
use cavity_heff::experiment::{
    run_heff, run_simulate, run_sweep, sweep_csv, write_heff, write_simulation, write_sweep,
};
use cavity_heff::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cavity-heff",
    version,
    about = "Effective Hamiltonians for multiphoton transitions in a driven atom coupled to a cavity mode"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write coefficient reports for each configured elimination method.
    Heff(RunArgs),
    /// Propagate the full model and every effective model, then compare.
    Simulate(RunArgs),
    /// Run a parameter sweep and write a summary CSV.
    Sweep(RunArgs),
    /// Parse and validate a config without running it.
    Validate(Source),
}

#[derive(Args)]
struct Source {
    /// TOML config file.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    config: Option<PathBuf>,
    /// Bundled config: lambda_2photon, fourlevel_3photon or lambda_scaling_sweep.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory (overrides `output.directory`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Method to run; repeatable. Replaces the configured list.
    #[arg(long = "method", value_name = "NAME")]
    methods: Vec<Method>,
    /// Integration step (overrides `simulate.dt`).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation window (overrides `simulate.t_final` and `rabi_periods`).
    #[arg(long)]
    t_final: Option<f64>,
    /// Fock cutoff used for simulation.
    #[arg(long)]
    fock_cutoff: Option<usize>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
    /// Print JSON instead of text on stdout.
    #[arg(long)]
    json: bool,
}

fn load(source: &Source) -> cavity_heff::Result<AnyConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => AnyConfig::load(path),
        (None, Some(name)) => AnyConfig::preset(name),
        (None, None) => Err(Error::Config(
            "either --config or --preset is required".into(),
        )),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &RunArgs) {
    if !args.methods.is_empty() {
        cfg.methods = args.methods.clone();
    }
    if let Some(dir) = &args.out {
        cfg.output.directory = dir.clone();
    }
    let touches_sim = args.dt.is_some() || args.t_final.is_some() || args.fock_cutoff.is_some();
    if touches_sim {
        let sim = cfg.simulate.get_or_insert_with(SimulateConfig::default);
        if args.dt.is_some() {
            sim.dt = args.dt;
        }
        if let Some(t) = args.t_final {
            sim.t_final = Some(t);
            sim.rabi_periods = None;
        }
        if args.fock_cutoff.is_some() {
            sim.fock_cutoff = args.fock_cutoff;
        }
    }
}

fn experiment(args: &RunArgs) -> cavity_heff::Result<ExperimentConfig> {
    match load(&args.source)? {
        AnyConfig::Experiment(mut cfg) => {
            apply_overrides(&mut cfg, args);
            Ok(cfg)
        }
        AnyConfig::Sweep(_) => Err(Error::Config(
            "this is a sweep config; use the sweep subcommand".into(),
        )),
    }
}

fn sweep(args: &RunArgs) -> cavity_heff::Result<SweepConfig> {
    match load(&args.source)? {
        AnyConfig::Sweep(mut cfg) => {
            apply_overrides(&mut cfg.base, args);
            Ok(cfg)
        }
        AnyConfig::Experiment(_) => Err(Error::Config(
            "this is not a sweep config (no [sweep] table)".into(),
        )),
    }
}

fn cmd_heff(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = experiment(args)?;
    let outcomes = run_heff(&cfg)?;
    let mut reports = Vec::new();
    let mut first_error = None;
    for (method, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("{method}: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    write_heff(&cfg.output.directory, &cfg.output.formats, &reports)
        .with_context(|| format!("writing reports to {}", cfg.output.directory.display()))?;
    if !args.quiet {
        if args.json {
            println!("{}", serde_json::to_string_pretty(&reports)?);
        } else {
            for r in &reports {
                print!("{}", r.to_text());
            }
        }
    }
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_simulate(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = experiment(args)?;
    let out = run_simulate(&cfg)?;
    write_simulation(&cfg.output.directory, &cfg.output.formats, &out)
        .with_context(|| format!("writing results to {}", cfg.output.directory.display()))?;
    if !args.quiet {
        let summary = out.summary();
        if args.json {
            println!("{}", serde_json::to_string_pretty(&summary)?);
        } else {
            print!("{}", summary.to_text());
        }
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = sweep(args)?;
    cfg.ensure_valid()?;
    let rows = run_sweep(&cfg)?;
    let dir = &cfg.base.output.directory;
    write_sweep(dir, &cfg.base.output.formats, &cfg, &rows)
        .with_context(|| format!("writing sweep summary to {}", dir.display()))?;
    if !args.quiet {
        if args.json {
            println!("{}", serde_json::to_string_pretty(&rows)?);
        } else {
            print!(
                "{}",
                sweep_csv(&cfg.sweep.axis.to_string(), &cfg.base.methods, &rows)
            );
        }
    }
    Ok(())
}

fn cmd_validate(source: &Source) -> anyhow::Result<()> {
    let cfg = load(source)?;
    let violations = cfg.validate();
    if violations.is_empty() {
        let kind = match cfg {
            AnyConfig::Experiment(_) => "experiment",
            AnyConfig::Sweep(_) => "sweep",
        };
        let name = source
            .config
            .as_deref()
            .map(Path::display)
            .map(|d| d.to_string())
            .or_else(|| source.preset.clone())
            .unwrap_or_default();
        println!("ok: {name} ({kind} config)");
        Ok(())
    } else {
        for v in &violations {
            eprintln!("{v}");
        }
        Err(anyhow!(Error::Validation(format!(
            "{} violation(s)",
            violations.len()
        ))))
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Validation(_) | Error::Config(_)) => 2,
        Some(Error::Inapplicable(_)) => 3,
        Some(Error::Integration { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Heff(a) => cmd_heff(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(s) => cmd_validate(s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
