//! `acnn`: dataset generation, training, capacitor mapping, chip simulation
//! and energy accounting for adiabatic capacitive neural networks.

mod commands;
mod config;
mod error;
mod output;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use acnn_core::energy::EnergyMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Format, RunConfig, TransientKind};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "acnn", version, about = "Adiabatic capacitive neural network toolkit")]
#[command(after_help = "Settings resolve as: flags, then --config TOML, then built-in defaults.\n\
Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.")]
struct Cli {
    /// TOML file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed for dataset, training and noise streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts (also where inputs are looked up by default).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of per-sample tables.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the 8x8 arrows dataset (dataset.txt).
    GenDataset(GenArgs),
    /// Train the binary network with a tanh output layer (net_float.json).
    Train(TrainArgs),
    /// Snap weights to the 8-bit grid and swap the output to Heaviside (net.json).
    Quantize(QuantizeArgs),
    /// Compile net.json to capacitor trees (chip_ideal.json, chip.json).
    Map(MapArgs),
    /// Run the test split through the simulated chip and compare with software.
    Infer(InferArgs),
    /// Mismatch and noise Monte Carlo over several chip instances.
    Montecarlo(McArgs),
    /// RC and power-clock transient demonstrations (waveform.csv).
    Transient(TransientArgs),
    /// Multi-operation energy experiment on one template image per class.
    Energy(EnergyArgs),
    /// Summary tables from reference energy data and earlier runs.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset file [default: <out>/dataset.txt].
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args, Debug)]
struct QuantizeArgs {
    /// Float network [default: <out>/net_float.json].
    #[arg(long)]
    net: Option<PathBuf>,
    /// Dataset file [default: <out>/dataset.txt].
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MapArgs {
    /// Deployed network [default: <out>/net.json].
    #[arg(long)]
    net: Option<PathBuf>,
    /// Layout unit capacitor, fF.
    #[arg(long)]
    unit_cap: Option<f64>,
    /// Keep ideal capacitances in chip.json.
    #[arg(long)]
    no_unit_quantize: bool,
}

#[derive(Args, Debug)]
struct InferArgs {
    /// Chip file [default: <out>/chip.json, or <out>/chip_ideal.json with --noiseless].
    #[arg(long)]
    chip: Option<PathBuf>,
    /// Deployed network [default: <out>/net.json].
    #[arg(long)]
    net: Option<PathBuf>,
    /// Dataset file [default: <out>/dataset.txt].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// No mismatch, offset or comparator noise.
    #[arg(long)]
    noiseless: bool,
    #[arg(long)]
    v_peak: Option<f64>,
    #[arg(long)]
    chip_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Chip file [default: <out>/chip.json].
    #[arg(long)]
    chip: Option<PathBuf>,
    /// Deployed network [default: <out>/net.json].
    #[arg(long)]
    net: Option<PathBuf>,
    /// Dataset file [default: <out>/dataset.txt].
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated chip seeds.
    #[arg(long, value_delimiter = ',')]
    chip_seeds: Option<Vec<u64>>,
    #[arg(long)]
    v_peak: Option<f64>,
}

#[derive(Args, Debug)]
struct TransientArgs {
    #[arg(long, value_enum)]
    kind: Option<TransientKind>,
    /// Series resistance, ohms.
    #[arg(long)]
    r: Option<f64>,
    /// Load capacitance, farads.
    #[arg(long)]
    c: Option<f64>,
    /// Source amplitude, volts.
    #[arg(long)]
    v: Option<f64>,
    /// Ramp period over RC.
    #[arg(long)]
    period_ratio: Option<f64>,
    /// PCG cycles.
    #[arg(long)]
    cycles: Option<usize>,
    /// Fixed integration step, seconds.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Behavioral,
    Coupled,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    /// Chip file [default: <out>/chip.json].
    #[arg(long)]
    chip: Option<PathBuf>,
    #[arg(long)]
    ops: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Noise trials per operation for the error-onset check.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    chip_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Energy table CSV [default: built-in reference tables].
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Op count for the ACNN/CCNN ratio.
    #[arg(long)]
    ratio_ops: Option<u32>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    cfg.svg |= cli.svg;
    match &cli.command {
        Command::GenDataset(a) => {
            set(&mut cfg.dataset.n_train, a.n_train);
            set(&mut cfg.dataset.n_test, a.n_test);
        }
        Command::Train(a) => {
            set(&mut cfg.train.epochs, a.epochs);
            set(&mut cfg.train.hidden, a.hidden);
            set(&mut cfg.train.learning_rate, a.learning_rate);
        }
        Command::Quantize(_) => {}
        Command::Map(a) => {
            set(&mut cfg.map.unit_cap, a.unit_cap);
            if a.no_unit_quantize {
                cfg.chip.unit_quantize = false;
            }
        }
        Command::Infer(a) => {
            set(&mut cfg.infer.v_peak, a.v_peak);
            set(&mut cfg.infer.chip_seed, a.chip_seed);
            cfg.infer.noiseless |= a.noiseless;
        }
        Command::Montecarlo(a) => {
            set(&mut cfg.montecarlo.iterations, a.iterations);
            set(&mut cfg.montecarlo.chip_seeds, a.chip_seeds.clone());
            set(&mut cfg.montecarlo.v_peak, a.v_peak);
        }
        Command::Transient(a) => {
            let t = &mut cfg.transient;
            set(&mut t.kind, a.kind);
            set(&mut t.r_ohm, a.r);
            set(&mut t.c_farad, a.c);
            set(&mut t.v, a.v);
            set(&mut t.period_ratio, a.period_ratio);
            set(&mut t.cycles, a.cycles);
            set(&mut t.dt, a.dt);
        }
        Command::Energy(a) => {
            set(&mut cfg.energy.ops, a.ops);
            set(&mut cfg.energy.noise.trials, a.trials);
            set(&mut cfg.energy.chip_seed, a.chip_seed);
            if let Some(m) = a.mode {
                cfg.energy.model.mode = match m {
                    ModeArg::Behavioral => EnergyMode::Behavioral,
                    ModeArg::Coupled => EnergyMode::Coupled,
                };
            }
        }
        Command::Report(a) => set(&mut cfg.report.ratio_ops, a.ratio_ops),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::GenDataset(_) => commands::gen_dataset(&cfg),
        Command::Train(a) => commands::train(&cfg, a.dataset.as_deref()),
        Command::Quantize(a) => commands::quantize(&cfg, a.net.as_deref(), a.dataset.as_deref()),
        Command::Map(a) => commands::map(&cfg, a.net.as_deref()),
        Command::Infer(a) => commands::infer(&cfg, a.chip.as_deref(), a.net.as_deref(), a.dataset.as_deref()),
        Command::Montecarlo(a) => commands::montecarlo(&cfg, a.chip.as_deref(), a.net.as_deref(), a.dataset.as_deref()),
        Command::Transient(_) => commands::transient(&cfg),
        Command::Energy(a) => commands::energy(&cfg, a.chip.as_deref()),
        Command::Report(a) => report::report(&cfg, a.tables.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acnn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
