use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nvnmr::experiment::{run_experiment, validate_config, ExperimentConfig, ExperimentKind};
use nvnmr::Error;

#[derive(Parser)]
#[command(name = "nvnmr", version, about = "NV-sensor NMR readout simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an averaged trace (or sweep) and analyse its spectrum.
    Simulate(Common),
    /// Spectrum and peak report, of `analysis.input` when set.
    Fft(Common),
    /// Fisher-information scaling fits.
    Fisher(Common),
    /// Exact few-spin evolution with back-action.
    Quantum(Common),
    /// Check a config and print errors and regime warnings.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Kind the config is meant for.
        #[arg(long, value_enum, default_value = "simulate")]
        kind: KindArg,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum KindArg {
    Simulate,
    Fft,
    Fisher,
    Quantum,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.kind = Some(kind);
    if common.preset.is_some() {
        cfg.preset = common.preset.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(dir) = &common.out {
        let mut out = cfg.output.take().unwrap_or_else(|| serde_json::json!({}));
        out["dir"] = serde_json::json!(dir);
        cfg.output = Some(out);
    }
    Ok(cfg)
}

fn run(kind: ExperimentKind, common: &Common) -> Result<(), Error> {
    let cfg = load(common, kind)?;
    let bundle = run_experiment(&cfg)?;
    for f in &bundle.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => run(ExperimentKind::Simulate, c),
        Command::Fft(c) => run(ExperimentKind::Fft, c),
        Command::Fisher(c) => run(ExperimentKind::Fisher, c),
        Command::Quantum(c) => run(ExperimentKind::Quantum, c),
        Command::Validate { common, kind } => {
            let kind = match kind {
                KindArg::Simulate => ExperimentKind::Simulate,
                KindArg::Fft => ExperimentKind::Fft,
                KindArg::Fisher => ExperimentKind::Fisher,
                KindArg::Quantum => ExperimentKind::Quantum,
            };
            load(common, kind).map(|cfg| {
                let report = validate_config(&cfg);
                println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
                if !report.is_ok() {
                    std::process::exit(2);
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
