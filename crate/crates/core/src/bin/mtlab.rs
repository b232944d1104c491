use clap::Parser;
use std::process::ExitCode;

use mtlab::experiments::{emit_report, run, Config, ExperimentConfig};
use mtlab::Error;

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
#[derive(Debug, Parser)]
#[command(name = "mtlab", version, about = "Moment-tomography bounds, searches and Monte-Carlo checks")]
struct Cli {
    /// crb, gamma-sweep, crossover, gamma2-min, mc-verify, fig2, fig3, fig4, fig5 or fig6
    experiment: String,
    /// Configuration file (key = value lines with [section] headers)
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Override a configuration key, e.g. --set state.alpha=1.2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

fn build(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for s in &cli.set {
        config.set(s)?;
    }
    if let Some(seed) = cli.seed {
        config.insert("seed", seed);
    }
    if let Some(out) = &cli.out {
        config.insert("out", out);
    }
    if let Some(f) = &cli.format {
        config.insert("format", f);
    }
    ExperimentConfig::new(config, Some(&cli.experiment))
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else if matches!(e, Error::Io(_)) {
        4
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build(&cli).and_then(|cfg| {
        let report = run(&cfg)?;
        emit_report(&report, &cfg, std::io::stdout().lock())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtlab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
