use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gammalab::experiments::{self, ExperimentConfig, ExperimentId, Format, OutputSpec};

#[derive(Parser)]
#[command(name = "gammalab", version, about = "Convergence experiments for moving anisotropies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        /// E1..E6 or the experiment name; must match the config.
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// List the available experiments.
    ListExperiments,
    /// Check a config without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_id(s: &str) -> Result<ExperimentId, String> {
    ExperimentId::ALL
        .into_iter()
        .find(|id| id.code().eq_ignore_ascii_case(s) || id.name() == s)
        .ok_or_else(|| format!("unknown experiment `{s}`; try `gammalab list-experiments`"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::ListExperiments => {
            for id in ExperimentId::ALL {
                println!("{}  {:<22} {}", id.code(), id.name(), id.description());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config).map_err(|e| e.to_string())?;
            let v = experiments::validate(&cfg).map_err(|e| e.to_string())?;
            println!("{} {}: ok", cfg.experiment.code(), cfg.experiment.name());
            println!("  h values: {:?}", v.h_values);
            if let Some(h) = v.truncated_at {
                println!("  schedule truncated before h = {h} (resolvability)");
            }
            if !v.sigma.is_empty() {
                let s: Vec<String> = v.sigma.iter().map(|s| format!("{s:.4e}")).collect();
                println!("  sigma(h): [{}]", s.join(", "));
            }
            println!("  class tags: {:?}", v.class_tags);
            println!(
                "  stacked-rows shape: {}, Lipschitz estimate: {:.4e}",
                v.classification.s1_shape, v.classification.s2_lip_bound
            );
            Ok(())
        }
        Command::Run {
            experiment,
            config,
            out,
            format,
        } => {
            let id = parse_id(&experiment)?;
            let format: Format = format.parse().map_err(|e: gammalab::Error| e.to_string())?;
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| e.to_string())?;
            if cfg.experiment != id {
                return Err(format!(
                    "--experiment {} does not match the config's experiment {}",
                    id.code(),
                    cfg.experiment.code()
                ));
            }
            cfg.output = Some(OutputSpec {
                dir: out.clone(),
                format,
            });
            let report = experiments::run(&cfg).map_err(|e| e.to_string())?;
            let path = out.join(format!("{}_{}.{}", id.code(), id.name(), format.extension()));
            println!(
                "{} {}: {} rows in {:.2}s -> {}",
                id.code(),
                id.name(),
                report.rows.len(),
                report.metadata.wall_time_seconds,
                path.display()
            );
            if let Some(rate) = report.fitted_rate {
                println!("  fitted rate: {rate:.4}");
            }
            Ok(())
        }
    }
}
