use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use usher::harness::{
    compare, dump_oracle, format_report, run_verification_suite, train, write_metrics,
    ExperimentConfig, SuiteConfig,
};

/// Tabular multi-goal RL lab: HER, USHER and exact oracles.
#[derive(Parser)]
#[command(name = "usher", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write its metrics CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides train.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print each metrics row as it is produced.
        #[arg(long)]
        progress: bool,
    },
    /// Run the oracle verification suite.
    Verify {
        /// Optional TOML file with suite parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the report to `<out>/verify.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump exact Q* and f* tables for a config's environment.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip f* when it has more entries than this.
        #[arg(long, default_value_t = 1 << 24)]
        max_f_entries: usize,
    },
    /// Join metrics CSVs into one long-format CSV.
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Verification,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => ExitCode::from(2),
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            progress,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(config_err)?;
            if let Some(seed) = seed {
                cfg.train.seed = seed;
            }
            if let Some(out) = out {
                cfg.output.directory = std::env::current_dir().map_err(config_err)?.join(out);
            }
            let mut show = |row: &usher::harness::MetricsRow| {
                if progress {
                    eprintln!(
                        "episode {} success {:.3} return {:.4} bias {:+.4}",
                        row.episode, row.success_rate, row.avg_return, row.bias_start
                    );
                }
            };
            let run = train(&cfg, &mut show).map_err(config_err)?;
            let path = cfg.csv_path();
            write_metrics(&run.metrics, &path).map_err(config_err)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Verify { config, seed, out } => {
            let mut suite = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                    toml::from_str::<SuiteConfig>(&text)
                        .map_err(|e| config_err(format!("{}: {e}", path.display())))?
                }
                None => SuiteConfig::default(),
            };
            if let Some(seed) = seed {
                suite.seed = seed;
            }
            let checks = run_verification_suite(&suite);
            let report = format_report(&checks);
            print!("{report}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(config_err)?;
                std::fs::write(dir.join("verify.txt"), &report).map_err(config_err)?;
            }
            if checks.iter().all(|c| c.pass) {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Oracle {
            config,
            out,
            max_f_entries,
        } => {
            let cfg = ExperimentConfig::load(&config).map_err(config_err)?;
            let mdp = cfg.build_env().map_err(config_err)?;
            for path in dump_oracle(&mdp, &out, max_f_entries).map_err(config_err)? {
                println!("{path}");
            }
            Ok(())
        }
        Command::Compare { inputs, out } => {
            let table = compare(&inputs).map_err(config_err)?;
            match out {
                Some(path) => std::fs::write(&path, table)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?,
                None => print!("{table}"),
            }
            Ok(())
        }
    }
}
