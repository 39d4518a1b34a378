use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pgx::env::{Layout, LayoutName};
use pgx::experiment::{load_config, run_config, RunOptions};
use pgx::Error;

#[derive(Parser)]
#[command(name = "pgx", version, about = "Policy-gradient exploration workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (or a previous manifest.json).
    Run {
        config: PathBuf,
        /// Master seed; overrides PGX_SEED and the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; overrides PGX_OUT and the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Print a maze layout as ASCII.
    Layouts {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn report(path: &Path, err: &Error) -> ExitCode {
    match err {
        Error::Config { line: Some(line), message } => {
            eprintln!("{}:{line}: {message}", path.display());
            ExitCode::from(2)
        }
        Error::Config { line: None, message } => {
            eprintln!("{}: {message}", path.display());
            ExitCode::from(2)
        }
        other => {
            eprintln!("error: {other}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<pgx::experiment::ExperimentConfig, ExitCode> {
    load_config(path).map_err(|e| match e {
        Error::Io(io) => {
            eprintln!("{}: {io}", path.display());
            ExitCode::from(2)
        }
        Error::Json(json) => {
            eprintln!("{}:{}: {json}", path.display(), json.line());
            ExitCode::from(2)
        }
        other => report(path, &other),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            out,
        } => {
            let experiment = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let options = match (RunOptions { seed, out, threads }).with_env() {
                Ok(o) => o,
                Err(e) => return report(&config, &e),
            };
            match run_config(experiment, &options) {
                Ok(summary) => {
                    let m = &summary.manifest;
                    println!(
                        "{} ({}) seed {} finished in {:.1}s -> {}",
                        m.name,
                        m.kind.as_str(),
                        m.seed,
                        m.wall_time_s,
                        summary.out_dir.display()
                    );
                    for f in &m.files {
                        println!("  {}", f.path);
                    }
                    if m.within_budget == Some(false) {
                        eprintln!(
                            "warning: exceeded the declared time budget of {}s",
                            m.time_budget_s.unwrap_or_default()
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => report(&config, &e),
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{}: ok ({} experiment `{}`)", config.display(), c.kind.as_str(), c.name);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Layouts { name, seed } => {
            let layout = name.parse::<LayoutName>().and_then(|n| Layout::generate(n, seed));
            match layout {
                Ok(l) => {
                    print!("{}", l.render());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    let names: Vec<&str> = LayoutName::ALL.iter().map(|n| n.as_str()).collect();
                    eprintln!("error: {e}; known layouts: {}", names.join(", "));
                    ExitCode::from(2)
                }
            }
        }
    }
}
