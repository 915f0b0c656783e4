use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lteu_ruin::experiment::{run_and_write, ScenarioConfig};
use lteu_ruin::Error;

#[derive(Parser)]
#[command(
    name = "lteu-ruin",
    version,
    about = "Ruin-based LTE-U/WiFi duty-cycle sharing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run sweeps and write sweep_<name>.csv plus manifest_<name>.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Sweep to run; all sweeps in the config when omitted.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::from_file(path).map_err(|e| {
        eprintln!("error: {e}");
        // an unreadable config file is still a config problem
        if matches!(e, Error::Io { .. }) {
            ExitCode::from(2)
        } else {
            exit_code(&e)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                let names: Vec<&str> = c.sweeps.iter().map(|s| s.name.as_str()).collect();
                println!("ok: sweeps [{}]", names.join(", "));
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, sweep, out } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let names: Vec<String> = match sweep {
                Some(name) => {
                    if let Err(e) = config.sweep(&name) {
                        eprintln!("error: {e}");
                        return exit_code(&e);
                    }
                    vec![name]
                }
                None => config.sweeps.iter().map(|s| s.name.clone()).collect(),
            };
            for name in names {
                match run_and_write(&config, &name, &out) {
                    Ok(rows) => println!("{name}: {} rows -> {}", rows.len(), out.display()),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return exit_code(&e);
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}
