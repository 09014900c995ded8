use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dahp_cli::{run, CliError, Command, RunOptions};

/// Day-ahead hourly pricing experiments.
#[derive(Debug, Parser)]
#[command(name = "dahp", version)]
struct Cli {
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let err = CliError::config(format!("arguments: {first}"));
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let opts = RunOptions {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
    };
    match run(cli.command, &opts) {
        Ok(summary) => {
            let files: Vec<&str> = summary.outputs.iter().map(|o| o.file.as_str()).collect();
            println!(
                "{}",
                serde_json::json!({
                    "status": "ok",
                    "command": summary.command,
                    "out_dir": summary.out_dir,
                    "outputs": files,
                })
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
