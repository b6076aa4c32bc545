use std::path::PathBuf;
use std::process::ExitCode;

use berryfield_cli::{parse_config, run, CliError, Command};
use clap::{Parser, ValueEnum};

#[derive(Parser)]
#[command(
    version,
    about = "Berry potentials, curvatures and identity checks on parameter grids"
)]
struct Args {
    command: Cmd,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Fields,
    Verify,
    Monopole,
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Fields => Command::Fields,
            Cmd::Verify => Command::Verify,
            Cmd::Monopole => Command::Monopole,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn execute(args: Args) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(CliError::io(&args.config))?;
    let mut config = parse_config(&text)?;
    let command = Command::from(args.command);
    if let Some(c) = config.command.filter(|&c| c != command) {
        eprintln!(
            "note: config names command `{}`, running `{}`",
            c.as_str(),
            command.as_str()
        );
    }
    config.command = Some(command);
    let dir = args.output_dir.unwrap_or_else(|| config.output_dir.clone());
    let outcome = run(command, &config, &dir)?;
    for f in &outcome.files {
        println!("{}", dir.join(f).display());
    }
    println!("{}", if outcome.pass { "PASS" } else { "FAIL" });
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
