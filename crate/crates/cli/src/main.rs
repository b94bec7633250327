mod commands;
mod config;
mod output;

use clap::Parser;
use serde::Serialize;

use config::{Command, RunArgs};

/// Unadjusted and Metropolis-adjusted HMC samplers, diagnostics, regularity
/// audits and step-size planning.
#[derive(Parser, Debug)]
#[command(name = "uhmc", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    args: RunArgs,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(uhmc::Error),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        use uhmc::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Core(E::InvalidInput(_) | E::Unsupported(_) | E::FormulaDomain(_)) => 1,
            CliError::Core(E::Divergence { .. } | E::Convergence { .. } | E::DegenerateSeries) => 2,
            CliError::Core(E::Io(_) | E::Csv(_)) | CliError::Io(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "config",
            2 => "runtime",
            _ => "io",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<uhmc::Error> for CliError {
    fn from(e: uhmc::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn fail(err: &CliError) -> ! {
    let code = err.exit_code();
    let report = ErrorReport { error: err.kind(), message: err.to_string(), exit_code: code };
    eprintln!("{}", serde_json::to_string(&report).expect("serializable"));
    std::process::exit(code)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("QS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("QS_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => fail(&CliError::Config(e.to_string().trim_end().to_string())),
    };
    let result = configure_threads()
        .and_then(|_| cli.args.merge_config_file(cli.command))
        .and_then(|args| commands::run(cli.command, &args))
        .and_then(|out| Ok(commands::print_outputs(&out)?));
    if let Err(e) = result {
        fail(&e);
    }
}
