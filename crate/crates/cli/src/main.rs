mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::Value;

use args::{Cli, Command};
use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments; exit code 2.
    Usage(String),
    /// Failure inside the computation; exit code 1.
    Core(fermat_core::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
        }
    }
}

impl From<fermat_core::Error> for CliError {
    fn from(e: fermat_core::Error) -> Self {
        match e {
            fermat_core::Error::InvalidParameter { name, reason } => {
                CliError::Usage(format!("--{}: {reason}", name.replace('_', "-")))
            }
            fermat_core::Error::UnknownPreset(_) => CliError::Usage(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

/// Appends flags from a `--config` JSON object that are not already on the
/// command line.
fn merge_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strs: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strs.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("--config {path}: {e}")))?;
    let Value::Object(map) = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("--config {path}: {e}")))?
    else {
        return Err(CliError::Usage(format!(
            "--config {path}: expected a JSON object"
        )));
    };
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if strs
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
        {
            continue;
        }
        let scalar = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => argv.push(flag.into()),
            Value::Array(items) => {
                argv.push(flag.into());
                argv.push(
                    items
                        .iter()
                        .map(scalar)
                        .collect::<Vec<_>>()
                        .join(",")
                        .into(),
                );
            }
            other => {
                argv.push(flag.into());
                argv.push(scalar(&other).into());
            }
        }
    }
    Ok(argv)
}

/// Runs a command and writes its manifest next to the outputs.
pub fn run_recorded(command: Command) -> Result<commands::RunOutput, CliError> {
    let start = Instant::now();
    let out = commands::execute(&command)?;
    if let Some(target) = commands::output_of(&command).cloned() {
        let manifest = RunManifest {
            command: commands::name_of(&command),
            seed: out.seed,
            artifacts: out.artifacts.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: fermat_core::rng::RNG_NAME.to_string(),
            threads: rayon::current_num_threads(),
            wall_time_s: start.elapsed().as_secs_f64(),
            config: command,
        };
        let path = manifest::write(&manifest, &target)?;
        eprintln!("manifest: {}", path.display());
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Replay(args) => commands::replay(&args),
        command => run_recorded(command).map(|_| true),
    }
}

fn main() -> ExitCode {
    let argv = match merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
