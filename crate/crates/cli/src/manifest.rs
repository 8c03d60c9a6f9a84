use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand name, e.g. `gen clutter`.
    pub command: String,
    /// Full parameter tree, defaults included.
    pub config: Command,
    pub seed: Option<u64>,
    pub artifacts: Vec<PathBuf>,
    pub tool_version: String,
    pub rng: String,
    pub threads: usize,
    pub wall_time_s: f64,
}

/// Manifest location for an output file or directory.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}

pub fn write(manifest: &RunManifest, out: &Path) -> Result<PathBuf, CliError> {
    let path = manifest_path(out);
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(path)
}

pub fn read(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a run manifest ({e})", path.display())))
}

/// The recorded command with every output redirected into `dir`, plus the
/// original-to-replayed path of each artifact.
pub fn redirect(manifest: &RunManifest, dir: &Path) -> (Command, Vec<(PathBuf, PathBuf)>) {
    let mut command = manifest.config.clone();
    let old_out = crate::commands::output_of(&command).cloned();
    let new_out = old_out.as_ref().map(|o| {
        if matches!(command, Command::Cluster(_)) {
            dir.to_path_buf()
        } else {
            dir.join(o.file_name().unwrap_or_default())
        }
    });
    if let Some(slot) = crate::commands::output_of_mut(&mut command) {
        if let Some(new) = &new_out {
            *slot = new.clone();
        }
    }
    let pairs = manifest
        .artifacts
        .iter()
        .map(|a| {
            let replayed = match (&old_out, &new_out) {
                (Some(old), Some(new)) if a.starts_with(old) && old != a => {
                    new.join(a.strip_prefix(old).unwrap())
                }
                _ => dir.join(a.file_name().unwrap_or_default()),
            };
            (a.clone(), replayed)
        })
        .collect();
    (command, pairs)
}
