//! Configuration-driven runner behind the `holoball` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{parse_config, Command, RunSpec};
pub use error::{ErrorKind, RunError};

pub const DEFAULT_OUT_DIR: &str = "holoball-out";

/// Parses, runs and writes one experiment. Returns the written paths.
pub fn execute(
    command: Command,
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<Vec<PathBuf>, RunError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        RunError::validation(
            "config",
            format!("cannot read {}: {e}", config_path.display()),
        )
    })?;
    let base = config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut spec = config::parse_str(&text, base, Some(command))
        .map_err(|e| RunError::validation("config", e))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let outcome = run::run(&spec)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| spec.output.as_ref().map(|o| spec.base_dir.join(o)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let mut artifacts = outcome.artifacts;
    let report = output::report_bytes(
        &spec,
        &outcome.seeds,
        &outcome.results,
        &artifacts,
        timestamp(),
    )?;
    artifacts.insert(0, output::Artifact::new(output::REPORT_FILE, report));
    output::write_all(&dir, &artifacts)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
