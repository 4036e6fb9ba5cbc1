//! Report assembly and atomic output. Files are staged in a hidden directory
//! next to their destination and renamed into place only once all of them
//! have been written.

use std::io::Write;
use std::path::{Path, PathBuf};

use holoball_core::supgrid::ShellProfile;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunSpec;
use crate::error::RunError;
use crate::run::Seeds;

pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: &str, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.to_string(),
            bytes,
        }
    }
}

#[derive(Serialize)]
struct Versions {
    holoball: &'static str,
    #[serde(rename = "holoball-core")]
    core: &'static str,
}

/// Field order is fixed; `timestamp` comes first and sits on its own line.
#[derive(Serialize)]
struct Report<'a> {
    timestamp: String,
    command: &'static str,
    versions: Versions,
    seeds: &'a Seeds,
    config: &'a RunSpec,
    files: Vec<&'a str>,
    results: &'a Value,
}

pub fn report_bytes(
    spec: &RunSpec,
    seeds: &Seeds,
    results: &Value,
    artifacts: &[Artifact],
    timestamp: String,
) -> Result<Vec<u8>, RunError> {
    let report = Report {
        timestamp,
        command: spec.command.name(),
        versions: Versions {
            holoball: env!("CARGO_PKG_VERSION"),
            core: holoball_core::VERSION,
        },
        seeds,
        config: spec,
        files: artifacts.iter().map(|a| a.name.as_str()).collect(),
        results,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&report).map_err(|e| RunError::runtime("report", e))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn profile_bytes(profile: &ShellProfile) -> Result<Vec<u8>, RunError> {
    let mut buf = Vec::new();
    profile
        .write_csv(&mut buf)
        .map_err(|e| RunError::runtime("report.profile_csv", e))?;
    Ok(buf)
}

/// Writes a shell profile as `gap,value` CSV with 17 significant digits.
pub fn emit_profile_csv(profile: &ShellProfile, path: &Path) -> Result<(), RunError> {
    if profile.values.is_empty() {
        return Err(RunError::validation("profile", "empty profile"));
    }
    write_all(
        path.parent().unwrap_or(Path::new(".")),
        &[Artifact::new(
            &path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            profile_bytes(profile)?,
        )],
    )
    .map(|_| ())
}

/// Writes every artifact into `dir`, or none of them.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, RunError> {
    let io_err = |e: std::io::Error| RunError::runtime("output", format!("{}: {e}", dir.display()));
    let dir = if dir.as_os_str().is_empty() {
        Path::new(".")
    } else {
        dir
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let staging = tempfile::Builder::new()
        .prefix(".holoball-staging-")
        .tempdir_in(dir)
        .map_err(io_err)?;
    for a in artifacts {
        if a.name.is_empty() || a.name.contains(['/', '\\']) {
            return Err(RunError::runtime(
                "output",
                format!("bad file name {:?}", a.name),
            ));
        }
        let mut f = std::fs::File::create(staging.path().join(&a.name)).map_err(io_err)?;
        f.write_all(&a.bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let dest = dir.join(&a.name);
        std::fs::rename(staging.path().join(&a.name), &dest).map_err(io_err)?;
        written.push(dest);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(n: usize) -> ShellProfile {
        let gaps: Vec<f64> = (1..=n).map(|k| 0.5f64.powi(k as i32)).collect();
        let values: Vec<f64> = (1..=n).map(|k| 1.0 / 3.0 + k as f64 * 1e-17).collect();
        ShellProfile::new(gaps, values, 3).unwrap()
    }

    #[test]
    fn three_shells_give_four_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.csv");
        emit_profile_csv(&profile(3), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next(), Some("gap,value"));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = profile(5);
        emit_profile_csv(&p, &path).unwrap();
        let back = ShellProfile::read_csv(std::fs::File::open(&path).unwrap(), 3).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn empty_profile_is_rejected() {
        let empty = ShellProfile {
            shell_gaps: vec![],
            values: vec![],
            tail_estimate: 0.0,
            tail_shells: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        assert!(emit_profile_csv(&empty, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let arts = [
            Artifact::new("a.csv", b"x".to_vec()),
            Artifact::new("bad/name", b"y".to_vec()),
        ];
        assert!(write_all(dir.path(), &arts).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
