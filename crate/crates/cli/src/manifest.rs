//! Run manifests: enough resolved configuration to reproduce any output
//! file bit-for-bit on the same build.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub master_seed: u64,
    /// Fully resolved knobs of this run.
    pub config: serde_json::Value,
    /// Wall-clock metadata; not part of the reproducibility contract.
    pub created_unix_s: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, master_seed: u64, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            master_seed,
            config,
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// `out.csv` gets its manifest at `out.manifest.json`.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "output".to_string());
        name.push_str(".manifest.json");
        out.with_file_name(name)
    }

    pub fn write_alongside(&self, out: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(Self::path_for(out), body + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_path_replaces_extension() {
        assert_eq!(
            RunManifest::path_for(Path::new("runs/a.csv")),
            PathBuf::from("runs/a.manifest.json")
        );
        assert_eq!(
            RunManifest::path_for(Path::new("plain")),
            PathBuf::from("plain.manifest.json")
        );
    }
}
