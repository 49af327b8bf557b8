//! Run manifests: every file-producing subcommand writes a JSON manifest
//! next to its primary output recording the exact invocation, so a run
//! can be reproduced byte for byte.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            argv: std::env::args().skip(1).collect(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn inputs<'a>(mut self, paths: impl IntoIterator<Item = &'a PathBuf>) -> Self {
        for p in paths {
            self.inputs.push(p.display().to_string());
        }
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Write the manifest as `<primary>.manifest.json` (or
    /// `manifest.json` inside a directory output).
    pub fn write(self, primary: &Path) -> io::Result<()> {
        let path = if primary.is_dir() {
            primary.join("manifest.json")
        } else {
            let name = primary
                .file_name()
                .map(|n| n.to_string_lossy().to_string())
                .unwrap_or_else(|| "out".to_string());
            primary.with_file_name(format!("{name}.manifest.json"))
        };
        let mut body = serde_json::to_string_pretty(&self).expect("manifest serializes");
        body.push('\n');
        write_atomic(&path, body.as_bytes())
    }
}

/// Write a file atomically: write a sibling temp file, then rename over
/// the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!("{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
