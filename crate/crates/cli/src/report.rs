use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fingerprint {
    /// File name without directories, so reports do not depend on where the
    /// input lives.
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of(path: &Path, contents: &[u8]) -> Self {
        let digest = Sha256::digest(contents);
        Fingerprint {
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            bytes: contents.len(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub command: String,
    pub inputs: Vec<Fingerprint>,
    pub parameters: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    /// Emitted files, relative to the output directory.
    pub files: Vec<String>,
}

impl AnalysisReport {
    pub fn new(command: &str) -> Self {
        AnalysisReport {
            command: command.into(),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            results: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.into(), serde_json::to_value(value).expect("parameter serializes"));
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.into(), serde_json::to_value(value).expect("result serializes"));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Output directory plus the list of files written into it.
pub struct Output {
    dir: Option<PathBuf>,
    pub format: Format,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Output { dir, format })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn write(&self, report: &mut AnalysisReport, name: &str, contents: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            report.files.push(name.to_string());
        }
        Ok(())
    }

    /// Write `stem.csv` or `stem.json` depending on the chosen format.
    pub fn table(&self, report: &mut AnalysisReport, stem: &str, csv: impl FnOnce() -> String, json: &impl Serialize) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        let name = format!("{stem}.{}", self.format.extension());
        let contents = match self.format {
            Format::Csv => csv(),
            Format::Json => serde_json::to_string_pretty(json)? + "\n",
        };
        self.write(report, &name, &contents)
    }

    pub fn finish(&self, report: &mut AnalysisReport) -> Result<()> {
        if let Some(d) = &self.dir {
            report.files.push("report.json".into());
            let path = d.join("report.json");
            std::fs::write(&path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Quote a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
