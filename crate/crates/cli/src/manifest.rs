//! Run manifests: every file-writing command records a JSON manifest whose
//! `command` field replays the run with all settings spelled out as flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fibersample::Result;
use serde::Serialize;

#[derive(Debug, Serialize)]
struct RunManifest {
    command: Vec<String>,
    seed: u64,
    instance: String,
    parameters: BTreeMap<String, String>,
    started: u64,
    finished: u64,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

enum ParamValue {
    Text(String),
    Flag(bool),
}

pub struct ManifestBuilder {
    subcommand: &'static str,
    seed: u64,
    instance: String,
    instance_tokens: Vec<String>,
    params: Vec<(String, ParamValue)>,
    started: u64,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl ManifestBuilder {
    pub fn new(subcommand: &'static str, seed: u64) -> Self {
        Self {
            subcommand,
            seed,
            instance: String::new(),
            instance_tokens: Vec::new(),
            params: Vec::new(),
            started: unix_now(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn fiber(&mut self, label: &str, tokens: &[String]) {
        self.instance = label.to_string();
        self.instance_tokens = tokens.to_vec();
    }

    pub fn param(&mut self, key: &str, value: impl Display) {
        self.params
            .push((key.to_string(), ParamValue::Text(value.to_string())));
    }

    pub fn flag(&mut self, key: &str, on: bool) {
        self.params.push((key.to_string(), ParamValue::Flag(on)));
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    pub fn warn_all<I: IntoIterator<Item = String>>(&mut self, messages: I) {
        self.warnings.extend(messages);
    }

    /// Finalizes and writes `manifest.json` into `out_dir` via a temp file
    /// so readers never see a partial manifest.
    pub fn write(self, out_dir: &Path) -> Result<()> {
        let mut command = vec!["fibersample".to_string(), self.subcommand.to_string()];
        command.extend(self.instance_tokens.iter().cloned());
        let mut parameters = BTreeMap::new();
        for (key, value) in &self.params {
            match value {
                ParamValue::Text(text) => {
                    command.push(format!("--{key}"));
                    command.push(text.clone());
                    parameters.insert(key.clone(), text.clone());
                }
                ParamValue::Flag(on) => {
                    if *on {
                        command.push(format!("--{key}"));
                    }
                    parameters.insert(key.clone(), on.to_string());
                }
            }
        }
        command.push("--seed".to_string());
        command.push(self.seed.to_string());
        command.push("--out".to_string());
        command.push(out_dir.display().to_string());

        let manifest = RunManifest {
            command,
            seed: self.seed,
            instance: self.instance,
            parameters,
            started: self.started,
            finished: unix_now(),
            outputs: self.outputs,
            warnings: self.warnings,
        };
        let mut body = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        body.push(b'\n');
        let tmp = out_dir.join("manifest.json.tmp");
        fs::write(&tmp, &body)?;
        fs::rename(&tmp, out_dir.join("manifest.json"))?;
        Ok(())
    }
}
