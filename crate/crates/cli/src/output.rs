//! Artifact writing and run manifests.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    command: &'static str,
    inputs: Vec<(String, PathBuf)>,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    argv: Vec<String>,
    created_unix: u64,
    config: &'a RunConfig,
    inputs: Vec<InputEntry>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct InputEntry {
    role: String,
    path: String,
}

impl<'a> Run<'a> {
    pub fn start(cfg: &'a RunConfig, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out).map_err(|e| CliError::output(&cfg.out, e))?;
        Ok(Self { cfg, command, inputs: Vec::new(), outputs: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    /// Resolves an input path, defaulting to `default_name` in the output directory.
    pub fn input(&mut self, role: &str, given: Option<&Path>, default_name: &str) -> PathBuf {
        let p = given.map_or_else(|| self.path(default_name), Path::to_path_buf);
        self.inputs.push((role.to_string(), p.clone()));
        p
    }

    pub fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>,
    ) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| CliError::output(&p, e))?;
        let mut w = BufWriter::new(f);
        body(&mut w).map_err(|e| CliError::output(&p, e))?;
        w.flush().map_err(|e| CliError::output(&p, e))?;
        self.outputs.push(p.clone());
        Ok(p)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()).map_err(|e| e.to_string()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Serializes `rows` as CSV or a JSON array according to the configured format.
    pub fn write_table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        match self.cfg.format {
            crate::config::Format::Json => self.write_json(&format!("{stem}.json"), &rows),
            crate::config::Format::Csv => self.write_with(&format!("{stem}.csv"), |w| {
                let mut out = csv::Writer::from_writer(w);
                for r in rows {
                    out.serialize(r).map_err(|e| e.to_string())?;
                }
                out.flush().map_err(|e| e.to_string())
            }),
        }
    }

    /// Writes `manifest_<command>.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let m = Manifest {
            tool: "acnn",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().collect(),
            created_unix,
            config: self.cfg,
            inputs: self
                .inputs
                .iter()
                .map(|(role, p)| InputEntry { role: role.clone(), path: p.display().to_string() })
                .collect(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let p = self.cfg.out.join(format!("manifest_{}.json", self.command.replace('-', "_")));
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Data(e.to_string()))? + "\n";
        fs::write(&p, text).map_err(|e| CliError::output(&p, e))?;
        println!("manifest: {}", p.display());
        Ok(p)
    }
}
