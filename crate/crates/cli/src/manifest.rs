//! JSON run manifest, written once per run directory.

use crate::config::RunConfig;
use anyhow::{bail, Context, Result};
use epflow_core::linearized::operators::Conventions;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const CONFIG_ECHO_NAME: &str = "config.txt";

#[derive(Clone, Debug, Serialize)]
pub struct ConventionConstants {
    pub fourier_sign: f64,
    pub a_variant: &'static str,
    pub sigma_a: f64,
    pub sigma_rho: f64,
}

impl From<Conventions> for ConventionConstants {
    fn from(c: Conventions) -> Self {
        Self {
            fourier_sign: c.fourier_sign,
            a_variant: c.variant.name(),
            sigma_a: c.sigma_a,
            sigma_rho: c.sigma_rho,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceEntry {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub version: String,
    pub conventions: ConventionConstants,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub acceptance: Vec<AcceptanceEntry>,
    pub success: bool,
    pub error: Option<String>,
}

/// The output directory of one run; collects timings and file names for the
/// manifest.
pub struct RunDir {
    pub path: PathBuf,
    manifest: RunManifest,
    start: Instant,
    written: bool,
}

impl RunDir {
    /// Creates the directory and writes the config echo.
    pub fn create(config: &RunConfig) -> Result<Self> {
        let path = config.output.clone();
        std::fs::create_dir_all(&path).with_context(|| format!("cannot create output directory {}", path.display()))?;
        if path.join(MANIFEST_NAME).exists() {
            std::fs::remove_file(path.join(MANIFEST_NAME))?;
        }
        std::fs::write(path.join(CONFIG_ECHO_NAME), config.echo())?;
        let started_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Ok(Self {
            path,
            manifest: RunManifest {
                config: config.clone(),
                version: version_string(),
                conventions: Conventions::RESOLVED.into(),
                started_unix,
                wall_clock_seconds: 0.0,
                stages: vec![],
                outputs: vec![CONFIG_ECHO_NAME.into()],
                acceptance: vec![],
                success: false,
                error: None,
            },
            start: Instant::now(),
            written: false,
        })
    }

    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        self.path.join(name)
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self);
        self.manifest.stages.push(StageTiming {
            name: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn set_acceptance(&mut self, entries: Vec<AcceptanceEntry>) {
        self.manifest.acceptance = entries;
    }

    /// Writes the manifest; a second call is an error.
    pub fn finish(&mut self, outcome: &Result<()>) -> Result<()> {
        if self.written {
            bail!("manifest already written");
        }
        self.manifest.wall_clock_seconds = self.start.elapsed().as_secs_f64();
        self.manifest.success = outcome.is_ok();
        self.manifest.error = outcome.as_ref().err().map(|e| format!("{e:#}"));
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(self.path.join(MANIFEST_NAME), text + "\n")?;
        self.written = true;
        Ok(())
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }
}

pub fn version_string() -> String {
    format!("epflow {}", env!("CARGO_PKG_VERSION"))
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_NAME)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_written_once_with_conventions() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.output = dir.path().join("run");
        let mut run = RunDir::create(&c).unwrap();
        run.stage("noop", |_| Ok(())).unwrap();
        let failed: Result<()> = Err(anyhow::anyhow!("boom"));
        run.finish(&failed).unwrap();
        assert!(run.finish(&Ok(())).is_err());
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest_path(&c.output)).unwrap()).unwrap();
        assert_eq!(v["conventions"]["sigma_a"], -1.0);
        assert_eq!(v["config"]["n"], 32);
        assert_eq!(v["success"], false);
        assert_eq!(v["stages"][0]["name"], "noop");
        assert!(c.output.join(CONFIG_ECHO_NAME).is_file());
    }
}
