//! Run configuration from `key = value` text, JSON, or `--key value` flags.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Linearize,
    Nonuniform,
    Analyticity,
    Selftest,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Self::Solve,
            "linearize" => Self::Linearize,
            "nonuniform" => Self::Nonuniform,
            "analyticity" => Self::Analyticity,
            "selftest" => Self::Selftest,
            _ => bail!("command must be one of solve, linearize, nonuniform, analyticity, selftest (got `{s}`)"),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationChoice {
    Eulerian,
    Lagrangian,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Equilibrium,
    Translation,
    BumpPair,
    Smooth,
    File,
}

/// Every accepted key with its default, as shown by `--help`.
pub const KEYS: &[(&str, &str)] = &[
    ("command", "solve | linearize | nonuniform | analyticity | selftest"),
    ("n", "grid points per axis (32)"),
    ("L", "box length (2π)"),
    ("s", "Sobolev index, must exceed 5/2 (3)"),
    ("T", "final time (1)"),
    ("dt", "time step (1e-3)"),
    ("formulation", "eulerian | lagrangian | both (both)"),
    ("preset", "equilibrium | translation | bump-pair | smooth | file (smooth)"),
    ("amplitude", "amplitude of the smooth and bump-pair presets (0.1)"),
    ("velocity", "translation velocity c, comma separated (0.3,-0.2,0.1)"),
    ("rho_file", "density snapshot ρ̄ for preset = file"),
    ("u_file", "velocity snapshot for preset = file"),
    ("R", "data-space ball radius (250)"),
    ("n_list", "comma separated increasing integers (2,4,8,16)"),
    ("probe_floor", "smallest accepted probe value (1e-6)"),
    ("separation", "distance from x* to supp u0 (2L/2π)"),
    ("probe_norm", "H^s norm of the probe bump (200)"),
    ("probe_radius", "radius of the probe bump (1.5L/2π)"),
    ("degree", "Chebyshev degree for analyticity (20)"),
    ("labels", "number of particle labels for analyticity (5)"),
    ("newton_tol", "Poisson-Boltzmann residual tolerance (1e-12)"),
    ("output_every", "steps between recorded states (100)"),
    ("output", "output directory (epflow-out)"),
    ("seed", "seed for randomized inputs (0)"),
    ("reference", "selftest only: earlier selftest directory to compare CSVs against"),
    ("criteria", "selftest only: comma separated criterion ids to run (all)"),
    ("inject", "selftest only: criterion id whose tolerances are forced to fail"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
    pub formulation: FormulationChoice,
    pub preset: Preset,
    pub amplitude: f64,
    pub velocity: [f64; 3],
    pub rho_file: Option<PathBuf>,
    pub u_file: Option<PathBuf>,
    #[serde(rename = "R")]
    pub r_ball: f64,
    pub n_list: Vec<usize>,
    pub probe_floor: f64,
    pub separation: Option<f64>,
    pub probe_norm: f64,
    pub probe_radius: Option<f64>,
    pub degree: usize,
    pub labels: usize,
    pub newton_tol: f64,
    pub output_every: usize,
    pub output: PathBuf,
    pub seed: u64,
    pub reference: Option<PathBuf>,
    pub criteria: Vec<u32>,
    pub inject: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            n: 32,
            length: 2.0 * std::f64::consts::PI,
            s: 3.0,
            t: 1.0,
            dt: 1e-3,
            formulation: FormulationChoice::Both,
            preset: Preset::Smooth,
            amplitude: 0.1,
            velocity: [0.3, -0.2, 0.1],
            rho_file: None,
            u_file: None,
            r_ball: 250.0,
            n_list: vec![2, 4, 8, 16],
            probe_floor: 1e-6,
            separation: None,
            probe_norm: 200.0,
            probe_radius: None,
            degree: 20,
            labels: 5,
            newton_tol: 1e-12,
            output_every: 100,
            output: PathBuf::from("epflow-out"),
            seed: 0,
            reference: None,
            criteria: (1..=12).collect(),
            inject: None,
        }
    }
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| anyhow!("{key} must be a number (got `{v}`)"))
}

fn integer(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| anyhow!("{key} must be a nonnegative integer (got `{v}`)"))
}

fn list<T, F: Fn(&str, &str) -> Result<T>>(key: &str, v: &str, f: F) -> Result<Vec<T>> {
    v.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| f(key, p))
        .collect()
}

impl RunConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "command" => self.command = Command::parse(v)?,
            "n" => self.n = integer(key, v)?,
            "L" => self.length = number(key, v)?,
            "s" => self.s = number(key, v)?,
            "T" => self.t = number(key, v)?,
            "dt" => self.dt = number(key, v)?,
            "formulation" => {
                self.formulation = match v {
                    "eulerian" => FormulationChoice::Eulerian,
                    "lagrangian" => FormulationChoice::Lagrangian,
                    "both" => FormulationChoice::Both,
                    _ => bail!("formulation must be eulerian, lagrangian or both (got `{v}`)"),
                }
            }
            "preset" => {
                self.preset = match v {
                    "equilibrium" => Preset::Equilibrium,
                    "translation" => Preset::Translation,
                    "bump-pair" => Preset::BumpPair,
                    "smooth" => Preset::Smooth,
                    "file" => Preset::File,
                    _ => bail!("preset must be equilibrium, translation, bump-pair, smooth or file (got `{v}`)"),
                }
            }
            "amplitude" => self.amplitude = number(key, v)?,
            "velocity" => {
                let c = list(key, v, number)?;
                if c.len() != 3 {
                    bail!("velocity must have three components (got {})", c.len());
                }
                self.velocity = [c[0], c[1], c[2]];
            }
            "rho_file" => self.rho_file = Some(PathBuf::from(v)),
            "u_file" => self.u_file = Some(PathBuf::from(v)),
            "R" => self.r_ball = number(key, v)?,
            "n_list" => self.n_list = list(key, v, integer)?,
            "probe_floor" => self.probe_floor = number(key, v)?,
            "separation" => self.separation = Some(number(key, v)?),
            "probe_norm" => self.probe_norm = number(key, v)?,
            "probe_radius" => self.probe_radius = Some(number(key, v)?),
            "degree" => self.degree = integer(key, v)?,
            "labels" => self.labels = integer(key, v)?,
            "newton_tol" => self.newton_tol = number(key, v)?,
            "output_every" => self.output_every = integer(key, v)?,
            "output" => self.output = PathBuf::from(v),
            "seed" => self.seed = v.parse().map_err(|_| anyhow!("seed must be a nonnegative integer (got `{v}`)"))?,
            "reference" => self.reference = Some(PathBuf::from(v)),
            "criteria" => self.criteria = list(key, v, integer)?.into_iter().map(|c| c as u32).collect(),
            "inject" => self.inject = Some(integer(key, v)? as u32),
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    /// Settings from config text: a JSON object, or one `key = value` per
    /// line with `#` comments.
    pub fn settings_from_text(text: &str) -> Result<Vec<(String, String)>> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
            let obj = v.as_object().ok_or_else(|| anyhow!("JSON config must be an object"))?;
            return obj
                .iter()
                .map(|(k, v)| {
                    let s = match v {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Number(n) => n.to_string(),
                        serde_json::Value::Bool(b) => b.to_string(),
                        serde_json::Value::Array(items) => items
                            .iter()
                            .map(|i| match i {
                                serde_json::Value::String(s) => s.clone(),
                                other => other.to_string(),
                            })
                            .collect::<Vec<_>>()
                            .join(","),
                        other => bail!("{k} has unsupported JSON value {other}"),
                    };
                    Ok((k.clone(), s))
                })
                .collect();
        }
        let mut out = vec![];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", i + 1))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    /// Defaults, then the config text, then the overrides, then validation.
    pub fn from_parts(text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut c = Self::default();
        if let Some(t) = text {
            for (k, v) in Self::settings_from_text(t)? {
                c.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_parts(Some(&text), overrides)
    }

    pub fn validate(&self) -> Result<()> {
        epflow_core::GridSpec::new(self.n, self.length).map_err(|e| anyhow!("n/L: {e}"))?;
        if !(self.s > 2.5) {
            bail!("s must exceed 5/2 (got {})", self.s);
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            bail!("T must be positive (got {})", self.t);
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bail!("dt must be positive (got {})", self.dt);
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            bail!("amplitude must be nonnegative (got {})", self.amplitude);
        }
        if !(self.r_ball > 0.0) {
            bail!("R must be positive (got {})", self.r_ball);
        }
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            bail!("n_list must be nonempty, positive and increasing (got {:?})", self.n_list);
        }
        if !(self.probe_floor > 0.0) {
            bail!("probe_floor must be positive (got {})", self.probe_floor);
        }
        if let Some(d) = self.separation {
            if !(d > 0.0) {
                bail!("separation must be positive (got {d})");
            }
        }
        if !(self.probe_norm > 0.0) {
            bail!("probe_norm must be positive (got {})", self.probe_norm);
        }
        if let Some(r) = self.probe_radius {
            if !(r > 0.0 && r < self.length / 4.0) {
                bail!("probe_radius must lie in (0, L/4) (got {r})");
            }
        }
        if self.degree < 16 {
            bail!("degree must be at least 16 (got {})", self.degree);
        }
        if self.labels == 0 {
            bail!("labels must be at least 1");
        }
        if !(self.newton_tol > 0.0) {
            bail!("newton_tol must be positive (got {})", self.newton_tol);
        }
        if self.output_every == 0 {
            bail!("output_every must be at least 1");
        }
        if self.preset == Preset::File {
            for (key, p) in [("rho_file", &self.rho_file), ("u_file", &self.u_file)] {
                match p {
                    None => bail!("preset = file needs {key}"),
                    Some(p) if !p.is_file() => bail!("{key} {} does not exist", p.display()),
                    _ => {}
                }
            }
        }
        if self.criteria.is_empty() || self.criteria.iter().any(|c| !(1..=12).contains(c)) {
            bail!("criteria must list ids between 1 and 12 (got {:?})", self.criteria);
        }
        if let Some(i) = self.inject {
            if !(1..=12).contains(&i) {
                bail!("inject must be a criterion id between 1 and 12 (got {i})");
            }
        }
        if let Some(r) = &self.reference {
            if !r.is_dir() {
                bail!("reference {} is not a directory", r.display());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> epflow_core::GridSpec {
        epflow_core::GridSpec::new(self.n, self.length).expect("validated")
    }

    /// `key = value` echo, one line per key in `KEYS` order.
    pub fn echo(&self) -> String {
        let v = serde_json::to_value(self).expect("serializable");
        let map: BTreeMap<String, serde_json::Value> = serde_json::from_value(v).expect("object");
        let mut out = String::new();
        for (k, _) in KEYS {
            if let Some(val) = map.get(*k) {
                let s = match val {
                    serde_json::Value::Null => continue,
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                    other => other.to_string(),
                };
                out.push_str(&format!("{k} = {s}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::from_parts(Some(""), &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.n, c.s, c.t, c.dt), (32, 3.0, 1.0, 1e-3));
        assert_eq!(c.length, 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn text_and_json_agree() {
        let a = RunConfig::from_parts(Some("n = 16 # grid\ns=3.5\nn_list = 2, 4\nvelocity = 1,0,0\n"), &[]).unwrap();
        let b = RunConfig::from_parts(Some(r#"{"n": 16, "s": 3.5, "n_list": [2, 4], "velocity": [1, 0, 0]}"#), &[]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_list, vec![2, 4]);
    }

    #[test]
    fn rejections_name_the_field() {
        let e = RunConfig::from_parts(Some("s = 2.0"), &[]).unwrap_err().to_string();
        assert!(e.contains("s must exceed 5/2"), "{e}");
        let e = RunConfig::from_parts(Some("dt = 0"), &[]).unwrap_err().to_string();
        assert!(e.contains("dt must be positive"), "{e}");
        let e = RunConfig::from_parts(Some("bogus = 1"), &[]).unwrap_err().to_string();
        assert!(e.contains("`bogus`"), "{e}");
        let e = RunConfig::from_parts(Some(r#"{"wat": 1}"#), &[]).unwrap_err().to_string();
        assert!(e.contains("`wat`"), "{e}");
        let e = RunConfig::from_parts(None, &[("n".into(), "14".into())]).is_err();
        assert!(e);
        let e = RunConfig::from_parts(None, &[("preset".into(), "file".into())]).unwrap_err().to_string();
        assert!(e.contains("rho_file"), "{e}");
    }

    #[test]
    fn overrides_win() {
        let c = RunConfig::from_parts(Some("n = 16"), &[("n".into(), "24".into())]).unwrap();
        assert_eq!(c.n, 24);
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.set("n", "16").unwrap();
        c.set("separation", "1.5").unwrap();
        let back = RunConfig::from_parts(Some(&c.echo()), &[]).unwrap();
        assert_eq!(back, c);
    }
}
