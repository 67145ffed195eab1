//! Run configuration: built-in defaults, overlaid by a TOML file, overlaid
//! by `--set key=value` pairs.

use anyhow::{bail, Context, Result};
use bhdimer_core::figures::{Fig1Config, Fig2Config, Fig3Config, Fig4Config, Method};
use bhdimer_core::gutzwiller::FixedPointOptions;
use bhdimer_core::{ModelParams, TrajectoryConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub j: f64,
    pub delta: f64,
    pub u: f64,
    pub f: f64,
    pub gamma: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { j: 0.25, delta: 1.75, u: 1.0, f: 1.07, gamma: 1.0 }
    }
}

impl ParamsSection {
    pub fn model(&self) -> ModelParams {
        ModelParams { j: self.j, delta: self.delta, u: self.u, f: Complex64::new(self.f, 0.0), gamma: self.gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub method: Method,
    /// One of `j`, `delta`, `u`, `f`, `gamma`, `f_sqrt_u`.
    pub variable: String,
    /// Explicit grid; when empty, `start`, `stop`, `points` and `spacing` are used.
    pub values: Vec<f64>,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
    /// Keep `J + Δ` at this value by adjusting `delta` whenever `j` changes.
    pub fixed_sum: Option<f64>,
    pub observables: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            method: Method::Ed,
            variable: "f".into(),
            values: Vec::new(),
            start: 0.0,
            stop: 1.0,
            points: 11,
            spacing: Spacing::Linear,
            fixed_sum: None,
            observables: vec!["n_total".into()],
        }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let g = if !self.values.is_empty() {
            self.values.clone()
        } else {
            match self.spacing {
                Spacing::Linear => bhdimer_core::figures::linspace(self.start, self.stop, self.points),
                Spacing::Log => {
                    if !(self.start > 0.0 && self.stop > 0.0) {
                        bail!("logarithmic sweep needs positive start and stop");
                    }
                    bhdimer_core::figures::logspace(self.start, self.stop, self.points)
                }
            }
        };
        if g.is_empty() {
            bail!("sweep grid is empty");
        }
        if g.iter().any(|x| !x.is_finite()) {
            bail!("sweep grid contains non-finite values");
        }
        Ok(g)
    }

    /// Parameters at one grid value.
    pub fn point(&self, base: &ModelParams, x: f64) -> Result<ModelParams> {
        let mut p = *base;
        match self.variable.as_str() {
            "j" => {
                p.j = x;
                if let Some(s) = self.fixed_sum {
                    p.delta = s - x;
                }
            }
            "delta" => p.delta = x,
            "u" => p.u = x,
            "f" => p.f = Complex64::new(x, 0.0),
            "gamma" => p.gamma = x,
            "f_sqrt_u" => {
                if p.u <= 0.0 {
                    bail!("f_sqrt_u sweep needs u > 0");
                }
                p.f = Complex64::new(x / p.u.sqrt(), 0.0)
            }
            other => bail!("unknown sweep variable '{other}'"),
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.observables.is_empty() {
            bail!("sweep needs at least one observable");
        }
        let known = self.method.observables();
        for o in &self.observables {
            if !known.contains(&o.as_str()) {
                bail!("unknown observable '{o}' for method {}; available: {}", self.method, known.join(", "));
            }
        }
        self.grid()?;
        self.point(&ModelParams::default(), 0.5)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    /// Total-photon cutoff of the two-mode space. When absent it is chosen by
    /// walking `ladder` at both sweep end points and keeping the larger result.
    pub n_max: Option<usize>,
    pub ladder: Vec<usize>,
    /// Allowed change of the exact total density between rungs.
    pub tol: f64,
}

impl Default for CutoffSection {
    fn default() -> Self {
        Self { n_max: None, ladder: vec![8, 10, 12, 14, 16, 18, 20], tol: 1e-7 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub params: ParamsSection,
    pub sweep: SweepSection,
    pub cutoff: CutoffSection,
    pub trajectories: TrajectoryConfig,
    pub fixed_point: FixedPointOptions,
    pub fig1: Fig1Config,
    pub fig2: Fig2Config,
    pub fig3: Fig3Config,
    pub fig4: Fig4Config,
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parse the right-hand side of `--set` as a TOML value, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("malformed key '{key}'");
    }
    let mut over = value;
    for part in parts.iter().rev() {
        let mut t = toml::Table::new();
        t.insert((*part).to_string(), over);
        over = toml::Value::Table(t);
    }
    merge(root, over);
    Ok(())
}

impl RunConfig {
    /// Defaults, then the file at `path`, then each `key=value` in `sets`.
    pub fn load(path: Option<&std::path::Path>, sets: &[String]) -> Result<Self> {
        let mut root = toml::Value::try_from(RunConfig::default()).context("serializing defaults")?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            merge(&mut root, toml::Value::Table(file));
        }
        for s in sets {
            let (k, v) = s.split_once('=').with_context(|| format!("--set expects key=value, got '{s}'"))?;
            set_path(&mut root, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: RunConfig = root.try_into().context("invalid configuration")?;
        cfg.trajectories.validate()?;
        Ok(cfg)
    }

    /// Push the run seed into every trajectory configuration.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.trajectories.seed = self.seed;
        self.fig2.trajectories.seed = self.seed;
        self
    }
}
