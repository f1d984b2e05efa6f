//! Run configuration: a flat TOML table with per-experiment defaults, file
//! overrides and `key=value` overrides from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::EvolveConfig;
use crate::surgery::SurgeryConfig;

/// Variable that, when set, replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "NLS_SURGERY_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    /// Surgery on pseudoconformal blowup data.
    E1,
    /// Global run below the ground state mass.
    E2,
    /// Exterior smoothing of rescaled solitons.
    E3,
    /// Virial prediction of the blowup time.
    E4,
    /// Classification of synthetic mass traces.
    E5,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [Self::E1, Self::E2, Self::E3, Self::E4, Self::E5];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::E1 => "e1",
            Self::E2 => "e2",
            Self::E3 => "e3",
            Self::E4 => "e4",
            Self::E5 => "e5",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}; expected one of e1..e5")))
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentId,
    pub d: usize,
    pub n: usize,
    pub r_max: f64,
    /// Residual target of the ground state solve.
    pub gs_tol: f64,

    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_safety: f64,

    pub window: f64,
    pub s_max: f64,
    pub g_max: f64,
    pub plateau_tol: f64,
    pub min_core_cells: f64,
    pub max_events: usize,

    /// Start and end of the evolution.
    pub t0: f64,
    pub t_end: f64,
    /// E2: mass of the initial data in units of `M(Q)`.
    pub mass_ratio: f64,
    /// E4: Gaussian amplitude and focusing chirp `β` in `A e^{-r²/2 − iβr²}`.
    pub amplitude: f64,
    pub chirp: f64,
    /// E3: soliton radii.
    pub radii: Vec<f64>,
    /// E3: dyadic exponents `k_min..=k_max` of the exterior profile.
    pub k_min: i32,
    pub k_max: i32,
    /// E5: number of random field pairs for the cosine rule.
    pub pairs: usize,
    pub seed: u32,

    pub output_dir: PathBuf,
    /// Diagnostics row every this many steps.
    pub trace_every: usize,
    /// Field checkpoint every this many steps; 0 for none.
    pub checkpoint_every: usize,
}

impl RunConfig {
    pub fn defaults(experiment: ExperimentId) -> Self {
        let surgery = SurgeryConfig::default();
        let base = RunConfig {
            experiment,
            d: 5,
            n: 2048,
            r_max: 30.0,
            gs_tol: 1e-10,
            dt_min: surgery.evolve.dt_min,
            dt_max: surgery.evolve.dt_max,
            dt_safety: surgery.evolve.dt_safety,
            window: surgery.window,
            s_max: surgery.s_max,
            g_max: surgery.g_max,
            plateau_tol: surgery.plateau_tol,
            min_core_cells: surgery.min_core_cells,
            max_events: surgery.max_events,
            t0: 0.0,
            t_end: 1.0,
            mass_ratio: 0.81,
            amplitude: 20.0,
            chirp: 0.29,
            radii: vec![0.1, 0.2, 0.4],
            k_min: -4,
            k_max: 2,
            pairs: 64,
            seed: 20240501,
            output_dir: PathBuf::from("out"),
            trace_every: surgery.trace_every,
            checkpoint_every: 0,
        };
        match experiment {
            ExperimentId::E1 => RunConfig { t0: -1.0, t_end: 0.5, ..base },
            ExperimentId::E2 => RunConfig { t_end: 10.0, trace_every: 50, ..base },
            ExperimentId::E3 => RunConfig { r_max: 15.0, ..base },
            ExperimentId::E4 => RunConfig { n: 4096, ..base },
            ExperimentId::E5 => RunConfig { t0: 0.5, n: 1024, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.d < 4 {
            return fail(format!("d = {} must be at least 4", self.d));
        }
        if !self.n.is_power_of_two() || self.n < 8 {
            return fail(format!("n = {} must be a power of two, at least 8", self.n));
        }
        let positive = [
            ("r_max", self.r_max),
            ("gs_tol", self.gs_tol),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("dt_safety", self.dt_safety),
            ("window", self.window),
            ("s_max", self.s_max),
            ("g_max", self.g_max),
            ("plateau_tol", self.plateau_tol),
            ("min_core_cells", self.min_core_cells),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} = {v} must be positive and finite"));
            }
        }
        if self.dt_min > self.dt_max {
            return fail(format!("dt_min = {} exceeds dt_max = {}", self.dt_min, self.dt_max));
        }
        if !(self.t0.is_finite() && self.t_end.is_finite()) {
            return fail("t0 and t_end must be finite".into());
        }
        if self.trace_every == 0 {
            return fail("trace_every must be at least 1".into());
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return fail(format!("radii {:?} must be positive", self.radii));
        }
        if self.k_min > self.k_max {
            return fail(format!("k_min = {} exceeds k_max = {}", self.k_min, self.k_max));
        }
        if !(self.mass_ratio > 0.0 && self.amplitude > 0.0 && self.chirp.is_finite()) {
            return fail("mass_ratio and amplitude must be positive".into());
        }
        self.surgery().validate()
    }

    pub fn evolve(&self) -> EvolveConfig {
        EvolveConfig {
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            dt_safety: self.dt_safety,
            grad_cap: self.g_max,
            nonlinear: true,
        }
    }

    pub fn surgery(&self) -> SurgeryConfig {
        SurgeryConfig {
            window: self.window,
            s_max: self.s_max,
            g_max: self.g_max,
            plateau_tol: self.plateau_tol,
            min_core_cells: self.min_core_cells,
            max_events: self.max_events,
            trace_every: self.trace_every,
            checkpoint_every: self.checkpoint_every,
            evolve: self.evolve(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        Self::from_table(table)
    }

    /// Defaults of the experiment named in `table`, overlaid with its keys.
    fn from_table(table: toml::Table) -> Result<Self> {
        let id = match table.get("experiment") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(other) => return Err(Error::Config(format!("experiment must be a string, got {other}"))),
            None => return Err(Error::Config("missing key `experiment`".into())),
        };
        let mut merged = Self::defaults(id).table()?;
        for (key, value) in table {
            let value = coerce(merged.get(&key), value);
            merged.insert(key, value);
        }
        let cfg: RunConfig = toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Build the configuration of a run: experiment defaults, then the
    /// optional file, then the `key=value` overrides.
    pub fn assemble(experiment: ExperimentId, file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = Self::defaults(experiment).table()?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            let from_file: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(format!("{}: {e}", path.display())))?;
            if let Some(v) = from_file.get("experiment") {
                if v.as_str().map(|s| s.eq_ignore_ascii_case(experiment.as_str())) != Some(true) {
                    return Err(Error::Config(format!("config file is for experiment {v}, not {experiment}")));
                }
            }
            for (key, value) in from_file {
                let value = coerce(table.get(&key), value);
                table.insert(key, value);
            }
        }
        for kv in overrides {
            let (key, value) = parse_override(kv)?;
            if key == "experiment" {
                return Err(Error::Config("the experiment is chosen on the command line".into()));
            }
            let value = coerce(table.get(&key), value);
            table.insert(key, value);
        }
        table.insert("experiment".into(), toml::Value::String(experiment.as_str().into()));
        Self::from_table(table)
    }

    /// Apply the output directory override from the environment.
    pub fn with_env_output_dir(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
        self
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }
}

/// Integers written where the default is a float (`t_end = 2`) become floats.
fn coerce(existing: Option<&toml::Value>, value: toml::Value) -> toml::Value {
    match (existing, value) {
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (Some(toml::Value::Array(a)), toml::Value::Array(b)) if a.iter().all(toml::Value::is_float) => {
            toml::Value::Array(b.into_iter().map(|v| coerce(Some(&toml::Value::Float(0.0)), v)).collect())
        }
        (_, value) => value,
    }
}

/// `key=value` with the value read as a TOML value, or as a bare string when
/// it does not parse as one.
fn parse_override(kv: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = kv.split_once('=').ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
    let key = key.trim().to_string();
    if key.is_empty() {
        return Err(Error::Config(format!("override {kv:?} has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}
