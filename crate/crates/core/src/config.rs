//! Run configuration, read from TOML and validated into typed values.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, Rat};
use crate::lattice::{InstanceError, LatticeVector, NewtonData};
use crate::localization::Model;
use crate::morse::{FlowParams, ScanGrid};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {reason}")]
    Schema { field: String, reason: String },
}

fn schema(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Schema { field: field.to_string(), reason: reason.into() }
}

/// A height given as an integer or a rational string such as `"3/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeightValue {
    Int(i64),
    Text(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    dim: Option<usize>,
    vertices: Option<Vec<Vec<i64>>>,
    heights: Option<Vec<HeightValue>>,
    phases: Option<Vec<f64>>,
    beta: Option<f64>,
    beta_list: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    mode: Option<String>,
    delta: Option<f64>,
    p: Option<u32>,
    epsilon: Option<f64>,
    matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    flow_step: Option<f64>,
    flow_tol: Option<f64>,
    dist_stop: Option<f64>,
    floor_tol: Option<f64>,
    locus_band: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    liouville_samples: Option<usize>,
    scan_directions: Option<usize>,
    scan_angles: Option<usize>,
    closeness_samples: Option<usize>,
    surface_samples: Option<usize>,
    ring_seeds: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    directory: Option<PathBuf>,
    plots: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    seed: Option<u64>,
    model: Option<Model>,
    instance: Option<RawInstance>,
    #[serde(default)]
    potential: RawPotential,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    sampling: RawSampling,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub dim: usize,
    pub vertices: Vec<Vec<i64>>,
    pub heights: Vec<HeightValue>,
    pub phases: Vec<f64>,
    pub beta: f64,
    pub beta_list: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PotentialConfig {
    Gauge { delta: f64, p: u32, epsilon: f64 },
    Quadratic { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub flow_step: f64,
    pub flow_tol: f64,
    pub dist_stop: f64,
    pub floor_tol: f64,
    pub locus_band: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub liouville_samples: usize,
    pub scan_directions: usize,
    pub scan_angles: usize,
    pub closeness_samples: usize,
    pub surface_samples: usize,
    pub ring_seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub directory: PathBuf,
    pub plots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub model: Model,
    pub instance: InstanceConfig,
    pub potential: PotentialConfig,
    pub tolerances: Tolerances,
    pub sampling: Sampling,
    pub outputs: Outputs,
}

fn positive(field: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(schema(field, format!("must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::validate(raw)
    }

    fn validate(raw: RawConfig) -> Result<Self, ConfigError> {
        let schema_version = raw.schema_version.ok_or_else(|| schema("schema_version", "missing"))?;
        if schema_version != SCHEMA_VERSION {
            return Err(schema("schema_version", format!("unsupported version {schema_version}, expected {SCHEMA_VERSION}")));
        }
        let inst = raw.instance.ok_or_else(|| schema("instance", "missing section"))?;
        let vertices = inst.vertices.ok_or_else(|| schema("instance.vertices", "missing"))?;
        let dim = inst.dim.or_else(|| vertices.first().map(Vec::len)).ok_or_else(|| schema("instance.dim", "missing"))?;
        if !(1..=3).contains(&dim) {
            return Err(schema("instance.dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if let Some(i) = vertices.iter().position(|v| v.len() != dim) {
            return Err(schema("instance.vertices", format!("vertex {i} has {} coordinates, expected {dim}", vertices[i].len())));
        }
        let heights = inst.heights.ok_or_else(|| schema("instance.heights", "missing"))?;
        if heights.len() != vertices.len() {
            return Err(schema("instance.heights", format!("{} entries for {} vertices", heights.len(), vertices.len())));
        }
        for (i, h) in heights.iter().enumerate() {
            if let HeightValue::Text(s) = h {
                if exact::parse_rat(s).is_none() {
                    return Err(schema("instance.heights", format!("entry {i} ({s:?}) is not a rational number")));
                }
            }
        }
        let phases = match inst.phases {
            Some(p) => {
                if p.len() != vertices.len() {
                    return Err(schema("instance.phases", format!("{} entries for {} vertices", p.len(), vertices.len())));
                }
                if let Some(i) = p.iter().position(|x| !(0.0..TAU).contains(x)) {
                    return Err(schema("instance.phases", format!("entry {i} = {} is outside [0, 2π)", p[i])));
                }
                p
            }
            None => vertices.iter().map(|v| if v.iter().all(|&c| c == 0) { PI } else { 0.0 }).collect(),
        };
        let beta = positive("instance.beta", inst.beta.unwrap_or(100.0))?;
        let beta_list = inst.beta_list.unwrap_or_else(|| vec![25.0, 100.0, 400.0]);
        if beta_list.is_empty() {
            return Err(schema("instance.beta_list", "must not be empty"));
        }
        for &b in &beta_list {
            positive("instance.beta_list", b)?;
        }

        let pot = raw.potential;
        let potential = match pot.mode.as_deref().unwrap_or("gauge") {
            "gauge" => {
                let p = pot.p.unwrap_or(8);
                if p < 4 || p % 2 != 0 {
                    return Err(schema("potential.p", format!("must be an even integer >= 4, got {p}")));
                }
                let delta = pot.delta.unwrap_or(0.1);
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(schema("potential.delta", format!("must lie in (0, 1), got {delta}")));
                }
                PotentialConfig::Gauge { delta, p, epsilon: positive("potential.epsilon", pot.epsilon.unwrap_or(0.05))? }
            }
            "quadratic" => {
                let matrix = pot.matrix.unwrap_or_else(|| {
                    (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
                });
                if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                    return Err(schema("potential.matrix", format!("must be {dim}x{dim}")));
                }
                PotentialConfig::Quadratic { matrix }
            }
            other => return Err(schema("potential.mode", format!("unknown mode {other:?}, expected gauge or quadratic"))),
        };

        let tol = raw.tolerances;
        let defaults = FlowParams::default();
        let grid = ScanGrid::default();
        let tolerances = Tolerances {
            flow_step: positive("tolerances.flow_step", tol.flow_step.unwrap_or(defaults.max_step_len))?,
            flow_tol: positive("tolerances.flow_tol", tol.flow_tol.unwrap_or(defaults.tol))?,
            dist_stop: positive("tolerances.dist_stop", tol.dist_stop.unwrap_or(defaults.dist_stop))?,
            floor_tol: positive("tolerances.floor_tol", tol.floor_tol.unwrap_or(grid.floor_tol))?,
            locus_band: positive("tolerances.locus_band", tol.locus_band.unwrap_or(grid.locus_band))?,
        };
        let s = raw.sampling;
        let sampling = Sampling {
            liouville_samples: s.liouville_samples.unwrap_or(100),
            scan_directions: s.scan_directions.unwrap_or(grid.directions),
            scan_angles: s.scan_angles.unwrap_or(grid.angles),
            closeness_samples: s.closeness_samples.unwrap_or(400),
            surface_samples: s.surface_samples.unwrap_or(100),
            ring_seeds: s.ring_seeds.unwrap_or(defaults.ring_seeds),
        };
        if sampling.ring_seeds < 4 {
            return Err(schema("sampling.ring_seeds", "must be at least 4"));
        }
        let outputs = Outputs {
            directory: raw.outputs.directory.unwrap_or_else(|| PathBuf::from("tropskel-out")),
            plots: raw.outputs.plots.unwrap_or(true),
        };
        let cfg = Self {
            schema_version,
            seed: raw.seed.unwrap_or(0),
            model: raw.model.unwrap_or_default(),
            instance: InstanceConfig { dim, vertices, heights, phases, beta, beta_list },
            potential,
            tolerances,
            sampling,
            outputs,
        };
        cfg.newton_data().map_err(|e| instance_error(&e))?;
        Ok(cfg)
    }

    pub fn heights_rat(&self) -> Vec<Rat> {
        self.instance
            .heights
            .iter()
            .map(|h| match h {
                HeightValue::Int(i) => exact::rat(*i),
                HeightValue::Text(s) => exact::parse_rat(s).expect("validated"),
            })
            .collect()
    }

    pub fn newton_data(&self) -> Result<NewtonData, InstanceError> {
        let points = self.instance.vertices.iter().map(|v| LatticeVector::new(v.clone())).collect();
        NewtonData::new(self.instance.dim, points, self.heights_rat(), self.instance.phases.clone(), self.instance.beta)
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams {
            max_step_len: self.tolerances.flow_step,
            tol: self.tolerances.flow_tol,
            dist_stop: self.tolerances.dist_stop,
            ring_seeds: self.sampling.ring_seeds,
            ..FlowParams::default()
        }
    }

    pub fn scan_grid(&self) -> ScanGrid {
        ScanGrid {
            directions: self.sampling.scan_directions,
            angles: self.sampling.scan_angles,
            floor_tol: self.tolerances.floor_tol,
            locus_band: self.tolerances.locus_band,
            ..ScanGrid::default()
        }
    }
}

fn instance_error(e: &InstanceError) -> ConfigError {
    let field = match e {
        InstanceError::Unsupported(_) => "instance.dim",
        InstanceError::OriginPhase(_) | InstanceError::PhaseOutOfRange { .. } => "instance.phases",
        InstanceError::OriginHeight => "instance.heights",
        InstanceError::LengthMismatch { what, .. } => {
            if *what == "phases" {
                "instance.phases"
            } else {
                "instance.heights"
            }
        }
        InstanceError::BadBeta(_) => "instance.beta",
        _ => "instance.vertices",
    };
    schema(field, e.to_string())
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    RunConfig::from_toml_str(&text)
}
