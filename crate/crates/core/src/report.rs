//! Structured run reports, written as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::morse::{ConeReport, CriticalDatum, FlowTrajectory, LiouvilleReport, ScanReport};
use crate::potential::AdaptednessReport;
use crate::skeleton::{ComparisonReport, SkeletonComplex};

/// Serde codec for `f64` that keeps `inf`, `-inf` and `nan` as strings,
/// since JSON has no literals for them.
pub mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("invalid float {other:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangulationSummary {
    pub maximal: Vec<String>,
    pub boundary: Vec<String>,
    pub boundary_f_vector: Vec<usize>,
    /// `n! · vol(Q)`.
    pub normalized_volume: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceMapRow {
    pub simplex: String,
    pub face_dim: usize,
    pub face_vertices: Vec<Vec<String>>,
    pub face_rays: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaSummary {
    /// `normal · u <= bound`, exact.
    pub constraints: Vec<String>,
    pub vertices: Vec<Vec<String>>,
    pub rays: Vec<Vec<String>>,
    pub face_map: Vec<FaceMapRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub origin: String,
    pub limit: Option<String>,
    pub samples: usize,
    pub max_level_error: f64,
    pub phi_decreasing: bool,
    /// At most 200 points of the trajectory in `u`.
    pub polyline: Vec<Vec<f64>>,
}

impl TrajectorySummary {
    pub fn from_trajectory(t: &FlowTrajectory, crits: &[CriticalDatum]) -> Self {
        let stride = t.samples.len().div_ceil(200).max(1);
        let mut polyline: Vec<Vec<f64>> = t.samples.iter().step_by(stride).map(|(_, u)| u.clone()).collect();
        if t.samples.len() > 1 && (t.samples.len() - 1) % stride != 0 {
            polyline.push(t.samples[t.samples.len() - 1].1.clone());
        }
        Self {
            origin: crits[t.origin].simplex.clone(),
            limit: t.limit_index().map(|i| crits[i].simplex.clone()),
            samples: t.samples.len(),
            max_level_error: t.max_level_error,
            phi_decreasing: t.phi_decreasing,
            polyline,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSummary {
    pub liouville: SkeletonComplex,
    pub rstz: SkeletonComplex,
    pub comparison: ComparisonReport,
    pub cones: Vec<ConeReport>,
    pub trajectories: Vec<TrajectorySummary>,
}

/// One verification row. A failing row names the offending object in `detail`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    #[serde(with = "float")]
    pub measured: f64,
    pub threshold: String,
    pub detail: String,
}

impl CheckRow {
    pub fn new(name: &str, pass: bool, measured: f64, threshold: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, measured, threshold: threshold.into(), detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub subcommand: String,
    pub config: RunConfig,
    pub triangulation: Option<TriangulationSummary>,
    pub amoeba: Option<AmoebaSummary>,
    pub adaptedness: Option<AdaptednessReport>,
    pub critical: Option<Vec<CriticalDatum>>,
    pub skeleton: Option<SkeletonSummary>,
    pub liouville: Option<LiouvilleReport>,
    pub scan: Option<ScanReport>,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(subcommand: &str, config: &RunConfig) -> Self {
        Self {
            schema_version: crate::config::SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            config: config.clone(),
            triangulation: None,
            amoeba: None,
            adaptedness: None,
            critical: None,
            skeleton: None,
            liouville: None,
            scan: None,
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, row: CheckRow) {
        self.pass &= row.pass;
        self.checks.push(row);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
