//! Skeleton complexes: cells `(τ, component)` carried by `W̃_τ × T_{τ,Θ}`,
//! assembled from flow data or directly from `∂T`, and their comparison.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeVector, NewtonData};
use crate::localization::{Localizer, Model};
use crate::morse::{
    cone_correspondence_check, find_critical_points, flow_unstable, ConeReport, CriticalDatum, FlowLimit, FlowParams,
    FlowTrajectory, MorseError,
};
use crate::potential::Potential;
use crate::snf::{critical_torus, SubtorusDescription};
use crate::triangulation::{Simplex, StarTriangulation};
use crate::tropical::AmoebaPolytope;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("incomplete flow data: {0}")]
    IncompleteFlowData(String),
    #[error(transparent)]
    Morse(#[from] MorseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    Liouville,
    Rstz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonCell {
    pub simplex: String,
    pub vertices: Vec<LatticeVector>,
    pub simplex_dim: usize,
    pub component: usize,
    pub torus_dim: usize,
    pub shape: String,
    /// A point of the subtorus component.
    pub representative: Vec<f64>,
    /// Number of unstable trajectories carrying the cell (0 for the combinatorial complex).
    pub trajectories: usize,
}

impl SkeletonCell {
    pub fn dim(&self) -> usize {
        self.simplex_dim + self.torus_dim
    }

    /// `χ(open simplex × torus)`.
    pub fn euler(&self) -> i64 {
        if self.torus_dim > 0 {
            0
        } else if self.simplex_dim % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonComplex {
    pub kind: ComplexKind,
    pub dim: usize,
    pub cells: Vec<SkeletonCell>,
    /// `(face, cell)` pairs of the strict order, transitively closed.
    pub incidence: Vec<(usize, usize)>,
    pub euler: i64,
}

impl SkeletonComplex {
    pub fn count_shape(&self, shape: &str) -> usize {
        self.cells.iter().filter(|c| c.shape == shape).count()
    }

    fn key(&self, i: usize) -> (String, usize) {
        (self.cells[i].simplex.clone(), self.cells[i].component)
    }
}

fn shape_name(simplex_dim: usize, torus_dim: usize) -> String {
    let simplex = ["point", "interval", "disk", "ball"];
    let torus = |d: usize| match d {
        1 => "circle".to_string(),
        d => format!("T^{d}"),
    };
    match (simplex_dim, torus_dim) {
        (s, 0) => simplex.get(s).map_or(format!("D^{s}"), |x| x.to_string()),
        (0, d) => torus(d),
        (s, d) => format!("{} x {}", simplex.get(s).map_or(format!("D^{s}"), |x| x.to_string()), torus(d)),
    }
}

fn cells_for(tau: &Simplex, torus: &SubtorusDescription, carriers: usize) -> Vec<SkeletonCell> {
    (0..torus.components)
        .map(|c| SkeletonCell {
            simplex: tau.label(),
            vertices: tau.vertices.clone(),
            simplex_dim: tau.dim(),
            component: c,
            torus_dim: torus.dimension,
            shape: shape_name(tau.dim(), torus.dimension),
            representative: torus.representatives[c].clone(),
            trajectories: carriers,
        })
        .collect()
}

struct Builder {
    first_cell: Vec<usize>,
    tori: Vec<SubtorusDescription>,
    cells: Vec<SkeletonCell>,
    pairs: BTreeSet<(usize, usize)>,
}

impl Builder {
    fn new(data: &NewtonData, boundary: &[Simplex], carriers: &[usize]) -> Self {
        let tori: Vec<SubtorusDescription> = boundary.iter().map(|tau| critical_torus(data, tau)).collect();
        let mut cells = Vec::new();
        let mut first_cell = Vec::new();
        for (k, tau) in boundary.iter().enumerate() {
            first_cell.push(cells.len());
            cells.extend(cells_for(tau, &tori[k], carriers[k]));
        }
        Self { first_cell, tori, cells, pairs: BTreeSet::new() }
    }

    /// Attach every component of `tau` to the component of `face` it lies in.
    fn attach(&mut self, tau: usize, face: usize) {
        for c in 0..self.tori[tau].components {
            let rep = &self.tori[tau].representatives[c];
            if let Some(c2) = self.tori[face].component_of(rep) {
                self.pairs.insert((self.first_cell[face] + c2, self.first_cell[tau] + c));
            }
        }
    }

    fn finish(self, kind: ComplexKind, dim: usize) -> SkeletonComplex {
        let mut pairs = self.pairs;
        loop {
            let extra: Vec<(usize, usize)> = pairs
                .iter()
                .flat_map(|&(a, b)| pairs.range((b, 0)..(b + 1, 0)).map(move |&(_, c)| (a, c)))
                .filter(|p| !pairs.contains(p))
                .collect();
            if extra.is_empty() {
                break;
            }
            pairs.extend(extra);
        }
        let euler = self.cells.iter().map(SkeletonCell::euler).sum();
        SkeletonComplex { kind, dim, cells: self.cells, incidence: pairs.into_iter().collect(), euler }
    }
}

/// Cells over `∂T` with incidences read off from where the unstable
/// trajectories of each critical point end. `crits` and `flows` are indexed
/// like `t.boundary`.
pub fn assemble_skeleton(
    data: &NewtonData,
    t: &StarTriangulation,
    crits: &[CriticalDatum],
    flows: &[Vec<FlowTrajectory>],
) -> Result<SkeletonComplex, SkeletonError> {
    if crits.len() != t.boundary.len() || flows.len() != crits.len() {
        return Err(SkeletonError::IncompleteFlowData(format!(
            "{} simplices, {} critical points, {} flow sets",
            t.boundary.len(),
            crits.len(),
            flows.len()
        )));
    }
    for (k, (c, f)) in crits.iter().zip(flows).enumerate() {
        if c.boundary_index != k {
            return Err(SkeletonError::IncompleteFlowData(format!("critical point {} is out of order", c.simplex)));
        }
        if f.is_empty() {
            return Err(SkeletonError::IncompleteFlowData(format!("no trajectories for {}", c.simplex)));
        }
        if f.iter().any(|tr| tr.limit == FlowLimit::Divergent) {
            return Err(SkeletonError::IncompleteFlowData(format!("divergent trajectory from {}", c.simplex)));
        }
    }
    let carriers: Vec<usize> = flows.iter().map(Vec::len).collect();
    let mut b = Builder::new(data, &t.boundary, &carriers);
    for (k, f) in flows.iter().enumerate() {
        let targets: BTreeSet<usize> = f.iter().filter_map(FlowTrajectory::limit_index).filter(|&j| j != k).collect();
        for j in targets {
            b.attach(k, j);
        }
    }
    Ok(b.finish(ComplexKind::Liouville, data.dim))
}

/// The combinatorial complex: incidences from the face relation of `∂T`.
pub fn rstz_complex(data: &NewtonData, t: &StarTriangulation) -> SkeletonComplex {
    let mut b = Builder::new(data, &t.boundary, &vec![0; t.boundary.len()]);
    for (k, tau) in t.boundary.iter().enumerate() {
        for (j, face) in t.boundary.iter().enumerate() {
            if j != k && face.is_face_of(tau) {
                b.attach(k, j);
            }
        }
    }
    b.finish(ComplexKind::Rstz, data.dim)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cells: (usize, usize),
    pub incidences: (usize, usize),
    pub euler: (i64, i64),
    pub isomorphic: bool,
    /// First disagreement found, if any.
    pub mismatch: Option<String>,
}

/// Matches cells by `(τ, component)` and compares the incidence orders and
/// Euler characteristics.
pub fn compare_complexes(s: &SkeletonComplex, r: &SkeletonComplex) -> ComparisonReport {
    let keys_s: BTreeSet<(String, usize)> = (0..s.cells.len()).map(|i| s.key(i)).collect();
    let keys_r: BTreeSet<(String, usize)> = (0..r.cells.len()).map(|i| r.key(i)).collect();
    let inc_s: BTreeSet<_> = s.incidence.iter().map(|&(a, b)| (s.key(a), s.key(b))).collect();
    let inc_r: BTreeSet<_> = r.incidence.iter().map(|&(a, b)| (r.key(a), r.key(b))).collect();
    let mut mismatch = None;
    if let Some(k) = keys_s.symmetric_difference(&keys_r).next() {
        let side = if keys_s.contains(k) { "only in first" } else { "only in second" };
        mismatch = Some(format!("cell {} component {} {side}", k.0, k.1));
    } else if let Some((a, b)) = inc_s.symmetric_difference(&inc_r).next() {
        let side = if inc_s.contains(&(a.clone(), b.clone())) { "only in first" } else { "only in second" };
        mismatch = Some(format!("incidence {}#{} < {}#{} {side}", a.0, a.1, b.0, b.1));
    } else if s.euler != r.euler {
        mismatch = Some(format!("Euler characteristics {} and {}", s.euler, r.euler));
    } else if let Some(i) = (0..s.cells.len()).find(|&i| {
        let j = (0..r.cells.len()).find(|&j| r.key(j) == s.key(i)).unwrap_or(0);
        s.cells[i].shape != r.cells[j].shape
    }) {
        mismatch = Some(format!("cell {} has different shapes", s.cells[i].simplex));
    }
    ComparisonReport {
        cells: (s.cells.len(), r.cells.len()),
        incidences: (inc_s.len(), inc_r.len()),
        euler: (s.euler, r.euler),
        isomorphic: mismatch.is_none(),
        mismatch,
    }
}

/// Everything computed on the way to the Liouville complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonRun {
    pub critical: Vec<CriticalDatum>,
    pub flows: Vec<Vec<FlowTrajectory>>,
    pub cones: Vec<ConeReport>,
    pub complex: SkeletonComplex,
}

/// Critical points, unstable flows, cone checks and the assembled complex.
pub fn compute_skeleton(
    loc: &Localizer,
    amoeba: &AmoebaPolytope,
    phi: &dyn Potential,
    model: Model,
    params: &FlowParams,
) -> Result<SkeletonRun, SkeletonError> {
    let critical = find_critical_points(loc, amoeba, phi, model)?;
    let flows: Vec<Vec<FlowTrajectory>> = (0..critical.len())
        .into_par_iter()
        .map(|k| flow_unstable(loc, phi, model, &critical, k, params))
        .collect::<Result<_, _>>()?;
    let cones = critical
        .iter()
        .enumerate()
        .filter(|(_, c)| c.morse_index > 0)
        .map(|(k, c)| {
            let closure: Vec<FlowTrajectory> = critical
                .iter()
                .enumerate()
                .filter(|&(j, d)| j != k && d.vertices.iter().all(|v| c.vertices.contains(v)))
                .flat_map(|(j, _)| flows[j].iter().cloned())
                .collect();
            cone_correspondence_check(&flows[k], &closure, c, &critical, phi, 0.05, 0.1)
        })
        .collect();
    let complex = assemble_skeleton(loc.data, loc.t, &critical, &flows)?;
    Ok(SkeletonRun { critical, flows, cones, complex })
}
