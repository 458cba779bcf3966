//! Problem instance: marked lattice points with heights and phases.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, Rat};

/// Integer point of the lattice `N ≅ Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Self(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    pub fn as_rat(&self) -> Vec<Rat> {
        self.0.iter().map(|&c| exact::rat(c)).collect()
    }

    pub fn dot_f64(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(&a, &x)| a as f64 * x).sum()
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("dimension must be 1..=3, got {0}")]
    Unsupported(usize),
    #[error("point {index} has {got} coordinates, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("the origin is not among the marked points")]
    OriginMissing,
    #[error("h(0) must be 0")]
    OriginHeight,
    #[error("Θ(0) must be π, got {0}")]
    OriginPhase(f64),
    #[error("duplicate point {0}")]
    DuplicatePoint(LatticeVector),
    #[error("phase {phase} of point {index} is outside [0, 2π)")]
    PhaseOutOfRange { index: usize, phase: f64 },
    #[error("{what} has {got} entries for {expected} points")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error("conv(A) is not full-dimensional")]
    DegenerateQ,
}

/// The marked point set `A ∋ 0` with heights `h`, phases `Θ` and the
/// tropical parameter `β`. Entries of `heights` and `phases` are aligned with
/// `points`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonData {
    pub dim: usize,
    pub points: Vec<LatticeVector>,
    pub heights: Vec<Rat>,
    pub phases: Vec<f64>,
    pub beta: f64,
}

impl NewtonData {
    pub fn new(
        dim: usize,
        points: Vec<LatticeVector>,
        heights: Vec<Rat>,
        phases: Vec<f64>,
        beta: f64,
    ) -> Result<Self, InstanceError> {
        let data = Self { dim, points, heights, phases, beta };
        data.validate()?;
        Ok(data)
    }

    /// Convenience constructor with integer heights and `Θ = π` at the
    /// origin, 0 elsewhere.
    pub fn with_integer_heights(
        points: &[&[i64]],
        heights: &[i64],
        beta: f64,
    ) -> Result<Self, InstanceError> {
        let dim = points.first().map_or(0, |p| p.len());
        let pts: Vec<LatticeVector> = points.iter().map(|p| LatticeVector::new(p.to_vec())).collect();
        let phases = pts.iter().map(|p| if p.is_zero() { PI } else { 0.0 }).collect();
        Self::new(dim, pts, heights.iter().map(|&h| exact::rat(h)).collect(), phases, beta)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if !(1..=3).contains(&self.dim) {
            return Err(InstanceError::Unsupported(self.dim));
        }
        for (index, p) in self.points.iter().enumerate() {
            if p.dim() != self.dim {
                return Err(InstanceError::DimensionMismatch { index, got: p.dim(), expected: self.dim });
            }
        }
        let m = self.points.len();
        if self.heights.len() != m {
            return Err(InstanceError::LengthMismatch { what: "heights", got: self.heights.len(), expected: m });
        }
        if self.phases.len() != m {
            return Err(InstanceError::LengthMismatch { what: "phases", got: self.phases.len(), expected: m });
        }
        for i in 0..m {
            for j in 0..i {
                if self.points[i] == self.points[j] {
                    return Err(InstanceError::DuplicatePoint(self.points[i].clone()));
                }
            }
        }
        let origin = self.origin_index().ok_or(InstanceError::OriginMissing)?;
        if !self.heights[origin].is_zero() {
            return Err(InstanceError::OriginHeight);
        }
        for (index, &phase) in self.phases.iter().enumerate() {
            if !(0.0..TAU).contains(&phase) || !phase.is_finite() {
                return Err(InstanceError::PhaseOutOfRange { index, phase });
            }
        }
        if (self.phases[origin] - PI).abs() > 1e-9 {
            return Err(InstanceError::OriginPhase(self.phases[origin]));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(InstanceError::BadBeta(self.beta));
        }
        let rows: Vec<Vec<Rat>> = self.points.iter().map(LatticeVector::as_rat).collect();
        if exact::rank(&rows) != self.dim {
            return Err(InstanceError::DegenerateQ);
        }
        Ok(())
    }

    pub fn origin_index(&self) -> Option<usize> {
        self.points.iter().position(LatticeVector::is_zero)
    }

    /// Index of the origin; the instance is validated on construction.
    pub fn origin(&self) -> usize {
        self.origin_index().expect("validated instance contains the origin")
    }

    pub fn height_f64(&self, i: usize) -> f64 {
        exact::to_f64(&self.heights[i])
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn index_of(&self, p: &LatticeVector) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    /// All heights of non-origin points strictly positive.
    pub fn heights_positive_off_origin(&self) -> bool {
        let o = self.origin();
        self.heights.iter().enumerate().all(|(i, h)| i == o || h.is_positive())
    }
}

/// Worked instances used throughout the tests and the CLI examples.
pub mod instances {
    use super::*;

    /// Pair of pants: `A = {0, e1, e2}`, `h = (0, 1, 1)`.
    pub fn pair_of_pants(beta: f64) -> NewtonData {
        NewtonData::with_integer_heights(&[&[0, 0], &[1, 0], &[0, 1]], &[0, 1, 1], beta).unwrap()
    }

    /// Mirror of the projective plane: `A = {0, e1, e2, -e1-e2}`, `h = (0, 1, 1, 1)`.
    pub fn mirror_p2(beta: f64) -> NewtonData {
        NewtonData::with_integer_heights(&[&[0, 0], &[1, 0], &[0, 1], &[-1, -1]], &[0, 1, 1, 1], beta)
            .unwrap()
    }

    /// `A = {0, (0,1), (1,1), (-1,-2)}`, `h = (0, 1, 1, 1)`; the amoeba
    /// polytope has a top edge on which `|u|^2` is minimized at an endpoint.
    pub fn skew_triangle(beta: f64) -> NewtonData {
        NewtonData::with_integer_heights(&[&[0, 0], &[0, 1], &[1, 1], &[-1, -2]], &[0, 1, 1, 1], beta)
            .unwrap()
    }

    /// Mirror of projective 3-space: `A = {0, e1, e2, e3, -e1-e2-e3}`, `h = 1` off the origin.
    pub fn mirror_p3(beta: f64) -> NewtonData {
        NewtonData::with_integer_heights(
            &[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[-1, -1, -1]],
            &[0, 1, 1, 1, 1],
            beta,
        )
        .unwrap()
    }
}
