//! Critical points of `φ` restricted to the model boundary `{B = 0}`,
//! their Morse indices, and unstable-manifold flows.

mod flow;
mod liouville;

pub use flow::{cone_correspondence_check, flow_unstable, ConeReport, FlowLimit, FlowParams, FlowTrajectory};
pub use liouville::{
    liouville_field, liouville_identities, phase_deviation, restricted_norm, sample_positive_locus, scan_extraneous_critical,
    LiouvilleError, LiouvilleReport, LiouvilleSample, ScanGrid, ScanReport,
};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeVector;
use crate::localization::{LocalizationError, Localizer, Model};
use crate::potential::{face_minimizer, Potential, PotentialError};
use crate::triangulation::Simplex;
use crate::tropical::AmoebaPolytope;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error("Newton diverged from the seed of {0}")]
    SeedFailed(String),
    #[error("critical point census mismatch: {0}")]
    CountMismatch(String),
    #[error("Morse index {found} at {simplex}, expected {expected}")]
    IndexMismatch { simplex: String, expected: usize, found: usize },
    #[error("no critical point reached from {0}")]
    DivergentFlow(String),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalDatum {
    pub simplex: String,
    pub vertices: Vec<LatticeVector>,
    /// Position of the simplex in `StarTriangulation::boundary`.
    pub boundary_index: usize,
    /// `u`-coordinates on the model boundary (`ρ = βu`).
    pub location: Vec<f64>,
    /// `c` with `dφ = c·dF` (level `F = 1` for the convex model, `F̃ = 0` otherwise).
    pub multiplier: f64,
    pub morse_index: usize,
    pub value: f64,
    /// Minimizer of `φ` on the dual face of `P`.
    pub pl_limit: Vec<f64>,
    /// Eigenvalues of the projected Hessian of `φ − c_B B`.
    pub hessian_eigenvalues: Vec<f64>,
    pub level_residual: f64,
}

impl CriticalDatum {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn drift(&self) -> f64 {
        self.location.iter().zip(&self.pl_limit).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Orthonormal basis of `g^⊥` as the columns of an `n × (n−1)` matrix.
pub(crate) fn tangent_basis(g: &DVector<f64>) -> DMatrix<f64> {
    let n = g.len();
    let gh = g / g.norm();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v -= &gh * gh[i];
        for c in &cols {
            let d = v.dot(c);
            v -= c * d;
        }
        if v.norm() > 1e-6 {
            let nv = v.norm();
            cols.push(v / nv);
        }
        if cols.len() == n - 1 {
            break;
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// `c_B` minimizing `|∇φ − c∇B|`.
pub(crate) fn multiplier(gphi: &DVector<f64>, gb: &DVector<f64>) -> f64 {
    gphi.dot(gb) / gb.norm_squared()
}

/// Damped Newton on `{∇φ − c∇B = 0, B = 0}` from a boundary point. Returns
/// the point and `c_B`.
pub fn lagrange_newton(
    loc: &Localizer,
    phi: &dyn Potential,
    model: Model,
    start: &[f64],
) -> Option<(DVector<f64>, f64)> {
    let n = loc.dim();
    let mut u = DVector::from_column_slice(start);
    let b = loc.boundary_fn(u.as_slice(), model);
    if !b.value.is_finite() {
        return None;
    }
    let mut c = multiplier(&phi.grad(u.as_slice()), &b.grad);
    let residual = |u: &DVector<f64>, c: f64| -> Option<DVector<f64>> {
        let b = loc.boundary_fn(u.as_slice(), model);
        if !b.value.is_finite() {
            return None;
        }
        let mut r = DVector::zeros(n + 1);
        r.rows_mut(0, n).copy_from(&(phi.grad(u.as_slice()) - &b.grad * c));
        r[n] = b.value;
        Some(r)
    };
    let max_step = 5.0 / loc.beta;
    for _ in 0..200 {
        let r = residual(&u, c)?;
        let gphi = phi.grad(u.as_slice());
        if r.norm() < 1e-12 * (1.0 + gphi.norm()) {
            return Some((u, c));
        }
        let b = loc.boundary_fn(u.as_slice(), model);
        let mut j = DMatrix::zeros(n + 1, n + 1);
        j.view_mut((0, 0), (n, n)).copy_from(&(phi.hess(u.as_slice()) - &b.hess * c));
        for i in 0..n {
            j[(i, n)] = -b.grad[i];
            j[(n, i)] = b.grad[i];
        }
        let mut step = j.lu().solve(&r)?;
        let du = step.rows(0, n).norm();
        if du > max_step {
            step *= max_step / du;
        }
        let r0 = r.norm();
        let mut t = 1.0;
        loop {
            let un = &u - step.rows(0, n) * t;
            let cn = c - step[n] * t;
            if let Some(rn) = residual(&un, cn) {
                if rn.norm() < (1.0 - 1e-4 * t) * r0 || t < 1e-6 {
                    u = un;
                    c = cn;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-9 {
                return None;
            }
        }
    }
    let r = residual(&u, c)?;
    (r.norm() < 1e-8 * (1.0 + phi.grad(u.as_slice()).norm())).then_some((u, c))
}

/// Eigenvalues (ascending) of the Hessian of `φ − cB` on `T{B = 0}`.
pub fn projected_hessian_eigenvalues(loc: &Localizer, phi: &dyn Potential, model: Model, u: &[f64], c: f64) -> Vec<f64> {
    let b = loc.boundary_fn(u, model);
    let z = tangent_basis(&b.grad);
    if z.ncols() == 0 {
        return Vec::new();
    }
    let h = z.transpose() * (phi.hess(u) - &b.hess * c) * &z;
    let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// One critical point per simplex of `∂T`, each seeded at the minimizer of
/// `φ` on the dual face of `P`.
pub fn find_critical_points(
    loc: &Localizer,
    amoeba: &AmoebaPolytope,
    phi: &dyn Potential,
    model: Model,
) -> Result<Vec<CriticalDatum>, MorseError> {
    let t = loc.t;
    let found: Vec<Result<CriticalDatum, MorseError>> = t
        .boundary
        .par_iter()
        .enumerate()
        .map(|(k, tau)| critical_for(loc, amoeba, phi, model, k, tau))
        .collect();
    let crits: Vec<CriticalDatum> = found.into_iter().collect::<Result<_, _>>()?;
    for (i, a) in crits.iter().enumerate() {
        for b in &crits[i + 1..] {
            let d: f64 = a.location.iter().zip(&b.location).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            if d < 1e-6 {
                return Err(MorseError::CountMismatch(format!("{} and {} converged to the same point", a.simplex, b.simplex)));
            }
        }
    }
    Ok(crits)
}

fn critical_for(
    loc: &Localizer,
    amoeba: &AmoebaPolytope,
    phi: &dyn Potential,
    model: Model,
    k: usize,
    tau: &Simplex,
) -> Result<CriticalDatum, MorseError> {
    let p = &amoeba.poly;
    let face = &p.faces[amoeba.face_of[k]];
    let pl = face_minimizer(phi, p, face)?;
    let seed = loc.boundary_solve(&pl, model).map_err(|_| MorseError::SeedFailed(tau.label()))?;
    let (u, cb) = lagrange_newton(loc, phi, model, &seed).ok_or_else(|| MorseError::SeedFailed(tau.label()))?;
    let b = loc.boundary_fn(u.as_slice(), model);
    let eig = projected_hessian_eigenvalues(loc, phi, model, u.as_slice(), cb);
    let index = eig.iter().filter(|&&e| e < 0.0).count();
    if index != tau.dim() {
        return Err(MorseError::IndexMismatch { simplex: tau.label(), expected: tau.dim(), found: index });
    }
    // dF = β F dB with F = 1 on the convex model level; F̃ + 1 = e^{βB} likewise.
    let multiplier = cb / (loc.beta * (loc.beta * b.value).exp());
    Ok(CriticalDatum {
        simplex: tau.label(),
        vertices: tau.vertices.clone(),
        boundary_index: k,
        location: u.iter().copied().collect(),
        multiplier,
        morse_index: index,
        value: phi.value(u.as_slice()),
        pl_limit: pl,
        hessian_eigenvalues: eig,
        level_residual: b.value.abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub beta: f64,
    pub max_drift: f64,
    pub drift_sqrt_beta: f64,
    pub worst_simplex: String,
}

/// Largest distance between a critical point and its PL limit, per `β`.
pub fn drift_report(
    data: &crate::lattice::NewtonData,
    t: &crate::triangulation::StarTriangulation,
    amoeba: &AmoebaPolytope,
    phi: &dyn Potential,
    model: Model,
    betas: &[f64],
) -> Result<Vec<DriftRow>, MorseError> {
    betas
        .iter()
        .map(|&beta| {
            let d = data.with_beta(beta);
            let loc = Localizer::new(&d, t);
            let crits = find_critical_points(&loc, amoeba, phi, model)?;
            let worst = crits
                .iter()
                .max_by(|a, b| a.drift().total_cmp(&b.drift()))
                .ok_or_else(|| MorseError::CountMismatch("no critical points".into()))?;
            Ok(DriftRow {
                beta,
                max_drift: worst.drift(),
                drift_sqrt_beta: worst.drift() * beta.sqrt(),
                worst_simplex: worst.simplex.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::instances;
    use crate::potential::{build_adapted_potential, GaugePotential};
    use crate::triangulation::build_coherent_triangulation;
    use crate::tropical::complement_polytope;

    /// Local extrema of `φ` along the boundary curve, sampled densely by
    /// direction, as `(location, is_max)`.
    fn curve_extrema(loc: &Localizer, phi: &dyn Potential, model: Model, samples: usize) -> Vec<(Vec<f64>, bool)> {
        let pts: Vec<Option<(Vec<f64>, f64)>> = (0..samples)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / samples as f64;
                loc.boundary_solve(&[a.cos(), a.sin()], model).ok().map(|u| {
                    let v = phi.value(&u);
                    (u, v)
                })
            })
            .collect();
        let mut out = Vec::new();
        for k in 0..samples {
            let prev = &pts[(k + samples - 1) % samples];
            let next = &pts[(k + 1) % samples];
            if let (Some(a), Some(b), Some(c)) = (prev, &pts[k], next) {
                if b.1 < a.1 && b.1 < c.1 {
                    out.push((b.0.clone(), false));
                } else if b.1 > a.1 && b.1 > c.1 {
                    out.push((b.0.clone(), true));
                }
            }
        }
        out
    }

    #[test]
    fn pair_of_pants_quadratic() {
        let e1 = instances::pair_of_pants(100.0);
        let t = build_coherent_triangulation(&e1).unwrap();
        let am = complement_polytope(&e1, &t).unwrap();
        let loc = Localizer::new(&e1, &t);
        let phi = GaugePotential::identity(2);
        let crits = find_critical_points(&loc, &am, &phi, Model::Fhat).unwrap();
        assert_eq!(crits.len(), 3);
        let mut idx: Vec<usize> = crits.iter().map(|c| c.morse_index).collect();
        idx.sort();
        assert_eq!(idx, vec![0, 0, 1]);
        for target in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            assert!(crits.iter().any(|c| ((c.location[0] - target[0]).powi(2) + (c.location[1] - target[1]).powi(2)).sqrt() < 0.15));
        }
        assert!(crits.iter().all(|c| c.multiplier > 0.0 && c.level_residual < 1e-10));
        let ext = curve_extrema(&loc, &phi, Model::Fhat, 20_000);
        assert_eq!(ext.len(), 3);
        for (x, is_max) in ext {
            let c = crits
                .iter()
                .min_by(|a, b| {
                    let da: f64 = a.location.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum();
                    let db: f64 = b.location.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            let d: f64 = c.location.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            assert!(d < 2e-3, "{x:?} vs {:?}", c.location);
            assert_eq!(c.morse_index, usize::from(is_max));
        }
    }

    #[test]
    fn mirror_p2_gauge() {
        for model in [Model::Fhat, Model::Ftilde] {
            let e2 = instances::mirror_p2(100.0);
            let t = build_coherent_triangulation(&e2).unwrap();
            let am = complement_polytope(&e2, &t).unwrap();
            let loc = Localizer::new(&e2, &t);
            let phi = build_adapted_potential(&am.poly, 0.1, 8, 0.05).unwrap();
            let crits = find_critical_points(&loc, &am, &phi, model).unwrap();
            let mut idx: Vec<usize> = crits.iter().map(|c| c.morse_index).collect();
            idx.sort();
            assert_eq!(idx, vec![0, 0, 0, 1, 1, 1]);
            let ext = curve_extrema(&loc, &phi, model, 20_000);
            assert_eq!(ext.len(), 6);
            assert_eq!(ext.iter().filter(|e| e.1).count(), 3);
        }
    }

    #[test]
    fn drift_decreases_with_beta() {
        let mut last = f64::INFINITY;
        for beta in [25.0, 100.0, 400.0] {
            let e1 = instances::pair_of_pants(beta);
            let t = build_coherent_triangulation(&e1).unwrap();
            let am = complement_polytope(&e1, &t).unwrap();
            let loc = Localizer::new(&e1, &t);
            let crits = find_critical_points(&loc, &am, &GaugePotential::identity(2), Model::Fhat).unwrap();
            let d = crits.iter().map(CriticalDatum::drift).fold(0.0, f64::max);
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn three_dimensional_census() {
        let e = instances::mirror_p3(100.0);
        let t = build_coherent_triangulation(&e).unwrap();
        let am = complement_polytope(&e, &t).unwrap();
        let loc = Localizer::new(&e, &t);
        let phi = build_adapted_potential(&am.poly, 0.1, 8, 0.05).unwrap();
        let crits = find_critical_points(&loc, &am, &phi, Model::Fhat).unwrap();
        let mut hist = [0usize; 3];
        for c in &crits {
            hist[c.morse_index] += 1;
        }
        assert_eq!(hist.to_vec(), t.boundary_f_vector());
    }
}
