//! The Liouville field `X_λ = ρ·∂_ρ` of `ω = Σ φ_ij dρ_i ∧ dθ_j` on the
//! localized hypersurface `H̃ = {f̃ = 0}`, its splitting along `T H̃`, and a
//! sampled search for zeros of `dφ|_H̃` away from the positive locus.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::localization::{LocalizationError, LogPoint, Localizer, Model, RegionLabel};
use crate::potential::Potential;
use crate::snf::critical_torus;
use crate::triangulation::Simplex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiouvilleError {
    #[error("point is not on the positive locus: {0}")]
    NotOnPositiveLocus(String),
    #[error("Kähler metric is degenerate at {0:?}")]
    DegenerateMetric(Vec<f64>),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleSample {
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    /// `X_{Im f̃}` in `(ρ, θ)` coordinates.
    pub x_imf: Vec<f64>,
    pub c1: f64,
    /// `|dθ(X_λ^∥)|`, the θ-part of the tangential component of `X_λ`.
    pub theta_component: f64,
    /// `⟨df̃, X_{Im f̃}⟩`, in units of the dominant term.
    pub pairing: f64,
}

/// Hamiltonian-type dual of a covector `(η_ρ, η_θ)`: `ι_X ω = η` gives
/// `X = (H⁻¹η_θ, −H⁻¹η_ρ)`.
fn omega_dual(hinv: &DMatrix<f64>, eta: &[f64]) -> DVector<f64> {
    let n = hinv.nrows();
    let a = hinv * DVector::from_column_slice(&eta[n..]);
    let b = -(hinv * DVector::from_column_slice(&eta[..n]));
    DVector::from_iterator(2 * n, a.iter().chain(b.iter()).copied())
}

/// Largest `|⟨α,θ⟩ − Θ(α)|` (mod 2π) over active non-origin terms.
pub fn phase_deviation(loc: &Localizer, z: &LogPoint) -> f64 {
    let o = loc.origin();
    (0..loc.num_points())
        .filter(|&a| a != o && loc.monomial_cutoff(a, &z.u) > 0.0)
        .map(|a| {
            let p: f64 = loc.alpha(a).iter().zip(&z.theta).map(|(x, t)| x * t).sum::<f64>() - loc.data.phases[a];
            let r = p.rem_euclid(TAU);
            r.min(TAU - r)
        })
        .fold(0.0, f64::max)
}

/// `X_{Im f̃}`, `c₁` and the θ-part of `X_λ^∥ = X_λ − X^⊥` at a point of
/// the positive locus, where `X^⊥ ∈ span(X_{Re f̃}, X_{Im f̃})` is the
/// `ω`-orthogonal complement of `T H̃`.
pub fn liouville_field(loc: &Localizer, phi: &dyn Potential, z: &LogPoint) -> Result<LiouvilleSample, LiouvilleError> {
    let n = loc.dim();
    let df = loc.fs_differentials(z, 1.0);
    let rel = df.value.norm() / df.magnitude.max(1e-300);
    if rel > 1e-8 {
        return Err(LiouvilleError::NotOnPositiveLocus(format!("f̃ residual {rel:e}")));
    }
    let dev = phase_deviation(loc, z);
    if dev > 1e-8 {
        return Err(LiouvilleError::NotOnPositiveLocus(format!("phase deviation {dev:e}")));
    }
    // φ is 2-homogeneous, so its ρ-Hessian equals its u-Hessian.
    let hinv = phi.hess(&z.u).try_inverse().ok_or_else(|| LiouvilleError::DegenerateMetric(z.u.clone()))?;
    let j = df.real_jacobian();
    let row = |r: usize| j.row(r).iter().copied().collect::<Vec<f64>>();
    let x_re = omega_dual(&hinv, &row(0));
    let x_im = omega_dual(&hinv, &row(1));
    let x_lambda = DVector::from_iterator(2 * n, z.rho.iter().copied().chain(std::iter::repeat_n(0.0, n)));

    let m = DMatrix::from_columns(&[&j * &x_re, &j * &x_im]);
    let rhs = &j * &x_lambda;
    let coef = m.clone().lu().solve(&rhs).ok_or_else(|| LiouvilleError::DegenerateMetric(z.u.clone()))?;
    let perp = &x_re * coef[0] + &x_im * coef[1];
    let par = &x_lambda - perp;
    let theta_component = par.rows(n, n).norm();
    let pairing = (&j * &x_im)[0];
    Ok(LiouvilleSample {
        u: z.u.clone(),
        theta: z.theta.clone(),
        x_imf: x_im.iter().copied().collect(),
        c1: coef[1],
        theta_component,
        pairing,
    })
}

/// Points of the positive locus over good regions of `∂C̃`: a boundary
/// point in a random direction, with `θ` on the critical torus of the
/// active simplex shifted randomly along it.
pub fn sample_positive_locus(loc: &Localizer, count: usize, seed: u64) -> Vec<LogPoint> {
    let n = loc.dim();
    let o = loc.origin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count {
        attempts += 1;
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shifts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let Ok(u) = loc.boundary_solve(&dir, Model::Ftilde) else { continue };
        let Ok(RegionLabel::Good(tau)) = loc.classify_region(&u) else { continue };
        let face = Simplex::new(loc.data, tau.indices.iter().copied().filter(|&i| i != o).collect());
        if face.indices.is_empty() {
            continue;
        }
        let torus = critical_torus(loc.data, &face);
        let mut theta = torus.representatives[0].clone();
        for (b, s) in torus.basis.iter().zip(&shifts) {
            for (t, &bi) in theta.iter_mut().zip(b) {
                *t += s * bi as f64;
            }
        }
        out.push(LogPoint::from_u(&u, &theta, loc.beta));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub samples: usize,
    #[serde(with = "crate::report::float")]
    pub max_theta_component: f64,
    #[serde(with = "crate::report::float")]
    pub min_c1: f64,
    #[serde(with = "crate::report::float")]
    pub min_pairing: f64,
    pub pass: bool,
}

pub fn liouville_identities(
    loc: &Localizer,
    phi: &dyn Potential,
    count: usize,
    seed: u64,
) -> Result<LiouvilleReport, LiouvilleError> {
    let pts = sample_positive_locus(loc, count, seed);
    let rows: Vec<LiouvilleSample> =
        pts.par_iter().map(|z| liouville_field(loc, phi, z)).collect::<Result<_, _>>()?;
    let max_theta_component = rows.iter().map(|r| r.theta_component).fold(0.0, f64::max);
    let min_c1 = rows.iter().map(|r| r.c1).fold(f64::INFINITY, f64::min);
    let min_pairing = rows.iter().map(|r| r.pairing).fold(f64::INFINITY, f64::min);
    Ok(LiouvilleReport {
        samples: rows.len(),
        max_theta_component,
        min_c1,
        min_pairing,
        pass: rows.len() >= count && max_theta_component < 1e-6 && min_c1 > 0.0 && min_pairing > 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    /// Boundary directions.
    pub directions: usize,
    /// Angles per direction, placed on a Kronecker lattice in `T^n`.
    pub angles: usize,
    /// Outward offsets in `ρ` applied to the boundary point before projecting.
    pub rho_offsets: Vec<f64>,
    /// Points with phase deviation below this count as on the positive locus.
    pub locus_band: f64,
    pub floor_tol: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { directions: 200, angles: 200, rho_offsets: vec![0.0, 2.0, 6.0], locus_band: 0.1, floor_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub seeds: usize,
    pub projected: usize,
    pub off_locus: usize,
    /// Smallest `|dφ|_{TH̃}| / |dφ|` away from the positive locus.
    #[serde(with = "crate::report::float")]
    pub min_norm: f64,
    pub argmin_u: Vec<f64>,
    pub argmin_theta: Vec<f64>,
    /// Same quantity on the positive locus, where it vanishes at the critical tori.
    #[serde(with = "crate::report::float")]
    pub min_norm_on_locus: f64,
    pub floor_tol: f64,
    pub pass: bool,
}

/// Norm of `dφ` restricted to `T_z H̃ = ker J`, relative to `|dφ|`.
pub fn restricted_norm(loc: &Localizer, phi: &dyn Potential, z: &LogPoint) -> f64 {
    let n = loc.dim();
    let j = loc.fs_differentials(z, 1.0).real_jacobian();
    let g = phi.grad(&z.u);
    let v = DVector::from_iterator(2 * n, g.iter().copied().chain(std::iter::repeat_n(0.0, n)));
    let jjt = &j * j.transpose();
    let Some(inv) = jjt.try_inverse() else { return f64::NAN };
    let tangent = &v - j.transpose() * (inv * (&j * &v));
    tangent.norm() / v.norm()
}

/// Kronecker point `k` of `count` in `[0, 2π)^n`.
fn kronecker(k: usize, count: usize, n: usize) -> Vec<f64> {
    const ALPHAS: [f64; 3] = [0.618_033_988_749_894_8, 0.414_213_562_373_095_1, 0.732_050_807_568_877_2];
    (0..n)
        .map(|i| {
            let x = if i == 0 { k as f64 / count as f64 } else { (k as f64 * ALPHAS[(i - 1) % 3]).fract() };
            TAU * x
        })
        .collect()
}

/// Sampled search for critical points of `φ|_H̃` off the positive locus.
pub fn scan_extraneous_critical(loc: &Localizer, phi: &dyn Potential, grid: &ScanGrid) -> ScanReport {
    let n = loc.dim();
    let dirs: Vec<Vec<f64>> = (0..grid.directions)
        .map(|k| {
            let a = TAU * (k as f64 + 0.5) / grid.directions as f64;
            let mut d = vec![0.0; n];
            d[0] = a.cos();
            if n > 1 {
                d[1] = a.sin();
            }
            d
        })
        .collect();
    let bases: Vec<Vec<f64>> = dirs.par_iter().filter_map(|d| loc.boundary_solve(d, Model::Ftilde).ok()).collect();
    let seeds: Vec<(Vec<f64>, Vec<f64>)> = bases
        .iter()
        .flat_map(|u| {
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            grid.rho_offsets.iter().flat_map(move |&off| {
                let rho: Vec<f64> = u.iter().map(|x| x * loc.beta * (1.0 + off / (loc.beta * norm))).collect();
                (0..grid.angles).map(move |k| (rho.clone(), kronecker(k, grid.angles, n)))
            })
        })
        .collect();
    let evals: Vec<(LogPoint, f64, f64)> = seeds
        .par_iter()
        .filter_map(|(rho, theta)| {
            let z = loc.project_to_hs(&LogPoint::from_rho(rho, theta, loc.beta), 1.0).ok()?;
            let norm = restricted_norm(loc, phi, &z);
            norm.is_finite().then(|| {
                let dev = phase_deviation(loc, &z);
                (z, norm, dev)
            })
        })
        .collect();
    let mut min_norm = f64::INFINITY;
    let mut min_on = f64::INFINITY;
    let mut arg: Option<&LogPoint> = None;
    let mut off_locus = 0;
    for (z, norm, dev) in &evals {
        if *dev < grid.locus_band {
            min_on = min_on.min(*norm);
        } else {
            off_locus += 1;
            if *norm < min_norm {
                min_norm = *norm;
                arg = Some(z);
            }
        }
    }
    ScanReport {
        seeds: seeds.len(),
        projected: evals.len(),
        off_locus,
        min_norm,
        argmin_u: arg.map(|z| z.u.clone()).unwrap_or_default(),
        argmin_theta: arg.map(|z| z.theta.iter().map(|t| t.rem_euclid(TAU)).collect()).unwrap_or_default(),
        min_norm_on_locus: min_on,
        floor_tol: grid.floor_tol,
        pass: off_locus > 0 && min_norm > grid.floor_tol,
    }
}
