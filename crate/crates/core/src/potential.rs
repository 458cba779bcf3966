//! Homogeneous degree-2 convex potentials adapted to a polyhedron, their
//! Legendre transforms, and the adaptedness checks.

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, Rat};
use crate::polyhedron::{Constraint, Face, Polyhedron, PolyhedronError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential is not adapted: {0}")]
    NotAdapted(String),
    #[error("the origin is not an interior point")]
    OriginNotInterior,
    #[error("unsupported dimension {0}")]
    Unsupported(usize),
    #[error("second derivatives are not defined at the origin")]
    EvalAtOriginOrder2,
    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Polyhedron(#[from] PolyhedronError),
}

/// A smooth convex function with analytic derivatives.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> DVector<f64>;
    fn hess(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialMode {
    Gauge,
    Quadratic { matrix: Vec<Vec<f64>> },
}

/// `φ(x) = (Σ_i (ℓ_i·x)_+^p)^{2/p} + ε |x|²/s²` in gauge mode, `xᵀGx` in
/// quadratic mode. `s` is the largest vertex norm of the gauge body, so the
/// regularizer is at most `ε` on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugePotential {
    pub dim: usize,
    pub mode: PotentialMode,
    pub forms: Vec<Vec<f64>>,
    pub smoothing_p: u32,
    pub epsilon: f64,
    pub q_scale: f64,
    /// Points whose convex hull is the gauge body (empty in quadratic mode).
    pub body_vertices: Vec<Vec<f64>>,
}

pub struct PhiEval {
    pub value: f64,
    pub grad: Option<DVector<f64>>,
    pub hess: Option<DMatrix<f64>>,
}

impl GaugePotential {
    pub fn quadratic(matrix: DMatrix<f64>) -> Result<Self, PotentialError> {
        let n = matrix.nrows();
        if n != matrix.ncols() || !(1..=3).contains(&n) {
            return Err(PotentialError::InvalidParameter("matrix must be square with size 1..=3".into()));
        }
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 {
            return Err(PotentialError::InvalidParameter("matrix must be symmetric".into()));
        }
        if matrix.clone().symmetric_eigenvalues().min() <= 0.0 {
            return Err(PotentialError::InvalidParameter("matrix must be positive definite".into()));
        }
        let rows = (0..n).map(|i| (0..n).map(|j| matrix[(i, j)]).collect()).collect();
        Ok(Self {
            dim: n,
            mode: PotentialMode::Quadratic { matrix: rows },
            forms: Vec::new(),
            smoothing_p: 2,
            epsilon: 0.0,
            q_scale: 1.0,
            body_vertices: Vec::new(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::quadratic(DMatrix::identity(n, n)).expect("identity is positive definite")
    }

    fn matrix(&self) -> Option<DMatrix<f64>> {
        match &self.mode {
            PotentialMode::Quadratic { matrix } => {
                Some(DMatrix::from_fn(self.dim, self.dim, |i, j| matrix[i][j]))
            }
            PotentialMode::Gauge => None,
        }
    }

    /// `order` 0, 1 or 2 selects how many derivatives are returned.
    pub fn phi_eval(&self, x: &[f64], order: u8) -> Result<PhiEval, PotentialError> {
        let n = self.dim;
        let xv = DVector::from_column_slice(x);
        if let Some(g) = self.matrix() {
            let gx = &g * &xv;
            return Ok(PhiEval {
                value: xv.dot(&gx),
                grad: (order >= 1).then(|| gx * 2.0),
                hess: (order >= 2).then(|| g * 2.0),
            });
        }
        let is_zero = x.iter().all(|&v| v == 0.0);
        if order >= 2 && is_zero {
            return Err(PotentialError::EvalAtOriginOrder2);
        }
        let p = self.smoothing_p as f64;
        let q_coef = self.epsilon / (self.q_scale * self.q_scale);
        let lx: Vec<f64> = self.forms.iter().map(|l| l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().max(0.0)).collect();
        let m = lx.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            // Only possible at the origin: the forms positively span.
            return Ok(PhiEval {
                value: q_coef * xv.norm_squared(),
                grad: (order >= 1).then(|| &xv * (2.0 * q_coef)),
                hess: (order >= 2).then(|| DMatrix::identity(n, n) * (2.0 * q_coef)),
            });
        }
        // Scale by m to keep the powers in range: S = m^p Σ y_i^p.
        let y: Vec<f64> = lx.iter().map(|v| v / m).collect();
        let sy: f64 = y.iter().map(|v| v.powf(p)).sum();
        let norm = m * sy.powf(1.0 / p);
        let value = norm * norm + q_coef * xv.norm_squared();
        let mut grad = None;
        let mut hess = None;
        if order >= 1 {
            // ∇N = Σ y_i^{p-1} ℓ_i / sy^{(p-1)/p}
            let mut gn = DVector::zeros(n);
            for (l, &yi) in self.forms.iter().zip(&y) {
                if yi > 0.0 {
                    gn.axpy(yi.powf(p - 1.0), &DVector::from_column_slice(l), 1.0);
                }
            }
            gn /= sy.powf((p - 1.0) / p);
            if order >= 2 {
                // ∇²N = (p-1)/N · (Σ w_i ℓ_i ℓ_iᵀ − ∇N ∇Nᵀ), w_i = y_i^{p-2} / sy^{(p-2)/p}
                let mut h = DMatrix::zeros(n, n);
                for (l, &yi) in self.forms.iter().zip(&y) {
                    if yi > 0.0 {
                        let lv = DVector::from_column_slice(l);
                        h += (yi.powf(p - 2.0) / sy.powf((p - 2.0) / p)) * &lv * lv.transpose();
                    }
                }
                h -= &gn * gn.transpose();
                h *= (p - 1.0) / norm;
                let hn = (&gn * gn.transpose() + h * norm) * 2.0;
                hess = Some(hn + DMatrix::identity(n, n) * (2.0 * q_coef));
            }
            grad = Some(gn * (2.0 * norm) + &xv * (2.0 * q_coef));
        }
        Ok(PhiEval { value, grad, hess })
    }
}

impl Potential for GaugePotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.phi_eval(x, 0).expect("order 0 is always defined").value
    }

    fn grad(&self, x: &[f64]) -> DVector<f64> {
        self.phi_eval(x, 1).expect("order 1 is always defined").grad.expect("requested")
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        match self.phi_eval(x, 2) {
            Ok(e) => e.hess.expect("requested"),
            // The Hessian is degree-0 homogeneous; any direction gives a bounded stand-in.
            Err(_) => DMatrix::identity(self.dim, self.dim) * (2.0 * self.epsilon.max(1e-12)),
        }
    }
}

/// Largest sup-norm of the vertices, rounded up, as the search window radius.
pub fn window_radius(p: &Polyhedron) -> i64 {
    let m = (0..p.vertices.len())
        .map(|v| p.vertex_f64(v).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    2 * (m.ceil() as i64 + 1)
}

/// Vertex barycenter of `F ∩ [-R, R]^n`, exact.
fn clipped_barycenter(p: &Polyhedron, face: &Face, radius: i64) -> Result<Vec<Rat>, PolyhedronError> {
    if face.is_bounded() {
        return Ok(p.vertex_barycenter(face));
    }
    let n = p.dim;
    let mut cons: Vec<Constraint> = p.constraints.clone();
    for &c in &face.tight {
        let con = &p.constraints[c];
        cons.push(Constraint::new(con.normal.iter().map(|x| -x).collect(), -con.bound.clone()));
    }
    for i in 0..n {
        for s in [1, -1] {
            let mut a = vec![exact::rat(0); n];
            a[i] = exact::rat(s);
            cons.push(Constraint::new(a, exact::rat(radius)));
        }
    }
    let clipped = Polyhedron::from_constraints(n, cons)?;
    Ok(clipped.vertex_barycenter(clipped.full()))
}

/// Gauge potential whose PL limit takes the value `c_d = 1 + δ(n−1−d)` at
/// the barycenter of every proper `d`-face of `P`, smoothed by a `p`-norm
/// and regularized; verified with [`check_adapted`] before returning.
pub fn build_adapted_potential(
    p: &Polyhedron,
    delta: f64,
    smoothing_p: u32,
    epsilon: f64,
) -> Result<GaugePotential, PotentialError> {
    let phi = gauge_candidate(p, delta, smoothing_p, epsilon)?;
    let report = check_adapted(&phi, p);
    if !report.pass {
        let bad: Vec<String> = report.faces.iter().filter(|f| !f.pass).map(|f| f.label.clone()).collect();
        return Err(PotentialError::NotAdapted(format!("failing faces {}", bad.join(", "))));
    }
    Ok(phi)
}

/// The construction of [`build_adapted_potential`] without the final check.
pub fn gauge_candidate(
    p: &Polyhedron,
    delta: f64,
    smoothing_p: u32,
    epsilon: f64,
) -> Result<GaugePotential, PotentialError> {
    let n = p.dim;
    if n > 3 {
        return Err(PotentialError::Unsupported(n));
    }
    if !p.origin_interior() {
        return Err(PotentialError::OriginNotInterior);
    }
    if smoothing_p < 4 || smoothing_p % 2 != 0 {
        return Err(PotentialError::InvalidParameter(format!("p must be even and >= 4, got {smoothing_p}")));
    }
    if !(delta > 0.0 && epsilon > 0.0) {
        return Err(PotentialError::InvalidParameter("delta and epsilon must be positive".into()));
    }
    let radius = window_radius(p);
    let delta_r = exact::parse_rat(&delta.to_string()).ok_or_else(|| PotentialError::InvalidParameter("delta".into()))?;
    let mut body: Vec<Vec<Rat>> = Vec::new();
    for (_, face) in p.proper_faces() {
        let b = clipped_barycenter(p, face, radius)?;
        let c = exact::rat(1) + &delta_r * exact::rat((n - 1 - face.dim) as i64);
        body.push(b.iter().map(|x| x / &c).collect());
    }
    // Facet functionals of Ω = conv(body) are the vertices of its polar.
    let polar_cons = body.iter().map(|v| Constraint::new(v.clone(), exact::rat(1))).collect();
    let polar = Polyhedron::from_constraints(n, polar_cons).map_err(|_| PotentialError::OriginNotInterior)?;
    if !polar.is_bounded() {
        return Err(PotentialError::OriginNotInterior);
    }
    let forms: Vec<Vec<f64>> = (0..polar.vertices.len()).map(|v| polar.vertex_f64(v)).collect();
    let body_f: Vec<Vec<f64>> = body.iter().map(|v| v.iter().map(exact::to_f64).collect()).collect();
    let q_scale = body_f.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    Ok(GaugePotential {
        dim: n,
        mode: PotentialMode::Gauge,
        forms,
        smoothing_p,
        epsilon,
        q_scale,
        body_vertices: body_f,
    })
}

// ---------------------------------------------------------------------------
// Legendre maps

pub fn legendre_forward(phi: &dyn Potential, rho: &[f64]) -> DVector<f64> {
    phi.grad(rho)
}

/// Solves `dφ(ρ) = p` by damped Newton on the convex `φ(ρ) − ⟨p, ρ⟩`. Uses
/// `ρ(λp) = λρ(p)` to work with a unit covector.
pub fn legendre_inverse(phi: &dyn Potential, p: &[f64]) -> Result<DVector<f64>, PotentialError> {
    let n = phi.dim();
    let pv = DVector::from_column_slice(p);
    let scale = pv.norm();
    if scale == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let target = &pv / scale;
    let obj = |r: &DVector<f64>| phi.value(r.as_slice()) - target.dot(r);
    let mut rho = target.clone();
    for _ in 0..100 {
        let g = phi.grad(rho.as_slice()) - &target;
        if g.norm() < 1e-13 {
            return Ok(rho * scale);
        }
        let h = phi.hess(rho.as_slice());
        let step = match h.cholesky() {
            Some(ch) => ch.solve(&g),
            None => g.clone(),
        };
        let f0 = obj(&rho);
        let slope = g.dot(&step);
        let gn = g.norm();
        let mut t = 1.0;
        loop {
            let cand = &rho - &step * t;
            // Near the solution the decrease in `obj` drops below the noise
            // of nested evaluations, so there a shrinking residual also counts.
            let decrease = obj(&cand) <= f0 - 1e-4 * t * slope;
            let closer = gn < 1e-6 && (phi.grad(cand.as_slice()) - &target).norm() < (1.0 - 1e-4 * t) * gn;
            if decrease || closer || t < 1e-12 {
                rho = cand;
                break;
            }
            t *= 0.5;
        }
    }
    let g = phi.grad(rho.as_slice()) - &target;
    if g.norm() < 1e-9 {
        return Ok(rho * scale);
    }
    Err(PotentialError::NoConvergence(format!("Legendre inverse residual {:e}", g.norm())))
}

/// `ψ(p) = ⟨ρ, p⟩ − φ(ρ)` at `ρ = (dφ)⁻¹(p)`.
pub fn legendre_dual_eval(phi: &dyn Potential, p: &[f64]) -> Result<f64, PotentialError> {
    let rho = legendre_inverse(phi, p)?;
    Ok(rho.dot(&DVector::from_column_slice(p)) - phi.value(rho.as_slice()))
}

/// `dφ(x)/|dφ(x)|`.
pub fn projective_legendre(phi: &dyn Potential, x: &[f64]) -> DVector<f64> {
    let g = phi.grad(x);
    let n = g.norm();
    g / n
}

/// Component of `Hess⁻¹ dφ` orthogonal to `ρ`, relative to its length.
pub fn gradient_ray_residual(phi: &dyn Potential, rho: &[f64]) -> f64 {
    let g = phi.grad(rho);
    let v = phi.hess(rho).lu().solve(&g).unwrap_or_else(|| g.clone());
    let r = DVector::from_column_slice(rho);
    let rhat = &r / r.norm();
    let perp = &v - &rhat * v.dot(&rhat);
    perp.norm() / v.norm()
}

/// Winding number of `x ↦ dφ(x)/|dφ(x)|` along the unit circle (n = 2).
pub fn projective_winding(phi: &dyn Potential, samples: usize) -> f64 {
    let mut total = 0.0;
    let angle = |k: usize| {
        let t = std::f64::consts::TAU * k as f64 / samples as f64;
        let g = projective_legendre(phi, &[t.cos(), t.sin()]);
        g[1].atan2(g[0])
    };
    let mut prev = angle(0);
    for k in 1..=samples {
        let a = angle(k % samples);
        let mut d = a - prev;
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        total += d;
        prev = a;
    }
    total / std::f64::consts::TAU
}

/// The Legendre dual `ψ` as a potential: `ψ = ⟨ρ,p⟩ − φ(ρ)`, `dψ = ρ`,
/// `Hess ψ = (Hess φ)⁻¹` at `ρ = (dφ)⁻¹(p)`.
pub struct LegendreDual<'a> {
    pub phi: &'a dyn Potential,
}

impl Potential for LegendreDual<'_> {
    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn value(&self, p: &[f64]) -> f64 {
        legendre_dual_eval(self.phi, p).unwrap_or(f64::NAN)
    }

    fn grad(&self, p: &[f64]) -> DVector<f64> {
        legendre_inverse(self.phi, p).unwrap_or_else(|_| DVector::from_element(p.len(), f64::NAN))
    }

    fn hess(&self, p: &[f64]) -> DMatrix<f64> {
        let n = p.len();
        match legendre_inverse(self.phi, p) {
            Ok(rho) => {
                self.phi.hess(rho.as_slice()).try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
            }
            Err(_) => DMatrix::from_element(n, n, f64::NAN),
        }
    }
}

// ---------------------------------------------------------------------------
// Adaptedness

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceAdaptedness {
    pub face: usize,
    pub dim: usize,
    pub label: String,
    /// Minimizer of φ over the face.
    pub minimizer: Vec<f64>,
    /// Signed distance (within the affine hull) of the unconstrained
    /// minimizer to the relative boundary of the face; `<= 0` when the
    /// minimum sits on the boundary.
    #[serde(with = "crate::report::float")]
    pub margin: f64,
    pub normal_cone: bool,
    /// Smallest coefficient of `dφ(x_F)` in the normal generators, relative to `|dφ|`.
    #[serde(with = "crate::report::float")]
    pub cone_margin: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptednessReport {
    pub faces: Vec<FaceAdaptedness>,
    pub pass: bool,
}

impl AdaptednessReport {
    pub fn failures(&self) -> impl Iterator<Item = &FaceAdaptedness> {
        self.faces.iter().filter(|f| !f.pass)
    }
}

fn face_label(p: &Polyhedron, face: &Face) -> String {
    let fmt = |v: &[Rat]| -> String {
        let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        format!("({})", parts.join(","))
    };
    let mut parts: Vec<String> = face.vertices.iter().map(|&v| fmt(&p.vertices[v])).collect();
    parts.extend(face.rays.iter().map(|&r| format!("ray{}", fmt(&p.rays[r]))));
    format!("[{}]", parts.join(" "))
}

fn orthonormal(basis: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for b in basis {
        let mut v = DVector::from_column_slice(b);
        for c in &cols {
            let d = v.dot(c);
            v -= c * d;
        }
        let nv = v.norm();
        if nv > 1e-12 {
            cols.push(v / nv);
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Minimizes `φ` over the affine space `base + span(B)` by damped Newton.
fn minimize_on_affine(phi: &dyn Potential, base: &DVector<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>, PotentialError> {
    let k = b.ncols();
    let mut y = DVector::zeros(k);
    let point = |y: &DVector<f64>| base + b * y;
    for _ in 0..200 {
        let x = point(&y);
        let g = b.transpose() * phi.grad(x.as_slice());
        if g.norm() < 1e-12 * (1.0 + phi.grad(x.as_slice()).norm()) {
            return Ok(x);
        }
        let h = b.transpose() * phi.hess(x.as_slice()) * b;
        let step = h.cholesky().map(|c| c.solve(&g)).unwrap_or_else(|| g.clone());
        let f0 = phi.value(x.as_slice());
        let slope = g.dot(&step);
        let mut t = 1.0;
        loop {
            let cand = &y - &step * t;
            if phi.value(point(&cand).as_slice()) <= f0 - 1e-4 * t * slope || t < 1e-14 {
                y = cand;
                break;
            }
            t *= 0.5;
        }
    }
    let x = point(&y);
    let g = b.transpose() * phi.grad(x.as_slice());
    if g.norm() < 1e-8 * (1.0 + phi.grad(x.as_slice()).norm()) {
        Ok(x)
    } else {
        Err(PotentialError::NoConvergence(format!("face minimization gradient {:e}", g.norm())))
    }
}

/// Constrained minimizer of `φ` over a face: the affine-hull minimizer if it
/// lies in the face, otherwise the best minimizer over its facets.
fn minimize_on_face(phi: &dyn Potential, p: &Polyhedron, face: &Face) -> Result<DVector<f64>, PotentialError> {
    if face.dim == 0 {
        return Ok(DVector::from_vec(p.vertex_f64(face.vertices[0])));
    }
    let (base, basis) = p.face_affine_hull(face);
    let b = orthonormal(&basis, p.dim);
    let x = minimize_on_affine(phi, &DVector::from_vec(base), &b)?;
    if p.contains_f64(x.as_slice(), 1e-12) {
        return Ok(x);
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for g in p.faces.iter().filter(|g| g.dim + 1 == face.dim && g.is_subface_of(face)) {
        let xg = minimize_on_face(phi, p, g)?;
        let v = phi.value(xg.as_slice());
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, xg));
        }
    }
    best.map(|b| b.1).ok_or_else(|| PotentialError::NoConvergence("face without facets".into()))
}

/// Minimizer of `φ` over a face of `P` (the vertex itself for a 0-face).
pub fn face_minimizer(phi: &dyn Potential, p: &Polyhedron, face: &Face) -> Result<Vec<f64>, PotentialError> {
    minimize_on_face(phi, p, face).map(|x| x.iter().copied().collect())
}

/// Strictly positive coefficients `c` with `v = Σ c_i a_i`, by least squares
/// on the generators; returns the smallest coefficient relative to `|v|`
/// and the relative residual.
fn cone_coefficients(gens: &[DVector<f64>], v: &DVector<f64>) -> (f64, f64) {
    let n = v.len();
    let a = DMatrix::from_columns(gens);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(v, 1e-12).unwrap_or_else(|_| DVector::zeros(gens.len()));
    let resid = (&a * &c - v).norm() / v.norm().max(1e-300);
    let norms: Vec<f64> = gens.iter().map(|g| g.norm()).collect();
    let min_c = c.iter().zip(&norms).map(|(ci, ni)| ci * ni).fold(f64::INFINITY, f64::min);
    let _ = n;
    (min_c / v.norm().max(1e-300), resid)
}

fn check_face(phi: &dyn Potential, p: &Polyhedron, fi: usize, face: &Face, radius: f64) -> FaceAdaptedness {
    let label = face_label(p, face);
    let fail = |note: String| FaceAdaptedness {
        face: fi,
        dim: face.dim,
        label: label.clone(),
        minimizer: Vec::new(),
        margin: f64::NEG_INFINITY,
        normal_cone: false,
        cone_margin: f64::NEG_INFINITY,
        pass: false,
        note: Some(note),
    };
    let (base, basis) = p.face_affine_hull(face);
    let b = orthonormal(&basis, p.dim);
    let unconstrained = match minimize_on_affine(phi, &DVector::from_vec(base), &b) {
        Ok(x) => x,
        Err(e) => return fail(e.to_string()),
    };
    // Signed distance to the relative boundary inside the affine hull.
    let mut margin = f64::INFINITY;
    for (ci, c) in p.constraints.iter().enumerate() {
        if face.tight.contains(&ci) {
            continue;
        }
        let a = DVector::from_vec(c.normal_f64());
        let proj = b.transpose() * &a;
        let pn = proj.norm();
        if pn < 1e-12 {
            continue;
        }
        margin = margin.min((c.bound_f64() - a.dot(&unconstrained)) / pn);
    }
    let window_hit = !face.is_bounded() && unconstrained.iter().any(|x| x.abs() > radius);
    if window_hit {
        return fail(format!("minimizer outside the search window |x| <= {radius}"));
    }
    let minimizer = if margin > 0.0 {
        unconstrained.clone()
    } else {
        match minimize_on_face(phi, p, face) {
            Ok(x) => x,
            Err(e) => return fail(e.to_string()),
        }
    };
    let grad = phi.grad(minimizer.as_slice());
    let gens: Vec<DVector<f64>> = face.tight.iter().map(|&c| DVector::from_vec(p.constraints[c].normal_f64())).collect();
    let (cone_margin, resid) = cone_coefficients(&gens, &grad);
    let normal_cone = cone_margin > 1e-9 && resid < 1e-6;
    let scale = p.vertices.iter().map(|v| v.iter().map(|x| exact::to_f64(&x.abs())).fold(0.0, f64::max)).fold(1.0, f64::max);
    let pass = margin > 1e-9 * scale && normal_cone;
    FaceAdaptedness {
        face: fi,
        dim: face.dim,
        label,
        minimizer: minimizer.iter().copied().collect(),
        margin,
        normal_cone,
        cone_margin,
        pass,
        note: None,
    }
}

/// Checks every positive-dimensional proper face of `P` for an interior
/// minimum of `φ` with `dφ` in the open normal cone.
pub fn check_adapted(phi: &dyn Potential, p: &Polyhedron) -> AdaptednessReport {
    let radius = window_radius(p).to_f64().unwrap_or(f64::INFINITY);
    let faces: Vec<(usize, &Face)> = p.proper_faces().filter(|(_, f)| f.dim > 0).collect();
    let faces: Vec<FaceAdaptedness> = faces.par_iter().map(|(fi, f)| check_face(phi, p, *fi, f, radius)).collect();
    let pass = faces.iter().all(|f| f.pass);
    AdaptednessReport { faces, pass }
}

/// Runs [`check_adapted`] for the Legendre dual `ψ` against the polar `P^∨`.
pub fn dual_adaptedness_check(phi: &dyn Potential, p: &Polyhedron) -> Result<(Polyhedron, AdaptednessReport), PotentialError> {
    let q = p.polar()?;
    let dual = LegendreDual { phi };
    let report = check_adapted(&dual, &q);
    Ok((q, report))
}

/// For each positive-dimensional face, rescales `(x_F, dφ(x_F))` with
/// `x_F ∈ F`, `dφ(x_F) ∈ cone(F^∨)` to `(x_F/λ, dφ(x_F)/λ)` with
/// `λ = ⟨dφ(x_F), x_F⟩`, and returns the largest deviation from the Legendre
/// graph and from `F^∨` (`⟨p, x⟩ = 1` for the vertices of `F`).
pub fn equivalence_residual(phi: &dyn Potential, p: &Polyhedron, report: &AdaptednessReport) -> f64 {
    let mut worst: f64 = 0.0;
    for f in report.faces.iter().filter(|f| f.pass) {
        let x = DVector::from_vec(f.minimizer.clone());
        let g = phi.grad(x.as_slice());
        let lambda = g.dot(&x);
        let xs = &x / lambda;
        let ps = &g / lambda;
        worst = worst.max((phi.grad(xs.as_slice()) - &ps).norm() / ps.norm());
        for &v in &p.faces[f.face].vertices {
            let pv = DVector::from_vec(p.vertex_f64(v));
            worst = worst.max((ps.dot(&pv) - 1.0).abs());
        }
    }
    worst
}
