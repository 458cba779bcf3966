//! Monomial cutoffs, good/bad regions, the localized boundary function `F̃`
//! and its convex model `F̂`.
//!
//! Both boundary models are sums of terms `T_α = e^{β l_α} · (cutoffs)` and
//! the boundary is `{Σ T_α = 1}`. Numerically we work with
//! `B(u) = β⁻¹ log Σ T_α`, evaluated by log-sum-exp, whose zero set is the
//! same hypersurface and whose gradient stays `O(1)` as `β` grows.

mod closeness;
mod convergence;
mod surface;

pub use closeness::{closeness_report, ClosenessReport};
pub use convergence::{convergence_report, ConvergenceRow};
pub use surface::{FsDifferentials, LogPoint};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff;
use crate::lattice::NewtonData;
use crate::triangulation::{Simplex, StarTriangulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalizationError {
    #[error("no boundary point in direction {0:?}")]
    NoRoot(Vec<f64>),
    #[error("root finding did not converge in direction {0:?}")]
    NoConvergence(Vec<f64>),
    #[error("active set {0} is not a simplex of T (beta too small?)")]
    InconsistentLabel(String),
    #[error("point is not on the hypersurface (relative residual {0:e})")]
    NotOnHypersurface(f64),
    #[error("zero direction")]
    ZeroDirection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Fhat,
    Ftilde,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionLabel {
    Good(Simplex),
    Bad,
}

/// `B = β⁻¹ log Σ T_α` with derivatives in `u`.
#[derive(Clone, Debug)]
pub struct BoundaryEval {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Log of one term with derivatives; `value = -∞` when the term is cut off.
struct LogTerm {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// Evaluation context for a fixed instance, triangulation and `β`.
#[derive(Clone, Debug)]
pub struct Localizer<'a> {
    pub data: &'a NewtonData,
    pub t: &'a StarTriangulation,
    pub beta: f64,
    pub sqrt_beta: f64,
    alpha: Vec<DVector<f64>>,
    heights: Vec<f64>,
}

impl<'a> Localizer<'a> {
    pub fn new(data: &'a NewtonData, t: &'a StarTriangulation) -> Self {
        let alpha = data.points.iter().map(|p| DVector::from_vec(p.as_f64())).collect();
        let heights = (0..data.points.len()).map(|i| data.height_f64(i)).collect();
        Self { data, t, beta: data.beta, sqrt_beta: data.beta.sqrt(), alpha, heights }
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    pub fn origin(&self) -> usize {
        self.t.origin
    }

    pub fn alpha(&self, i: usize) -> &DVector<f64> {
        &self.alpha[i]
    }

    pub fn num_points(&self) -> usize {
        self.alpha.len()
    }

    pub fn l(&self, i: usize, u: &[f64]) -> f64 {
        self.alpha[i].iter().zip(u).map(|(a, x)| a * x).sum::<f64>() - self.heights[i]
    }

    pub fn ls(&self, u: &[f64]) -> Vec<f64> {
        (0..self.alpha.len()).map(|i| self.l(i, u)).collect()
    }

    /// Upper threshold `β^{-1/2}` of the plateau and the end of the bad band.
    pub fn thresholds(&self) -> (f64, f64) {
        let a = 1.0 / self.sqrt_beta;
        (a, a + 2.0 / self.beta)
    }

    /// `χ_{α,β}(u) = Π_{α' ~ α} χ(β(l_α − l_α') + √β)` over edge neighbours.
    pub fn monomial_cutoff(&self, alpha: usize, u: &[f64]) -> f64 {
        let la = self.l(alpha, u);
        self.t.neighbors[alpha]
            .iter()
            .map(|&b| cutoff::chi(self.beta * (la - self.l(b, u)) + self.sqrt_beta))
            .product()
    }

    /// `log χ_{α,β}` with gradient and Hessian in `u`.
    fn log_cutoff(&self, alpha: usize, u: &[f64], into: &mut LogTerm) {
        let la = self.l(alpha, u);
        for &b in &self.t.neighbors[alpha] {
            let x = self.beta * (la - self.l(b, u)) + self.sqrt_beta;
            self.add_log_chi(x, &(&self.alpha[alpha] - &self.alpha[b]), into);
            if into.value == f64::NEG_INFINITY {
                return;
            }
        }
    }

    fn add_log_chi(&self, x: f64, dir: &DVector<f64>, into: &mut LogTerm) {
        let v = cutoff::log_chi(x);
        if v == f64::NEG_INFINITY {
            into.value = f64::NEG_INFINITY;
            return;
        }
        let (d1, d2) = cutoff::log_chi_derivs(x);
        into.value += v;
        if d1 != 0.0 || d2 != 0.0 {
            into.grad.axpy(d1 * self.beta, dir, 1.0);
            into.hess += (d2 * self.beta * self.beta) * dir * dir.transpose();
        }
    }

    fn model_terms(&self, model: Model) -> Vec<usize> {
        let o = self.origin();
        match model {
            Model::Ftilde => (0..self.alpha.len()).filter(|&i| i != o).collect(),
            Model::Fhat => self.t.neighbors[o].clone(),
        }
    }

    fn log_term(&self, alpha: usize, u: &[f64], model: Model) -> LogTerm {
        let n = self.dim();
        let la = self.l(alpha, u);
        let mut term = LogTerm {
            value: self.beta * la,
            grad: &self.alpha[alpha] * self.beta,
            hess: DMatrix::zeros(n, n),
        };
        match model {
            Model::Ftilde => self.log_cutoff(alpha, u, &mut term),
            Model::Fhat => {
                let x = self.beta * la + self.sqrt_beta;
                self.add_log_chi(x, &self.alpha[alpha].clone(), &mut term);
            }
        }
        term
    }

    /// `B(u) = β⁻¹ log Σ T_α`; the model boundary is `B = 0`.
    pub fn boundary_fn(&self, u: &[f64], model: Model) -> BoundaryEval {
        let n = self.dim();
        let terms: Vec<LogTerm> = self.model_terms(model).into_iter().map(|a| self.log_term(a, u, model)).collect();
        let m = terms.iter().map(|t| t.value).fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return BoundaryEval {
                value: f64::NEG_INFINITY,
                grad: DVector::zeros(n),
                hess: DMatrix::zeros(n, n),
            };
        }
        let mut s = 0.0;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for t in &terms {
            let rel = t.value - m;
            if rel < -700.0 {
                continue;
            }
            let w = rel.exp();
            s += w;
            g.axpy(w, &t.grad, 1.0);
            h += w * (&t.grad * t.grad.transpose() + &t.hess);
        }
        g /= s;
        h /= s;
        h -= &g * g.transpose();
        BoundaryEval { value: (m + s.ln()) / self.beta, grad: g / self.beta, hess: h / self.beta }
    }

    /// `log Σ T_α` only, for root finding.
    pub fn log_sum(&self, u: &[f64], model: Model) -> f64 {
        self.boundary_fn(u, model).value * self.beta
    }

    /// `F̃(u) = −1 + Σ_{α≠0} e^{β l_α} χ_α(u)` and its gradient.
    pub fn eval_ftilde(&self, u: &[f64]) -> (f64, DVector<f64>) {
        let b = self.boundary_fn(u, Model::Ftilde);
        let s = (self.beta * b.value).exp();
        (s - 1.0, b.grad * (self.beta * s))
    }

    /// `F̂(u) = Σ_{α' ~ 0} e^{β l_α'} χ(β l_α' + √β)` with gradient and Hessian.
    pub fn eval_fhat(&self, u: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let b = self.boundary_fn(u, Model::Fhat);
        let s = (self.beta * b.value).exp();
        let gb = &b.grad * self.beta;
        let hess = (&b.hess * self.beta + &gb * gb.transpose()) * s;
        (s, gb * s, hess)
    }

    pub fn r_alpha(&self, alpha: usize, u: &[f64]) -> f64 {
        let ls = self.ls(u);
        let max = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (max - ls[alpha]).max(0.0)
    }

    pub fn classify_region(&self, u: &[f64]) -> Result<RegionLabel, LocalizationError> {
        let (lo, hi) = self.thresholds();
        let ls = self.ls(u);
        let max = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if ls.iter().any(|&l| {
            let r = max - l;
            r > lo && r < hi
        }) {
            return Ok(RegionLabel::Bad);
        }
        let mut active = Vec::new();
        for a in 0..self.alpha.len() {
            let c = self.monomial_cutoff(a, u);
            if c == 1.0 {
                active.push(a);
            } else if c != 0.0 {
                return Ok(RegionLabel::Bad);
            }
        }
        let s = Simplex::new(self.data, active);
        if s.indices.is_empty() || !self.t.contains_simplex(&s) {
            return Err(LocalizationError::InconsistentLabel(if s.indices.is_empty() {
                "{}".into()
            } else {
                s.label()
            }));
        }
        Ok(RegionLabel::Good(s))
    }

    /// Largest `t` with `t·d ∈ P`, `None` if `d` is a recession direction.
    pub fn polytope_radius(&self, dir: &[f64]) -> Option<f64> {
        self.t
            .boundary_vertices()
            .into_iter()
            .filter_map(|i| {
                let s: f64 = self.alpha[i].iter().zip(dir).map(|(a, d)| a * d).sum();
                (s > 1e-14).then(|| self.heights[i] / s)
            })
            .min_by(f64::total_cmp)
    }

    /// The point `t·d` on the model boundary, by bisection on the log-sum
    /// followed by Newton polishing.
    pub fn boundary_solve(&self, dir: &[f64], model: Model) -> Result<Vec<f64>, LocalizationError> {
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(LocalizationError::ZeroDirection);
        }
        let d: Vec<f64> = dir.iter().map(|x| x / norm).collect();
        let t_p = self.polytope_radius(&d).ok_or_else(|| LocalizationError::NoRoot(d.clone()))?;
        let at = |t: f64| -> Vec<f64> { d.iter().map(|x| x * t).collect() };
        let f = |t: f64| self.log_sum(&at(t), model);
        let (mut lo, mut hi) = (0.0, t_p + 1.0);
        if f(lo) >= 0.0 || f(hi) <= 0.0 {
            return Err(LocalizationError::NoRoot(d));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * (1.0 + hi) {
                break;
            }
        }
        // Newton on B along the ray, kept inside the bracket.
        let mut t = 0.5 * (lo + hi);
        for _ in 0..5 {
            let b = self.boundary_fn(&at(t), model);
            let slope: f64 = b.grad.iter().zip(&d).map(|(g, x)| g * x).sum();
            if slope <= 0.0 || !b.value.is_finite() {
                break;
            }
            let next = t - b.value / slope;
            if !(lo..=hi).contains(&next) {
                break;
            }
            t = next;
        }
        if !(f(t).abs() < 1e-8) {
            return Err(LocalizationError::NoConvergence(d));
        }
        Ok(at(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::instances;
    use crate::triangulation::build_coherent_triangulation;

    #[test]
    fn cutoff_examples() {
        let e1 = instances::pair_of_pants(100.0);
        let t1 = build_coherent_triangulation(&e1).unwrap();
        let loc = Localizer::new(&e1, &t1);
        assert_eq!(loc.monomial_cutoff(1, &[1.005, 0.0]), 1.0);
        assert_eq!(loc.classify_region(&[0.0, 0.0]).unwrap(), RegionLabel::Good(Simplex::new(&e1, vec![0])));
        assert_eq!(loc.classify_region(&[1.105, 0.0]).unwrap(), RegionLabel::Bad);
        // r_0 = 0.05 is below the plateau threshold, so the origin stays active.
        assert_eq!(loc.classify_region(&[1.05, 1.05]).unwrap(), RegionLabel::Good(Simplex::new(&e1, vec![0, 1, 2])));
        assert_eq!(loc.classify_region(&[1.5, 1.5]).unwrap(), RegionLabel::Good(Simplex::new(&e1, vec![1, 2])));
    }

    #[test]
    fn model_values() {
        let e1 = instances::pair_of_pants(100.0);
        let t1 = build_coherent_triangulation(&e1).unwrap();
        let loc = Localizer::new(&e1, &t1);
        let (v, _) = loc.eval_ftilde(&[0.0, 0.0]);
        assert!((v - (-1.0 + 2.0 * (-100f64).exp())).abs() < 1e-15);
        let (fh, _, _) = loc.eval_fhat(&[1.0, 0.0]);
        assert!((fh - 1.0).abs() < 1e-15);
        let (deep, _) = loc.eval_ftilde(&[2.0, 0.0]);
        assert!(deep > 1e40);
    }

    #[test]
    fn model_gradients_match_differences() {
        let e2 = instances::mirror_p2(25.0);
        let t2 = build_coherent_triangulation(&e2).unwrap();
        let loc = Localizer::new(&e2, &t2);
        for u in [[0.95, 0.9], [0.97, -1.0], [-1.2, 0.93], [0.98, 0.99]] {
            for model in [Model::Fhat, Model::Ftilde] {
                let b = loc.boundary_fn(&u, model);
                let h = 1e-6;
                for k in 0..2 {
                    let mut up = u;
                    let mut dn = u;
                    up[k] += h;
                    dn[k] -= h;
                    let bu = loc.boundary_fn(&up, model);
                    let bd = loc.boundary_fn(&dn, model);
                    let fd = (bu.value - bd.value) / (2.0 * h);
                    assert!((fd - b.grad[k]).abs() < 1e-6, "{model:?} {u:?}");
                    for j in 0..2 {
                        let fdh = (bu.grad[j] - bd.grad[j]) / (2.0 * h);
                        assert!((fdh - b.hess[(j, k)]).abs() < 1e-4 * (1.0 + fdh.abs()), "{model:?} {u:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_solve_examples() {
        let e1 = instances::pair_of_pants(100.0);
        let t1 = build_coherent_triangulation(&e1).unwrap();
        let loc = Localizer::new(&e1, &t1);
        let u = loc.boundary_solve(&[1.0, 0.0], Model::Ftilde).unwrap();
        assert!(u[0] > 0.97 && u[0] <= 1.0 + 1e-12 && u[1] == 0.0);
        assert!(matches!(loc.boundary_solve(&[-1.0, 0.0], Model::Ftilde), Err(LocalizationError::NoRoot(_))));

        let e2 = instances::mirror_p2(100.0);
        let t2 = build_coherent_triangulation(&e2).unwrap();
        let loc = Localizer::new(&e2, &t2);
        let u = loc.boundary_solve(&[1.0, 1.0], Model::Ftilde).unwrap();
        let t = (u[0] * u[0] + u[1] * u[1]).sqrt();
        assert!((t - 2f64.sqrt()).abs() < 0.02);
        assert!(loc.eval_ftilde(&u).0.abs() < 1e-7);
        let v = loc.boundary_solve(&[1.0, 1.0], Model::Fhat).unwrap();
        assert!((loc.eval_fhat(&v).0 - 1.0).abs() < 1e-7);
    }

    /// Independent bisection on the raw sum `Σ T_α − 1`.
    #[test]
    fn boundary_solve_matches_plain_bisection() {
        let e2 = instances::mirror_p2(25.0);
        let t2 = build_coherent_triangulation(&e2).unwrap();
        let loc = Localizer::new(&e2, &t2);
        for k in 0..24 {
            let a = k as f64 * std::f64::consts::TAU / 24.0;
            let d = [a.cos(), a.sin()];
            let u = loc.boundary_solve(&d, Model::Ftilde).unwrap();
            let f = |t: f64| {
                let p = [t * d[0], t * d[1]];
                let mut s = -1.0;
                for i in 1..4 {
                    s += (25.0 * loc.l(i, &p)).exp() * loc.monomial_cutoff(i, &p);
                }
                s
            };
            let (mut lo, mut hi) = (0.0, 5.0);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if f(m) < 0.0 {
                    lo = m
                } else {
                    hi = m
                }
            }
            let t = (u[0] * u[0] + u[1] * u[1]).sqrt();
            assert!((t - lo).abs() < 1e-9, "angle {a}: {t} vs {lo}");
        }
    }
}
