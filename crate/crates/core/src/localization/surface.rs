//! The interpolating family `f_s = Σ f_α (s χ_α + 1 − s)` on the complex
//! torus, in log coordinates `w = ρ + iθ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{LocalizationError, Localizer};
use crate::cutoff;

/// A point of `(C*)^n` in log coordinates; `u = ρ/β`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogPoint {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub u: Vec<f64>,
}

impl LogPoint {
    pub fn from_u(u: &[f64], theta: &[f64], beta: f64) -> Self {
        Self { rho: u.iter().map(|x| x * beta).collect(), theta: theta.to_vec(), u: u.to_vec() }
    }

    pub fn from_rho(rho: &[f64], theta: &[f64], beta: f64) -> Self {
        Self { rho: rho.to_vec(), theta: theta.to_vec(), u: rho.iter().map(|x| x / beta).collect() }
    }
}

/// Value and complex differentials of `f_s`, all divided by `e^{log_scale}`
/// (the largest term magnitude) so that nothing overflows.
#[derive(Clone, Debug)]
pub struct FsDifferentials {
    pub value: Complex64,
    /// `∂f_s/∂w_j`.
    pub d: Vec<Complex64>,
    /// `∂f_s/∂w̄_j`.
    pub dbar: Vec<Complex64>,
    pub log_scale: f64,
    /// `Σ |f_α| · |s χ_α + 1 − s|`, scaled the same way.
    pub magnitude: f64,
}

impl FsDifferentials {
    pub fn norm_d(&self) -> f64 {
        self.d.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_dbar(&self) -> f64 {
        self.dbar.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real Jacobian of `(Re f, Im f)` in the coordinates `(ρ, θ)`.
    pub fn real_jacobian(&self) -> DMatrix<f64> {
        let n = self.d.len();
        let mut j = DMatrix::zeros(2, 2 * n);
        for k in 0..n {
            let dr = self.d[k] + self.dbar[k];
            let dt = Complex64::i() * (self.d[k] - self.dbar[k]);
            j[(0, k)] = dr.re;
            j[(1, k)] = dr.im;
            j[(0, n + k)] = dt.re;
            j[(1, n + k)] = dt.im;
        }
        j
    }
}

impl Localizer<'_> {
    /// `χ_α` and its `u`-gradient by the product rule.
    pub fn monomial_cutoff_grad(&self, alpha: usize, u: &[f64]) -> (f64, DVector<f64>) {
        let n = self.dim();
        let la = self.l(alpha, u);
        let nb = &self.t.neighbors[alpha];
        let xs: Vec<f64> = nb.iter().map(|&b| self.beta * (la - self.l(b, u)) + self.sqrt_beta).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| cutoff::chi(x)).collect();
        let value = vals.iter().product();
        let mut grad = DVector::zeros(n);
        for (k, &b) in nb.iter().enumerate() {
            let d1 = cutoff::chi_d1(xs[k]);
            if d1 == 0.0 {
                continue;
            }
            let others: f64 = vals.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v).product();
            grad.axpy(d1 * others * self.beta, &(self.alpha(alpha) - self.alpha(b)), 1.0);
        }
        (value, grad)
    }

    fn phase(&self, alpha: usize, theta: &[f64]) -> f64 {
        self.alpha(alpha).iter().zip(theta).map(|(a, t)| a * t).sum::<f64>() - self.data.phases[alpha]
    }

    /// `f_s(z)` without rescaling.
    pub fn eval_fs(&self, z: &LogPoint, s: f64) -> Complex64 {
        (0..self.num_points())
            .map(|a| {
                let c = s * self.monomial_cutoff(a, &z.u) + 1.0 - s;
                Complex64::from_polar((self.beta * self.l(a, &z.u)).exp(), self.phase(a, &z.theta)) * c
            })
            .sum()
    }

    pub fn fs_differentials(&self, z: &LogPoint, s: f64) -> FsDifferentials {
        let n = self.dim();
        let logs: Vec<f64> = (0..self.num_points()).map(|a| self.beta * self.l(a, &z.u)).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut value = Complex64::new(0.0, 0.0);
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        let mut dbar = vec![Complex64::new(0.0, 0.0); n];
        let mut magnitude = 0.0;
        for (a, &lg) in logs.iter().enumerate() {
            let f = Complex64::from_polar((lg - m).exp(), self.phase(a, &z.theta));
            let (chi, grad) = self.monomial_cutoff_grad(a, &z.u);
            let c = s * chi + 1.0 - s;
            value += f * c;
            magnitude += f.norm() * c.abs();
            for j in 0..n {
                // ∂χ/∂w_j = ∂χ/∂w̄_j = (2β)⁻¹ ∂χ/∂u_j since χ depends on ρ only.
                let dchi = s * grad[j] / (2.0 * self.beta);
                d[j] += f * (self.alpha(a)[j] * c + dchi);
                dbar[j] += f * dchi;
            }
        }
        FsDifferentials { value, d, dbar, log_scale: m, magnitude }
    }

    /// Gauss-Newton projection of `z` onto `H_s = {f_s = 0}` in the
    /// `(ρ, θ)` coordinates, using the minimum-norm step.
    pub fn project_to_hs(&self, z: &LogPoint, s: f64) -> Result<LogPoint, LocalizationError> {
        let n = self.dim();
        let mut x: Vec<f64> = z.rho.iter().chain(&z.theta).copied().collect();
        for _ in 0..100 {
            let p = LogPoint::from_rho(&x[..n], &x[n..], self.beta);
            let df = self.fs_differentials(&p, s);
            let rel = df.value.norm() / df.magnitude.max(1e-300);
            if rel < 1e-12 {
                return Ok(p);
            }
            let j = df.real_jacobian();
            let jjt = &j * j.transpose();
            let Some(inv) = jjt.try_inverse() else {
                return Err(LocalizationError::NoConvergence(p.u));
            };
            let r = DVector::from_vec(vec![df.value.re, df.value.im]);
            let mut step = -(j.transpose() * inv * r);
            let len = step.norm();
            if len > 0.5 {
                step *= 0.5 / len;
            }
            for (xi, si) in x.iter_mut().zip(step.iter()) {
                *xi += si;
            }
        }
        let p = LogPoint::from_rho(&x[..n], &x[n..], self.beta);
        Err(LocalizationError::NoConvergence(p.u))
    }

    /// `(|∂f_s|, |∂̄f_s|)` at a point of `H_s`, normalized by the dominant
    /// term (a holomorphic factor, so the ratio is unaffected).
    pub fn symplecticity_margin(&self, z: &LogPoint, s: f64) -> Result<(f64, f64), LocalizationError> {
        let df = self.fs_differentials(z, s);
        let rel = df.value.norm() / df.magnitude.max(1e-300);
        if rel > 1e-8 {
            return Err(LocalizationError::NotOnHypersurface(rel));
        }
        Ok((df.norm_d(), df.norm_dbar()))
    }
}
