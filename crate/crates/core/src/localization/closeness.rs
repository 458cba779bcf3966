//! Sup-norm comparison of `F̂` and `F̃ + 1` over the polytope `P = C₀`.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Localizer;
use crate::polyhedron::Polyhedron;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub beta: f64,
    pub samples: usize,
    /// `sup |F̂ − (F̃ + 1)|`.
    pub sup_gap: f64,
    /// `sup |∇F̂ − ∇F̃|`.
    pub sup_grad_gap: f64,
    /// `sup_gap / e^{−√β}`.
    pub c0: f64,
    /// `sup_grad_gap / (β e^{−√β})`.
    pub c1: f64,
    /// `min (F̂ − F̃ − 1)`; nonnegative when `F̂ >= F̃ + 1`.
    pub min_signed_gap: f64,
    /// Smallest Hessian eigenvalue of `F̂` over the collar samples, relative
    /// to the largest.
    pub min_rel_hess_eig: f64,
}

/// Raw sums: `(F̂, ∇F̂, F̃ + 1, ∇F̃)`, evaluated without logs (values on
/// `C₀` are at most the number of terms).
fn raw_models(loc: &Localizer, u: &[f64]) -> (f64, DVector<f64>, f64, DVector<f64>) {
    let n = loc.dim();
    let o = loc.origin();
    let mut fh = 0.0;
    let mut gh = DVector::zeros(n);
    for &a in &loc.t.neighbors[o] {
        let la = loc.l(a, u);
        let e = (loc.beta * la).exp();
        let x = loc.beta * la + loc.sqrt_beta;
        let c = crate::cutoff::chi(x);
        let dc = crate::cutoff::chi_d1(x);
        fh += e * c;
        gh.axpy(loc.beta * e * (c + dc), loc.alpha(a), 1.0);
    }
    let mut ft = 0.0;
    let mut gt = DVector::zeros(n);
    for a in (0..loc.num_points()).filter(|&a| a != o) {
        let e = (loc.beta * loc.l(a, u)).exp();
        let (c, dc) = loc.monomial_cutoff_grad(a, u);
        ft += e * c;
        gt.axpy(loc.beta * e * c, loc.alpha(a), 1.0);
        gt.axpy(e, &dc, 1.0);
    }
    (fh, gh, ft, gt)
}

/// Points of `P` concentrated where the two models differ: on each facet,
/// marching inward from its lower-dimensional faces in steps of `1/(50β)`
/// past the cutoff collar at depth about `√β/β`,
/// plus uniform random points of `P` inside a bounding window.
fn sample_points(loc: &Localizer, p: &Polyhedron, seed: u64, random: usize) -> Vec<Vec<f64>> {
    let n = loc.dim();
    let beta = loc.beta;
    let step = 1.0 / (50.0 * beta);
    let depth = ((loc.sqrt_beta + 12.0) / beta / step).ceil() as usize;
    let window = 2.0 + p.vertices.iter().flat_map(|v| v.iter().map(|x| crate::exact::to_f64(x).abs())).fold(0.0, f64::max);
    let mut pts = Vec::new();

    let point_on = |face: &crate::polyhedron::Face, weights: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (w, &v) in weights.iter().zip(&face.vertices) {
            let pv = p.vertex_f64(v);
            for k in 0..n {
                x[k] += w * pv[k];
            }
        }
        x
    };
    let center_of = |face: &crate::polyhedron::Face| -> Vec<f64> {
        let mut c = point_on(face, &vec![1.0 / face.vertices.len() as f64; face.vertices.len()]);
        for &r in &face.rays {
            let rv = p.ray_f64(r);
            for k in 0..n {
                c[k] += rv[k];
            }
        }
        c
    };

    for (_, facet) in p.proper_faces().filter(|(_, f)| f.dim + 1 == n) {
        let fc = center_of(facet);
        for (_, sub) in p.proper_faces().filter(|(_, f)| f.dim + 2 == n && f.is_subface_of(facet)) {
            // Base points along the ridge (a single vertex when n = 2).
            let bases: Vec<Vec<f64>> = if sub.dim == 0 {
                vec![p.vertex_f64(sub.vertices[0])]
            } else if sub.vertices.len() == 2 {
                let (a, b) = (p.vertex_f64(sub.vertices[0]), p.vertex_f64(sub.vertices[1]));
                (0..=100).map(|k| {
                    let t = k as f64 / 100.0;
                    (0..n).map(|i| a[i] + t * (b[i] - a[i])).collect()
                }).collect()
            } else {
                let a = p.vertex_f64(sub.vertices[0]);
                let r = p.ray_f64(sub.rays[0]);
                (0..=100).map(|k| (0..n).map(|i| a[i] + window * k as f64 / 100.0 * r[i]).collect()).collect()
            };
            for b in bases {
                let dir: Vec<f64> = (0..n).map(|i| fc[i] - b[i]).collect();
                let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len == 0.0 {
                    continue;
                }
                for k in 0..=depth {
                    let t = (k as f64 * step).min(len);
                    pts.push((0..n).map(|i| b[i] + t * dir[i] / len).collect());
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added = 0;
    let mut tries = 0;
    while added < random && tries < 100 * random {
        tries += 1;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-window..window)).collect();
        if p.contains_f64(&x, 0.0) {
            pts.push(x);
            added += 1;
        }
    }
    pts
}

pub fn closeness_report(loc: &Localizer, p: &Polyhedron, seed: u64, random: usize) -> ClosenessReport {
    let pts = sample_points(loc, p, seed, random);
    let (lo, _) = loc.thresholds();
    let stats: Vec<(f64, f64, f64, Option<f64>)> = pts
        .par_iter()
        .map(|u| {
            let (fh, gh, ft, gt) = raw_models(loc, u);
            let gap = fh - ft;
            let ggap = (&gh - &gt).norm();
            // Collar of ∂P where the convex model is asserted to be convex.
            let r0 = loc.r_alpha(loc.origin(), u);
            let near = loc.ls(u).iter().copied().fold(f64::NEG_INFINITY, f64::max) > -lo && r0 == 0.0;
            let eig = near.then(|| {
                let (_, _, h) = loc.eval_fhat(u);
                let e = h.symmetric_eigenvalues();
                let max = e.iter().copied().fold(0.0, f64::max);
                if max > 0.0 { e.min() / max } else { 0.0 }
            });
            (gap.abs(), ggap, gap, eig)
        })
        .collect();
    let sup_gap = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let sup_grad_gap = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let min_signed_gap = stats.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let min_rel_hess_eig = stats.iter().filter_map(|s| s.3).fold(f64::INFINITY, f64::min);
    let e = (-loc.sqrt_beta).exp();
    ClosenessReport {
        beta: loc.beta,
        samples: pts.len(),
        sup_gap,
        sup_grad_gap,
        c0: sup_gap / e,
        c1: sup_grad_gap / (loc.beta * e),
        min_signed_gap,
        min_rel_hess_eig,
    }
}
