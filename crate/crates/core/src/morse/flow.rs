//! Downward gradient flow of `φ` on `{B = 0}` from critical points, and
//! the projective Legendre image of the resulting unstable manifolds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{multiplier, tangent_basis, CriticalDatum, MorseError};
use crate::localization::{Localizer, Model};
use crate::potential::{projective_legendre, Potential};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Seed offset from the critical point, in units of `1/β`.
    pub seed_offset: f64,
    pub dist_stop: f64,
    /// Local error tolerance of the adaptive RK4 step.
    pub tol: f64,
    pub max_steps: usize,
    pub t_max: f64,
    /// Longest allowed step in `u`, which also bounds the sample spacing.
    pub max_step_len: f64,
    /// Initial seeds on the unstable circle of an index-2 point.
    pub ring_seeds: usize,
    /// Refinement rounds of the ring and the image gap that triggers them.
    pub refine_depth: usize,
    pub refine_gap: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            seed_offset: 1e-2,
            dist_stop: 1e-4,
            tol: 1e-10,
            max_steps: 200_000,
            t_max: 1e3,
            max_step_len: 5e-3,
            ring_seeds: 24,
            refine_depth: 40,
            refine_gap: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "critical", rename_all = "lowercase")]
pub enum FlowLimit {
    /// Index into the critical point list.
    Critical(usize),
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub origin: usize,
    pub seed_direction: Vec<f64>,
    /// `(t, u(t))`.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub limit: FlowLimit,
    pub max_level_error: f64,
    pub phi_decreasing: bool,
}

impl FlowTrajectory {
    pub fn limit_index(&self) -> Option<usize> {
        match self.limit {
            FlowLimit::Critical(i) => Some(i),
            FlowLimit::Divergent => None,
        }
    }
}

struct Flow<'a> {
    loc: &'a Localizer<'a>,
    phi: &'a dyn Potential,
    model: Model,
}

impl Flow<'_> {
    /// `−(∇φ − c₁∇B)` with gradients taken in the metric `g = Hess φ`, so
    /// that `∇φ = u` and the Legendre image moves by `−η + c₁ dB`.
    fn field(&self, u: &DVector<f64>) -> DVector<f64> {
        let db = self.loc.boundary_fn(u.as_slice(), self.model).grad;
        let dphi = self.phi.grad(u.as_slice());
        let h = self.phi.hess(u.as_slice());
        let (gphi, gb) = match h.cholesky() {
            Some(ch) => (ch.solve(&dphi), ch.solve(&db)),
            None => (dphi.clone(), db.clone()),
        };
        let c1 = dphi.dot(&gb) / db.dot(&gb);
        -(gphi - gb * c1)
    }

    fn signed_field(&self, u: &DVector<f64>, ascending: bool) -> DVector<f64> {
        if ascending { -self.field(u) } else { self.field(u) }
    }

    fn project(&self, u: &mut DVector<f64>) -> f64 {
        for _ in 0..8 {
            let b = self.loc.boundary_fn(u.as_slice(), self.model);
            if !b.value.is_finite() {
                return f64::INFINITY;
            }
            if b.value.abs() < 1e-14 {
                return b.value.abs();
            }
            *u -= &b.grad * (b.value / b.grad.norm_squared());
        }
        self.loc.boundary_fn(u.as_slice(), self.model).value.abs()
    }

    fn rk4(&self, u: &DVector<f64>, h: f64, up: bool) -> DVector<f64> {
        let k1 = self.signed_field(u, up);
        let k2 = self.signed_field(&(u + &k1 * (h / 2.0)), up);
        let k3 = self.signed_field(&(u + &k2 * (h / 2.0)), up);
        let k4 = self.signed_field(&(u + &k3 * h), up);
        u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    fn integrate(
        &self,
        origin: usize,
        seed_direction: Vec<f64>,
        start: DVector<f64>,
        crits: &[CriticalDatum],
        params: &FlowParams,
        ascending: bool,
    ) -> FlowTrajectory {
        let own = crits[origin].morse_index;
        let stops = |c: &CriticalDatum| if ascending { c.morse_index > own } else { c.morse_index < own };
        let mut u = start;
        let mut level_err = self.project(&mut u);
        let mut t = 0.0;
        let mut h = 1e-3 / self.loc.beta;
        let mut samples = vec![(0.0, u.iter().copied().collect::<Vec<f64>>())];
        let mut last_phi = self.phi.value(u.as_slice());
        let mut decreasing = true;
        let near = |u: &DVector<f64>, dist: f64| {
            crits.iter().enumerate().find(|(_, c)| {
                stops(c) && (DVector::from_column_slice(&c.location) - u).norm() < dist
            })
        };
        let mut limit = FlowLimit::Divergent;
        for _ in 0..params.max_steps {
            if let Some((i, _)) = near(&u, params.dist_stop) {
                limit = FlowLimit::Critical(i);
                break;
            }
            let v = self.signed_field(&u, ascending);
            let speed = v.norm();
            if speed < 1e-13 || t > params.t_max {
                if let Some((i, _)) = near(&u, 1e-3) {
                    limit = FlowLimit::Critical(i);
                }
                break;
            }
            h = h.min(params.max_step_len / speed);
            let full = self.rk4(&u, h, ascending);
            let half = self.rk4(&self.rk4(&u, h / 2.0, ascending), h / 2.0, ascending);
            let err = (&half - &full).norm() / 15.0;
            if err > params.tol && h * speed > 1e-14 {
                h *= (0.9 * (params.tol / err).powf(0.2)).max(0.2);
                continue;
            }
            u = half;
            level_err = level_err.max(self.project(&mut u));
            if !level_err.is_finite() {
                break;
            }
            t += h;
            let p = self.phi.value(u.as_slice());
            decreasing &= (p - last_phi) * if ascending { -1.0 } else { 1.0 } <= 1e-13 * last_phi.abs();
            last_phi = p;
            samples.push((t, u.iter().copied().collect()));
            let grow = if err > 0.0 { (0.9 * (params.tol / err).powf(0.2)).min(5.0) } else { 5.0 };
            h *= grow.max(1.0);
        }
        FlowTrajectory { origin, seed_direction, samples, limit, max_level_error: level_err, phi_decreasing: decreasing }
    }
}

/// Eigen-directions of the linearized flow at a critical point with
/// negative (unstable) or positive (stable) eigenvalue: the projected
/// Hessian of `φ − c_B B` relative to the metric `Hess φ` on the tangent space.
fn eigen_directions(loc: &Localizer, phi: &dyn Potential, model: Model, crit: &CriticalDatum, unstable: bool) -> Vec<DVector<f64>> {
    let b = loc.boundary_fn(&crit.location, model);
    let z = tangent_basis(&b.grad);
    if z.ncols() == 0 {
        return Vec::new();
    }
    let hphi = phi.hess(&crit.location);
    let cb = multiplier(&phi.grad(&crit.location), &b.grad);
    let w: DMatrix<f64> = z.transpose() * (&hphi - &b.hess * cb) * &z;
    let g: DMatrix<f64> = z.transpose() * &hphi * &z;
    let Some(ch) = g.cholesky() else { return Vec::new() };
    let linv = ch.l().try_inverse().unwrap_or_else(|| DMatrix::identity(z.ncols(), z.ncols()));
    let eig = (&linv * w * linv.transpose()).symmetric_eigen();
    (0..eig.eigenvalues.len())
        .filter(|&i| (eig.eigenvalues[i] < 0.0) == unstable)
        .map(|i| {
            let v = &z * (linv.transpose() * eig.eigenvectors.column(i));
            let n = v.norm();
            v / n
        })
        .collect()
}

/// Trajectories of the unstable manifold of `crits[origin]`. Index 1 uses
/// the two signed eigen-directions; index 2 uses a ring of seeds and
/// bisects between neighbouring seeds with different limits to find the
/// separatrices ending at index-1 points.
pub fn flow_unstable(
    loc: &Localizer,
    phi: &dyn Potential,
    model: Model,
    crits: &[CriticalDatum],
    origin: usize,
    params: &FlowParams,
) -> Result<Vec<FlowTrajectory>, MorseError> {
    let crit = &crits[origin];
    let flow = Flow { loc, phi, model };
    let x0 = DVector::from_column_slice(&crit.location);
    if crit.morse_index == 0 {
        return Ok(vec![FlowTrajectory {
            origin,
            seed_direction: vec![0.0; loc.dim()],
            samples: vec![(0.0, crit.location.clone())],
            limit: FlowLimit::Critical(origin),
            max_level_error: crit.level_residual,
            phi_decreasing: true,
        }]);
    }
    let dirs = eigen_directions(loc, phi, model, crit, true);
    let delta = params.seed_offset / loc.beta;
    let run = |d: &DVector<f64>| flow.integrate(origin, d.iter().copied().collect(), &x0 + d * delta, crits, params, false);
    let out: Vec<FlowTrajectory> = match dirs.len() {
        1 => [dirs[0].clone(), -&dirs[0]].par_iter().map(run).collect(),
        2 => {
            let m = params.ring_seeds;
            let ring = |a: f64| &dirs[0] * a.cos() + &dirs[1] * a.sin();
            struct RingRun {
                angle: f64,
                traj: FlowTrajectory,
                image: Vec<DVector<f64>>,
                gap_next: Option<f64>,
            }
            let make = |a: f64| {
                let traj = run(&ring(a));
                let image = legendre_image(phi, &traj, 120);
                RingRun { angle: a, traj, image, gap_next: None }
            };
            let mut ring_runs: Vec<RingRun> =
                (0..=m).into_par_iter().map(|k| make(std::f64::consts::TAU * k as f64 / m as f64)).collect();
            // Refine the ring where neighbouring images separate; the images
            // bunch up except within exponentially thin angles of the separatrices.
            for _ in 0..params.refine_depth {
                let gaps: Vec<(usize, f64)> = (0..ring_runs.len() - 1)
                    .into_par_iter()
                    .filter(|&i| ring_runs[i].gap_next.is_none())
                    .map(|i| (i, hausdorff(&ring_runs[i].image, &ring_runs[i + 1].image)))
                    .collect();
                for (i, g) in gaps {
                    ring_runs[i].gap_next = Some(g);
                }
                let splits: Vec<usize> =
                    (0..ring_runs.len() - 1).filter(|&i| ring_runs[i].gap_next.unwrap_or(0.0) > params.refine_gap).collect();
                if splits.is_empty() {
                    break;
                }
                let fresh: Vec<RingRun> =
                    splits.par_iter().map(|&i| make(0.5 * (ring_runs[i].angle + ring_runs[i + 1].angle))).collect();
                for &i in &splits {
                    ring_runs[i].gap_next = None;
                }
                ring_runs.extend(fresh);
                ring_runs.sort_by(|x, y| x.angle.total_cmp(&y.angle));
            }
            ring_runs.pop();
            let separatrices = separatrices_into(&flow, crits, origin, params);
            ring_runs.into_iter().map(|r| r.traj).chain(separatrices).collect()
        }
        k => return Err(MorseError::IndexMismatch { simplex: crit.simplex.clone(), expected: crit.morse_index, found: k }),
    };
    if out.iter().any(|t| t.limit == FlowLimit::Divergent) {
        return Err(MorseError::DivergentFlow(crit.simplex.clone()));
    }
    Ok(out)
}

/// Trajectories from `crits[origin]` to points of index one less. These are
/// unstable for forward shooting (the saddles repel at rate `O(β)`), so they
/// are traced backwards: the ascending flow from each saddle along its
/// stable direction, kept when it ends at `origin`, then reversed.
fn separatrices_into(flow: &Flow, crits: &[CriticalDatum], origin: usize, params: &FlowParams) -> Vec<FlowTrajectory> {
    let want = crits[origin].morse_index - 1;
    let delta = params.seed_offset / flow.loc.beta;
    let seeds: Vec<(usize, DVector<f64>)> = crits
        .iter()
        .enumerate()
        .filter(|(_, c)| c.morse_index == want)
        .flat_map(|(j, c)| {
            eigen_directions(flow.loc, flow.phi, flow.model, c, false)
                .into_iter()
                .flat_map(move |d| [(j, d.clone()), (j, -d)])
        })
        .collect();
    seeds
        .par_iter()
        .filter_map(|(j, d)| {
            let x = DVector::from_column_slice(&crits[*j].location);
            let back = flow.integrate(*j, d.iter().copied().collect(), &x + d * delta, crits, params, true);
            if back.limit != FlowLimit::Critical(origin) {
                return None;
            }
            let total = back.samples.last().map_or(0.0, |s| s.0);
            let mut samples: Vec<(f64, Vec<f64>)> = back.samples.into_iter().rev().map(|(t, u)| (total - t, u)).collect();
            samples.insert(0, (0.0, crits[origin].location.clone()));
            let first = DVector::from_column_slice(&samples[1].1) - DVector::from_column_slice(&crits[origin].location);
            Some(FlowTrajectory {
                origin,
                seed_direction: (&first / first.norm()).iter().copied().collect(),
                samples,
                limit: FlowLimit::Critical(*j),
                max_level_error: back.max_level_error,
                phi_decreasing: back.phi_decreasing,
            })
        })
        .collect()
}

/// `dφ/|dφ|` along a trajectory, at most `cap` evenly spaced samples.
fn legendre_image(phi: &dyn Potential, t: &FlowTrajectory, cap: usize) -> Vec<DVector<f64>> {
    let stride = t.samples.len().div_ceil(cap).max(1);
    let mut out: Vec<DVector<f64>> = t.samples.iter().step_by(stride).map(|(_, u)| projective_legendre(phi, u)).collect();
    if let Some((_, last)) = t.samples.last() {
        out.push(projective_legendre(phi, last));
    }
    out
}

fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let one_way = |x: &[DVector<f64>], y: &[DVector<f64>]| {
        x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub simplex: String,
    pub samples: usize,
    /// Smallest barycentric coefficient over samples away from the limits.
    #[serde(with = "crate::report::float")]
    pub min_interior_margin: f64,
    /// Smallest coefficient over all samples (closed-cone membership).
    #[serde(with = "crate::report::float")]
    pub min_margin: f64,
    #[serde(with = "crate::report::float")]
    pub max_residual: f64,
    /// Largest distance from a point of the simplex to the sampled images,
    /// in barycentric coordinates.
    #[serde(with = "crate::report::float")]
    pub coverage_gap: f64,
    pub pass: bool,
}

/// Barycentric coordinates of `q` in `cone(τ)` and the relative residual.
fn cone_coords(vertices: &[DVector<f64>], q: &DVector<f64>) -> (Vec<f64>, f64) {
    let a = DMatrix::from_columns(vertices);
    let c = a.clone().svd(true, true).solve(q, 1e-14).unwrap_or_else(|_| DVector::zeros(vertices.len()));
    let resid = (&a * &c - q).norm() / q.norm();
    let s: f64 = c.iter().sum();
    (c.iter().map(|x| x / s).collect(), resid)
}

/// Checks that `dφ/|dφ|` along the trajectories lies in the open cone over
/// `τ` and, together with the trajectories of the proper faces of `τ`
/// (`closure`), sweeps all of it.
pub fn cone_correspondence_check(
    trajectories: &[FlowTrajectory],
    closure: &[FlowTrajectory],
    crit: &CriticalDatum,
    crits: &[CriticalDatum],
    phi: &dyn Potential,
    interior_distance: f64,
    cover_tol: f64,
) -> ConeReport {
    let verts: Vec<DVector<f64>> = crit.vertices.iter().map(|v| DVector::from_vec(v.as_f64())).collect();
    let k = verts.len();
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut min_interior = f64::INFINITY;
    let mut min_all = f64::INFINITY;
    let mut max_res: f64 = 0.0;
    for tr in trajectories {
        let end = tr.limit_index().map(|i| DVector::from_column_slice(&crits[i].location));
        for (_, u) in &tr.samples {
            let q = projective_legendre(phi, u);
            let (b, r) = cone_coords(&verts, &q);
            let m = b.iter().copied().fold(f64::INFINITY, f64::min);
            max_res = max_res.max(r);
            min_all = min_all.min(m);
            let far = end.as_ref().is_none_or(|e| (e - DVector::from_column_slice(u)).norm() > interior_distance);
            if far {
                min_interior = min_interior.min(m);
            }
            coords.push(b);
        }
    }
    let samples = coords.len();
    for tr in closure {
        for (_, u) in &tr.samples {
            coords.push(cone_coords(&verts, &projective_legendre(phi, u)).0);
        }
    }
    let coverage_gap = match k {
        1 => 0.0,
        2 => {
            let mut s: Vec<f64> = coords.iter().map(|b| b[0].clamp(0.0, 1.0)).collect();
            s.push(0.0);
            s.push(1.0);
            s.sort_by(f64::total_cmp);
            s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / 2.0
        }
        _ => {
            let g = 40;
            let mut worst: f64 = 0.0;
            for i in 0..=g {
                for j in 0..=g - i {
                    let p = [i as f64 / g as f64, j as f64 / g as f64, (g - i - j) as f64 / g as f64];
                    let d = coords
                        .iter()
                        .map(|b| b.iter().zip(&p).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                        .fold(f64::INFINITY, f64::min)
                        .sqrt();
                    worst = worst.max(d);
                }
            }
            worst
        }
    };
    let pass = max_res < 1e-6 && min_all > -1e-9 && (k == 1 || min_interior > 0.0) && coverage_gap <= cover_tol;
    ConeReport {
        simplex: crit.simplex.clone(),
        samples,
        min_interior_margin: if min_interior.is_finite() { min_interior } else { 0.0 },
        min_margin: min_all,
        max_residual: max_res,
        coverage_gap,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::instances;
    use crate::morse::find_critical_points;
    use crate::potential::{build_adapted_potential, GaugePotential};
    use crate::triangulation::build_coherent_triangulation;
    use crate::tropical::complement_polytope;

    /// Fixed small-step RK4 with projection, as an independent integrator.
    fn fine_path(flow: &Flow, start: DVector<f64>, target: &[f64], h: f64) -> f64 {
        let mut u = start;
        flow.project(&mut u);
        let tgt = DVector::from_column_slice(target);
        let mut best = f64::INFINITY;
        for _ in 0..2_000_000 {
            let k1 = flow.field(&u);
            let k2 = flow.field(&(&u + &k1 * (h / 2.0)));
            let k3 = flow.field(&(&u + &k2 * (h / 2.0)));
            let k4 = flow.field(&(&u + &k3 * h));
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            flow.project(&mut u);
            best = best.min((&u - &tgt).norm());
            if best < 1e-4 {
                break;
            }
        }
        best
    }

    #[test]
    fn pair_of_pants_flows() {
        let e1 = instances::pair_of_pants(100.0);
        let t = build_coherent_triangulation(&e1).unwrap();
        let am = complement_polytope(&e1, &t).unwrap();
        let loc = Localizer::new(&e1, &t);
        let phi = GaugePotential::identity(2);
        let crits = find_critical_points(&loc, &am, &phi, Model::Fhat).unwrap();
        let top = crits.iter().position(|c| c.morse_index == 1).unwrap();
        let params = FlowParams::default();
        let trs = flow_unstable(&loc, &phi, Model::Fhat, &crits, top, &params).unwrap();
        assert_eq!(trs.len(), 2);
        let mut limits: Vec<usize> = trs.iter().map(|t| t.limit_index().unwrap()).collect();
        limits.sort();
        let mut mins: Vec<usize> = (0..3).filter(|&i| crits[i].morse_index == 0).collect();
        mins.sort();
        assert_eq!(limits, mins);
        for tr in &trs {
            assert!(tr.phi_decreasing && tr.max_level_error < 1e-10);
            let target = &crits[tr.limit_index().unwrap()].location;
            let start = DVector::from_column_slice(&tr.samples[0].1);
            let flow = Flow { loc: &loc, phi: &phi, model: Model::Fhat };
            assert!(fine_path(&flow, start, target, 2e-4) < 1e-4);
        }
        let rep = cone_correspondence_check(&trs, &[], &crits[top], &crits, &phi, 0.05, 0.05);
        assert!(rep.pass, "{rep:?}");
        let vertex = crits.iter().position(|c| c.morse_index == 0).unwrap();
        let single = flow_unstable(&loc, &phi, Model::Fhat, &crits, vertex, &params).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].samples.len(), 1);
        let r = cone_correspondence_check(&single, &[], &crits[vertex], &crits, &phi, 0.05, 0.05);
        assert!(r.max_residual < 1e-6);
    }

    #[test]
    fn mirror_p2_incidence() {
        let e2 = instances::mirror_p2(100.0);
        let t = build_coherent_triangulation(&e2).unwrap();
        let am = complement_polytope(&e2, &t).unwrap();
        let loc = Localizer::new(&e2, &t);
        let phi = build_adapted_potential(&am.poly, 0.1, 8, 0.05).unwrap();
        let crits = find_critical_points(&loc, &am, &phi, Model::Fhat).unwrap();
        for (i, c) in crits.iter().enumerate().filter(|(_, c)| c.morse_index == 1) {
            let trs = flow_unstable(&loc, &phi, Model::Fhat, &crits, i, &FlowParams::default()).unwrap();
            let mut got: Vec<String> = trs.iter().map(|t| crits[t.limit_index().unwrap()].simplex.clone()).collect();
            got.sort();
            let mut want: Vec<String> = c.vertices.iter().map(|v| format!("{{{v}}}")).collect();
            want.sort();
            assert_eq!(got, want);
            let rep = cone_correspondence_check(&trs, &[], c, &crits, &phi, 0.05, 0.05);
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn index_two_reaches_every_facet() {
        let e = instances::mirror_p3(100.0);
        let t = build_coherent_triangulation(&e).unwrap();
        let am = complement_polytope(&e, &t).unwrap();
        let loc = Localizer::new(&e, &t);
        let phi = build_adapted_potential(&am.poly, 0.1, 8, 0.05).unwrap();
        let crits = find_critical_points(&loc, &am, &phi, Model::Fhat).unwrap();
        let top = crits.iter().position(|c| c.morse_index == 2).unwrap();
        let params = FlowParams::default();
        let trs = flow_unstable(&loc, &phi, Model::Fhat, &crits, top, &params).unwrap();
        let mut reached: Vec<usize> = trs.iter().filter_map(FlowTrajectory::limit_index).collect();
        reached.sort();
        reached.dedup();
        let edges = reached.iter().filter(|&&i| crits[i].morse_index == 1).count();
        let verts = reached.iter().filter(|&&i| crits[i].morse_index == 0).count();
        assert_eq!((edges, verts), (3, 3));
        for &i in &reached {
            assert!(crits[i].vertices.iter().all(|v| crits[top].vertices.contains(v)));
        }
        let closure: Vec<FlowTrajectory> = (0..crits.len())
            .filter(|&i| i != top && crits[i].vertices.iter().all(|v| crits[top].vertices.contains(v)))
            .flat_map(|i| flow_unstable(&loc, &phi, Model::Fhat, &crits, i, &FlowParams::default()).unwrap())
            .collect();
        let rep = cone_correspondence_check(&trs, &closure, &crits[top], &crits, &phi, 0.05, 0.1);
        assert!(rep.pass, "{rep:?}");
    }
}
