//! Hausdorff distance between `∂C̃_β` and `∂P`, and between their unit-normal
//! lifts, by dense radial sampling of the localized boundary.
//!
//! Distances from boundary samples to `∂P` (and to its conormal lift) are
//! computed exactly through the face lattice; the reverse direction samples
//! `∂P` and measures against the sampled curve (a polyline when `n = 2`).

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LocalizationError, Localizer, Model};
use crate::lattice::NewtonData;
use crate::polyhedron::{Face, Polyhedron};
use crate::triangulation::StarTriangulation;
use crate::tropical::complement_polytope;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub beta: f64,
    pub samples: usize,
    pub hausdorff: f64,
    pub normal_hausdorff: f64,
    pub hausdorff_sqrt_beta: f64,
    pub normal_sqrt_beta: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Nearest point of a face to `x`: project onto the affine hull, and if that
/// leaves the face recurse into its facets.
pub(crate) fn nearest_on_face(p: &Polyhedron, face: &Face, x: &[f64]) -> Vec<f64> {
    if face.dim == 0 {
        return p.vertex_f64(face.vertices[0]);
    }
    let (base, basis) = p.face_affine_hull(face);
    let n = x.len();
    let b = DMatrix::from_fn(n, basis.len(), |i, j| basis[j][i]);
    let rhs = DVector::from_iterator(n, x.iter().zip(&base).map(|(a, c)| a - c));
    let coef = (b.transpose() * &b).lu().solve(&(b.transpose() * rhs)).expect("independent basis");
    let proj: Vec<f64> = (0..n).map(|i| base[i] + (0..basis.len()).map(|j| b[(i, j)] * coef[j]).sum::<f64>()).collect();
    if p.contains_f64(&proj, 1e-12) {
        return proj;
    }
    p.faces
        .iter()
        .filter(|g| g.dim + 1 == face.dim && g.is_subface_of(face))
        .map(|g| nearest_on_face(p, g, x))
        .min_by(|a, b| dist(a, x).total_cmp(&dist(b, x)))
        .expect("face has facets")
}

/// Chordal distance from a unit vector to the unit vectors of a closed cone.
pub(crate) fn dist_to_cone_sphere(gens: &[Vec<f64>], v: &[f64]) -> f64 {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let k = gens.len();
    for mask in 1u32..(1 << k) {
        let sel: Vec<&Vec<f64>> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| &gens[i]).collect();
        let g = DMatrix::from_fn(n, sel.len(), |i, j| sel[j][i]);
        let gram = g.transpose() * &g;
        let Some(c) = gram.clone().lu().solve(&(g.transpose() * DVector::from_column_slice(v))) else {
            continue;
        };
        if gram.determinant().abs() < 1e-12 || c.iter().any(|&x| x < -1e-14) {
            continue;
        }
        let proj = &g * c;
        let pn = proj.norm();
        if pn > 1e-300 {
            let w: Vec<f64> = proj.iter().map(|x| x / pn).collect();
            let inner = dot(&w, v);
            if best.as_ref().is_none_or(|b| inner > b.0) {
                best = Some((inner, w));
            }
        }
    }
    // With no usable projection the nearest unit vector is orthogonal to v.
    best.map_or(2f64.sqrt(), |(_, w)| dist(&w, v))
}

struct Lift {
    x: Vec<f64>,
    nu: Vec<f64>,
}

fn lift_dist(a: &Lift, b: &Lift) -> f64 {
    let d1 = dist(&a.x, &b.x);
    let d2 = dist(&a.nu, &b.nu);
    (d1 * d1 + d2 * d2).sqrt()
}

/// Distance from `q` to the segment `[a, b]` in any dimension.
fn dist_segment(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut l2 = 0.0;
    let mut proj = 0.0;
    for i in 0..q.len() {
        let d = b[i] - a[i];
        l2 += d * d;
        proj += (q[i] - a[i]) * d;
    }
    let t = if l2 > 0.0 { (proj / l2).clamp(0.0, 1.0) } else { 0.0 };
    (0..q.len()).map(|i| (q[i] - a[i] - t * (b[i] - a[i])).powi(2)).sum::<f64>().sqrt()
}

fn directions(loc: &Localizer, p: &Polyhedron) -> Vec<Vec<f64>> {
    let beta = loc.beta;
    let mut dirs = Vec::new();
    if loc.dim() == 2 {
        let mut angles: Vec<f64> = (0..4000).map(|k| k as f64 * TAU / 4000.0).collect();
        for v in 0..p.vertices.len() {
            let pv = p.vertex_f64(v);
            let r = dot(&pv, &pv).sqrt();
            let a0 = pv[1].atan2(pv[0]);
            let w = 30.0 / (beta * r);
            angles.extend((0..=400).map(|k| a0 - w + 2.0 * w * k as f64 / 400.0));
        }
        let mut angles: Vec<f64> = angles.into_iter().map(|a| a.rem_euclid(TAU)).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        dirs.extend(angles.into_iter().map(|a| vec![a.cos(), a.sin()]));
    } else {
        let k = 6000;
        let golden = PI * (3.0 - 5f64.sqrt());
        for i in 0..k {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            dirs.push(vec![r * phi.cos(), r * phi.sin(), z]);
        }
        for v in 0..p.vertices.len() {
            let pv = normalize(&p.vertex_f64(v));
            let w = 30.0 / (beta * dot(&p.vertex_f64(v), &p.vertex_f64(v)).sqrt());
            // Small cap of directions around each vertex.
            let e1 = normalize(&if pv[0].abs() < 0.9 { vec![0.0, -pv[2], pv[1]] } else { vec![-pv[2], 0.0, pv[0]] });
            let e2 = vec![pv[1] * e1[2] - pv[2] * e1[1], pv[2] * e1[0] - pv[0] * e1[2], pv[0] * e1[1] - pv[1] * e1[0]];
            for a in 0..40 {
                for b in 0..40 {
                    let s = w * (2.0 * a as f64 / 39.0 - 1.0);
                    let t = w * (2.0 * b as f64 / 39.0 - 1.0);
                    dirs.push(normalize(&(0..3).map(|i| pv[i] + s * e1[i] + t * e2[i]).collect::<Vec<_>>()));
                }
            }
        }
    }
    dirs
}

/// Sample points of `∂P` with the unit normals of the faces they lie on. In
/// 3D the normal fans are sampled coarsely to match the resolution of the
/// boundary samples.
fn polytope_lift_samples(p: &Polyhedron, window: f64, spacing: f64) -> Vec<Lift> {
    let (edge_normals, cone_normals) = if p.dim == 2 { (200, 30) } else { (20, 10) };
    let n = p.dim;
    let mut out = Vec::new();
    let normal_gens = |f: &Face| -> Vec<Vec<f64>> { f.tight.iter().map(|&c| normalize(&p.constraints[c].normal_f64())).collect() };
    for (_, f) in p.proper_faces() {
        let gens = normal_gens(f);
        // Normals: for facets a single one, otherwise combinations of the generators.
        let normals: Vec<Vec<f64>> = if gens.len() == 1 {
            gens.clone()
        } else if gens.len() == 2 {
            (0..=edge_normals)
                .map(|k| {
                    let t = k as f64 / edge_normals as f64;
                    normalize(&(0..n).map(|i| (1.0 - t) * gens[0][i] + t * gens[1][i]).collect::<Vec<_>>())
                })
                .collect()
        } else {
            let m = cone_normals;
            let mut v = Vec::new();
            for a in 0..=m {
                for b in 0..=(m - a) {
                    let w = [a as f64, b as f64, (m - a - b) as f64];
                    let mut x = vec![0.0; n];
                    for (g, wi) in gens.iter().zip(w.iter().chain(std::iter::repeat(&0.0))) {
                        for i in 0..n {
                            x[i] += wi * g[i];
                        }
                    }
                    v.push(normalize(&x));
                }
            }
            v
        };
        let points: Vec<Vec<f64>> = match (f.dim, f.vertices.len(), f.rays.len()) {
            (0, _, _) => vec![p.vertex_f64(f.vertices[0])],
            (1, 2, 0) => {
                let (a, b) = (p.vertex_f64(f.vertices[0]), p.vertex_f64(f.vertices[1]));
                let steps = (dist(&a, &b) / spacing).ceil().max(1.0) as usize;
                (0..=steps).map(|k| (0..n).map(|i| a[i] + (b[i] - a[i]) * k as f64 / steps as f64).collect()).collect()
            }
            (1, 1, 1) => {
                let a = p.vertex_f64(f.vertices[0]);
                let r = normalize(&p.ray_f64(f.rays[0]));
                let steps = (window / spacing).ceil() as usize;
                (0..=steps).map(|k| (0..n).map(|i| a[i] + r[i] * window * k as f64 / steps as f64).collect()).collect()
            }
            _ => {
                // 2-faces in R^3: fan-triangulate around the vertex barycenter.
                let c: Vec<f64> = p.vertex_barycenter(f).iter().map(crate::exact::to_f64).collect();
                let mut pts = Vec::new();
                let m = 20;
                for e in p.faces.iter().filter(|g| g.dim == 1 && g.is_subface_of(f) && g.is_bounded()) {
                    let (a, b) = (p.vertex_f64(e.vertices[0]), p.vertex_f64(e.vertices[1]));
                    for i in 0..=m {
                        for j in 0..=(m - i) {
                            let (s, t) = (i as f64 / m as f64, j as f64 / m as f64);
                            pts.push((0..n).map(|k| c[k] + s * (a[k] - c[k]) + t * (b[k] - c[k])).collect());
                        }
                    }
                }
                pts
            }
        };
        for x in &points {
            for nu in &normals {
                out.push(Lift { x: x.clone(), nu: nu.clone() });
            }
        }
    }
    out
}

/// Bisects the radial parameter wherever consecutive normals of the planar
/// curve turn by more than 0.01 rad. Near an acute corner of `P` the rounded
/// tip is too thin for uniform angles to resolve.
fn refine_planar(mut curve: Vec<Lift>, sample: &(dyn Fn(&Vec<f64>) -> Option<Lift> + Sync)) -> Vec<Lift> {
    let angle = |x: &[f64]| x[1].atan2(x[0]);
    for _ in 0..40 {
        let gaps: Vec<usize> = (0..curve.len().saturating_sub(1))
            .filter(|&k| {
                let (a, b) = (&curve[k], &curve[k + 1]);
                dist(&a.x, &b.x) <= 0.5 && dist(&a.nu, &b.nu) > 0.01 && (angle(&b.x) - angle(&a.x)).abs() > 1e-13
            })
            .collect();
        if gaps.is_empty() {
            break;
        }
        let mids: Vec<(usize, Option<Lift>)> = gaps
            .par_iter()
            .map(|&k| {
                let (a, b) = (normalize(&curve[k].x), normalize(&curve[k + 1].x));
                let m = normalize(&[a[0] + b[0], a[1] + b[1]]);
                (k, sample(&m))
            })
            .collect();
        let mut out = Vec::with_capacity(curve.len() + mids.len());
        let mut mids = mids.into_iter().peekable();
        for (k, l) in curve.into_iter().enumerate() {
            out.push(l);
            if mids.peek().is_some_and(|(j, _)| *j == k) {
                if let Some(m) = mids.next().and_then(|(_, m)| m) {
                    out.push(m);
                }
            }
        }
        curve = out;
    }
    curve
}

/// Curve samples sorted by their first coordinate, for nearest-neighbour
/// queries that stop once the coordinate gap exceeds the best distance.
struct SortedCloud<'a> {
    curve: &'a [Lift],
    order: Vec<usize>,
}

impl<'a> SortedCloud<'a> {
    fn new(curve: &'a [Lift]) -> Self {
        let mut order: Vec<usize> = (0..curve.len()).collect();
        order.sort_by(|&a, &b| curve[a].x[0].total_cmp(&curve[b].x[0]));
        Self { curve, order }
    }

    /// `(distance, index)` of the nearest sample under `metric`, which must
    /// dominate the gap in the first coordinate.
    fn nearest(&self, y: &Lift, metric: impl Fn(&Lift) -> f64) -> (f64, usize) {
        let start = self.order.partition_point(|&i| self.curve[i].x[0] < y.x[0]);
        let mut best = (f64::INFINITY, 0);
        let (mut lo, mut hi) = (start, start);
        loop {
            let mut moved = false;
            if hi < self.order.len() && self.curve[self.order[hi]].x[0] - y.x[0] < best.0 {
                let i = self.order[hi];
                let d = metric(&self.curve[i]);
                if d < best.0 {
                    best = (d, i);
                }
                hi += 1;
                moved = true;
            }
            if lo > 0 && y.x[0] - self.curve[self.order[lo - 1]].x[0] < best.0 {
                lo -= 1;
                let i = self.order[lo];
                let d = metric(&self.curve[i]);
                if d < best.0 {
                    best = (d, i);
                }
                moved = true;
            }
            if !moved {
                return best;
            }
        }
    }
}

/// Levenberg–Marquardt over the radial direction: minimizes the distance
/// from `y` to the boundary point in direction `d` (and, with `lift`, between
/// the unit normals too). Every evaluated point lies on the boundary, so the
/// result is an upper bound on the true distance. Stops early once the
/// distance is at most `enough`.
fn polish(y: &Lift, d0: &[f64], lift: bool, enough: f64, sample: &(dyn Fn(&Vec<f64>) -> Option<Lift> + Sync)) -> f64 {
    let residual = |l: &Lift| -> Vec<f64> {
        let mut r: Vec<f64> = l.x.iter().zip(&y.x).map(|(a, b)| a - b).collect();
        if lift {
            r.extend(l.nu.iter().zip(&y.nu).map(|(a, b)| a - b));
        }
        r
    };
    let norm = |r: &[f64]| dot(r, r).sqrt();
    let d0 = normalize(d0);
    let e1 = normalize(&if d0[0].abs() < 0.9 { vec![0.0, -d0[2], d0[1]] } else { vec![-d0[2], 0.0, d0[0]] });
    let e2 = vec![d0[1] * e1[2] - d0[2] * e1[1], d0[2] * e1[0] - d0[0] * e1[2], d0[0] * e1[1] - d0[1] * e1[0]];
    let dir = |a: f64, b: f64| -> Vec<f64> { normalize(&(0..3).map(|i| d0[i] + a * e1[i] + b * e2[i]).collect::<Vec<_>>()) };
    let Some(l0) = sample(&d0) else { return f64::INFINITY };
    let (mut a, mut b) = (0.0, 0.0);
    let mut r = residual(&l0);
    let mut best = norm(&r);
    if best <= enough {
        return best;
    }
    let mut lambda = 1e-3;
    let h = 1e-7;
    for _ in 0..30 {
        let (Some(la), Some(lb)) = (sample(&dir(a + h, b)), sample(&dir(a, b + h))) else { break };
        let ja: Vec<f64> = residual(&la).iter().zip(&r).map(|(p, q)| (p - q) / h).collect();
        let jb: Vec<f64> = residual(&lb).iter().zip(&r).map(|(p, q)| (p - q) / h).collect();
        let (g11, g12, g22) = (dot(&ja, &ja), dot(&ja, &jb), dot(&jb, &jb));
        let (r1, r2) = (dot(&ja, &r), dot(&jb, &r));
        let mut improved = false;
        for _ in 0..12 {
            let (m11, m22) = (g11 * (1.0 + lambda), g22 * (1.0 + lambda));
            let det = m11 * m22 - g12 * g12;
            if det <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let da = -(m22 * r1 - g12 * r2) / det;
            let db = -(m11 * r2 - g12 * r1) / det;
            if let Some(l) = sample(&dir(a + da, b + db)) {
                let rn = residual(&l);
                if norm(&rn) < best {
                    a += da;
                    b += db;
                    best = norm(&rn);
                    r = rn;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved || best < 1e-12 || best <= enough {
            break;
        }
    }
    best
}

/// `sup_y d(y, curve)` over the targets, positions and lifts, for point
/// clouds in 3D. Each target is bounded from above by its nearest cloud
/// sample and by the boundary point radially above it; targets are then
/// polished in decreasing order of that bound until no remaining bound can
/// exceed the largest polished value.
fn reverse_distances(targets: &[Lift], curve: &[Lift], sample: &(dyn Fn(&Vec<f64>) -> Option<Lift> + Sync)) -> (f64, f64) {
    let cloud = SortedCloud::new(curve);
    // (bound, start direction) for positions and for lifts.
    let bounds: Vec<[(f64, Vec<f64>); 2]> = targets
        .par_iter()
        .map(|y| {
            let (dp, ip) = cloud.nearest(y, |c| dist(&c.x, &y.x));
            let (dl, il) = cloud.nearest(y, |c| lift_dist(c, y));
            let mut pos = (dp, curve[ip].x.clone());
            let mut lift = (dl, curve[il].x.clone());
            if let Some(r) = sample(&y.x) {
                if dist(&r.x, &y.x) < pos.0 {
                    pos = (dist(&r.x, &y.x), y.x.clone());
                }
                if lift_dist(&r, y) < lift.0 {
                    lift = (lift_dist(&r, y), y.x.clone());
                }
            }
            [pos, lift]
        })
        .collect();
    let sup = |lift: bool| -> f64 {
        let key = |k: usize| &bounds[k][lift as usize];
        let mut order: Vec<usize> = (0..targets.len()).collect();
        order.sort_by(|&a, &b| key(b).0.total_cmp(&key(a).0));
        let mut best: f64 = 0.0;
        for chunk in order.chunks(64) {
            if key(chunk[0]).0 <= best {
                break;
            }
            let vals: Vec<f64> = chunk
                .par_iter()
                .filter(|&&k| key(k).0 > best)
                .map(|&k| {
                    let (bound, start) = key(k);
                    polish(&targets[k], start, lift, best, sample).min(*bound)
                })
                .collect();
            best = vals.into_iter().fold(best, f64::max);
        }
        best
    };
    (sup(false), sup(true))
}

fn row_for(data: &NewtonData, t: &StarTriangulation, beta: f64) -> Result<ConvergenceRow, LocalizationError> {
    let data = data.with_beta(beta);
    let loc = Localizer::new(&data, t);
    let amoeba = complement_polytope(&data, t).map_err(|_| LocalizationError::NoRoot(vec![]))?;
    let p = &amoeba.poly;
    let vmax = (0..p.vertices.len()).map(|v| dot(&p.vertex_f64(v), &p.vertex_f64(v)).sqrt()).fold(0.0, f64::max);
    let window = 2.0 * (vmax + 1.0);
    let dirs = directions(&loc, p);
    let sample = |d: &Vec<f64>| -> Option<Lift> {
        let r = loc.polytope_radius(d)?;
        if r > 2.0 * window {
            return None;
        }
        let x = loc.boundary_solve(d, Model::Ftilde).ok()?;
        let b = loc.boundary_fn(&x, Model::Ftilde);
        Some(Lift { x, nu: normalize(b.grad.as_slice()) })
    };
    let mut curve: Vec<Lift> = dirs.par_iter().filter_map(sample).collect();
    if p.dim == 2 {
        curve = refine_planar(curve, &sample);
    }
    if curve.is_empty() {
        return Err(LocalizationError::NoRoot(vec![]));
    }

    let facets: Vec<&Face> = p.faces.iter().filter(|f| f.dim + 1 == p.dim).collect();
    let proper: Vec<&Face> = p.proper_faces().map(|(_, f)| f).collect();
    let (sup_x, sup_x_lift) = curve
        .par_iter()
        .map(|c| {
            let dpos = facets.iter().map(|f| dist(&nearest_on_face(p, f, &c.x), &c.x)).fold(f64::INFINITY, f64::min);
            let dlift = proper
                .iter()
                .map(|f| {
                    let q = nearest_on_face(p, f, &c.x);
                    let gens: Vec<Vec<f64>> = f.tight.iter().map(|&i| normalize(&p.constraints[i].normal_f64())).collect();
                    let dn = dist_to_cone_sphere(&gens, &c.nu);
                    let dx = dist(&q, &c.x);
                    (dx * dx + dn * dn).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            (dpos, dlift)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    let spacing = if p.dim == 2 { (0.1 / beta).min(1e-3) } else { 0.05 };
    let targets: Vec<Lift> =
        polytope_lift_samples(p, window, spacing).into_iter().filter(|l| dot(&l.x, &l.x).sqrt() <= window).collect();
    let closed = p.is_bounded();
    let two_d = p.dim == 2;
    // Planar segments as (x, nu) 4-vectors, with the wrap-around jump across a
    // gap in the sampled curve left out.
    let segments: Vec<([f64; 4], [f64; 4])> = if two_d {
        let segs = curve.len() - if closed { 0 } else { 1 };
        (0..segs)
            .map(|k| (&curve[k], &curve[(k + 1) % curve.len()]))
            .filter(|(a, b)| dist(&a.x, &b.x) <= 0.5)
            .map(|(a, b)| ([a.x[0], a.x[1], a.nu[0], a.nu[1]], [b.x[0], b.x[1], b.nu[0], b.nu[1]]))
            .collect()
    } else {
        Vec::new()
    };
    let (sup_y, sup_y_lift) = if two_d {
        targets
            .par_iter()
            .map(|y| {
                let mut dpos = f64::INFINITY;
                let mut dlift = f64::INFINITY;
                let yl = [y.x[0], y.x[1], y.nu[0], y.nu[1]];
                for (a, b) in &segments {
                    // Both distances are at least the distance to the nearer endpoint
                    // minus the segment length.
                    let len = dist(&a[..2], &b[..2]);
                    let lower = dist(&yl[..2], &a[..2]) - len;
                    if lower > dpos && lower > dlift {
                        continue;
                    }
                    dpos = dpos.min(dist_segment(&yl[..2], &a[..2], &b[..2]));
                    dlift = dlift.min(dist_segment(&yl, a, b));
                }
                (dpos, dlift)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    } else {
        reverse_distances(&targets, &curve, &sample)
    };

    let hausdorff = sup_x.max(sup_y);
    let normal_hausdorff = sup_x_lift.max(sup_y_lift);
    Ok(ConvergenceRow {
        beta,
        samples: curve.len(),
        hausdorff,
        normal_hausdorff,
        hausdorff_sqrt_beta: hausdorff * beta.sqrt(),
        normal_sqrt_beta: normal_hausdorff * beta.sqrt(),
    })
}

pub fn convergence_report(
    data: &NewtonData,
    t: &StarTriangulation,
    betas: &[f64],
) -> Result<Vec<ConvergenceRow>, LocalizationError> {
    betas.iter().map(|&b| row_for(data, t, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::polyhedron::Constraint;

    #[test]
    fn nearest_points_on_square() {
        let c = |a: i64, b: i64| Constraint::new(vec![rat(a), rat(b)], rat(1));
        let p = Polyhedron::from_constraints(2, vec![c(1, 0), c(-1, 0), c(0, 1), c(0, -1)]).unwrap();
        let full = p.full();
        for (x, want) in [([3.0, 0.5], [1.0, 0.5]), ([3.0, 3.0], [1.0, 1.0]), ([0.2, 0.1], [0.2, 0.1])] {
            assert!(dist(&nearest_on_face(&p, full, &x), &want) < 1e-12);
        }
    }

    #[test]
    fn cone_sphere_distance() {
        let gens = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let inside = normalize(&[1.0, 1.0]);
        assert!(dist_to_cone_sphere(&gens, &inside) < 1e-12);
        let outside = [-1.0, 0.0];
        assert!((dist_to_cone_sphere(&gens, &outside) - 2f64.sqrt()).abs() < 1e-12);
        let near = normalize(&[1.0, -0.1]);
        let want = dist(&near, &[1.0, 0.0]);
        assert!((dist_to_cone_sphere(&gens, &near) - want).abs() < 1e-12);
    }
}
