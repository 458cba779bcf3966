//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Reference values are recomputed here from first principles (brute-force
//! lower hulls, shoelace volumes, congruence counts on grids, direct sums of
//! the model functions) rather than read back from the library.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tropskel::config::RunConfig;
use tropskel::cutoff;
use tropskel::lattice::{instances, NewtonData};
use tropskel::localization::{closeness_report, convergence_report, Localizer, Model, RegionLabel};
use tropskel::morse::{
    drift_report, find_critical_points, liouville_identities, phase_deviation, sample_positive_locus,
    scan_extraneous_critical, ScanGrid,
};
use tropskel::pipeline::{run, Subcommand};
use tropskel::potential::{
    build_adapted_potential, check_adapted, dual_adaptedness_check, legendre_dual_eval, legendre_inverse,
    GaugePotential, Potential,
};
use tropskel::skeleton::{compare_complexes, rstz_complex};
use tropskel::snf::subtorus;
use tropskel::triangulation::build_coherent_triangulation;
use tropskel::tropical::complement_polytope;
use tropskel::verify;

// ---------------------------------------------------------------------------
// Oracles

/// Maximal simplices of the lower hull of `(a, h(a))`, by testing every
/// `(n+1)`-subset: the affine function through the lifted subset must lie
/// strictly below every other lifted point.
fn lower_hull_simplices(points: &[Vec<i64>], heights: &[f64]) -> Vec<Vec<usize>> {
    let n = points[0].len();
    let m = points.len();
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..=n).collect();
    loop {
        // Solve for (a, c) with <a, p_i> + c = h_i on the subset.
        let mat = nalgebra::DMatrix::from_fn(n + 1, n + 1, |r, c| if c < n { points[subset[r]][c] as f64 } else { 1.0 });
        let rhs = DVector::from_iterator(n + 1, subset.iter().map(|&i| heights[i]));
        if mat.determinant().abs() > 1e-9 {
            let sol = mat.lu().solve(&rhs).unwrap();
            let below = (0..m).filter(|i| !subset.contains(i)).all(|i| {
                let v: f64 = (0..n).map(|k| sol[k] * points[i][k] as f64).sum::<f64>() + sol[n];
                heights[i] > v + 1e-9
            });
            if below {
                out.push(subset.clone());
            }
        }
        // Next combination.
        let mut k = n + 1;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if subset[k] < m - (n + 1 - k) {
                subset[k] += 1;
                for j in k + 1..=n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Faces of the maximal simplices that avoid the origin, grouped by dimension.
fn boundary_faces(maximal: &[Vec<usize>], origin: usize) -> BTreeMap<usize, Vec<Vec<usize>>> {
    let mut faces: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for s in maximal {
        let rest: Vec<usize> = s.iter().copied().filter(|&i| i != origin).collect();
        for mask in 1u32..(1 << rest.len()) {
            let f: Vec<usize> = (0..rest.len()).filter(|i| mask & (1 << i) != 0).map(|i| rest[i]).collect();
            let e = faces.entry(f.len() - 1).or_default();
            if !e.contains(&f) {
                e.push(f);
            }
        }
    }
    faces
}

/// Edge neighbours in the triangulation.
fn adjacency(maximal: &[Vec<usize>], m: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    for s in maximal {
        for &a in s {
            for &b in s {
                if a != b && !adj[a].contains(&b) {
                    adj[a].push(b);
                }
            }
        }
    }
    adj
}

fn shoelace(points: &[Vec<i64>]) -> f64 {
    // Convex hull by angle about the centroid (the instances here are convex
    // position or have one interior point, which is dropped).
    let c: Vec<f64> = (0..2).map(|k| points.iter().map(|p| p[k] as f64).sum::<f64>() / points.len() as f64).collect();
    let mut hull: Vec<&Vec<i64>> = points
        .iter()
        .filter(|p| {
            // Drop points strictly inside the triangle of the others.
            let q: Vec<&Vec<i64>> = points.iter().filter(|r| r != p).collect();
            !(q.len() == 3 && inside_triangle(p, q[0], q[1], q[2]))
        })
        .collect();
    hull.sort_by(|a, b| {
        let ta = (a[1] as f64 - c[1]).atan2(a[0] as f64 - c[0]);
        let tb = (b[1] as f64 - c[1]).atan2(b[0] as f64 - c[0]);
        ta.total_cmp(&tb)
    });
    let mut area = 0.0;
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        area += (p[0] * q[1] - p[1] * q[0]) as f64;
    }
    area.abs() / 2.0
}

fn inside_triangle(p: &[i64], a: &[i64], b: &[i64], c: &[i64]) -> bool {
    let cross = |o: &[i64], u: &[i64], v: &[i64]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    (d1 > 0 && d2 > 0 && d3 > 0) || (d1 < 0 && d2 < 0 && d3 < 0)
}

/// Vertices of `{u : <u, α> <= h(α)}` in the plane, by intersecting pairs of
/// lines, in counterclockwise order.
fn polygon(points: &[Vec<i64>], heights: &[f64], origin: usize) -> Vec<[f64; 2]> {
    let rows: Vec<([f64; 2], f64)> = points
        .iter()
        .zip(heights)
        .enumerate()
        .filter(|(i, _)| *i != origin)
        .map(|(_, (p, &h))| ([p[0] as f64, p[1] as f64], h))
        .collect();
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (rows[i].0, rows[j].0);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(rows[i].1 * b[1] - rows[j].1 * a[1]) / det, (a[0] * rows[j].1 - b[0] * rows[i].1) / det];
            if rows.iter().all(|(n, h)| n[0] * x[0] + n[1] * x[1] <= h + 1e-9) && !verts.iter().any(|v| (v[0] - x[0]).abs() + (v[1] - x[1]).abs() < 1e-9) {
                verts.push(x);
            }
        }
    }
    verts.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    verts
}

fn dist_to_segment(q: &[f64], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    ((q[0] - a[0] - t * d[0]).powi(2) + (q[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

/// The cutoff profile, written out from its definition.
fn chi(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else if x <= -2.0 {
        0.0
    } else {
        (-1.0 / (x + 2.0) + 0.5 - x / 4.0 + x * x / 8.0).exp()
    }
}

/// Components of `{θ : <m_i, θ> ≡ phases_i mod 2π}` by enumerating the grid
/// `(2π/K) Z^n` and grouping solutions whose difference lies on the identity
/// component (the real span of the integer kernel).
fn brute_force_components(m: &[Vec<i64>], phases: &[f64], n: usize, k: i64) -> usize {
    let solves = |j: &[i64]| {
        m.iter().zip(phases).all(|(row, &ph)| {
            let v: f64 = row.iter().zip(j).map(|(a, x)| (a * x) as f64).sum::<f64>() * TAU / k as f64 - ph;
            let r = v / TAU;
            (r - r.round()).abs() < 1e-9
        })
    };
    // j/K lies in ker_R(M) + Z^n iff M j = K M z for some integer z.
    let box_r = k;
    let in_identity = |j: &[i64]| {
        let target: Vec<i64> = m.iter().map(|row| row.iter().zip(j).map(|(a, x)| a * x).sum()).collect();
        let mut z = vec![-box_r; n];
        loop {
            let mz: Vec<i64> = m.iter().map(|row| row.iter().zip(&z).map(|(a, x)| a * x).sum::<i64>() * k).collect();
            if mz == target {
                return true;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return false;
                }
                z[i] += 1;
                if z[i] <= box_r {
                    break;
                }
                z[i] = -box_r;
                i += 1;
            }
        }
    };
    let mut grid = vec![0i64; n];
    let (mut solutions, mut identity) = (0usize, 0usize);
    loop {
        if solves(&grid) {
            solutions += 1;
        }
        if m.iter().all(|row| row.iter().zip(&grid).map(|(a, x)| a * x).sum::<i64>() % k == 0) && in_identity(&grid) {
            identity += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return solutions / identity;
            }
            grid[i] += 1;
            if grid[i] < k {
                break;
            }
            grid[i] = 0;
            i += 1;
        }
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 { max / min } else { f64::INFINITY }
}

fn config(vertices: &str, heights: &str, potential: &str) -> RunConfig {
    RunConfig::from_toml_str(&format!(
        "schema_version = 1\nseed = 7\n[instance]\nvertices = {vertices}\nheights = {heights}\nbeta = 100.0\n[potential]\n{potential}\n[outputs]\nplots = false\n"
    ))
    .expect("valid config")
}

fn e1_config() -> RunConfig {
    config("[[0, 0], [1, 0], [0, 1]]", "[0, 1, 1]", "mode = \"gauge\"")
}

fn e2_config() -> RunConfig {
    config("[[0, 0], [1, 0], [0, 1], [-1, -1]]", "[0, 1, 1, 1]", "mode = \"gauge\"")
}

fn int_points(d: &NewtonData) -> Vec<Vec<i64>> {
    d.points.iter().map(|p| p.0.clone()).collect()
}

fn f_heights(d: &NewtonData) -> Vec<f64> {
    d.heights.iter().map(tropskel::exact::to_f64).collect()
}

fn gauge(d: &NewtonData) -> GaugePotential {
    let t = build_coherent_triangulation(d).unwrap();
    let am = complement_polytope(d, &t).unwrap();
    build_adapted_potential(&am.poly, 0.1, 8, 0.05).unwrap()
}

// ---------------------------------------------------------------------------
// Criteria

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

/// Skeleton run on a planar instance checked against the combinatorial
/// prediction: critical indices from the boundary f-vector, cells from the
/// congruence counts, χ from the volume.
fn planar_skeleton(cfg: &RunConfig, budget_secs: f64) -> Outcome {
    let start = Instant::now();
    let report = run(Subcommand::Skeleton, cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let data = cfg.newton_data().unwrap();
    let pts = int_points(&data);
    let o = data.origin();
    let maximal = lower_hull_simplices(&pts, &f_heights(&data));
    let faces = boundary_faces(&maximal, o);
    let mut want_indices: Vec<usize> = faces.iter().flat_map(|(&d, v)| std::iter::repeat(d).take(v.len())).collect();
    want_indices.sort_unstable();

    let crits = report.critical.as_ref().ok_or("no critical points")?;
    let mut got_indices: Vec<usize> = crits.iter().map(|c| c.morse_index).collect();
    got_indices.sort_unstable();
    ensure(got_indices == want_indices, format!("indices {got_indices:?}, expected {want_indices:?}"))?;

    // Expected cells: components of T_τ for every boundary simplex.
    let mut want_shapes: BTreeMap<String, usize> = BTreeMap::new();
    for (&dim, list) in &faces {
        for f in list {
            let m: Vec<Vec<i64>> = f.iter().map(|&i| pts[i].clone()).collect();
            let ph: Vec<f64> = f.iter().map(|&i| data.phases[i]).collect();
            let det = if m.len() == 2 { (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() } else { 1 };
            let comps = brute_force_components(&m, &ph, 2, 2 * det.max(1));
            let shape = if dim == 0 { "circle" } else { "interval" };
            *want_shapes.entry(shape.to_string()).or_default() += comps;
        }
    }
    let sk = report.skeleton.as_ref().ok_or("no skeleton")?;
    let mut got_shapes: BTreeMap<String, usize> = BTreeMap::new();
    for c in &sk.liouville.cells {
        *got_shapes.entry(c.shape.clone()).or_default() += 1;
    }
    ensure(got_shapes == want_shapes, format!("cells {got_shapes:?}, expected {want_shapes:?}"))?;

    let want_chi = -(2.0 * shoelace(&pts)).round() as i64;
    ensure(sk.liouville.euler == want_chi, format!("chi {} expected {want_chi}", sk.liouville.euler))?;
    let t = build_coherent_triangulation(&data).unwrap();
    let rstz = rstz_complex(&data, &t);
    let cmp = compare_complexes(&sk.liouville, &rstz);
    ensure(cmp.isomorphic, format!("not isomorphic to the combinatorial complex: {:?}", cmp.mismatch))?;
    ensure(report.pass, format!("stage checks failed: {:?}", report.failures().map(|r| &r.name).collect::<Vec<_>>()))?;
    ensure(elapsed < budget_secs, format!("runtime {elapsed:.1}s exceeds {budget_secs}s"))?;
    Ok(format!("indices {got_indices:?}, cells {got_shapes:?}, chi {want_chi}, {elapsed:.2}s"))
}

fn criterion_1() -> Outcome {
    planar_skeleton(&e1_config(), 10.0)
}

fn criterion_2() -> Outcome {
    planar_skeleton(&e2_config(), 30.0)
}

fn criterion_3() -> Outcome {
    let quad = GaugePotential::identity(2);
    let e2 = instances::mirror_p2(100.0);
    let t2 = build_coherent_triangulation(&e2).unwrap();
    let p2 = complement_polytope(&e2, &t2).unwrap().poly;
    let r2 = check_adapted(&quad, &p2);
    ensure(r2.pass, "|u|^2 fails on the mirror of P^2")?;

    let e3 = instances::skew_triangle(100.0);
    let pts = int_points(&e3);
    let verts = polygon(&pts, &f_heights(&e3), e3.origin());
    // Top edge: the two vertices of largest second coordinate.
    let ymax = verts.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<[f64; 2]> = verts.iter().copied().filter(|v| (v[1] - ymax).abs() < 1e-9).collect();
    ensure(top.len() == 2, format!("no horizontal top edge in {verts:?}"))?;
    // Minimizer of |u|^2 on the segment: clamp the foot of the perpendicular.
    let (a, b) = (top[0], top[1]);
    let d = [b[0] - a[0], b[1] - a[1]];
    let s = (-(a[0] * d[0] + a[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    ensure(s == 0.0 || s == 1.0, "oracle minimizer is interior")?;
    let want = [a[0] + s * d[0], a[1] + s * d[1]];

    let t3 = build_coherent_triangulation(&e3).unwrap();
    let p3 = complement_polytope(&e3, &t3).unwrap().poly;
    let r3 = check_adapted(&quad, &p3);
    ensure(!r3.pass, "|u|^2 passes on the skew triangle")?;
    let failing: Vec<_> = r3.faces.iter().filter(|f| !f.pass).collect();
    ensure(failing.len() == 1, format!("{} failing faces", failing.len()))?;
    let f = failing[0];
    let on_top = |x: &[f64]| (x[1] - ymax).abs() < 1e-9;
    let face_verts: Vec<Vec<f64>> = p3.faces[f.face].vertices.iter().map(|&v| p3.vertex_f64(v)).collect();
    ensure(face_verts.len() == 2 && face_verts.iter().all(|v| on_top(v)), format!("failure on {}", f.label))?;
    let err = ((f.minimizer[0] - want[0]).powi(2) + (f.minimizer[1] - want[1]).powi(2)).sqrt();
    ensure(err < 1e-9, format!("minimizer {:?}, expected endpoint {want:?}", f.minimizer))?;

    let adapted = build_adapted_potential(&p3, 0.1, 8, 0.05).map_err(|e| e.to_string())?;
    let r = check_adapted(&adapted, &p3);
    let margin = r.faces.iter().map(|f| f.margin).fold(f64::INFINITY, f64::min);
    ensure(r.pass && margin > 0.0, format!("built potential margin {margin}"))?;
    Ok(format!("failure on {} at {:?}; built potential margin {margin:.3}", f.label, f.minimizer))
}

fn criterion_4() -> Outcome {
    let n = 10_000;
    let (lo, hi) = (-3.0, 1.0);
    let h = (hi - lo) / (n - 1) as f64;
    let g = |x: f64| x.exp() * chi(x);
    let worst = (1..n - 1)
        .map(|i| {
            let x = lo + i as f64 * h;
            g(x + h) - 2.0 * g(x) + g(x - h)
        })
        .fold(f64::INFINITY, f64::min);
    ensure(worst >= -1e-9, format!("second difference {worst:e}"))?;
    let agree = (0..n).map(|i| lo + i as f64 * h).all(|x| (cutoff::chi(x) - chi(x)).abs() < 1e-15);
    ensure(agree, "library profile differs from its definition")?;
    // Richardson-extrapolated second derivative at -1, against the library's
    // analytic ratio and its degree-6 polynomial (which carries a factor
    // 16 (x+2)^4).
    let d2 = |h: f64| (g(-1.0 + h) - 2.0 * g(-1.0) + g(-1.0 - h)) / (h * h);
    let ratio = ((16.0 * d2(1e-3) - d2(2e-3)) / 15.0) / g(-1.0);
    let lib = cutoff::exp_chi_ratio(-1.0);
    ensure((ratio - lib).abs() < 1e-6, format!("finite differences {ratio}, library {lib}"))?;
    let poly = cutoff::convexity_polynomial(-1.0);
    ensure((poly - 16.0 * lib).abs() < 1e-9, format!("polynomial {poly} vs 16 x ratio {}", 16.0 * lib))?;
    ensure(
        (ratio - 8.0).abs() < 1e-6,
        format!("ratio at -1 is {ratio:.9} (polynomial value {poly}); convexity holds, min second difference {worst:.3e}"),
    )?;
    Ok(format!("min second difference {worst:.3e}, ratio {ratio:.9}"))
}

/// `sup |F̂ − (F̃+1)| e^{√β}` and `min (F̂ − F̃ − 1)` from direct sums, on
/// points marching inward from each edge of `P` through the cutoff collar.
fn model_gap(d: &NewtonData, beta: f64) -> (f64, f64) {
    let pts = int_points(d);
    let hs = f_heights(d);
    let o = d.origin();
    let maximal = lower_hull_simplices(&pts, &hs);
    let adj = adjacency(&maximal, pts.len());
    let sb = beta.sqrt();
    let l = |a: usize, u: &[f64; 2]| pts[a][0] as f64 * u[0] + pts[a][1] as f64 * u[1] - hs[a];
    let fhat = |u: &[f64; 2]| adj[o].iter().map(|&a| (beta * l(a, u)).exp() * chi(beta * l(a, u) + sb)).sum::<f64>();
    let ftilde1 = |u: &[f64; 2]| {
        (0..pts.len())
            .filter(|&a| a != o)
            .map(|a| {
                let c: f64 = adj[a].iter().map(|&b| chi(beta * (l(a, u) - l(b, u)) + sb)).product();
                (beta * l(a, u)).exp() * c
            })
            .sum::<f64>()
    };
    // Every gap term needs two cutoffs switching at once, which happens only
    // within a few collar widths of a vertex of P.
    let depth = (sb + 6.0) / beta;
    let (mut sup, mut min) = (0.0f64, f64::INFINITY);
    for v in polygon(&pts, &hs, o) {
        let r = 4.0 * depth;
        for i in 0..=400 {
            for j in 0..=400 {
                let u = [v[0] - r + 2.0 * r * i as f64 / 400.0, v[1] - r + 2.0 * r * j as f64 / 400.0];
                if (0..pts.len()).any(|a| a != o && l(a, &u) > 0.0) {
                    continue;
                }
                let gap = fhat(&u) - ftilde1(&u);
                sup = sup.max(gap.abs());
                min = min.min(gap);
            }
        }
    }
    (sup * sb.exp(), min)
}

fn criterion_5() -> Outcome {
    let betas = [25.0, 100.0, 400.0];
    let mut lines = Vec::new();
    for (name, make) in [("E1", instances::pair_of_pants as fn(f64) -> NewtonData), ("E2", instances::mirror_p2)] {
        let mut lib_c = Vec::new();
        let mut oracle_c = Vec::new();
        for &b in &betas {
            let d = make(b);
            let t = build_coherent_triangulation(&d).unwrap();
            let p = complement_polytope(&d, &t).unwrap().poly;
            let r = closeness_report(&Localizer::new(&d, &t), &p, 7, 400);
            ensure(r.min_signed_gap >= 0.0, format!("{name}: F^ < F~+1 by {:e} at beta {b}", r.min_signed_gap))?;
            lib_c.push(r.c0);
            let (c, min) = model_gap(&d, b);
            ensure(min >= -1e-12, format!("{name}: direct sums give F^ - F~ - 1 = {min:e} at beta {b}"))?;
            oracle_c.push(c);
        }
        ensure(spread(&lib_c) < 10.0, format!("{name}: fitted c {lib_c:?}"))?;
        ensure(spread(&oracle_c) < 10.0, format!("{name}: direct fitted c {oracle_c:?}"))?;
        lines.push(format!("{name} c {:.4}..{:.4}", lib_c.iter().copied().fold(f64::INFINITY, f64::min), lib_c.iter().copied().fold(0.0, f64::max)));
    }
    Ok(lines.join("; "))
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    for (name, d) in [("E1", instances::pair_of_pants(100.0)), ("E2", instances::mirror_p2(100.0)), ("E3", instances::skew_triangle(100.0))] {
        let t = build_coherent_triangulation(&d).unwrap();
        let rows = convergence_report(&d, &t, &[25.0, 100.0, 400.0]).map_err(|e| e.to_string())?;
        let h: Vec<f64> = rows.iter().map(|r| r.hausdorff_sqrt_beta).collect();
        let nh: Vec<f64> = rows.iter().map(|r| r.normal_sqrt_beta).collect();
        ensure(rows.windows(2).all(|w| w[1].hausdorff < w[0].hausdorff), format!("{name}: d_H not decreasing"))?;
        ensure(rows.windows(2).all(|w| w[1].normal_hausdorff < w[0].normal_hausdorff), format!("{name}: lift distance not decreasing"))?;
        ensure(spread(&h) <= 9.0, format!("{name}: d_H sqrt(beta) {h:?}"))?;
        ensure(spread(&nh) <= 9.0, format!("{name}: lift distance sqrt(beta) {nh:?}"))?;
        // The one-sided distance from boundary samples to the polygon never
        // exceeds the reported Hausdorff distance.
        if name == "E2" {
            for r in &rows {
                let db = d.with_beta(r.beta);
                let loc = Localizer::new(&db, &t);
                let verts = polygon(&int_points(&db), &f_heights(&db), db.origin());
                let worst = (0..720)
                    .filter_map(|k| {
                        let a = TAU * k as f64 / 720.0;
                        loc.boundary_solve(&[a.cos(), a.sin()], Model::Ftilde).ok()
                    })
                    .map(|x| (0..verts.len()).map(|i| dist_to_segment(&x, &verts[i], &verts[(i + 1) % verts.len()])).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                ensure(worst <= r.hausdorff + 1e-12, format!("E2: direct one-sided distance {worst} above d_H {}", r.hausdorff))?;
            }
        }
        lines.push(format!("{name} spread {:.2}/{:.2}", spread(&h), spread(&nh)));
    }
    Ok(lines.join("; "))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    for (name, d) in [("E1", instances::pair_of_pants(100.0)), ("E2", instances::mirror_p2(100.0))] {
        let t = build_coherent_triangulation(&d).unwrap();
        let am = complement_polytope(&d, &t).unwrap();
        let phi = gauge(&d);
        let rows = drift_report(&d, &t, &am, &phi, Model::Fhat, &[25.0, 100.0, 400.0]).map_err(|e| e.to_string())?;
        let drift: Vec<f64> = rows.iter().map(|r| r.max_drift).collect();
        ensure(drift.windows(2).all(|w| w[1] < w[0]), format!("{name}: drift {drift:?}"))?;
        let scaled: Vec<f64> = rows.iter().map(|r| r.drift_sqrt_beta).collect();
        ensure(spread(&scaled) <= 9.0, format!("{name}: drift sqrt(beta) {scaled:?}"))?;

        // Limits: minimizers of φ on the edges of P and the vertices of P.
        let crits = find_critical_points(&Localizer::new(&d, &t), &am, &phi, Model::Fhat).map_err(|e| e.to_string())?;
        let verts = polygon(&int_points(&d), &f_heights(&d), d.origin());
        for c in &crits {
            let want: Vec<f64> = if c.morse_index == 1 {
                verts.iter().map(|v| v.to_vec()).min_by(|a, b| dist2(a, &c.pl_limit).total_cmp(&dist2(b, &c.pl_limit))).unwrap()
            } else {
                // The edge {<u, α> = h(α)} of the vertex α, clipped to a window
                // when unbounded, minimized by golden-section search.
                let a = c.vertices[0].as_f64();
                let hv = f_heights(&d)[d.points.iter().position(|p| p.as_f64() == a).unwrap()];
                let on_edge: Vec<[f64; 2]> = verts.iter().copied().filter(|v| (a[0] * v[0] + a[1] * v[1] - hv).abs() < 1e-9).collect();
                let dir = [-a[1], a[0]];
                let foot = [a[0] * hv / (a[0] * a[0] + a[1] * a[1]), a[1] * hv / (a[0] * a[0] + a[1] * a[1])];
                let param = |v: &[f64; 2]| (v[0] - foot[0]) * dir[0] + (v[1] - foot[1]) * dir[1];
                let inside = |s: f64| {
                    let x = [foot[0] + s * dir[0], foot[1] + s * dir[1]];
                    (0..d.points.len()).filter(|&i| i != d.origin()).all(|i| {
                        let p = d.points[i].as_f64();
                        p[0] * x[0] + p[1] * x[1] <= f_heights(&d)[i] + 1e-12
                    })
                };
                let (mut lo, mut hi) = match on_edge.len() {
                    2 => {
                        let (s0, s1) = (param(&on_edge[0]), param(&on_edge[1]));
                        (s0.min(s1), s0.max(s1))
                    }
                    _ => {
                        let s0 = param(&on_edge[0]);
                        if inside(s0 + 1.0) { (s0, s0 + 50.0) } else { (s0 - 50.0, s0) }
                    }
                };
                let f = |s: f64| phi.value(&[foot[0] + s * dir[0], foot[1] + s * dir[1]]);
                let gr = (5f64.sqrt() - 1.0) / 2.0;
                for _ in 0..200 {
                    let (m1, m2) = (hi - gr * (hi - lo), lo + gr * (hi - lo));
                    if f(m1) < f(m2) { hi = m2 } else { lo = m1 }
                }
                let s = (lo + hi) / 2.0;
                vec![foot[0] + s * dir[0], foot[1] + s * dir[1]]
            };
            let err = dist2(&want, &c.pl_limit).sqrt();
            ensure(err < 1e-6, format!("{name}: limit of {} is {:?}, expected {want:?}", c.simplex, c.pl_limit))?;
        }
        lines.push(format!("{name} drift {:.2e} -> {:.2e}", drift[0], drift[drift.len() - 1]));
    }
    Ok(lines.join("; "))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    for (name, d) in [("E1", instances::pair_of_pants(100.0)), ("E2", instances::mirror_p2(100.0))] {
        let t = build_coherent_triangulation(&d).unwrap();
        let loc = Localizer::new(&d, &t);
        let phi = gauge(&d);
        let r = liouville_identities(&loc, &phi, 100, 11).map_err(|e| e.to_string())?;
        ensure(r.samples >= 100, format!("{name}: {} samples", r.samples))?;
        ensure(r.max_theta_component < 1e-6, format!("{name}: theta component {:e}", r.max_theta_component))?;
        ensure(r.min_c1 > 0.0 && r.min_pairing > 0.0, format!("{name}: c1 {:e}, pairing {:e}", r.min_c1, r.min_pairing))?;
        // The samples are good-region points of the positive locus on H~.
        for z in sample_positive_locus(&loc, 100, 11) {
            ensure(matches!(loc.classify_region(&z.u), Ok(RegionLabel::Good(_))), format!("{name}: sample outside the good region"))?;
            ensure(phase_deviation(&loc, &z) < 1e-9, format!("{name}: sample off the positive locus"))?;
            ensure(loc.eval_fs(&z, 1.0).norm() < 1e-8, format!("{name}: sample off the hypersurface"))?;
        }
        lines.push(format!("{name} {} samples, max theta {:.1e}", r.samples, r.max_theta_component));
    }
    Ok(lines.join("; "))
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    for (name, d) in [("E1", instances::pair_of_pants(100.0)), ("E2", instances::mirror_p2(100.0))] {
        let t = build_coherent_triangulation(&d).unwrap();
        let loc = Localizer::new(&d, &t);
        let row = verify::symplecticity(&loc, 100, 5);
        ensure(row.pass, format!("{name}: {}", row.detail))?;
        lines.push(format!("{name} max ratio {:.2e}", row.measured));
    }
    Ok(lines.join("; "))
}

fn criterion_10() -> Outcome {
    let cases = [("E2", instances::mirror_p2(100.0)), ("E3", instances::skew_triangle(100.0)), ("P3", instances::mirror_p3(100.0))];
    let mut lines = Vec::new();
    for (name, d) in cases {
        let t = build_coherent_triangulation(&d).unwrap();
        let p = complement_polytope(&d, &t).unwrap().poly;
        ensure(p.is_bounded(), format!("{name}: P unbounded"))?;
        let phi = gauge(&d);
        let n = d.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut roundtrip, mut dual) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let g = phi.grad(&x);
            let back = legendre_inverse(&phi, g.as_slice()).map_err(|e| e.to_string())?;
            roundtrip = roundtrip.max((back - DVector::from_column_slice(&x)).norm() / (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()));
            // Euler's identity for a 2-homogeneous φ: φ*(dφ(x)) = <x, dφ(x)> − φ(x) = φ(x).
            let psi = legendre_dual_eval(&phi, g.as_slice()).map_err(|e| e.to_string())?;
            dual = dual.max((psi - phi.value(&x)).abs() / (1.0 + phi.value(&x)));
        }
        ensure(roundtrip < 1e-8, format!("{name}: roundtrip {roundtrip:e}"))?;
        ensure(dual < 1e-6, format!("{name}: dual value {dual:e}"))?;
        let suite = verify::legendre_suite(&phi, &p, 7);
        ensure(suite.pass, format!("{name}: {}", suite.detail))?;
        if n == 2 {
            // Winding of dφ/|dφ| around the circle, accumulated here.
            let mut total = 0.0;
            let ang = |k: usize| {
                let t = TAU * k as f64 / 4000.0;
                let g = phi.grad(&[t.cos(), t.sin()]);
                g[1].atan2(g[0])
            };
            for k in 0..4000 {
                let mut dlt = ang(k + 1) - ang(k);
                if dlt > PI { dlt -= TAU }
                if dlt < -PI { dlt += TAU }
                total += dlt;
            }
            ensure((total / TAU - 1.0).abs() < 1e-9, format!("{name}: winding {}", total / TAU))?;
        }
        // Verdicts agree for an adapted and, where it fails, a non-adapted potential.
        let quad = GaugePotential::identity(n);
        for (label, pot) in [("gauge", &phi as &dyn Potential), ("quadratic", &quad as &dyn Potential)] {
            let primal = check_adapted(pot, &p).pass;
            let (_, dr) = dual_adaptedness_check(pot, &p).map_err(|e| e.to_string())?;
            ensure(primal == dr.pass, format!("{name}: {label} primal {primal}, dual {}", dr.pass))?;
        }
        lines.push(format!("{name} roundtrip {roundtrip:.1e}"));
    }
    Ok(lines.join("; "))
}

fn criterion_11() -> Outcome {
    let cases: Vec<(Vec<Vec<i64>>, Vec<f64>, usize)> = vec![
        (vec![vec![1, 1], vec![1, -1]], vec![0.0, 0.0], 2),
        (vec![vec![1, 0], vec![0, 1]], vec![0.0, PI], 2),
        (vec![vec![2, 1], vec![1, 3]], vec![PI, 0.0], 2),
        (vec![vec![2, 0]], vec![PI], 2),
        (vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]], vec![0.0, 0.0, PI], 3),
    ];
    let mut counts = Vec::new();
    for (m, ph, n) in &cases {
        let det = if m.len() == *n {
            nalgebra::DMatrix::from_fn(*n, *n, |i, j| m[i][j] as f64).determinant().round().abs() as i64
        } else {
            // Gcd of the row entries for a single row.
            m[0].iter().fold(0i64, |g, &x| num_gcd(g, x.abs()))
        };
        let want = brute_force_components(m, ph, *n, 2 * det);
        let s = subtorus(format!("{m:?}"), m, ph, *n);
        ensure(s.components == want, format!("{m:?}: SNF {} vs grid {want}", s.components))?;
        // Each representative solves the congruences and they are pairwise distinct components.
        let mut seen = Vec::new();
        for r in &s.representatives {
            let c = s.component_of(r).ok_or(format!("{m:?}: representative off the torus"))?;
            ensure(!seen.contains(&c), format!("{m:?}: repeated component"))?;
            seen.push(c);
        }
        counts.push(want);
    }
    ensure(counts[0] == 2, "the {(1,1),(1,-1)} case does not have 2 components")?;
    Ok(format!("components {counts:?}"))
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { num_gcd(b, a % b) }
}

fn criterion_12() -> Outcome {
    let mut lines = Vec::new();
    for (name, d) in [("E1", instances::pair_of_pants(100.0)), ("E2", instances::mirror_p2(100.0))] {
        let t = build_coherent_triangulation(&d).unwrap();
        let loc = Localizer::new(&d, &t);
        let phi = gauge(&d);
        let r = scan_extraneous_critical(&loc, &phi, &ScanGrid::default());
        ensure(r.off_locus > 0, format!("{name}: no off-locus points"))?;
        ensure(r.pass && r.min_norm > r.floor_tol, format!("{name}: floor {:e}", r.min_norm))?;
        lines.push(format!("{name} floor {:.3} over {} points", r.min_norm, r.off_locus));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("pair of pants skeleton", criterion_1),
        ("mirror of P^2 skeleton", criterion_2),
        ("adaptedness discrimination", criterion_3),
        ("cutoff certificate", criterion_4),
        ("localization bounds", criterion_5),
        ("convergence rates", criterion_6),
        ("critical point drift", criterion_7),
        ("Liouville identities", criterion_8),
        ("symplecticity margin", criterion_9),
        ("Legendre suite", criterion_10),
        ("subtorus arithmetic", criterion_11),
        ("extraneous critical scan", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
