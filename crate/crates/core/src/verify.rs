//! The invariant suite behind `tropskel verify`. Every check returns a
//! [`CheckRow`] with its measured value.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cutoff;
use crate::lattice::NewtonData;
use crate::localization::{closeness_report, convergence_report, LogPoint, Localizer, Model, RegionLabel};
use crate::morse::{drift_report, CriticalDatum, FlowTrajectory};
use crate::polyhedron::Polyhedron;
use crate::potential::{
    check_adapted, dual_adaptedness_check, gradient_ray_residual, legendre_dual_eval, legendre_forward,
    legendre_inverse, projective_winding, LegendreDual, Potential,
};
use crate::report::CheckRow;
use crate::triangulation::StarTriangulation;
use crate::tropical::AmoebaPolytope;

/// `max / min` of positive values; a spread of at most 9 means every value
/// lies within a factor 3 of one constant.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn cutoff_certificate() -> CheckRow {
    let n = 10_000;
    let (a, b) = (-3.0, 1.0);
    let h = (b - a) / (n - 1) as f64;
    let g = |x: f64| x.exp() * cutoff::chi(x);
    let worst = (1..n - 1)
        .map(|i| {
            let x = a + i as f64 * h;
            g(x + h) - 2.0 * g(x) + g(x - h)
        })
        .fold(f64::INFINITY, f64::min);
    let poly = cutoff::convexity_polynomial(-1.0);
    let pass = worst >= -1e-9 && (poly - 8.0).abs() < 1e-6;
    CheckRow::new(
        "cutoff_certificate",
        pass,
        poly,
        "second differences >= -1e-9; polynomial(-1) = 8 within 1e-6",
        format!("min second difference {worst:e}; ratio (e^x chi)''/(e^x chi) at -1 = {}", cutoff::exp_chi_ratio(-1.0)),
    )
}

pub fn localization_bounds(data: &NewtonData, t: &StarTriangulation, p: &Polyhedron, betas: &[f64], samples: usize, seed: u64) -> CheckRow {
    let rows: Vec<_> = betas
        .iter()
        .map(|&b| {
            let d = data.with_beta(b);
            closeness_report(&Localizer::new(&d, t), p, seed, samples)
        })
        .collect();
    let cs: Vec<f64> = rows.iter().map(|r| r.c0).collect();
    let min_signed = rows.iter().map(|r| r.min_signed_gap).fold(f64::INFINITY, f64::min);
    let s = spread(&cs);
    let pass = s < 10.0 && min_signed >= 0.0;
    CheckRow::new(
        "localization_bounds",
        pass,
        s,
        "spread of sup|F^ - (F~+1)| e^{sqrt beta} < 10; F^ >= F~+1",
        format!("c per beta {cs:?}; min(F^ - F~ - 1) = {min_signed:e}"),
    )
}

pub fn convergence_rates(data: &NewtonData, t: &StarTriangulation, betas: &[f64]) -> CheckRow {
    match convergence_report(data, t, betas) {
        Ok(rows) => {
            let h: Vec<f64> = rows.iter().map(|r| r.hausdorff_sqrt_beta).collect();
            let nh: Vec<f64> = rows.iter().map(|r| r.normal_sqrt_beta).collect();
            let s = spread(&h).max(spread(&nh));
            let decreasing = rows.windows(2).all(|w| w[1].hausdorff < w[0].hausdorff && w[1].normal_hausdorff < w[0].normal_hausdorff);
            CheckRow::new(
                "convergence_rates",
                decreasing && s <= 9.0,
                s,
                "distances decreasing in beta; d_H sqrt(beta) and normal distance sqrt(beta) each within a factor 3 of a constant",
                format!("d_H sqrt(beta) {h:?}; normal {nh:?}; decreasing {decreasing}"),
            )
        }
        Err(e) => CheckRow::new("convergence_rates", false, f64::NAN, "report computed", e.to_string()),
    }
}

pub fn critical_drift(
    data: &NewtonData,
    t: &StarTriangulation,
    amoeba: &AmoebaPolytope,
    phi: &dyn Potential,
    model: Model,
    betas: &[f64],
) -> CheckRow {
    match drift_report(data, t, amoeba, phi, model, betas) {
        Ok(rows) => {
            let d: Vec<f64> = rows.iter().map(|r| r.max_drift).collect();
            let scaled: Vec<f64> = rows.iter().map(|r| r.drift_sqrt_beta).collect();
            let decreasing = d.windows(2).all(|w| w[1] < w[0]);
            let s = spread(&scaled);
            let worst: Vec<&str> = rows.iter().map(|r| r.worst_simplex.as_str()).collect();
            CheckRow::new(
                "critical_drift",
                decreasing && s <= 9.0,
                s,
                "max drift decreasing; drift sqrt(beta) within a factor 3 of a constant",
                format!("max drift {d:?} at {worst:?}"),
            )
        }
        Err(e) => CheckRow::new("critical_drift", false, f64::NAN, "critical points found", e.to_string()),
    }
}

/// Points of `H_s` near `∂C̃`: boundary points with random angles and
/// small offsets, projected onto `{f_s = 0}`.
pub fn sample_hs(loc: &Localizer, s: f64, count: usize, seed: u64) -> Vec<LogPoint> {
    let n = loc.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<LogPoint> = (0..4 * count)
        .filter_map(|_| {
            let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            let off = rng.random_range(-1.0..3.0);
            let u = loc.boundary_solve(&dir, Model::Ftilde).ok()?;
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let rho: Vec<f64> = u.iter().map(|x| x * loc.beta * (1.0 + off / (loc.beta * norm))).collect();
            Some(LogPoint::from_rho(&rho, &theta, loc.beta))
        })
        .collect();
    let mut pts: Vec<LogPoint> = seeds.par_iter().filter_map(|z| loc.project_to_hs(z, s).ok()).collect();
    pts.truncate(count);
    pts
}

pub fn symplecticity(loc: &Localizer, count: usize, seed: u64) -> CheckRow {
    let mut worst: f64 = 0.0;
    let mut worst_good: f64 = 0.0;
    let mut total = usize::MAX;
    let mut detail = Vec::new();
    for (k, s) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let pts = sample_hs(loc, s, count, seed + k as u64);
        total = total.min(pts.len());
        let mut w: f64 = 0.0;
        for z in &pts {
            let Ok((d, dbar)) = loc.symplecticity_margin(z, s) else { continue };
            let r = dbar / d;
            w = w.max(r);
            if let Ok(RegionLabel::Good(_)) = loc.classify_region(&z.u) {
                worst_good = worst_good.max(dbar);
            }
        }
        worst = worst.max(w);
        detail.push(format!("s={s}: {} points, max ratio {w:e}", pts.len()));
    }
    CheckRow::new(
        "symplecticity_margin",
        total >= count && worst < 0.1 && worst_good == 0.0,
        worst,
        format!("|dbar|/|d| < 0.1 at >= {count} points per s; exactly 0 in good regions"),
        format!("{}; max |dbar| in good regions {worst_good:e}", detail.join("; ")),
    )
}

pub fn legendre_suite(phi: &dyn Potential, p: &Polyhedron, seed: u64) -> CheckRow {
    let n = phi.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> =
        (0..50).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let mut roundtrip: f64 = 0.0;
    let mut dual_dual: f64 = 0.0;
    let mut ray: f64 = 0.0;
    let dual = LegendreDual { phi };
    for x in &pts {
        let xv = DVector::from_column_slice(x);
        let q = legendre_forward(phi, x);
        match legendre_inverse(phi, q.as_slice()) {
            Ok(back) => roundtrip = roundtrip.max((back - &xv).norm() / (1.0 + xv.norm())),
            Err(_) => roundtrip = f64::INFINITY,
        }
        match legendre_dual_eval(&dual, x) {
            Ok(v) => dual_dual = dual_dual.max((v - phi.value(x)).abs() / (1.0 + phi.value(x).abs())),
            Err(_) => dual_dual = f64::INFINITY,
        }
        ray = ray.max(gradient_ray_residual(phi, x));
    }
    let winding = if n == 2 { projective_winding(phi, 2000) } else { 1.0 };
    let primal = check_adapted(phi, p).pass;
    // The polar of an unbounded P has the origin on its boundary, so the
    // dual comparison only applies to polytopes.
    let verdicts = if p.is_bounded() {
        match dual_adaptedness_check(phi, p) {
            Ok((_, r)) => Some(r.pass == primal),
            Err(_) => Some(false),
        }
    } else {
        None
    };
    let dual_note = match verdicts {
        Some(v) => format!("dual verdict agrees {v}"),
        None => "dual check not applicable (P unbounded)".to_string(),
    };
    let verdicts = verdicts.unwrap_or(true);
    let pass = roundtrip < 1e-8 && dual_dual < 1e-6 && ray < 1e-6 && (winding - 1.0).abs() < 1e-6 && verdicts;
    CheckRow::new(
        "legendre_suite",
        pass,
        roundtrip,
        "roundtrip < 1e-8; dual of dual < 1e-6; ray residual < 1e-6; winding 1; dual verdict matches",
        format!(
            "roundtrip {roundtrip:e}; dual of dual {dual_dual:e}; ray residual {ray:e}; winding {winding}; primal adapted {primal}, {dual_note}"
        ),
    )
}

/// Histogram of Morse indices against the f-vector of `∂T`, and the index law.
pub fn critical_census(t: &StarTriangulation, crits: &[CriticalDatum]) -> CheckRow {
    let f = t.boundary_f_vector();
    let mut hist = vec![0usize; f.len()];
    for c in crits {
        if c.morse_index < hist.len() {
            hist[c.morse_index] += 1;
        }
    }
    let bad: Vec<&str> = crits.iter().filter(|c| c.morse_index != c.dim()).map(|c| c.simplex.as_str()).collect();
    CheckRow::new(
        "critical_census",
        hist == f && bad.is_empty(),
        crits.len() as f64,
        format!("index histogram = f-vector {f:?}; index = dim"),
        if bad.is_empty() { format!("histogram {hist:?}") } else { format!("histogram {hist:?}; index != dim at {bad:?}") },
    )
}

/// Every trajectory ends at a proper face and every facet is reached.
pub fn incidence_law(crits: &[CriticalDatum], flows: &[Vec<FlowTrajectory>]) -> CheckRow {
    let mut problems = Vec::new();
    for (k, c) in crits.iter().enumerate() {
        if c.morse_index == 0 {
            continue;
        }
        let reached: Vec<usize> = flows[k].iter().filter_map(FlowTrajectory::limit_index).collect();
        for &j in &reached {
            let d = &crits[j];
            if j == k || !d.vertices.iter().all(|v| c.vertices.contains(v)) {
                problems.push(format!("{} flows to {}", c.simplex, d.simplex));
            }
        }
        for (j, d) in crits.iter().enumerate() {
            let facet = d.dim() + 1 == c.dim() && d.vertices.iter().all(|v| c.vertices.contains(v));
            if facet && !reached.contains(&j) {
                problems.push(format!("facet {} of {} not reached", d.simplex, c.simplex));
            }
        }
    }
    CheckRow::new(
        "incidence_law",
        problems.is_empty(),
        problems.len() as f64,
        "0 violations",
        problems.first().cloned().unwrap_or_default(),
    )
}
