//! Stage orchestration for the CLI subcommands.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::config::{PotentialConfig, RunConfig};
use crate::error::TropskelError;
use crate::exact;
use crate::lattice::NewtonData;
use crate::localization::Localizer;
use crate::morse::{find_critical_points, liouville_identities, scan_extraneous_critical, CriticalDatum};
use crate::plot::{emit_plots, PlotError};
use crate::potential::{check_adapted, gauge_candidate, GaugePotential};
use crate::report::{AmoebaSummary, CheckRow, FaceMapRow, RunReport, SkeletonSummary, TrajectorySummary, TriangulationSummary};
use crate::skeleton::{compare_complexes, compute_skeleton, rstz_complex};
use crate::triangulation::{build_coherent_triangulation, normalized_volume, StarTriangulation};
use crate::tropical::{complement_polytope, AmoebaPolytope};
use crate::verify;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcommand {
    Triangulate,
    Amoeba,
    PotentialCheck,
    Critical,
    Skeleton,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] =
        [Self::Triangulate, Self::Amoeba, Self::PotentialCheck, Self::Critical, Self::Skeleton, Self::Verify];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Triangulate => "triangulate",
            Self::Amoeba => "amoeba",
            Self::PotentialCheck => "potential-check",
            Self::Critical => "critical",
            Self::Skeleton => "skeleton",
            Self::Verify => "verify",
        }
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown subcommand {s:?}"))
    }
}

fn fmt_point(v: &[exact::Rat]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn triangulation_stage(data: &NewtonData, report: &mut RunReport) -> Result<StarTriangulation, TropskelError> {
    let t = build_coherent_triangulation(data).map_err(|e| TropskelError::input("triangulate", e))?;
    report.triangulation = Some(TriangulationSummary {
        maximal: t.maximal.iter().map(|s| s.label()).collect(),
        boundary: t.boundary.iter().map(|s| s.label()).collect(),
        boundary_f_vector: t.boundary_f_vector(),
        normalized_volume: normalized_volume(data, &t).to_string(),
    });
    let o = t.origin;
    let not_star: Vec<String> = t.maximal.iter().filter(|s| !s.contains(o)).map(|s| s.label()).collect();
    report.push(CheckRow::new(
        "star_triangulation",
        not_star.is_empty(),
        t.maximal.len() as f64,
        "every maximal simplex contains the origin",
        not_star.join(", "),
    ));
    let open: Vec<String> = t
        .faces
        .iter()
        .flat_map(|s| {
            (0..s.indices.len()).filter(move |_| s.indices.len() > 1).map(move |k| {
                let mut f = s.indices.clone();
                f.remove(k);
                f
            })
        })
        .filter(|f| !t.faces.iter().any(|g| &g.indices == f))
        .map(|f| format!("{f:?}"))
        .collect();
    report.push(CheckRow::new("face_closure", open.is_empty(), open.len() as f64, "0 missing faces", open.join(", ")));
    Ok(t)
}

fn amoeba_stage(data: &NewtonData, t: &StarTriangulation, report: &mut RunReport) -> Result<AmoebaPolytope, TropskelError> {
    let am = complement_polytope(data, t).map_err(|e| TropskelError::input("amoeba", e))?;
    let p = &am.poly;
    let face_map = t
        .boundary
        .iter()
        .zip(&am.face_of)
        .map(|(tau, &f)| {
            let face = &p.faces[f];
            FaceMapRow {
                simplex: tau.label(),
                face_dim: face.dim,
                face_vertices: face.vertices.iter().map(|&v| fmt_point(&p.vertices[v])).collect(),
                face_rays: face.rays.iter().map(|&r| fmt_point(&p.rays[r])).collect(),
            }
        })
        .collect::<Vec<_>>();
    let bad: Vec<String> = face_map
        .iter()
        .zip(&t.boundary)
        .filter(|(row, tau)| row.face_dim + tau.dim() + 1 != data.dim)
        .map(|(row, _)| row.simplex.clone())
        .collect();
    let mut faces = am.face_of.clone();
    faces.sort_unstable();
    faces.dedup();
    report.push(CheckRow::new(
        "face_map",
        bad.is_empty() && faces.len() == am.face_of.len(),
        am.face_of.len() as f64,
        "injective, dim F + dim tau = n - 1",
        bad.join(", "),
    ));
    report.amoeba = Some(AmoebaSummary {
        constraints: p
            .constraints
            .iter()
            .map(|c| format!("({}) . u <= {}", fmt_point(&c.normal).join(","), c.bound))
            .collect(),
        vertices: p.vertices.iter().map(|v| fmt_point(v)).collect(),
        rays: p.rays.iter().map(|v| fmt_point(v)).collect(),
        face_map,
    });
    Ok(am)
}

fn potential_stage(cfg: &RunConfig, am: &AmoebaPolytope, report: &mut RunReport) -> Result<GaugePotential, TropskelError> {
    let phi = match &cfg.potential {
        PotentialConfig::Gauge { delta, p, epsilon } => {
            gauge_candidate(&am.poly, *delta, *p, *epsilon).map_err(|e| TropskelError::input("potential", e))?
        }
        PotentialConfig::Quadratic { matrix } => {
            let n = matrix.len();
            let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
            GaugePotential::quadratic(m).map_err(|e| TropskelError::input("potential", e))?
        }
    };
    let adapt = check_adapted(&phi, &am.poly);
    for f in &adapt.faces {
        report.push(CheckRow::new(
            "adapted_face",
            f.pass,
            f.margin,
            "interior minimizer (margin > 0) with dphi in the open normal cone",
            format!("face {} minimizer {:?} cone margin {:e}{}", f.label, f.minimizer, f.cone_margin, f.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()),
        ));
    }
    report.adaptedness = Some(adapt);
    Ok(phi)
}

fn critical_stage(
    loc: &Localizer,
    am: &AmoebaPolytope,
    phi: &GaugePotential,
    cfg: &RunConfig,
    report: &mut RunReport,
) -> Result<Vec<CriticalDatum>, TropskelError> {
    let crits = find_critical_points(loc, am, phi, cfg.model).map_err(|e| TropskelError::stage("critical", e))?;
    report.push(verify::critical_census(loc.t, &crits));
    let bad: Vec<&str> = crits.iter().filter(|c| c.multiplier <= 0.0).map(|c| c.simplex.as_str()).collect();
    let min_c = crits.iter().map(|c| c.multiplier).fold(f64::INFINITY, f64::min);
    report.push(CheckRow::new("multiplier_positive", bad.is_empty(), min_c, "> 0", bad.join(", ")));
    report.critical = Some(crits.clone());
    Ok(crits)
}

fn skeleton_stage(
    loc: &Localizer,
    am: &AmoebaPolytope,
    phi: &GaugePotential,
    cfg: &RunConfig,
    report: &mut RunReport,
) -> Result<(), TropskelError> {
    let run = compute_skeleton(loc, am, phi, cfg.model, &cfg.flow_params()).map_err(|e| TropskelError::stage("skeleton", e))?;
    let rstz = rstz_complex(loc.data, loc.t);
    let cmp = compare_complexes(&run.complex, &rstz);
    let failing: Vec<&str> = run.cones.iter().filter(|c| !c.pass).map(|c| c.simplex.as_str()).collect();
    let min_margin = run.cones.iter().map(|c| c.min_interior_margin).fold(f64::INFINITY, f64::min);
    report.push(CheckRow::new(
        "cone_correspondence",
        failing.is_empty(),
        min_margin,
        "membership with margin, coverage within 0.1",
        failing.join(", "),
    ));
    report.push(verify::incidence_law(&run.critical, &run.flows));
    let flows: Vec<_> = run.flows.iter().flatten().collect();
    let level = flows.iter().map(|f| f.max_level_error).fold(0.0, f64::max);
    let rising: Vec<&str> =
        flows.iter().filter(|f| !f.phi_decreasing).map(|f| run.critical[f.origin].simplex.as_str()).collect();
    report.push(CheckRow::new(
        "flow_invariants",
        level < 1e-8 && rising.is_empty(),
        level,
        "level error < 1e-8, phi decreasing",
        rising.first().map(|s| format!("phi increases on a trajectory from {s}")).unwrap_or_default(),
    ));
    report.push(CheckRow::new(
        "complexes_isomorphic",
        cmp.isomorphic,
        cmp.cells.0 as f64,
        "cell bijection, incidence and Euler characteristic agree",
        cmp.mismatch.clone().unwrap_or_default(),
    ));
    let bad_dim: Vec<&str> =
        run.complex.cells.iter().filter(|c| c.dim() + 1 != loc.dim()).map(|c| c.simplex.as_str()).collect();
    report.push(CheckRow::new(
        "lagrangian_dimension",
        bad_dim.is_empty(),
        (loc.dim() - 1) as f64,
        "every cell has dimension n - 1",
        bad_dim.join(", "),
    ));
    if loc.dim() == 2 {
        let vol = exact::to_f64(&normalized_volume(loc.data, loc.t));
        let want = -vol;
        report.push(CheckRow::new(
            "euler_volume",
            run.complex.euler as f64 == want,
            run.complex.euler as f64,
            format!("-n! vol(Q) = {want}"),
            String::new(),
        ));
    }
    let trajectories = run.flows.iter().flatten().map(|t| TrajectorySummary::from_trajectory(t, &run.critical)).collect();
    report.critical = Some(run.critical.clone());
    report.skeleton = Some(SkeletonSummary { liouville: run.complex, rstz, comparison: cmp, cones: run.cones, trajectories });
    Ok(())
}

fn verify_stage(
    data: &NewtonData,
    t: &StarTriangulation,
    am: &AmoebaPolytope,
    phi: &GaugePotential,
    cfg: &RunConfig,
    report: &mut RunReport,
) -> Result<(), TropskelError> {
    let loc = Localizer::new(data, t);
    let seed = cfg.seed;
    match liouville_identities(&loc, phi, cfg.sampling.liouville_samples, seed) {
        Ok(r) => {
            report.push(CheckRow::new(
                "liouville_identities",
                r.pass,
                r.max_theta_component,
                format!("|dtheta(X^par)| < 1e-6, c1 > 0, pairing > 0 at >= {} points", cfg.sampling.liouville_samples),
                format!("{} samples, min c1 {:e}, min pairing {:e}", r.samples, r.min_c1, r.min_pairing),
            ));
            report.liouville = Some(r);
        }
        Err(e) => report.push(CheckRow::new("liouville_identities", false, f64::NAN, "computed", e.to_string())),
    }
    if data.dim == 2 {
        let scan = scan_extraneous_critical(&loc, phi, &cfg.scan_grid());
        report.push(CheckRow::new(
            "extraneous_scan",
            scan.pass,
            scan.min_norm,
            format!("off-locus floor > {}", scan.floor_tol),
            format!("{} off-locus points; minimum at u {:?}, theta {:?}", scan.off_locus, scan.argmin_u, scan.argmin_theta),
        ));
        report.scan = Some(scan);
    }
    report.push(verify::cutoff_certificate());
    let betas = &cfg.instance.beta_list;
    report.push(verify::localization_bounds(data, t, &am.poly, betas, cfg.sampling.closeness_samples, seed));
    report.push(verify::convergence_rates(data, t, betas));
    report.push(verify::critical_drift(data, t, am, phi, cfg.model, betas));
    report.push(verify::symplecticity(&loc, cfg.sampling.surface_samples, seed));
    report.push(verify::legendre_suite(phi, &am.poly, seed));
    Ok(())
}

/// Runs `sub` on `cfg`. Check failures are recorded in the report; errors
/// are returned only when a stage cannot produce output at all.
pub fn run(sub: Subcommand, cfg: &RunConfig) -> Result<RunReport, TropskelError> {
    let mut report = RunReport::new(sub.as_str(), cfg);
    let data = cfg.newton_data().map_err(|e| TropskelError::input("instance", e))?;
    let t = triangulation_stage(&data, &mut report)?;
    if sub == Subcommand::Triangulate {
        return Ok(report);
    }
    let am = amoeba_stage(&data, &t, &mut report)?;
    if sub == Subcommand::Amoeba {
        return Ok(report);
    }
    let phi = potential_stage(cfg, &am, &mut report)?;
    if sub == Subcommand::PotentialCheck || !report.pass {
        return Ok(report);
    }
    let loc = Localizer::new(&data, &t);
    if sub == Subcommand::Critical {
        critical_stage(&loc, &am, &phi, cfg, &mut report)?;
        return Ok(report);
    }
    skeleton_stage(&loc, &am, &phi, cfg, &mut report)?;
    if sub == Subcommand::Skeleton {
        return Ok(report);
    }
    let crits = report.critical.clone().unwrap_or_default();
    report.push(verify::critical_census(&t, &crits));
    verify_stage(&data, &t, &am, &phi, cfg, &mut report)?;
    Ok(report)
}

/// Writes `<subcommand>.json` and, for planar instances with plots enabled,
/// the figures under `plots/`. Returns the written paths and, if plots were
/// skipped, the reason.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<(Vec<PathBuf>, Option<PlotError>), TropskelError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", report.subcommand));
    report.write(&path)?;
    let mut files = vec![path];
    let mut skipped = None;
    if report.config.outputs.plots {
        match emit_plots(report, &dir.join("plots")) {
            Ok(f) => files.extend(f),
            Err(e @ PlotError::UnsupportedDimension(_)) => skipped = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((files, skipped))
}
