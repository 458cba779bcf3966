//! SVG figures and CSV polyline tables for planar instances.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lattice::LatticeVector;
use crate::localization::{Localizer, Model};
use crate::report::RunReport;
use crate::snf::critical_torus;
use crate::triangulation::build_coherent_triangulation;
use crate::tropical::{amoeba_segments, complement_polytope};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("plots are only drawn for n = 2, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("cannot rebuild the instance: {0}")]
    Instance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Maps a box of the plane onto an SVG canvas with the y axis up.
struct Canvas {
    lo: [f64; 2],
    hi: [f64; 2],
    size: f64,
    body: String,
}

impl Canvas {
    fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi, size: 600.0, body: String::new() }
    }

    fn map(&self, p: &[f64]) -> (f64, f64) {
        let s = self.size / (self.hi[0] - self.lo[0]).max(self.hi[1] - self.lo[1]);
        ((p[0] - self.lo[0]) * s, self.size - (p[1] - self.lo[1]) * s)
    }

    fn polyline(&mut self, pts: &[Vec<f64>], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" {style}/>"#, coords.join(" "));
    }

    fn dot(&mut self, p: &[f64], r: f64, fill: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
    }

    fn circle(&mut self, p: &[f64], r: f64, style: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" {style}/>"#);
    }

    fn text(&mut self, p: &[f64], label: &str) {
        let (x, y) = self.map(p);
        let label = label.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(self.body, r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{label}</text>"#, x + 6.0, y - 6.0);
    }

    fn finish(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            s = self.size
        )
    }
}

fn csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> std::io::Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    std::fs::write(path, s)
}

/// Writes `amoeba.svg`, `skeleton.svg` and CSV tables into `dir` and returns
/// the file list.
pub fn emit_plots(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let cfg = &report.config;
    if cfg.instance.dim != 2 {
        return Err(PlotError::UnsupportedDimension(cfg.instance.dim));
    }
    std::fs::create_dir_all(dir)?;
    let data = cfg.newton_data().map_err(|e| PlotError::Instance(e.to_string()))?;
    let t = build_coherent_triangulation(&data).map_err(|e| PlotError::Instance(e.to_string()))?;
    let am = complement_polytope(&data, &t).map_err(|e| PlotError::Instance(e.to_string()))?;
    let loc = Localizer::new(&data, &t);
    let mut files = Vec::new();

    let verts: Vec<Vec<f64>> = (0..am.poly.vertices.len()).map(|v| am.poly.vertex_f64(v)).collect();
    let reach = verts.iter().flat_map(|v| v.iter().map(|x| x.abs())).fold(1.0, f64::max) + 1.5;
    let spine = amoeba_segments(&data, &t, 2.0 * reach).map_err(|e| PlotError::Instance(e.to_string()))?;
    let boundary: Vec<Vec<f64>> = (0..=720)
        .filter_map(|k| {
            let a = TAU * k as f64 / 720.0;
            loc.boundary_solve(&[a.cos(), a.sin()], Model::Ftilde).ok()
        })
        .collect();

    let mut c = Canvas::new([-reach, -reach], [reach, reach]);
    for seg in &spine {
        c.polyline(&[seg[0].to_vec(), seg[1].to_vec()], r##"stroke="#888" stroke-width="2""##);
    }
    // P: bounded part through its vertices in angular order, rays clipped.
    let mut outline = verts.clone();
    outline.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    if am.poly.is_bounded() && !outline.is_empty() {
        outline.push(outline[0].clone());
        c.polyline(&outline, r##"stroke="#36c" stroke-width="1" stroke-dasharray="4 3""##);
    }
    c.polyline(&boundary, r##"stroke="#c33" stroke-width="1.5""##);
    if let Some(sk) = &report.skeleton {
        for tr in &sk.trajectories {
            c.polyline(&tr.polyline, r##"stroke="#2a2" stroke-width="1.2""##);
        }
    }
    if let Some(adapt) = &report.adaptedness {
        for f in &adapt.faces {
            c.dot(&f.minimizer, 3.0, if f.pass { "#36c" } else { "#f80" });
        }
    }
    if let Some(crits) = &report.critical {
        for cr in crits {
            c.dot(&cr.location, 4.0, "black");
            c.text(&cr.location, &format!("{} [{}]", cr.simplex, cr.morse_index));
        }
    }
    let path = dir.join("amoeba.svg");
    std::fs::write(&path, c.finish())?;
    files.push(path);

    let path = dir.join("amoeba_spine.csv");
    csv(&path, "segment,x0,y0,x1,y1", spine.iter().enumerate().map(|(i, s)| format!("{i},{},{},{},{}", s[0][0], s[0][1], s[1][0], s[1][1])))?;
    files.push(path);
    let path = dir.join("boundary.csv");
    csv(&path, "x,y", boundary.iter().map(|p| format!("{},{}", p[0], p[1])))?;
    files.push(path);
    if let Some(sk) = &report.skeleton {
        let path = dir.join("trajectories.csv");
        let rows = sk.trajectories.iter().enumerate().flat_map(|(i, tr)| {
            let lim = tr.limit.clone().unwrap_or_else(|| "divergent".into());
            tr.polyline.iter().map(move |p| format!("{i},\"{}\",\"{lim}\",{},{}", tr.origin, p[0], p[1]))
        });
        csv(&path, "trajectory,origin,limit,x,y", rows)?;
        files.push(path);
    }
    if let Some(crits) = &report.critical {
        let path = dir.join("critical.csv");
        csv(&path, "simplex,index,x,y", crits.iter().map(|cr| format!("\"{}\",{},{},{}", cr.simplex, cr.morse_index, cr.location[0], cr.location[1])))?;
        files.push(path);
    }

    if let Some(sk) = &report.skeleton {
        files.push(skeleton_schematic(sk, dir, &data)?);
    }
    Ok(files)
}

/// Circles for vertex cells placed at their lattice points, intervals for
/// edge cells drawn between the attachment points on those circles.
fn skeleton_schematic(
    sk: &crate::report::SkeletonSummary,
    dir: &Path,
    data: &crate::lattice::NewtonData,
) -> Result<PathBuf, PlotError> {
    let t = build_coherent_triangulation(data).map_err(|e| PlotError::Instance(e.to_string()))?;
    let cx = &sk.liouville;
    let reach = data.points.iter().flat_map(|p| p.0.iter().map(|x| x.abs() as f64)).fold(1.0, f64::max) + 0.8;
    let mut c = Canvas::new([-reach, -reach], [reach, reach]);
    let radius = 0.22;
    let centre = |v: &LatticeVector, comp: usize| -> Vec<f64> {
        let p = v.as_f64();
        vec![p[0] * (1.0 + 0.35 * comp as f64), p[1] * (1.0 + 0.35 * comp as f64)]
    };
    let on_circle = |v: &LatticeVector, comp: usize, angle: f64| -> Vec<f64> {
        let o = centre(v, comp);
        vec![o[0] + radius * angle.cos(), o[1] + radius * angle.sin()]
    };
    for cell in cx.cells.iter().filter(|cell| cell.simplex_dim == 0) {
        let o = centre(&cell.vertices[0], cell.component);
        c.circle(&o, 600.0 * radius / (2.0 * reach), r#"stroke="black" stroke-width="2""#);
        c.text(&[o[0] + radius, o[1] + radius], &cell.simplex);
    }
    for (k, cell) in cx.cells.iter().enumerate().filter(|(_, cell)| cell.simplex_dim == 1) {
        let ends: Vec<Vec<f64>> = cx
            .incidence
            .iter()
            .filter(|&&(_, b)| b == k)
            .map(|&(a, _)| &cx.cells[a])
            .filter(|face| face.simplex_dim == 0)
            .map(|face| {
                let tau = t.boundary.iter().find(|s| s.label() == face.simplex).expect("cell simplex is in the boundary");
                let torus = critical_torus(data, tau);
                let angle = torus.tangent_coordinates(&cell.representative).first().copied().unwrap_or(0.0);
                on_circle(&face.vertices[0], face.component, angle)
            })
            .collect();
        if ends.len() == 2 {
            c.polyline(&ends, r##"stroke="#c33" stroke-width="2""##);
            for e in &ends {
                c.dot(e, 4.0, "#c33");
            }
        }
    }
    c.text(&[-reach + 0.1, -reach + 0.2], &format!("chi = {}, {} cells", cx.euler, cx.cells.len()));
    let path = dir.join("skeleton.svg");
    std::fs::write(&path, c.finish())?;
    Ok(path)
}
