//! The tropical polynomial `L(u) = max_α ⟨u,α⟩ − h(α)`, its dual cells, the
//! amoeba-complement polytope `P` and the polar face pairing.

use num_traits::Signed;
use serde::Serialize;

use crate::exact::{self, Rat};
use crate::lattice::{LatticeVector, NewtonData};
use crate::polyhedron::{Constraint, Face, Polyhedron, PolyhedronError};
use crate::triangulation::{Simplex, StarTriangulation};

/// `l_α(u) = ⟨u,α⟩ − h(α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    pub alpha: LatticeVector,
    pub offset: Rat,
}

impl LinearForm {
    pub fn of(data: &NewtonData, i: usize) -> Self {
        Self { alpha: data.points[i].clone(), offset: data.heights[i].clone() }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.alpha.dot_f64(u) - exact::to_f64(&self.offset)
    }
}

/// `l_i(u)` for every marked point.
pub fn linear_forms(data: &NewtonData, u: &[f64]) -> Vec<f64> {
    (0..data.points.len()).map(|i| data.points[i].dot_f64(u) - data.height_f64(i)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TropicalValue {
    pub value: f64,
    /// Indices attaining the maximum within `1e-9·(1 + |value|)`.
    pub active: Vec<usize>,
}

pub fn tropical_eval(data: &NewtonData, u: &[f64]) -> TropicalValue {
    let l = linear_forms(data, u);
    let value = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + value.abs());
    let active = (0..l.len()).filter(|&i| value - l[i] <= tol).collect();
    TropicalValue { value, active }
}

/// `r_α(u) = L(u) − l_α(u) >= 0`.
pub fn r_alpha(data: &NewtonData, alpha: usize, u: &[f64]) -> f64 {
    let l = linear_forms(data, u);
    let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max - l[alpha]).max(0.0)
}

/// Dual cell `C_τ = {u : l_α = l_α' >= l_α'' for α, α' ∈ τ}`.
pub fn dual_cell(data: &NewtonData, t: &StarTriangulation, tau: &Simplex) -> Result<Polyhedron, PolyhedronError> {
    if !t.contains_simplex(tau) {
        return Err(PolyhedronError::SimplexNotInTriangulation(tau.label()));
    }
    let a0 = tau.indices[0];
    let base = data.points[a0].as_rat();
    let diff = |j: usize| -> (Vec<Rat>, Rat) {
        let normal = data.points[j].as_rat().iter().zip(&base).map(|(x, y)| x - y).collect();
        (normal, &data.heights[j] - &data.heights[a0])
    };
    let mut cons = Vec::new();
    for j in 0..data.points.len() {
        if j == a0 {
            continue;
        }
        let (normal, bound) = diff(j);
        if tau.contains(j) {
            cons.push(Constraint::new(normal.iter().map(|x| -x).collect(), -bound.clone()));
        }
        cons.push(Constraint::new(normal, bound));
    }
    Polyhedron::from_constraints(data.dim, cons)
}

/// `P = {u : ⟨u,α⟩ <= h(α), α ∈ ∂T}` with `face_of[k]` the face of `P`
/// dual to `t.boundary[k]`. Constraint `c` of `P` belongs to point
/// `constraint_point[c]`.
#[derive(Clone, Debug)]
pub struct AmoebaPolytope {
    pub poly: Polyhedron,
    pub constraint_point: Vec<usize>,
    pub face_of: Vec<usize>,
}

impl AmoebaPolytope {
    pub fn face_for(&self, t: &StarTriangulation, tau: &Simplex) -> Option<&Face> {
        t.boundary_index(tau).map(|k| &self.poly.faces[self.face_of[k]])
    }

    /// Boundary simplex index for each proper face of `P`.
    pub fn simplex_of_face(&self, face: usize) -> Option<usize> {
        self.face_of.iter().position(|&f| f == face)
    }
}

pub fn complement_polytope(data: &NewtonData, t: &StarTriangulation) -> Result<AmoebaPolytope, PolyhedronError> {
    let verts = t.boundary_vertices();
    if verts.iter().any(|&i| !data.heights[i].is_positive()) {
        return Err(PolyhedronError::OriginNotInterior);
    }
    let cons = verts.iter().map(|&i| Constraint::new(data.points[i].as_rat(), data.heights[i].clone())).collect();
    let poly = Polyhedron::from_constraints(data.dim, cons)?;
    let mut face_of = Vec::with_capacity(t.boundary.len());
    for tau in &t.boundary {
        let tight: Vec<usize> = tau
            .indices
            .iter()
            .map(|i| verts.iter().position(|v| v == i).expect("boundary vertex"))
            .collect();
        let f = poly
            .face_index_by_tight(&tight)
            .ok_or_else(|| PolyhedronError::FaceMapMismatch(format!("no face of P dual to {}", tau.label())))?;
        if poly.faces[f].dim + tau.dim() + 1 != data.dim {
            return Err(PolyhedronError::FaceMapMismatch(format!("dimension mismatch at {}", tau.label())));
        }
        face_of.push(f);
    }
    let proper = poly.faces.len() - 1;
    let mut sorted = face_of.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != proper || sorted.len() != t.boundary.len() {
        return Err(PolyhedronError::FaceMapMismatch(format!(
            "{} boundary simplices vs {} proper faces",
            t.boundary.len(),
            proper
        )));
    }
    Ok(AmoebaPolytope { poly, constraint_point: verts, face_of })
}

/// Proper face `F` of `P` with its polar face and the generators of both cones.
#[derive(Clone, Debug, Serialize)]
pub struct ConormalPair {
    pub face: usize,
    pub dual_face: usize,
    pub face_dim: usize,
    pub dual_dim: usize,
    pub cone_generators: Vec<Vec<f64>>,
    pub dual_cone_generators: Vec<Vec<f64>>,
}

pub fn conormal_face_pairs(p: &Polyhedron) -> Result<(Polyhedron, Vec<ConormalPair>), PolyhedronError> {
    let q = p.polar()?;
    let mut pairs = Vec::new();
    for (fi, face) in p.proper_faces() {
        let dual = q
            .face_index_by_tight(&face.vertices)
            .ok_or_else(|| PolyhedronError::FaceMapMismatch(format!("no polar face for face {fi}")))?;
        let dual_face = &q.faces[dual];
        pairs.push(ConormalPair {
            face: fi,
            dual_face: dual,
            face_dim: face.dim,
            dual_dim: dual_face.dim,
            cone_generators: face.vertices.iter().map(|&v| p.vertex_f64(v)).collect(),
            dual_cone_generators: dual_face.vertices.iter().map(|&v| q.vertex_f64(v)).collect(),
        });
    }
    Ok((q, pairs))
}

/// Segments of the tropical amoeba in the plane: the dual cells of the edges
/// of `T`, with rays clipped at `ray_length`.
pub fn amoeba_segments(
    data: &NewtonData,
    t: &StarTriangulation,
    ray_length: f64,
) -> Result<Vec<[[f64; 2]; 2]>, PolyhedronError> {
    if data.dim != 2 {
        return Err(PolyhedronError::Unsupported(data.dim));
    }
    let mut out = Vec::new();
    for tau in t.faces.iter().filter(|s| s.dim() == 1) {
        let cell = dual_cell(data, t, tau)?;
        let a = cell.vertex_f64(0);
        let b = if cell.vertices.len() > 1 {
            cell.vertex_f64(1)
        } else {
            let r = cell.ray_f64(0);
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            vec![a[0] + ray_length * r[0] / norm, a[1] + ray_length * r[1] / norm]
        };
        out.push([[a[0], a[1]], [b[0], b[1]]]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::instances;
    use crate::triangulation::build_coherent_triangulation;
    use exact::rat;

    #[test]
    fn tropical_values() {
        let e2 = instances::mirror_p2(100.0);
        let tv = tropical_eval(&e2, &[0.0, 0.0]);
        assert_eq!((tv.value, tv.active), (0.0, vec![0]));
        let tv = tropical_eval(&e2, &[1.0, 1.0]);
        assert_eq!((tv.value, tv.active), (0.0, vec![0, 1, 2]));
        let e1 = instances::pair_of_pants(100.0);
        let tv = tropical_eval(&e1, &[2.0, 0.0]);
        assert_eq!((tv.value, tv.active), (1.0, vec![1]));
        assert_eq!(r_alpha(&e2, 0, &[2.0, 1.0]), 1.0);
        assert_eq!(r_alpha(&e1, 1, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn dual_cells() {
        let e2 = instances::mirror_p2(100.0);
        let t2 = build_coherent_triangulation(&e2).unwrap();
        let top = Simplex::new(&e2, vec![0, 1, 2]);
        let c = dual_cell(&e2, &t2, &top).unwrap();
        assert_eq!(c.vertices, vec![vec![rat(1), rat(1)]]);
        assert_eq!(c.poly_dim(), 0);
        let edge = Simplex::new(&e2, vec![1, 2]);
        let c = dual_cell(&e2, &t2, &edge).unwrap();
        assert_eq!(c.vertices, vec![vec![rat(1), rat(1)]]);
        assert_eq!(c.rays, vec![vec![rat(1), rat(1)]]);
        assert_eq!(c.poly_dim(), 1);
        let not_in = Simplex::new(&e2, vec![0, 1, 3, 2]);
        assert!(dual_cell(&e2, &t2, &not_in).is_err());

        let e1 = instances::pair_of_pants(100.0);
        let t1 = build_coherent_triangulation(&e1).unwrap();
        let c = dual_cell(&e1, &t1, &Simplex::new(&e1, vec![0])).unwrap();
        assert_eq!(c.vertices, vec![vec![rat(1), rat(1)]]);
        assert_eq!(c.poly_dim(), 2);
    }

    #[test]
    fn complement_polytopes() {
        let e2 = instances::mirror_p2(100.0);
        let t2 = build_coherent_triangulation(&e2).unwrap();
        let p = complement_polytope(&e2, &t2).unwrap();
        let mut vs = p.poly.vertices.clone();
        vs.sort();
        let mut want = vec![vec![rat(1), rat(1)], vec![rat(1), rat(-2)], vec![rat(-2), rat(1)]];
        want.sort();
        assert_eq!(vs, want);

        let e3 = instances::skew_triangle(100.0);
        let t3 = build_coherent_triangulation(&e3).unwrap();
        let p3 = complement_polytope(&e3, &t3).unwrap();
        let mut vs = p3.poly.vertices.clone();
        vs.sort();
        let mut want = vec![vec![rat(0), rat(1)], vec![rat(-3), rat(1)], vec![rat(3), rat(-2)]];
        want.sort();
        assert_eq!(vs, want);

        let e1 = instances::pair_of_pants(100.0);
        let t1 = build_coherent_triangulation(&e1).unwrap();
        let p1 = complement_polytope(&e1, &t1).unwrap();
        let edge = Simplex::new(&e1, vec![1, 2]);
        let f = p1.face_for(&t1, &edge).unwrap();
        assert_eq!(f.dim, 0);
        assert_eq!(p1.poly.vertices[f.vertices[0]], vec![rat(1), rat(1)]);
    }

    #[test]
    fn polar_pairs_of_mirror_p2() {
        let e2 = instances::mirror_p2(100.0);
        let t2 = build_coherent_triangulation(&e2).unwrap();
        let p = complement_polytope(&e2, &t2).unwrap();
        let (q, pairs) = conormal_face_pairs(&p.poly).unwrap();
        let mut vs = q.vertices.clone();
        vs.sort();
        let mut want = vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)], vec![rat(-1), rat(-1)]];
        want.sort();
        assert_eq!(vs, want);
        assert_eq!(pairs.len(), 6);
        assert!(pairs.iter().all(|c| c.face_dim + c.dual_dim == 1));
        let back = q.polar().unwrap();
        let mut a = back.vertices.clone();
        a.sort();
        let mut b = p.poly.vertices.clone();
        b.sort();
        assert_eq!(a, b);
    }
}
