//! Exact H-polyhedra in dimension at most 3 with their face lattice.
//!
//! Vertices and extreme rays come from the homogenized cone
//! `{(x, t) : a·x <= b t, t >= 0}`: every extreme ray is cut out by `n`
//! linearly independent tight rows, and the dimension is small enough to try
//! all of them. Faces are the closed sets of the generator/constraint
//! incidence relation.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, Rat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyhedronError {
    #[error("face enumeration is only supported for n <= 3, got {0}")]
    Unsupported(usize),
    #[error("polyhedron is empty")]
    Empty,
    #[error("polyhedron contains a line")]
    NotPointed,
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("the origin is not an interior point")]
    OriginNotInterior,
    #[error("{0} is not a simplex of the triangulation")]
    SimplexNotInTriangulation(String),
    #[error("face correspondence failed: {0}")]
    FaceMapMismatch(String),
}

/// Half-space `normal·x <= bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    #[serde(serialize_with = "ser_rat_vec")]
    pub normal: Vec<Rat>,
    #[serde(serialize_with = "ser_rat")]
    pub bound: Rat,
}

impl Constraint {
    pub fn new(normal: Vec<Rat>, bound: Rat) -> Self {
        Self { normal, bound }
    }

    pub fn normal_f64(&self) -> Vec<f64> {
        self.normal.iter().map(exact::to_f64).collect()
    }

    pub fn bound_f64(&self) -> f64 {
        exact::to_f64(&self.bound)
    }
}

pub(crate) fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub(crate) fn ser_rat_vec<S: serde::Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Face {
    pub dim: usize,
    /// Constraints tight on the whole face.
    pub tight: Vec<usize>,
    pub vertices: Vec<usize>,
    pub rays: Vec<usize>,
}

impl Face {
    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn is_subface_of(&self, other: &Face) -> bool {
        self.vertices.iter().all(|v| other.vertices.contains(v)) && self.rays.iter().all(|r| other.rays.contains(r))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    pub dim: usize,
    pub constraints: Vec<Constraint>,
    pub vertices: Vec<Vec<Rat>>,
    pub rays: Vec<Vec<Rat>>,
    /// Nonempty faces sorted by dimension; the last one is the polyhedron itself.
    pub faces: Vec<Face>,
}

impl Polyhedron {
    pub fn from_constraints(dim: usize, constraints: Vec<Constraint>) -> Result<Self, PolyhedronError> {
        if dim == 0 || dim > 3 {
            return Err(PolyhedronError::Unsupported(dim));
        }
        let normals: Vec<Vec<Rat>> = constraints.iter().map(|c| c.normal.clone()).collect();
        if exact::rank(&normals) < dim {
            return Err(PolyhedronError::NotPointed);
        }
        let (vertices, rays) = extreme_generators(dim, &constraints);
        if vertices.is_empty() {
            return Err(PolyhedronError::Empty);
        }
        let mut poly = Self { dim, constraints, vertices, rays, faces: Vec::new() };
        poly.faces = poly.enumerate_faces();
        Ok(poly)
    }

    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn full(&self) -> &Face {
        self.faces.last().expect("nonempty polyhedron")
    }

    /// Dimension of the polyhedron itself.
    pub fn poly_dim(&self) -> usize {
        self.full().dim
    }

    /// Faces other than the polyhedron itself.
    pub fn proper_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        let full = self.faces.len() - 1;
        self.faces.iter().enumerate().filter(move |(i, _)| *i != full)
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.constraints.iter().all(|c| exact::dot(&c.normal, x) <= c.bound)
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| {
            let a = c.normal_f64();
            a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= c.bound_f64() + tol
        })
    }

    pub fn origin_interior(&self) -> bool {
        self.poly_dim() == self.dim && self.constraints.iter().all(|c| c.bound.is_positive())
    }

    pub fn vertex_f64(&self, i: usize) -> Vec<f64> {
        self.vertices[i].iter().map(exact::to_f64).collect()
    }

    pub fn ray_f64(&self, i: usize) -> Vec<f64> {
        self.rays[i].iter().map(exact::to_f64).collect()
    }

    pub fn face_index_by_tight(&self, tight: &[usize]) -> Option<usize> {
        let want: BTreeSet<usize> = tight.iter().copied().collect();
        self.faces.iter().position(|f| f.tight.iter().copied().collect::<BTreeSet<_>>() == want)
    }

    /// Barycenter of the vertices of a face (rays ignored).
    pub fn vertex_barycenter(&self, face: &Face) -> Vec<Rat> {
        let k = exact::rat(face.vertices.len() as i64);
        let mut b = vec![Rat::zero(); self.dim];
        for &v in &face.vertices {
            for (bi, vi) in b.iter_mut().zip(&self.vertices[v]) {
                *bi += vi;
            }
        }
        b.into_iter().map(|x| x / &k).collect()
    }

    /// Polar dual `{p : ⟨p, v⟩ <= 1 for all vertices v}`. Constraint `i` of
    /// the result belongs to vertex `i` of `self`, so the face dual to `F`
    /// is the face whose tight set equals `F.vertices`.
    pub fn polar(&self) -> Result<Polyhedron, PolyhedronError> {
        if !self.is_bounded() {
            return Err(PolyhedronError::Unbounded);
        }
        if !self.origin_interior() {
            return Err(PolyhedronError::OriginNotInterior);
        }
        let cons = self.vertices.iter().map(|v| Constraint::new(v.clone(), Rat::one())).collect();
        Polyhedron::from_constraints(self.dim, cons)
    }

    /// Affine hull of a face as `(base point, direction basis)` in floats.
    pub fn face_affine_hull(&self, face: &Face) -> (Vec<f64>, Vec<Vec<f64>>) {
        let base = self.vertex_f64(face.vertices[0]);
        let mut dirs: Vec<Vec<Rat>> = Vec::new();
        let b = &self.vertices[face.vertices[0]];
        for &v in &face.vertices[1..] {
            dirs.push(self.vertices[v].iter().zip(b).map(|(x, y)| x - y).collect());
        }
        for &r in &face.rays {
            dirs.push(self.rays[r].clone());
        }
        let mut m = dirs.clone();
        let pivots = exact::rref(&mut m);
        let basis = m[..pivots.len()].iter().map(|row| row.iter().map(exact::to_f64).collect()).collect();
        (base, basis)
    }

    fn enumerate_faces(&self) -> Vec<Face> {
        let nv = self.vertices.len();
        let gens: Vec<(bool, usize)> =
            (0..nv).map(|i| (true, i)).chain((0..self.rays.len()).map(|i| (false, i))).collect();
        let tight_of = |g: &(bool, usize)| -> BTreeSet<usize> {
            self.constraints
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    if g.0 {
                        exact::dot(&c.normal, &self.vertices[g.1]) == c.bound
                    } else {
                        exact::dot(&c.normal, &self.rays[g.1]).is_zero()
                    }
                })
                .map(|(i, _)| i)
                .collect()
        };
        let tights: Vec<BTreeSet<usize>> = gens.iter().map(tight_of).collect();
        let closure = |members: &[usize]| -> BTreeSet<usize> {
            let mut it = members.iter();
            let first = tights[*it.next().expect("nonempty")].clone();
            it.fold(first, |acc, &g| acc.intersection(&tights[g]).copied().collect())
        };

        let all: Vec<usize> = (0..gens.len()).collect();
        let mut seen: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
        let mut stack = vec![all.clone()];
        seen.insert(all.clone(), closure(&all));
        while let Some(g) = stack.pop() {
            let s = seen[&g].clone();
            for c in 0..self.constraints.len() {
                if s.contains(&c) {
                    continue;
                }
                let sub: Vec<usize> = g.iter().copied().filter(|&k| tights[k].contains(&c)).collect();
                if !sub.iter().any(|&k| gens[k].0) || seen.contains_key(&sub) {
                    continue;
                }
                // Close the generator set under the tight constraints it shares.
                let cl = closure(&sub);
                let closed: Vec<usize> =
                    (0..gens.len()).filter(|&k| cl.iter().all(|ci| tights[k].contains(ci))).collect();
                if seen.contains_key(&closed) {
                    continue;
                }
                seen.insert(closed.clone(), cl);
                stack.push(closed);
            }
        }

        let mut faces: Vec<Face> = seen
            .into_iter()
            .map(|(g, tight)| {
                let homog: Vec<Vec<Rat>> = g
                    .iter()
                    .map(|&k| {
                        let (is_v, i) = gens[k];
                        let mut row = if is_v { self.vertices[i].clone() } else { self.rays[i].clone() };
                        row.push(if is_v { Rat::one() } else { Rat::zero() });
                        row
                    })
                    .collect();
                Face {
                    dim: exact::rank(&homog) - 1,
                    tight: tight.into_iter().collect(),
                    vertices: g.iter().filter(|&&k| gens[k].0).map(|&k| gens[k].1).collect(),
                    rays: g.iter().filter(|&&k| !gens[k].0).map(|&k| gens[k].1).collect(),
                }
            })
            .collect();
        faces.sort_by(|a, b| {
            a.dim.cmp(&b.dim).then_with(|| a.vertices.cmp(&b.vertices)).then_with(|| a.rays.cmp(&b.rays))
        });
        faces
    }
}

fn normalize_generator(v: &mut [Rat]) {
    let last = v.len() - 1;
    let scale = if !v[last].is_zero() {
        v[last].clone()
    } else {
        v.iter().find(|x| !x.is_zero()).map(|x| x.abs()).unwrap_or_else(Rat::one)
    };
    for x in v.iter_mut() {
        *x = &*x / &scale;
    }
}

fn extreme_generators(dim: usize, constraints: &[Constraint]) -> (Vec<Vec<Rat>>, Vec<Vec<Rat>>) {
    // Rows r with r·(x, t) <= 0.
    let mut rows: Vec<Vec<Rat>> = constraints
        .iter()
        .map(|c| {
            let mut r = c.normal.clone();
            r.push(-c.bound.clone());
            r
        })
        .collect();
    let mut t_row = vec![Rat::zero(); dim + 1];
    t_row[dim] = -Rat::one();
    rows.push(t_row);

    let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
    let subsets = crate::triangulation::all_subsets(rows.len());
    for sel in subsets.into_iter().filter(|s| s.len() == dim) {
        let sub: Vec<Vec<Rat>> = sel.iter().map(|&i| rows[i].clone()).collect();
        let ns = exact::nullspace(&sub, dim + 1);
        if ns.len() != 1 {
            continue;
        }
        for sign in [1, -1] {
            let v: Vec<Rat> = ns[0].iter().map(|x| x * exact::rat(sign)).collect();
            if rows.iter().all(|r| !exact::dot(r, &v).is_positive()) && v.iter().any(|x| !x.is_zero()) {
                let mut v = v;
                normalize_generator(&mut v);
                found.insert(v);
            }
        }
    }
    let mut vertices = Vec::new();
    let mut rays = Vec::new();
    for mut g in found {
        let t = g.pop().expect("homogeneous coordinate");
        if t.is_zero() {
            rays.push(g);
        } else {
            vertices.push(g);
        }
    }
    (vertices, rays)
}
