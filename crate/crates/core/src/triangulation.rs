//! Coherent star triangulations from the lower hull of the lifted points
//! `(α, h(α))`. Everything here is exact.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, Rat};
use crate::lattice::{InstanceError, LatticeVector, NewtonData};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangulationError {
    #[error(transparent)]
    Instance(InstanceError),
    #[error("conv(A) is not full-dimensional")]
    DegenerateQ,
    #[error("lower facet through {0:?} is not a simplex")]
    NonGenericHeights(Vec<LatticeVector>),
    #[error("maximal simplex {0:?} does not contain the origin")]
    NotStar(Vec<LatticeVector>),
    #[error("h({0}) <= 0: the origin is not strictly below the other lifted points")]
    NotStarHeight(LatticeVector),
    #[error("{0} lies strictly above the lower hull and is not a vertex of the triangulation")]
    PointNotVertex(LatticeVector),
    #[error("point lies outside conv(A)")]
    PointOutsideQ,
}

impl From<InstanceError> for TriangulationError {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::DegenerateQ => Self::DegenerateQ,
            other => Self::Instance(other),
        }
    }
}

/// A simplex of the triangulation, stored as sorted indices into
/// `NewtonData::points` together with the corresponding lattice vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Simplex {
    #[serde(skip)]
    pub indices: Vec<usize>,
    pub vertices: Vec<LatticeVector>,
}

impl Simplex {
    pub fn new(data: &NewtonData, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let vertices = indices.iter().map(|&i| data.points[i].clone()).collect();
        Self { indices, vertices }
    }

    pub fn dim(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.vertices.iter().map(ToString::to_string).collect();
        format!("{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct StarTriangulation {
    pub dim: usize,
    pub origin: usize,
    pub maximal: Vec<Simplex>,
    /// All nonempty faces, sorted by dimension then indices.
    pub faces: Vec<Simplex>,
    /// Faces not containing the origin.
    pub boundary: Vec<Simplex>,
    /// `neighbors[i]`: points spanning an edge of `T` with point `i`.
    pub neighbors: Vec<Vec<usize>>,
}

impl StarTriangulation {
    pub fn contains_simplex(&self, s: &Simplex) -> bool {
        self.faces.binary_search_by(|f| cmp_faces(f, s)).is_ok()
    }

    /// Indices of points that are vertices of `∂T`.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary.iter().filter(|s| s.dim() == 0).map(|s| s.indices[0]).collect()
    }

    /// Number of boundary simplices of each dimension.
    pub fn boundary_f_vector(&self) -> Vec<usize> {
        let mut f = vec![0; self.dim];
        for s in &self.boundary {
            f[s.dim()] += 1;
        }
        f
    }

    pub fn boundary_index(&self, s: &Simplex) -> Option<usize> {
        self.boundary.iter().position(|b| b.indices == s.indices)
    }
}

fn cmp_faces(a: &Simplex, b: &Simplex) -> std::cmp::Ordering {
    a.indices.len().cmp(&b.indices.len()).then_with(|| a.indices.cmp(&b.indices))
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

pub(crate) fn all_subsets(k: usize) -> Vec<Vec<usize>> {
    (1..=k).flat_map(|r| combinations(k, r)).collect()
}

/// Affine function `x ↦ c·x + d` through the lifted points of `idx`, if they
/// are affinely independent.
fn lifting_plane(data: &NewtonData, idx: &[usize]) -> Option<(Vec<Rat>, Rat)> {
    let n = data.dim;
    let rows: Vec<Vec<Rat>> = idx
        .iter()
        .map(|&i| {
            let mut r = data.points[i].as_rat();
            r.push(exact::rat(1));
            r
        })
        .collect();
    let rhs: Vec<Rat> = idx.iter().map(|&i| data.heights[i].clone()).collect();
    let sol = exact::solve(&rows, &rhs)?;
    Some((sol[..n].to_vec(), sol[n].clone()))
}

pub fn build_coherent_triangulation(data: &NewtonData) -> Result<StarTriangulation, TriangulationError> {
    data.validate()?;
    let n = data.dim;
    let m = data.points.len();
    let origin = data.origin();

    let mut facets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for cand in combinations(m, n + 1) {
        let Some((c, d)) = lifting_plane(data, &cand) else {
            continue;
        };
        let mut on_plane = Vec::new();
        let mut below = false;
        for j in 0..m {
            let gap = &data.heights[j] - exact::dot_int(&c, &data.points[j].0) - &d;
            if gap.is_negative() {
                below = true;
                break;
            }
            if gap.is_zero() {
                on_plane.push(j);
            }
        }
        if below {
            continue;
        }
        if on_plane.len() > n + 1 {
            return Err(TriangulationError::NonGenericHeights(
                on_plane.iter().map(|&j| data.points[j].clone()).collect(),
            ));
        }
        facets.insert(cand);
    }

    let mut used = vec![false; m];
    for f in &facets {
        for &i in f {
            used[i] = true;
        }
    }
    if let Some(j) = used.iter().position(|u| !u) {
        return Err(TriangulationError::PointNotVertex(data.points[j].clone()));
    }
    for f in &facets {
        if !f.contains(&origin) {
            return Err(TriangulationError::NotStar(f.iter().map(|&j| data.points[j].clone()).collect()));
        }
    }
    if !data.heights_positive_off_origin() {
        let j = (0..m).find(|&j| j != origin && !data.heights[j].is_positive()).unwrap_or(origin);
        return Err(TriangulationError::NotStarHeight(data.points[j].clone()));
    }

    let maximal: Vec<Simplex> = facets.iter().map(|f| Simplex::new(data, f.clone())).collect();
    let mut face_set: BTreeSet<Vec<usize>> = BTreeSet::new();
    for f in &facets {
        for sub in all_subsets(f.len()) {
            face_set.insert(sub.iter().map(|&k| f[k]).collect());
        }
    }
    let mut faces: Vec<Simplex> = face_set.into_iter().map(|s| Simplex::new(data, s)).collect();
    faces.sort_by(cmp_faces);
    let boundary: Vec<Simplex> = faces.iter().filter(|s| !s.contains(origin)).cloned().collect();
    let mut neighbors = vec![Vec::new(); m];
    for s in faces.iter().filter(|s| s.dim() == 1) {
        let (a, b) = (s.indices[0], s.indices[1]);
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
    }
    Ok(StarTriangulation { dim: n, origin, maximal, faces, boundary, neighbors })
}

pub fn boundary_complex(t: &StarTriangulation) -> Vec<Simplex> {
    t.boundary.clone()
}

/// Barycentric coordinates of `y` with respect to the vertices of `s`.
pub fn barycentric(data: &NewtonData, s: &Simplex, y: &[Rat]) -> Option<Vec<Rat>> {
    let n = data.dim;
    // Rows: coordinates 0..n, then the affine row of ones.
    let mut a = vec![vec![Rat::zero(); s.indices.len()]; n + 1];
    for (col, &i) in s.indices.iter().enumerate() {
        for (row, &c) in data.points[i].0.iter().enumerate() {
            a[row][col] = exact::rat(c);
        }
        a[n][col] = exact::rat(1);
    }
    let mut rhs = y.to_vec();
    rhs.push(exact::rat(1));
    exact::solve(&a, &rhs)
}

/// The PL function affine on each maximal simplex interpolating `h`.
pub fn pl_extension_eval(data: &NewtonData, t: &StarTriangulation, y: &[Rat]) -> Result<Rat, TriangulationError> {
    for s in &t.maximal {
        if let Some(lam) = barycentric(data, s, y) {
            if lam.iter().all(|l| !l.is_negative()) {
                return Ok(lam.iter().zip(&s.indices).fold(Rat::zero(), |acc, (l, &i)| acc + l * &data.heights[i]));
            }
        }
    }
    Err(TriangulationError::PointOutsideQ)
}

/// Euclidean volume of an `n`-simplex, exact.
pub fn simplex_volume(data: &NewtonData, s: &Simplex) -> Rat {
    let base = data.points[s.indices[0]].as_rat();
    let rows: Vec<Vec<Rat>> = s.indices[1..]
        .iter()
        .map(|&i| data.points[i].as_rat().iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    exact::det(&rows).abs() / exact::rat(exact::factorial(data.dim) as i64)
}

/// Normalized volume `n!·vol(Q)`, summed over the maximal simplices.
pub fn normalized_volume(data: &NewtonData, t: &StarTriangulation) -> Rat {
    let total = t.maximal.iter().fold(Rat::zero(), |acc, s| acc + simplex_volume(data, s));
    total * exact::rat(exact::factorial(data.dim) as i64)
}
