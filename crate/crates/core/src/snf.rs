//! Critical subtori `{θ : ⟨α,θ⟩ ≡ Θ(α) mod 2π, α ∈ τ}` via the Smith
//! normal form of the vertex matrix.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::lattice::NewtonData;
use crate::triangulation::Simplex;

/// `U·M·V = D` with `U`, `V` unimodular and `D` diagonal, `d_i | d_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub u: Vec<Vec<i64>>,
    pub v: Vec<Vec<i64>>,
    pub v_inv: Vec<Vec<i64>>,
    pub diag: Vec<i64>,
    pub rank: usize,
}

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn smith_normal_form(m: &[Vec<i64>], cols: usize) -> SmithForm {
    let rows = m.len();
    let mut a: Vec<Vec<i64>> = m.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut v_inv = identity(cols);

    // Column operations keep v (columns) and v_inv (rows) in sync.
    let col_add = |a: &mut Vec<Vec<i64>>, v: &mut Vec<Vec<i64>>, vi: &mut Vec<Vec<i64>>, dst: usize, src: usize, q: i64| {
        for row in a.iter_mut() {
            row[dst] += q * row[src];
        }
        for row in v.iter_mut() {
            row[dst] += q * row[src];
        }
        let s = vi[dst].clone();
        for (x, y) in vi[src].iter_mut().zip(&s) {
            *x -= q * y;
        }
    };
    let col_swap = |a: &mut Vec<Vec<i64>>, v: &mut Vec<Vec<i64>>, vi: &mut Vec<Vec<i64>>, i: usize, j: usize| {
        for row in a.iter_mut() {
            row.swap(i, j);
        }
        for row in v.iter_mut() {
            row.swap(i, j);
        }
        vi.swap(i, j);
    };
    let row_add = |a: &mut Vec<Vec<i64>>, u: &mut Vec<Vec<i64>>, dst: usize, src: usize, q: i64| {
        let s = a[src].clone();
        for (x, y) in a[dst].iter_mut().zip(&s) {
            *x += q * y;
        }
        let s = u[src].clone();
        for (x, y) in u[dst].iter_mut().zip(&s) {
            *x += q * y;
        }
    };

    let mut t = 0;
    while t < rows.min(cols) {
        // Smallest nonzero entry of the trailing block goes to (t, t).
        let pivot = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| a[i][j] != 0)
            .min_by_key(|&(i, j)| a[i][j].abs());
        let Some((pi, pj)) = pivot else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        col_swap(&mut a, &mut v, &mut v_inv, t, pj);
        let mut clean = true;
        for i in t + 1..rows {
            let q = a[i][t] / a[t][t];
            if q != 0 {
                row_add(&mut a, &mut u, i, t, -q);
            }
            clean &= a[i][t] == 0;
        }
        for j in t + 1..cols {
            let q = a[t][j] / a[t][t];
            if q != 0 {
                col_add(&mut a, &mut v, &mut v_inv, j, t, -q);
            }
            clean &= a[t][j] == 0;
        }
        if !clean {
            continue;
        }
        // Enforce divisibility by folding an offending row into row t.
        let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % a[t][t] != 0));
        if let Some(i) = bad {
            row_add(&mut a, &mut u, t, i, 1);
            continue;
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
        t += 1;
    }
    let diag: Vec<i64> = (0..rows.min(cols)).map(|i| a[i][i]).take_while(|&d| d != 0).collect();
    SmithForm { u, v, v_inv, rank: diag.len(), diag }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtorusDescription {
    pub simplex: String,
    pub dimension: usize,
    pub components: usize,
    /// One `θ ∈ [0, 2π)^n` per component.
    pub representatives: Vec<Vec<f64>>,
    /// Integer vectors spanning the tangent lattice.
    pub basis: Vec<Vec<i64>>,
    pub invariant_factors: Vec<i64>,
    #[serde(skip)]
    form: Option<SmithForm>,
    #[serde(skip)]
    rhs: Vec<f64>,
}

impl SubtorusDescription {
    /// Index of the component containing `θ`, or `None` if `θ` is not on
    /// the subtorus (tolerance `1e-6` in units of `2π`).
    pub fn component_of(&self, theta: &[f64]) -> Option<usize> {
        let form = self.form.as_ref()?;
        let mut index = 0;
        for (i, &d) in form.diag.iter().enumerate() {
            let phi: f64 = form.v_inv[i].iter().zip(theta).map(|(a, t)| *a as f64 * t).sum();
            let x = (d as f64 * phi - self.rhs[i]) / TAU;
            if (x - x.round()).abs() > 1e-6 {
                return None;
            }
            let m = (x.round() as i64).rem_euclid(d);
            index = index * d as usize + m as usize;
        }
        Some(index)
    }

    /// Coordinates of `θ` along `basis`, in `[0, 2π)`; defined up to the
    /// choice of representative and only meaningful on the subtorus.
    pub fn tangent_coordinates(&self, theta: &[f64]) -> Vec<f64> {
        let Some(form) = self.form.as_ref() else { return Vec::new() };
        (form.rank..form.v_inv.len())
            .map(|i| wrap(form.v_inv[i].iter().zip(theta).map(|(a, t)| *a as f64 * t).sum()))
            .collect()
    }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if TAU - y < 1e-12 { 0.0 } else { y }
}

/// Subtorus for the rows of `m` (linearly independent) with right-hand
/// sides `phases`.
pub fn subtorus(label: String, m: &[Vec<i64>], phases: &[f64], n: usize) -> SubtorusDescription {
    let form = smith_normal_form(m, n);
    let k = form.rank;
    let rhs: Vec<f64> = form.u.iter().take(k).map(|row| row.iter().zip(phases).map(|(a, p)| *a as f64 * p).sum()).collect();
    let mut representatives = Vec::new();
    let total: i64 = form.diag.iter().product();
    for idx in 0..total {
        // Mixed radix digits, most significant first, matching `component_of`.
        let mut digits = vec![0i64; k];
        let mut r = idx;
        for i in (0..k).rev() {
            digits[i] = r % form.diag[i];
            r /= form.diag[i];
        }
        let phi: Vec<f64> = (0..n)
            .map(|i| if i < k { (rhs[i] + TAU * digits[i] as f64) / form.diag[i] as f64 } else { 0.0 })
            .collect();
        let theta: Vec<f64> = (0..n).map(|r| wrap(form.v[r].iter().zip(&phi).map(|(a, p)| *a as f64 * p).sum())).collect();
        representatives.push(theta);
    }
    let basis = (k..n).map(|j| (0..n).map(|r| form.v[r][j]).collect()).collect();
    SubtorusDescription {
        simplex: label,
        dimension: n - k,
        components: total as usize,
        representatives,
        basis,
        invariant_factors: form.diag.clone(),
        form: Some(form),
        rhs,
    }
}

/// `T_{τ,Θ}` for a simplex of `∂T` (the origin is never a vertex of it).
pub fn critical_torus(data: &NewtonData, tau: &Simplex) -> SubtorusDescription {
    let o = data.origin();
    let idx: Vec<usize> = tau.indices.iter().copied().filter(|&i| i != o).collect();
    let m: Vec<Vec<i64>> = idx.iter().map(|&i| data.points[i].0.clone()).collect();
    let phases: Vec<f64> = idx.iter().map(|&i| data.phases[i]).collect();
    subtorus(tau.label(), &m, &phases, data.dim)
}
