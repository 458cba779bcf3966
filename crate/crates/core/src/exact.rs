//! Exact rational linear algebra for the combinatorial parts of the pipeline
//! (lifted hulls, face lattices, polar duals). Sizes are tiny (n <= 4), so
//! everything is plain Gaussian elimination over `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float (binary expansion, no rounding).
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Parses `"3"`, `"-2/7"` or a decimal like `"0.25"` exactly.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rat::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_abs = int.trim_start_matches(['-', '+']);
        let int_part: BigInt = if int_abs.is_empty() { BigInt::zero() } else { int_abs.parse().ok()? };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let frac_part: BigInt = frac.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = Rat::new(int_part * &scale + frac_part, scale);
        return Some(if neg { -mag } else { mag });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rat::from_integer(n))
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_int(a: &[Rat], b: &[i64]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, &y)| acc + x * rat(y))
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let (pivot_row, other) = if i < r {
                    let (a, b) = m.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for (x, y) in other.iter_mut().zip(pivot_row.iter()) {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rat>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : rows * x = 0}`.
pub fn nullspace(rows: &[Vec<Rat>], cols: usize) -> Vec<Vec<Rat>> {
    if rows.is_empty() {
        return (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
            .collect();
    }
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); cols];
            v[f] = Rat::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Solves the square system `a x = b`; `None` when singular.
pub fn solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

pub fn det(a: &[Vec<Rat>]) -> Rat {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rat::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                let pivot_row = m[c].clone();
                for (x, y) in m[i].iter_mut().zip(pivot_row.iter()) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    d
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub fn abs(r: &Rat) -> Rat {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rat("3"), Some(rat(3)));
        assert_eq!(parse_rat("-2/4"), Some(rat_frac(-1, 2)));
        assert_eq!(parse_rat("0.25"), Some(rat_frac(1, 4)));
        assert_eq!(parse_rat("-1.5"), Some(rat_frac(-3, 2)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("x"), None);
    }

    #[test]
    fn solve_and_det() {
        let a = vec![vec![rat(2), rat(1)], vec![rat(1), rat(3)]];
        assert_eq!(det(&a), rat(5));
        let x = solve(&a, &[rat(3), rat(4)]).unwrap();
        assert_eq!(x, vec![rat(1), rat(1)]);
        let sing = vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)]];
        assert!(solve(&sing, &[rat(1), rat(1)]).is_none());
        assert_eq!(det(&sing), rat(0));
    }

    #[test]
    fn nullspace_of_plane() {
        let rows = vec![vec![rat(1), rat(1), rat(1)]];
        let ns = nullspace(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(dot(&rows[0], v).is_zero());
        }
        assert_eq!(rank(&rows), 1);
    }
}
