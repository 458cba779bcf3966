//! The one-variable cutoff profile
//!
//! ```text
//! χ(x) = 1                                   x >= 0
//!        exp(-1/(x+2) + 1/2 - x/4 + x²/8)    -2 < x < 0
//!        0                                   x <= -2
//! ```
//!
//! Writing `χ = e^g` on `(-2, 0)`, every quantity below is expressed through
//! `g` and its derivatives, which are rational functions.

fn g(x: f64) -> f64 {
    -1.0 / (x + 2.0) + 0.5 - x / 4.0 + x * x / 8.0
}

fn g1(x: f64) -> f64 {
    let s = x + 2.0;
    1.0 / (s * s) - 0.25 + x / 4.0
}

fn g2(x: f64) -> f64 {
    let s = x + 2.0;
    -2.0 / (s * s * s) + 0.25
}

pub fn chi(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else if x <= -2.0 {
        0.0
    } else {
        g(x).exp()
    }
}

pub fn chi_d1(x: f64) -> f64 {
    if x >= 0.0 || x <= -2.0 {
        0.0
    } else {
        g1(x) * g(x).exp()
    }
}

pub fn chi_d2(x: f64) -> f64 {
    if x >= 0.0 || x <= -2.0 {
        0.0
    } else {
        let d = g1(x);
        (g2(x) + d * d) * g(x).exp()
    }
}

/// `log χ(x)`, `-∞` on `(-∞, -2]`.
pub fn log_chi(x: f64) -> f64 {
    if x >= 0.0 {
        0.0
    } else if x <= -2.0 {
        f64::NEG_INFINITY
    } else {
        g(x)
    }
}

/// First and second derivatives of `log χ` (zero where χ is locally constant).
pub fn log_chi_derivs(x: f64) -> (f64, f64) {
    if x >= 0.0 || x <= -2.0 {
        (0.0, 0.0)
    } else {
        (g1(x), g2(x))
    }
}

/// `(e^x χ)'' / (e^x χ) = g'' + (1 + g')²` on `(-2, 0)`.
pub fn exp_chi_ratio(x: f64) -> f64 {
    let d = 1.0 + g1(x);
    g2(x) + d * d
}

/// Degree-6 polynomial certifying convexity of `e^x χ` on `(-2, 0)`; it
/// equals `16 (x+2)^4 · exp_chi_ratio(x)`.
pub fn convexity_polynomial(x: f64) -> f64 {
    const C: [f64; 7] = [256.0, 608.0, 576.0, 288.0, 85.0, 14.0, 1.0];
    C.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_values() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(3.0), 1.0);
        assert_eq!(chi(-2.0), 0.0);
        assert!((chi(-1.0) - (-0.125f64).exp()).abs() < 1e-15);
        assert!((chi(-1.0) - 0.882497).abs() < 1e-6);
    }

    #[test]
    fn one_sided_limits_match() {
        assert!((chi(-1e-9) - 1.0).abs() < 1e-12);
        assert!(chi_d1(-1e-6).abs() < 1e-9);
        assert!(chi_d2(-1e-6).abs() < 1e-5);
        assert!(chi(-2.0 + 1e-3) < 1e-100);
    }

    #[test]
    fn derivatives_match_differences() {
        for k in 1..200 {
            let x = -2.0 + 0.01 * k as f64;
            let h = 1e-6;
            let fd1 = (chi(x + h) - chi(x - h)) / (2.0 * h);
            let fd2 = (chi_d1(x + h) - chi_d1(x - h)) / (2.0 * h);
            assert!((fd1 - chi_d1(x)).abs() < 1e-6, "x={x}");
            assert!((fd2 - chi_d2(x)).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn certificate_identity() {
        for k in 1..400 {
            let x = -2.0 + 0.005 * k as f64;
            let s = x + 2.0;
            let lhs = 16.0 * s.powi(4) * exp_chi_ratio(x);
            assert!((lhs - convexity_polynomial(x)).abs() < 1e-9 * (1.0 + lhs.abs()), "x={x}");
        }
        assert!((convexity_polynomial(-1.0) - 8.0).abs() < 1e-12);
        assert!((exp_chi_ratio(-1.0) - 0.5).abs() < 1e-12);
    }
}
