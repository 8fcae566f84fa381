//! Deterministic time functions entering process characteristics.
//!
//! The diffusion schedule, jump time weight `a(r)`, truncation level and jump
//! size weight are all members of a small family of closed-form integrable
//! functions. Integrals of products fall back to adaptive Simpson quadrature
//! (absolute tolerance `1e-10`, recursion depth 40) when no closed form is
//! available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-10;
/// Recursion cap for adaptive Simpson.
pub const QUAD_MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TimeFn {
    /// `f(r) = value`
    Constant { value: f64 },
    /// `f(r) = coeffs[0] + coeffs[1]·r + …`
    Poly { coeffs: Vec<f64> },
    /// `f(r) = coeff · r^exponent` (exponent > −1 so integrals from 0 exist)
    Power { coeff: f64, exponent: f64 },
    /// `f(r) = scale · ln(1 + r)`
    Log1p { scale: f64 },
}

impl TimeFn {
    pub fn constant(value: f64) -> Self {
        TimeFn::Constant { value }
    }

    pub fn poly(coeffs: Vec<f64>) -> Self {
        TimeFn::Poly { coeffs }
    }

    /// Rejects configurations whose integrals diverge or that take negative
    /// values on `[0, horizon]` (checked on a scan grid for general shapes).
    pub fn validate_nonnegative(&self, horizon: f64) -> Result<()> {
        match self {
            TimeFn::Constant { value } => {
                if *value < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "constant time function must be ≥ 0, got {value}"
                    )));
                }
            }
            TimeFn::Poly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidArgument(
                        "polynomial time function needs at least one coefficient".into(),
                    ));
                }
                for k in 0..=2048 {
                    let r = horizon * k as f64 / 2048.0;
                    if self.eval(r) < -1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "polynomial time function is negative at r = {r}"
                        )));
                    }
                }
            }
            TimeFn::Power { coeff, exponent } => {
                if *coeff < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "power time function must have coeff ≥ 0, got {coeff}"
                    )));
                }
                if *exponent <= -1.0 {
                    return Err(Error::Divergent(format!(
                        "power exponent {exponent} makes the integral from 0 diverge"
                    )));
                }
            }
            TimeFn::Log1p { scale } => {
                if *scale < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "log1p time function must have scale ≥ 0, got {scale}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            TimeFn::Constant { value } => *value,
            TimeFn::Poly { coeffs } => {
                // Horner
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }
            TimeFn::Power { coeff, exponent } => {
                if r == 0.0 && *exponent < 0.0 {
                    f64::INFINITY
                } else {
                    coeff * r.powf(*exponent)
                }
            }
            TimeFn::Log1p { scale } => scale * (1.0 + r).ln(),
        }
    }

    /// `∫_s^t f(r) dr` in closed form.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        debug_assert!(s <= t);
        match self {
            TimeFn::Constant { value } => value * (t - s),
            TimeFn::Poly { coeffs } => poly_integral(coeffs, s, t),
            TimeFn::Power { coeff, exponent } => {
                let p1 = exponent + 1.0;
                coeff * (t.powf(p1) - s.powf(p1)) / p1
            }
            TimeFn::Log1p { scale } => {
                let anti = |r: f64| (1.0 + r) * (1.0 + r).ln() - r;
                scale * (anti(t) - anti(s))
            }
        }
    }

    /// Polynomial coefficients when the function is exactly a polynomial.
    pub fn as_poly(&self) -> Option<Vec<f64>> {
        match self {
            TimeFn::Constant { value } => Some(vec![*value]),
            TimeFn::Poly { coeffs } => Some(coeffs.clone()),
            TimeFn::Power { coeff, exponent } => {
                let k = exponent.round();
                if (exponent - k).abs() < 1e-12 && (0.0..=32.0).contains(&k) {
                    let mut c = vec![0.0; k as usize + 1];
                    c[k as usize] = *coeff;
                    Some(c)
                } else {
                    None
                }
            }
            TimeFn::Log1p { .. } => None,
        }
    }

    /// True when the function is nondecreasing on `[0, ∞)` by structure.
    fn nondecreasing_by_structure(&self) -> bool {
        match self {
            TimeFn::Constant { .. } => true,
            TimeFn::Poly { coeffs } => coeffs.iter().skip(1).all(|c| *c >= 0.0),
            TimeFn::Power { coeff, exponent } => *coeff >= 0.0 && *exponent >= 0.0,
            TimeFn::Log1p { scale } => *scale >= 0.0,
        }
    }

    /// Supremum of `f` over `[s, t]`: endpoint for monotone shapes, dense
    /// scan otherwise.
    pub fn sup_on(&self, s: f64, t: f64) -> f64 {
        if self.nondecreasing_by_structure() {
            return self.eval(t);
        }
        let mut sup = f64::NEG_INFINITY;
        for k in 0..=4096 {
            let r = s + (t - s) * k as f64 / 4096.0;
            sup = sup.max(self.eval(r));
        }
        sup
    }

    /// First `r ∈ [0, hi]` with `f(r) ≥ level`, for nondecreasing `f`.
    /// `None` when the level is never reached on `[0, hi]`.
    pub fn first_time_at_least(&self, level: f64, hi: f64) -> Option<f64> {
        if self.eval(0.0) >= level {
            return Some(0.0);
        }
        if self.eval(hi) < level {
            return None;
        }
        match self {
            TimeFn::Constant { .. } => None, // handled by the two endpoint cases
            TimeFn::Log1p { scale } => Some(((level / scale).exp() - 1.0).min(hi)),
            _ => {
                let (mut lo, mut up) = (0.0, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + up);
                    if self.eval(mid) >= level {
                        up = mid;
                    } else {
                        lo = mid;
                    }
                    if up - lo <= 1e-14 * hi.max(1.0) {
                        break;
                    }
                }
                Some(up)
            }
        }
    }
}

/// `∫_s^t p(r) dr` for coefficient vector `p`.
fn poly_integral(coeffs: &[f64], s: f64, t: f64) -> f64 {
    let anti = |r: f64| {
        let mut acc = 0.0;
        for (k, c) in coeffs.iter().enumerate().rev() {
            acc = acc * r + c / (k as f64 + 1.0);
        }
        acc * r
    };
    anti(t) - anti(s)
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `∫_s^t f(r)·g(r) dr`, closed form when both factors are polynomial.
pub fn integral_of_product(f: &TimeFn, g: &TimeFn, s: f64, t: f64) -> Result<f64> {
    if let (Some(pf), Some(pg)) = (f.as_poly(), g.as_poly()) {
        return Ok(poly_integral(&poly_mul(&pf, &pg), s, t));
    }
    adaptive_simpson(&|r| f.eval(r) * g.eval(r), s, t)
}

/// `∫_s^t f(r)²·g(r) dr`, closed form when both factors are polynomial.
pub fn integral_of_sq_product(f: &TimeFn, g: &TimeFn, s: f64, t: f64) -> Result<f64> {
    if let (Some(pf), Some(pg)) = (f.as_poly(), g.as_poly()) {
        let sq = poly_mul(&pf, &pf);
        return Ok(poly_integral(&poly_mul(&sq, &pg), s, t));
    }
    adaptive_simpson(&|r| f.eval(r) * f.eval(r) * g.eval(r), s, t)
}

/// Adaptive Simpson quadrature with absolute tolerance [`QUAD_TOL`].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, QUAD_TOL, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Divergent(format!(
            "quadrature produced non-finite values on [{a}, {b}]"
        )));
    }
    // relative floor: refinement below machine precision of the panel value
    // cannot improve the estimate
    let floor = 4.0 * f64::EPSILON * (left + right).abs();
    if delta.abs() <= (15.0 * tol).max(floor) || depth == 0 {
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}
