//! Double-exponential quadrature.
//!
//! [`tanh_sinh`] integrates over a finite interval with algebraic endpoint
//! singularities; [`exp_sinh`] over `[a, ∞)` with algebraic decay. Both hand
//! the integrand the distance to the nearby endpoint(s) so that factors such
//! as `(b − x)^p` can be evaluated without cancellation.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{Estimate, Tol};
use crate::error::{LrdError, Result};

const BASE_STEP: f64 = 0.5;
const MAX_LEVEL: u32 = 10;
const MIN_LEVEL: u32 = 3;
const TANH_SINH_TMAX: f64 = 6.1;
const EXP_SINH_TMAX: f64 = 6.8;
// integrand magnitude below which a node is treated as past the tail
const TAIL_CUTOFF: f64 = 1e-20;

fn estimate((value, error, evaluations): (f64, f64, usize)) -> Estimate {
    Estimate {
        value,
        error,
        evaluations,
    }
}

/// Tanh-sinh rule on `[a, b]`.
///
/// The integrand receives `(x, x − a, b − x)` with the two distances computed
/// without cancellation near the respective endpoint.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::zero());
    }
    tanh_sinh_generic(f, a, b, tol).map(estimate)
}

/// Complex-valued [`tanh_sinh`].
pub fn tanh_sinh_complex<F>(f: F, a: f64, b: f64, tol: Tol) -> Result<Complex64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    if a == b {
        return Ok(Complex64::ZERO);
    }
    tanh_sinh_generic(f, a, b, tol).map(|r| r.0)
}

fn tanh_sinh_generic<T, F>(f: F, a: f64, b: f64, tol: Tol) -> Result<(T, f64, usize)>
where
    T: DeValue,
    F: Fn(f64, f64, f64) -> T,
{
    let (a, b, sign) = if a > b { (b, a, -1.0) } else { (a, b, 1.0) };
    let len = b - a;
    let eval = |t: f64| -> Option<(T, bool)> {
        let u = FRAC_PI_2 * t.abs().sinh();
        let q = (-2.0 * u).exp();
        let delta = len * q / (1.0 + q);
        if delta < f64::MIN_POSITIVE * 1e10 || delta <= 0.0 {
            return None;
        }
        let w = len * std::f64::consts::PI * t.cosh() * q / ((1.0 + q) * (1.0 + q));
        let (x, dl, dr) = if t > 0.0 {
            (b - delta, len - delta, delta)
        } else if t < 0.0 {
            (a + delta, delta, len - delta)
        } else {
            (a + 0.5 * len, 0.5 * len, 0.5 * len)
        };
        let extreme = delta < len * 1e-100;
        let v = if sign > 0.0 {
            f(x, dl, dr) * w
        } else {
            f(x, dr, dl) * -w
        };
        Some((v, extreme))
    };
    de_sum(eval, -TANH_SINH_TMAX, TANH_SINH_TMAX, tol)
}

/// Exp-sinh rule on `[a, ∞)`; `scale` sets where the node density is
/// centred (`x − a ≈ scale`). The integrand receives `(x, x − a)`.
pub fn exp_sinh<F: Fn(f64, f64) -> f64>(f: F, a: f64, scale: f64, tol: Tol) -> Result<Estimate> {
    exp_sinh_generic(f, a, scale, tol).map(estimate)
}

/// Complex-valued [`exp_sinh`].
pub fn exp_sinh_complex<F>(f: F, a: f64, scale: f64, tol: Tol) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    exp_sinh_generic(f, a, scale, tol).map(|r| r.0)
}

fn exp_sinh_generic<T, F>(f: F, a: f64, scale: f64, tol: Tol) -> Result<(T, f64, usize)>
where
    T: DeValue,
    F: Fn(f64, f64) -> T,
{
    let eval = |t: f64| -> Option<(T, bool)> {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let dl = scale * e;
        if !(dl > f64::MIN_POSITIVE * 1e10) || !dl.is_finite() {
            return None;
        }
        let w = scale * FRAC_PI_2 * t.cosh() * e;
        let extreme = !(1e-100 * scale..=1e100 * scale).contains(&dl);
        Some((f(a + dl, dl) * w, extreme))
    };
    de_sum(eval, -EXP_SINH_TMAX, EXP_SINH_TMAX, tol)
}

/// Values the double-exponential sums can accumulate.
pub trait DeValue:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
    const ZERO: Self;
    fn norm(self) -> f64;
}

impl DeValue for f64 {
    const ZERO: Self = 0.0;
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl DeValue for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

fn de_sum<T: DeValue, G>(eval: G, tmin: f64, tmax: f64, tol: Tol) -> Result<(T, f64, usize)>
where
    G: Fn(f64) -> Option<(T, bool)>,
{
    let evaluations = Cell::new(0usize);
    let bad = Cell::new(false);
    let take = |t: f64| -> T {
        match eval(t) {
            None => T::ZERO,
            Some((v, extreme)) => {
                evaluations.set(evaluations.get() + 1);
                if v.norm().is_finite() {
                    v
                } else {
                    if !extreme {
                        bad.set(true);
                    }
                    T::ZERO
                }
            }
        }
    };

    // level 0 fixes the effective truncation of both tails
    let h0 = BASE_STEP;
    let mut total = take(0.0);
    let mut peak = total.norm();
    let mut t_hi = 0.0;
    let mut quiet = 0;
    let mut k = 1;
    while (k as f64) * h0 <= tmax {
        let t = k as f64 * h0;
        let v = take(t);
        total = total + v;
        peak = peak.max(v.norm());
        t_hi = t;
        if v.norm() <= TAIL_CUTOFF * peak {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        k += 1;
    }
    let mut t_lo = 0.0;
    quiet = 0;
    k = 1;
    while (k as f64) * h0 <= -tmin {
        let t = -(k as f64) * h0;
        let v = take(t);
        total = total + v;
        peak = peak.max(v.norm());
        t_lo = t;
        if v.norm() <= TAIL_CUTOFF * peak {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        k += 1;
    }
    let mut estimate = total * h0;
    let mut error = f64::INFINITY;

    let mut h = h0;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut fresh = T::ZERO;
        let mut t = t_lo + h;
        while t < t_hi {
            fresh = fresh + take(t);
            t += 2.0 * h;
        }
        total = total + fresh;
        let next = total * h;
        error = (next - estimate).norm();
        estimate = next;
        if bad.get() {
            break;
        }
        if level >= MIN_LEVEL && error <= tol.target(estimate.norm()) {
            return Ok((estimate, error, evaluations.get()));
        }
    }
    Err(LrdError::Quadrature {
        estimate: estimate.norm(),
        error: if bad.get() { f64::NAN } else { error },
        target: tol.target(estimate.norm()),
        evaluations: evaluations.get(),
    })
}

/// Tanh-sinh for an integrand that only needs `x`.
pub fn finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    tanh_sinh(|x, _, _| f(x), a, b, tol)
}

/// Exp-sinh on `[a, ∞)` for an integrand that only needs `x`.
pub fn semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, tol: Tol) -> Result<Estimate> {
    exp_sinh(|x, _| f(x), a, scale, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tol {
        Tol {
            rel: 1e-12,
            abs: 1e-300,
            max_subdivisions: 100,
        }
    }

    #[test]
    fn strong_left_singularity() {
        // ∫₀^1 x^{-0.95} dx = 20
        let e = tanh_sinh(|_, l, _| l.powf(-0.95), 0.0, 1.0, tol()).unwrap();
        assert!((e.value - 20.0).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn right_singularity_uses_distance() {
        // ∫₀^1 (1−x)^{-0.6} dx = 2.5 on a shifted interval
        let e = tanh_sinh(|_, _, r| r.powf(-0.6), 1e6, 1e6 + 1.0, tol()).unwrap();
        assert!((e.value - 2.5).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn exp_sinh_algebraic_tail() {
        // ∫₀^∞ dx/(1+x)^{1.1} = 10
        let e = exp_sinh(|x, _| (1.0 + x).powf(-1.1), 0.0, 1.0, tol()).unwrap();
        assert!((e.value - 10.0).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        // ∫₀^∞ x^{-0.25} e^{-x} dx = Γ(0.75)
        let e = semi_infinite(|x| x.powf(-0.25) * (-x).exp(), 0.0, 1.0, tol()).unwrap();
        assert!(
            (e.value - 1.225_416_702_465_177_6).abs() < 1e-12,
            "{}",
            e.value
        );
    }
}
