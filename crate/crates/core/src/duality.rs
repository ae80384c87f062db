//! AR(∞) side of the model: `α`, `a = −α'` and `β`.
//!
//! `α` is determined by its Laplace transform `α̂(s) = 1/(s ĉ(s))`. For fBm
//! everything is a power law; otherwise `α` and `a` are recovered by
//! fixed-Talbot inversion and cached on a log grid.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, LrdError, Result};
use crate::model::LrdModel;
use crate::quad::{de, gk, lenient, QuadratureConfig, Tol, TABLE_TOL};
use crate::table::LogTable;

pub const DEFAULT_INVERSION_NODES: usize = 32;
pub const DEFAULT_STEHFEST_ORDER: usize = 14;
const CACHE_LO: f64 = 1e-10;
const CACHE_HI: f64 = 1e30;
const CACHE_PER_DECADE: usize = 16;
/// Relative accuracy expected of the inverted tables.
pub const INVERSION_ACCURACY: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InversionMethod {
    ClosedForm,
    NumericInversion,
}

#[derive(Debug)]
struct Cache {
    alpha: LogTable,
    a: LogTable,
}

/// The AR(∞) coefficient of a model.
#[derive(Debug)]
pub struct ArCoefficient {
    model: LrdModel,
    method: InversionMethod,
    inversion_nodes: usize,
    cache: Option<Cache>,
    beta: OnceLock<LogTable>,
}

/// Fixed-Talbot inversion of `F` at `t` with `m` contour nodes.
pub fn talbot<F>(f: F, t: f64, m: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let nodes = talbot_nodes(t, m);
    let values: Vec<Complex64> = nodes.iter().map(|n| f(n.s)).collect::<Result<_>>()?;
    Ok(talbot_sum(&nodes, &values, t, m))
}

#[derive(Debug, Clone, Copy)]
struct TalbotNode {
    s: Complex64,
    // 1 + iσ(θ), the contour derivative factor
    ds: Complex64,
}

fn talbot_nodes(t: f64, m: usize) -> Vec<TalbotNode> {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut out = Vec::with_capacity(m);
    out.push(TalbotNode {
        s: Complex64::new(r, 0.0),
        ds: Complex64::new(0.5, 0.0),
    });
    for k in 1..m {
        let th = k as f64 * PI / m as f64;
        let cot = th.cos() / th.sin();
        let sigma = th + (th * cot - 1.0) * cot;
        out.push(TalbotNode {
            s: Complex64::new(r * th * cot, r * th),
            ds: Complex64::new(1.0, sigma),
        });
    }
    out
}

fn talbot_sum(nodes: &[TalbotNode], values: &[Complex64], t: f64, m: usize) -> f64 {
    let r = nodes[0].s.re;
    let sum: f64 = nodes
        .iter()
        .zip(values)
        .map(|(n, v)| ((n.s * t).exp() * v * n.ds).re)
        .sum();
    r / m as f64 * sum
}

/// Gaver–Stehfest inversion of a real Laplace transform. Order `n` must be
/// even; only moderate accuracy is achievable in double precision.
pub fn gaver_stehfest<F>(f: F, t: f64, n: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if n % 2 != 0 || n == 0 {
        return invalid("Stehfest order must be even and positive");
    }
    let half = n / 2;
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    let ln2 = std::f64::consts::LN_2;
    let mut sum = 0.0;
    for k in 1..=n {
        let mut v = 0.0;
        for j in (k + 1) / 2..=k.min(half) {
            v += (j as f64).powi(half as i32) * fact(2 * j)
                / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        if (half + k) % 2 == 1 {
            v = -v;
        }
        sum += v * f(k as f64 * ln2 / t)?;
    }
    Ok(sum * ln2 / t)
}

/// `α̂(y) = 1 / (y ĉ(y))`.
pub fn alpha_hat(model: &LrdModel, y: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(1.0 / (y * model.laplace_c(y, q)?))
}

/// `(α(t), a(t))` by Talbot inversion, sharing the `ĉ` evaluations.
pub fn invert_alpha(model: &LrdModel, t: f64, m: usize, tol: Tol) -> Result<(f64, f64)> {
    let nodes = talbot_nodes(t, m);
    let c_hat: Vec<Complex64> = nodes
        .iter()
        .map(|n| model.c_hat(n.s, tol))
        .collect::<Result<_>>()?;
    let f_alpha: Vec<Complex64> = nodes
        .iter()
        .zip(&c_hat)
        .map(|(n, c)| 1.0 / (n.s * c))
        .collect();
    let f_a: Vec<Complex64> = c_hat.iter().map(|c| 1.0 / c).collect();
    Ok((
        talbot_sum(&nodes, &f_alpha, t, m),
        -talbot_sum(&nodes, &f_a, t, m),
    ))
}

impl ArCoefficient {
    /// Closed form for fBm, numerical inversion otherwise.
    pub fn new(model: &LrdModel) -> Result<Self> {
        if model.is_fbm() {
            Ok(ArCoefficient {
                model: model.clone(),
                method: InversionMethod::ClosedForm,
                inversion_nodes: DEFAULT_INVERSION_NODES,
                cache: None,
                beta: OnceLock::new(),
            })
        } else {
            Self::numeric(model, DEFAULT_INVERSION_NODES)
        }
    }

    /// Numerical inversion with `nodes` Talbot nodes per abscissa.
    pub fn numeric(model: &LrdModel, nodes: usize) -> Result<Self> {
        if model.is_fbm() {
            return invalid("fBm uses the closed form; invert `model.as_numeric()` instead");
        }
        if nodes < 8 {
            return invalid("at least 8 inversion nodes are required");
        }
        log::debug!("inverting α for H={} H0={}", model.h(), model.h0());
        let (alpha, a) = LogTable::build_pair(CACHE_LO, CACHE_HI, CACHE_PER_DECADE, |t| {
            invert_alpha(model, t, nodes, TABLE_TOL)
        })?;
        check_decreasing(&alpha)?;
        check_decreasing(&a)?;
        Ok(ArCoefficient {
            model: model.clone(),
            method: InversionMethod::NumericInversion,
            inversion_nodes: nodes,
            cache: Some(Cache { alpha, a }),
            beta: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &LrdModel {
        &self.model
    }

    pub fn method(&self) -> InversionMethod {
        self.method
    }

    pub fn inversion_nodes(&self) -> usize {
        self.inversion_nodes
    }

    /// `(t, a(t))` at the cached nodes; empty for the closed form.
    pub fn cache_nodes(&self) -> Vec<(f64, f64)> {
        self.cache
            .as_ref()
            .map(|c| c.a.nodes().collect())
            .unwrap_or_default()
    }

    /// `α(t) = ∫_t^∞ a`.
    pub fn alpha(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::INFINITY;
        }
        match &self.cache {
            None => {
                let d = self.model.d();
                t.powf(-d) / gamma(1.0 - d)
            }
            Some(c) => c.alpha.eval(t),
        }
    }

    pub fn a(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::INFINITY;
        }
        match &self.cache {
            None => {
                let d = self.model.d();
                d * t.powf(-d - 1.0) / gamma(1.0 - d)
            }
            Some(c) => c.a.eval(t),
        }
    }

    pub fn eval_a(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return invalid(format!("a(t) needs t > 0, got {t}"));
        }
        Ok(self.a(t))
    }

    /// `α(x) − α(x+h) = ∫_x^{x+h} a` without cancellation for small `h`.
    pub fn alpha_diff(&self, x: f64, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        if self.cache.is_none() {
            let d = self.model.d();
            return -self.alpha(x) * (-d * (h / x).ln_1p()).exp_m1();
        }
        if h >= 0.1 * x {
            return self.alpha(x) - self.alpha(x + h);
        }
        lenient(
            gk::integrate(|u| self.a(u), x, x + h, TABLE_TOL),
            "α difference",
        )
    }

    /// `β(t) = ∫₀^∞ c(v) a(t+v) dv` computed to the requested tolerance.
    pub fn eval_beta(&self, t: f64, q: &QuadratureConfig) -> Result<f64> {
        if !(t > 0.0) {
            return invalid(format!("β(t) needs t > 0, got {t}"));
        }
        match self.method {
            InversionMethod::ClosedForm => Ok(self.beta(t)),
            InversionMethod::NumericInversion => {
                self.beta_integral(t, q.tol_floor(INVERSION_ACCURACY))
            }
        }
    }

    fn beta_integral(&self, t: f64, tol: Tol) -> Result<f64> {
        let m = &self.model;
        let head = de::tanh_sinh(|v, _, _| m.c(v) * self.a(t + v), 0.0, t, tol)?;
        let tail = de::semi_infinite(|v| m.c(v) * self.a(t + v), t, t, tol)?;
        Ok(head.value + tail.value)
    }

    /// Fast `β(t)`: closed form for fBm, cached table otherwise.
    pub fn beta(&self, t: f64) -> f64 {
        match self.method {
            InversionMethod::ClosedForm => {
                let d = self.model.d();
                (PI * d).sin() / (PI * t)
            }
            InversionMethod::NumericInversion => self
                .beta
                .get_or_init(|| {
                    let tol = QuadratureConfig::default().tol_floor(INVERSION_ACCURACY);
                    LogTable::build(CACHE_LO, CACHE_HI, CACHE_PER_DECADE, |t| {
                        Ok(lenient(self.beta_integral(t, tol), "β table"))
                    })
                    .expect("β is positive on the table range")
                })
                .eval(t),
        }
    }

    /// `y ĉ(y) α̂(y) − 1` with `α̂` recomputed from the tabulated `α`.
    pub fn duality_residual(&self, y: f64, q: &QuadratureConfig) -> Result<f64> {
        let tol = q.tol_floor(INVERSION_ACCURACY);
        let scale = 1.0 / y;
        let head = de::tanh_sinh(|t, _, _| (-y * t).exp() * self.alpha(t), 0.0, scale, tol)?;
        let tail = de::semi_infinite(|t| (-y * t).exp() * self.alpha(t), scale, scale, tol)?;
        let alpha_hat = head.value + tail.value;
        Ok(y * self.model.laplace_c(y, q)? * alpha_hat - 1.0)
    }
}

fn check_decreasing(table: &LogTable) -> Result<()> {
    let nodes: Vec<(f64, f64)> = table.nodes().collect();
    let bad: Vec<f64> = nodes
        .windows(2)
        .filter(|w| !(w[1].1 < w[0].1))
        .map(|w| w[1].0)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(LrdError::InversionUnstable { nodes: bad })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn talbot_inverts_power() {
        // L[t^{−1/4}] = Γ(3/4) s^{−3/4}
        for &t in &[0.01, 1.0, 50.0] {
            let v = talbot(|s| Ok(s.powf(-0.75)), t, 32).unwrap();
            let exact = t.powf(-0.25) / gamma(0.75);
            assert!((v / exact - 1.0).abs() < 1e-9, "{t}: {v} {exact}");
        }
    }

    #[test]
    fn stehfest_inverts_exponential() {
        // L[e^{−t}] = 1/(s+1)
        let v = gaver_stehfest(|s| Ok(1.0 / (s + 1.0)), 1.0, 14).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-5, "{v}");
        assert!(gaver_stehfest(|s| Ok(s), 1.0, 7).is_err());
    }

    #[test]
    fn closed_form_values() {
        let m = LrdModel::fbm(0.75).unwrap();
        let ar = ArCoefficient::new(&m).unwrap();
        assert_eq!(ar.method(), InversionMethod::ClosedForm);
        assert!((ar.a(1.0) - 0.25 / gamma(0.75)).abs() < 1e-14);
        assert!((ar.beta(2.0) - 0.112_539_539_519_638_7).abs() < 1e-12);
        assert!(
            (alpha_hat(&m, 4.0, &QuadratureConfig::default()).unwrap() - 0.353_553_390_593_273_8)
                .abs()
                < 1e-12
        );
        assert!(ArCoefficient::numeric(&m, 32).is_err());
    }

    #[test]
    fn alpha_diff_is_accurate() {
        let m = LrdModel::fbm(0.6).unwrap();
        let ar = ArCoefficient::new(&m).unwrap();
        let direct = gk::integrate(|u| ar.a(u), 10.0, 10.001, TABLE_TOL)
            .unwrap()
            .value;
        assert!((ar.alpha_diff(10.0, 0.001) / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_inversion_reproduces_fbm() {
        let m = LrdModel::fbm(0.75).unwrap();
        let closed = ArCoefficient::new(&m).unwrap();
        let num = ArCoefficient::numeric(&m.as_numeric(), 32).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            let t = 10f64.powf(-2.0 + 0.1 * i as f64 + 0.013);
            worst = worst.max((num.a(t) / closed.a(t) - 1.0).abs());
            worst = worst.max((num.alpha(t) / closed.alpha(t) - 1.0).abs());
        }
        assert!(worst < 1e-6, "{worst}");
        let q = QuadratureConfig::default();
        let b = num.eval_beta(2.0, &q).unwrap();
        assert!((b / closed.beta(2.0) - 1.0).abs() < 1e-6, "{b}");
        assert!(num.duality_residual(3.0, &q).unwrap().abs() < 1e-6);
    }
}
