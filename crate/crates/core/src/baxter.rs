//! Both sides of the continuous-time Baxter inequality, their limiting ratio
//! and the series identity behind the limit constant.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::duality::ArCoefficient;
use crate::error::{invalid, LrdError, Result};
use crate::kernels::{KernelTable, QMC_POINTS};
use crate::model::TABLE_ACCURACY;
use crate::prediction::{psi_tail_mass, FinitePredictor, PredictionWindow, Predictor};
use crate::quad::{de, qmc, ErrorSlot, Estimate, LogGrid, QuadratureConfig, Tol};

/// Deepest `f_m` evaluated by nested quadrature.
pub const MAX_ITERATED_DEPTH: usize = 4;
/// Deepest `f_m` evaluated at all.
pub const MAX_F_DEPTH: usize = 8;
const QMC_REPLICATES: usize = 16;

fn tol_for(ar: &ArCoefficient, q: &QuadratureConfig) -> Tol {
    if ar.model().is_fbm() {
        q.tol()
    } else {
        q.tol_floor(TABLE_ACCURACY)
    }
}

/// `∫_{−t0}^{t1} ds ∫₀^{t3} {h(s+t0,u) − b(t1−s,u)} du`.
///
/// Integrating the correction over `s` first leaves
/// `Σ_i w_i L_i Σ_n Ψ_n,i` with `L_i = ∫₀^{u_i} c(v) {α(u_i−v) − α(u_i−v+t2)} dv`.
pub fn baxter_lhs(pred: &FinitePredictor, q: &QuadratureConfig) -> Result<f64> {
    let table = pred.table();
    let ar = table.ar();
    let m = ar.model();
    let t2 = pred.window().t2();
    let tol = tol_for(ar, q);
    let weights: Vec<f64> = table
        .nodes()
        .par_iter()
        .zip(table.weights())
        .map(|(&u, &w)| {
            let l = de::tanh_sinh(|_, v, dr| m.c(v) * ar.alpha_diff(dr, t2), 0.0, u, tol)?;
            Ok(w * l.value)
        })
        .collect::<Result<_>>()?;
    let sum = pred.psi_total();
    Ok(weights.iter().zip(sum.iter()).map(|(a, b)| a * b).sum())
}

/// `∫_{−∞}^{−t0} ds ∫₀^{t3} b(t1−s,u) du`, the infinite-past coefficient mass
/// outside the window.
pub fn baxter_rhs(ar: &ArCoefficient, w: &PredictionWindow, q: &QuadratureConfig) -> Result<f64> {
    w.validate()?;
    psi_tail_mass(ar, w.t2(), w.t3(), q)
}

/// `∫₀¹ s^{−d−1}{(1−s)^{−d} − 1} ds`.
pub fn limit_integral(d: f64, q: &QuadratureConfig) -> Result<f64> {
    if !(d > 0.0 && d < 0.5) {
        return invalid(format!("d must lie in (0, 1/2), got {d}"));
    }
    let f = |s: f64, dl: f64, dr: f64| {
        let bracket = if s < 0.5 {
            (-d * (-dl).ln_1p()).exp_m1()
        } else {
            dr.powf(-d) - 1.0
        };
        dl.powf(-d - 1.0) * bracket
    };
    Ok(de::tanh_sinh(f, 0.0, 1.0, q.tol())?.value)
}

/// `Γ(−d)Γ(1−d)/Γ(1−2d) + 1/d`, the same integral by analytic continuation
/// of the Beta function.
pub fn limit_integral_gamma(d: f64) -> f64 {
    gamma(-d) * gamma(1.0 - d) / gamma(1.0 - 2.0 * d) + 1.0 / d
}

/// Limit of `baxter_lhs / baxter_rhs` as `t0 → ∞`.
pub fn limit_constant(d: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(d * limit_integral(d, q)?)
}

/// `∫₀^{t3} g(s) ds`.
fn g_integral(ar: &ArCoefficient, t3: f64, q: &QuadratureConfig) -> Result<f64> {
    let m = ar.model();
    if m.is_fbm() {
        let d = m.d();
        return Ok(t3.powf(d + 1.0) / gamma(d + 2.0));
    }
    Ok(de::finite(|s| m.g(s), 0.0, t3, tol_for(ar, q))?.value)
}

/// Leading-order large-`t0` approximation of [`baxter_lhs`]:
/// `t2 a(t2) ∫₀^{t3} g · ∫₀¹ s^{−d−1}{(1−s)^{−d} − 1} ds`.
pub fn lhs_asymptote(ar: &ArCoefficient, w: &PredictionWindow, q: &QuadratureConfig) -> Result<f64> {
    let t2 = w.t2();
    Ok(t2 * ar.a(t2) * g_integral(ar, w.t3(), q)? * limit_integral(ar.model().d(), q)?)
}

/// `f_2(u) = ln(1+u) / (π² u)`.
fn f2(u: f64) -> f64 {
    if u < 1e-8 {
        (1.0 - 0.5 * u) / (PI * PI)
    } else {
        u.ln_1p() / (PI * PI * u)
    }
}

fn check_u(m: usize, u: f64) -> Result<()> {
    if m == 0 || !(u >= 0.0) {
        return invalid(format!("f_m needs m ≥ 1 and u ≥ 0, got m={m}, u={u}"));
    }
    Ok(())
}

/// `f_1(u) = 1/(π(1+u))`, `f_m(u) = (1/π) ∫₀^∞ f_{m−1}(s)/(1+s+u) ds`.
pub fn eval_f_m(m: usize, u: f64, q: &QuadratureConfig) -> Result<f64> {
    check_u(m, u)?;
    match m {
        1 => Ok(1.0 / (PI * (1.0 + u))),
        2 => Ok(f2(u)),
        _ if m <= MAX_ITERATED_DEPTH => {
            let slot = ErrorSlot::default();
            let tol = if m == 3 { q.tol() } else { q.inner_tol() };
            let r = de::semi_infinite(
                |s| slot.value(eval_f_m(m - 1, s, q)) / (1.0 + s + u),
                0.0,
                1.0 + u,
                tol,
            );
            Ok(slot.finish(r)?.value / PI)
        }
        _ if m <= MAX_F_DEPTH => Ok(f_m_qmc(m, u, QMC_POINTS, 0xf00d ^ m as u64)?.value),
        _ => Err(LrdError::UnsupportedDepth {
            depth: m,
            max: MAX_F_DEPTH,
        }),
    }
}

/// `f_m` as an `(m−2)`-dimensional integral of `f_2` against the chain
/// `Π 1/(1+s_j+s_{j+1})`, each `s = x/(1−x)`.
pub fn f_m_qmc(m: usize, u: f64, points: usize, seed: u64) -> Result<Estimate> {
    check_u(m, u)?;
    if m < 3 || m > MAX_F_DEPTH {
        return Err(LrdError::UnsupportedDepth {
            depth: m,
            max: MAX_F_DEPTH,
        });
    }
    let dim = m - 2;
    let f = move |x: &[f64]| -> f64 {
        let mut prev = u;
        let mut prod = 1.0;
        for &xi in x {
            let s = xi / (1.0 - xi);
            prod *= 1.0 / ((1.0 + s + prev) * (1.0 - xi) * (1.0 - xi));
            prev = s;
        }
        prod * f2(prev)
    };
    let est = qmc::integrate_cube(f, dim, points / QMC_REPLICATES, QMC_REPLICATES, seed);
    let scale = PI.powi(-(dim as i32));
    Ok(Estimate {
        value: est.value * scale,
        error: est.error * scale,
        evaluations: est.evaluations,
    })
}

/// `f_1, …, f_M` on a log grid in `u`, iterating the discretized operator.
#[derive(Debug, Clone)]
pub struct FSeriesGrid {
    pub grid: LogGrid,
    /// `values[m−1][i] = f_m(u_i)`.
    pub values: Vec<Vec<f64>>,
}

impl FSeriesGrid {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 {
            return invalid("depth must be ≥ 1");
        }
        let grid = LogGrid::new((-40f64).exp(), 60f64.exp(), 0.2);
        let mut values = vec![grid.nodes.iter().map(|&u| 1.0 / (PI * (1.0 + u))).collect::<Vec<_>>()];
        for _ in 1..depth {
            let prev = values.last().unwrap();
            let next = grid
                .nodes
                .par_iter()
                .map(|&u| {
                    let s: f64 = grid
                        .nodes
                        .iter()
                        .zip(&grid.weights)
                        .zip(prev)
                        .map(|((&x, &w), &f)| w * f / (1.0 + x + u))
                        .sum();
                    s / PI
                })
                .collect();
            values.push(next);
        }
        Ok(FSeriesGrid { grid, values })
    }

    /// `J_m = ∫₀^∞ f_m(u) ∫₀¹ (τ+u)^{−d−1} dτ du`.
    pub fn j(&self, m: usize, d: f64) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.values[m - 1])
            .map(|((&u, &w), &f)| w * f * tau_integral(u, d))
            .sum()
    }
}

/// `∫₀¹ (τ+u)^{−d−1} dτ = {u^{−d} − (1+u)^{−d}} / d`.
fn tau_integral(u: f64, d: f64) -> f64 {
    u.powf(-d) * -(-d * (1.0 / u).ln_1p()).exp_m1() / d
}

/// Partial sum `Σ_{m≤M} sin^m(πd) J_m` and the target integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FSeriesCheck {
    pub partial_sum: f64,
    pub target: f64,
}

impl FSeriesCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.partial_sum / self.target - 1.0).abs()
    }
}

pub fn f_series_check(d: f64, terms: usize, q: &QuadratureConfig) -> Result<FSeriesCheck> {
    if terms == 0 || terms > MAX_F_DEPTH {
        return Err(LrdError::UnsupportedDepth {
            depth: terms,
            max: MAX_F_DEPTH,
        });
    }
    let target = limit_integral(d, q)?;
    let fs = FSeriesGrid::new(terms)?;
    let sin = (PI * d).sin();
    let partial_sum = (1..=terms).map(|m| sin.powi(m as i32) * fs.j(m, d)).sum();
    Ok(FSeriesCheck { partial_sum, target })
}

/// Both sides over a list of past horizons for a fixed `t1`, `T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BaxterSweep {
    pub d: f64,
    pub t1: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub t0_values: Vec<f64>,
    pub lhs_values: Vec<f64>,
    pub rhs_values: Vec<f64>,
    pub limit_constant: f64,
}

impl BaxterSweep {
    pub fn run(ar: Arc<ArCoefficient>, t1: f64, big_t: f64, t0_values: &[f64], q: &QuadratureConfig) -> Result<Self> {
        if t0_values.windows(2).any(|p| !(p[1] > p[0])) || t0_values.is_empty() {
            return invalid("t0 values must be increasing and nonempty");
        }
        let pairs: Vec<(f64, f64)> = t0_values
            .par_iter()
            .map(|&t0| {
                let w = PredictionWindow::new(t0, t1, big_t)?;
                let table = Arc::new(KernelTable::build(ar.clone(), w.t2(), q)?);
                let pred = FinitePredictor::new(table, w, q)?;
                Ok((baxter_lhs(&pred, q)?, baxter_rhs(&ar, &w, q)?))
            })
            .collect::<Result<_>>()?;
        let d = ar.model().d();
        Ok(BaxterSweep {
            d,
            t1,
            big_t,
            t0_values: t0_values.to_vec(),
            lhs_values: pairs.iter().map(|p| p.0).collect(),
            rhs_values: pairs.iter().map(|p| p.1).collect(),
            limit_constant: limit_constant(d, q)?,
        })
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.lhs_values.iter().zip(&self.rhs_values).map(|(l, r)| l / r).collect()
    }

    /// Largest observed ratio, an empirical stand-in for the inequality's constant.
    pub fn empirical_constant(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }

    /// Log-log slope of `values` between the last two horizons.
    pub fn tail_slope(&self, values: &[f64]) -> f64 {
        let n = self.t0_values.len();
        if n < 2 {
            return f64::NAN;
        }
        let (a, b) = (self.t0_values[n - 2] + self.t1, self.t0_values[n - 1] + self.t1);
        (values[n - 1] / values[n - 2]).ln() / (b / a).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_integral_matches_gamma_identity() {
        let q = QuadratureConfig::default();
        for d in [0.05, 0.25, 0.4] {
            let a = limit_integral(d, &q).unwrap();
            let b = limit_integral_gamma(d);
            assert!((a / b - 1.0).abs() < 1e-9, "{d}: {a} {b}");
        }
        let c = limit_constant(1e-3, &q).unwrap();
        assert!(c > 0.0 && c < 1e-5, "{c}");
    }

    #[test]
    fn f_m_closed_values() {
        let q = QuadratureConfig::default();
        assert!((eval_f_m(1, 0.0, &q).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((eval_f_m(1, 1.0, &q).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!((eval_f_m(2, 0.0, &q).unwrap() - 1.0 / (PI * PI)).abs() < 1e-12);
        assert!(eval_f_m(9, 0.0, &q).is_err());
    }

    #[test]
    fn f_m_routes_agree() {
        let q = QuadratureConfig::default();
        let grid = FSeriesGrid::new(5).unwrap();
        let i = grid.grid.nodes.iter().position(|&u| u > 1.0).unwrap();
        let u = grid.grid.nodes[i];
        for m in 2..=4 {
            let nested = eval_f_m(m, u, &q).unwrap();
            assert!((grid.values[m - 1][i] / nested - 1.0).abs() < 1e-6, "m={m}");
        }
        let est = f_m_qmc(5, u, 1 << 14, 1).unwrap();
        assert!((est.value - grid.values[4][i]).abs() < 5.0 * est.error + 1e-3 * est.value);
    }
}
