//! Predictor coefficients and mean-square errors for the window
//! `−t0 ≤ 0 ≤ t1 < T`.
//!
//! With `t2 = t0 + t1` and `t3 = T − t1`, the finite-past predictor is
//! `X(t1) + ∫_{−t0}^{t1} φ(s) dX(s)` with `φ(s) = ∫₀^{t3} h(s+t0,u) du`, and
//! the infinite-past one uses `ψ(s) = ∫₀^{t3} b(t1−s,τ) dτ` over `(−∞, t1]`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::duality::ArCoefficient;
use crate::error::{invalid, LrdError, Result};
use crate::kernels::KernelTable;
use crate::model::TABLE_ACCURACY;
use crate::montecarlo::PathSample;
use crate::quad::{de, lenient, ErrorSlot, LogGrid, QuadratureConfig, Tol};

/// Observation window `[−t0, t1]` and target time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionWindow {
    pub t0: f64,
    pub t1: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
}

impl PredictionWindow {
    pub fn new(t0: f64, t1: f64, big_t: f64) -> Result<Self> {
        let w = PredictionWindow { t0, t1, big_t };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let PredictionWindow { t0, t1, big_t } = *self;
        if !(t0 >= 0.0 && t1 >= 0.0 && t1 < big_t && t0 + t1 > 0.0 && big_t.is_finite() && t0.is_finite()) {
            return invalid(format!(
                "window needs −t0 ≤ 0 ≤ t1 < T and −t0 < t1, got t0={t0}, t1={t1}, T={big_t}"
            ));
        }
        Ok(())
    }

    pub fn t2(&self) -> f64 {
        self.t0 + self.t1
    }

    pub fn t3(&self) -> f64 {
        self.big_t - self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMode {
    InfinitePast,
    FinitePast,
}

fn fbm(ar: &ArCoefficient) -> bool {
    ar.model().is_fbm()
}

fn tol_for(ar: &ArCoefficient, q: &QuadratureConfig) -> Tol {
    if fbm(ar) {
        q.tol()
    } else {
        q.tol_floor(TABLE_ACCURACY)
    }
}

/// `ψ(x) = ∫₀^{t3} b(x,τ) dτ = ∫₀^{t3} c(v) {α(x) − α(x+t3−v)} dv`.
pub fn psi1(ar: &ArCoefficient, x: f64, t3: f64, q: &QuadratureConfig) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("ψ needs x > 0, got {x}"));
    }
    if t3 <= 0.0 {
        return Ok(0.0);
    }
    let m = ar.model();
    Ok(de::tanh_sinh(|_, v, dr| m.c(v) * ar.alpha_diff(x, dr), 0.0, t3, tol_for(ar, q))?.value)
}

/// Infinite-past coefficient `ψ(t1 − s)` for `s < t1`.
pub fn infinite_past_coeff(ar: &ArCoefficient, w: &PredictionWindow, s: f64, q: &QuadratureConfig) -> Result<f64> {
    w.validate()?;
    if !(s < w.t1) {
        return invalid(format!("infinite-past coefficient needs s < t1, got s={s}"));
    }
    psi1(ar, w.t1 - s, w.t3(), q)
}

/// `∫_X^∞ ψ(x) dx = ∫₀^{t3} c(v) ∫₀^{t3−v} α(X+y) dy dv`: the mass of the
/// infinite-past coefficient beyond lag `X`.
pub fn psi_tail_mass(ar: &ArCoefficient, lag: f64, t3: f64, q: &QuadratureConfig) -> Result<f64> {
    let m = ar.model();
    let tol = tol_for(ar, q);
    let d = m.d();
    let a1 = |h: f64| -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        if fbm(ar) {
            // ∫₀^h α(X+y) dy = {(X+h)^{1−d} − X^{1−d}} / ((1−d) Γ(1−d))
            let base = lag.powf(1.0 - d);
            return base * ((1.0 - d) * (h / lag).ln_1p()).exp_m1() / ((1.0 - d) * gamma(1.0 - d));
        }
        lenient(de::finite(|y| ar.alpha(lag + y), 0.0, h, tol), "α integral")
    };
    Ok(de::tanh_sinh(|_, v, dr| m.c(v) * a1(dr), 0.0, t3, tol)?.value)
}

/// Finite-past predictor for one window, built on a [`KernelTable`].
#[derive(Debug, Clone)]
pub struct FinitePredictor {
    table: Arc<KernelTable>,
    window: PredictionWindow,
    q: QuadratureConfig,
    /// `Ψ_n = A^{n−1} Ψ_1` with `Ψ_1,i = ψ(t2 + u_i)`, until negligible.
    psi: Vec<DVector<f64>>,
    /// `Ψ_1 + Ψ_3 + …`
    sum_odd: DVector<f64>,
    /// `Ψ_2 + Ψ_4 + …`
    sum_even: DVector<f64>,
    truncation: f64,
}

/// Anything that yields `dX(s)` coefficients on a window.
pub trait Predictor: Sync {
    fn window(&self) -> &PredictionWindow;
    /// Lower end of the integration range (`−t0`, or a truncation point).
    fn lower(&self) -> f64;
    fn coeff(&self, s: f64) -> Result<f64>;
}

impl FinitePredictor {
    pub fn new(table: Arc<KernelTable>, window: PredictionWindow, q: &QuadratureConfig) -> Result<Self> {
        window.validate()?;
        if (table.t2() - window.t2()).abs() > 1e-12 * window.t2() {
            return invalid(format!(
                "kernel table built for t2={} but window has t2={}",
                table.t2(),
                window.t2()
            ));
        }
        let t2 = window.t2();
        let t3 = window.t3();
        let ar = table.ar();
        let first: Vec<f64> = table
            .nodes()
            .par_iter()
            .map(|&u| psi1(ar, t2 + u, t3, q))
            .collect::<Result<_>>()?;
        let first = DVector::from_vec(first);
        let mut psi = vec![first.clone()];
        let mut sum_odd = first;
        let mut sum_even = DVector::zeros(sum_odd.len());
        let max_terms = table.config().max_terms;
        let truncation;
        loop {
            let next = table.matrix() * psi.last().unwrap();
            let norm = next.amax();
            let prev = psi.last().unwrap().amax();
            if psi.len() % 2 == 1 {
                sum_even += &next;
            } else {
                sum_odd += &next;
            }
            psi.push(next);
            let total = sum_odd.amax().max(sum_even.amax());
            if norm <= table.rel_tol() * total && psi.len() >= 3 {
                let ratio = (norm / prev).min(0.999);
                truncation = norm * ratio / (1.0 - ratio) / total;
                break;
            }
            if psi.len() >= max_terms {
                return Err(LrdError::SeriesNotConverged {
                    terms: psi.len(),
                    last_term: norm / total,
                });
            }
        }
        Ok(FinitePredictor {
            table,
            window,
            q: *q,
            psi,
            sum_odd,
            sum_even,
            truncation,
        })
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn series_terms(&self) -> usize {
        self.psi.len()
    }

    pub fn truncation_estimate(&self) -> f64 {
        self.truncation
    }

    /// `φ(s) − ψ(t1−s) = Σ_{n≥2} ∫₀^{t3} b_n(·, u) du`, the finite-past
    /// correction, positive on `(−t0, t1)`.
    pub fn correction(&self, s: f64) -> f64 {
        let w = &self.window;
        self.table.row(s + w.t0).dot(&self.sum_odd) + self.table.row(w.t1 - s).dot(&self.sum_even)
    }

    /// `Σ_n Ψ_n`.
    pub(crate) fn psi_total(&self) -> DVector<f64> {
        &self.sum_odd + &self.sum_even
    }

    /// `Ψ_n` for `n ≥ 1`.
    pub(crate) fn psi(&self, n: usize) -> Option<&DVector<f64>> {
        self.psi.get(n.checked_sub(1)?)
    }

    pub(crate) fn psi_len(&self) -> usize {
        self.psi.len()
    }
}

impl Predictor for FinitePredictor {
    fn window(&self) -> &PredictionWindow {
        &self.window
    }

    fn lower(&self) -> f64 {
        -self.window.t0
    }

    fn coeff(&self, s: f64) -> Result<f64> {
        let w = &self.window;
        if !(s > -w.t0 && s < w.t1) {
            return invalid(format!("finite-past coefficient needs −t0 < s < t1, got {s}"));
        }
        Ok(psi1(self.table.ar(), w.t1 - s, w.t3(), &self.q)? + self.correction(s))
    }
}

/// Finite-past coefficient `∫₀^{t3} h(s+t0,u) du`.
pub fn finite_past_coeff(pred: &FinitePredictor, s: f64) -> Result<f64> {
    pred.coeff(s)
}

/// Infinite-past predictor truncated at `s ≥ lower`.
#[derive(Debug, Clone)]
pub struct InfinitePredictor {
    ar: Arc<ArCoefficient>,
    window: PredictionWindow,
    lower: f64,
    q: QuadratureConfig,
}

impl InfinitePredictor {
    pub fn new(ar: Arc<ArCoefficient>, window: PredictionWindow, lower: f64, q: &QuadratureConfig) -> Result<Self> {
        window.validate()?;
        if !(lower < window.t1) {
            return invalid("truncation point must lie below t1");
        }
        Ok(InfinitePredictor {
            ar,
            window,
            lower,
            q: *q,
        })
    }

    /// Coefficient mass dropped by the truncation.
    pub fn truncated_mass(&self) -> Result<f64> {
        psi_tail_mass(&self.ar, self.window.t1 - self.lower, self.window.t3(), &self.q)
    }
}

impl Predictor for InfinitePredictor {
    fn window(&self) -> &PredictionWindow {
        &self.window
    }

    fn lower(&self) -> f64 {
        self.lower
    }

    fn coeff(&self, s: f64) -> Result<f64> {
        infinite_past_coeff(&self.ar, &self.window, s, &self.q)
    }
}

/// `∫₀^{t3} g(s)² ds`, the infinite-past error.
pub fn infinite_error(ar: &ArCoefficient, w: &PredictionWindow, q: &QuadratureConfig) -> Result<f64> {
    let m = ar.model();
    let t3 = w.t3();
    if fbm(ar) {
        let h = m.h();
        return Ok(t3.powf(2.0 * h) / (2.0 * h * gamma(h + 0.5).powi(2)));
    }
    Ok(de::finite(|s| m.g(s).powi(2), 0.0, t3, tol_for(ar, q))?.value)
}

/// `∫₀^h β(x+y) dy`.
fn beta_integral(ar: &ArCoefficient, x: f64, h: f64, tol: Tol) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if fbm(ar) {
        let d = ar.model().d();
        return (PI * d).sin() / PI * (h / x).ln_1p();
    }
    lenient(de::finite(|y| ar.beta(x + y), 0.0, h, tol), "β integral")
}

/// `m(s)_i = ∫₀^{u_i} c(w) β(t2+s+u_i−w) dw`, so `D_n(s) = Σ_i w_i m_i Ψ_{n−1,i}`.
fn dn_row(ar: &ArCoefficient, t2: f64, s: f64, nodes: &[f64], weights: &[f64], tol: Tol) -> Result<Vec<f64>> {
    let m = ar.model();
    nodes
        .iter()
        .zip(weights)
        .map(|(&u, &w)| {
            let v = de::tanh_sinh(|_, x, dr| m.c(x) * ar.beta(t2 + s + dr), 0.0, u, tol)?.value;
            Ok(w * v)
        })
        .collect()
}

/// `D_n(s)` for the window; `D_0(s) = g(t3−s)`.
pub fn eval_dn(pred: &FinitePredictor, n: usize, s: f64, q: &QuadratureConfig) -> Result<f64> {
    if !(s > 0.0) {
        return invalid(format!("D_n needs s > 0, got {s}"));
    }
    let w = pred.window;
    let ar = pred.table.ar();
    let m = ar.model();
    let (t2, t3) = (w.t2(), w.t3());
    let tol = tol_for(ar, q);
    match n {
        0 => Ok(if s < t3 { m.g(t3 - s) } else { 0.0 }),
        1 => {
            let r = de::tanh_sinh(|_, v, dr| m.c(v) * beta_integral(ar, t2 + s, dr, tol), 0.0, t3, tol)?;
            Ok(r.value)
        }
        _ => {
            let psi = pred.psi(n - 1).ok_or(LrdError::SeriesNotConverged {
                terms: pred.psi_len(),
                last_term: 0.0,
            })?;
            let row = dn_row(ar, t2, s, pred.table.nodes(), pred.table.weights(), tol)?;
            Ok(row.iter().zip(psi.iter()).map(|(a, b)| a * b).sum())
        }
    }
}

/// Error variance with its decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBreakdown {
    pub infinite: f64,
    /// `∫₀^∞ D_n(s)² ds` for `n = 1, 2, …`.
    pub dn_terms: Vec<f64>,
    pub total: f64,
}

/// `∫₀^∞ D_n² ds` for `n ≥ 1`, summed until a term drops below `relTol` of
/// the accumulated sum.
pub fn dn_contributions(pred: &FinitePredictor, q: &QuadratureConfig) -> Result<Vec<f64>> {
    let w = pred.window;
    let ar = pred.table.ar();
    let (t2, t3) = (w.t2(), w.t3());
    let tol = tol_for(ar, q);
    let sgrid = LogGrid::new(t2 * (-20f64).exp(), t2 * 30f64.exp(), 0.5);
    let m = ar.model();
    let slot = ErrorSlot::default();
    let d1: Vec<f64> = sgrid
        .nodes
        .par_iter()
        .map(|&s| {
            let r = de::tanh_sinh(|_, v, dr| m.c(v) * beta_integral(ar, t2 + s, dr, tol), 0.0, t3, tol);
            slot.value(r)
        })
        .collect();
    slot.finish(Ok(()))?;
    let rows: Vec<Vec<f64>> = sgrid
        .nodes
        .par_iter()
        .map(|&s| dn_row(ar, t2, s, pred.table.nodes(), pred.table.weights(), tol))
        .collect::<Result<_>>()?;
    let mrows = DMatrix::from_fn(sgrid.len(), pred.table.nodes().len(), |k, i| rows[k][i]);
    let l2 = |d: &[f64]| -> f64 { d.iter().zip(&sgrid.weights).map(|(x, ws)| ws * x * x).sum() };
    let mut terms = vec![l2(&d1)];
    let mut acc = terms[0];
    let mut n = 2;
    while let Some(psi) = pred.psi(n - 1) {
        let dn = &mrows * psi;
        let term = l2(dn.as_slice());
        if n >= 3 && term > terms[terms.len() - 1] * (1.0 + 1e-6) {
            return Err(LrdError::Instability(format!(
                "D_n contributions increase at n={n}: {term:e} > {:e}",
                terms[terms.len() - 1]
            )));
        }
        terms.push(term);
        acc += term;
        if term <= q.rel_tol * acc {
            break;
        }
        n += 1;
    }
    Ok(terms)
}

/// Mean-square prediction error.
pub fn error_variance(
    ar: &ArCoefficient,
    pred: Option<&FinitePredictor>,
    w: &PredictionWindow,
    mode: ErrorMode,
    q: &QuadratureConfig,
) -> Result<ErrorBreakdown> {
    w.validate()?;
    let infinite = infinite_error(ar, w, q)?;
    match mode {
        ErrorMode::InfinitePast => Ok(ErrorBreakdown {
            infinite,
            dn_terms: vec![],
            total: infinite,
        }),
        ErrorMode::FinitePast => {
            let pred = pred.ok_or_else(|| LrdError::InvalidArgument("finite-past error needs a kernel table".into()))?;
            let dn_terms = dn_contributions(pred, q)?;
            let total = infinite + crate::quad::compensated_sum(dn_terms.iter().copied());
            Ok(ErrorBreakdown {
                infinite,
                dn_terms,
                total,
            })
        }
    }
}

/// Everything computed for one window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredictionReport {
    pub window: PredictionWindow,
    /// `(s, ψ(t1−s))` for `s < t1`.
    pub infinite_coeff_samples: Vec<(f64, f64)>,
    /// `(s, φ(s))` for `s ∈ (−t0, t1)`.
    pub finite_coeff_samples: Vec<(f64, f64)>,
    pub infinite_error_var: f64,
    pub finite_error_var: f64,
    pub dn_term_contributions: Vec<f64>,
    /// Lag beyond which infinite-past coefficients were not emitted, and the
    /// coefficient mass dropped there.
    pub infinite_truncation_lag: f64,
    pub infinite_truncated_mass: f64,
    pub series_terms: usize,
    pub truncation_estimate: f64,
}

/// Assemble a [`PredictionReport`].
pub fn predict(pred: &FinitePredictor, samples: usize, q: &QuadratureConfig) -> Result<PredictionReport> {
    let w = pred.window;
    let ar = pred.table.ar();
    let n = samples.max(2);
    let finite_s: Vec<f64> = (0..n)
        .map(|k| {
            // cluster towards both ends where the coefficient is singular
            let x = 0.5 - 0.5 * (PI * (k as f64 + 0.5) / n as f64).cos();
            -w.t0 + w.t2() * x
        })
        .collect();
    let finite_coeff_samples = finite_s
        .par_iter()
        .map(|&s| Ok((s, pred.coeff(s)?)))
        .collect::<Result<Vec<_>>>()?;
    let t3 = w.t3();
    let mut lags = vec![];
    let mut x = 1e-3 * t3.min(w.t2().max(t3));
    let cap = q.truncation_radius * t3.max(1.0);
    while x <= cap {
        lags.push(x);
        x *= 10f64.powf(0.125);
    }
    let mut infinite_coeff_samples = Vec::with_capacity(lags.len());
    let mut cut = cap;
    for &lag in &lags {
        let v = psi1(ar, lag, t3, q)?;
        if v < q.abs_tol {
            cut = lag;
            break;
        }
        infinite_coeff_samples.push((w.t1 - lag, v));
    }
    let infinite_truncated_mass = psi_tail_mass(ar, cut, t3, q)?;
    let errors = error_variance(ar, Some(pred), &w, ErrorMode::FinitePast, q)?;
    Ok(PredictionReport {
        window: w,
        infinite_coeff_samples,
        finite_coeff_samples,
        infinite_error_var: errors.infinite,
        finite_error_var: errors.total,
        dn_term_contributions: errors.dn_terms,
        infinite_truncation_lag: cut,
        infinite_truncated_mass,
        series_terms: pred.series_terms(),
        truncation_estimate: pred.truncation_estimate(),
    })
}

/// Discretized predictor on a fixed grid:
/// `X(t1) + Σ_j φ(s_j*) (X(s_{j+1}) − X(s_j))` with midpoints `s_j*`.
#[derive(Debug, Clone)]
pub struct DiscretePredictor {
    /// Index of `t1` in the grid.
    pub anchor: usize,
    /// `(j, φ(s_j*))` for each used cell `[s_j, s_{j+1}]`.
    pub cells: Vec<(usize, f64)>,
    pub warning: Option<String>,
}

impl DiscretePredictor {
    pub fn new(pred: &dyn Predictor, grid: &[f64]) -> Result<Self> {
        let w = pred.window();
        let lower = pred.lower();
        let scale = w.t2().max(w.t3());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * scale;
        let anchor = grid
            .iter()
            .position(|&x| close(x, w.t1))
            .ok_or_else(|| LrdError::InvalidArgument(format!("grid does not contain t1={}", w.t1)))?;
        let start = grid
            .iter()
            .position(|&x| close(x, lower))
            .ok_or_else(|| LrdError::InvalidArgument(format!("grid does not contain the lower end {lower}")))?;
        if start >= anchor {
            return invalid("grid must cover the observation window");
        }
        let mids: Vec<(usize, f64)> = (start..anchor).map(|j| (j, 0.5 * (grid[j] + grid[j + 1]))).collect();
        let cells = mids
            .par_iter()
            .map(|&(j, s)| Ok((j, pred.coeff(s)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut warning = None;
        let jumps = cells
            .windows(2)
            .skip(1)
            .take(cells.len().saturating_sub(3))
            .map(|p| (p[1].1 / p[0].1 - 1.0).abs())
            .fold(0.0, f64::max);
        if jumps > 0.5 {
            let msg = format!(
                "coefficient changes by {:.0}% between adjacent cells; refine the path grid",
                100.0 * jumps
            );
            log::warn!("{msg}");
            warning = Some(msg);
        }
        Ok(DiscretePredictor { anchor, cells, warning })
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut sum = values[self.anchor];
        for &(j, phi) in &self.cells {
            sum += phi * (values[j + 1] - values[j]);
        }
        sum
    }

    /// Weights `λ_i` with `predictor = Σ_i λ_i X(grid_i)`.
    pub fn weights(&self, len: usize) -> Vec<f64> {
        let mut lam = vec![0.0; len];
        lam[self.anchor] += 1.0;
        for &(j, phi) in &self.cells {
            lam[j + 1] += phi;
            lam[j] -= phi;
        }
        lam
    }
}

/// Predictor value for a simulated path.
#[derive(Debug, Clone)]
pub struct Applied {
    pub value: f64,
    pub warning: Option<String>,
}

pub fn apply_predictor(pred: &dyn Predictor, path: &PathSample) -> Result<Applied> {
    let d = DiscretePredictor::new(pred, &path.grid_times)?;
    Ok(Applied {
        value: d.apply(&path.values),
        warning: d.warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::b_closed_form;
    use crate::model::LrdModel;
    use crate::quad::TABLE_TOL;

    fn setup(h: f64, t0: f64, t1: f64, big_t: f64) -> (Arc<ArCoefficient>, FinitePredictor) {
        let q = QuadratureConfig::default();
        let ar = Arc::new(ArCoefficient::new(&LrdModel::fbm(h).unwrap()).unwrap());
        let w = PredictionWindow::new(t0, t1, big_t).unwrap();
        let table = Arc::new(KernelTable::build(ar.clone(), w.t2(), &q).unwrap());
        (ar, FinitePredictor::new(table, w, &q).unwrap())
    }

    #[test]
    fn window_validation() {
        assert!(PredictionWindow::new(1.0, 1.0, 2.0).is_ok());
        assert!(PredictionWindow::new(0.0, 0.0, 1.0).is_err());
        assert!(PredictionWindow::new(1.0, 2.0, 2.0).is_err());
        assert!(PredictionWindow::new(-1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn psi_matches_closed_form_quadrature() {
        let (ar, _) = setup(0.75, 1.0, 0.0, 1.0);
        let q = QuadratureConfig::default();
        let w = PredictionWindow::new(10.0, 0.0, 1.0).unwrap();
        let v = infinite_past_coeff(&ar, &w, -1.0, &q).unwrap();
        let oracle = de::finite(|tau| b_closed_form(0.25, 1.0, tau), 0.0, 1.0, TABLE_TOL).unwrap().value;
        assert!((v / oracle - 1.0).abs() < 1e-10, "{v} {oracle}");
    }

    #[test]
    fn infinite_error_closed_form() {
        let (ar, _) = setup(0.75, 1.0, 0.0, 1.0);
        let w = PredictionWindow::new(1.0, 0.0, 1.0).unwrap();
        let e = infinite_error(&ar, &w, &QuadratureConfig::default()).unwrap();
        assert!((e - 0.811_459).abs() < 1e-6, "{e}");
    }

    #[test]
    fn finite_error_between_bounds() {
        let (ar, pred) = setup(0.75, 1.0, 0.0, 1.0);
        let q = QuadratureConfig::default();
        let w = PredictionWindow::new(1.0, 0.0, 1.0).unwrap();
        let e = error_variance(&ar, Some(&pred), &w, ErrorMode::FinitePast, &q).unwrap();
        assert!(e.total > e.infinite && e.total < 1.063_846, "{e:?}");
        assert!((e.total - 0.846_74).abs() < 2e-4, "{e:?}");
    }

    #[test]
    fn linearity_of_discrete_predictor() {
        let (_, pred) = setup(0.75, 1.0, 1.0, 2.0);
        let grid: Vec<f64> = (0..=48).map(|i| -1.0 + i as f64 / 16.0).collect();
        let zero = PathSample {
            grid_times: grid.clone(),
            values: vec![0.0; grid.len()],
            seed: 0,
            replicate_index: 0,
        };
        assert_eq!(apply_predictor(&pred, &zero).unwrap().value, 0.0);
        let vals: Vec<f64> = grid.iter().map(|x| x.sin()).collect();
        let one = PathSample {
            values: vals.clone(),
            ..zero.clone()
        };
        let three = PathSample {
            values: vals.iter().map(|v| 3.0 * v).collect(),
            ..zero
        };
        let a = apply_predictor(&pred, &one).unwrap().value;
        let b = apply_predictor(&pred, &three).unwrap().value;
        assert!((b - 3.0 * a).abs() < 1e-12 * b.abs().max(1.0));
    }
}
