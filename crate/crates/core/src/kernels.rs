//! Predictor kernels.
//!
//! * `b(t,s) = ∫₀^s c(u) a(t+s−u) du`, the infinite-past kernel.
//! * `b_n(t,s;t2)`, the alternating-projection iterates
//!   `b_n(t,s) = ∫₀^∞ b(t,u) b_{n−1}(t2+u,s) du`.
//! * `h(s,u;t2) = Σ_k {b_{2k−1}(t2−s,u) + b_{2k}(s,u)}`, the finite-past
//!   kernel.
//! * `δ_k`, `B_k`: the β-representation of `b_k`.
//! * `k(t,s;t2)`, whose integral operator controls convergence of the
//!   iteration.
//!
//! Iterates are computed by a Nyström discretization: the trapezoid rule in
//! `ln u` on a wide log grid turns the recursion into powers of one matrix.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duality::{ArCoefficient, InversionMethod};
use crate::error::{invalid, LrdError, Result};
use crate::model::TABLE_ACCURACY;
use crate::quad::gauss_jacobi::GaussJacobi;
use crate::quad::{
    self, de, geometric_breakpoints, lenient, ErrorSlot, Estimate, LogGrid, QuadratureConfig, Tol,
};

/// Deepest `δ_k` supported.
pub const MAX_DELTA_DEPTH: usize = 6;
/// QMC budget for deep nested integrals.
pub const QMC_POINTS: usize = 1 << 16;
const QMC_REPLICATES: usize = 16;
const GJ_NODES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelRoute {
    ClosedForm,
    Numeric,
}

/// `b(t,s)` for fBm: `C (s/t)^d / (t+s)` with `C = sin(πd)/π`.
pub fn b_closed_form(d: f64, t: f64, s: f64) -> f64 {
    (PI * d).sin() / PI * (s / t).powf(d) / (t + s)
}

/// `h(s,u;t2)` for fBm.
pub fn h_closed_form(d: f64, t2: f64, s: f64, u: f64) -> f64 {
    (PI * d).sin() / PI * (t2 - s).powf(-d) * s.powf(-d) * (u * (u + t2)).powf(d) / (u + t2 - s)
}

/// `b(t,s)` by the requested route.
pub fn eval_b(
    ar: &ArCoefficient,
    t: f64,
    s: f64,
    q: &QuadratureConfig,
    route: KernelRoute,
) -> Result<f64> {
    if !(t > 0.0 && s > 0.0) {
        return invalid(format!("b(t,s) needs t, s > 0, got ({t}, {s})"));
    }
    match route {
        KernelRoute::ClosedForm => {
            if !ar.model().is_fbm() {
                return invalid("closed-form b exists only for fBm");
            }
            Ok(b_closed_form(ar.model().d(), t, s))
        }
        KernelRoute::Numeric => b_numeric(ar, t, s, q),
    }
}

/// Default route: closed form for fBm, quadrature otherwise.
pub fn default_route(ar: &ArCoefficient) -> KernelRoute {
    if ar.model().is_fbm() {
        KernelRoute::ClosedForm
    } else {
        KernelRoute::Numeric
    }
}

/// `b(t,s)` by the default route, never failing: a missed quadrature target
/// is logged and the best estimate used.
pub fn b_fast(ar: &ArCoefficient, t: f64, s: f64) -> f64 {
    let m = ar.model();
    if m.is_fbm() {
        return b_closed_form(m.d(), t, s);
    }
    let q = QuadratureConfig::default().with_rel_tol(TABLE_ACCURACY);
    lenient(b_numeric(ar, t, s, &q), "b kernel")
}

fn b_numeric(ar: &ArCoefficient, t: f64, s: f64, q: &QuadratureConfig) -> Result<f64> {
    // b = ∫₀^s c(w) a(t+s−w) dw; c(w) ∼ w^{H0−3/2} at w = 0
    let m = ar.model();
    let p = m.h0() - 1.5;
    let mut eps = q.singularity_split.min(s);
    let tol = q.tol();
    for _ in 0..4 {
        let fine = GaussJacobi::cached(GJ_NODES, 0.0, p);
        let coarse = GaussJacobi::cached(GJ_NODES * 2 / 3, 0.0, p);
        let f = |_: f64, w: f64, _: f64| m.c(w) * w.powf(-p) * ar.a(t + s - w);
        let near = fine.integrate(f, 0.0, eps);
        let near_err = (near - coarse.integrate(f, 0.0, eps)).abs();
        if near_err <= 0.1 * tol.target(near) || eps < 1e-12 * s {
            let far = if eps < s {
                de::tanh_sinh(|w, _, _| m.c(w) * ar.a(t + s - w), eps, s, tol)?.value
            } else {
                0.0
            };
            return Ok(near + far);
        }
        eps *= 0.125;
    }
    // c(w) w^{−p} is not smooth at 0 when H ≠ H0 (a w^{H−H0} correction),
    // so the weighted rules stall; the DE rule absorbs the endpoint instead
    Ok(de::tanh_sinh(|_, dl, dr| m.c(dl) * ar.a(t + dr), 0.0, s, tol)?.value)
}

/// Options for [`KernelTable::build`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelGridConfig {
    /// Node range `[t2 e^{−below}, t2 e^{above}]`.
    pub below: f64,
    pub above: f64,
    /// Step in `ln u`.
    pub step: f64,
    /// Maximum number of series terms.
    pub max_terms: usize,
    /// Number of stored `b_n` grids.
    pub stored_iterates: usize,
    /// Sample points of the stored `h` grid.
    pub h_s_points: usize,
    pub h_u_points: usize,
}

impl Default for KernelGridConfig {
    fn default() -> Self {
        KernelGridConfig {
            below: 30.0,
            above: 60.0,
            step: 0.5,
            max_terms: 5000,
            stored_iterates: 3,
            h_s_points: 16,
            h_u_points: 24,
        }
    }
}

/// Result of summing the `h` series at one target.
#[derive(Debug, Clone)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub truncation: f64,
}

/// Partial sums of the iterates for one right argument `s`:
/// `odd = Σ v_{2k}`, `even = Σ v_{2k−1}` with `v_n = A^{n−1} v_1`.
#[derive(Debug, Clone)]
pub(crate) struct IterateSums {
    pub odd: DVector<f64>,
    pub even: DVector<f64>,
    pub terms: usize,
    pub truncation: f64,
    pub norms: Vec<f64>,
}

/// Cached Nyström discretization of the iterates for one `t2`.
#[derive(Debug)]
pub struct KernelTable {
    ar: Arc<ArCoefficient>,
    t2: f64,
    grid: LogGrid,
    config: KernelGridConfig,
    rel_tol: f64,
    /// `A_ij = b(t2+u_i, u_j) w_j`.
    matrix: DMatrix<f64>,
    b_grid: DMatrix<f64>,
    bn_grids: Vec<DMatrix<f64>>,
    h_s: Vec<f64>,
    h_u: Vec<f64>,
    h_grid: DMatrix<f64>,
    series_terms: usize,
    truncation_estimate: f64,
}

impl KernelTable {
    pub fn build(ar: Arc<ArCoefficient>, t2: f64, q: &QuadratureConfig) -> Result<Self> {
        Self::build_with(ar, t2, q, KernelGridConfig::default())
    }

    pub fn build_with(
        ar: Arc<ArCoefficient>,
        t2: f64,
        q: &QuadratureConfig,
        config: KernelGridConfig,
    ) -> Result<Self> {
        if !(t2 > 0.0) {
            return invalid(format!("t2 must be positive, got {t2}"));
        }
        q.validate()?;
        let grid = LogGrid::new(
            t2 * (-config.below).exp(),
            t2 * config.above.exp(),
            config.step,
        );
        let n = grid.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                grid.nodes
                    .iter()
                    .map(|&u| b_fast(&ar, t2 + grid.nodes[i], u))
                    .collect()
            })
            .collect();
        let b_grid = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j] * grid.weights[j]);
        if let Some(bad) = b_grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(LrdError::Instability(format!(
                "non-positive kernel value {bad}"
            )));
        }
        let mut bn_grids = vec![b_grid.clone()];
        for _ in 1..config.stored_iterates {
            let next = &matrix * bn_grids.last().unwrap();
            bn_grids.push(next);
        }
        let mut table = KernelTable {
            ar,
            t2,
            grid,
            config,
            rel_tol: q.rel_tol,
            matrix,
            b_grid,
            bn_grids,
            h_s: (0..config.h_s_points)
                .map(|j| t2 * (j as f64 + 0.5) / config.h_s_points as f64)
                .collect(),
            h_u: (0..config.h_u_points)
                .map(|j| {
                    t2 * 10f64.powf(-2.0 + 4.0 * j as f64 / (config.h_u_points - 1).max(1) as f64)
                })
                .collect(),
            h_grid: DMatrix::zeros(0, 0),
            series_terms: 0,
            truncation_estimate: 0.0,
        };
        table.fill_h_grid()?;
        Ok(table)
    }

    fn fill_h_grid(&mut self) -> Result<()> {
        let cols: Vec<(Vec<f64>, usize, f64)> = self
            .h_u
            .par_iter()
            .map(|&u| {
                let sums = self.iterate_sums(self.first_iterate(u))?;
                let col = self
                    .h_s
                    .iter()
                    .map(|&s| self.h_from_sums(&sums, s, u))
                    .collect();
                Ok((col, sums.terms, sums.truncation))
            })
            .collect::<Result<_>>()?;
        self.h_grid = DMatrix::from_fn(self.h_s.len(), self.h_u.len(), |i, j| cols[j].0[i]);
        self.series_terms = cols.iter().map(|c| c.1).max().unwrap_or(0);
        self.truncation_estimate = cols.iter().map(|c| c.2).fold(0.0, f64::max);
        for (i, &s) in self.h_s.iter().enumerate() {
            for (j, &u) in self.h_u.iter().enumerate() {
                let h = self.h_grid[(i, j)];
                let b = b_fast(&self.ar, self.t2 - s, u);
                if !(h > b && b > 0.0) {
                    return Err(LrdError::Instability(format!(
                        "h({s}, {u}) = {h} does not dominate b = {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn ar(&self) -> &ArCoefficient {
        &self.ar
    }

    pub fn ar_arc(&self) -> Arc<ArCoefficient> {
        self.ar.clone()
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.grid.weights
    }

    pub fn config(&self) -> &KernelGridConfig {
        &self.config
    }

    /// `b(t2+u_i, u_j)`.
    pub fn b_grid(&self) -> &DMatrix<f64> {
        &self.b_grid
    }

    /// `b_n(t2+u_i, u_j)` for `n = 1..=stored_iterates`.
    pub fn bn_grid(&self, n: usize) -> Option<&DMatrix<f64>> {
        n.checked_sub(1).and_then(|i| self.bn_grids.get(i))
    }

    /// `(s nodes, u nodes, h values)` of the stored `h` grid.
    pub fn h_grid(&self) -> (&[f64], &[f64], &DMatrix<f64>) {
        (&self.h_s, &self.h_u, &self.h_grid)
    }

    pub fn series_terms(&self) -> usize {
        self.series_terms
    }

    pub fn truncation_estimate(&self) -> f64 {
        self.truncation_estimate
    }

    pub(crate) fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub(crate) fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    fn check_coverage(&self, what: &'static str, value: f64) -> Result<()> {
        let (lo, hi) = (self.grid.lo(), self.grid.hi());
        if !(value >= lo && value <= hi) {
            return Err(LrdError::GridCoverage {
                what,
                value,
                lo,
                hi,
            });
        }
        Ok(())
    }

    /// `v_1(s)_i = b(t2+u_i, s)`.
    pub(crate) fn first_iterate(&self, s: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.grid.len(),
            self.grid
                .nodes
                .iter()
                .map(|&u| b_fast(&self.ar, self.t2 + u, s)),
        )
    }

    /// `w_i b(x, u_i)`, so that `b_n(x, s) = row(x) · v_{n−1}(s)`.
    pub(crate) fn row(&self, x: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.grid.len(),
            self.grid
                .nodes
                .iter()
                .zip(&self.grid.weights)
                .map(|(&u, &w)| w * b_fast(&self.ar, x, u)),
        )
    }

    /// Accumulate alternating sums of `v_n = A^{n−1} v_1` until the next
    /// term falls below `relTol` of the partial sum.
    pub(crate) fn iterate_sums(&self, first: DVector<f64>) -> Result<IterateSums> {
        let mut even = first.clone();
        let mut odd = DVector::zeros(first.len());
        let mut v = first;
        let mut norms = vec![v.amax()];
        let mut n = 1;
        loop {
            v = &self.matrix * &v;
            n += 1;
            let norm = v.amax();
            norms.push(norm);
            if n % 2 == 0 {
                odd += &v;
            } else {
                even += &v;
            }
            let total = odd.amax().max(even.amax());
            if norm <= self.rel_tol * total && n >= 3 {
                let ratio = (norm / norms[norms.len() - 2]).min(0.999);
                return Ok(IterateSums {
                    odd,
                    even,
                    terms: n,
                    truncation: norm * ratio / (1.0 - ratio) / total,
                    norms,
                });
            }
            if n >= self.config.max_terms {
                return Err(LrdError::SeriesNotConverged {
                    terms: n,
                    last_term: norm / total,
                });
            }
        }
    }

    fn h_from_sums(&self, sums: &IterateSums, s: f64, u: f64) -> f64 {
        // h = b(t2−s,u) + Σ_{n≥2, even} b_n(s,u) + Σ_{n≥3, odd} b_n(t2−s,u)
        b_fast(&self.ar, self.t2 - s, u)
            + self.row(s).dot(&sums.even)
            + self.row(self.t2 - s).dot(&sums.odd)
    }

    /// `b_n(t, s; t2)`.
    pub fn eval_b_n(&self, n: usize, t: f64, s: f64) -> Result<f64> {
        if n == 0 || !(t > 0.0 && s > 0.0) {
            return invalid(format!(
                "b_n needs n ≥ 1 and t, s > 0, got n={n}, ({t}, {s})"
            ));
        }
        if n == 1 {
            return Ok(b_fast(&self.ar, t, s));
        }
        self.check_coverage("s", s)?;
        let mut v = self.first_iterate(s);
        for _ in 2..n {
            v = &self.matrix * v;
        }
        Ok(self.row(t).dot(&v))
    }

    /// `h(s, u; t2)` with the number of terms and truncation estimate.
    pub fn h_series(&self, s: f64, u: f64) -> Result<SeriesSum> {
        if !(s > 0.0 && s < self.t2 && u > 0.0) {
            return invalid(format!("h needs 0 < s < t2 and u > 0, got ({s}, {u})"));
        }
        self.check_coverage("u", u)?;
        let sums = self.iterate_sums(self.first_iterate(u))?;
        Ok(SeriesSum {
            value: self.h_from_sums(&sums, s, u),
            terms: sums.terms,
            truncation: sums.truncation,
        })
    }

    pub fn eval_h(&self, s: f64, u: f64) -> Result<f64> {
        Ok(self.h_series(s, u)?.value)
    }

    /// Sup-norms of the successive iterates for target `u`; the ratios feed
    /// the geometric truncation estimate.
    pub fn term_norms(&self, u: f64) -> Result<Vec<f64>> {
        self.check_coverage("u", u)?;
        Ok(self.iterate_sums(self.first_iterate(u))?.norms)
    }
}

/// `δ_k(u,v;t)` with an error estimate.
pub fn delta_k_estimate(
    ar: &ArCoefficient,
    k: usize,
    u: f64,
    v: f64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<Estimate> {
    if k == 0 || k > MAX_DELTA_DEPTH {
        return Err(LrdError::UnsupportedDepth {
            depth: k,
            max: MAX_DELTA_DEPTH,
        });
    }
    if !(u >= 0.0 && v >= 0.0 && t > 0.0) {
        return invalid(format!("δ_k needs u, v ≥ 0 and t > 0, got ({u}, {v}, {t})"));
    }
    match k {
        1 => Ok(Estimate {
            value: ar.beta(t + v + u),
            error: 0.0,
            evaluations: 1,
        }),
        2 | 3 => {
            // δ_k(u,v) = ∫₀^∞ β(t+u+w) δ_{k−1}(w,v) dw
            let slot = ErrorSlot::default();
            let tol = beta_tol(ar, q, k);
            let r = de::exp_sinh(
                |w, _| ar.beta(t + u + w) * slot.value(delta_k_estimate(ar, k - 1, w, v, t, q)),
                0.0,
                t + 0.5 * (u + v),
                tol,
            );
            slot.finish(r)
        }
        _ => Ok(delta_qmc(ar, k, u, v, t, q)),
    }
}

fn beta_tol(ar: &ArCoefficient, q: &QuadratureConfig, depth: usize) -> Tol {
    let floor = match ar.method() {
        InversionMethod::ClosedForm => 1e-13,
        InversionMethod::NumericInversion => TABLE_ACCURACY,
    };
    let base = if depth > 2 { q.inner_tol() } else { q.tol() };
    Tol {
        rel: base.rel.max(floor),
        ..base
    }
}

fn delta_qmc(
    ar: &ArCoefficient,
    k: usize,
    u: f64,
    v: f64,
    t: f64,
    q: &QuadratureConfig,
) -> Estimate {
    let dims = k - 1;
    let _ = q;
    quad::qmc::integrate_cube(
        |x| {
            let mut w = [0.0; MAX_DELTA_DEPTH];
            let mut jac = 1.0;
            for (wi, &xi) in w.iter_mut().zip(x) {
                *wi = t * xi / (1.0 - xi);
                jac *= t / ((1.0 - xi) * (1.0 - xi));
            }
            let mut prod = ar.beta(t + w[0] + u) * ar.beta(t + v + w[dims - 1]);
            for l in 0..dims - 1 {
                prod *= ar.beta(t + w[l] + w[l + 1]);
            }
            prod * jac
        },
        dims,
        QMC_POINTS / QMC_REPLICATES,
        QMC_REPLICATES,
        0x5eed ^ k as u64,
    )
}

/// `δ_k(u,v;t)`; iterated quadrature for `k ≤ 3`, QMC beyond.
pub fn eval_delta_k(
    ar: &ArCoefficient,
    k: usize,
    u: f64,
    v: f64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    Ok(delta_k_estimate(ar, k, u, v, t, q)?.value)
}

/// `B_k(t,s;t2) = ∫₀^s dv c(s−v) ∫₀^∞ a(t+u) δ_{k−1}(u,v;t2) du`.
pub fn eval_big_b_k(
    ar: &ArCoefficient,
    k: usize,
    t: f64,
    s: f64,
    t2: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    if k < 2 {
        return invalid("B_k is defined here for k ≥ 2 (B_1 = b)");
    }
    if k - 1 > MAX_DELTA_DEPTH {
        return Err(LrdError::UnsupportedDepth {
            depth: k - 1,
            max: MAX_DELTA_DEPTH,
        });
    }
    if !(t > 0.0 && t2 > 0.0) || s < 0.0 {
        return invalid(format!(
            "B_k needs t, t2 > 0 and s ≥ 0, got ({t}, {s}, {t2})"
        ));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let m = ar.model();
    if k - 1 > 2 {
        return Ok(big_b_qmc(ar, k, t, s, t2));
    }
    let slot = ErrorSlot::default();
    let inner = |v: f64| -> Result<f64> {
        let islot = ErrorSlot::default();
        let r = de::exp_sinh(
            |u, _| ar.a(t + u) * islot.value(delta_k_estimate(ar, k - 1, u, v, t2, q)),
            0.0,
            t.max(t2),
            beta_tol(ar, q, k),
        );
        islot.finish(r).map(|e| e.value)
    };
    let r = de::tanh_sinh(|v, _, dr| m.c(dr) * slot.value(inner(v)), 0.0, s, q.tol());
    Ok(slot.finish(r)?.value)
}

fn big_b_qmc(ar: &ArCoefficient, k: usize, t: f64, s: f64, t2: f64) -> f64 {
    // variables (y, x_u, x_1..x_{k−2}); v = s(1 − y^{1/p}) absorbs c(s−v)
    let m = ar.model();
    let p = m.h0() - 0.5;
    let dims = k;
    let est = quad::qmc::integrate_cube(
        |x| {
            let y = x[0].max(f64::MIN_POSITIVE);
            let sv = s * y.powf(1.0 / p);
            let v = s - sv;
            let cv = m.c(sv) * s / p * y.powf(1.0 / p - 1.0);
            let u = t2 * x[1] / (1.0 - x[1]);
            let mut jac = t2 / ((1.0 - x[1]) * (1.0 - x[1]));
            let mut w = [0.0; MAX_DELTA_DEPTH];
            for (wi, &xi) in w.iter_mut().zip(&x[2..]) {
                *wi = t2 * xi / (1.0 - xi);
                jac *= t2 / ((1.0 - xi) * (1.0 - xi));
            }
            let inner = k - 2;
            let mut prod = ar.a(t + u) * ar.beta(t2 + w[0] + u) * ar.beta(t2 + v + w[inner - 1]);
            for l in 0..inner - 1 {
                prod *= ar.beta(t2 + w[l] + w[l + 1]);
            }
            cv * prod * jac
        },
        dims,
        QMC_POINTS / QMC_REPLICATES,
        QMC_REPLICATES,
        0xb0b ^ k as u64,
    );
    est.value
}

/// `k(t,s;t2) = ∫₀^∞ c(t+u) a(t2+u+s) du`.
pub fn eval_k_kernel(
    ar: &ArCoefficient,
    t: f64,
    s: f64,
    t2: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    if !(t > 0.0 && s > 0.0 && t2 > 0.0) {
        return invalid(format!(
            "k(t,s) needs positive arguments, got ({t}, {s}, {t2})"
        ));
    }
    let m = ar.model();
    let tol = if m.is_fbm() {
        q.tol()
    } else {
        q.tol_floor(TABLE_ACCURACY)
    };
    Ok(de::semi_infinite(|u| m.c(t + u) * ar.a(t2 + u + s), 0.0, t.max(t2 + s), tol)?.value)
}

/// The bound `c(t) α(t2+s) ≥ k(t,s;t2)`.
pub fn k_kernel_bound(ar: &ArCoefficient, t: f64, s: f64, t2: f64) -> f64 {
    ar.model().c(t) * ar.alpha(t2 + s)
}

/// `∫₀^U k(x,y) √(x/y) dy`, the weighted row sum of the `k` operator.
pub fn k_row_sum(
    ar: &ArCoefficient,
    x: f64,
    t2: f64,
    upper: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    if !(upper > 0.0) {
        return invalid("row-sum cutoff must be positive");
    }
    let slot = ErrorSlot::default();
    let f = |y: f64| {
        slot.value(eval_k_kernel(
            ar,
            x,
            y,
            t2,
            &q.with_rel_tol(q.rel_tol.max(1e-9)),
        )) * (x / y).sqrt()
    };
    let cuts = geometric_breakpoints(0.0, upper, Some(upper.min(t2) * 1e-3), None);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let r = de::finite(f, w[0], w[1], q.tol_floor(1e-8));
        total += slot.finish(r)?.value;
    }
    Ok(total)
}

/// Deterministic sample of `n` points in `[lo, hi]`, log-uniform.
pub fn log_sample(lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| lo * (hi / lo).powf(rng.gen::<f64>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LrdModel;

    fn fbm(h: f64) -> Arc<ArCoefficient> {
        Arc::new(ArCoefficient::new(&LrdModel::fbm(h).unwrap()).unwrap())
    }

    #[test]
    fn closed_form_values() {
        assert!((b_closed_form(0.25, 1.0, 1.0) - 0.112_539_539_519_638_7).abs() < 1e-14);
        assert!((b_closed_form(0.25, 3.0, 1.0) - 0.042_755_779_086_909_4).abs() < 1e-12);
        assert!((h_closed_form(0.25, 2.0, 1.0, 1.0) - 0.148_110_363_391_435_9).abs() < 1e-12);
    }

    #[test]
    fn numeric_b_matches_closed_form() {
        let q = QuadratureConfig::default();
        for h in [0.6, 0.9] {
            let ar = fbm(h);
            for &(t, s) in &[(0.1, 0.1), (0.1, 10.0), (10.0, 0.1), (1.0, 1.0)] {
                let n = eval_b(&ar, t, s, &q, KernelRoute::Numeric).unwrap();
                let c = b_closed_form(h - 0.5, t, s);
                assert!((n / c - 1.0).abs() < 1e-8, "H={h} ({t},{s}): {n} {c}");
            }
        }
    }

    #[test]
    fn h_series_matches_closed_form() {
        let ar = fbm(0.75);
        let table = KernelTable::build(ar, 2.0, &QuadratureConfig::default()).unwrap();
        let h = table.eval_h(1.0, 1.0).unwrap();
        assert!(
            (h / h_closed_form(0.25, 2.0, 1.0, 1.0) - 1.0).abs() < 1e-6,
            "{h}"
        );
        assert!(table.series_terms() >= 2);
        assert!(table.truncation_estimate() < 1e-8);
        assert!(matches!(
            table.eval_b_n(2, 1.0, 1e40),
            Err(LrdError::GridCoverage { .. })
        ));
    }

    #[test]
    fn delta_two_closed_form() {
        // fBm: δ_2(u,v;t) = C² ln((t+v)/(t+u)) / (v − u)
        let ar = fbm(0.75);
        let c = (PI * 0.25).sin() / PI;
        let (u, v, t): (f64, f64, f64) = (0.5, 2.0, 3.0);
        let exact = c * c * ((t + v) / (t + u)).ln() / (v - u);
        let got = eval_delta_k(&ar, 2, u, v, t, &QuadratureConfig::default()).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-10);
        assert!(matches!(
            eval_delta_k(&ar, 7, u, v, t, &QuadratureConfig::default()),
            Err(LrdError::UnsupportedDepth { .. })
        ));
    }

    #[test]
    fn k_kernel_respects_bound() {
        let ar = fbm(0.75);
        let q = QuadratureConfig::default();
        let k = eval_k_kernel(&ar, 1.0, 1.0, 2.0, &q).unwrap();
        assert!(k > 0.0 && k <= k_kernel_bound(&ar, 1.0, 1.0, 2.0));
    }
}
