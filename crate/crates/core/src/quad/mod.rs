//! Quadrature toolkit shared by every integral in the crate.
//!
//! * [`gk`]: globally adaptive Gauss–Kronrod (21 point) for smooth integrands.
//! * [`de`]: tanh-sinh and exp-sinh double-exponential rules for algebraic
//!   endpoint singularities and slowly decaying tails.
//! * [`gauss_jacobi`]: weighted rules for a known endpoint exponent.
//! * [`qmc`]: randomized Halton points for deep nested integrals.
//! * [`LogGrid`]: trapezoid rule in `ln u`, used as the Nyström node set.

pub mod de;
pub mod gauss_jacobi;
pub mod gk;
pub mod qmc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerances and cut-offs that govern every integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadratureConfig {
    /// Target relative error per integral.
    pub rel_tol: f64,
    /// Absolute error floor.
    pub abs_tol: f64,
    /// Split point `U` for `∫₀^∞`: `[0, U]` is handled as a finite range, the
    /// rest by the tail rule.
    pub truncation_radius: f64,
    /// Width of the endpoint interval given to weighted (Gauss–Jacobi) nodes.
    pub singularity_split: f64,
    /// Budget for adaptive bisection.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            truncation_radius: 1e4,
            singularity_split: 0.05,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return invalid("relTol and absTol must be positive");
        }
        if !(self.singularity_split > 0.0 && self.singularity_split < self.truncation_radius) {
            return invalid("need 0 < singularitySplit < truncationRadius");
        }
        if self.max_subdivisions == 0 {
            return invalid("maxSubdivisions must be positive");
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn tol(&self) -> Tol {
        Tol {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    /// [`tol`](Self::tol) with the relative target no tighter than `floor`;
    /// for integrands built from interpolated tables.
    pub fn tol_floor(&self, floor: f64) -> Tol {
        Tol {
            rel: self.rel_tol.max(floor),
            ..self.tol()
        }
    }

    /// Tolerance for integrals nested inside an outer quadrature.
    pub fn inner_tol(&self) -> Tol {
        Tol {
            rel: (self.rel_tol * 0.1).max(1e-14),
            abs: self.abs_tol * 0.1,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Tolerance used when building cached tables: purely relative, tight.
pub const TABLE_TOL: Tol = Tol {
    rel: 1e-12,
    abs: 1e-300,
    max_subdivisions: 4000,
};

/// Take the value of a quadrature result, accepting a best-effort estimate
/// when the error target was missed. Used where the caller cannot propagate
/// errors (cached tables, inner integrals); a warning is logged.
pub fn lenient<T: Into<f64>>(r: Result<T>, what: &str) -> f64 {
    match r {
        Ok(e) => e.into(),
        Err(crate::error::LrdError::Quadrature {
            estimate, error, ..
        }) if estimate.is_finite() => {
            log::warn!("{what}: accepting estimate {estimate:e} with error {error:e}");
            estimate
        }
        Err(e) => {
            log::warn!("{what}: {e}");
            f64::NAN
        }
    }
}

/// Holds the first error raised inside an integrand closure so the caller
/// can report it instead of the outer rule's generic failure.
#[derive(Debug, Default)]
pub struct ErrorSlot(std::sync::Mutex<Option<crate::error::LrdError>>);

impl ErrorSlot {
    /// Unwrap `r`, recording the error and returning NaN on failure.
    pub fn value<T: Into<f64>>(&self, r: Result<T>) -> f64 {
        match r {
            Ok(v) => v.into(),
            Err(e) => {
                let mut slot = self.0.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        }
    }

    /// The recorded error if any, otherwise `r`.
    pub fn finish<T>(&self, r: Result<T>) -> Result<T> {
        match self.0.lock().unwrap().take() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

/// Error targets handed to an individual rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Tol {
    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    pub fn scaled(self, factor: f64) -> Tol {
        Tol {
            rel: (self.rel * factor).max(1e-15),
            abs: self.abs * factor,
            ..self
        }
    }
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Estimate {
    pub fn zero() -> Self {
        Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }
    }
}

impl From<Estimate> for f64 {
    fn from(e: Estimate) -> f64 {
        e.value
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            evaluations: self.evaluations + rhs.evaluations,
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::zero(), |a, b| a + b)
    }
}

/// Breakpoints for `[a, b]` refined geometrically towards features of width
/// `left_scale` just right of `a` and `right_scale` just left of `b`.
pub fn geometric_breakpoints(
    a: f64,
    b: f64,
    left_scale: Option<f64>,
    right_scale: Option<f64>,
) -> Vec<f64> {
    let len = b - a;
    let mid = a + 0.5 * len;
    let mut left = vec![a];
    if let Some(s) = left_scale {
        let mut w = s;
        while w < 0.25 * len {
            left.push(a + w);
            w *= 4.0;
        }
    }
    let mut right = vec![b];
    if let Some(s) = right_scale {
        let mut w = s;
        while w < 0.25 * len {
            right.push(b - w);
            w *= 4.0;
        }
    }
    left.push(mid);
    left.extend(right.into_iter().rev());
    left.dedup_by(|x, y| (*x - *y).abs() <= 0.0);
    left
}

/// Trapezoid rule in `y = ln u` on `[ln lo, ln hi]`; exponentially accurate
/// for integrands analytic in a strip around the real `y` axis.
///
/// The last weight carries the analytic tail `∫_U^∞ u^{-2}` of an integrand
/// that decays like `u^{-2}`, which is the decay of every kernel product the
/// Nyström iteration integrates.
#[derive(Debug, Clone)]
pub struct LogGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub step: f64,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        let (ylo, yhi) = (lo.ln(), hi.ln());
        let n = ((yhi - ylo) / step).ceil() as usize + 1;
        let h = (yhi - ylo) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (ylo + h * i as f64).exp()).collect();
        let mut weights: Vec<f64> = nodes.iter().map(|u| h * u).collect();
        weights[0] *= 0.5;
        weights[n - 1] = 0.5 * h * nodes[n - 1] + nodes[n - 1];
        LogGrid {
            nodes,
            weights,
            step: h,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

/// Neumaier-compensated sum; result does not depend on how terms were
/// produced, only on their order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_integrates_rational() {
        // ∫₀^∞ du / (1+u)^2 = 1
        let g = LogGrid::new(1e-14, 1e14, 0.25);
        let s: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(u, w)| w / (1.0 + u).powi(2))
            .sum();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn breakpoints_are_sorted() {
        let bp = geometric_breakpoints(0.0, 100.0, Some(1e-3), Some(1e-2));
        assert!(bp.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bp[0], 0.0);
        assert_eq!(*bp.last().unwrap(), 100.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            singularity_split: 1e5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
