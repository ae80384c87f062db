//! Process models: the MA(∞) coefficient `c`, its integral `g`, and the
//! second-order structure they induce.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, LrdError, Result};
use crate::quad::{de, gk, lenient, QuadratureConfig, Tol, TABLE_TOL};
use crate::table::LogTable;

const TABLE_LO: f64 = 1e-8;
const TABLE_HI: f64 = 1e8;
const TABLE_PER_DECADE: usize = 64;
/// Relative accuracy of the interpolated `c` and `g` tables.
pub const TABLE_ACCURACY: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    FbmClosedForm,
    TwoIndexDensity,
}

/// Serialized model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "H0", default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    #[serde(rename = "scaleK", default, skip_serializing_if = "Option::is_none")]
    pub scale_k: Option<f64>,
}

#[derive(Debug, Default)]
struct Tables {
    c: OnceLock<LogTable>,
    g: OnceLock<LogTable>,
}

/// A stationary-increment process `X(t) = ∫ {g(t−s) − g(−s)} dW(s)` with
/// `c = g'` the Laplace transform of a power-law spectral density.
///
/// Cheap to clone; cached tables are shared between clones.
#[derive(Debug, Clone)]
pub struct LrdModel {
    kind: ModelKind,
    h: f64,
    h0: f64,
    scale_k: f64,
    tables: Arc<Tables>,
}

/// Variogram constant of fBm: `σ²(t) = v(H) t^{2H}`.
pub fn fbm_variogram_constant(h: f64) -> f64 {
    gamma(2.0 - 2.0 * h) * (PI * h).cos() / (PI * h * (1.0 - 2.0 * h))
}

fn check_index(name: &str, v: f64) -> Result<()> {
    if !(v > 0.5 && v < 1.0) {
        return Err(LrdError::InvalidModel(format!("{name} must lie in (1/2, 1), got {v}")));
    }
    Ok(())
}

impl LrdModel {
    pub fn fbm(h: f64) -> Result<Self> {
        check_index("H", h)?;
        Ok(LrdModel {
            kind: ModelKind::FbmClosedForm,
            h,
            h0: h,
            scale_k: ((h - 0.5) * PI).sin() / PI,
            tables: Arc::default(),
        })
    }

    /// Density `f(s) = K s^{1/2−H} (1+s)^{H−H0}`; `K` defaults to
    /// `sin(π(H−1/2))/π` so that small-`s` behaviour matches fBm(H).
    pub fn two_index(h: f64, h0: f64, scale_k: Option<f64>) -> Result<Self> {
        check_index("H", h)?;
        check_index("H0", h0)?;
        let scale_k = scale_k.unwrap_or(((h - 0.5) * PI).sin() / PI);
        if !(scale_k > 0.0 && scale_k.is_finite()) {
            return Err(LrdError::InvalidModel(format!("scaleK must be positive, got {scale_k}")));
        }
        let model = LrdModel {
            kind: ModelKind::TwoIndexDensity,
            h,
            h0,
            scale_k,
            tables: Arc::default(),
        };
        model.check_integrability()?;
        Ok(model)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec.kind.as_str() {
            "fbm" => {
                if let Some(h0) = spec.h0 {
                    if h0 != spec.h {
                        return Err(LrdError::InvalidModel("fbm requires H0 = H".into()));
                    }
                }
                Self::fbm(spec.h)
            }
            "two_index" => {
                let h0 = spec
                    .h0
                    .ok_or_else(|| LrdError::InvalidModel("two_index requires H0".into()))?;
                Self::two_index(spec.h, h0, spec.scale_k)
            }
            other => Err(LrdError::InvalidModel(format!("unknown kind '{other}'"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn spec(&self) -> ModelSpec {
        match self.kind {
            ModelKind::FbmClosedForm => ModelSpec {
                kind: "fbm".into(),
                h: self.h,
                h0: None,
                scale_k: None,
            },
            ModelKind::TwoIndexDensity => ModelSpec {
                kind: "two_index".into(),
                h: self.h,
                h0: Some(self.h0),
                scale_k: Some(self.scale_k),
            },
        }
    }

    /// The same density handled by the numerical code paths. For fBm this is
    /// the two-index density with `H0 = H`.
    pub fn as_numeric(&self) -> LrdModel {
        LrdModel {
            kind: ModelKind::TwoIndexDensity,
            h: self.h,
            h0: self.h0,
            scale_k: self.scale_k,
            tables: if self.kind == ModelKind::TwoIndexDensity {
                self.tables.clone()
            } else {
                Arc::default()
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn is_fbm(&self) -> bool {
        self.kind == ModelKind::FbmClosedForm
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// `d = H − 1/2`.
    pub fn d(&self) -> f64 {
        self.h - 0.5
    }

    pub fn scale_k(&self) -> f64 {
        self.scale_k
    }

    /// Spectral density `f(s)` of the measure ν.
    pub fn density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.scale_k * s.powf(0.5 - self.h) * (1.0 + s).powf(self.h - self.h0)
    }

    fn check_integrability(&self) -> Result<()> {
        let f = |s: f64| self.density(s) / (1.0 + s);
        let head = de::finite(f, 0.0, 1.0, TABLE_TOL)?;
        let tail = de::semi_infinite(f, 1.0, 1.0, TABLE_TOL)?;
        let total = head.value + tail.value;
        let a = 1.5 - self.h;
        let b = self.h0 - 0.5;
        let exact = self.scale_k * (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp();
        if !total.is_finite() || (total / exact - 1.0).abs() > 1e-6 {
            return Err(LrdError::InvalidModel(format!(
                "∫ f(s)/(1+s) ds = {total} does not converge (expected {exact})"
            )));
        }
        Ok(())
    }

    /// Laplace integral for `c(t)` at tolerance `tol`.
    fn c_integral(&self, t: f64, tol: Tol) -> Result<f64> {
        // c(t) = K t^{H0−3/2} ∫ e^{−x} x^{1/2−H} (t+x)^{H−H0} dx
        let (h, h0) = (self.h, self.h0);
        let e = de::exp_sinh(
            |x, _| (-x).exp() * x.powf(0.5 - h) * (t + x).powf(h - h0),
            0.0,
            1.0,
            tol,
        )?;
        Ok(self.scale_k * t.powf(h0 - 1.5) * e.value)
    }

    fn g_integral(&self, t: f64, tol: Tol) -> Result<f64> {
        // g(t) = ∫ f(s) (1 − e^{−ts}) / s ds
        let (h, h0) = (self.h, self.h0);
        let e = de::exp_sinh(
            |s, _| s.powf(-0.5 - h) * (1.0 + s).powf(h - h0) * -(-t * s).exp_m1(),
            0.0,
            1.0 / t,
            tol,
        )?;
        Ok(self.scale_k * e.value)
    }

    fn c_table(&self) -> &LogTable {
        self.tables.c.get_or_init(|| {
            LogTable::build(TABLE_LO, TABLE_HI, TABLE_PER_DECADE, |t| {
                Ok(lenient(self.c_integral(t, TABLE_TOL), "c table"))
            })
            .expect("c is positive on the table range")
        })
    }

    fn g_table(&self) -> &LogTable {
        self.tables.g.get_or_init(|| {
            LogTable::build(TABLE_LO, TABLE_HI, TABLE_PER_DECADE, |t| {
                Ok(lenient(self.g_integral(t, TABLE_TOL), "g table"))
            })
            .expect("g is positive on the table range")
        })
    }

    /// MA(∞) coefficient computed directly to the requested tolerance.
    pub fn eval_c(&self, t: f64, q: &QuadratureConfig) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            ModelKind::FbmClosedForm => Ok(self.c(t)),
            ModelKind::TwoIndexDensity => self.c_integral(t, q.tol()),
        }
    }

    /// `g(t) = ∫₀^t c` computed directly to the requested tolerance.
    pub fn eval_g(&self, t: f64, q: &QuadratureConfig) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            ModelKind::FbmClosedForm => Ok(self.g(t)),
            ModelKind::TwoIndexDensity => self.g_integral(t, q.tol()),
        }
    }

    /// Fast `c(t)`: closed form for fBm, cached table otherwise.
    pub fn c(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModelKind::FbmClosedForm => {
                let d = self.d();
                t.powf(d - 1.0) / gamma(d)
            }
            ModelKind::TwoIndexDensity => self.c_table().eval(t),
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModelKind::FbmClosedForm => {
                let d = self.d();
                t.powf(d) / gamma(d + 1.0)
            }
            ModelKind::TwoIndexDensity => self.g_table().eval(t),
        }
    }

    /// `c(t) t^{3/2−H0}` as `t → 0`: the constant `K Γ(3/2 − H)`.
    pub fn c_local_constant(&self) -> f64 {
        self.scale_k * gamma(1.5 - self.h)
    }

    /// `g(x + h) − g(x)` without cancellation for `h ≪ x`.
    pub fn g_increment(&self, x: f64, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        if x <= 0.0 {
            return self.g(x + h);
        }
        if self.is_fbm() {
            // g(x)·((1 + h/x)^d − 1)
            let d = self.d();
            return self.g(x) * (d * (h / x).ln_1p()).exp_m1();
        }
        if h >= 0.25 * x {
            return self.g(x + h) - self.g(x);
        }
        lenient(
            gk::integrate(|u| self.c(u), x, x + h, TABLE_TOL),
            "g increment",
        )
    }

    /// `ĉ(s) = ∫₀^∞ e^{−st} c(t) dt = ∫₀^∞ f(x)/(s + x) dx`, continued
    /// analytically to `s ∉ (−∞, 0]`.
    pub fn c_hat(&self, s: Complex64, tol: Tol) -> Result<Complex64> {
        if self.is_fbm() {
            return Ok(s.powf(0.5 - self.h));
        }
        let (h, h0, k) = (self.h, self.h0, self.scale_k);
        let f = |x: f64| k * x.powf(0.5 - h) * (1.0 + x).powf(h - h0);
        let mut points = vec![s.norm()];
        if s.re < 0.0 {
            let x0 = -s.re;
            let w = s.im.abs();
            points.push(x0);
            points.push((x0 - 2.0 * w).max(0.5 * x0));
            points.push(x0 + 2.0 * w);
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut total = Complex64::new(0.0, 0.0);
        let mut a = 0.0;
        for &b in &points {
            total += de::tanh_sinh_complex(|x, _, _| f(x) / (s + x), a, b, tol)?;
            a = b;
        }
        total += de::exp_sinh_complex(|x, _| f(x) / (s + x), a, a, tol)?;
        Ok(total)
    }

    /// `ĉ(y)` for real `y > 0`.
    pub fn laplace_c(&self, y: f64, q: &QuadratureConfig) -> Result<f64> {
        if !(y > 0.0) {
            return invalid(format!("Laplace argument must be positive, got {y}"));
        }
        Ok(self.c_hat(Complex64::new(y, 0.0), q.tol())?.re)
    }

    /// `σ²(t) = E|X(t) − X(0)|²`.
    pub fn variogram(&self, t: f64, q: &QuadratureConfig) -> Result<f64> {
        if t < 0.0 {
            return invalid(format!("variogram needs t ≥ 0, got {t}"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            ModelKind::FbmClosedForm => Ok(fbm_variogram_constant(self.h) * t.powf(2.0 * self.h)),
            ModelKind::TwoIndexDensity => self.variogram_numeric(t, q),
        }
    }

    /// Variogram from the moving-average kernel:
    /// `∫₀^t g(u)² du + ∫₀^∞ {g(t+x) − g(x)}² dx`.
    pub fn variogram_numeric(&self, t: f64, q: &QuadratureConfig) -> Result<f64> {
        let tol = q.tol_floor(TABLE_ACCURACY);
        let head = de::finite(|u| self.g(u).powi(2), 0.0, t, tol)?;
        let tail = de::semi_infinite(|x| self.g_increment(x, t).powi(2), 0.0, t, tol)?;
        Ok(head.value + tail.value)
    }

    /// `E[(X(t+s) − X(t))(X(s) − X(0))]`.
    pub fn increment_autocov(&self, lag: f64, span: f64, q: &QuadratureConfig) -> Result<f64> {
        if !(span > 0.0) {
            return invalid(format!("increment span must be positive, got {span}"));
        }
        let t = lag.abs();
        match self.kind {
            ModelKind::FbmClosedForm => {
                let p = 2.0 * self.h;
                let v = fbm_variogram_constant(self.h);
                if t == 0.0 {
                    return Ok(v * span.powf(p));
                }
                if t <= span {
                    return Ok(0.5
                        * v
                        * ((t + span).powf(p) + (span - t).powf(p) - 2.0 * t.powf(p)));
                }
                // t^p {(1+x)^p + (1−x)^p − 2}/2 with x = span/t, via the
                // series-free form that avoids cancellation for small x
                let x = span / t;
                let up = (p * x.ln_1p()).exp_m1();
                let down = (p * (-x).ln_1p()).exp_m1();
                Ok(0.5 * v * t.powf(p) * (up + down))
            }
            ModelKind::TwoIndexDensity => self.increment_autocov_numeric(t, span, q),
        }
    }

    /// `∫ k(t+y) k(y) dy` with `k(y) = g(y+s) − g(y)`.
    pub fn increment_autocov_numeric(
        &self,
        lag: f64,
        span: f64,
        q: &QuadratureConfig,
    ) -> Result<f64> {
        let t = lag.abs();
        let s = span;
        let tol = q.tol_floor(TABLE_ACCURACY);
        let k = |y: f64| self.g_increment(y, s);
        let mut total = 0.0;
        // y ∈ (−s, 0): k(y) = g(y+s), with a kink of k(t+y) at y = −t
        let mut cuts = vec![-s];
        if t < s && t > 0.0 {
            cuts.push(-t);
        }
        cuts.push(0.0);
        if t > s {
            cuts.push(t);
        }
        for w in cuts.windows(2) {
            total += de::finite(|y| k(t + y) * k(y), w[0], w[1], tol)?.value;
        }
        let last = *cuts.last().unwrap();
        let scale = if last > 0.0 { last } else { s };
        total += de::semi_infinite(|y| k(t + y) * k(y), last, scale, tol)?.value;
        Ok(total)
    }

    /// Increment autocovariance from the variogram by polarization.
    pub fn increment_autocov_polarized(
        &self,
        lag: f64,
        span: f64,
        q: &QuadratureConfig,
    ) -> Result<f64> {
        let t = lag.abs();
        let s = span;
        Ok(0.5
            * (self.variogram(t + s, q)? + self.variogram((t - s).abs(), q)?
                - 2.0 * self.variogram(t, q)?))
    }

    /// Long-lag asymptotic constant: increment autocovariance
    /// `∼ t^{2H−2} s² Γ(2−2H) sin(π(H−1/2))/π`, times the squared ratio of
    /// the density constant to its fBm value.
    pub fn increment_autocov_asymptote(&self, lag: f64, span: f64) -> f64 {
        let d = self.d();
        let k_ratio = self.scale_k / ((PI * d).sin() / PI);
        k_ratio.powi(2)
            * lag.abs().powf(2.0 * self.h - 2.0)
            * span
            * span
            * gamma(2.0 - 2.0 * self.h)
            * (PI * d).sin()
            / PI
    }
}
