//! Globally adaptive 21-point Gauss–Kronrod quadrature (QUADPACK QAG scheme).

use super::{Estimate, Tol};
use crate::error::{LrdError, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

/// Adaptive integration of a smooth (or mildly singular) integrand over a
/// finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::zero());
    }
    if a > b {
        let e = integrate(f, b, a, tol)?;
        return Ok(Estimate {
            value: -e.value,
            ..e
        });
    }
    let mut segs = vec![qk21(&f, a, b)];
    let mut evaluations = 21;
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let target = tol.target(value);
        if error <= target {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        // stall on roundoff: every remaining segment is at the noise floor
        let (idx, worst) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, s)| (i, *s))
            .expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let tiny = mid <= worst.a || mid >= worst.b;
        if segs.len() >= tol.max_subdivisions || tiny || !value.is_finite() {
            if error <= 10.0 * target && value.is_finite() {
                return Ok(Estimate {
                    value,
                    error,
                    evaluations,
                });
            }
            return Err(LrdError::Quadrature {
                estimate: value,
                error,
                target,
                evaluations,
            });
        }
        let l = qk21(&f, worst.a, mid);
        let r = qk21(&f, mid, worst.b);
        evaluations += 42;
        segs[idx] = l;
        segs.push(r);
    }
}

/// Sums [`integrate`] over consecutive panels `[bp[i], bp[i+1]]`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    tol: Tol,
) -> Result<Estimate> {
    // each panel gets the full relative target; absolute floor is shared
    let n = breakpoints.len().saturating_sub(1).max(1) as f64;
    let panel_tol = Tol {
        abs: tol.abs / n,
        ..tol
    };
    let mut total = Estimate::zero();
    for w in breakpoints.windows(2) {
        total = total + integrate(&f, w[0], w[1], panel_tol)?;
    }
    Ok(total)
}
