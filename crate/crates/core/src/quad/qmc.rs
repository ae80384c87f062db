//! Randomized Halton integration on the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Estimate;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Maximum supported dimension.
pub const MAX_DIM: usize = PRIMES.len();

pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Mean of `f` over `[0,1]^dim` from `replicates` independently shifted
/// Halton point sets of `points` each. The error is the standard error
/// across replicates.
pub fn integrate_cube<F>(f: F, dim: usize, points: usize, replicates: usize, seed: u64) -> Estimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(dim >= 1 && dim <= MAX_DIM && replicates >= 2);
    let means: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            let mut x = vec![0.0; dim];
            let mut sum = 0.0;
            let mut comp = 0.0;
            for i in 1..=points as u64 {
                for (d, xd) in x.iter_mut().enumerate() {
                    let u = radical_inverse(i, PRIMES[d]) + shift[d];
                    *xd = if u >= 1.0 { u - 1.0 } else { u };
                }
                let y = f(&x) - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            sum / points as f64
        })
        .collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        error: (var / n).sqrt(),
        evaluations: points * replicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }

    #[test]
    fn product_integral() {
        let e = integrate_cube(|x| x.iter().map(|v| 2.0 * v).product(), 5, 16384, 16, 7);
        assert!((e.value - 1.0).abs() < 5.0 * e.error + 1e-4, "{:?}", e);
        assert!(e.error < 3e-3);
    }

    #[test]
    fn deterministic_for_seed() {
        let f = |x: &[f64]| x[0] * x[1];
        let a = integrate_cube(f, 2, 512, 4, 11);
        let b = integrate_cube(f, 2, 512, 4, 11);
        assert_eq!(a.value, b.value);
    }
}
