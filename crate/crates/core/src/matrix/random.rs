use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{inner, normalize, ComplexMatrix, C64};
use crate::error::{Error, Result};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian (`E|z|^2 = 1`).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// SplitMix64-style mixing of a base seed with tags, for independent streams.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}

pub(crate) fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary matrix.
///
/// Gram-Schmidt QR of a Ginibre sample; keeping `R` with a positive real
/// diagonal is the phase fix that makes the distribution Haar.
pub fn random_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("random_unitary needs n >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let g = ginibre(n, n, &mut rng);
        let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = g.column(j);
            for _ in 0..2 {
                for qk in &q {
                    let c = inner(&v, qk);
                    for (vi, qi) in v.iter_mut().zip(qk) {
                        *vi -= c * qi;
                    }
                }
            }
            if normalize(&mut v) < 1e-8 {
                ok = false;
                break;
            }
            q.push(v);
        }
        if ok {
            return Ok(ComplexMatrix::from_columns(&q));
        }
    }
}
