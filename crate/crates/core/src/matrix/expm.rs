//! Matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant.

use super::{ComplexMatrix, Lu, C64};
use crate::error::Result;

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn lin(terms: &[(f64, &ComplexMatrix)], n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n, n);
    for (c, m) in terms {
        out = &out + &m.scale(C64::new(*c, 0.0));
    }
    out
}

pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square("expm")?;
    a.require_finite()?;
    let norm = a.norm_one();
    let squarings = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a.scale(C64::new(2f64.powi(-squarings), 0.0));

    let b = &PADE_13;
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let inner_u = a6.matmul(&lin(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n));
    let u = a.matmul(&(&inner_u + &lin(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n)));
    let inner_v = a6.matmul(&lin(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n));
    let v = &inner_v + &lin(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);

    let mut r = Lu::factor(&(&v - &u))?.solve(&(&v + &u));
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = a.rows();
        let mut sum = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..terms {
            term = term.matmul(a).scale(C64::new(1.0 / k as f64, 0.0));
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn zero_gives_identity() {
        let e = expm(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert!((&e - &ComplexMatrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let d = [C64::new(0.3, 1.0), C64::new(-2.0, 0.5)];
        let e = expm(&ComplexMatrix::from_diag(&d)).unwrap();
        for (i, z) in d.iter().enumerate() {
            assert!((e[(i, i)] - z.exp()).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_taylor_series_with_squaring() {
        let a = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 2.0), C64::new(3.0, 0.0)],
            vec![C64::new(-2.0, 0.5), C64::new(0.0, -4.0)],
        ])
        .unwrap();
        let e = expm(&a).unwrap();
        let t = taylor(&a, 120);
        assert!((&e - &t).max_abs() < 1e-11 * t.max_abs());
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let a = ComplexMatrix::from_real_rows(&[[0.0, 2.0], [0.0, 0.0]]).unwrap();
        let e = expm(&a).unwrap();
        let want = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!((&e - &want).max_abs() < 1e-15);
    }
}
