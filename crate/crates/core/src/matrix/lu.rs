use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    // L below the diagonal (unit diagonal implied), U on and above.
    factors: ComplexMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        let n = a.require_square("LU factorization")?;
        let mut f = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pivot_abs) = (k..n)
                .map(|i| (i, f[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pivot_abs <= f64::EPSILON * scale * n as f64 || pivot_abs == 0.0 {
                return Err(Error::NumericalFailure(format!(
                    "singular matrix in LU (pivot {pivot_abs:e} at column {k})"
                )));
            }
            if p != k {
                for j in 0..n {
                    let t = f[(k, j)];
                    f[(k, j)] = f[(p, j)];
                    f[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            let pivot = f[(k, k)];
            for i in (k + 1)..n {
                let l = f[(i, k)] / pivot;
                f[(i, k)] = l;
                if l == ZERO {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = f[(k, j)];
                    f[(i, j)] -= l * u;
                }
            }
        }
        Ok(Self { n, factors: f, perm })
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let f = &self.factors;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= f[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= f[(i, j)] * x[j];
            }
            x[i] = s / f[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(b.rows(), self.n);
        let mut out = ComplexMatrix::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            out.set_column(j, &x);
        }
        out
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve(&ComplexMatrix::identity(self.n))
    }

    pub fn determinant(&self) -> C64 {
        let mut det: C64 = (0..self.n).map(|i| self.factors[(i, i)]).product();
        // parity of the permutation
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let a = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(2.0, 1.0), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, -1.0), C64::new(0.5, 0.0), C64::new(0.0, 3.0)],
            vec![C64::new(4.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 1.0)],
        ])
        .unwrap();
        let lu = Lu::factor(&a).unwrap();
        let inv = lu.inverse();
        let id = &a * &inv;
        assert!((&id - &ComplexMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn determinant_with_pivoting() {
        let a = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        let d = Lu::factor(&a).unwrap().determinant();
        assert!((d - C64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::factor(&a), Err(Error::NumericalFailure(_))));
    }
}
