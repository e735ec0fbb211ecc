//! Complex Schur decomposition: Householder reduction to Hessenberg form
//! followed by implicitly single-shifted QR with Givens rotations.

use serde::Serialize;

use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Iteration budget per eigenvalue before non-convergence is reported.
const ITERS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues with algebraic multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub spectral_radius: f64,
}

impl Spectrum {
    fn from_eigenvalues(eigenvalues: Vec<C64>) -> Self {
        let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Self { eigenvalues, spectral_radius }
    }
}

/// All eigenvalues of a square matrix (diagonal of its Schur form).
pub fn spectrum(e: &ComplexMatrix) -> Result<Spectrum> {
    let (_, t) = schur_form(e)?;
    Ok(Spectrum::from_eigenvalues(t.diagonal()))
}

/// Returns `(U, T)` with `U` unitary, `T` upper triangular and `E = U T U^*`.
pub fn schur_form(e: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = e.require_square("schur_form")?;
    e.require_finite()?;
    let mut h = e.clone();
    let mut q = ComplexMatrix::identity(n);
    hessenberg(&mut h, &mut q);
    qr_iterate(&mut h, &mut q)?;
    Ok((q, h))
}

fn hessenberg(h: &mut ComplexMatrix, q: &mut ComplexMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0] == ZERO { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let beta = 2.0 / vnorm2;
        // H <- P H
        for j in 0..n {
            let s: C64 = v.iter().enumerate().map(|(m, vm)| vm.conj() * h[(k + 1 + m, j)]).sum();
            let s = s * beta;
            for (m, vm) in v.iter().enumerate() {
                h[(k + 1 + m, j)] -= vm * s;
            }
        }
        // H <- H P, Q <- Q P
        for mat in [&mut *h, &mut *q] {
            for i in 0..n {
                let s: C64 = v.iter().enumerate().map(|(m, vm)| mat[(i, k + 1 + m)] * vm).sum();
                let s = s * beta;
                for (m, vm) in v.iter().enumerate() {
                    mat[(i, k + 1 + m)] -= s * vm.conj();
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let (ax, ay) = (x.norm(), y.norm());
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let (l1, l2) = (half_tr + root, half_tr - root);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_iterate(h: &mut ComplexMatrix, q: &mut ComplexMatrix) -> Result<()> {
    let n = h.rows();
    if n == 1 {
        return Ok(());
    }
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let budget = ITERS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(Error::NumericalFailure(format!(
                "shifted QR did not converge within {budget} iterations ({} eigenvalues unresolved)",
                hi + 1
            )));
        }
        let mu = if since_deflation.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75, 0.5) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        sweep(h, q, lo, hi, mu);
    }
    Ok(())
}

fn sweep(h: &mut ComplexMatrix, q: &mut ComplexMatrix, lo: usize, hi: usize, mu: C64) {
    let n = h.rows();
    for k in lo..hi {
        let (x, y) = if k == lo {
            (h[(lo, lo)] - mu, h[(lo + 1, lo)])
        } else {
            (h[(k, k - 1)], h[(k + 1, k - 1)])
        };
        let (c, s) = givens(x, y);
        let first_col = if k == lo { lo } else { k - 1 };
        for j in first_col..n {
            let (a, b) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = a * c + s * b;
            h[(k + 1, j)] = -s.conj() * a + b * c;
        }
        let last_row = (k + 2).min(hi);
        for i in 0..=last_row {
            let (a, b) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = a * c + b * s.conj();
            h[(i, k + 1)] = -a * s + b * c;
        }
        for i in 0..n {
            let (a, b) = (q[(i, k)], q[(i, k + 1)]);
            q[(i, k)] = a * c + b * s.conj();
            q[(i, k + 1)] = -a * s + b * c;
        }
        if k > lo {
            h[(k + 1, k - 1)] = ZERO;
        }
    }
}

/// Minimum-cost matching of two eigenvalue multisets under `|lambda - mu|`.
///
/// Returns the largest pairwise distance in an optimal assignment, or
/// `None` when the multisets have different sizes.
pub fn match_spectra(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let assignment = hungarian(&cost);
    Some(assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max))
}

/// Hungarian algorithm with potentials; returns `col[i]` for each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            col[p[j] - 1] = j - 1;
        }
    }
    col
}
