//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of a working copy `W = E V` are rotated pairwise until they are
//! mutually orthogonal to machine precision; then `sigma_j = ||w_j||` and
//! `u_j = w_j / sigma_j`. The stopping rule `|w_p^* w_q| <= eps ||w_p|| ||w_q||`
//! (scaled by the dimension) keeps the normalized left vectors orthogonal even
//! for tiny singular values.

use serde::Serialize;

use super::{complete_basis, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Full SVD of a square matrix with the norming cluster identified.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SingularData {
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Left singular vectors as columns.
    pub left: ComplexMatrix,
    /// Right singular vectors as columns.
    pub right: ComplexMatrix,
    pub cluster_tol: f64,
    /// Number of singular values with `sigma_1 - sigma_i <= cluster_tol * sigma_1`.
    pub top_cluster_dim: usize,
}

impl SingularData {
    pub fn norm(&self) -> f64 {
        self.values[0]
    }

    pub fn left_vector(&self, i: usize) -> Vec<C64> {
        self.left.column(i)
    }

    pub fn right_vector(&self, i: usize) -> Vec<C64> {
        self.right.column(i)
    }

    /// Orthonormal basis of the norming cluster (right singular vectors).
    pub fn norming_basis(&self) -> Vec<Vec<C64>> {
        (0..self.top_cluster_dim).map(|i| self.right_vector(i)).collect()
    }

    /// `L diag(values) R^*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut ls = self.left.clone();
        for j in 0..n {
            for i in 0..ls.rows() {
                ls[(i, j)] *= self.values[j];
            }
        }
        ls.matmul(&self.right.adjoint())
    }
}

struct Jacobi {
    cols: Vec<Vec<C64>>,
    v: Option<Vec<Vec<C64>>>,
}

impl Jacobi {
    fn run(&mut self) -> Result<()> {
        let n = self.cols.len();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n.saturating_sub(1) {
                for q in (p + 1)..n {
                    rotated |= self.rotate(p, q);
                }
            }
            if !rotated {
                return Ok(());
            }
        }
        Err(Error::NumericalFailure(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )))
    }

    fn rotate(&mut self, p: usize, q: usize) -> bool {
        let (wp, wq) = (&self.cols[p], &self.cols[q]);
        let alpha: f64 = wp.iter().map(|z| z.norm_sqr()).sum();
        let beta: f64 = wq.iter().map(|z| z.norm_sqr()).sum();
        let gamma: C64 = wp.iter().zip(wq).map(|(a, b)| a.conj() * b).sum();
        let g = gamma.norm();
        let n = wp.len().max(2) as f64;
        if g == 0.0 || g <= n * f64::EPSILON * alpha.sqrt() * beta.sqrt() {
            return false;
        }
        let phase = (gamma / g).conj();
        let zeta = (beta - alpha) / (2.0 * g);
        let t = if zeta == 0.0 {
            1.0
        } else {
            zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = c * t;
        if s.abs() < f64::MIN_POSITIVE {
            return false;
        }
        apply(&mut self.cols, p, q, phase, c, s);
        if let Some(v) = self.v.as_mut() {
            apply(v, p, q, phase, c, s);
        }
        true
    }
}

fn apply(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b * phase;
        *a = x * c - y * s;
        *b = x * s + y * c;
    }
}

fn columns_of(m: &ComplexMatrix) -> Vec<Vec<C64>> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

/// Singular values in descending order (any shape).
pub fn singular_values(e: &ComplexMatrix) -> Result<Vec<f64>> {
    e.require_finite()?;
    let work = if e.rows() >= e.cols() { columns_of(e) } else { columns_of(&e.adjoint()) };
    let mut j = Jacobi { cols: work, v: None };
    j.run()?;
    let mut values: Vec<f64> = j
        .cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Largest singular value `sigma_1(E)`.
pub fn operator_norm(e: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(e)?[0])
}

/// Full SVD of a square matrix.
pub fn singular_data(e: &ComplexMatrix, cluster_tol: f64) -> Result<SingularData> {
    let n = e.require_square("singular_data")?;
    e.require_finite()?;
    if !(cluster_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("clusterTol must be >= 0, got {cluster_tol}")));
    }
    let mut identity = vec![vec![ZERO; n]; n];
    for (i, col) in identity.iter_mut().enumerate() {
        col[i] = ONE;
    }
    let mut j = Jacobi { cols: columns_of(e), v: Some(identity) };
    j.run()?;
    let v = j.v.take().expect("right vectors requested");
    let norms: Vec<f64> = j
        .cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let values: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let right: Vec<Vec<C64>> = order.iter().map(|&k| v[k].clone()).collect();

    let mut left: Vec<Vec<C64>> = Vec::with_capacity(n);
    for &k in &order {
        let s = norms[k];
        if s == 0.0 || !s.is_normal() {
            break;
        }
        left.push(j.cols[k].iter().map(|z| z / s).collect());
    }
    let left = complete_basis(&left, n);

    let sigma1 = values[0];
    let top_cluster_dim = values.iter().take_while(|&&s| sigma1 - s <= cluster_tol * sigma1).count();

    Ok(SingularData {
        values,
        left: ComplexMatrix::from_columns(&left),
        right: ComplexMatrix::from_columns(&right),
        cluster_tol,
        top_cluster_dim,
    })
}
