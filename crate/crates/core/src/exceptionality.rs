//! Exceptionality verdicts, canonical bordered reduction and the
//! orthogonality and positivity diagnostics.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::extremal::{self, norm_objective, SearchBudget};
use crate::holo::{BlaschkeProduct, Calculus, DiskFunction};
use crate::matrix::{
    complete_basis, inner, normalize, operator_norm, orthogonalize, singular_data, spectrum, ComplexMatrix, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Status {
    ExceptionalUpToBudget,
    CertifiedNotExceptional,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Reason {
    SpectrumNotInDisk,
    NormAtMostOne,
    TraceZeroExact2x2,
    BlaschkeWitness,
    SearchExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Margins {
    pub spectral_radius: f64,
    pub operator_norm: f64,
    /// Best `||b(E)||` seen by the search, if one ran.
    pub best_search_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExceptionalityVerdict {
    pub status: Status,
    pub reason: Reason,
    pub witness: Option<BlaschkeProduct>,
    pub witness_norm: Option<f64>,
    pub margins: Margins,
}

impl ExceptionalityVerdict {
    fn plain(status: Status, reason: Reason, margins: Margins) -> Self {
        Self { status, reason, witness: None, witness_norm: None, margins }
    }
}

/// Decides exceptionality up to the search budget.
///
/// A `certifiedNotExceptional` verdict always carries a Blaschke witness `b`
/// with `||b(E)|| > ||E|| (1 + certMargin)`; `exceptionalUpToBudget` means no
/// such witness was found (or, for 2x2 input, that the trace vanishes).
pub fn check_exceptional(e: &ComplexMatrix, budget: &SearchBudget, tol: &Tolerances) -> Result<ExceptionalityVerdict> {
    check_exceptional_with(e, budget, tol, Exec::default())
}

pub fn check_exceptional_with(
    e: &ComplexMatrix,
    budget: &SearchBudget,
    tol: &Tolerances,
    exec: Exec,
) -> Result<ExceptionalityVerdict> {
    let n = e.require_square("check_exceptional")?;
    e.require_finite()?;
    let rho = spectrum(e)?.spectral_radius;
    let norm = operator_norm(e)?;
    let mut margins = Margins { spectral_radius: rho, operator_norm: norm, best_search_norm: None };

    if rho >= tol.max_spectral_radius() {
        return Ok(ExceptionalityVerdict::plain(Status::NotApplicable, Reason::SpectrumNotInDisk, margins));
    }
    if norm <= 1.0 + tol.cert_margin {
        return Ok(ExceptionalityVerdict::plain(Status::NotApplicable, Reason::NormAtMostOne, margins));
    }
    if n == 2 && e.trace().norm() <= tol.trace_tol {
        return Ok(ExceptionalityVerdict::plain(Status::ExceptionalUpToBudget, Reason::TraceZeroExact2x2, margins));
    }

    let target = norm * (1.0 + tol.cert_margin);
    let result = extremal::search(e, budget, tol, Some(target), exec)?;
    margins.best_search_norm = Some(result.best_norm);
    if result.best_norm > target {
        return Ok(ExceptionalityVerdict {
            status: Status::CertifiedNotExceptional,
            reason: Reason::BlaschkeWitness,
            witness: Some(result.best),
            witness_norm: Some(result.best_norm),
            margins,
        });
    }
    if n == 2 {
        log::warn!(
            "2x2 matrix with trace {} produced no witness within budget (best {}, target {})",
            e.trace(),
            result.best_norm,
            target
        );
    }
    Ok(ExceptionalityVerdict::plain(Status::ExceptionalUpToBudget, Reason::SearchExhausted, margins))
}

/// Confirms that a verdict's witness reproduces its reported norm.
pub fn witness_reproduction_error(e: &ComplexMatrix, verdict: &ExceptionalityVerdict, tol: &Tolerances) -> Result<Option<f64>> {
    match (&verdict.witness, verdict.witness_norm) {
        (Some(w), Some(v)) => Ok(Some((norm_objective(e, w.zeros(), tol)? - v).abs())),
        _ => Ok(None),
    }
}

/// `U^* E U` in bordered form: first column `(0, ..., 0, a)^T`, bottom row
/// `(a, 0, ..., 0)`, free top-right block.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalForm {
    #[serde(rename = "U")]
    pub u: ComplexMatrix,
    #[serde(rename = "B")]
    pub b: ComplexMatrix,
    pub a: f64,
    #[serde(rename = "Ablock")]
    pub a_block: ComplexMatrix,
    pub residual: f64,
}

/// Largest modulus among the entries the bordered pattern requires to vanish.
pub fn pattern_residual(b: &ComplexMatrix) -> f64 {
    let n = b.rows();
    let col = (0..n - 1).map(|i| b[(i, 0)].norm());
    let row = (1..n).map(|j| b[(n - 1, j)].norm());
    col.chain(row).fold(0.0, f64::max)
}

pub fn reduce_canonical(e: &ComplexMatrix, tol: &Tolerances) -> Result<CanonicalForm> {
    let n = e.require_square("reduce_canonical")?;
    e.require_finite()?;
    if n < 2 {
        return Err(Error::InvalidInput("canonical reduction needs N >= 2".into()));
    }
    let sd = singular_data(e, tol.cluster_tol)?;
    let a = sd.norm();
    if a == 0.0 {
        return Err(Error::InvalidInput("canonical reduction needs a nonzero matrix".into()));
    }
    if sd.top_cluster_dim > 1 {
        return Err(Error::NotSupported(format!(
            "norming cluster has dimension {} (simple top singular value required)",
            sd.top_cluster_dim
        )));
    }
    let tolerance = tol.canon_tol * a;

    let y1 = sd.right_vector(0);
    let mut yn: Vec<C64> = e.mul_vec(&y1).into_iter().map(|z| z / a).collect();
    let overlap = inner(&yn, &y1).norm();
    if overlap > tolerance {
        log::debug!("principal pair overlap {overlap:e} exceeds canonTol");
    }
    let remaining = orthogonalize(&mut yn, std::slice::from_ref(&y1));
    if remaining <= 0.5 {
        return Err(Error::PatternViolation { residual: overlap, tolerance });
    }
    normalize(&mut yn);

    let basis = complete_basis(&[y1, yn], n);
    let mut cols = Vec::with_capacity(n);
    cols.push(basis[0].clone());
    cols.extend(basis[2..].iter().cloned());
    cols.push(basis[1].clone());
    let mut u = ComplexMatrix::from_columns(&cols);
    let mut b = u.adjoint().matmul(e).matmul(&u);

    let corner = b[(n - 1, 0)];
    if corner.norm() > 0.0 {
        let phase = corner / corner.norm();
        let last: Vec<C64> = u.column(n - 1).into_iter().map(|z| z * phase).collect();
        u.set_column(n - 1, &last);
        b = u.adjoint().matmul(e).matmul(&u);
    }

    let residual = pattern_residual(&b);
    if residual > tolerance {
        return Err(Error::PatternViolation { residual, tolerance });
    }
    let a_block = b.block(0, n - 1, 1, n);
    Ok(CanonicalForm { u, b, a, a_block, residual })
}

/// `max |<Ex, x>| / ||E||` over an orthonormal basis of the norming cluster.
pub fn orthogonality_defect(e: &ComplexMatrix, tol: &Tolerances) -> Result<f64> {
    e.require_square("orthogonality_defect")?;
    let sd = singular_data(e, tol.cluster_tol)?;
    let norm = sd.norm();
    if norm == 0.0 {
        return Err(Error::InvalidInput("orthogonality defect needs a nonzero matrix".into()));
    }
    Ok(sd.norming_basis().iter().map(|x| inner(&e.mul_vec(x), x).norm() / norm).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PositivityReport {
    pub max_modulus: f64,
    pub worst_sample: usize,
    /// Index of the norming-cluster basis vector attaining the maximum.
    pub worst_vector: usize,
    pub cluster_dim: usize,
}

/// Largest `|<h(E) x, x>|` over the samples and the norming-cluster basis.
pub fn positivity_check(e: &ComplexMatrix, samples: &[DiskFunction], tol: &Tolerances) -> Result<PositivityReport> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("positivity check needs at least one sample".into()));
    }
    let calc = Calculus::new(e, tol)?;
    let sd = singular_data(e, tol.cluster_tol)?;
    let basis = sd.norming_basis();
    let mut report = PositivityReport {
        max_modulus: f64::NEG_INFINITY,
        worst_sample: 0,
        worst_vector: 0,
        cluster_dim: basis.len(),
    };
    for (s, h) in samples.iter().enumerate() {
        let m = calc.eval(h).map_err(|err| err.context(format!("sample {s}")))?;
        for (k, x) in basis.iter().enumerate() {
            let v = inner(&m.mul_vec(x), x).norm();
            if v > report.max_modulus {
                report = PositivityReport { max_modulus: v, worst_sample: s, worst_vector: k, ..report };
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::{construct_block, BlockSpec, BlockVariant};
    use crate::holo::GtFunction;
    use crate::matrix::{random_unitary, rng_from_seed};
    use rand::Rng;

    fn real(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    fn budget() -> SearchBudget {
        SearchBudget { grid_resolution: 12, multistarts: 4, local_iters: 200, ..SearchBudget::default() }
    }

    /// Principal right singular vector of a real 2x2 matrix from the
    /// eigenvector of `E^T E` for its largest eigenvalue.
    fn principal_right_2x2(e: [[f64; 2]; 2]) -> (f64, [f64; 2]) {
        let (p, q, r) = (
            e[0][0] * e[0][0] + e[1][0] * e[1][0],
            e[0][0] * e[0][1] + e[1][0] * e[1][1],
            e[0][1] * e[0][1] + e[1][1] * e[1][1],
        );
        let lam = 0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt();
        let v = [q, lam - p];
        let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
        (lam.sqrt(), [v[0] / nv, v[1] / nv])
    }

    #[test]
    fn trace_zero_two_by_two_is_exceptional() {
        let tol = Tolerances::default();
        let v = check_exceptional(&real(&[&[0.0, 2.0], &[0.3, 0.0]]), &budget(), &tol).unwrap();
        assert_eq!(v.status, Status::ExceptionalUpToBudget);
        assert_eq!(v.reason, Reason::TraceZeroExact2x2);
        assert!(v.witness.is_none());
        assert!((v.margins.spectral_radius - 0.6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_trace_zero_two_by_two_has_witness() {
        let tol = Tolerances::default();
        let e = real(&[&[0.2, 2.0], &[0.0, 0.2]]);
        let v = check_exceptional(&e, &budget(), &tol).unwrap();
        assert_eq!(v.status, Status::CertifiedNotExceptional);
        assert_eq!(v.reason, Reason::BlaschkeWitness);
        let wn = v.witness_norm.unwrap();
        let norm = v.margins.operator_norm;
        assert!(wn > norm * (1.0 + 1e-7));
        assert!(witness_reproduction_error(&e, &v, &tol).unwrap().unwrap() <= 1e-12);
    }

    #[test]
    fn preconditions_give_not_applicable() {
        let tol = Tolerances::default();
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        let v = check_exceptional(&half, &budget(), &tol).unwrap();
        assert_eq!((v.status, v.reason), (Status::NotApplicable, Reason::NormAtMostOne));
        let big = real(&[&[1.5, 0.0], &[0.0, 0.1]]);
        let v = check_exceptional(&big, &budget(), &tol).unwrap();
        assert_eq!((v.status, v.reason), (Status::NotApplicable, Reason::SpectrumNotInDisk));
        let one = real(&[&[0.5]]);
        assert_eq!(check_exceptional(&one, &budget(), &tol).unwrap().status, Status::NotApplicable);
        let one_big = real(&[&[3.0]]);
        assert_eq!(check_exceptional(&one_big, &budget(), &tol).unwrap().status, Status::NotApplicable);
    }

    #[test]
    fn verdict_json_shape() {
        let tol = Tolerances::default();
        let v = check_exceptional(&real(&[&[0.0, 2.0], &[0.3, 0.0]]), &budget(), &tol).unwrap();
        let j: serde_json::Value = serde_json::to_value(&v).unwrap();
        assert_eq!(j["status"], "exceptionalUpToBudget");
        assert_eq!(j["reason"], "traceZeroExact2x2");
        assert!(j["witness"].is_null());
        assert!(j["witnessNorm"].is_null());
        assert!(j["margins"]["operatorNorm"].is_number());
        assert!(j["margins"]["bestSearchNorm"].is_null());
    }

    #[test]
    fn canonical_form_of_canonical_matrix() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let c = reduce_canonical(&e, &tol).unwrap();
        assert!(c.residual < 1e-10);
        assert!((c.a - 2.0).abs() < 1e-12);
        assert!((c.b[(1, 0)] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((c.b[(0, 1)].norm() - 0.3).abs() < 1e-12);
        assert!(c.u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn canonical_form_after_unitary_conjugation() {
        let tol = Tolerances::default();
        let e0 = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let u0 = random_unitary(2, 17).unwrap();
        let e = u0.adjoint().matmul(&e0).matmul(&u0);
        let c = reduce_canonical(&e, &tol).unwrap();
        assert!((c.a - 2.0).abs() < 1e-10);
        assert!(c.residual < 1e-10);
        let back = c.u.matmul(&c.b).matmul(&c.u.adjoint());
        assert!((&back - &e).max_abs() < 1e-12);
    }

    #[test]
    fn canonical_form_of_larger_block() {
        let tol = Tolerances::default();
        let block = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(0.02 * (i + 2 * j) as f64, 0.01 * i as f64));
        let spec = BlockSpec::new(2.0, block, BlockVariant::Strict);
        let e0 = construct_block(&spec).unwrap();
        let u0 = random_unitary(4, 5).unwrap();
        let e = u0.matmul(&e0).matmul(&u0.adjoint());
        let c = reduce_canonical(&e, &tol).unwrap();
        assert!(c.residual < 1e-8 * 2.0);
        assert!((c.a - 2.0).abs() < 1e-10);
        assert!(operator_norm(&c.a_block).unwrap() <= 2.0 + 1e-10);
    }

    #[test]
    fn canonical_form_rejects_non_exceptional() {
        let tol = Tolerances::default();
        let e = real(&[&[0.2, 2.0], &[0.0, 0.2]]);
        let (s, x) = principal_right_2x2([[0.2, 2.0], [0.0, 0.2]]);
        let ex = [0.2 * x[0] + 2.0 * x[1], 0.2 * x[1]];
        let expected = (ex[0] * x[0] + ex[1] * x[1]).abs();
        match reduce_canonical(&e, &tol) {
            Err(Error::PatternViolation { residual, .. }) => {
                assert!(residual > 0.0);
                assert!((residual - expected).abs() < 1e-9, "{residual} vs {expected}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let defect = orthogonality_defect(&e, &tol).unwrap();
        assert!((defect - expected / s).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_rejects_degenerate_cluster() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 2.0, 0.0], &[0.0, 0.0, 2.0], &[0.0, 0.0, 0.0]]);
        assert!(matches!(reduce_canonical(&e, &tol), Err(Error::NotSupported(m)) if m.contains('2')));
    }

    #[test]
    fn orthogonality_defect_examples() {
        let tol = Tolerances::default();
        assert!(orthogonality_defect(&real(&[&[0.0, 2.0], &[0.3, 0.0]]), &tol).unwrap() < 1e-12);
        assert!((orthogonality_defect(&ComplexMatrix::identity(3), &tol).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positivity_examples() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let one = [DiskFunction::Blaschke(BlaschkeProduct::constant(0.0))];
        let r = positivity_check(&e, &one, &tol).unwrap();
        assert!((r.max_modulus - 1.0).abs() < 1e-14);

        let mut rng = rng_from_seed(3);
        let samples: Vec<DiskFunction> = (0..50)
            .map(|_| {
                let w = C64::from_polar(0.95 * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
                let b = BlaschkeProduct::new(std::f64::consts::TAU * rng.random::<f64>(), vec![w], &tol).unwrap();
                DiskFunction::Blaschke(b)
            })
            .collect();
        assert!(positivity_check(&e, &samples, &tol).unwrap().max_modulus <= 1.0 + 1e-9);

        let gt = [DiskFunction::Gt(GtFunction::new(1.0, BlaschkeProduct::identity()).unwrap())];
        assert!(positivity_check(&e, &gt, &tol).unwrap().max_modulus <= 1.0 + 1e-9);
    }

    #[test]
    fn positivity_of_non_trace_zero_stays_below_one_on_degree_one_sweep() {
        let tol = Tolerances::default();
        let e = real(&[&[0.2, 2.0], &[0.0, 0.2]]);
        let mut samples = Vec::new();
        for i in 1..40 {
            for k in 0..32 {
                let w = C64::from_polar(0.025 * i as f64, std::f64::consts::TAU * k as f64 / 32.0);
                samples.push(DiskFunction::Blaschke(BlaschkeProduct::new(0.0, vec![w], &tol).unwrap()));
            }
        }
        let m = positivity_check(&e, &samples, &tol).unwrap().max_modulus;
        assert!(m > 0.99 && m < 1.0, "{m}");
    }
}
