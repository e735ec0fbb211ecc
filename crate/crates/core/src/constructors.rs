//! Recipes that produce exceptional matrices, transformations that preserve
//! exceptionality, and seeded fixture generators.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::holo::{BlaschkeProduct, Calculus};
use crate::matrix::{
    complex_gaussian, derive_seed, ginibre, operator_norm, rng_from_seed, spectrum, ComplexMatrix, C64, ONE, ZERO,
};

/// Which hypothesis on the top-right block is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BlockVariant {
    /// `||A|| < 1/a`.
    Strict,
    /// `||A|| < 1` with the last column of `A` identically zero.
    LastColZero,
}

/// Parameters of the bordered matrix with first column `(0, ..., 0, a)^T`,
/// bottom row `(a, 0, ..., 0)` and free top-right block `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub a: f64,
    #[serde(rename = "A")]
    pub block: ComplexMatrix,
    pub variant: BlockVariant,
}

impl BlockSpec {
    pub fn new(a: f64, block: ComplexMatrix, variant: BlockVariant) -> Self {
        Self { a, block, variant }
    }

    /// Full dimension `N` of the bordered matrix.
    pub fn dim(&self) -> usize {
        self.block.rows() + 1
    }

    /// Checks the variant's hypothesis and returns `||A||`.
    pub fn validate(&self) -> Result<f64> {
        if !(self.a > 1.0) || !self.a.is_finite() {
            return Err(Error::HypothesisViolation(format!("a must exceed 1, got {}", self.a)));
        }
        let m = self.block.require_square("block A")?;
        self.block.require_finite()?;
        let norm = operator_norm(&self.block)?;
        match self.variant {
            BlockVariant::Strict => {
                if !(norm < 1.0 / self.a) {
                    return Err(Error::HypothesisViolation(format!(
                        "strict variant needs ||A|| < 1/a = {}, got ||A|| = {norm}",
                        1.0 / self.a
                    )));
                }
            }
            BlockVariant::LastColZero => {
                if !(norm < 1.0) {
                    return Err(Error::HypothesisViolation(format!(
                        "lastColZero variant needs ||A|| < 1, got ||A|| = {norm}"
                    )));
                }
                if let Some(i) = (0..m).find(|&i| self.block[(i, m - 1)] != ZERO) {
                    return Err(Error::HypothesisViolation(format!(
                        "lastColZero variant needs the last column of A to vanish, entry ({i}, {}) is {}",
                        m - 1,
                        self.block[(i, m - 1)]
                    )));
                }
            }
        }
        Ok(norm)
    }
}

fn bordered(a: C64, block: &ComplexMatrix) -> ComplexMatrix {
    let n = block.rows() + 1;
    let mut e = ComplexMatrix::zeros(n, n);
    e[(n - 1, 0)] = a;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            e[(i, j + 1)] = block[(i, j)];
        }
    }
    e
}

/// Builds the bordered matrix; exceptional with `||E|| = a` whenever the
/// variant's hypothesis holds.
pub fn construct_block(spec: &BlockSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    Ok(bordered(C64::new(spec.a, 0.0), &spec.block))
}

/// `E = V J V^{-1}` with `V = diag(1, ..., 1, a)` and `J` the bordered matrix
/// with corner `1` and block `A D`, `D = diag(1, ..., 1, a)`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Factorization {
    pub v: ComplexMatrix,
    pub j: ComplexMatrix,
    /// `||V J V^{-1} - E||`.
    pub residual: f64,
    pub j_norm: f64,
    pub ad_norm: f64,
}

pub fn verify_factorization(spec: &BlockSpec, tol: &Tolerances) -> Result<Factorization> {
    let e = construct_block(spec)?;
    let n = spec.dim();
    let a = spec.a;
    let mut d = vec![ONE; n - 1];
    d[n - 2] = C64::new(a, 0.0);
    let ad = spec.block.matmul(&ComplexMatrix::from_diag(&d));
    let j = bordered(ONE, &ad);

    let mut vd = vec![ONE; n];
    vd[n - 1] = C64::new(a, 0.0);
    let mut vinv = vec![ONE; n];
    vinv[n - 1] = C64::new(1.0 / a, 0.0);
    let v = ComplexMatrix::from_diag(&vd);
    let vjv = v.matmul(&j).matmul(&ComplexMatrix::from_diag(&vinv));
    let residual = operator_norm(&(&vjv - &e))?;
    let j_norm = operator_norm(&j)?;
    let ad_norm = operator_norm(&ad)?;
    if j_norm > 1.0 + tol.norm_tol || !(ad_norm < 1.0) {
        return Err(Error::HypothesisViolation(format!(
            "factorization bounds fail: ||J|| = {j_norm}, ||AD|| = {ad_norm}"
        )));
    }
    Ok(Factorization { v, j, residual, j_norm, ad_norm })
}

/// Operations that map exceptional matrices to exceptional matrices.
#[derive(Debug, Clone)]
pub enum Transform {
    Conjugate,
    Transpose,
    Adjoint,
    /// `U^* E U`.
    UnitaryConj(ComplexMatrix),
    /// `alpha E` with `|alpha| = 1`.
    ScalarRotate(C64),
    /// `E ⊕ F`, with `F` exceptional or a contraction with spectrum in the disk.
    DirectSum(ComplexMatrix),
    /// `h0(E)` for a Blaschke product with `||h0(E)|| = ||E||`.
    ApplyMap(BlaschkeProduct),
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Transform::Conjugate => "conjugate",
            Transform::Transpose => "transpose",
            Transform::Adjoint => "adjoint",
            Transform::UnitaryConj(_) => "unitaryConj",
            Transform::ScalarRotate(_) => "scalarRotate",
            Transform::DirectSum(_) => "directSum",
            Transform::ApplyMap(_) => "applyMap",
        };
        f.write_str(s)
    }
}

/// Applies a transformation. Exceptionality of `E` itself is the caller's
/// responsibility; only the transformation's own hypotheses are checked.
pub fn transform(e: &ComplexMatrix, kind: &Transform, tol: &Tolerances) -> Result<ComplexMatrix> {
    e.require_square("transform")?;
    e.require_finite()?;
    match kind {
        Transform::Conjugate => Ok(e.conj()),
        Transform::Transpose => Ok(e.transpose()),
        Transform::Adjoint => Ok(e.adjoint()),
        Transform::UnitaryConj(u) => {
            if u.rows() != e.rows() || !u.is_square() {
                return Err(Error::HypothesisViolation(format!(
                    "unitary has shape {}x{}, matrix is {}x{}",
                    u.rows(),
                    u.cols(),
                    e.rows(),
                    e.cols()
                )));
            }
            let defect = u.unitarity_defect();
            if defect > tol.decomp_tol {
                return Err(Error::HypothesisViolation(format!("||U^*U - I|| = {defect:e} exceeds decompTol")));
            }
            Ok(u.adjoint().matmul(e).matmul(u))
        }
        Transform::ScalarRotate(alpha) => {
            let defect = (alpha.norm() - 1.0).abs();
            if defect > 1e-12 {
                return Err(Error::HypothesisViolation(format!("scalar must be unimodular, ||alpha| - 1| = {defect:e}")));
            }
            Ok(e.scale(*alpha))
        }
        Transform::DirectSum(f) => {
            f.require_square("direct summand")?;
            let rho = spectrum(f)?.spectral_radius;
            if rho >= tol.max_spectral_radius() {
                return Err(Error::HypothesisViolation(format!(
                    "direct summand needs spectrum in the disk, spectral radius is {rho}"
                )));
            }
            Ok(e.direct_sum(f))
        }
        Transform::ApplyMap(h0) => {
            let image = Calculus::new(e, tol)?.blaschke(h0)?;
            let (ne, nh) = (operator_norm(e)?, operator_norm(&image)?);
            let defect = (nh - ne).abs() / ne;
            if defect > tol.map_norm_tol {
                return Err(Error::HypothesisViolation(format!(
                    "map must preserve the norm: ||h0(E)|| = {nh}, ||E|| = {ne}, relative defect {defect:e}"
                )));
            }
            Ok(image)
        }
    }
}

/// Fixture families for property and acceptance suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Profile {
    /// 2x2 with zero diagonal, spectrum in the disk and norm above 1.
    TraceZero2x2,
    /// `||E|| <= 1` and spectrum in the disk.
    Contraction,
    /// Ginibre matrix scaled to `||E|| in [1.1, 3]` with spectrum in the disk.
    Generic,
    /// Bordered matrix with a random strict block.
    BlockStrict,
}

const MAX_ATTEMPTS: usize = 10_000;
/// Fixtures keep the spectrum this far inside the disk.
const FIXTURE_SPECTRAL_GAP: f64 = 1e-3;

fn profile_tag(p: Profile) -> u64 {
    match p {
        Profile::TraceZero2x2 => 1,
        Profile::Contraction => 2,
        Profile::Generic => 3,
        Profile::BlockStrict => 4,
    }
}

fn rescale(m: &ComplexMatrix, target: f64) -> Result<ComplexMatrix> {
    let n = operator_norm(m)?;
    Ok(m.scale(C64::new(target / n, 0.0)))
}

fn spectral_radius(m: &ComplexMatrix) -> Result<f64> {
    Ok(spectrum(m)?.spectral_radius)
}

fn exhausted(what: impl fmt::Display) -> Error {
    Error::GenerationFailure(format!("{what}: no admissible sample in {MAX_ATTEMPTS} attempts"))
}

/// Deterministic random test matrix for the given profile.
pub fn random_test_matrix(profile: Profile, n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[profile_tag(profile), n as u64]));
    let max_rho = 1.0 - FIXTURE_SPECTRAL_GAP;
    match profile {
        Profile::TraceZero2x2 => {
            if n != 2 {
                return Err(Error::InvalidParameter(format!("traceZero2x2 forces n = 2, got {n}")));
            }
            for _ in 0..MAX_ATTEMPTS {
                let s = rng.random_range(0.5..3.0);
                let p = complex_gaussian(&mut rng) * s;
                let q = complex_gaussian(&mut rng) * s;
                let norm = p.norm().max(q.norm());
                let rho = (p * q).norm().sqrt();
                if norm >= 1.01 && rho <= max_rho {
                    return ComplexMatrix::new(2, 2, vec![ZERO, p, q, ZERO]);
                }
            }
            Err(exhausted("traceZero2x2"))
        }
        Profile::Contraction => {
            for _ in 0..MAX_ATTEMPTS {
                let target = rng.random_range(0.25..=1.0);
                let m = rescale(&ginibre(n, n, &mut rng), target)?;
                if spectral_radius(&m)? <= max_rho {
                    return Ok(m);
                }
            }
            Err(exhausted("contraction"))
        }
        Profile::Generic => {
            for _ in 0..MAX_ATTEMPTS {
                let g = ginibre(n, n, &mut rng);
                let ratio = spectral_radius(&g)? / operator_norm(&g)?;
                let hi = (max_rho / ratio).min(3.0);
                if hi <= 1.1 {
                    continue;
                }
                let target = rng.random_range(1.1..hi);
                return rescale(&g, target);
            }
            Err(exhausted("generic"))
        }
        Profile::BlockStrict => construct_block(&random_block_spec(BlockVariant::Strict, n, seed)?),
    }
}

/// Random admissible [`BlockSpec`] with `a in [1.1, 3]`.
///
/// `Strict` draws `||A|| in [0.05/a, 0.9/a]`; `LastColZero` draws
/// `1/a < ||A|| < 0.95` (needs `n >= 3`).
pub fn random_block_spec(variant: BlockVariant, n: usize, seed: u64) -> Result<BlockSpec> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("bordered matrices need n >= 2, got {n}")));
    }
    if variant == BlockVariant::LastColZero && n < 3 {
        return Err(Error::InvalidParameter("lastColZero with ||A|| > 1/a needs n >= 3".into()));
    }
    let tag = match variant {
        BlockVariant::Strict => 10,
        BlockVariant::LastColZero => 11,
    };
    let mut rng = rng_from_seed(derive_seed(seed, &[tag, n as u64]));
    let m = n - 1;
    for _ in 0..MAX_ATTEMPTS {
        let a = rng.random_range(1.1..=3.0);
        let mut g = ginibre(m, m, &mut rng);
        let target = match variant {
            BlockVariant::Strict => rng.random_range(0.05..=0.9) / a,
            BlockVariant::LastColZero => {
                for i in 0..m {
                    g[(i, m - 1)] = ZERO;
                }
                let lo = 1.0 / a + 0.02 * (0.95 - 1.0 / a);
                rng.random_range(lo..0.95)
            }
        };
        if operator_norm(&g)? == 0.0 {
            continue;
        }
        let block = rescale(&g, target)?;
        let spec = BlockSpec::new(a, block, variant);
        if spec.validate().is_err() {
            continue;
        }
        let e = construct_block(&spec)?;
        if spectral_radius(&e)? <= 1.0 - FIXTURE_SPECTRAL_GAP {
            return Ok(spec);
        }
    }
    Err(exhausted("block spec"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_unitary;

    fn real(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn two_by_two_strict() {
        let spec = BlockSpec::new(2.0, real(&[&[0.3]]), BlockVariant::Strict);
        let e = construct_block(&spec).unwrap();
        assert_eq!(e, real(&[&[0.0, 0.3], &[2.0, 0.0]]));
    }

    #[test]
    fn strict_bound_is_enforced() {
        let spec = BlockSpec::new(2.0, real(&[&[0.6]]), BlockVariant::Strict);
        let err = construct_block(&spec).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(ref m) if m.contains("1/a")));
        let spec = BlockSpec::new(1.0, real(&[&[0.1]]), BlockVariant::Strict);
        assert!(matches!(construct_block(&spec), Err(Error::HypothesisViolation(ref m)) if m.contains("a must exceed 1")));
    }

    #[test]
    fn last_col_zero_accepts_norm_above_inverse_a() {
        let spec = BlockSpec::new(1.5, real(&[&[0.9, 0.0], &[0.2, 0.0]]), BlockVariant::LastColZero);
        let e = construct_block(&spec).unwrap();
        assert_eq!(e.rows(), 3);
        assert!(operator_norm(&spec.block).unwrap() > 1.0 / 1.5);
        let as_strict = BlockSpec { variant: BlockVariant::Strict, ..spec.clone() };
        assert!(construct_block(&as_strict).is_err());
        let nonzero = BlockSpec::new(1.5, real(&[&[0.5, 0.1], &[0.0, 0.0]]), BlockVariant::LastColZero);
        assert!(construct_block(&nonzero).is_err());
    }

    #[test]
    fn factorization_two_by_two() {
        let spec = BlockSpec::new(2.0, real(&[&[0.3]]), BlockVariant::Strict);
        let f = verify_factorization(&spec, &Tolerances::default()).unwrap();
        let want = real(&[&[0.0, 0.6], &[1.0, 0.0]]);
        assert!((&f.j - &want).max_abs() < 1e-15);
        assert!((f.j_norm - 1.0).abs() < 1e-15);
        assert!(f.residual < 1e-13);
    }

    #[test]
    fn factorization_zero_block_has_unit_j() {
        let spec = BlockSpec::new(1.0001, real(&[&[0.0]]), BlockVariant::Strict);
        let f = verify_factorization(&spec, &Tolerances::default()).unwrap();
        assert_eq!(f.j_norm, 1.0);
    }

    #[test]
    fn j_squared_contracts() {
        let tol = Tolerances::default();
        for seed in 0..5 {
            let spec = random_block_spec(BlockVariant::Strict, 4, seed).unwrap();
            let f = verify_factorization(&spec, &tol).unwrap();
            let j2 = f.j.matmul(&f.j);
            let mut rng = rng_from_seed(seed);
            for _ in 0..100 {
                let mut x: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
                crate::matrix::normalize(&mut x);
                let y = j2.mul_vec(&x);
                assert!(crate::matrix::vec_norm(&y) < 1.0);
            }
        }
    }

    #[test]
    fn scalar_rotation_and_direct_sum() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let r = transform(&e, &Transform::ScalarRotate(C64::new(-1.0, 0.0)), &tol).unwrap();
        assert_eq!(r, real(&[&[0.0, -0.3], &[-2.0, 0.0]]));
        assert!(transform(&e, &Transform::ScalarRotate(C64::new(0.5, 0.0)), &tol).is_err());

        let s = transform(&e, &Transform::DirectSum(real(&[&[0.5]])), &tol).unwrap();
        assert_eq!(s.rows(), 3);
        let rho = spectrum(&s).unwrap().spectral_radius;
        assert!((rho - 0.6f64.sqrt()).abs() < 1e-14);
        assert!((operator_norm(&s).unwrap() - 2.0).abs() < 1e-15);
        assert!(transform(&e, &Transform::DirectSum(real(&[&[1.5]])), &tol).is_err());
    }

    #[test]
    fn unitary_conjugation_checks_unitarity() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let u = random_unitary(2, 9).unwrap();
        let t = transform(&e, &Transform::UnitaryConj(u), &tol).unwrap();
        assert!((operator_norm(&t).unwrap() - 2.0).abs() < 1e-14);
        let not_unitary = real(&[&[1.0, 0.1], &[0.0, 1.0]]);
        assert!(transform(&e, &Transform::UnitaryConj(not_unitary), &tol).is_err());
    }

    #[test]
    fn apply_map_requires_norm_equality() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let rot = BlaschkeProduct::constant(1.0);
        let rotated_z = BlaschkeProduct::new(1.0, vec![C64::new(0.0, 0.0)], &tol).unwrap();
        let out = transform(&e, &Transform::ApplyMap(rotated_z), &tol).unwrap();
        assert!((&out - &e.scale(C64::from_polar(1.0, 1.0))).max_abs() < 1e-14);
        // a constant has norm 1, not ||E||
        assert!(transform(&e, &Transform::ApplyMap(rot), &tol).is_err());
    }

    #[test]
    fn profiles_honor_contracts() {
        for seed in 0..20 {
            let t = random_test_matrix(Profile::TraceZero2x2, 2, seed).unwrap();
            assert_eq!(t[(0, 0)], ZERO);
            assert_eq!(t[(1, 1)], ZERO);
            assert!(operator_norm(&t).unwrap() > 1.0);
            assert!(spectrum(&t).unwrap().spectral_radius < 1.0);

            let c = random_test_matrix(Profile::Contraction, 3, seed).unwrap();
            assert!(operator_norm(&c).unwrap() <= 1.0 + 1e-12);
            assert!(spectrum(&c).unwrap().spectral_radius < 1.0);

            let g = random_test_matrix(Profile::Generic, 3, seed).unwrap();
            let n = operator_norm(&g).unwrap();
            assert!((1.1 - 1e-12..=3.0 + 1e-12).contains(&n));
            assert!(spectrum(&g).unwrap().spectral_radius < 1.0);

            let b = random_test_matrix(Profile::BlockStrict, 4, seed).unwrap();
            assert!(operator_norm(&b).unwrap() > 1.0);
        }
        assert!(random_test_matrix(Profile::TraceZero2x2, 3, 0).is_err());
        assert!(matches!(random_test_matrix(Profile::Generic, 1, 0), Err(Error::GenerationFailure(_))));
    }

    #[test]
    fn profiles_are_deterministic() {
        for p in [Profile::TraceZero2x2, Profile::Contraction, Profile::Generic, Profile::BlockStrict] {
            assert_eq!(random_test_matrix(p, 2, 77).unwrap(), random_test_matrix(p, 2, 77).unwrap());
        }
    }

    #[test]
    fn block_spec_json() {
        let spec = BlockSpec::new(2.0, real(&[&[0.3]]), BlockVariant::Strict);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"a":2.0,"A":{"rows":1,"cols":1,"entries":[[0.3,0.0]]},"variant":"strict"}"#);
        let back: BlockSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let lcz: BlockSpec =
            serde_json::from_str(r#"{"a":2,"A":{"rows":1,"cols":1,"entries":[[0,0]]},"variant":"lastColZero"}"#).unwrap();
        assert_eq!(lcz.variant, BlockVariant::LastColZero);
    }
}
