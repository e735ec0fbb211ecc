//! Holomorphic self-maps of the unit disk and their functional calculus on
//! matrices whose spectrum lies inside the disk.
//!
//! Three families are supported: Möbius factors `h_w(z) = (z - w)/(1 - conj(w) z)`,
//! finite Blaschke products `e^{i theta} prod_j h_{w_j}(z)`, and
//! `g_t(z) = z exp(-t (1 - h(z)))` with `h` a Blaschke product.

use std::f64::consts::TAU;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{expm, spectrum, ComplexMatrix, Lu, C64, ONE};

/// Finite Blaschke product `e^{i phase} prod_j (z - w_j)/(1 - conj(w_j) z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeProduct {
    phase: f64,
    zeros: Vec<C64>,
}

impl BlaschkeProduct {
    /// Validates that every zero lies in `|w| <= 1 - boundary_margin`.
    pub fn new(phase: f64, zeros: Vec<C64>, tol: &Tolerances) -> Result<Self> {
        if !phase.is_finite() {
            return Err(Error::InvalidParameter(format!("phase must be finite, got {phase}")));
        }
        let max = tol.max_zero_modulus();
        for (j, w) in zeros.iter().enumerate() {
            if !w.is_finite() || w.norm() > max {
                return Err(Error::InvalidParameter(format!(
                    "zero {j} = {w} must satisfy |w| <= {max}"
                )));
            }
        }
        Ok(Self { phase: phase.rem_euclid(TAU), zeros })
    }

    /// The constant `e^{i phase}` (degree 0).
    pub fn constant(phase: f64) -> Self {
        Self { phase: phase.rem_euclid(TAU), zeros: Vec::new() }
    }

    /// `b(z) = z`.
    pub fn identity() -> Self {
        Self { phase: 0.0, zeros: vec![C64::new(0.0, 0.0)] }
    }

    /// Phase-zero product with the given zeros, validated with default tolerances.
    pub fn from_zeros(zeros: Vec<C64>) -> Result<Self> {
        Self::new(0.0, zeros, &Tolerances::default())
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn unimodular(&self) -> C64 {
        C64::from_polar(1.0, self.phase)
    }
}

#[derive(Serialize, Deserialize)]
struct BlaschkeJson {
    phase: f64,
    zeros: Vec<[f64; 2]>,
}

impl Serialize for BlaschkeProduct {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BlaschkeJson { phase: self.phase, zeros: self.zeros.iter().map(|z| [z.re, z.im]).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlaschkeProduct {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BlaschkeJson::deserialize(d)?;
        let zeros = raw.zeros.iter().map(|&[re, im]| C64::new(re, im)).collect();
        BlaschkeProduct::new(raw.phase, zeros, &Tolerances::default()).map_err(serde::de::Error::custom)
    }
}

/// `g_t(z) = z exp(-t (1 - h(z)))`, a self-map of the disk for `t > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GtFunction {
    t: f64,
    inner: BlaschkeProduct,
}

impl GtFunction {
    pub fn new(t: f64, inner: BlaschkeProduct) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("g_t requires t > 0, got {t}")));
        }
        Ok(Self { t, inner })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn inner(&self) -> &BlaschkeProduct {
        &self.inner
    }
}

impl<'de> Deserialize<'de> for GtFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            t: f64,
            inner: BlaschkeProduct,
        }
        let raw = Raw::deserialize(d)?;
        GtFunction::new(raw.t, raw.inner).map_err(serde::de::Error::custom)
    }
}

/// A sample function for the positivity diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiskFunction {
    Blaschke(BlaschkeProduct),
    Gt(GtFunction),
}

impl DiskFunction {
    pub fn eval_scalar(&self, z: C64) -> C64 {
        match self {
            DiskFunction::Blaschke(b) => blaschke_scalar(b, z),
            DiskFunction::Gt(g) => gt_scalar(g, z),
        }
    }
}

/// `(z - w)/(1 - conj(w) z)`.
pub fn mobius_scalar(w: C64, z: C64) -> Result<C64> {
    if !(w.norm() < 1.0) {
        return Err(Error::InvalidParameter(format!("Möbius parameter must satisfy |w| < 1, got |w| = {}", w.norm())));
    }
    Ok(mobius_unchecked(w, z))
}

#[inline]
fn mobius_unchecked(w: C64, z: C64) -> C64 {
    (z - w) / (ONE - w.conj() * z)
}

pub fn blaschke_scalar(b: &BlaschkeProduct, z: C64) -> C64 {
    b.zeros.iter().fold(b.unimodular(), |acc, &w| acc * mobius_unchecked(w, z))
}

pub fn gt_scalar(g: &GtFunction, z: C64) -> C64 {
    z * (-(ONE - blaschke_scalar(&g.inner, z)) * g.t).exp()
}

/// Functional calculus bound to one matrix whose spectral radius has been
/// checked once against `1 - spec_margin`.
#[derive(Debug, Clone)]
pub struct Calculus {
    e: ComplexMatrix,
    spectral_radius: f64,
}

impl Calculus {
    pub fn new(e: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        e.require_square("functional calculus")?;
        let rho = spectrum(e)?.spectral_radius;
        if rho >= tol.max_spectral_radius() {
            return Err(Error::PreconditionViolation(format!(
                "spectral radius {rho} is not below 1 - specMargin = {}",
                tol.max_spectral_radius()
            )));
        }
        Ok(Self { e: e.clone(), spectral_radius: rho })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.e
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// `(I - conj(w) E)^{-1} (E - w I) P`.
    fn apply_factor(&self, w: C64, p: &ComplexMatrix) -> Result<ComplexMatrix> {
        let denom = self.e.scale(-w.conj()).add_scaled_identity(ONE);
        let numer = self.e.add_scaled_identity(-w);
        let lu = Lu::factor(&denom).map_err(|err| err.context(format!("resolvent at w = {w}")))?;
        Ok(lu.solve(&numer.matmul(p)))
    }

    pub fn mobius(&self, w: C64) -> Result<ComplexMatrix> {
        mobius_scalar(w, C64::new(0.0, 0.0))?;
        self.apply_factor(w, &ComplexMatrix::identity(self.e.rows()))
    }

    /// `prod_j h_{w_j}(E)` with phase 0, factors applied in the given order.
    pub fn blaschke_zeros(&self, zeros: &[C64]) -> Result<ComplexMatrix> {
        let mut p = ComplexMatrix::identity(self.e.rows());
        for &w in zeros {
            p = self.apply_factor(w, &p)?;
        }
        Ok(p)
    }

    pub fn blaschke(&self, b: &BlaschkeProduct) -> Result<ComplexMatrix> {
        Ok(self.blaschke_zeros(&b.zeros)?.scale(b.unimodular()))
    }

    pub fn gt(&self, g: &GtFunction) -> Result<ComplexMatrix> {
        let h = self.blaschke(&g.inner)?;
        let arg = (&ComplexMatrix::identity(self.e.rows()) - &h).scale(C64::new(-g.t, 0.0));
        Ok(self.e.matmul(&expm(&arg)?))
    }

    pub fn eval(&self, f: &DiskFunction) -> Result<ComplexMatrix> {
        match f {
            DiskFunction::Blaschke(b) => self.blaschke(b),
            DiskFunction::Gt(g) => self.gt(g),
        }
    }
}

/// `h_w(E) = (E - w I)(I - conj(w) E)^{-1}`.
pub fn mobius_matrix(w: C64, e: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    Calculus::new(e, tol)?.mobius(w)
}

pub fn blaschke_matrix(b: &BlaschkeProduct, e: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    Calculus::new(e, tol)?.blaschke(b)
}

pub fn gt_matrix(g: &GtFunction, e: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    Calculus::new(e, tol)?.gt(g)
}
