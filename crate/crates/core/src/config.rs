//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest matrix dimension the dense routines are sized for.
pub const MAX_DIM: usize = 16;

/// Tolerances used across decompositions, calculus, search and diagnostics.
///
/// All fields are overridable; names in JSON are camelCase
/// (`normTol`, `specMargin`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative accuracy of the operator norm.
    pub norm_tol: f64,
    /// Absolute eigenvalue accuracy on unit-scale matrices.
    pub eig_tol: f64,
    /// Relative residual allowed in SVD / Schur reconstructions.
    pub decomp_tol: f64,
    /// Relative width of the top singular cluster.
    pub cluster_tol: f64,
    /// Blaschke zeros satisfy `|w| <= 1 - boundary_margin`.
    pub boundary_margin: f64,
    /// Functional calculus requires `rho(E) < 1 - spec_margin`.
    pub spec_margin: f64,
    /// Relative tolerance on `||h0(E)|| = ||E||` for the map transform.
    pub map_norm_tol: f64,
    /// Absolute trace tolerance on the exact 2x2 path.
    pub trace_tol: f64,
    /// A witness must beat `||E|| * (1 + cert_margin)`.
    pub cert_margin: f64,
    /// Canonical-form residual tolerance, relative to `||E||`.
    pub canon_tol: f64,
    pub orth_tol: f64,
    pub pos_tol: f64,
    pub orth_filter_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm_tol: 1e-12,
            eig_tol: 1e-10,
            decomp_tol: 1e-10,
            cluster_tol: 1e-8,
            boundary_margin: 1e-9,
            spec_margin: 1e-9,
            map_norm_tol: 1e-8,
            trace_tol: 1e-10,
            cert_margin: 1e-7,
            canon_tol: 1e-8,
            orth_tol: 1e-9,
            pos_tol: 1e-9,
            orth_filter_tol: 1e-6,
        }
    }
}

impl Tolerances {
    /// Sets a single tolerance by its camelCase key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance {key} must be finite and non-negative, got {value}"
            )));
        }
        let slot = match key {
            "normTol" => &mut self.norm_tol,
            "eigTol" => &mut self.eig_tol,
            "decompTol" => &mut self.decomp_tol,
            "clusterTol" => &mut self.cluster_tol,
            "boundaryMargin" => &mut self.boundary_margin,
            "specMargin" => &mut self.spec_margin,
            "mapNormTol" => &mut self.map_norm_tol,
            "traceTol" => &mut self.trace_tol,
            "certMargin" => &mut self.cert_margin,
            "canonTol" => &mut self.canon_tol,
            "orthTol" => &mut self.orth_tol,
            "posTol" => &mut self.pos_tol,
            "orthFilterTol" => &mut self.orth_filter_tol,
            _ => return Err(Error::InvalidParameter(format!("unknown tolerance key {key:?}"))),
        };
        *slot = value;
        Ok(())
    }

    /// Largest admissible modulus of a Blaschke zero.
    pub fn max_zero_modulus(&self) -> f64 {
        1.0 - self.boundary_margin
    }

    /// Largest admissible spectral radius for the functional calculus.
    pub fn max_spectral_radius(&self) -> f64 {
        1.0 - self.spec_margin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_key() {
        let mut t = Tolerances::default();
        t.set("certMargin", 1e-6).unwrap();
        assert_eq!(t.cert_margin, 1e-6);
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("normTol", f64::NAN).is_err());
    }

    #[test]
    fn json_partial_override() {
        let t: Tolerances = serde_json::from_str(r#"{"traceTol": 1e-8}"#).unwrap();
        assert_eq!(t.trace_tol, 1e-8);
        assert_eq!(t.norm_tol, 1e-12);
    }
}
