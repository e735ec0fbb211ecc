//! Exceptional matrices: construction, exceptionality checking, canonical
//! reduction, diagnostics and extremal Blaschke-product search on the unit
//! disk.
//!
//! A square matrix `E` is exceptional when its spectrum lies in the open unit
//! disk, `||E|| > 1`, and `||h(E)|| <= ||E||` for every holomorphic
//! `h: D -> closed D`. It suffices to test Blaschke products of degree at
//! most `N - 1`, which is what [`extremal::extremal_search`] maximizes over.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constructors;
pub mod error;
pub mod exceptionality;
pub mod exec;
pub mod extremal;
pub mod holo;
pub mod matrix;
pub mod suite;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use holo::{BlaschkeProduct, DiskFunction, GtFunction};
pub use matrix::{ComplexMatrix, C64};
