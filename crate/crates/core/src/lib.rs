//! Hermite spectral approximation on sparse index sets.
//!
//! The crate covers generalized Hermite functions and their coefficient-space
//! calculus, hyperbolic-cross and Smolyak index sets, Gauss–Hermite
//! quadrature on tensor and sparse grids, spectral projection with Sobolev and
//! Korobov type norms, and a Galerkin solver for linear parabolic equations.

pub mod error;
pub mod experiment;
pub mod galerkin;
pub mod hermite;
pub mod multi_index;
pub mod quadrature;
pub mod rates;
pub mod spectral;

pub use error::{Error, Result};
pub use hermite::BasisParams1D;
pub use multi_index::{IndexSet, LevelMap, MultiIndex, SetKind, SmolyakTerm};
pub use quadrature::{PointSet, QuadratureRule1D, RuleMapping, SparseQuadrature};
pub use spectral::{BasisParams, CoeffVector};
