//! Generalized Newton transformations of endomorphism systems, their
//! classical reductions, Haar fiber quadrature, and integral-formula checks
//! for distributions on flat tori.

pub mod classical;
pub mod error;
pub mod fiber;
pub mod gnt;
pub mod invariants;
pub mod matrix;
pub mod multiindex;
pub mod numerics;
pub mod scalar;
pub mod suite;
pub mod torus_lab;

pub use error::{GntError, Result};
pub use fiber::{FiberRule, FiberSpec, Group};
pub use gnt::NewtonFamily;
pub use invariants::{EndoSystem, SigmaTable};
pub use matrix::Matrix;
pub use multiindex::{IndexMatrix, IndexSpace, MultiIndex};
pub use scalar::{Rational, Scalar};
