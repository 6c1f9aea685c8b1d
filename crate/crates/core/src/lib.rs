//! Numerical integral geometry on spheres, projective spaces and
//! Grassmannians.
//!
//! The crate estimates Crofton-type integrals by Monte Carlo over exactly
//! invariant samplers, computes deformation coefficients of integral-geometric
//! formulas, searches Grassmannians for the planes maximizing them, and checks
//! transversality and intersection counts with exact linear algebra.

pub mod crofton;
pub mod deformation;
pub mod error;
pub mod exterior;
pub mod intersections;
pub mod mc;
pub mod reports;
pub mod sampling;

pub use error::{Error, Result};
pub use exterior::{ComplexStructure, InterleaveOperator, OrthoFrame, ProjectionForm};
pub use mc::McEstimate;
pub use sampling::RandomStream;
