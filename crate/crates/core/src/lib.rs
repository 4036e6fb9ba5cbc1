//! Numerical geometry of the complex unit ball, weighted Bergman spaces,
//! Carleson-measure criteria and estimators for differences of composition
//! operators `C_phi - C_psi : A^p_alpha -> A^q_beta`.

pub mod carleson;
pub mod error;
pub mod geometry;
pub mod holo;
pub mod lattice;
pub mod linalg;
pub mod measure;
pub mod opnorm;
pub mod rng;
pub mod selftest;
pub mod special;
pub mod supgrid;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use geometry::{BallPoint, CVec};
pub use measure::{DiscreteMeasure, IntegralEstimate, WeightParams};
