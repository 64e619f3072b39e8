//! Combinatorial and thermodynamic machinery for expanding maps on the
//! 2-sphere: cell decompositions induced by an invariant Jordan curve,
//! flowers, transfer-operator sums, pressure estimators from iterated
//! preimages and periodic points, equidistribution diagnostics, and
//! tail-entropy certificates.
//!
//! The core is generic over the floating scalar (see [`scalar::Real`]);
//! the `*64` aliases below are what the CLI and most tests use.

pub mod cells;
pub mod error;
pub mod map;
pub mod measure;
pub mod poly;
pub mod scalar;
pub mod sphere;
pub mod thermo;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete f64 aliases.
pub type Point64 = sphere::SpherePoint<f64>;
pub type Poly64 = poly::Poly<f64>;
pub type RationalMap64 = map::RationalMap<f64>;
pub type Potential64 = map::Potential<f64>;
pub type Measure64 = measure::EmpiricalMeasure<f64>;
