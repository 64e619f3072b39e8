//! Potential functions on the sphere.
//!
//! The built-in families are constant potentials and chordal-power bumps
//! a * q(x, x0)^beta, with q the chordal distance. Holder data with respect
//! to the combinatorial visual surrogate is estimated empirically and
//! attached as metadata.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::sphere::SpherePoint;

#[derive(Debug, Clone)]
pub enum Potential<T> {
    Constant(T),
    ChordalPower {
        a: T,
        beta: T,
        center: SpherePoint<T>,
    },
}

impl<T: Real> Potential<T> {
    pub fn zero() -> Self {
        Potential::Constant(T::zero())
    }

    pub fn eval(&self, p: &SpherePoint<T>) -> T {
        match self {
            Potential::Constant(c) => *c,
            Potential::ChordalPower { a, beta, center } => {
                *a * p.chordal(center).powf(*beta)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Constant(_))
    }

    /// Nominal Holder exponent of the family (beta capped at 1).
    pub fn holder_exponent(&self) -> T {
        match self {
            Potential::Constant(_) => T::one(),
            Potential::ChordalPower { beta, .. } => beta.min(T::one()),
        }
    }
}

/// Empirical Holder data of a potential against a metric surrogate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub exponent: f64,
    /// Max sampled ratio |phi(x)-phi(y)| / d(x,y)^alpha.
    pub constant: f64,
    pub pairs: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_bump_values() {
        let c: Potential<f64> = Potential::Constant(0.7);
        let p = SpherePoint::from_re_im(3.0, -1.0);
        assert_eq!(c.eval(&p), 0.7);

        let bump = Potential::ChordalPower {
            a: 2.0,
            beta: 1.0,
            center: SpherePoint::zero(),
        };
        // chordal(0, infinity) = 2
        let at_inf: f64 = bump.eval(&SpherePoint::infinity());
        assert!((at_inf - 4.0).abs() < 1e-12);
        assert_eq!(bump.eval(&SpherePoint::zero()), 0.0);
    }
}
