//! Points on the Riemann sphere in projective form.

use num_complex::Complex;

use crate::scalar::Real;

/// A point on the Riemann sphere, stored as a homogeneous pair `(z : w)`
/// normalized so that the larger of the two moduli equals 1. The affine
/// coordinate is `z/w`; `w = 0` is the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint<T> {
    pub z: Complex<T>,
    pub w: Complex<T>,
}

impl<T: Real> SpherePoint<T> {
    /// Build from a homogeneous pair. Panics if both entries vanish.
    pub fn new(z: Complex<T>, w: Complex<T>) -> Self {
        let nz = z.norm();
        let nw = w.norm();
        let m = if nz > nw { nz } else { nw };
        assert!(m > T::zero(), "sphere point must not be (0,0)");
        SpherePoint { z: z / m, w: w / m }
    }

    pub fn from_complex(c: Complex<T>) -> Self {
        Self::new(c, Complex::new(T::one(), T::zero()))
    }

    pub fn from_re_im(re: T, im: T) -> Self {
        Self::from_complex(Complex::new(re, im))
    }

    pub fn infinity() -> Self {
        SpherePoint {
            z: Complex::new(T::one(), T::zero()),
            w: Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn zero() -> Self {
        SpherePoint {
            z: Complex::new(T::zero(), T::zero()),
            w: Complex::new(T::one(), T::zero()),
        }
    }

    /// True when the point is (numerically) the point at infinity.
    pub fn is_infinity(&self) -> bool {
        self.w.norm() <= T::from_f(1e-13) * self.z.norm().max(T::one())
    }

    /// Affine coordinate `z/w`; `None` at infinity.
    pub fn to_complex(&self) -> Option<Complex<T>> {
        if self.is_infinity() {
            None
        } else {
            Some(self.z / self.w)
        }
    }

    /// Chordal distance, ranging over [0, 2].
    pub fn chordal(&self, other: &Self) -> T {
        let cross = self.z * other.w - other.z * self.w;
        let na = (self.z.norm_sqr() + self.w.norm_sqr()).sqrt();
        let nb = (other.z.norm_sqr() + other.w.norm_sqr()).sqrt();
        T::from_f(2.0) * cross.norm() / (na * nb)
    }

    /// Projective equality within chordal tolerance.
    pub fn proj_eq(&self, other: &Self, tol: T) -> bool {
        self.chordal(other) <= tol
    }

    /// Embedding into the unit 2-sphere in R^3; the chordal metric is the
    /// Euclidean distance between embedded points.
    pub fn embed3(&self) -> [T; 3] {
        let n = self.z.norm_sqr() + self.w.norm_sqr();
        let zw = self.z * self.w.conj();
        let two = T::from_f(2.0);
        [
            two * zw.re / n,
            two * zw.im / n,
            (self.z.norm_sqr() - self.w.norm_sqr()) / n,
        ]
    }

    /// The antipodal point.
    pub fn antipode(&self) -> Self {
        SpherePoint::new(-self.w.conj(), self.z.conj())
    }

    /// Deterministic total-order key (lexicographic on the R^3 embedding).
    pub fn sort_key(&self) -> [f64; 3] {
        let e = self.embed3();
        [e[0].to_f(), e[1].to_f(), e[2].to_f()]
    }

    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        let a = self.sort_key();
        let b = other.sort_key();
        for i in 0..3 {
            match a[i].total_cmp(&b[i]) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    }

    /// Quantized key for tolerance-aware hashing/deduplication.
    pub fn quantized(&self, grid: T) -> [i64; 3] {
        let e = self.embed3();
        [
            (e[0] / grid).round().to_f() as i64,
            (e[1] / grid).round().to_f() as i64,
            (e[2] / grid).round().to_f() as i64,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type P = SpherePoint<f64>;

    #[test]
    fn chordal_reference_values() {
        let zero = P::zero();
        let one = P::from_re_im(1.0, 0.0);
        let inf = P::infinity();
        assert!((zero.chordal(&inf) - 2.0).abs() < 1e-14);
        assert!((one.chordal(&inf) - 2.0_f64.sqrt()).abs() < 1e-14);
        assert!((one.chordal(&zero) - 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn normalization_keeps_max_modulus_one() {
        let p = P::new(Complex::new(3.0, 4.0), Complex::new(1.0, 0.0));
        let m = p.z.norm().max(p.w.norm());
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antipode_is_distance_two() {
        let p = P::from_re_im(0.3, -1.7);
        assert!((p.chordal(&p.antipode()) - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projective_scaling_invariance(re in -5.0f64..5.0, im in -5.0f64..5.0,
                                         lr in 0.01f64..10.0, li in -3.0f64..3.0) {
            let c = Complex::new(re, im);
            let lam = Complex::new(lr, li);
            let p = P::from_complex(c);
            let q = P::new(c * lam, lam);
            prop_assert!(p.proj_eq(&q, 1e-9));
        }

        #[test]
        fn chordal_matches_embedding_distance(a in -4.0f64..4.0, b in -4.0f64..4.0,
                                              c in -4.0f64..4.0, d in -4.0f64..4.0) {
            let p = P::from_re_im(a, b);
            let q = P::from_re_im(c, d);
            let pe = p.embed3();
            let qe = q.embed3();
            let euclid = ((pe[0]-qe[0]).powi(2) + (pe[1]-qe[1]).powi(2) + (pe[2]-qe[2]).powi(2)).sqrt();
            prop_assert!((p.chordal(&q) - euclid).abs() < 1e-10);
        }
    }
}
