//! Complex polynomials and root finding.
//!
//! Roots are computed from the companion matrix (complex Schur form), then
//! polished with a Newton step and sorted lexicographically by (Re, Im) so
//! results are reproducible across runs.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Polynomial with complex coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> Poly<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn from_reals(coeffs: &[T]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| Complex::new(c, T::zero()))
                .collect(),
        )
    }

    fn trim(&mut self) {
        let max = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), T::max);
        let tol = max * T::from_f(1e-14);
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= tol && self.coeffs.len() > 1 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Complex::new(T::zero(), T::zero()));
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == T::zero())
    }

    pub fn eval(&self, x: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly<T> {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![Complex::new(T::zero(), T::zero())]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Complex::new(T::from_f(i as f64), T::zero()))
                .collect(),
        )
    }

    /// Evaluate p and p' at once (for Newton steps).
    pub fn eval_with_derivative(&self, x: Complex<T>) -> (Complex<T>, Complex<T>) {
        let mut p = Complex::new(T::zero(), T::zero());
        let mut dp = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// All roots (repeated according to multiplicity), lexicographically
    /// sorted by (Re, Im). The caller accounts for degree drop (roots at
    /// infinity) by comparing `degree()` with the expected degree.
    pub fn roots(&self) -> Result<Vec<Complex<T>>> {
        let deg = self.degree();
        if self.is_zero() {
            return Err(Error::RootSolve("zero polynomial".into()));
        }
        let mut roots: Vec<Complex<T>> = match deg {
            0 => Vec::new(),
            1 => {
                let a = self.coeffs[1];
                let b = self.coeffs[0];
                vec![-b / a]
            }
            2 => quadratic_roots(self.coeffs[2], self.coeffs[1], self.coeffs[0]),
            _ => self.companion_roots()?,
        };
        // one or two Newton polish steps
        let dp = self.derivative();
        for r in roots.iter_mut() {
            for _ in 0..2 {
                let (p, d) = self.eval_with_derivative(*r);
                if d.norm() > T::from_f(1e-300) {
                    let step = p / d;
                    if step.norm() < T::from_f(1e-2) * (T::one() + r.norm()) {
                        *r = *r - step;
                    }
                }
            }
            let _ = &dp;
        }
        roots.sort_by(|a, b| {
            a.re.to_f()
                .total_cmp(&b.re.to_f())
                .then(a.im.to_f().total_cmp(&b.im.to_f()))
        });
        Ok(roots)
    }

    fn companion_roots(&self) -> Result<Vec<Complex<T>>> {
        let deg = self.degree();
        let lead = self.coeffs[deg];
        let n = deg;
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex::new(1.0, 0.0);
        }
        for i in 0..n {
            let c = self.coeffs[i] / lead;
            m[(i, n - 1)] = -Complex::new(c.re.to_f(), c.im.to_f());
        }
        let schur = m
            .try_schur(1e-14, 100_000)
            .ok_or_else(|| Error::RootSolve("companion Schur iteration did not converge".into()))?;
        let t = schur.unpack().1;
        Ok((0..n)
            .map(|i| {
                let r = t[(i, i)];
                Complex::new(T::from_f(r.re), T::from_f(r.im))
            })
            .collect())
    }
}

fn quadratic_roots<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>) -> Vec<Complex<T>> {
    let four = Complex::new(T::from_f(4.0), T::zero());
    let two = Complex::new(T::from_f(2.0), T::zero());
    let disc = b * b - four * a * c;
    let sq = disc.sqrt();
    // pick the sign that avoids cancellation
    let q = if (b + sq).norm() >= (b - sq).norm() {
        -(b + sq) / two
    } else {
        -(b - sq) / two
    };
    if q.norm() == T::zero() {
        // b = 0 and one of the terms vanished: roots +-sqrt(-c/a)
        let r = (-c / a).sqrt();
        return vec![r, -r];
    }
    vec![q / a, c / q]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex<f64>, b: Complex<f64>) -> bool {
        (a - b).norm() < 1e-9
    }

    #[test]
    fn cubic_reference_roots() {
        // z^3 - z^2 + 2 = (z + 1)(z^2 - 2z + 2), roots -1, 1 +- i
        let p = Poly::from_reals(&[2.0, 0.0, -1.0, 1.0]);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 3);
        assert!(close(roots[0], Complex::new(-1.0, 0.0)));
        assert!(close(roots[1], Complex::new(1.0, -1.0)));
        assert!(close(roots[2], Complex::new(1.0, 1.0)));
    }

    #[test]
    fn quadratic_with_complex_coeffs() {
        // (z - i)(z - 2) = z^2 - (2 + i) z + 2i
        let p = Poly::new(vec![
            Complex::new(0.0, 2.0),
            Complex::new(-2.0, -1.0),
            Complex::new(1.0, 0.0),
        ]);
        let roots = p.roots().unwrap();
        assert!(close(roots[0], Complex::new(0.0, 1.0)));
        assert!(close(roots[1], Complex::new(2.0, 0.0)));
    }

    #[test]
    fn degree_drop_is_visible() {
        // (z^2 - 2) - 1 * z^2 = -2 has degree 0: both preimages of 1 under
        // (z^2-2)/z^2 escaped to infinity
        let p = Poly::from_reals(&[-2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 0);
        assert_eq!(p.roots().unwrap().len(), 0);
    }

    proptest! {
        #[test]
        fn roots_satisfy_polynomial(coeffs in proptest::collection::vec(-3.0f64..3.0, 4..8)) {
            let p = Poly::from_reals(&coeffs);
            if p.degree() >= 1 && !p.is_zero() {
                let max = p.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
                if max > 1e-3 {
                    let roots = p.roots().unwrap();
                    prop_assert_eq!(roots.len(), p.degree());
                    for r in roots {
                        // relative residual at the root
                        let scale: f64 = p.coeffs.iter().map(|c| c.norm() * r.norm().powi(p.degree() as i32)).sum();
                        prop_assert!(p.eval(r).norm() <= 1e-7 * scale.max(1.0));
                    }
                }
            }
        }
    }
}
