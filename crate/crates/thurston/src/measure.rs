//! Finite weighted point sets on the sphere and the weak* test gauge.

use crate::scalar::Real;
use crate::sphere::SpherePoint;

/// A finite Borel measure given by weighted atoms. Atoms that coincide
/// projectively (within `MERGE_GRID` on the R^3 embedding) are merged.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<T> {
    pub atoms: Vec<(SpherePoint<T>, T)>,
}

const MERGE_GRID: f64 = 1e-8;

impl<T: Real> EmpiricalMeasure<T> {
    pub fn new(atoms: Vec<(SpherePoint<T>, T)>) -> Self {
        let mut m = EmpiricalMeasure { atoms };
        m.merge();
        m
    }

    pub fn dirac(p: SpherePoint<T>) -> Self {
        EmpiricalMeasure {
            atoms: vec![(p, T::one())],
        }
    }

    fn merge(&mut self) {
        let grid = T::from_f(MERGE_GRID);
        self.atoms
            .sort_by(|a, b| a.0.quantized(grid).cmp(&b.0.quantized(grid)));
        let mut merged: Vec<(SpherePoint<T>, T)> = Vec::with_capacity(self.atoms.len());
        for (p, w) in self.atoms.drain(..) {
            match merged.last_mut() {
                Some((q, wq)) if q.quantized(grid) == p.quantized(grid) => *wq += w,
                _ => merged.push((p, w)),
            }
        }
        // deterministic order independent of insertion history
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.atoms = merged;
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// Divide all weights by the total mass.
    pub fn normalize(&mut self) {
        let m = self.total_mass();
        if m > T::zero() {
            for (_, w) in self.atoms.iter_mut() {
                *w /= m;
            }
        }
    }

    pub fn integrate(&self, u: impl Fn(&SpherePoint<T>) -> T) -> T {
        self.atoms.iter().map(|(p, w)| u(p) * *w).sum()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }
}

/// Fixed finite family of smooth test functions: low-order spherical
/// harmonics in the R^3 embedding coordinates. The induced pseudometric
/// `max_t |<mu,u_t> - <nu,u_t>|` is the computable stand-in for the weak*
/// topology used by all convergence diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeakStarGauge;

pub const GAUGE_DIM: usize = 12;

impl WeakStarGauge {
    pub fn eval<T: Real>(&self, t: usize, p: &SpherePoint<T>) -> T {
        let [x, y, z] = p.embed3();
        let three = T::from_f(3.0);
        match t {
            0 => x,
            1 => y,
            2 => z,
            3 => x * y,
            4 => y * z,
            5 => z * x,
            6 => x * x - y * y,
            7 => three * z * z - T::one(),
            8 => x * (x * x - three * y * y),
            9 => z * z * z,
            10 => x * y * z,
            11 => z * (x * x - y * y),
            _ => panic!("gauge index out of range"),
        }
    }

    pub fn coords<T: Real>(&self, mu: &EmpiricalMeasure<T>) -> [T; GAUGE_DIM] {
        let mut out = [T::zero(); GAUGE_DIM];
        for (t, slot) in out.iter_mut().enumerate() {
            *slot = mu.integrate(|p| self.eval(t, p));
        }
        out
    }

    pub fn dist_coords<T: Real>(&self, a: &[T; GAUGE_DIM], b: &[T; GAUGE_DIM]) -> T {
        let mut d = T::zero();
        for t in 0..GAUGE_DIM {
            d = d.max((a[t] - b[t]).abs());
        }
        d
    }

    pub fn dist<T: Real>(&self, mu: &EmpiricalMeasure<T>, nu: &EmpiricalMeasure<T>) -> T {
        self.dist_coords(&self.coords(mu), &self.coords(nu))
    }

    /// Upper bound for the gauge diameter of the space of probability
    /// measures (test functions are bounded by 2 in absolute value).
    pub fn diameter<T: Real>(&self) -> T {
        T::from_f(4.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = EmpiricalMeasure<f64>;
    type P = SpherePoint<f64>;

    #[test]
    fn merging_coincident_atoms() {
        let p = P::from_re_im(1.0, 2.0);
        let q = P::new(p.z * 3.0, p.w * 3.0); // same point projectively
        let m = M::new(vec![(p, 0.25), (q, 0.75)]);
        assert_eq!(m.num_atoms(), 1);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_is_pseudometric_on_identical_lists() {
        let g = WeakStarGauge;
        let m = M::new(vec![
            (P::from_re_im(0.0, 1.0), 0.5),
            (P::infinity(), 0.5),
        ]);
        assert_eq!(g.dist(&m, &m.clone()), 0.0);
    }

    #[test]
    fn integration_of_constant_is_mass() {
        let m = M::new(vec![
            (P::from_re_im(0.3, 0.4), 0.25),
            (P::from_re_im(-2.0, 0.1), 0.5),
        ]);
        let c = m.integrate(|_| 1.0);
        assert!((c - 0.75).abs() < 1e-12);
    }
}
