//! The normalized potential.
//!
//! Given an estimate of the pressure P, the eigenfunction u of the
//! normalized transfer operator is approximated by the Cesaro average
//! (1/depth) sum_{j<depth} L^j_{phi - P} 1, evaluated on demand through the
//! preimage tree and memoized with tolerance-aware keys. The normalized
//! potential phi~ = phi - P + log u - log(u o f) then satisfies
//! L_{phi~} 1 ~= 1, and the residual is the quality certificate.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::map::{Potential, RationalMap};
use crate::scalar::Real;
use crate::sphere::SpherePoint;

const MEMO_GRID: f64 = 1e-9;

pub struct NormalizedPotential<T: Real> {
    pub map: std::sync::Arc<RationalMap<T>>,
    pub base: Potential<T>,
    pub pressure: T,
    pub depth: usize,
    pub tree_budget: u64,
    cache: Mutex<HashMap<[i64; 3], T>>,
}

impl<T: Real> NormalizedPotential<T> {
    pub fn new(
        map: std::sync::Arc<RationalMap<T>>,
        base: Potential<T>,
        pressure: T,
        depth: usize,
        tree_budget: u64,
    ) -> Self {
        NormalizedPotential {
            map,
            base,
            pressure,
            depth,
            tree_budget,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Cesaro approximant of the eigenfunction u_phi at a point.
    pub fn u_value(&self, x: &SpherePoint<T>) -> Result<T> {
        let key = x.quantized(T::from_f(MEMO_GRID));
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let tree = self
            .map
            .preimage_tree(x, self.depth - 1, self.tree_budget)?;
        let sums = super::tree_path_sums(&tree, &self.base);
        let mut acc = T::zero();
        for j in 0..self.depth {
            let mut term = T::zero();
            for i in tree.layers[j].clone() {
                let node = &tree.nodes[i];
                term += T::from_f(node.cum_deg as f64)
                    * (sums[i] - T::from_f(j as f64) * self.pressure).exp();
            }
            acc += term;
        }
        let u = acc / T::from_f(self.depth as f64);
        if !(u > T::zero()) {
            return Err(Error::NormalizationResidual(f64::INFINITY));
        }
        self.cache.lock().unwrap().insert(key, u);
        Ok(u)
    }

    /// phi~(x) = phi(x) - P + log u(x) - log u(f x).
    pub fn eval(&self, x: &SpherePoint<T>) -> Result<T> {
        let fx = self.map.evaluate(x);
        Ok(self.base.eval(x) - self.pressure + self.u_value(x)?.ln() - self.u_value(&fx)?.ln())
    }

    /// Birkhoff sum S_n phi~ via the telescoping identity:
    /// S_n phi~(y) = S_n phi(y) - nP + log u(y) - log u(f^n y).
    pub fn birkhoff_sum(&self, y: &SpherePoint<T>, n: usize) -> Result<T> {
        let s = self.map.birkhoff_sum(&self.base, y, n);
        let fny = self.map.iterate(y, n);
        Ok(s - T::from_f(n as f64) * self.pressure + self.u_value(y)?.ln()
            - self.u_value(&fny)?.ln())
    }

    /// |L_{phi~} 1 (x) - 1|.
    pub fn residual_at(&self, x: &SpherePoint<T>) -> Result<T> {
        let mut acc = T::zero();
        for (y, deg) in self.map.preimages(x)? {
            acc += T::from_f(deg as f64) * self.eval(&y)?.exp();
        }
        Ok((acc - T::one()).abs())
    }

    /// Max residual over sample points; errors out above the threshold.
    pub fn check_residual(&self, samples: &[SpherePoint<T>], threshold: T) -> Result<T> {
        let mut worst = T::zero();
        for x in samples {
            worst = worst.max(self.residual_at(x)?);
        }
        if worst > threshold {
            return Err(Error::NormalizationResidual(worst.to_f()));
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::CurveSpec;
    use crate::poly::Poly;
    use std::sync::Arc;

    fn map() -> Arc<RationalMap<f64>> {
        Arc::new(
            RationalMap::new(
                Poly::from_reals(&[-2.0, 0.0, 1.0]),
                Poly::from_reals(&[0.0, 0.0, 1.0]),
                CurveSpec::RealLine,
                1,
            )
            .unwrap(),
        )
    }

    #[test]
    fn zero_potential_normalizes_to_minus_log_deg() {
        let np = NormalizedPotential::new(map(), Potential::zero(), 2.0f64.ln(), 6, 1 << 18);
        let x = SpherePoint::from_re_im(0.4, 0.2);
        assert!((np.u_value(&x).unwrap() - 1.0).abs() < 1e-12);
        assert!((np.eval(&x).unwrap() + 2.0f64.ln()).abs() < 1e-12);
        assert!(np.residual_at(&x).unwrap() < 1e-12);
    }

    #[test]
    fn residual_decreases_with_depth_for_the_shipped_potential() {
        let phi = Potential::ChordalPower {
            a: 0.2,
            beta: 1.0,
            center: SpherePoint::from_re_im(0.3, 0.6),
        };
        // decent pressure estimate from the preimage estimator
        let m = map();
        let s = super::super::pressure_preimage(
            &m,
            &phi,
            &crate::map::WeightScheme::LocalDegree,
            &super::super::BaseSequence::Constant(SpherePoint::from_re_im(0.0, 0.0)),
            6,
            12,
            1 << 20,
        )
        .unwrap();
        let p = s.limit();
        let samples: Vec<_> = (0..24)
            .map(|k| SpherePoint::from_re_im(0.37 * k as f64 - 4.0, 0.23 * k as f64 - 2.5))
            .collect();
        let res = |depth: usize| -> f64 {
            let np = NormalizedPotential::new(map(), phi.clone(), p, depth, 1 << 20);
            samples
                .iter()
                .map(|x| np.residual_at(x).unwrap())
                .fold(0.0, f64::max)
        };
        let r6 = res(6);
        let r12 = res(12);
        assert!(
            r12 < r6,
            "residual should decrease with depth: {r6} -> {r12}"
        );
        assert!(r12 < 0.05, "depth-12 residual {r12}");
    }
}
