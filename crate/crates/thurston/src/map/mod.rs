//! Map backends and the orbit/preimage operations shared by the
//! thermodynamic machinery.

pub mod potential;
pub mod rational;
pub mod spec;
pub mod subdivision;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

pub use potential::Potential;
pub use rational::{CurveSpec, RationalMap};

/// Weights w_n(x) in [1, deg_{f^n}(x)] attached to preimages and periodic
/// points. Custom evaluators are clamped into the admissible interval.
#[derive(Clone)]
pub enum WeightScheme<T> {
    Unit,
    LocalDegree,
    Custom(Arc<dyn Fn(&SpherePoint<T>) -> T + Send + Sync>),
}

impl<T: Real> WeightScheme<T> {
    pub fn weight(&self, point: &SpherePoint<T>, cum_deg: u64) -> T {
        let deg = T::from_f(cum_deg as f64);
        match self {
            WeightScheme::Unit => T::one(),
            WeightScheme::LocalDegree => deg,
            WeightScheme::Custom(f) => f(point).max(T::one()).min(deg),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, WeightScheme::Unit)
    }
}

impl<T> std::fmt::Debug for WeightScheme<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightScheme::Unit => write!(f, "Unit"),
            WeightScheme::LocalDegree => write!(f, "LocalDegree"),
            WeightScheme::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A node of an iterated-preimage tree. Nodes at depth t are solutions of
/// f^t(x) = root; `cum_deg` is deg_{f^t} at the node, the product of local
/// degrees along the path to the root.
#[derive(Debug, Clone)]
pub struct PreimageNode<T> {
    pub point: SpherePoint<T>,
    pub parent: Option<u32>,
    pub depth: u16,
    pub local_deg: u32,
    pub cum_deg: u64,
}

#[derive(Debug, Clone)]
pub struct PreimageTree<T> {
    pub depth: usize,
    pub nodes: Vec<PreimageNode<T>>,
    /// Index ranges of each depth layer.
    pub layers: Vec<std::ops::Range<usize>>,
}

impl<T: Real> PreimageTree<T> {
    pub fn leaves(&self) -> &[PreimageNode<T>] {
        &self.nodes[self.layers[self.depth].clone()]
    }

    pub fn layer(&self, t: usize) -> &[PreimageNode<T>] {
        &self.nodes[self.layers[t].clone()]
    }

    /// Forward orbit of a node back up to the root: x, f(x), ..., f^t(x).
    pub fn orbit_to_root(&self, mut idx: usize) -> Vec<SpherePoint<T>> {
        let mut out = Vec::new();
        loop {
            let node = &self.nodes[idx];
            out.push(node.point);
            match node.parent {
                Some(p) => idx = p as usize,
                None => break,
            }
        }
        out
    }

    /// Sum of deg_{f^depth} over the leaves (must equal (deg f)^depth).
    pub fn leaf_degree_sum(&self) -> u64 {
        self.leaves().iter().map(|n| n.cum_deg).sum()
    }
}

impl<T: Real> RationalMap<T> {
    /// Expand the depth-n preimage tree of y. Deterministic: siblings are
    /// ordered by the root solver's lexicographic order.
    pub fn preimage_tree(&self, y: &SpherePoint<T>, n: usize, node_budget: u64) -> Result<PreimageTree<T>> {
        let mut nodes = vec![PreimageNode {
            point: *y,
            parent: None,
            depth: 0,
            local_deg: 1,
            cum_deg: 1,
        }];
        let mut layers = vec![0..1usize];
        let mut frontier = 0..1usize;
        for t in 0..n {
            let mut next_start = nodes.len();
            for idx in frontier.clone() {
                let (point, cum) = (nodes[idx].point, nodes[idx].cum_deg);
                for (x, m) in self.preimages(&point)? {
                    nodes.push(PreimageNode {
                        point: x,
                        parent: Some(idx as u32),
                        depth: (t + 1) as u16,
                        local_deg: m as u32,
                        cum_deg: cum * m as u64,
                    });
                    if nodes.len() as u64 > node_budget {
                        return Err(Error::CellBudget {
                            needed: nodes.len() as u64,
                            budget: node_budget,
                        });
                    }
                }
            }
            frontier = next_start..nodes.len();
            layers.push(frontier.clone());
            next_start = nodes.len();
            let _ = next_start;
        }
        Ok(PreimageTree {
            depth: n,
            nodes,
            layers,
        })
    }

    /// Birkhoff sum S_n phi(x); S_0 phi = 0.
    pub fn birkhoff_sum(&self, phi: &Potential<T>, x: &SpherePoint<T>, n: usize) -> T {
        let mut acc = T::zero();
        let mut p = *x;
        for _ in 0..n {
            acc += phi.eval(&p);
            p = self.evaluate(&p);
        }
        acc
    }

    /// W_n(x): the orbit-averaged empirical measure with n atoms of mass 1/n.
    pub fn empirical_orbit_measure(&self, x: &SpherePoint<T>, n: usize) -> EmpiricalMeasure<T> {
        assert!(n >= 1, "empirical orbit measure needs n >= 1");
        let inv = T::one() / T::from_f(n as f64);
        let mut p = *x;
        let mut atoms = Vec::with_capacity(n);
        for _ in 0..n {
            atoms.push((p, inv));
            p = self.evaluate(&p);
        }
        EmpiricalMeasure::new(atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;

    fn f() -> RationalMap<f64> {
        RationalMap::new(
            Poly::from_reals(&[-2.0, 0.0, 1.0]),
            Poly::from_reals(&[0.0, 0.0, 1.0]),
            CurveSpec::RealLine,
            1,
        )
        .unwrap()
    }

    type P = SpherePoint<f64>;

    #[test]
    fn preimage_tree_depth_zero_is_single_node() {
        let map = f();
        let t = map.preimage_tree(&P::from_re_im(0.3, 0.2), 0, 1 << 20).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.leaves().len(), 1);
        assert_eq!(t.leaf_degree_sum(), 1);
    }

    #[test]
    fn preimage_tree_of_one_at_depth_two() {
        // f^2(z) = 1 iff z^4 = 0: the only leaf is 0 with deg_{f^2} = 4
        let map = f();
        let t = map.preimage_tree(&P::from_re_im(1.0, 0.0), 2, 1 << 20).unwrap();
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 1);
        assert!(leaves[0].point.proj_eq(&P::zero(), 1e-9));
        assert_eq!(leaves[0].cum_deg, 4);
        assert_eq!(t.leaf_degree_sum(), 4);
    }

    #[test]
    fn degree_sum_invariant_at_depth_six() {
        let map = f();
        let t = map
            .preimage_tree(&P::from_re_im(0.123, -0.77), 6, 1 << 20)
            .unwrap();
        assert_eq!(t.leaf_degree_sum(), 64);
        // evaluate . preimages is the identity on returned points
        for leaf in t.leaves() {
            let mut p = leaf.point;
            for _ in 0..6 {
                p = map.evaluate(&p);
            }
            assert!(p.proj_eq(&P::from_re_im(0.123, -0.77), 1e-7));
        }
    }

    #[test]
    fn birkhoff_reference_values() {
        let map = f();
        let x = P::from_re_im(0.4, 1.3);
        assert_eq!(map.birkhoff_sum(&Potential::zero(), &x, 0), 0.0);
        let c = Potential::Constant(0.3);
        assert!((map.birkhoff_sum(&c, &x, 7) - 2.1).abs() < 1e-12);
        // fixed point: S_n phi = n phi(x)
        let fixed = P::from_re_im(-1.0, 0.0);
        let bump = Potential::ChordalPower {
            a: 1.0,
            beta: 1.0,
            center: P::zero(),
        };
        let v = bump.eval(&fixed);
        assert!((map.birkhoff_sum(&bump, &fixed, 5) - 5.0 * v).abs() < 1e-10);
    }

    #[test]
    fn orbit_measure_merges_periodic_orbits() {
        let map = f();
        let fixed = P::from_re_im(-1.0, 0.0);
        let m = map.empirical_orbit_measure(&fixed, 5);
        assert_eq!(m.num_atoms(), 1);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);

        // period-2 orbit: -1 +- sqrt(3) (roots of z^2 + 2z - 2)
        let a = P::from_re_im(-1.0 + 3.0_f64.sqrt(), 0.0);
        let m = map.empirical_orbit_measure(&a, 4);
        assert_eq!(m.num_atoms(), 2);
        for (_, w) in &m.atoms {
            assert!((w - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_weights_are_clamped() {
        let w: WeightScheme<f64> = WeightScheme::Custom(Arc::new(|_| 17.0));
        assert_eq!(w.weight(&P::zero(), 4), 4.0);
        assert_eq!(w.weight(&P::zero(), 1), 1.0);
        let u: WeightScheme<f64> = WeightScheme::Unit;
        assert_eq!(u.weight(&P::zero(), 8), 1.0);
    }
}
