//! Equilibrium-state approximants from weighted preimages, and the
//! empirical distortion constants.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cells::Complex;
use crate::error::Result;
use crate::map::{Potential, RationalMap};
use crate::measure::EmpiricalMeasure;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

use super::normalize::NormalizedPotential;

/// The three preimage measures: xi_n (atoms at the preimages, weights
/// deg e^{S_n phi}), xi_hat_n (the same mass spread along forward orbits),
/// and xi_tilde_n (atoms weighted by the normalized potential).
#[derive(Debug, Clone)]
pub struct Approximants<T> {
    pub xi: EmpiricalMeasure<T>,
    pub xi_hat: EmpiricalMeasure<T>,
    pub xi_tilde: Option<EmpiricalMeasure<T>>,
}

pub fn equilibrium_approximants<T: Real>(
    map: &RationalMap<T>,
    phi: &Potential<T>,
    normalized: Option<&NormalizedPotential<T>>,
    x_n: &SpherePoint<T>,
    n: usize,
    tree_budget: u64,
) -> Result<Approximants<T>> {
    let tree = map.preimage_tree(x_n, n, tree_budget)?;
    let sums = super::tree_path_sums(&tree, phi);
    let leaf_range = tree.layers[n].clone();

    // stabilize the exponentials around the max
    let mut max_s = T::neg_infinity();
    for i in leaf_range.clone() {
        max_s = max_s.max(sums[i]);
    }
    let mut xi_atoms = Vec::new();
    let mut xi_hat_atoms = Vec::new();
    let inv_n = T::one() / T::from_f(n as f64);
    for i in leaf_range.clone() {
        let node = &tree.nodes[i];
        let w = T::from_f(node.cum_deg as f64) * (sums[i] - max_s).exp();
        xi_atoms.push((node.point, w));
        // spread along the forward orbit y, f(y), ..., f^{n-1}(y): the
        // ancestors in the tree, root excluded
        let mut idx = i;
        for _ in 0..n {
            let node = &tree.nodes[idx];
            xi_hat_atoms.push((node.point, w * inv_n));
            idx = node.parent.expect("non-root node") as usize;
        }
    }
    let mut xi = EmpiricalMeasure::new(xi_atoms);
    xi.normalize();
    let mut xi_hat = EmpiricalMeasure::new(xi_hat_atoms);
    xi_hat.normalize();

    let xi_tilde = match normalized {
        None => None,
        Some(np) => {
            // telescoping: S_n phi~(y) = S_n phi(y) - nP + log u(y) - log u(x_n);
            // the log u(x_n) term is constant and cancels after normalization
            let mut atoms = Vec::new();
            for i in leaf_range {
                let node = &tree.nodes[i];
                let s = sums[i] - T::from_f(n as f64) * np.pressure + np.u_value(&node.point)?.ln();
                let w = T::from_f(node.cum_deg as f64) * (s - max_s).exp();
                atoms.push((node.point, w));
            }
            let mut m = EmpiricalMeasure::new(atoms);
            m.normalize();
            Some(m)
        }
    };

    Ok(Approximants { xi, xi_hat, xi_tilde })
}

#[derive(Debug, Clone)]
pub struct DistortionReport<T> {
    /// Empirical max of |S_m phi(x) - S_m phi(y)| / d(f^m x, f^m y)^alpha
    /// over same-tile vertex pairs.
    pub c1_hat: T,
    /// Empirical max ratio of depth-l preimage sums over random base pairs.
    pub c2_hat: T,
    /// c1 per level, for the stability check.
    pub per_level: Vec<(u16, T)>,
}

pub fn distortion_report<T: Real>(
    cx: &mut Complex<T>,
    phi: &Potential<T>,
    alpha: T,
    levels: &[u16],
    seed: u64,
) -> Result<DistortionReport<T>> {
    let map = cx
        .map
        .clone()
        .ok_or(crate::error::Error::Unsupported("distortion needs a rational backend"))?;
    let mut per_level = Vec::new();
    let mut c1 = T::zero();
    for &n in levels {
        cx.build_level(n)?;
        let mut level_max = T::zero();
        let nt = cx.levels[n as usize].tiles.len() as u32;
        for t in 0..nt {
            let corners = cx.tile_corners(n, t);
            let pts: Vec<SpherePoint<T>> = corners
                .iter()
                .filter_map(|&v| cx.verts[v as usize].embed)
                .collect();
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    for m in [n / 2, n] {
                        if m == 0 {
                            continue;
                        }
                        let sx = map.birkhoff_sum(phi, &pts[i], m as usize);
                        let sy = map.birkhoff_sum(phi, &pts[j], m as usize);
                        let fx = map.iterate(&pts[i], m as usize);
                        let fy = map.iterate(&pts[j], m as usize);
                        let d = fx.chordal(&fy);
                        if d > T::from_f(1e-9) {
                            level_max = level_max.max((sx - sy).abs() / d.powf(alpha));
                        }
                    }
                }
            }
        }
        per_level.push((n, level_max));
        c1 = c1.max(level_max);
    }
    // preimage-sum ratio over random base pairs
    let l = *levels.iter().max().unwrap_or(&6) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c2 = T::one();
    let log_sum_at = |x: &SpherePoint<T>| -> Result<T> {
        let tree = map.preimage_tree(x, l, 1 << 20)?;
        let sums = super::tree_path_sums(&tree, phi);
        let terms: Vec<T> = tree.layers[l]
            .clone()
            .map(|i| T::from_f(tree.nodes[i].cum_deg as f64).ln() + sums[i])
            .collect();
        Ok(super::logsumexp_pub(&terms))
    };
    for _ in 0..12 {
        let x = super::random_point::<T>(&mut rng);
        let y = super::random_point::<T>(&mut rng);
        let r = (log_sum_at(&x)? - log_sum_at(&y)?).abs().exp();
        c2 = c2.max(r);
    }
    Ok(DistortionReport { c1_hat: c1, c2_hat: c2, per_level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::CurveSpec;
    use crate::measure::WeakStarGauge;
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
    fn approximant_masses_are_one_and_weights_uniform_for_zero_potential() {
        let m = map();
        let x = SpherePoint::from_re_im(0.1, 0.2);
        let a = equilibrium_approximants(&m, &Potential::zero(), None, &x, 6, 1 << 20).unwrap();
        assert!((a.xi.total_mass() - 1.0).abs() < 1e-12);
        assert!((a.xi_hat.total_mass() - 1.0).abs() < 1e-12);
        // for phi = 0 the xi weights are proportional to deg_{f^n}, here all 1
        let w0 = a.xi.atoms[0].1;
        for (_, w) in &a.xi.atoms {
            assert!((w - w0).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_hat_pairings_are_cauchy_in_n() {
        let m = map();
        let x = SpherePoint::from_re_im(0.1, 0.2);
        let phi = Potential::ChordalPower {
            a: 0.2,
            beta: 1.0,
            center: SpherePoint::from_re_im(0.3, 0.6),
        };
        let gauge = WeakStarGauge;
        let coords: Vec<_> = (0..5)
            .map(|k| {
                let n = 6 + 2 * k;
                let a = equilibrium_approximants(&m, &phi, None, &x, n, 1 << 20).unwrap();
                gauge.coords(&a.xi_hat)
            })
            .collect();
        let diffs: Vec<f64> = coords
            .windows(2)
            .map(|w| gauge.dist_coords(&w[0], &w[1]))
            .collect();
        // decreasing increments (one violation allowed, as in the trend rule)
        let violations = diffs.windows(2).filter(|d| d[1] > d[0]).count();
        assert!(
            violations <= 1,
            "successive xi_hat gauge increments should shrink: {diffs:?}"
        );
    }

    #[test]
    fn distortion_constants_are_finite_and_stable() {
        let mut cx = Complex::for_rational(map(), 4).unwrap();
        let phi = Potential::ChordalPower {
            a: 0.2,
            beta: 1.0,
            center: SpherePoint::from_re_im(0.3, 0.6),
        };
        let rep = distortion_report(&mut cx, &phi, 1.0, &[4, 6], 7).unwrap();
        assert!(rep.c1_hat.is_finite() && rep.c2_hat.is_finite());
        assert!(rep.c2_hat >= 1.0);
        // zero potential: c1 = 0, ratios 1
        let rep0 = distortion_report(&mut cx, &Potential::zero(), 1.0, &[4], 7).unwrap();
        assert_eq!(rep0.c1_hat, 0.0);
        assert!((rep0.c2_hat - 1.0).abs() < 1e-9);
    }
}
