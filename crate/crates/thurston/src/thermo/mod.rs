//! Thermodynamic machinery: the transfer operator, three pressure
//! estimators (iterated preimages, periodic points, separated sets), the
//! normalized potential, and equidistribution approximants.

pub mod fixed_points;
pub mod measures;
pub mod normalize;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cells::Complex;
use crate::error::{Error, Result};
use crate::map::{Potential, PreimageTree, RationalMap, WeightScheme};
use crate::scalar::Real;
use crate::sphere::SpherePoint;

pub use fixed_points::{fixed_points, FixedPoint, FixedPointSet};
pub use measures::{distortion_report, equilibrium_approximants, Approximants, DistortionReport};
pub use normalize::NormalizedPotential;

pub const DEFAULT_TREE_BUDGET: u64 = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    PreimageDeg,
    PreimageWeighted,
    Periodic,
    SeparatedOracle,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::PreimageDeg => "preimage_deg",
            EstimatorKind::PreimageWeighted => "preimage_weighted",
            EstimatorKind::Periodic => "periodic",
            EstimatorKind::SeparatedOracle => "separated_oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PressureEntry<T> {
    pub n: u32,
    pub log_sum: T,
    /// (1/n) log_sum.
    pub value: T,
}

#[derive(Debug, Clone)]
pub struct PressureSeries<T> {
    pub kind: EstimatorKind,
    pub entries: Vec<PressureEntry<T>>,
    /// Value of the deepest entry.
    pub tail_value: T,
    /// Intercept of the least-squares fit value(n) = P + a/n over the top
    /// half of the entries.
    pub fit_value: T,
    pub fit_slope: T,
}

impl<T: Real> PressureSeries<T> {
    fn from_entries(kind: EstimatorKind, entries: Vec<PressureEntry<T>>) -> Self {
        assert!(!entries.is_empty());
        for w in entries.windows(2) {
            assert!(w[0].n < w[1].n, "entries must be strictly increasing in n");
        }
        let tail_value = entries.last().unwrap().value;
        let top = &entries[entries.len() / 2..];
        let (fit_value, fit_slope) = fit_affine_in_reciprocal(top);
        PressureSeries {
            kind,
            entries,
            tail_value,
            fit_value,
            fit_slope,
        }
    }

    /// Best estimate: the fitted limit when the fit is sane, else the tail.
    pub fn limit(&self) -> T {
        if self.entries.len() >= 3 && self.fit_value.is_finite() {
            self.fit_value
        } else {
            self.tail_value
        }
    }
}

/// Least squares for value = P + a * (1/n).
fn fit_affine_in_reciprocal<T: Real>(entries: &[PressureEntry<T>]) -> (T, T) {
    let n = T::from_f(entries.len() as f64);
    if entries.len() < 2 {
        return (entries[0].value, T::zero());
    }
    let xs: Vec<T> = entries.iter().map(|e| T::one() / T::from_f(e.n as f64)).collect();
    let ys: Vec<T> = entries.iter().map(|e| e.value).collect();
    let sx: T = xs.iter().copied().sum();
    let sy: T = ys.iter().copied().sum();
    let sxx: T = xs.iter().map(|&x| x * x).sum();
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < T::from_f(1e-300) {
        return (ys[ys.len() - 1], T::zero());
    }
    let a = (n * sxy - sx * sy) / denom;
    let p = (sy - a * sx) / n;
    (p, a)
}

pub(crate) fn logsumexp_pub<T: Real>(terms: &[T]) -> T {
    logsumexp(terms)
}

fn logsumexp<T: Real>(terms: &[T]) -> T {
    let m = terms.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let s: T = terms.iter().map(|&t| (t - m).exp()).sum();
    m + s.ln()
}

/// Birkhoff sums of the potential along every node's path to the root:
/// out[i] = S_depth(i) phi (node plus its strict ancestors below the root).
pub fn tree_path_sums<T: Real>(tree: &PreimageTree<T>, phi: &Potential<T>) -> Vec<T> {
    let mut out = vec![T::zero(); tree.nodes.len()];
    for (i, node) in tree.nodes.iter().enumerate() {
        if let Some(p) = node.parent {
            out[i] = phi.eval(&node.point) + out[p as usize];
        }
    }
    out
}

/// One application of the transfer operator: sum over the preimages of x of
/// deg_f(y) u(y) exp(phi(y)).
pub fn ruelle_apply<T: Real>(
    map: &RationalMap<T>,
    phi: &Potential<T>,
    u: impl Fn(&SpherePoint<T>) -> T,
    x: &SpherePoint<T>,
) -> Result<T> {
    let mut acc = T::zero();
    for (y, deg) in map.preimages(x)? {
        acc += T::from_f(deg as f64) * u(&y) * phi.eval(&y).exp();
    }
    Ok(acc)
}

/// Base points x_n for the preimage sums.
#[derive(Debug, Clone)]
pub enum BaseSequence<T> {
    Constant(SpherePoint<T>),
    /// Adversarial: points approaching a critical point like scale/n.
    NearCritical { center: SpherePoint<T>, scale: T },
}

impl<T: Real> BaseSequence<T> {
    pub fn point_at(&self, n: u32) -> SpherePoint<T> {
        match self {
            BaseSequence::Constant(p) => *p,
            BaseSequence::NearCritical { center, scale } => {
                let eps = *scale / T::from_f(n.max(1) as f64);
                let dir = num_complex::Complex::new(
                    eps * T::from_f(std::f64::consts::FRAC_1_SQRT_2),
                    eps * T::from_f(std::f64::consts::FRAC_1_SQRT_2),
                );
                match center.to_complex() {
                    Some(c) => SpherePoint::from_complex(c + dir),
                    None => SpherePoint::from_complex(
                        num_complex::Complex::new(T::one(), T::zero()) / dir,
                    ),
                }
            }
        }
    }
}

/// Pressure from iterated preimages: entries (n, (1/n) log sum over
/// f^{-n}(x_n) of w_n(y) exp(S_n phi(y))). Unit weights require the map to
/// have no periodic critical points.
pub fn pressure_preimage<T: Real>(
    map: &RationalMap<T>,
    phi: &Potential<T>,
    weights: &WeightScheme<T>,
    base: &BaseSequence<T>,
    n_min: u32,
    n_max: u32,
    tree_budget: u64,
) -> Result<PressureSeries<T>> {
    if weights.is_unit() && map.has_periodic_critical_point() {
        return Err(Error::UnitWeightsUnsupported);
    }
    let kind = match weights {
        WeightScheme::LocalDegree => EstimatorKind::PreimageDeg,
        _ => EstimatorKind::PreimageWeighted,
    };
    let mut entries = Vec::new();
    for n in n_min..=n_max {
        let tree = map.preimage_tree(&base.point_at(n), n as usize, tree_budget)?;
        let sums = tree_path_sums(&tree, phi);
        let range = tree.layers[n as usize].clone();
        let terms: Vec<T> = range
            .map(|i| {
                let node = &tree.nodes[i];
                weights.weight(&node.point, node.cum_deg).ln() + sums[i]
            })
            .collect();
        let log_sum = logsumexp(&terms);
        entries.push(PressureEntry {
            n,
            log_sum,
            value: log_sum / T::from_f(n as f64),
        });
    }
    Ok(PressureSeries::from_entries(kind, entries))
}

/// Pressure from periodic points: entries (n, (1/n) log sum over fixed
/// points of f^n of w_n(x) exp(S_n phi(x))).
pub fn pressure_periodic<T: Real>(
    cx: &mut Complex<T>,
    phi: &Potential<T>,
    weights: &WeightScheme<T>,
    n_min: u32,
    n_max: u32,
) -> Result<PressureSeries<T>> {
    let map = cx
        .map
        .clone()
        .ok_or(Error::Unsupported("periodic pressure needs a rational backend"))?;
    let mut entries = Vec::new();
    for n in n_min..=n_max {
        let set = fixed_points(cx, n as u16)?;
        let terms: Vec<T> = set
            .points
            .iter()
            .map(|fp| {
                weights.weight(&fp.point, fp.degree).ln()
                    + map.birkhoff_sum(phi, &fp.point, n as usize)
            })
            .collect();
        let log_sum = logsumexp(&terms);
        entries.push(PressureEntry {
            n,
            log_sum,
            value: log_sum / T::from_f(n as f64),
        });
    }
    Ok(PressureSeries::from_entries(EstimatorKind::Periodic, entries))
}

/// Independent sanity oracle: (1/n) log sum of exp(S_n phi) over a greedily
/// built maximal (n, eps)-separated subset of a fixed sphere grid.
pub fn pressure_separated_oracle<T: Real>(
    map: &RationalMap<T>,
    phi: &Potential<T>,
    eps: T,
    n: u32,
    grid_size: usize,
) -> Result<(T, usize)> {
    let grid = fibonacci_grid::<T>(grid_size);
    // orbits up to length n
    let orbits: Vec<Vec<SpherePoint<T>>> =
        grid.iter().map(|p| map.orbit(p, n as usize - 1)).collect();
    let bowen = |a: &[SpherePoint<T>], b: &[SpherePoint<T>]| -> T {
        let mut d = T::zero();
        for (x, y) in a.iter().zip(b.iter()) {
            d = d.max(x.chordal(y));
        }
        d
    };
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..grid.len() {
        if chosen.iter().all(|&j| bowen(&orbits[i], &orbits[j]) >= eps) {
            chosen.push(i);
        }
    }
    let terms: Vec<T> = chosen
        .iter()
        .map(|&i| map.birkhoff_sum(phi, &grid[i], n as usize))
        .collect();
    let log_sum = logsumexp(&terms);
    Ok((log_sum / T::from_f(n as f64), chosen.len()))
}

/// Deterministic quasi-uniform grid on the sphere.
pub fn fibonacci_grid<T: Real>(n: usize) -> Vec<SpherePoint<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * k as f64;
            crate::cells::geometry::from_embed3([
                T::from_f(r * th.cos()),
                T::from_f(r * th.sin()),
                T::from_f(z),
            ])
        })
        .collect()
}

/// Empirical Holder data of a potential against the visual surrogate.
pub fn holder_estimate<T: Real>(
    cx: &mut Complex<T>,
    phi: &Potential<T>,
    alpha: T,
    pairs: usize,
    max_level: u16,
    lambda: T,
    seed: u64,
) -> Result<crate::map::potential::HolderEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constant = T::zero();
    let mut used = 0usize;
    for _ in 0..pairs {
        let p = random_point(&mut rng);
        let q = random_point(&mut rng);
        let dv = cx.visual_distance(&p, &q, max_level, lambda)?;
        if dv <= T::zero() {
            continue;
        }
        let ratio = (phi.eval(&p) - phi.eval(&q)).abs() / dv.powf(alpha);
        constant = constant.max(ratio);
        used += 1;
    }
    Ok(crate::map::potential::HolderEstimate {
        exponent: alpha.to_f(),
        constant: constant.to_f(),
        pairs: used,
    })
}

pub fn random_point<T: Real>(rng: &mut ChaCha8Rng) -> SpherePoint<T> {
    // uniform on the sphere via the embedding
    let z: f64 = rng.gen_range(-1.0..1.0);
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    crate::cells::geometry::from_embed3([
        T::from_f(r * th.cos()),
        T::from_f(r * th.sin()),
        T::from_f(z),
    ])
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
    fn ruelle_of_constants() {
        let m = map();
        let x = SpherePoint::from_re_im(0.3, 0.1);
        let v = ruelle_apply(&m, &Potential::zero(), |_| 1.0, &x).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "L_0 1 = deg f");
        let v = ruelle_apply(&m, &Potential::Constant(0.7), |_| 1.0, &x).unwrap();
        assert!((v - 2.0 * 0.7f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn zero_potential_pressure_is_exactly_log_deg() {
        let m = map();
        let base = BaseSequence::Constant(SpherePoint::from_re_im(0.0, 0.0));
        let s = pressure_preimage(
            &m,
            &Potential::zero(),
            &WeightScheme::LocalDegree,
            &base,
            1,
            10,
            1 << 20,
        )
        .unwrap();
        for e in &s.entries {
            assert!(
                (e.value - 2.0f64.ln()).abs() < 1e-12,
                "entry {} = {}",
                e.n,
                e.value
            );
        }
        assert!((s.limit() - 2.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn constant_potential_shifts_pressure() {
        let m = map();
        let base = BaseSequence::Constant(SpherePoint::from_re_im(0.2, -0.4));
        let c = -0.3;
        let s = pressure_preimage(
            &m,
            &Potential::Constant(c),
            &WeightScheme::LocalDegree,
            &base,
            1,
            8,
            1 << 20,
        )
        .unwrap();
        for e in &s.entries {
            assert!((e.value - (2.0f64.ln() + c)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_pressure_with_zero_potential_approaches_log_deg() {
        let mut cx = crate::cells::Complex::for_rational(map(), 3).unwrap();
        let s = pressure_periodic(
            &mut cx,
            &Potential::zero(),
            &WeightScheme::LocalDegree,
            2,
            10,
        )
        .unwrap();
        // (1/n) log(1 + 2^n) decreases to log 2
        let last = s.entries.last().unwrap();
        assert!((last.value - (1.0 + 2f64.powi(10)).ln() / 10.0).abs() < 1e-12);
        assert!((s.limit() - 2.0f64.ln()).abs() < 0.02);
    }

    #[test]
    fn separated_oracle_monotone_in_eps() {
        let m = map();
        let phi = Potential::zero();
        let (v_small, c_small) = pressure_separated_oracle(&m, &phi, 0.05, 4, 1500).unwrap();
        let (v_big, c_big) = pressure_separated_oracle(&m, &phi, 1.9, 4, 1500).unwrap();
        assert!(c_small > c_big);
        assert!(v_small > v_big);
        assert!(v_big < 2.0f64.ln());
    }

    #[test]
    fn base_point_independence_for_smooth_potentials() {
        let m = map();
        let phi = Potential::ChordalPower {
            a: 0.2,
            beta: 1.0,
            center: SpherePoint::from_re_im(0.3, 0.6),
        };
        let s1 = pressure_preimage(
            &m,
            &phi,
            &WeightScheme::LocalDegree,
            &BaseSequence::Constant(SpherePoint::from_re_im(0.0, 0.0)),
            8,
            12,
            1 << 20,
        )
        .unwrap();
        let s2 = pressure_preimage(
            &m,
            &phi,
            &WeightScheme::LocalDegree,
            &BaseSequence::Constant(SpherePoint::from_re_im(-1.7, 2.2)),
            8,
            12,
            1 << 20,
        )
        .unwrap();
        assert!((s1.limit() - s2.limit()).abs() < 0.05);
    }
}
