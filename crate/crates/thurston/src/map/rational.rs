//! Postcritically-finite rational maps on the Riemann sphere.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{chordal_tol, Real};
use crate::sphere::SpherePoint;

/// Chordal radius used to cluster numerically coincident preimages into one
/// point with a local degree.
const CLUSTER_TOL: f64 = 1e-6;

/// Which Jordan curve through the postcritical set the cell machinery uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSpec {
    /// The extended real line (requires post f on it and f-invariance).
    RealLine,
}

#[derive(Debug, Clone)]
pub struct RationalMap<T> {
    pub num: Poly<T>,
    pub den: Poly<T>,
    /// Topological degree.
    pub degree: usize,
    /// Critical points with local degrees; sum of (deg - 1) is 2 deg - 2.
    pub crit: Vec<(SpherePoint<T>, usize)>,
    /// Postcritical set (forward orbits of critical values).
    pub post: Vec<SpherePoint<T>>,
    /// Index map: post[i] maps to post[post_dynamics[i]].
    pub post_dynamics: Vec<usize>,
    pub curve: CurveSpec,
    pub n_curve: usize,
    /// Linear local connectivity constant of the visual metric; recorded as
    /// metadata only, no computation consumes it.
    pub llc_constant: Option<f64>,
}

impl<T: Real> RationalMap<T> {
    pub fn new(num: Poly<T>, den: Poly<T>, curve: CurveSpec, n_curve: usize) -> Result<Self> {
        let degree = num.degree().max(den.degree());
        if degree < 2 {
            return Err(Error::InvalidSpec("map degree must be >= 2".into()));
        }
        if n_curve != 1 {
            return Err(Error::InvalidSpec(
                "only n_C = 1 (f-invariant curve) is supported".into(),
            ));
        }
        let mut map = RationalMap {
            num,
            den,
            degree,
            crit: Vec::new(),
            post: Vec::new(),
            post_dynamics: Vec::new(),
            curve,
            n_curve,
            llc_constant: None,
        };
        map.compute_critical_points()?;
        map.compute_postcritical_set()?;
        map.validate()?;
        Ok(map)
    }

    /// Apply f in homogeneous coordinates.
    pub fn evaluate(&self, x: &SpherePoint<T>) -> SpherePoint<T> {
        let n = homogeneous_eval(&self.num, self.degree, x);
        let d = homogeneous_eval(&self.den, self.degree, x);
        SpherePoint::new(n, d)
    }

    pub fn iterate(&self, x: &SpherePoint<T>, n: usize) -> SpherePoint<T> {
        let mut p = *x;
        for _ in 0..n {
            p = self.evaluate(&p);
        }
        p
    }

    pub fn orbit(&self, x: &SpherePoint<T>, n: usize) -> Vec<SpherePoint<T>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut p = *x;
        out.push(p);
        for _ in 0..n {
            p = self.evaluate(&p);
            out.push(p);
        }
        out
    }

    /// All solutions of f(x) = y with local degrees; the degrees sum to
    /// deg f exactly. Deterministic order: finite roots lexicographic by
    /// (Re, Im), the point at infinity last.
    pub fn preimages(&self, y: &SpherePoint<T>) -> Result<Vec<(SpherePoint<T>, usize)>> {
        // Solve yw * num(z) - yz * den(z) = 0; degree drop counts preimages
        // at infinity.
        let d = self.degree;
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); d + 1];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let a = self.num.coeffs.get(i).copied().unwrap_or_default();
            let b = self.den.coeffs.get(i).copied().unwrap_or_default();
            *c = y.w * a - y.z * b;
        }
        let p = Poly::new(coeffs);
        if p.is_zero() {
            return Err(Error::RootSolve(
                "num and den share a factor (map not reduced)".into(),
            ));
        }
        let finite = p.roots()?;
        let at_infinity = d - p.degree();
        let mut clusters: Vec<(SpherePoint<T>, usize)> = Vec::new();
        let tol = T::from_f(CLUSTER_TOL);
        for r in finite {
            let pt = SpherePoint::from_complex(r);
            match clusters.iter_mut().find(|(q, _)| q.proj_eq(&pt, tol)) {
                Some((_, mult)) => *mult += 1,
                None => clusters.push((pt, 1)),
            }
        }
        if at_infinity > 0 {
            clusters.push((SpherePoint::infinity(), at_infinity));
        }
        let total: usize = clusters.iter().map(|&(_, m)| m).sum();
        if total != d {
            return Err(Error::RootSolve(format!(
                "preimage degrees sum to {total}, expected {d}"
            )));
        }
        Ok(clusters)
    }

    /// Local degree of f at x (1 away from critical points).
    pub fn local_degree(&self, x: &SpherePoint<T>) -> Result<usize> {
        let y = self.evaluate(x);
        let pre = self.preimages(&y)?;
        let tol = T::from_f(10.0 * CLUSTER_TOL);
        pre.into_iter()
            .find(|(p, _)| p.proj_eq(x, tol))
            .map(|(_, m)| m)
            .ok_or_else(|| Error::RootSolve("point not found among preimages of its image".into()))
    }

    fn compute_critical_points(&mut self) -> Result<()> {
        // finite critical points: roots of num' den - num den'
        let w = poly_sub(
            &poly_mul(&self.num.derivative(), &self.den),
            &poly_mul(&self.num, &self.den.derivative()),
        );
        let mut crit: Vec<(SpherePoint<T>, usize)> = Vec::new();
        let tol = T::from_f(CLUSTER_TOL);
        if !w.is_zero() && w.degree() >= 1 {
            for r in w.roots()? {
                let pt = SpherePoint::from_complex(r);
                match crit.iter_mut().find(|(q, _)| q.proj_eq(&pt, tol)) {
                    Some((_, mult)) => *mult += 1,
                    None => crit.push((pt, 2)),
                }
            }
        }
        // infinity: critical iff its local degree exceeds 1
        let inf = SpherePoint::infinity();
        let deg_inf = {
            let y = self.evaluate(&inf);
            let pre = self.preimages(&y)?;
            pre.into_iter()
                .find(|(p, _)| p.proj_eq(&inf, tol))
                .map(|(_, m)| m)
                .unwrap_or(1)
        };
        if deg_inf >= 2 {
            crit.push((inf, deg_inf));
        }
        // Riemann-Hurwitz
        let rh: usize = crit.iter().map(|&(_, m)| m - 1).sum();
        if rh != 2 * self.degree - 2 {
            return Err(Error::InvalidSpec(format!(
                "Riemann-Hurwitz sum {} != {}",
                rh,
                2 * self.degree - 2
            )));
        }
        crit.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.crit = crit;
        Ok(())
    }

    fn compute_postcritical_set(&mut self) -> Result<()> {
        let tol = chordal_tol::<T>() * T::from_f(100.0);
        let mut post: Vec<SpherePoint<T>> = Vec::new();
        for (c, _) in &self.crit {
            let mut p = self.evaluate(c);
            for _ in 0..256 {
                if post.iter().any(|q| q.proj_eq(&p, tol)) {
                    break;
                }
                post.push(p);
                p = self.evaluate(&p);
            }
        }
        if post.len() >= 200 {
            return Err(Error::InvalidSpec(
                "critical orbits do not close up: map not postcritically finite".into(),
            ));
        }
        post.sort_by(|a, b| {
            curve_angle(a).to_f().total_cmp(&curve_angle(b).to_f())
        });
        let dyn_map = post
            .iter()
            .map(|p| {
                let fp = self.evaluate(p);
                post.iter()
                    .position(|q| q.proj_eq(&fp, tol))
                    .ok_or_else(|| Error::InvalidSpec("postcritical set not forward invariant".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.post = post;
        self.post_dynamics = dyn_map;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.post.len() < 3 {
            return Err(Error::InvalidSpec(format!(
                "card(post f) = {} < 3",
                self.post.len()
            )));
        }
        match self.curve {
            CurveSpec::RealLine => {
                let tol = T::from_f(1e-8);
                for p in &self.post {
                    if p.embed3()[1].abs() > tol {
                        return Err(Error::CurveNotInvariant(
                            "postcritical point off the extended real line".into(),
                        ));
                    }
                }
                // invariance of the curve under f, sampled
                for k in 0..64 {
                    let theta = -std::f64::consts::PI + (k as f64 + 0.5) * std::f64::consts::PI / 32.0;
                    let x = SpherePoint::from_re_im(T::from_f((theta / 2.0).tan()), T::zero());
                    let y = self.evaluate(&x);
                    if y.embed3()[1].abs() > tol {
                        return Err(Error::CurveNotInvariant(
                            "f does not map the extended real line into itself".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// True if some critical point is periodic. Expanding rational maps
    /// never have one; the check gates unit-weight preimage pressure.
    pub fn has_periodic_critical_point(&self) -> bool {
        let tol = T::from_f(1e-7);
        let bound = self.post.len() + 2;
        for (c, _) in &self.crit {
            let mut p = *c;
            for _ in 0..bound {
                p = self.evaluate(&p);
                if p.proj_eq(c, tol) {
                    return true;
                }
            }
        }
        false
    }

    /// Max number of steps any critical orbit needs before it never meets
    /// the critical set again. Finite iff no periodic critical points.
    pub fn critical_escape_steps(&self) -> Result<usize> {
        if self.has_periodic_critical_point() {
            return Err(Error::PeriodicCriticalPoint);
        }
        let tol = T::from_f(1e-7);
        let horizon = 2 * (self.post.len() + 2);
        let mut n_c = 0usize;
        for (c, _) in &self.crit {
            let orbit = self.orbit(c, horizon);
            // smallest i such that f^j(c) is non-critical for all j >= i
            let mut last_crit = 0usize;
            for (j, p) in orbit.iter().enumerate().skip(1) {
                if self.crit.iter().any(|(q, _)| q.proj_eq(p, tol)) {
                    last_crit = j;
                }
            }
            n_c = n_c.max(last_crit + 1);
        }
        Ok(n_c)
    }

    /// Min chordal distance from post \ crit to crit (the paper's D_c).
    pub fn critical_gap(&self) -> T {
        let tol = T::from_f(1e-7);
        let mut d = T::from_f(4.0);
        for p in &self.post {
            if self.crit.iter().any(|(c, _)| c.proj_eq(p, tol)) {
                continue;
            }
            for (c, _) in &self.crit {
                d = d.min(p.chordal(c));
            }
        }
        d
    }

    /// 2 * max over orbits of the product of critical local degrees along a
    /// single forward orbit (the paper's W_f: max tiles in a flower closure).
    pub fn max_flower_tiles(&self) -> Result<usize> {
        if self.has_periodic_critical_point() {
            return Err(Error::PeriodicCriticalPoint);
        }
        let tol = T::from_f(1e-7);
        let horizon = 2 * (self.post.len() + 2);
        // product of local degrees over critical points lying on a common
        // orbit, maximized over starting critical points
        let mut best = 1usize;
        for (c, dc) in &self.crit {
            let mut prod = *dc;
            let orbit = self.orbit(c, horizon);
            for p in orbit.iter().skip(1) {
                if let Some((_, dq)) = self.crit.iter().find(|(q, _)| q.proj_eq(p, tol)) {
                    prod *= dq;
                }
            }
            best = best.max(prod);
        }
        Ok(2 * best)
    }
}

/// Evaluate a polynomial homogenized to total degree `deg` at (z : w).
fn homogeneous_eval<T: Real>(p: &Poly<T>, deg: usize, x: &SpherePoint<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut zpow = Complex::new(T::one(), T::zero());
    // sum a_i z^i w^(deg - i); compute w powers descending via one pass
    let mut terms = Vec::with_capacity(deg + 1);
    for i in 0..=deg {
        let a = p.coeffs.get(i).copied().unwrap_or_default();
        terms.push(a * zpow);
        zpow *= x.z;
    }
    let mut wpow = Complex::new(T::one(), T::zero());
    for i in (0..=deg).rev() {
        acc += terms[i] * wpow;
        wpow *= x.w;
    }
    acc
}

/// Angle parameter of a point on (or near) the extended real line, used to
/// order postcritical points cyclically: x -> 2 atan(x), infinity -> pi.
pub fn curve_angle<T: Real>(p: &SpherePoint<T>) -> T {
    match p.to_complex() {
        None => T::from_f(std::f64::consts::PI),
        Some(c) => T::from_f(2.0) * c.re.atan(),
    }
}

fn poly_mul<T: Real>(a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); a.coeffs.len() + b.coeffs.len() - 1];
    for (i, &x) in a.coeffs.iter().enumerate() {
        for (j, &y) in b.coeffs.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Poly::new(out)
}

fn poly_sub<T: Real>(a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
    let n = a.coeffs.len().max(b.coeffs.len());
    let mut out = vec![Complex::new(T::zero(), T::zero()); n];
    for (i, slot) in out.iter_mut().enumerate() {
        let x = a.coeffs.get(i).copied().unwrap_or_default();
        let y = b.coeffs.get(i).copied().unwrap_or_default();
        *slot = x - y;
    }
    Poly::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn sample_map() -> RationalMap<f64> {
        // f(z) = 1 - 2/z^2 = (z^2 - 2)/z^2
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
    fn evaluate_reference_points() {
        let f = sample_map();
        let m1 = f.evaluate(&P::from_re_im(1.0, 0.0));
        assert!(m1.proj_eq(&P::from_re_im(-1.0, 0.0), 1e-12));
        assert!(f.evaluate(&P::zero()).is_infinity());
        assert!(f
            .evaluate(&P::infinity())
            .proj_eq(&P::from_re_im(1.0, 0.0), 1e-12));
    }

    #[test]
    fn critical_points_and_degrees() {
        let f = sample_map();
        assert_eq!(f.degree, 2);
        assert_eq!(f.crit.len(), 2);
        assert!(f.crit.iter().any(|(p, d)| p.proj_eq(&P::zero(), 1e-9) && *d == 2));
        assert!(f.crit.iter().any(|(p, d)| p.is_infinity() && *d == 2));
        assert_eq!(f.local_degree(&P::from_re_im(2.0, 0.0)).unwrap(), 1);
    }

    #[test]
    fn postcritical_set_is_inf_1_m1() {
        let f = sample_map();
        assert_eq!(f.post.len(), 3);
        let expect = [
            P::from_re_im(-1.0, 0.0),
            P::from_re_im(1.0, 0.0),
            P::infinity(),
        ];
        for e in &expect {
            assert!(f.post.iter().any(|p| p.proj_eq(e, 1e-9)));
        }
        // orbit of the critical point 0 lands in post within 3 steps
        let orbit = f.orbit(&P::zero(), 3);
        assert!(orbit[1].is_infinity());
        assert!(orbit[2].proj_eq(&P::from_re_im(1.0, 0.0), 1e-9));
        assert!(orbit[3].proj_eq(&P::from_re_im(-1.0, 0.0), 1e-9));
        assert!(!f.has_periodic_critical_point());
    }

    #[test]
    fn preimage_reference_values() {
        let f = sample_map();
        // f^{-1}(0) = +-sqrt(2), both simple
        let pre = f.preimages(&P::zero()).unwrap();
        assert_eq!(pre.len(), 2);
        let s = 2.0_f64.sqrt();
        assert!(pre[0].0.proj_eq(&P::from_re_im(-s, 0.0), 1e-9) && pre[0].1 == 1);
        assert!(pre[1].0.proj_eq(&P::from_re_im(s, 0.0), 1e-9) && pre[1].1 == 1);
        // f^{-1}(1) = {infinity with degree 2}
        let pre = f.preimages(&P::from_re_im(1.0, 0.0)).unwrap();
        assert_eq!(pre.len(), 1);
        assert!(pre[0].0.is_infinity());
        assert_eq!(pre[0].1, 2);
    }

    #[test]
    fn preimage_degree_sum_for_random_targets() {
        let f = sample_map();
        for k in 0..20 {
            let y = P::from_re_im(0.37 * k as f64 - 2.1, 0.59 * k as f64 - 3.0);
            let pre = f.preimages(&y).unwrap();
            let total: usize = pre.iter().map(|&(_, m)| m).sum();
            assert_eq!(total, 2);
            for (x, _) in pre {
                assert!(f.evaluate(&x).proj_eq(&y, 1e-9));
            }
        }
    }

    #[test]
    fn expansion_constants() {
        let f = sample_map();
        assert_eq!(f.critical_escape_steps().unwrap(), 2);
        assert!((f.critical_gap() - 2.0_f64.sqrt()).abs() < 1e-9);
        assert_eq!(f.max_flower_tiles().unwrap(), 8);
    }
}
