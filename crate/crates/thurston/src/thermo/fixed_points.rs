//! Enumeration of the fixed points of f^n through the cell structure.
//!
//! Every n-tile whose color matches the color of its 0-tile container
//! admits the inverse branch of f^n as a self-map of that 0-tile, hence
//! carries exactly one fixed point; on-curve n-edges whose image chain
//! returns to their containing 0-edge carry the fixed points that f^n
//! folds onto the curve; vertex fixed points come from the finite post
//! dynamics. The weighted count must satisfy sum deg_{f^n} = 1 + (deg f)^n,
//! and the enumeration fails loudly when it does not.
//!
//! Inverse branches are iterated with anchors on the forward orbit of a
//! seed vertex chosen combinatorially interior to the candidate cell; by
//! cellularity the anchors sit inside the correct cells of the image
//! chain, which pins the preimage branch at every step.

use rayon::prelude::*;

use crate::cells::geometry::branch_dist;
use crate::cells::{Cell, Complex};
use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

const MAX_CONTRACTION_STEPS: usize = 200;
/// Extra subdivision depth allowed while hunting for an interior seed.
const SEED_DEPTH: u16 = 6;

#[derive(Debug, Clone)]
pub struct FixedPoint<T> {
    pub point: SpherePoint<T>,
    pub degree: u64,
    /// The n-edge in f^{-n}(e0) whose tile pair contains the point (None
    /// for vertex- and curve-found points).
    pub pair_edge: Option<u32>,
    pub tile: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct FixedPointSet<T> {
    pub n: u16,
    pub points: Vec<FixedPoint<T>>,
}

impl<T: Real> FixedPointSet<T> {
    pub fn weighted_count(&self) -> u64 {
        self.points.iter().map(|p| p.degree).sum()
    }
}

/// All fixed points of f^n, via tile pairing and inverse-branch iteration.
pub fn fixed_points<T: Real>(cx: &mut Complex<T>, n: u16) -> Result<FixedPointSet<T>> {
    let map = cx
        .map
        .clone()
        .ok_or(Error::Unsupported("fixed point enumeration needs a rational backend"))?;
    assert!(n >= 1);
    cx.build_level(n)?;

    let mut found: Vec<FixedPoint<T>> = Vec::new();

    // vertex fixed points: post vertices on a cycle of length dividing n
    for v in 0..cx.m() as u32 {
        if cx.vertex_image_chain(v, n) == v {
            let degree = cx.vertex_iterated_degree(v, n);
            found.push(FixedPoint {
                point: cx.verts[v as usize].embed.expect("post embedded"),
                degree,
                pair_edge: None,
                tile: None,
            });
        }
    }

    // tile candidates: color matches the containing 0-tile
    let nt = cx.levels[n as usize].tiles.len() as u32;
    let tile_candidates: Vec<u32> = (0..nt)
        .filter(|&t| {
            let color = cx.tile(n, t).color;
            let container = cx.cont_at(Cell::Tile(n, t), 0);
            matches!(container, Cell::Tile(0, c) if c as usize == color.index())
        })
        .collect();

    // on-curve edge candidates: image chain lands on the containing 0-edge
    let ne = cx.levels[n as usize].edges.len() as u32;
    let mut edge_candidates: Vec<u32> = Vec::new();
    for e in 0..ne {
        if let Cell::Edge(0, j) = cx.cont_at(Cell::Edge(n, e), 0) {
            let mut cur = e;
            for lvl in (0..n).rev() {
                cur = cx.edge(lvl + 1, cur).image.0;
                let _ = lvl;
            }
            if cur == j {
                edge_candidates.push(e);
            }
        }
    }

    // seeds: a vertex combinatorially interior to each candidate cell
    let mut jobs: Vec<(Option<u32>, SpherePoint<T>)> = Vec::new();
    for &t in &tile_candidates {
        let seed = interior_seed(cx, Cell::Tile(n, t))?;
        jobs.push((Some(t), seed));
    }
    for &e in &edge_candidates {
        let seed = interior_seed(cx, Cell::Edge(n, e))?;
        jobs.push((None, seed));
    }

    let hubs: Vec<SpherePoint<T>> = map.crit.iter().map(|&(p, _)| p).collect();
    let results: Vec<Result<SpherePoint<T>>> = jobs
        .par_iter()
        .map(|&(_, seed)| inverse_branch_fixed_point(&map, &hubs, n, &seed))
        .collect();

    for ((tile, _), r) in jobs.iter().zip(results.into_iter()) {
        let mut point = r?;
        // Fixed points cluster within ~1e-7 of critical values, where a
        // tile's true (off-curve) fixed point sits next to an on-curve one
        // and the branch iteration can collapse onto the curve. When a tile
        // candidate lands on the curve, look for the fixed point on the
        // tile's own side with a Newton step off the axis.
        if let Some(t) = tile {
            if point.embed3()[1].abs() < T::from_f(1e-9) {
                if let Cell::Tile(0, side) = cx.cont_at(Cell::Tile(n, *t), 0) {
                    if let Some(z) = split_off_curve(&map, n, &point, side) {
                        point = z;
                    }
                }
            }
        }
        found.push(FixedPoint {
            point,
            degree: 1,
            pair_edge: tile.and_then(|t| pairing_edge(cx, n, t)),
            tile: *tile,
        });
    }

    // deduplicate projectively: a fixed point on the curve is reached from
    // both flanking tiles and from its edge; vertex fixed points may be
    // rediscovered by tile iterations. Distinct fixed points cluster as
    // tightly as 4^-n near critical values, so the radius stays close to
    // the iteration noise.
    let tol = T::from_f(1e-11);
    let mut unique: Vec<FixedPoint<T>> = Vec::new();
    for fp in found {
        match unique.iter_mut().find(|u| u.point.proj_eq(&fp.point, tol)) {
            Some(u) => {
                if fp.degree > u.degree {
                    u.degree = fp.degree;
                }
                if u.pair_edge.is_none() {
                    u.pair_edge = fp.pair_edge;
                    u.tile = fp.tile;
                }
            }
            None => unique.push(fp),
        }
    }
    unique.sort_by(|a, b| a.point.total_cmp(&b.point));

    let expect = 1 + (cx.degree() as u64).pow(n as u32);
    let got: u64 = unique.iter().map(|p| p.degree).sum();
    if got != expect {
        if std::env::var("THURSTON_DEBUG_FP").is_ok() {
            for u in &unique {
                if let Some(c) = u.point.to_complex() {
                    let d = (c - num_complex::Complex::new(T::one(), T::zero())).norm();
                    if d < T::from_f(5e-4) {
                        eprintln!("near-1 found: ({:?}, {:?}) tile {:?}", c.re, c.im, u.tile);
                    }
                }
            }
        }
        return Err(Error::FixedPointCount { got, expect });
    }
    Ok(FixedPointSet { n, points: unique })
}

/// Find (subdividing as needed) a vertex whose interior-container chain
/// passes through the given cell, i.e. a point combinatorially interior to
/// it, and return its embedding.
fn interior_seed<T: Real>(cx: &mut Complex<T>, cell: Cell) -> Result<SpherePoint<T>> {
    let level = match cell {
        Cell::Tile(l, _) => l,
        Cell::Edge(l, _) => l,
        Cell::Vertex(_) => unreachable!("vertex seeds are their own embeddings"),
    };
    let scan = |cx: &Complex<T>, lo: usize| -> Option<SpherePoint<T>> {
        for v in lo..cx.verts.len() {
            if cx.verts[v].birth > level && cx.cont_at(Cell::Vertex(v as u32), level) == cell {
                if let Some(p) = cx.verts[v].embed {
                    return Some(p);
                }
            }
        }
        None
    };
    if let Some(p) = scan(cx, 0) {
        return Ok(p);
    }
    let mut region = vec![cell];
    for _ in 0..SEED_DEPTH {
        let before = cx.verts.len();
        let mut next = Vec::new();
        for c in region {
            match c {
                Cell::Tile(l, t) => {
                    cx.subdivide_tile(l, t)?;
                    let kids = cx.tile(l, t).children.clone().unwrap();
                    for k in kids.tiles {
                        next.push(Cell::Tile(l + 1, k));
                    }
                }
                Cell::Edge(l, e) => {
                    cx.subdivide_edge(l, e)?;
                    let kids = cx.edge(l, e).children.clone().unwrap();
                    for k in kids.edges {
                        next.push(Cell::Edge(l + 1, k));
                    }
                }
                Cell::Vertex(_) => {}
            }
        }
        if let Some(p) = scan(cx, before) {
            return Ok(p);
        }
        region = next;
    }
    Err(Error::RefinementBudget)
}

/// Iterate the inverse branch of f^n pinned by the forward orbit of the
/// seed: anchor j lies in the level-j cell of the candidate's image chain.
fn inverse_branch_fixed_point<T: Real>(
    map: &RationalMap<T>,
    hubs: &[SpherePoint<T>],
    n: u16,
    seed: &SpherePoint<T>,
) -> Result<SpherePoint<T>> {
    // anchors[j] = f^{n-j}(seed), j = 1..n (anchor for the level-j step)
    let orbit = map.orbit(seed, n as usize);
    let anchor = |j: usize| -> &SpherePoint<T> { &orbit[n as usize - j] };

    let mut x = *seed;
    for iter in 0..MAX_CONTRACTION_STEPS {
        let mut z = x;
        for j in 1..=n as usize {
            let pre = map.preimages(&z)?;
            let a = anchor(j);
            z = pre
                .into_iter()
                .map(|(p, _)| p)
                .min_by(|p, q| {
                    branch_dist(p, a, hubs)
                        .to_f()
                        .total_cmp(&branch_dist(q, a, hubs).to_f())
                })
                .ok_or_else(|| Error::RootSolve("empty preimage in branch".into()))?;
        }
        let step = x.chordal(&z);
        x = z;
        if step < T::from_f(5e-12) {
            break;
        }
        if iter == MAX_CONTRACTION_STEPS - 1 {
            return Err(Error::ContractionFailed(MAX_CONTRACTION_STEPS));
        }
    }
    // defining property
    let y = map.iterate(&x, n as usize);
    if x.chordal(&y) > T::from_f(1e-8) {
        return Err(Error::ContractionFailed(MAX_CONTRACTION_STEPS));
    }
    Ok(x)
}

/// Newton iteration on f^n(z) - z with the exact multiplier, looking for a
/// fixed point strictly on the given side of the curve (side 0 = upper).
/// Returns None when no nearby off-curve fixed point exists.
fn split_off_curve<T: Real>(
    map: &RationalMap<T>,
    n: u16,
    on_curve: &SpherePoint<T>,
    side: u32,
) -> Option<SpherePoint<T>> {
    let base = on_curve.to_complex()?;
    let sign = if side == 0 { T::one() } else { -T::one() };
    let dnum = map.num.derivative();
    let dden = map.den.derivative();
    let scale = T::one().max(base.norm());
    for exp in [-9i32, -8, -7, -6, -5] {
        let delta = T::from_f(10f64.powi(exp)) * scale;
        let mut z = base + num_complex::Complex::new(T::zero(), sign * delta);
        let mut ok = false;
        for _ in 0..80 {
            let mut w = z;
            let mut d = num_complex::Complex::new(T::one(), T::zero());
            let mut degenerate = false;
            for _ in 0..n {
                let den = map.den.eval(w);
                if den.norm() < T::from_f(1e-12) || w.norm() > T::from_f(1e9) {
                    degenerate = true;
                    break;
                }
                let num = map.num.eval(w);
                let dn = dnum.eval(w);
                let dd = dden.eval(w);
                d = d * (dn * den - num * dd) / (den * den);
                w = num / den;
            }
            if degenerate {
                break;
            }
            let g = w - z;
            let gp = d - num_complex::Complex::new(T::one(), T::zero());
            if gp.norm() < T::from_f(1e-9) {
                break;
            }
            let step = g / gp;
            z = z - step;
            if step.norm() < T::from_f(1e-15) * scale {
                ok = true;
                break;
            }
        }
        if !ok {
            continue;
        }
        // must sit strictly on the tile's side and be fixed
        if z.im * sign <= T::zero() {
            continue;
        }
        let p = SpherePoint::from_complex(z);
        if p.chordal(on_curve) < T::from_f(1e-11) {
            continue;
        }
        let y = map.iterate(&p, n as usize);
        if p.chordal(&y) < T::from_f(1e-8) {
            return Some(p);
        }
    }
    None
}

/// The boundary edge of the tile that maps onto the base 0-edge e0 = 0
/// under f^n: the tile-pairing edge.
fn pairing_edge<T: Real>(cx: &Complex<T>, n: u16, tile: u32) -> Option<u32> {
    for &(e, _) in &cx.tile(n, tile).boundary {
        let mut cur = e;
        for lvl in (1..=n).rev() {
            cur = cx.edge(lvl, cur).image.0;
        }
        if cur == 0 {
            return Some(e);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::CurveSpec;
    use crate::poly::Poly;
    use std::sync::Arc;

    fn complex() -> Complex<f64> {
        let map = RationalMap::new(
            Poly::from_reals(&[-2.0, 0.0, 1.0]),
            Poly::from_reals(&[0.0, 0.0, 1.0]),
            CurveSpec::RealLine,
            1,
        )
        .unwrap();
        Complex::for_rational(Arc::new(map), 3).unwrap()
    }

    type P = SpherePoint<f64>;

    #[test]
    fn fixed_points_of_f_are_roots_of_the_cubic() {
        // f(z) = z iff z^3 - z^2 + 2 = 0: roots -1, 1 +- i
        let mut cx = complex();
        let set = fixed_points(&mut cx, 1).unwrap();
        assert_eq!(set.points.len(), 3);
        assert_eq!(set.weighted_count(), 3); // 1 + deg f
        let expect = [
            P::from_re_im(-1.0, 0.0),
            P::from_re_im(1.0, -1.0),
            P::from_re_im(1.0, 1.0),
        ];
        for e in &expect {
            assert!(
                set.points.iter().any(|p| p.point.proj_eq(e, 1e-8)),
                "missing fixed point {e:?}"
            );
        }
    }

    #[test]
    fn period_two_points_join_at_n_two() {
        // extra 2-cycle: roots of z^2 + 2z - 2 = -1 +- sqrt(3), on the curve
        let mut cx = complex();
        let set = fixed_points(&mut cx, 2).unwrap();
        assert_eq!(set.weighted_count(), 5); // 1 + 4
        let s3 = 3.0_f64.sqrt();
        for x in [-1.0 + s3, -1.0 - s3] {
            assert!(set
                .points
                .iter()
                .any(|p| p.point.proj_eq(&P::from_re_im(x, 0.0), 1e-8)));
        }
    }

    #[test]
    fn weighted_count_identity_up_to_n_ten() {
        let mut cx = complex();
        for n in 3..=10u16 {
            let set = fixed_points(&mut cx, n).unwrap();
            assert_eq!(set.weighted_count(), 1 + (1u64 << n), "n = {n}");
        }
        // defining property holds for every returned point at n = 10
        let set = fixed_points(&mut cx, 10).unwrap();
        let map = cx.map.clone().unwrap();
        for fp in &set.points {
            let y = map.iterate(&fp.point, 10);
            assert!(y.chordal(&fp.point) < 1e-8);
        }
    }
}
