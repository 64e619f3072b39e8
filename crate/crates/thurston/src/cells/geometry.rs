//! Geometry attached to the combinatorics of a rational backend: vertex
//! embeddings, lifted edge polylines, winding-number point location, the
//! visual-metric surrogate and tile diameters.

use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

use super::{Cell, Complex, VertId};

/// Chordal tolerance for treating a point as lying on a polyline.
pub const ON_SKELETON_TOL: f64 = 1e-9;

/// Solve f(x) = target taking the root nearest the seed.
pub fn nearest_preimage<T: Real>(
    map: &RationalMap<T>,
    seed: &SpherePoint<T>,
    target: &SpherePoint<T>,
) -> Result<SpherePoint<T>> {
    let pre = map.preimages(target)?;
    pre.into_iter()
        .map(|(p, _)| p)
        .min_by(|a, b| seed.chordal(a).to_f().total_cmp(&seed.chordal(b).to_f()))
        .ok_or_else(|| Error::RootSolve("empty preimage set".into()))
}

/// Distance for branch selection. Near a branch-collision vertex every
/// candidate is chordally close to every other, so the plain chordal
/// distance is normalized by the distances to the vertex, which recovers
/// the angular separation in the local chart and keeps branches apart.
pub fn branch_dist<T: Real>(p: &SpherePoint<T>, q: &SpherePoint<T>, hubs: &[SpherePoint<T>]) -> T {
    let d = p.chordal(q);
    // inside a hub zone the angular quotient is the only honest metric;
    // mixing the raw chordal distance back in lets the hub itself vouch
    // for wrong-branch candidates
    for v in hubs {
        let dp = p.chordal(v);
        let dq = q.chordal(v);
        if dp < T::from_f(0.25) && dq < T::from_f(0.25) {
            return d / (T::from_f(1e-12) + dp + dq);
        }
    }
    d
}

/// Lift the image polyline through f, from the edge's first endpoint to its
/// second. Branch selection near critical points is guided by where the
/// edge is known to live: children of an edge stay on the parent polyline
/// (the corridor); children interior to a tile start from a midpoint
/// disambiguated by tile membership and walk outward.
pub fn lift_edge_polyline<T: Real>(
    cx: &mut Complex<T>,
    map: &RationalMap<T>,
    level: u16,
    edge: u32,
) -> Result<()> {
    if cx.edge(level, edge).polyline.is_some() {
        return Ok(());
    }
    let (img, img_rev) = cx.edge(level, edge).image;
    let image_poly = cx
        .edge(level - 1, img)
        .polyline
        .clone()
        .ok_or_else(|| Error::UnlocatablePoint("image edge has no polyline".into()))?;
    let mut targets: Vec<SpherePoint<T>> = if img_rev {
        image_poly.iter().rev().copied().collect()
    } else {
        image_poly
    };
    // the endpoints of the lift are the known vertex embeddings; targets at
    // vertices are the worst-conditioned solves
    if targets.len() > 2 {
        targets = targets[1..targets.len() - 1].to_vec();
    }
    let ends = cx.edge(level, edge).ends;
    let a = cx.verts[ends[0] as usize]
        .embed
        .ok_or_else(|| Error::UnlocatablePoint("vertex without embedding".into()))?;
    let b = cx.verts[ends[1] as usize]
        .embed
        .ok_or_else(|| Error::UnlocatablePoint("vertex without embedding".into()))?;

    let container = cx.edge(level, edge).container;
    let hubs = [a, b];
    let interior = match container {
        Cell::Edge(pl, pe) => {
            // corridor mode: candidates compete by normalized distance to
            // the parent polyline, continuity breaking ties
            let corridor = cx
                .edge(pl, pe)
                .polyline
                .clone()
                .ok_or_else(|| Error::UnlocatablePoint("parent edge has no polyline".into()))?;
            let corridor_dist = |p: &SpherePoint<T>| -> T {
                // skip the corridor's endpoint vertices: they belong to
                // every branch at once
                let mut d = T::from_f(4.0);
                for q in &corridor[1..corridor.len() - 1] {
                    d = d.min(branch_dist(p, q, &hubs));
                }
                d
            };
            let mut out = Vec::with_capacity(targets.len());
            let mut cur = a;
            for y in &targets {
                let cands = map.preimages(y)?;
                let next = cands
                    .into_iter()
                    .map(|(p, _)| p)
                    .min_by(|p, q| {
                        let kp = (corridor_dist(p) * T::from_f(8.0)
                            + branch_dist(&cur, p, &hubs))
                        .to_f();
                        let kq = (corridor_dist(q) * T::from_f(8.0)
                            + branch_dist(&cur, q, &hubs))
                        .to_f();
                        kp.total_cmp(&kq)
                    })
                    .ok_or_else(|| Error::RootSolve("empty preimage while lifting".into()))?;
                out.push(next);
                cur = next;
            }
            out
        }
        Cell::Tile(pl, pt) => {
            // midpoint-out mode: fix the branch where it is unambiguous
            let mid_idx = targets.len() / 2;
            let cands = map.preimages(&targets[mid_idx])?;
            let chord_mid = midpoint_on_sphere(&a, &b);
            let mut best: Option<(f64, SpherePoint<T>)> = None;
            for (p, _) in cands {
                let inside = matches!(cx.point_in_tile(pl, pt, &p), Ok(Some(true)));
                let score = if inside { 0.0 } else { 10.0 } + chord_mid.chordal(&p).to_f();
                match &best {
                    Some((s, _)) if *s <= score => {}
                    _ => best = Some((score, p)),
                }
            }
            let seed = best
                .ok_or_else(|| Error::RootSolve("empty preimage while lifting".into()))?
                .1;
            let step = |cur: &SpherePoint<T>, y: &SpherePoint<T>| -> Result<SpherePoint<T>> {
                map.preimages(y)?
                    .into_iter()
                    .map(|(p, _)| p)
                    .min_by(|p, q| {
                        branch_dist(cur, p, &hubs)
                            .to_f()
                            .total_cmp(&branch_dist(cur, q, &hubs).to_f())
                    })
                    .ok_or_else(|| Error::RootSolve("empty preimage while lifting".into()))
            };
            let mut fwd = vec![seed];
            let mut cur = seed;
            for y in &targets[mid_idx + 1..] {
                cur = step(&cur, y)?;
                fwd.push(cur);
            }
            let mut back = Vec::new();
            let mut cur = seed;
            for y in targets[..mid_idx].iter().rev() {
                cur = step(&cur, y)?;
                back.push(cur);
            }
            back.reverse();
            back.extend(fwd);
            back
        }
        Cell::Vertex(_) => {
            return Err(Error::UnlocatablePoint("edge contained in a vertex".into()))
        }
    };
    let mut out = Vec::with_capacity(interior.len() + 2);
    out.push(a);
    out.extend(interior);
    out.push(b);
    cx.levels[level as usize].edges[edge as usize].polyline = Some(out);
    Ok(())
}

pub fn midpoint_on_sphere<T: Real>(a: &SpherePoint<T>, b: &SpherePoint<T>) -> SpherePoint<T> {
    let ea = a.embed3();
    let eb = b.embed3();
    let mid = [
        (ea[0] + eb[0]) / T::from_f(2.0),
        (ea[1] + eb[1]) / T::from_f(2.0),
        (ea[2] + eb[2]) / T::from_f(2.0),
    ];
    from_embed3(mid)
}

/// Back from R^3 (not necessarily unit norm) to a sphere point.
pub fn from_embed3<T: Real>(v: [T; 3]) -> SpherePoint<T> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let x = v[0] / n;
    let y = v[1] / n;
    let z = v[2] / n;
    // inverse stereographic: (x, y, z) -> (x + i y) / (1 - z)
    let one = T::one();
    if z > T::from_f(0.999_999) {
        return SpherePoint::infinity();
    }
    SpherePoint::new(
        num_complex::Complex::new(x, y),
        num_complex::Complex::new(one - z, T::zero()),
    )
}

fn norm3<T: Real>(v: [T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit3<T: Real>(v: [T; 3]) -> Option<[T; 3]> {
    let n = norm3(v);
    if n < T::from_f(1e-12) {
        return None;
    }
    Some([v[0] / n, v[1] / n, v[2] / n])
}

/// An interior witness of the region left of a positively oriented closed
/// polyline: a boundary sample nudged along the left normal. The nudge is
/// kept below a fraction of the clearance to the rest of the curve.
fn interior_witness<T: Real>(pts: &[[T; 3]], skip: usize) -> Option<([T; 3], T)> {
    let k = (skip * 5 + 1) % pts.len();
    let a = pts[k];
    let b = pts[(k + 1) % pts.len()];
    // clearance to non-neighboring samples
    let mut clear = T::from_f(4.0);
    for (j, p) in pts.iter().enumerate() {
        let d = (j as i64 - k as i64).rem_euclid(pts.len() as i64);
        if d <= 2 || d >= pts.len() as i64 - 2 {
            continue;
        }
        let diff = [a[0] - p[0], a[1] - p[1], a[2] - p[2]];
        clear = clear.min(norm3(diff));
    }
    let t = unit3([
        b[0] - dot3(b, a) * a[0],
        b[1] - dot3(b, a) * a[1],
        b[2] - dot3(b, a) * a[2],
    ])?;
    // left of the traversal in the complex orientation: t x a
    let left = cross3(t, a);
    let delta = (clear * T::from_f(0.2)).min(T::from_f(0.05));
    if delta < T::from_f(1e-11) {
        return None;
    }
    let w = unit3([
        a[0] + left[0] * delta,
        a[1] + left[1] * delta,
        a[2] + left[2] * delta,
    ])?;
    Some((w, delta))
}

/// Does the minor arc [a, b] cross the minor arc [c, d]? `None` flags a
/// degenerate (near-tangent) configuration.
fn arcs_cross<T: Real>(a: [T; 3], b: [T; 3], c: [T; 3], d: [T; 3]) -> Option<bool> {
    let eps = T::from_f(1e-13);
    let n1 = cross3(a, b);
    let n2 = cross3(c, d);
    if norm3(n1) < eps || norm3(n2) < eps {
        return Some(false); // zero-length segment
    }
    let q = match unit3(cross3(n1, n2)) {
        Some(q) => q,
        None => return None, // coplanar arcs
    };
    for cand in [q, [-q[0], -q[1], -q[2]]] {
        let s1 = dot3(cross3(a, cand), n1);
        let s2 = dot3(cross3(cand, b), n1);
        let s3 = dot3(cross3(c, cand), n2);
        let s4 = dot3(cross3(cand, d), n2);
        let tol = T::from_f(1e-14);
        if s1.abs() < tol || s2.abs() < tol || s3.abs() < tol || s4.abs() < tol {
            // passes essentially through an endpoint
            if s1 > -tol && s2 > -tol && s3 > -tol && s4 > -tol {
                return None;
            }
            continue;
        }
        if s1 > T::zero() && s2 > T::zero() && s3 > T::zero() && s4 > T::zero() {
            return Some(true);
        }
    }
    Some(false)
}

/// Is the query inside the region left of the positively oriented closed
/// polyline? Parity of great-arc crossings from an interior witness.
/// Returns None when the query is within tolerance of the polyline.
pub fn point_in_region<T: Real>(
    boundary: &[SpherePoint<T>],
    query: &SpherePoint<T>,
) -> Option<bool> {
    let tol = T::from_f(ON_SKELETON_TOL);
    for p in boundary {
        if p.chordal(query) <= tol {
            return None;
        }
    }
    let x = query.embed3();
    let pts: Vec<[T; 3]> = boundary.iter().map(|p| p.embed3()).collect();
    'attempt: for attempt in 0..7 {
        let (w, delta) = match interior_witness(&pts, attempt) {
            Some(v) => v,
            None => continue,
        };
        let wx = [x[0] - w[0], x[1] - w[1], x[2] - w[2]];
        if norm3(wx) < delta {
            return Some(true); // query sits at the witness
        }
        // query antipodal to the witness: the arc is ill-defined
        if norm3([x[0] + w[0], x[1] + w[1], x[2] + w[2]]) < T::from_f(1e-6) {
            continue;
        }
        let mut crossings = 0usize;
        for i in 0..pts.len() {
            let c = pts[i];
            let d = pts[(i + 1) % pts.len()];
            match arcs_cross(w, x, c, d) {
                Some(true) => crossings += 1,
                Some(false) => {}
                None => continue 'attempt,
            }
        }
        return Some(crossings % 2 == 0);
    }
    None
}

impl<T: Real> Complex<T> {
    /// Closed boundary polyline of a tile (requires polylines at its level).
    pub fn tile_boundary_polyline(&self, level: u16, idx: u32) -> Result<Vec<SpherePoint<T>>> {
        let mut out = Vec::new();
        for &(e, rev) in &self.tile(level, idx).boundary {
            let poly = self
                .edge(level, e)
                .polyline
                .as_ref()
                .ok_or_else(|| Error::UnlocatablePoint("edge polyline missing".into()))?;
            let iter: Vec<_> = if rev {
                poly.iter().rev().copied().collect()
            } else {
                poly.clone()
            };
            // skip the final point of each dart: it is the next dart's start
            out.extend_from_slice(&iter[..iter.len() - 1]);
        }
        Ok(out)
    }

    /// Is the query inside the closed tile? `None` when on the boundary
    /// within tolerance.
    pub fn point_in_tile(
        &self,
        level: u16,
        idx: u32,
        query: &SpherePoint<T>,
    ) -> Result<Option<bool>> {
        let boundary = self.tile_boundary_polyline(level, idx)?;
        Ok(point_in_region(&boundary, query))
    }

    /// Locate a point in the complex: the containing tile per level, ties
    /// resolved to the lowest tile id. Subdivides lazily along the chain.
    pub fn locate_chain(&mut self, query: &SpherePoint<T>, depth: u16) -> Result<Vec<u32>> {
        let mut chain = Vec::with_capacity(depth as usize + 1);
        // level 0
        let mut cur = {
            let mut found = None;
            for t in 0..self.levels[0].tiles.len() as u32 {
                match self.point_in_tile(0, t, query)? {
                    Some(true) => {
                        found = Some(t);
                        break;
                    }
                    None => {
                        found = Some(t); // on skeleton: lowest id wins
                        break;
                    }
                    Some(false) => {}
                }
            }
            found.ok_or_else(|| Error::UnlocatablePoint("point in no 0-tile".into()))?
        };
        chain.push(cur);
        for lvl in 0..depth {
            self.subdivide_tile(lvl, cur)?;
            let kids = self.tile(lvl, cur).children.clone().unwrap().tiles;
            let mut inside = None;
            let mut on_boundary = None;
            for &k in &kids {
                match self.point_in_tile(lvl + 1, k, query)? {
                    Some(true) => {
                        inside = Some(k);
                        break;
                    }
                    None if on_boundary.is_none() => on_boundary = Some(k),
                    _ => {}
                }
            }
            cur = match (inside, on_boundary) {
                (Some(t), _) => t,
                (None, Some(t)) => t,
                (None, None) => {
                    return Err(Error::UnlocatablePoint(format!(
                        "point lost at level {}",
                        lvl + 1
                    )))
                }
            };
            chain.push(cur);
        }
        Ok(chain)
    }

    /// The visual-metric surrogate Lambda^{-m(x,y)} where m(x,y) is the
    /// largest level (up to max_level) at which the located tiles of x and
    /// y still intersect.
    pub fn visual_distance(
        &mut self,
        x: &SpherePoint<T>,
        y: &SpherePoint<T>,
        max_level: u16,
        lambda: T,
    ) -> Result<T> {
        let cx = self.locate_chain(x, max_level)?;
        let cy = self.locate_chain(y, max_level)?;
        let mut m = 0u16;
        for lvl in 0..=max_level {
            let (tx, ty) = (cx[lvl as usize], cy[lvl as usize]);
            let meet = if tx == ty {
                true
            } else {
                let vx = self.tile_corners(lvl, tx);
                self.tile_corners(lvl, ty).iter().any(|v| vx.contains(v))
            };
            if meet {
                m = lvl;
            } else {
                break;
            }
        }
        Ok(lambda.powi(-(m as i32)))
    }

    /// Max chordal diameter over the tiles of a built level, from vertex
    /// embeddings and (when present) edge polylines.
    pub fn max_tile_diameter(&self, level: u16) -> Result<T> {
        let nt = self.levels[level as usize].tiles.len();
        let mut best = T::zero();
        for t in 0..nt as u32 {
            best = best.max(self.tile_diameter(level, t)?);
        }
        Ok(best)
    }

    pub fn tile_diameter(&self, level: u16, idx: u32) -> Result<T> {
        let mut pts: Vec<SpherePoint<T>> = Vec::new();
        for &(e, _) in &self.tile(level, idx).boundary {
            let info = self.edge(level, e);
            if let Some(poly) = &info.polyline {
                pts.extend(poly.iter().copied());
            } else {
                for v in info.ends {
                    pts.push(self.verts[v as usize].embed.ok_or_else(|| {
                        Error::UnlocatablePoint("vertex without embedding".into())
                    })?);
                }
            }
        }
        let mut best = T::zero();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.max(pts[i].chordal(&pts[j]));
            }
        }
        Ok(best)
    }

    /// Median per-level contraction factor of the max tile diameter, used
    /// as the default expansion factor of the visual surrogate.
    pub fn measured_expansion_factor(&mut self, levels: u16) -> Result<T> {
        self.build_level(levels)?;
        let mut ratios: Vec<f64> = Vec::new();
        let mut prev = self.max_tile_diameter(0)?;
        for lvl in 1..=levels {
            let cur = self.max_tile_diameter(lvl)?;
            if cur > T::zero() {
                ratios.push((prev / cur).to_f());
            }
            prev = cur;
        }
        ratios.sort_by(f64::total_cmp);
        if ratios.is_empty() {
            return Ok(T::from_f(2.0));
        }
        let lambda = ratios[ratios.len() / 2].max(1.05);
        Ok(T::from_f(lambda))
    }
}

/// Compute the embedding of a vertex created during subdivision: the
/// preimage of its image vertex's embedding that lies in the level-1
/// ancestor cell of its container.
pub fn embed_new_vertex<T: Real>(
    cx: &Complex<T>,
    map: &RationalMap<T>,
    image: VertId,
    container: Cell,
) -> Result<Option<SpherePoint<T>>> {
    let target = match cx.verts[image as usize].embed {
        Some(p) => p,
        None => return Ok(None),
    };
    let candidates = map.preimages(&target)?;
    let anchor = cx.cont_at(container, 1);
    // score candidates by membership in the level-1 ancestor
    let mut best: Option<(f64, SpherePoint<T>)> = None;
    for (p, _) in candidates {
        let score = match anchor {
            Cell::Vertex(v) => match cx.verts[v as usize].embed {
                Some(q) => -q.chordal(&p).to_f(),
                None => return Ok(None),
            },
            Cell::Edge(l, e) => {
                let poly = match cx.edge(l, e).polyline.as_ref() {
                    Some(poly) => poly,
                    None => return Err(Error::UnlocatablePoint(
                        "level-1 edge polyline missing during embedding".into(),
                    )),
                };
                -polyline_distance(poly, &p).to_f()
            }
            Cell::Tile(l, t) => match cx.point_in_tile(l, t, &p)? {
                Some(true) => 1.0,
                None => 0.5,
                Some(false) => {
                    let poly = cx.tile_boundary_polyline(l, t)?;
                    -polyline_distance(&poly, &p).to_f()
                }
            },
        };
        match &best {
            Some((s, q)) if *s > score || (*s == score && q.total_cmp(&p).is_le()) => {}
            _ => best = Some((score, p)),
        }
    }
    Ok(best.map(|(_, p)| p))
}

pub fn polyline_distance<T: Real>(poly: &[SpherePoint<T>], p: &SpherePoint<T>) -> T {
    let mut d = T::from_f(4.0);
    for q in poly {
        d = d.min(q.chordal(p));
    }
    d
}
