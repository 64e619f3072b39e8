//! Numeric derivation of the level-1 template of a rational backend.
//!
//! For the invariant extended real line: the 0-edges are arcs of the curve
//! between consecutive postcritical points; their lifts are traced by
//! preimage continuation; faces come from the rotation system of the lifted
//! skeleton; colors come from the orientation of the image boundary word.

use crate::error::{Error, Result};
use crate::map::rational::{curve_angle, RationalMap};
use crate::scalar::Real;
use crate::sphere::SpherePoint;

use super::template::{zero_tile_boundary, Color, Cont0, EdgePath, TEdge, TTile, TVert, Template};

/// Points within this chordal distance of the curve count as on it.
const CURVE_TOL: f64 = 1e-8;
/// Snap radius for lift endpoints onto 1-vertices.
const SNAP_TOL: f64 = 1e-5;
const SAMPLES: usize = 33;

pub fn extract_template<T: Real>(map: &RationalMap<T>) -> Result<Template<T>> {
    let m = map.post.len();
    let d = map.degree;
    let post = map.post.clone();
    let angles: Vec<f64> = post.iter().map(|p| curve_angle(p).to_f()).collect();

    // sampled arcs of the curve between consecutive post points, with
    // samples clustered toward the endpoints
    let mut e0_polylines = Vec::with_capacity(m);
    for j in 0..m {
        let a = angles[j];
        let mut b = angles[(j + 1) % m];
        if b <= a {
            b += 2.0 * std::f64::consts::PI;
        }
        let mut poly = Vec::with_capacity(SAMPLES);
        for s in 0..SAMPLES {
            let t = 0.5 * (1.0 - (std::f64::consts::PI * s as f64 / (SAMPLES - 1) as f64).cos());
            let theta = a + (b - a) * t;
            poly.push(curve_point::<T>(theta));
        }
        poly[0] = post[j];
        *poly.last_mut().unwrap() = post[(j + 1) % m];
        e0_polylines.push(poly);
    }

    // 1-vertices: all preimages of post points; the first m are the post
    // points themselves
    let mut verts: Vec<TVert<T>> = Vec::new();
    let mut coords: Vec<SpherePoint<T>> = Vec::new();
    let snap = T::from_f(SNAP_TOL);
    let mut raw: Vec<(SpherePoint<T>, usize, usize)> = Vec::new(); // (point, deg, label)
    for (j, p) in post.iter().enumerate() {
        for (x, deg) in map.preimages(p)? {
            raw.push((x, deg, j));
        }
    }
    for (j, p) in post.iter().enumerate() {
        let hit = raw
            .iter()
            .find(|(x, _, _)| x.proj_eq(p, snap))
            .ok_or_else(|| {
                Error::InvalidSpec(format!("post point {j} is not a preimage of post f"))
            })?;
        verts.push(TVert {
            label: hit.2,
            local_deg: hit.1,
            container: Cont0::Vertex(j),
            embed: Some(*p),
        });
        coords.push(*p);
    }
    let mut others: Vec<(SpherePoint<T>, usize, usize)> = raw
        .iter()
        .filter(|(x, _, _)| !post.iter().any(|p| p.proj_eq(x, snap)))
        .copied()
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (x, deg, j) in others {
        let container = point_container::<T>(&x, &angles)?;
        verts.push(TVert {
            label: j,
            local_deg: deg,
            container,
            embed: Some(x),
        });
        coords.push(x);
    }

    // lift every 0-edge through the map
    let mut edges: Vec<TEdge<T>> = Vec::new();
    for j in 0..m {
        let samples = &e0_polylines[j];
        let k = samples.len();
        // branches start at the first interior sample
        let mut starts: Vec<SpherePoint<T>> =
            map.preimages(&samples[1])?.into_iter().map(|(p, _)| p).collect();
        if starts.len() != d {
            return Err(Error::RootSolve(format!(
                "interior point of 0-edge {j} has {} distinct preimages, expected {d}",
                starts.len()
            )));
        }
        starts.sort_by(|a, b| a.total_cmp(b));
        for start in starts {
            let mut lift = Vec::with_capacity(k);
            // backward to the 0-vertex end
            let back = continue_branch(map, &start, &[samples[0]])?;
            lift.push(back[0]);
            lift.push(start);
            let fwd = continue_branch(map, &start, &samples[2..])?;
            lift.extend(fwd);
            // snap endpoints to 1-vertices
            let va = snap_vertex(&coords, &lift[0], snap)?;
            let vb = snap_vertex(&coords, lift.last().unwrap(), snap)?;
            lift[0] = coords[va];
            let last = lift.len() - 1;
            lift[last] = coords[vb];
            // orientation check against labels
            if verts[va].label != j || verts[vb].label != (j + 1) % m {
                return Err(Error::RootSolve(format!(
                    "lift of 0-edge {j} ends at fibers {},{}",
                    verts[va].label, verts[vb].label
                )));
            }
            let container = lift_container::<T>(&lift, &angles)?;
            edges.push(TEdge {
                ends: [va, vb],
                image: j,
                rev: false,
                container,
                polyline: Some(lift),
            });
        }
    }
    if edges.len() != m * d {
        return Err(Error::RootSolve("wrong number of edge lifts".into()));
    }

    // rotation system: outgoing darts per vertex sorted by departure angle
    let nv = verts.len();
    let mut rotation: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nv];
    for (ei, e) in edges.iter().enumerate() {
        let poly = e.polyline.as_ref().unwrap();
        for (end, dart_rev) in [(0usize, false), (1usize, true)] {
            let v = e.ends[end];
            let adj = if end == 0 { poly[1] } else { poly[poly.len() - 2] };
            let ang = departure_angle(&coords[v], &adj);
            rotation[v].push((ei, dart_rev));
            let ins = rotation[v].len() - 1;
            // insertion sort by angle for determinism
            let mut i = ins;
            let angle_of = |d: (usize, bool), edges: &Vec<TEdge<T>>| -> f64 {
                let p = edges[d.0].polyline.as_ref().unwrap();
                let a = if d.1 { p[p.len() - 2] } else { p[1] };
                departure_angle(&coords[edges[d.0].ends[d.1 as usize]], &a)
            };
            while i > 0 && angle_of(rotation[v][i - 1], &edges) > ang {
                rotation[v].swap(i - 1, i);
                i -= 1;
            }
        }
    }

    // face tracing: next dart = rotate CW after the reversal, which walks
    // each face positively oriented (face on the left)
    let mut tiles: Vec<TTile> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let dart_head = |d: (usize, bool)| edges[d.0].ends[!d.1 as usize];
    for e0 in 0..edges.len() {
        for dir in [false, true] {
            let start = (e0, dir);
            if seen.contains(&start) {
                continue;
            }
            let mut face = Vec::new();
            let mut d = start;
            loop {
                face.push(d);
                seen.insert(d);
                let v = dart_head(d);
                let rev = (d.0, !d.1);
                let list = &rotation[v];
                let pos = list
                    .iter()
                    .position(|&x| x == rev)
                    .ok_or_else(|| Error::RootSolve("rotation system inconsistent".into()))?;
                d = list[(pos + list.len() - 1) % list.len()];
                if d == start {
                    break;
                }
                if face.len() > m + 1 {
                    return Err(Error::RootSolve(format!(
                        "face tracing produced a walk longer than {m}"
                    )));
                }
            }
            if face.len() != m {
                return Err(Error::RootSolve(format!(
                    "face with {} darts, expected {m}",
                    face.len()
                )));
            }
            // color and offset from the image word
            let word: Vec<(usize, bool)> = face
                .iter()
                .map(|&(e, rev)| (edges[e].image, rev ^ edges[e].rev))
                .collect();
            let mut found = None;
            for color in [Color::White, Color::Black] {
                let model = zero_tile_boundary(m, color);
                if let Some(o) =
                    (0..m).find(|&o| (0..m).all(|k| word[k] == model[(k + o) % m]))
                {
                    found = Some((color, o));
                    break;
                }
            }
            let (color, offset) = found.ok_or_else(|| {
                Error::RootSolve("face image word matches neither 0-tile".into())
            })?;
            let container = face
                .iter()
                .find_map(|&(e, _)| match edges[e].container {
                    Cont0::Tile(s) => Some(s),
                    _ => None,
                })
                .ok_or_else(|| {
                    Error::RootSolve("face with boundary entirely on the curve".into())
                })?;
            tiles.push(TTile {
                color,
                boundary: face,
                offset,
                container,
            });
        }
    }
    if tiles.len() != 2 * d {
        return Err(Error::RootSolve(format!(
            "face tracing produced {} tiles, expected {}",
            tiles.len(),
            2 * d
        )));
    }

    // curve coverage paths
    let e0_children = assemble_curve_paths(m, &edges)?;
    let t0_tiles = [
        (0..tiles.len()).filter(|&t| tiles[t].container == 0).collect(),
        (0..tiles.len()).filter(|&t| tiles[t].container == 1).collect(),
    ];

    let template = Template {
        m,
        d,
        post_dynamics: map.post_dynamics.clone(),
        verts,
        edges,
        tiles,
        e0_children,
        t0_tiles,
        post_embed: Some(post),
        e0_polylines: Some(e0_polylines),
    };
    template.validate()?;
    Ok(template)
}

/// Order the on-curve lifts into one subdivision path per 0-edge.
pub fn assemble_curve_paths<T: Real>(m: usize, edges: &[TEdge<T>]) -> Result<Vec<EdgePath>> {
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut pool: Vec<usize> = (0..edges.len())
            .filter(|&e| edges[e].container == Cont0::Edge(j))
            .collect();
        let mut verts = vec![j];
        let mut path = Vec::new();
        let mut current = j;
        while !pool.is_empty() {
            let pos = pool
                .iter()
                .position(|&e| edges[e].ends.contains(&current))
                .ok_or_else(|| {
                    Error::InvalidSpec(format!("0-edge {j}: curve subdivision disconnected"))
                })?;
            let e = pool.remove(pos);
            let [a, b] = edges[e].ends;
            current = if a == current { b } else { a };
            path.push(e);
            verts.push(current);
        }
        if current != (j + 1) % m || path.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "0-edge {j}: lifts on the curve do not join its endpoints"
            )));
        }
        out.push(EdgePath { verts, edges: path });
    }
    Ok(out)
}

/// Continue one preimage branch over a run of samples, nearest-root with a
/// jump guard.
fn continue_branch<T: Real>(
    map: &RationalMap<T>,
    start: &SpherePoint<T>,
    targets: &[SpherePoint<T>],
) -> Result<Vec<SpherePoint<T>>> {
    let mut out = Vec::with_capacity(targets.len());
    let mut cur = *start;
    let jump = T::from_f(0.5);
    for y in targets {
        let mut next = super::geometry::nearest_preimage(map, &cur, y)?;
        if cur.chordal(&next) > jump {
            let f_cur = map.evaluate(&cur);
            let mid = super::geometry::midpoint_on_sphere(&f_cur, y);
            let step = super::geometry::nearest_preimage(map, &cur, &mid)?;
            next = super::geometry::nearest_preimage(map, &step, y)?;
        }
        out.push(next);
        cur = next;
    }
    Ok(out)
}

fn snap_vertex<T: Real>(coords: &[SpherePoint<T>], p: &SpherePoint<T>, tol: T) -> Result<usize> {
    coords
        .iter()
        .position(|q| q.proj_eq(p, tol))
        .ok_or_else(|| Error::RootSolve("lift endpoint does not land on a 1-vertex".into()))
}

fn curve_point<T: Real>(theta: f64) -> SpherePoint<T> {
    let half = theta / 2.0;
    SpherePoint::new(
        num_complex::Complex::new(T::from_f(half.sin()), T::zero()),
        num_complex::Complex::new(T::from_f(half.cos()), T::zero()),
    )
}

/// Which 0-cell of the real-line complex contains a point.
fn point_container<T: Real>(p: &SpherePoint<T>, angles: &[f64]) -> Result<Cont0> {
    let y = p.embed3()[1].to_f();
    if y.abs() > CURVE_TOL {
        return Ok(Cont0::Tile(if y > 0.0 { 0 } else { 1 }));
    }
    Ok(Cont0::Edge(arc_index(curve_angle(p).to_f(), angles)))
}

fn lift_container<T: Real>(lift: &[SpherePoint<T>], angles: &[f64]) -> Result<Cont0> {
    let mid = lift[lift.len() / 2];
    let y = mid.embed3()[1].to_f();
    if y.abs() > CURVE_TOL {
        return Ok(Cont0::Tile(if y > 0.0 { 0 } else { 1 }));
    }
    // on-curve lift: all samples must be on the curve
    for p in lift {
        if p.embed3()[1].to_f().abs() > 1e-6 {
            return Err(Error::RootSolve(
                "edge lift crosses the invariant curve".into(),
            ));
        }
    }
    Ok(Cont0::Edge(arc_index(curve_angle(&mid).to_f(), angles)))
}

/// Index of the arc (between consecutive post angles) containing an angle.
fn arc_index(theta: f64, angles: &[f64]) -> usize {
    let m = angles.len();
    let tau = 2.0 * std::f64::consts::PI;
    let t = theta;
    for j in 0..m {
        let a = angles[j];
        let mut b = angles[(j + 1) % m];
        let mut tt = t;
        if b <= a {
            b += tau;
        }
        if tt < a {
            tt += tau;
        }
        if tt >= a && tt <= b {
            return j;
        }
    }
    m - 1
}

/// Angle of departure of a neighboring point, measured in a conformal chart
/// centered at the vertex.
fn departure_angle<T: Real>(v: &SpherePoint<T>, adj: &SpherePoint<T>) -> f64 {
    // chart: affine z when |v| <= 1, else 1/z (both orientation preserving)
    let zv = v.z / v.w.norm().max(T::from_f(1e-300));
    let use_affine = !v.is_infinity() && zv.norm() <= T::one() + T::from_f(1e-9);
    let (cv, ca) = if use_affine {
        (v.to_complex().unwrap(), match adj.to_complex() {
            Some(c) => c,
            None => {
                // neighbor at infinity: direction of 1/adj from 1/v is 0-ish;
                // fall back to the inverted chart
                let iv = v.w / v.z;
                let ia = adj.w / adj.z;
                let dd = ia - iv;
                return dd.im.to_f().atan2(dd.re.to_f());
            }
        })
    } else {
        (v.w / v.z, adj.w / adj.z)
    };
    let d = ca - cv;
    d.im.to_f().atan2(d.re.to_f())
}
