//! The level-1 subdivision template.
//!
//! Both backends reduce to the same structure: the cell decomposition that
//! one pullback of the invariant curve induces on the two level-0 tiles,
//! together with the cellular label map onto the level-0 complex. The
//! declarative backend supplies it in a file; the rational backend derives
//! it numerically at load time. Everything deeper is exact combinatorics.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sphere::SpherePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn index(self) -> usize {
        match self {
            Color::White => 0,
            Color::Black => 1,
        }
    }

    pub fn from_index(i: usize) -> Color {
        if i == 0 {
            Color::White
        } else {
            Color::Black
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::White => "white",
            Color::Black => "black",
        }
    }
}

/// Containment of a level-1 cell in the level-0 complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cont0 {
    Vertex(usize),
    Edge(usize),
    Tile(usize),
}

#[derive(Debug, Clone)]
pub struct TVert<T> {
    /// Image 0-vertex under f.
    pub label: usize,
    pub local_deg: usize,
    pub container: Cont0,
    pub embed: Option<SpherePoint<T>>,
}

#[derive(Debug, Clone)]
pub struct TEdge<T> {
    pub ends: [usize; 2],
    /// Image 0-edge; `rev` means traversing ends[0] -> ends[1] runs the
    /// 0-edge backwards.
    pub image: usize,
    pub rev: bool,
    pub container: Cont0,
    pub polyline: Option<Vec<SpherePoint<T>>>,
}

#[derive(Debug, Clone)]
pub struct TTile {
    pub color: Color,
    /// Positively oriented boundary word (edge id, reversed).
    pub boundary: Vec<(usize, bool)>,
    /// Boundary dart k maps onto dart (k + offset) mod m of the same-color
    /// 0-tile.
    pub offset: usize,
    /// Which 0-tile contains this tile.
    pub container: usize,
}

/// Ordered subdivision of an edge: alternating vertices and edges from one
/// endpoint to the other.
#[derive(Debug, Clone)]
pub struct EdgePath {
    pub verts: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Template<T> {
    pub m: usize,
    pub d: usize,
    /// f restricted to the 0-vertices.
    pub post_dynamics: Vec<usize>,
    pub verts: Vec<TVert<T>>,
    pub edges: Vec<TEdge<T>>,
    pub tiles: Vec<TTile>,
    /// Per 0-edge, its subdivision path (template cell ids), oriented from
    /// 0-vertex j to 0-vertex j+1.
    pub e0_children: Vec<EdgePath>,
    /// Template tiles interior to each 0-tile.
    pub t0_tiles: [Vec<usize>; 2],
    /// Coordinates of the 0-vertices (rational backend only).
    pub post_embed: Option<Vec<SpherePoint<T>>>,
    /// Sampled arcs of the invariant curve per 0-edge (rational only).
    pub e0_polylines: Option<Vec<Vec<SpherePoint<T>>>>,
}

/// Boundary word of a 0-tile: the white tile traverses the curve forward
/// (0-edge j runs from 0-vertex j to j+1), the black tile backward.
pub fn zero_tile_boundary(m: usize, color: Color) -> Vec<(usize, bool)> {
    match color {
        Color::White => (0..m).map(|j| (j, false)).collect(),
        Color::Black => (0..m).rev().map(|j| (j, true)).collect(),
    }
}

/// Start vertex of a dart of the 0-complex.
pub fn zero_dart_start(m: usize, dart: (usize, bool)) -> usize {
    let (j, rev) = dart;
    if rev {
        (j + 1) % m
    } else {
        j
    }
}

impl<T: Real> Template<T> {
    /// Full structural validation: counts, cellularity of the label map,
    /// checkerboard coloring, curve coverage, local degrees.
    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        let d = self.d;
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        if m < 3 {
            return fail("card(post f) must be >= 3".into());
        }
        if d < 2 {
            return fail("degree must be >= 2".into());
        }
        if self.post_dynamics.len() != m || self.post_dynamics.iter().any(|&v| v >= m) {
            return fail("post dynamics must map 0-vertices to 0-vertices".into());
        }
        if self.tiles.len() != 2 * d {
            return fail(format!(
                "template must have 2 deg = {} tiles, found {}",
                2 * d,
                self.tiles.len()
            ));
        }
        if self.edges.len() != m * d {
            return fail(format!(
                "template must have m*deg = {} edges, found {}",
                m * d,
                self.edges.len()
            ));
        }
        if self.verts.len() > m * d {
            return fail("more vertices than m*deg".into());
        }
        // the first m vertices are the 0-vertices with the post dynamics
        for j in 0..m {
            if self.verts[j].label != self.post_dynamics[j] {
                return fail(format!("vertex {j} must carry the post dynamics label"));
            }
            if self.verts[j].container != Cont0::Vertex(j) {
                return fail(format!("vertex {j} must be contained in 0-vertex {j}"));
            }
        }
        // edge labels are consistent with endpoint labels
        for (i, e) in self.edges.iter().enumerate() {
            if e.ends[0] >= self.verts.len() || e.ends[1] >= self.verts.len() {
                return fail(format!("edge {i} has out-of-range endpoints"));
            }
            let la = self.verts[e.ends[0]].label;
            let lb = self.verts[e.ends[1]].label;
            let (start, end) = if e.rev {
                ((e.image + 1) % m, e.image)
            } else {
                (e.image, (e.image + 1) % m)
            };
            if la != start || lb != end {
                return fail(format!(
                    "edge {i}: endpoint labels ({la},{lb}) do not match 0-edge {} orientation",
                    e.image
                ));
            }
        }
        // lift counts: every 0-edge has exactly d lifts
        for j in 0..m {
            let lifts = self.edges.iter().filter(|e| e.image == j).count();
            if lifts != d {
                return fail(format!("0-edge {j} has {lifts} lifts, expected {d}"));
            }
        }
        // tiles: m-gons, edge usage once per direction, image words
        let mut usage = vec![[0usize; 2]; self.edges.len()];
        for (ti, t) in self.tiles.iter().enumerate() {
            if t.boundary.len() != m {
                return fail(format!("tile {ti} is not an {m}-gon"));
            }
            for k in 0..m {
                let (e, rev) = t.boundary[k];
                if e >= self.edges.len() {
                    return fail(format!("tile {ti} references unknown edge {e}"));
                }
                usage[e][rev as usize] += 1;
                // consecutive darts share a vertex
                let head = self.dart_head(t.boundary[k]);
                let next_tail = self.dart_tail(t.boundary[(k + 1) % m]);
                if head != next_tail {
                    return fail(format!("tile {ti} boundary is not a closed walk at dart {k}"));
                }
            }
            // image word must be a rotation of the same-color model word
            let model = zero_tile_boundary(m, t.color);
            let word: Vec<(usize, bool)> = t
                .boundary
                .iter()
                .map(|&(e, rev)| (self.edges[e].image, rev ^ self.edges[e].rev))
                .collect();
            let offset = (0..m).find(|&o| (0..m).all(|k| word[k] == model[(k + o) % m]));
            match offset {
                Some(o) => {
                    if o != t.offset {
                        return fail(format!(
                            "tile {ti}: image word offset {o} does not match declared {}",
                            t.offset
                        ));
                    }
                }
                None => {
                    return fail(format!(
                        "tile {ti}: image boundary word is not an oriented copy of the {} 0-tile",
                        t.color.name()
                    ))
                }
            }
        }
        for (e, u) in usage.iter().enumerate() {
            if u[0] != 1 || u[1] != 1 {
                return fail(format!(
                    "edge {e} must be used exactly once per direction, found {u:?}"
                ));
            }
        }
        // local degrees from tile incidence, fiber sums
        let mut corner_count = vec![0usize; self.verts.len()];
        for t in &self.tiles {
            for &dart in &t.boundary {
                corner_count[self.dart_tail(dart)] += 1;
            }
        }
        for (v, info) in self.verts.iter().enumerate() {
            if corner_count[v] == 0 || corner_count[v] % 2 != 0 {
                return fail(format!("vertex {v} has odd or zero tile incidence"));
            }
            if corner_count[v] / 2 != info.local_deg {
                return fail(format!(
                    "vertex {v}: local degree {} does not match tile count {}",
                    info.local_deg, corner_count[v]
                ));
            }
        }
        for j in 0..m {
            let fiber: usize = self
                .verts
                .iter()
                .filter(|v| v.label == j)
                .map(|v| v.local_deg)
                .sum();
            if fiber != d {
                return fail(format!(
                    "fiber of 0-vertex {j} has total degree {fiber}, expected {d}"
                ));
            }
        }
        // Euler characteristic
        let euler =
            self.verts.len() as i64 - self.edges.len() as i64 + self.tiles.len() as i64;
        if euler != 2 {
            return fail(format!("Euler characteristic {euler} != 2"));
        }
        // curve coverage: e0_children are paths from j to j+1 with on-curve
        // containers
        if self.e0_children.len() != m {
            return fail("curve subdivision must cover every 0-edge".into());
        }
        for (j, path) in self.e0_children.iter().enumerate() {
            if path.verts.len() != path.edges.len() + 1 || path.edges.is_empty() {
                return fail(format!("0-edge {j} has a malformed subdivision path"));
            }
            if path.verts[0] != j || *path.verts.last().unwrap() != (j + 1) % m {
                return fail(format!("0-edge {j} subdivision does not join its endpoints"));
            }
            for (k, &e) in path.edges.iter().enumerate() {
                let ends = self.edges[e].ends;
                let (a, b) = (path.verts[k], path.verts[k + 1]);
                if !(ends == [a, b] || ends == [b, a]) {
                    return fail(format!("0-edge {j} subdivision path is not connected"));
                }
                if self.edges[e].container != Cont0::Edge(j) {
                    return fail(format!("edge {e} on 0-edge {j} has wrong container"));
                }
            }
            for &v in &path.verts[1..path.verts.len() - 1] {
                if self.verts[v].container != Cont0::Edge(j) {
                    return fail(format!("vertex {v} on 0-edge {j} has wrong container"));
                }
            }
        }
        // every on-curve edge appears in exactly one path
        let on_curve: usize = self
            .edges
            .iter()
            .filter(|e| matches!(e.container, Cont0::Edge(_)))
            .count();
        let in_paths: usize = self.e0_children.iter().map(|p| p.edges.len()).sum();
        if on_curve != in_paths {
            return fail("on-curve edges do not partition the curve".into());
        }
        // tile containers partition
        for side in 0..2 {
            for &t in &self.t0_tiles[side] {
                if self.tiles[t].container != side {
                    return fail(format!("tile {t} container inconsistent"));
                }
            }
        }
        if self.t0_tiles[0].len() + self.t0_tiles[1].len() != self.tiles.len() {
            return fail("0-tile children do not partition the template tiles".into());
        }
        Ok(())
    }

    pub fn dart_tail(&self, dart: (usize, bool)) -> usize {
        let (e, rev) = dart;
        self.edges[e].ends[rev as usize]
    }

    pub fn dart_head(&self, dart: (usize, bool)) -> usize {
        let (e, rev) = dart;
        self.edges[e].ends[!rev as usize]
    }

    /// Interior cells of a 0-tile (everything with that tile container).
    pub fn interior_verts(&self, side: usize) -> Vec<usize> {
        (0..self.verts.len())
            .filter(|&v| self.verts[v].container == Cont0::Tile(side))
            .collect()
    }

    pub fn interior_edges(&self, side: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].container == Cont0::Tile(side))
            .collect()
    }
}
