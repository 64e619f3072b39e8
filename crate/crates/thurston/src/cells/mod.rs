//! Cell decompositions induced by pulling back the invariant curve.
//!
//! A [`Complex`] materializes the decompositions level by level from the
//! level-1 template: each cell carries its image under the map (one level
//! down) and its container (the cell one level up whose interior holds it).
//! Cells subdivide lazily, so deep levels can be refined locally around a
//! vertex chain without paying for the full exponential complex.

pub mod export;
pub mod extract;
pub mod geometry;
pub mod template;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

use template::{zero_tile_boundary, Color, Template};

pub type VertId = u32;

/// Reference to a cell in the complex. Vertices are global (an n-vertex is
/// an m-vertex for every m >= its birth level); edges and tiles live at one
/// level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Vertex(VertId),
    Edge(u16, u32),
    Tile(u16, u32),
}

impl Cell {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Cell::Vertex(_) => "vertex",
            Cell::Edge(..) => "edge",
            Cell::Tile(..) => "tile",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VertInfo<T> {
    pub birth: u16,
    /// Image vertex under f (for birth-0 vertices: the post dynamics).
    pub image: VertId,
    /// Cell at level birth-1 whose interior contains this vertex
    /// (undefined sentinel for birth-0 vertices).
    pub container: Cell,
    /// Local degree of f at the vertex.
    pub local_deg: u32,
    pub embed: Option<SpherePoint<T>>,
}

#[derive(Debug, Clone)]
pub struct EdgePathIds {
    /// Vertices along the subdivision, from ends[0] to ends[1].
    pub verts: Vec<VertId>,
    /// Child edges, oriented along the path (ends = consecutive verts).
    pub edges: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct EdgeInfo<T> {
    pub ends: [VertId; 2],
    /// Image edge at the previous level and whether this edge runs it
    /// backwards. Sentinel (u32::MAX, false) at level 0.
    pub image: (u32, bool),
    pub container: Cell,
    /// Tiles left/right of the edge (positively oriented boundary use).
    pub sides: [Option<u32>; 2],
    pub children: Option<EdgePathIds>,
    pub polyline: Option<Vec<SpherePoint<T>>>,
}

#[derive(Debug, Clone)]
pub struct TileKids {
    pub tiles: Vec<u32>,
    pub inner_verts: Vec<VertId>,
    pub inner_edges: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct TileInfo {
    /// Positively oriented boundary word.
    pub boundary: Vec<(u32, bool)>,
    pub color: Color,
    /// Image tile at the previous level and the dart offset of the
    /// correspondence. Sentinel (u32::MAX, 0) at level 0.
    pub image: (u32, usize),
    /// Containing tile at the previous level (sentinel at level 0).
    pub container: u32,
    pub children: Option<TileKids>,
}

#[derive(Debug, Clone, Default)]
pub struct Level<T> {
    pub edges: Vec<EdgeInfo<T>>,
    pub tiles: Vec<TileInfo>,
}

/// The n-flower of a vertex: tiles (and spoke edges) around it in cyclic
/// order.
#[derive(Debug, Clone)]
pub struct Flower {
    pub center: VertId,
    pub level: u16,
    pub tiles: Vec<u32>,
    pub edges: Vec<u32>,
}

pub struct Complex<T: Real> {
    pub template: Arc<Template<T>>,
    pub verts: Vec<VertInfo<T>>,
    pub levels: Vec<Level<T>>,
    /// Map behind the complex, when it is a rational one (drives vertex
    /// embeddings and edge polylines).
    pub map: Option<Arc<RationalMap<T>>>,
    /// Lift edge polylines up to this level (geometry is only needed for
    /// point location and diameters at shallow levels).
    pub geometry_depth: u16,
    pub cell_budget: u64,
    cells_created: u64,
    tiles_at: HashMap<(VertId, u16), Vec<u32>>,
    tmpl_vert_map: Vec<Option<VertId>>,
    tmpl_edge_map: Vec<Option<(u32, bool)>>,
}

impl<T: Real> Complex<T> {
    pub fn new(template: Arc<Template<T>>, map: Option<Arc<RationalMap<T>>>) -> Self {
        let m = template.m;
        let mut verts = Vec::with_capacity(m);
        for j in 0..m {
            verts.push(VertInfo {
                birth: 0,
                image: template.post_dynamics[j] as VertId,
                container: Cell::Vertex(j as VertId),
                local_deg: template.verts[j].local_deg as u32,
                embed: template.post_embed.as_ref().map(|pe| pe[j]),
            });
        }
        let mut level0 = Level::default();
        for j in 0..m {
            level0.edges.push(EdgeInfo {
                ends: [j as VertId, ((j + 1) % m) as VertId],
                image: (u32::MAX, false),
                container: Cell::Edge(0, j as u32),
                sides: [Some(0), Some(1)],
                children: None,
                polyline: template.e0_polylines.as_ref().map(|p| p[j].clone()),
            });
        }
        for color in [Color::White, Color::Black] {
            level0.tiles.push(TileInfo {
                boundary: zero_tile_boundary(m, color)
                    .into_iter()
                    .map(|(e, r)| (e as u32, r))
                    .collect(),
                color,
                image: (u32::MAX, 0),
                container: u32::MAX,
                children: None,
            });
        }
        let mut tiles_at = HashMap::new();
        for j in 0..m {
            tiles_at.insert((j as VertId, 0), vec![0u32, 1u32]);
        }
        let nt_v = template.verts.len();
        let nt_e = template.edges.len();
        let mut cx = Complex {
            template,
            verts,
            levels: vec![level0],
            map,
            geometry_depth: 0,
            cell_budget: default_cell_budget(),
            cells_created: (m * 2 + m) as u64,
            tiles_at,
            tmpl_vert_map: vec![None; nt_v],
            tmpl_edge_map: vec![None; nt_e],
        };
        for j in 0..cx.template.m {
            cx.tmpl_vert_map[j] = Some(j as VertId);
        }
        cx
    }

    pub fn m(&self) -> usize {
        self.template.m
    }

    pub fn degree(&self) -> usize {
        self.template.d
    }

    pub fn max_built_level(&self) -> u16 {
        (self.levels.len() - 1) as u16
    }

    fn level_mut(&mut self, level: u16) -> &mut Level<T> {
        while self.levels.len() <= level as usize {
            self.levels.push(Level::default());
        }
        &mut self.levels[level as usize]
    }

    fn charge(&mut self, n: u64) -> Result<()> {
        self.cells_created += n;
        if self.cells_created > self.cell_budget {
            Err(Error::CellBudget {
                needed: self.cells_created,
                budget: self.cell_budget,
            })
        } else {
            Ok(())
        }
    }

    pub fn edge(&self, level: u16, idx: u32) -> &EdgeInfo<T> {
        &self.levels[level as usize].edges[idx as usize]
    }

    pub fn tile(&self, level: u16, idx: u32) -> &TileInfo {
        &self.levels[level as usize].tiles[idx as usize]
    }

    pub fn dart_tail(&self, level: u16, dart: (u32, bool)) -> VertId {
        let e = self.edge(level, dart.0);
        e.ends[dart.1 as usize]
    }

    pub fn dart_head(&self, level: u16, dart: (u32, bool)) -> VertId {
        let e = self.edge(level, dart.0);
        e.ends[!dart.1 as usize]
    }

    /// Corner vertices of a tile in boundary order.
    pub fn tile_corners(&self, level: u16, idx: u32) -> Vec<VertId> {
        self.tile(level, idx)
            .boundary
            .iter()
            .map(|&d| self.dart_tail(level, d))
            .collect()
    }

    /// deg_{f^n} at a vertex: product of local degrees along the image
    /// chain of length n.
    pub fn vertex_iterated_degree(&self, v: VertId, n: u16) -> u64 {
        let mut deg = 1u64;
        let mut cur = v;
        for _ in 0..n {
            deg *= self.verts[cur as usize].local_deg as u64;
            cur = self.verts[cur as usize].image;
        }
        deg
    }

    pub fn vertex_image_chain(&self, v: VertId, n: u16) -> VertId {
        let mut cur = v;
        for _ in 0..n {
            cur = self.verts[cur as usize].image;
        }
        cur
    }

    /// Container of a cell at a coarser level (interior containment chain).
    pub fn cont_at(&self, mut cell: Cell, target: u16) -> Cell {
        loop {
            match cell {
                Cell::Vertex(v) => {
                    let info = &self.verts[v as usize];
                    if info.birth <= target {
                        return Cell::Vertex(v);
                    }
                    cell = info.container;
                }
                Cell::Edge(l, i) => {
                    if l == target {
                        return cell;
                    }
                    cell = self.edge(l, i).container;
                }
                Cell::Tile(l, i) => {
                    if l == target {
                        return cell;
                    }
                    cell = Cell::Tile(l - 1, self.tile(l, i).container);
                }
            }
        }
    }

    /// Does the closed cell contain the vertex v?
    pub fn cell_has_vertex(&self, cell: Cell, v: VertId) -> bool {
        match cell {
            Cell::Vertex(u) => u == v,
            Cell::Edge(l, i) => self.edge(l, i).ends.contains(&v),
            Cell::Tile(l, i) => self.tile_corners(l, i).contains(&v),
        }
    }

    /// Is the point-cell `x` (typically a deep vertex) inside the open
    /// flower W^level(center)? Uses the interior-container chain.
    pub fn in_open_flower(&self, x: Cell, level: u16, center: VertId) -> bool {
        self.cell_has_vertex(self.cont_at(x, level), center)
    }

    // ------------------------------------------------------------------
    // subdivision
    // ------------------------------------------------------------------

    fn new_vertex(
        &mut self,
        birth: u16,
        image: VertId,
        container: Cell,
        local_deg: u32,
    ) -> Result<VertId> {
        self.charge(1)?;
        let id = self.verts.len() as VertId;
        let embed = match &self.map {
            Some(map) => {
                let map = map.clone();
                geometry::embed_new_vertex(self, &map, image, container)?
            }
            None => None,
        };
        self.verts.push(VertInfo {
            birth,
            image,
            container,
            local_deg,
            embed,
        });
        Ok(id)
    }

    /// Subdivide an edge (no-op if already subdivided).
    pub fn subdivide_edge(&mut self, level: u16, idx: u32) -> Result<()> {
        if self.edge(level, idx).children.is_some() {
            return Ok(());
        }
        let path = if level == 0 {
            self.subdivide_zero_edge(idx)?
        } else {
            let (img, img_rev) = self.edge(level, idx).image;
            self.subdivide_edge(level - 1, img)?;
            let model = self.edge(level - 1, img).children.clone().unwrap();
            // pull the model path back through this edge, respecting the
            // orientation of the correspondence
            let (mverts, medges) = if img_rev {
                (
                    model.verts.iter().rev().copied().collect::<Vec<_>>(),
                    model.edges.iter().rev().copied().collect::<Vec<_>>(),
                )
            } else {
                (model.verts.clone(), model.edges.clone())
            };
            let ends = self.edge(level, idx).ends;
            let mut verts = Vec::with_capacity(mverts.len());
            verts.push(ends[0]);
            for &mv in &mverts[1..mverts.len() - 1] {
                let v = self.new_vertex(level + 1, mv, Cell::Edge(level, idx), 1)?;
                verts.push(v);
            }
            verts.push(ends[1]);
            // sanity: endpoints map onto the model path endpoints
            debug_assert_eq!(self.verts[ends[0] as usize].image, mverts[0]);
            debug_assert_eq!(self.verts[ends[1] as usize].image, *mverts.last().unwrap());
            let mut edges = Vec::with_capacity(medges.len());
            for (k, &me) in medges.iter().enumerate() {
                // model edge orientation along the directed model path
                let me_rev_in_path = self.edge(level, me).ends[0] != mverts[k];
                self.charge(1)?;
                let eid = self.level_mut(level + 1).edges.len() as u32;
                self.level_mut(level + 1).edges.push(EdgeInfo {
                    ends: [verts[k], verts[k + 1]],
                    image: (me, me_rev_in_path),
                    container: Cell::Edge(level, idx),
                    sides: [None, None],
                    children: None,
                    polyline: None,
                });
                edges.push(eid);
            }
            EdgePathIds { verts, edges }
        };
        if self.map.is_some() && (level + 1) <= self.geometry_depth {
            let map = self.map.clone().unwrap();
            for &e in &path.edges {
                geometry::lift_edge_polyline(self, &map, level + 1, e)?;
            }
        }
        self.levels[level as usize].edges[idx as usize].children = Some(path);
        Ok(())
    }

    fn subdivide_zero_edge(&mut self, idx: u32) -> Result<EdgePathIds> {
        let template = self.template.clone();
        let tpath = &template.e0_children[idx as usize];
        let mut verts = Vec::with_capacity(tpath.verts.len());
        for (k, &tv) in tpath.verts.iter().enumerate() {
            if k == 0 || k == tpath.verts.len() - 1 {
                verts.push(tv as VertId); // 0-vertices are global ids 0..m
                continue;
            }
            let id = match self.tmpl_vert_map[tv] {
                Some(id) => id,
                None => {
                    let info = &template.verts[tv];
                    self.charge(1)?;
                    let id = self.verts.len() as VertId;
                    self.verts.push(VertInfo {
                        birth: 1,
                        image: info.label as VertId,
                        container: Cell::Edge(0, idx),
                        local_deg: info.local_deg as u32,
                        embed: info.embed,
                    });
                    self.tmpl_vert_map[tv] = Some(id);
                    id
                }
            };
            verts.push(id);
        }
        let mut edges = Vec::with_capacity(tpath.edges.len());
        for (k, &te) in tpath.edges.iter().enumerate() {
            let tinfo = &template.edges[te];
            // orient along the path
            let aligned = self.tmpl_vert_global(tinfo.ends[0]) == Some(verts[k]);
            let rev = if aligned { tinfo.rev } else { !tinfo.rev };
            self.charge(1)?;
            let eid = self.level_mut(1).edges.len() as u32;
            self.level_mut(1).edges.push(EdgeInfo {
                ends: [verts[k], verts[k + 1]],
                image: (tinfo.image as u32, rev),
                container: Cell::Edge(0, idx),
                sides: [None, None],
                children: None,
                polyline: tinfo.polyline.as_ref().map(|p| {
                    if aligned {
                        p.clone()
                    } else {
                        p.iter().rev().copied().collect()
                    }
                }),
            });
            self.tmpl_edge_map[te] = Some((eid, !aligned));
            edges.push(eid);
        }
        Ok(EdgePathIds { verts, edges })
    }

    fn tmpl_vert_global(&self, tv: usize) -> Option<VertId> {
        self.tmpl_vert_map[tv]
    }

    /// Subdivide a tile (no-op if already subdivided).
    pub fn subdivide_tile(&mut self, level: u16, idx: u32) -> Result<()> {
        if self.tile(level, idx).children.is_some() {
            return Ok(());
        }
        let boundary = self.tile(level, idx).boundary.clone();
        for &(e, _) in &boundary {
            self.subdivide_edge(level, e)?;
        }
        let kids = if level == 0 {
            self.subdivide_zero_tile(idx)?
        } else {
            self.subdivide_deep_tile(level, idx)?
        };
        self.levels[level as usize].tiles[idx as usize].children = Some(kids);
        Ok(())
    }

    fn register_tile(&mut self, level: u16, info: TileInfo) -> Result<u32> {
        self.charge(1)?;
        let idx = self.level_mut(level).tiles.len() as u32;
        let corners: Vec<VertId> = info
            .boundary
            .iter()
            .map(|&(e, r)| self.levels[level as usize].edges[e as usize].ends[r as usize])
            .collect();
        for &(e, r) in &info.boundary {
            self.levels[level as usize].edges[e as usize].sides[r as usize] = Some(idx);
        }
        self.level_mut(level).tiles.push(info);
        for c in corners {
            self.tiles_at.entry((c, level)).or_default().push(idx);
        }
        Ok(idx)
    }

    fn subdivide_zero_tile(&mut self, side: u32) -> Result<TileKids> {
        let template = self.template.clone();
        let mut inner_verts = Vec::new();
        for tv in template.interior_verts(side as usize) {
            let info = &template.verts[tv];
            self.charge(1)?;
            let id = self.verts.len() as VertId;
            self.verts.push(VertInfo {
                birth: 1,
                image: info.label as VertId,
                container: Cell::Tile(0, side),
                local_deg: info.local_deg as u32,
                embed: info.embed,
            });
            self.tmpl_vert_map[tv] = Some(id);
            inner_verts.push(id);
        }
        let mut inner_edges = Vec::new();
        for te in template.interior_edges(side as usize) {
            let tinfo = &template.edges[te];
            let a = self.tmpl_vert_global(tinfo.ends[0]).expect("vertex materialized");
            let b = self.tmpl_vert_global(tinfo.ends[1]).expect("vertex materialized");
            self.charge(1)?;
            let eid = self.level_mut(1).edges.len() as u32;
            self.level_mut(1).edges.push(EdgeInfo {
                ends: [a, b],
                image: (tinfo.image as u32, tinfo.rev),
                container: Cell::Tile(0, side),
                sides: [None, None],
                children: None,
                polyline: tinfo.polyline.clone(),
            });
            self.tmpl_edge_map[te] = Some((eid, false));
            inner_edges.push(eid);
        }
        let mut tiles = Vec::new();
        for &tt in &template.t0_tiles[side as usize] {
            let tinfo = &template.tiles[tt];
            let boundary: Vec<(u32, bool)> = tinfo
                .boundary
                .iter()
                .map(|&(te, rev)| {
                    let (eid, flip) = self.tmpl_edge_map[te].expect("edge materialized");
                    (eid, rev ^ flip)
                })
                .collect();
            let id = self.register_tile(
                1,
                TileInfo {
                    boundary,
                    color: tinfo.color,
                    image: (tinfo.color.index() as u32, tinfo.offset),
                    container: side,
                    children: None,
                },
            )?;
            tiles.push(id);
        }
        if self.map.is_some() && 1 <= self.geometry_depth {
            let map = self.map.clone().unwrap();
            for &e in &inner_edges {
                geometry::lift_edge_polyline(self, &map, 1, e)?;
            }
        }
        Ok(TileKids {
            tiles,
            inner_verts,
            inner_edges,
        })
    }

    fn subdivide_deep_tile(&mut self, level: u16, idx: u32) -> Result<TileKids> {
        let (model_idx, offset) = self.tile(level, idx).image;
        self.subdivide_tile(level - 1, model_idx)?;
        let model_kids = self.tile(level - 1, model_idx).children.clone().unwrap();
        let m = self.template.m;
        let boundary = self.tile(level, idx).boundary.clone();
        let model_boundary = self.tile(level - 1, model_idx).boundary.clone();

        // map from model cells (level `level`, children of the model tile)
        // to fresh cells (level `level+1`, children of this tile)
        let mut vmap: HashMap<VertId, VertId> = HashMap::new();
        let mut emap: HashMap<u32, (u32, bool)> = HashMap::new();

        // boundary correspondence: dart k of this tile maps onto model dart
        // (k + offset) mod m
        for k in 0..m {
            let (e, rev) = boundary[k];
            let (me, mrev) = model_boundary[(k + offset) % m];
            let path = self.edge(level, e).children.clone().unwrap();
            let mpath = self.edge(level - 1, me).children.clone().unwrap();
            debug_assert_eq!(path.verts.len(), mpath.verts.len());
            let (dverts, dedges): (Vec<VertId>, Vec<u32>) = if rev {
                (
                    path.verts.iter().rev().copied().collect(),
                    path.edges.iter().rev().copied().collect(),
                )
            } else {
                (path.verts.clone(), path.edges.clone())
            };
            let (mdverts, mdedges): (Vec<VertId>, Vec<u32>) = if mrev {
                (
                    mpath.verts.iter().rev().copied().collect(),
                    mpath.edges.iter().rev().copied().collect(),
                )
            } else {
                (mpath.verts.clone(), mpath.edges.clone())
            };
            for (v, mv) in dverts.iter().zip(mdverts.iter()) {
                debug_assert_eq!(self.verts[*v as usize].image, *mv, "boundary vertex image");
                vmap.insert(*mv, *v);
            }
            // path edges are stored aligned with the path direction; when a
            // dart traverses the path backwards the copy is anti-aligned
            let flip = rev != mrev;
            for (g, mg) in dedges.iter().zip(mdedges.iter()) {
                emap.insert(*mg, (*g, flip));
            }
        }

        // fresh interior vertices
        let mut inner_verts = Vec::with_capacity(model_kids.inner_verts.len());
        for &mv in &model_kids.inner_verts {
            let v = self.new_vertex(level + 1, mv, Cell::Tile(level, idx), 1)?;
            vmap.insert(mv, v);
            inner_verts.push(v);
        }
        // fresh interior edges, oriented image-forward
        let mut inner_edges = Vec::with_capacity(model_kids.inner_edges.len());
        for &me in &model_kids.inner_edges {
            let mends = self.edge(level, me).ends;
            let a = vmap[&mends[0]];
            let b = vmap[&mends[1]];
            self.charge(1)?;
            let eid = self.level_mut(level + 1).edges.len() as u32;
            self.level_mut(level + 1).edges.push(EdgeInfo {
                ends: [a, b],
                image: (me, false),
                container: Cell::Tile(level, idx),
                sides: [None, None],
                children: None,
                polyline: None,
            });
            emap.insert(me, (eid, false));
            inner_edges.push(eid);
        }
        // fresh child tiles
        let mut tiles = Vec::with_capacity(model_kids.tiles.len());
        for &mt in &model_kids.tiles {
            let minfo = self.tile(level, mt).clone();
            let nb: Vec<(u32, bool)> = minfo
                .boundary
                .iter()
                .map(|&(me, mrev)| {
                    let (e, flip) = emap[&me];
                    (e, mrev ^ flip)
                })
                .collect();
            let id = self.register_tile(
                level + 1,
                TileInfo {
                    boundary: nb,
                    color: minfo.color,
                    image: (mt, 0),
                    container: idx,
                    children: None,
                },
            )?;
            tiles.push(id);
        }
        if self.map.is_some() && (level + 1) <= self.geometry_depth {
            let map = self.map.clone().unwrap();
            for &e in &inner_edges {
                geometry::lift_edge_polyline(self, &map, level + 1, e)?;
            }
        }
        Ok(TileKids {
            tiles,
            inner_verts,
            inner_edges,
        })
    }

    /// Build the full complex up to the given level.
    pub fn build_level(&mut self, n: u16) -> Result<()> {
        let d = self.degree() as u64;
        let mut need = 0u64;
        for k in 1..=n as u32 {
            need += 2 * d.pow(k) + self.m() as u64 * d.pow(k);
        }
        if need > self.cell_budget {
            return Err(Error::CellBudget {
                needed: need,
                budget: self.cell_budget,
            });
        }
        for lvl in 0..n {
            if (lvl as usize) < self.levels.len() {
                for t in 0..self.levels[lvl as usize].tiles.len() as u32 {
                    self.subdivide_tile(lvl, t)?;
                }
            }
        }
        Ok(())
    }

    /// Counts (vertices, edges, tiles) at a built level.
    pub fn level_counts(&self, n: u16) -> (usize, usize, usize) {
        let nv = self.verts.iter().filter(|v| v.birth <= n).count();
        let lv = &self.levels[n as usize];
        (nv, lv.edges.len(), lv.tiles.len())
    }

    // ------------------------------------------------------------------
    // flowers
    // ------------------------------------------------------------------

    /// Materialize every tile of W^n(v).
    pub fn ensure_flower(&mut self, v: VertId, n: u16) -> Result<()> {
        let birth = self.verts[v as usize].birth;
        assert!(n >= birth, "flower below the vertex birth level");
        if birth == n {
            // creation context: the cells around v at its birth level
            match self.verts[v as usize].container {
                Cell::Vertex(_) => {} // level-0 vertex: both 0-tiles exist
                Cell::Edge(l, e) => {
                    let sides = self.edge(l, e).sides;
                    for s in sides.into_iter().flatten() {
                        self.subdivide_tile(l, s)?;
                    }
                }
                Cell::Tile(l, t) => {
                    self.subdivide_tile(l, t)?;
                }
            }
            return Ok(());
        }
        self.ensure_flower(v, n - 1)?;
        let tiles = self.tiles_at.get(&(v, n - 1)).cloned().unwrap_or_default();
        for t in tiles {
            self.subdivide_tile(n - 1, t)?;
        }
        Ok(())
    }

    /// The n-flower of v with tiles in cyclic order. Fails if the flower is
    /// incomplete (not yet materialized) or the vertex is unknown.
    pub fn flower(&self, v: VertId, n: u16) -> Result<Flower> {
        if (v as usize) >= self.verts.len() {
            return Err(Error::UnknownVertex(v));
        }
        let tiles = self
            .tiles_at
            .get(&(v, n))
            .cloned()
            .ok_or_else(|| Error::HypothesesViolated(format!("flower of {v} at {n} not built")))?;
        let expected = 2 * self.vertex_iterated_degree(v, n);
        if tiles.len() as u64 != expected {
            return Err(Error::HypothesesViolated(format!(
                "flower of {v} at level {n} has {} tiles, expected {expected}",
                tiles.len()
            )));
        }
        // order cyclically by walking across the spoke darts at v
        let start = tiles[0];
        let mut order = vec![start];
        let mut spokes = Vec::new();
        let mut cur = start;
        loop {
            // dart of `cur` starting at v
            let b = &self.tile(n, cur).boundary;
            let dart = b
                .iter()
                .copied()
                .find(|&d| self.dart_tail(n, d) == v)
                .ok_or_else(|| Error::HypothesesViolated("corner walk failed".into()))?;
            let e = dart.0;
            spokes.push(e);
            let sides = self.edge(n, e).sides;
            let next = if sides[0] == Some(cur) { sides[1] } else { sides[0] };
            let next =
                next.ok_or_else(|| Error::HypothesesViolated("flower has a free boundary".into()))?;
            if next == start {
                break;
            }
            order.push(next);
            cur = next;
            if order.len() > tiles.len() {
                return Err(Error::HypothesesViolated(
                    "flower walk does not close up".into(),
                ));
            }
        }
        if order.len() != tiles.len() {
            return Err(Error::HypothesesViolated(format!(
                "flower walk visits {} of {} tiles",
                order.len(),
                tiles.len()
            )));
        }
        Ok(Flower {
            center: v,
            level: n,
            tiles: order,
            edges: spokes,
        })
    }

    /// Vertices in the closure of the flower (center, spokes, tile corners).
    pub fn flower_closure_vertices(&self, fl: &Flower) -> Vec<VertId> {
        let mut out = Vec::new();
        for &t in &fl.tiles {
            for v in self.tile_corners(fl.level, t) {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            for &(e, _) in &self.tile(fl.level, t).boundary {
                for v in self.edge(fl.level, e).ends {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Image of the flower under f: cell-wise images form W^{n-1}(f v).
    pub fn flower_image_tiles(&self, fl: &Flower) -> Vec<u32> {
        let mut out = Vec::new();
        for &t in &fl.tiles {
            let img = self.tile(fl.level, t).image.0;
            if !out.contains(&img) {
                out.push(img);
            }
        }
        out
    }

    // ------------------------------------------------------------------
    // combinatorial predicates
    // ------------------------------------------------------------------

    /// Which 0-edges the closed tile meets (via interior-container chains
    /// of its boundary cells).
    pub fn zero_edges_met(&self, level: u16, idx: u32) -> Vec<usize> {
        let m = self.m();
        let mut met = vec![false; m];
        let mark = |cell: Cell, met: &mut Vec<bool>| match self.cont_at(cell, 0) {
            Cell::Vertex(p) => {
                // a 0-vertex lies on its two incident 0-edges
                met[p as usize] = true;
                met[(p as usize + m - 1) % m] = true;
            }
            Cell::Edge(_, j) => met[j as usize] = true,
            Cell::Tile(..) => {}
        };
        if level == 0 {
            return (0..m).collect();
        }
        for &(e, _) in &self.tile(level, idx).boundary {
            mark(Cell::Edge(level, e), &mut met);
            for v in self.edge(level, e).ends {
                mark(Cell::Vertex(v), &mut met);
            }
        }
        (0..m).filter(|&j| met[j]).collect()
    }

    /// Does the tile join opposite sides of the curve? (All three 0-edges
    /// when card post = 3, two disjoint 0-edges otherwise.)
    pub fn joins_opposite_sides(&self, level: u16, idx: u32) -> bool {
        let m = self.m();
        let met = self.zero_edges_met(level, idx);
        if m == 3 {
            met.len() == 3
        } else {
            met.iter().any(|&a| {
                met.iter()
                    .any(|&b| a != b && (a + 1) % m != b && (b + 1) % m != a)
            })
        }
    }

    /// Smallest built level at which no tile joins opposite sides; builds
    /// levels up to `max_level` looking for one.
    pub fn expansion_witness_level(&mut self, max_level: u16) -> Result<u16> {
        for k in 1..=max_level {
            self.build_level(k)?;
            let nt = self.levels[k as usize].tiles.len();
            if (0..nt as u32).all(|t| !self.joins_opposite_sides(k, t)) {
                return Ok(k);
            }
        }
        Err(Error::HypothesesViolated(format!(
            "tiles join opposite sides at every level up to {max_level}"
        )))
    }
}

impl<T: Real> Complex<T> {
    /// Build the complex of a rational backend (template derived at load).
    pub fn for_rational(map: Arc<RationalMap<T>>, geometry_depth: u16) -> Result<Self> {
        let template = Arc::new(extract::extract_template(map.as_ref())?);
        let mut cx = Complex::new(template, Some(map));
        cx.geometry_depth = geometry_depth;
        Ok(cx)
    }

    /// Build the complex of a declarative subdivision rule.
    pub fn for_subdivision(spec: &crate::map::spec::MapSpec) -> Result<Self> {
        let template = Arc::new(crate::map::subdivision::template_from_spec(spec)?);
        Ok(Complex::new(template, None))
    }

    /// Subdivide only the cells reachable within the flower-neighborhood of
    /// the seeds, `depth` times. Returns the tiles of the refined region at
    /// the deepest level.
    pub fn local_refine(&mut self, seeds: &[Cell], depth: u16) -> Result<Vec<(u16, u32)>> {
        let mut region: Vec<(u16, u32)> = Vec::new();
        for &seed in seeds {
            match seed {
                Cell::Tile(l, t) => {
                    if !region.contains(&(l, t)) {
                        region.push((l, t));
                    }
                }
                Cell::Vertex(v) => {
                    let l = self.verts[v as usize].birth;
                    self.ensure_flower(v, l)?;
                    for t in self.tiles_at.get(&(v, l)).cloned().unwrap_or_default() {
                        if !region.contains(&(l, t)) {
                            region.push((l, t));
                        }
                    }
                }
                Cell::Edge(l, e) => {
                    for s in self.edge(l, e).sides.into_iter().flatten() {
                        if !region.contains(&(l, s)) {
                            region.push((l, s));
                        }
                    }
                }
            }
        }
        for _ in 0..depth {
            let mut next = Vec::new();
            for (l, t) in region {
                self.subdivide_tile(l, t)?;
                for k in self.tile(l, t).children.as_ref().unwrap().tiles.clone() {
                    next.push((l + 1, k));
                }
            }
            region = next;
        }
        Ok(region)
    }

    /// Periodic critical points of the combinatorial backend: critical
    /// 1-vertices that are 0-vertices on a cycle through themselves.
    pub fn periodic_critical_vertices(&self) -> Vec<VertId> {
        let m = self.m();
        let mut out = Vec::new();
        for v in 0..m as VertId {
            if self.verts[v as usize].local_deg < 2 {
                continue;
            }
            let mut cur = v;
            for _ in 0..m {
                cur = self.verts[cur as usize].image;
                if cur == v {
                    out.push(v);
                    break;
                }
            }
        }
        out
    }
}

fn default_cell_budget() -> u64 {
    match std::env::var("THURSTON_BUDGET_CELLS") {
        Ok(s) => s.parse().unwrap_or(1 << 22),
        Err(_) => 1 << 22,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::spec::MapSpec;
    use crate::poly::Poly;
    use crate::map::CurveSpec;

    fn barycentric() -> Complex<f64> {
        let text = include_str!("../../../../maps/barycentric.json");
        let spec = MapSpec::from_json(text).unwrap();
        Complex::for_subdivision(&spec).unwrap()
    }

    fn rational() -> Complex<f64> {
        let map = RationalMap::new(
            Poly::from_reals(&[-2.0, 0.0, 1.0]),
            Poly::from_reals(&[0.0, 0.0, 1.0]),
            CurveSpec::RealLine,
            1,
        )
        .unwrap();
        Complex::for_rational(Arc::new(map), 6).unwrap()
    }

    #[test]
    fn barycentric_template_is_valid_with_periodic_critical_fixed_point() {
        let cx = barycentric();
        assert_eq!(cx.m(), 3);
        assert_eq!(cx.degree(), 6);
        // vertex 0 is a fixed critical point
        assert_eq!(cx.verts[0].image, 0);
        assert_eq!(cx.verts[0].local_deg, 2);
        assert_eq!(cx.periodic_critical_vertices(), vec![0]);
    }

    #[test]
    fn barycentric_level_counts_and_euler() {
        let mut cx = barycentric();
        cx.build_level(3).unwrap();
        for n in 0..=3u16 {
            let d = 6u64.pow(n as u32);
            let (nv, ne, nt) = cx.level_counts(n);
            assert_eq!(nt as u64, 2 * d, "tiles at level {n}");
            assert_eq!(ne as u64, 3 * d, "edges at level {n}");
            assert!(nv as u64 <= 3 * d || n == 0);
            assert_eq!(nv as i64 - ne as i64 + nt as i64, 2, "Euler at level {n}");
            for t in 0..nt as u32 {
                assert_eq!(cx.tile(n, t).boundary.len(), 3);
            }
        }
    }

    #[test]
    fn barycentric_no_one_tile_joins_opposite_sides() {
        let mut cx = barycentric();
        assert_eq!(cx.expansion_witness_level(4).unwrap(), 1);
    }

    #[test]
    fn flower_counts_match_iterated_degrees() {
        let mut cx = barycentric();
        cx.build_level(2).unwrap();
        // fixed critical point: deg_{f^2}(0) = 4, so 8 tiles
        let fl = cx.flower(0, 2).unwrap();
        assert_eq!(fl.tiles.len(), 8);
        // flowers map onto flowers: f(W^2(0)) = W^1(0)
        let img: Vec<u32> = cx.flower_image_tiles(&fl);
        let fl1 = cx.flower(0, 1).unwrap();
        let mut a = img.clone();
        let mut b = fl1.tiles.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn rational_template_extraction() {
        let cx = rational();
        assert_eq!(cx.m(), 3);
        assert_eq!(cx.degree(), 2);
        let t = &cx.template;
        assert_eq!(t.verts.len(), 4); // 0-vertices -1, 1, inf plus 0
        assert_eq!(t.edges.len(), 6);
        assert_eq!(t.tiles.len(), 4);
    }

    #[test]
    fn rational_level_counts_and_euler() {
        let mut cx = rational();
        cx.build_level(6).unwrap();
        for n in 0..=6u16 {
            let d = 2u64.pow(n as u32);
            let (nv, ne, nt) = cx.level_counts(n);
            assert_eq!(nt as u64, 2 * d, "tiles at level {n}");
            assert_eq!(ne as u64, 3 * d, "edges at level {n}");
            assert!(nv as u64 <= 3 * d);
            assert_eq!(nv as i64 - ne as i64 + nt as i64, 2, "Euler at level {n}");
        }
    }

    #[test]
    fn rational_all_one_tiles_join_but_deeper_tiles_do_not() {
        let mut cx = rational();
        cx.build_level(1).unwrap();
        for t in 0..4u32 {
            assert!(cx.joins_opposite_sides(1, t), "1-tiles contain 0 and inf");
        }
        let k = cx.expansion_witness_level(8).unwrap();
        assert!(k >= 2 && k <= 6, "witness level {k}");
    }

    #[test]
    fn vertex_embeddings_commute_with_the_map() {
        let mut cx = rational();
        cx.build_level(5).unwrap();
        let map = cx.map.clone().unwrap();
        for v in 0..cx.verts.len() {
            let info = &cx.verts[v];
            if info.birth == 0 {
                continue;
            }
            let p = info.embed.expect("rational vertices embedded");
            let img = cx.verts[info.image as usize].embed.unwrap();
            assert!(
                map.evaluate(&p).proj_eq(&img, 1e-7),
                "vertex {v} embed does not map onto its image"
            );
        }
    }

    #[test]
    fn local_refine_matches_full_build() {
        let mut lazy = rational();
        lazy.build_level(1).unwrap();
        let region = lazy.local_refine(&[Cell::Tile(1, 0)], 3).unwrap();
        assert_eq!(region.len(), 8, "one deg-2 tile refines into 2^3 tiles");

        let mut full = rational();
        full.build_level(4).unwrap();
        let count = (0..full.levels[4].tiles.len() as u32)
            .filter(|&t| matches!(full.cont_at(Cell::Tile(4, t), 1), Cell::Tile(1, x) if x == 0))
            .count();
        assert_eq!(count, 8);

        let empty = lazy.local_refine(&[], 2).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn containers_nest_and_zero_edges_met_is_sane() {
        let mut cx = rational();
        cx.build_level(4).unwrap();
        // every level-4 tile sits in a level-3 tile which sits in ...
        for t in 0..cx.levels[4].tiles.len() as u32 {
            let mut cell = Cell::Tile(4, t);
            for lvl in (0..4u16).rev() {
                cell = cx.cont_at(cell, lvl);
                assert!(matches!(cell, Cell::Tile(l, _) if l == lvl));
            }
        }
        // a 0-tile meets all 0-edges
        assert!(cx.joins_opposite_sides(0, 0));
    }
}
