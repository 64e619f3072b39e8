//! Declarative two-tile subdivision rules.
//!
//! The file format describes the level-1 complex and the label map; this
//! module resolves derived data (edge images, containers, curve coverage,
//! tile offsets) and hands a validated [`Template`] to the cell engine.

use crate::cells::template::{
    zero_tile_boundary, Color, Cont0, EdgePath, TEdge, TTile, TVert, Template,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::spec::{ContainerSpec, MapSpec, TemplateSpec};

fn parse_color(name: &str) -> Result<Color> {
    match name {
        "white" => Ok(Color::White),
        "black" => Ok(Color::Black),
        other => Err(Error::InvalidSpec(format!("unknown tile color {other:?}"))),
    }
}

pub fn template_from_spec<T: Real>(spec: &MapSpec) -> Result<Template<T>> {
    let (m, tiles0, tspec) = match spec {
        MapSpec::Subdivision {
            post_count,
            tiles,
            template,
        } => (*post_count, tiles, template),
        MapSpec::Rational { .. } => {
            return Err(Error::Unsupported("rational spec is not a subdivision rule"))
        }
    };
    if tiles0.len() != 2 {
        return Err(Error::InvalidSpec("level 0 must have exactly two tiles".into()));
    }
    if parse_color(&tiles0[0].color)? != Color::White
        || parse_color(&tiles0[1].color)? != Color::Black
    {
        return Err(Error::InvalidSpec(
            "level-0 tiles must be listed as white then black".into(),
        ));
    }
    build_template(m, tspec)
}

fn build_template<T: Real>(m: usize, spec: &TemplateSpec) -> Result<Template<T>> {
    let nv = spec.vertices.len();
    let ne = spec.edges.len();
    if nv < m {
        return Err(Error::InvalidSpec(
            "template must contain the 0-vertices".into(),
        ));
    }
    if spec.vertex_degrees.len() != nv {
        return Err(Error::InvalidSpec(
            "vertex_degrees length must match vertices".into(),
        ));
    }
    if ne % m != 0 {
        return Err(Error::InvalidSpec("edge count must be m * deg".into()));
    }
    let d = ne / m;
    let post_dynamics: Vec<usize> = spec.vertices[..m].iter().map(|v| v.label).collect();

    // edges: derive image 0-edge and orientation from endpoint labels
    let mut edges = Vec::with_capacity(ne);
    for (i, e) in spec.edges.iter().enumerate() {
        let [a, b] = e.ends;
        if a >= nv || b >= nv {
            return Err(Error::InvalidSpec(format!("edge {i} endpoint out of range")));
        }
        let la = spec.vertices[a].label;
        let lb = spec.vertices[b].label;
        let (image, rev) = if lb == (la + 1) % m {
            (la, false)
        } else if la == (lb + 1) % m {
            (lb, true)
        } else {
            return Err(Error::InvalidSpec(format!(
                "edge {i}: endpoint labels {la},{lb} are not an 0-edge"
            )));
        };
        let container = match e.container {
            ContainerSpec::Edge { edge } if edge < m => Cont0::Edge(edge),
            ContainerSpec::Tile { tile } if tile < 2 => Cont0::Tile(tile),
            _ => return Err(Error::InvalidSpec(format!("edge {i}: bad container"))),
        };
        edges.push(TEdge::<T> {
            ends: [a, b],
            image,
            rev,
            container,
            polyline: None,
        });
    }

    // vertex containers
    let mut vcont = vec![None::<Cont0>; nv];
    for (j, slot) in vcont.iter_mut().enumerate().take(m) {
        *slot = Some(Cont0::Vertex(j));
    }
    for e in &edges {
        for &v in &e.ends {
            if v < m {
                continue;
            }
            let c = match e.container {
                Cont0::Edge(j) => Cont0::Edge(j),
                Cont0::Tile(t) => Cont0::Tile(t),
                Cont0::Vertex(_) => unreachable!(),
            };
            match (&vcont[v], c) {
                (None, c) => vcont[v] = Some(c),
                // an edge-contained vertex may also be hit by interior edges
                (Some(Cont0::Edge(_)), Cont0::Tile(_)) => {}
                (Some(Cont0::Tile(_)), Cont0::Edge(j)) => vcont[v] = Some(Cont0::Edge(j)),
                (Some(prev), c) if *prev != c => {
                    return Err(Error::InvalidSpec(format!(
                        "vertex {v} has inconsistent containers {prev:?} vs {c:?}"
                    )))
                }
                _ => {}
            }
        }
    }
    let verts: Vec<TVert<T>> = (0..nv)
        .map(|v| {
            Ok(TVert {
                label: spec.vertices[v].label,
                local_deg: spec.vertex_degrees[v],
                container: vcont[v]
                    .ok_or_else(|| Error::InvalidSpec(format!("vertex {v} is isolated")))?,
                embed: None,
            })
        })
        .collect::<Result<_>>()?;

    // tiles: colors declared, offsets derived from the image word
    let mut tiles = Vec::with_capacity(spec.tiles.len());
    for (ti, t) in spec.tiles.iter().enumerate() {
        let color = parse_color(&t.color)?;
        let boundary: Vec<(usize, bool)> = t.boundary.iter().map(|d| (d.e, d.rev)).collect();
        if boundary.iter().any(|&(e, _)| e >= ne) {
            return Err(Error::InvalidSpec(format!("tile {ti} references a bad edge")));
        }
        let model = zero_tile_boundary(m, color);
        let word: Vec<(usize, bool)> = boundary
            .iter()
            .map(|&(e, rev)| (edges[e].image, rev ^ edges[e].rev))
            .collect();
        let offset = (0..m)
            .find(|&o| (0..m).all(|k| word.get(k) == Some(&model[(k + o) % m])))
            .ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "tile {ti}: boundary word does not map onto the {} 0-tile",
                    color.name()
                ))
            })?;
        // container: from any off-curve boundary edge
        let container = boundary
            .iter()
            .find_map(|&(e, _)| match edges[e].container {
                Cont0::Tile(s) => Some(s),
                _ => None,
            })
            .ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "tile {ti} has its whole boundary on the curve; unsupported"
                ))
            })?;
        tiles.push(TTile {
            color,
            boundary,
            offset,
            container,
        });
    }

    // curve coverage paths
    let mut e0_children = Vec::with_capacity(m);
    for j in 0..m {
        let mut pool: Vec<usize> = (0..ne)
            .filter(|&e| edges[e].container == Cont0::Edge(j))
            .collect();
        let mut verts_path = vec![j];
        let mut edges_path = Vec::new();
        let mut current = j;
        let target = (j + 1) % m;
        while !pool.is_empty() {
            let pos = pool
                .iter()
                .position(|&e| edges[e].ends.contains(&current))
                .ok_or_else(|| {
                    Error::InvalidSpec(format!("0-edge {j}: curve subdivision is disconnected"))
                })?;
            let e = pool.remove(pos);
            let [a, b] = edges[e].ends;
            current = if a == current { b } else { a };
            edges_path.push(e);
            verts_path.push(current);
        }
        if current != target || edges_path.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "0-edge {j}: curve subdivision does not reach 0-vertex {target}"
            )));
        }
        e0_children.push(EdgePath {
            verts: verts_path,
            edges: edges_path,
        });
    }

    let t0_tiles = [
        (0..tiles.len()).filter(|&t| tiles[t].container == 0).collect(),
        (0..tiles.len()).filter(|&t| tiles[t].container == 1).collect(),
    ];

    let template = Template {
        m,
        d,
        post_dynamics,
        verts,
        edges,
        tiles,
        e0_children,
        t0_tiles,
        post_embed: None,
        e0_polylines: None,
    };
    template.validate()?;
    Ok(template)
}
