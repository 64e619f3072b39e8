//! Stable text exports of a built level: tiles.csv, vertices.csv and a JSON
//! incidence dump. Formats are load-bearing for golden tests; do not change
//! them casually.

use serde_json::json;

use crate::error::Result;
use crate::scalar::Real;

use super::Complex;

impl<T: Real> Complex<T> {
    /// tiles.csv: id,color,edge_cycle,vertex_cycle
    /// edge_cycle tokens are `<edge-id><+|->`, semicolon separated.
    pub fn tiles_csv(&self, level: u16) -> String {
        let mut out = String::from("id,color,edge_cycle,vertex_cycle\n");
        for (i, t) in self.levels[level as usize].tiles.iter().enumerate() {
            let edge_cycle: Vec<String> = t
                .boundary
                .iter()
                .map(|&(e, rev)| format!("{}{}", e, if rev { '-' } else { '+' }))
                .collect();
            let verts: Vec<String> = self
                .tile_corners(level, i as u32)
                .iter()
                .map(|v| v.to_string())
                .collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                i,
                t.color.name(),
                edge_cycle.join(";"),
                verts.join(";")
            ));
        }
        out
    }

    /// vertices.csv: id,re,im,is_infinity,deg (deg = deg_{f^level}).
    pub fn vertices_csv(&self, level: u16) -> String {
        let mut out = String::from("id,re,im,is_infinity,deg\n");
        for (v, info) in self.verts.iter().enumerate() {
            if info.birth > level {
                continue;
            }
            let deg = self.vertex_iterated_degree(v as u32, level);
            match &info.embed {
                Some(p) => {
                    if p.is_infinity() {
                        out.push_str(&format!("{v},,,1,{deg}\n"));
                    } else {
                        let c = p.to_complex().unwrap();
                        out.push_str(&format!(
                            "{v},{:.17e},{:.17e},0,{deg}\n",
                            c.re.to_f(),
                            c.im.to_f()
                        ));
                    }
                }
                None => out.push_str(&format!("{v},,,0,{deg}\n")),
            }
        }
        out
    }

    /// Full incidence dump of one level.
    pub fn incidence_json(&self, level: u16) -> Result<String> {
        let lv = &self.levels[level as usize];
        let tiles: Vec<_> = lv
            .tiles
            .iter()
            .enumerate()
            .map(|(i, t)| {
                json!({
                    "id": i,
                    "color": t.color.name(),
                    "edges": t.boundary.iter().map(|&(e, r)| json!([e, r])).collect::<Vec<_>>(),
                    "vertices": self.tile_corners(level, i as u32),
                    "image": if level == 0 { None } else { Some(t.image.0) },
                    "container": if level == 0 { None } else { Some(t.container) },
                })
            })
            .collect();
        let edges: Vec<_> = lv
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                json!({
                    "id": i,
                    "ends": e.ends,
                    "image": if level == 0 { None } else { Some(json!([e.image.0, e.image.1])) },
                })
            })
            .collect();
        let verts: Vec<_> = self
            .verts
            .iter()
            .enumerate()
            .filter(|(_, v)| v.birth <= level)
            .map(|(i, v)| {
                json!({
                    "id": i,
                    "birth": v.birth,
                    "image": v.image,
                    "local_degree": v.local_deg,
                    "iterated_degree": self.vertex_iterated_degree(i as u32, level),
                })
            })
            .collect();
        Ok(serde_json::to_string_pretty(&json!({
            "level": level,
            "tile_count": lv.tiles.len(),
            "edge_count": lv.edges.len(),
            "vertex_count": verts.len(),
            "tiles": tiles,
            "edges": edges,
            "vertices": verts,
        }))?)
    }
}
