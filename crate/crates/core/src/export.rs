//! Serialized forms of a blowup: JSON tables, a DOT graph of germ points and an
//! OFF mesh with one box per germ point.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::blowup::BlowupComplex;
use crate::local_euclid::LpsRecord;
use crate::pcs::{parse_grid_key, Cell, GridCoord, Sign};

/// Target of one restriction: a germ index or the empty germ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Germ(usize),
    Empty(Bottom),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bottom {
    #[serde(rename = "bot")]
    Bot,
}

impl From<Option<usize>> for Target {
    fn from(t: Option<usize>) -> Self {
        t.map_or(Target::Empty(Bottom::Bot), Target::Germ)
    }
}

impl Target {
    pub fn germ(self) -> Option<usize> {
        match self {
            Target::Germ(g) => Some(g),
            Target::Empty(_) => None,
        }
    }
}

/// `{"n", "fibers": {cube: [germ]}, "restrictions": {"face->cube@i,eps": {germ: target}}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupDocument {
    pub n: usize,
    pub fibers: BTreeMap<String, Vec<LpsRecord>>,
    pub restrictions: BTreeMap<String, BTreeMap<String, Target>>,
}

impl BlowupDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Key of the restriction table from `face(c, i, eps)` into `c`.
pub fn restriction_key(face: &str, cube: &str, i: usize, eps: Sign) -> String {
    format!("{face}->{cube}@{i},{eps}")
}

/// The JSON document of a blowup. Cubes with empty fibers and tables from
/// empty fibers are omitted.
pub fn blowup_document(b: &BlowupComplex) -> BlowupDocument {
    let p = b.base();
    let mut fibers = BTreeMap::new();
    let mut restrictions = BTreeMap::new();
    for c in p.all_cells() {
        if b.fiber_size(c) > 0 {
            fibers.insert(
                p.key(c).to_string(),
                b.fiber(c).iter().map(|q| q.record()).collect(),
            );
        }
        for i in 0..c.dim {
            for eps in Sign::BOTH {
                let table = b.restriction(c, i, eps);
                if table.is_empty() {
                    continue;
                }
                let face = p.face(c, i, eps);
                restrictions.insert(
                    restriction_key(p.key(face), p.key(c), i, eps),
                    table
                        .iter()
                        .enumerate()
                        .map(|(g, &t)| (g.to_string(), Target::from(t)))
                        .collect(),
                );
            }
        }
    }
    BlowupDocument {
        n: b.n(),
        fibers,
        restrictions,
    }
}

fn node_id(key: &str, germ: usize) -> String {
    format!(
        "\"{}#{germ}\"",
        key.replace('\\', "\\\\").replace('"', "\\\"")
    )
}

/// Germ points as nodes, one edge from each germ over a face to its restriction.
pub fn to_dot(b: &BlowupComplex) -> String {
    let p = b.base();
    let mut out = String::from("digraph blowup {\n");
    for g in b.points() {
        let _ = writeln!(out, "  {};", node_id(p.key(g.cube), g.germ));
    }
    for c in p.all_cells() {
        for i in 0..c.dim {
            for eps in Sign::BOTH {
                let face = p.face(c, i, eps);
                for (g, t) in b.restriction(c, i, eps).iter().enumerate() {
                    if let Some(h) = t {
                        let _ = writeln!(
                            out,
                            "  {} -> {} [label=\"{i}{eps}\"];",
                            node_id(p.key(face), g),
                            node_id(p.key(c), *h)
                        );
                    }
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Position of a cube: grid coordinates when the key is a grid tuple, else the
/// cube's index along the first axis and its dimension along the second.
fn extent(key: &str, cell: Cell) -> Vec<(f64, f64)> {
    const PAD: f64 = 0.1;
    match parse_grid_key(key) {
        Some(coords) => coords
            .iter()
            .map(|c| match *c {
                GridCoord::Vertex(x) => (x as f64 - PAD, x as f64 + PAD),
                GridCoord::Edge(a) => (a as f64 + PAD, a as f64 + 1.0 - PAD),
            })
            .collect(),
        None => {
            let x = cell.index as f64;
            let y = cell.dim as f64;
            vec![(x - PAD, x + PAD), (y - PAD, y + PAD)]
        }
    }
}

/// One box per germ point, germs of one cube stacked along the last axis when
/// the base is at most two dimensional.
pub fn to_off(b: &BlowupComplex) -> String {
    let p = b.base();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 4]> = Vec::new();
    for g in b.points() {
        let mut ext = extent(p.key(g.cube), g.cube);
        let stack = 0.3 * g.germ as f64;
        while ext.len() < 3 {
            ext.push((0.0, 0.2));
        }
        ext.truncate(3);
        if p.dim() < 3 {
            ext[2] = (ext[2].0 + stack, ext[2].1 + stack);
        }
        let base = vertices.len();
        for mask in 0..8usize {
            vertices.push([0, 1, 2].map(|a| {
                if mask >> a & 1 == 0 {
                    ext[a].0
                } else {
                    ext[a].1
                }
            }));
        }
        for quad in [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ] {
            faces.push(quad.map(|q| base + q));
        }
    }
    let mut out = format!("OFF\n{} {} 0\n", vertices.len(), faces.len());
    for v in &vertices {
        let _ = writeln!(out, "{:.3} {:.3} {:.3}", v[0], v[1], v[2]);
    }
    for f in &faces {
        let _ = writeln!(out, "4 {} {} {} {}", f[0], f[1], f[2], f[3]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::build_blowup;
    use crate::pcs::{axis_cross, grid_window};

    #[test]
    fn document_round_trip() {
        let g = axis_cross(2);
        let b = build_blowup(&g, 1).unwrap();
        let doc = blowup_document(&b);
        assert_eq!(doc.fibers["(0,0)"].len(), 4);
        let text = doc.to_json();
        let back = BlowupDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), text);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let table = &v["restrictions"]["(0,0)->(0>1,0)@0,-"];
        assert_eq!(table.as_object().unwrap().len(), 4);
        assert!(table.as_object().unwrap().values().any(|t| t == "bot"));
    }

    #[test]
    fn dot_of_the_cross() {
        let g = axis_cross(2);
        let b = build_blowup(&g, 1).unwrap();
        let dot = to_dot(&b);
        let nodes = dot
            .lines()
            .filter(|l| l.ends_with(';') && !l.contains("->"))
            .count();
        assert_eq!(nodes, 8);
        for k in 0..4 {
            let id = node_id("(0,0)", k);
            assert_eq!(
                dot.lines()
                    .filter(|l| l.contains(&format!("{id} ->")))
                    .count(),
                2
            );
        }
    }

    #[test]
    fn empty_blowup_exports() {
        let g = axis_cross(2);
        let b = build_blowup(&g, 3).unwrap();
        assert_eq!(b.total(), 0);
        assert_eq!(to_dot(&b), "digraph blowup {\n}\n");
        assert!(to_off(&b).starts_with("OFF\n0 0 0\n"));
    }

    #[test]
    fn off_boxes() {
        let g = grid_window(2, 1);
        let b = build_blowup(&g, 2).unwrap();
        let off = to_off(&b);
        let header: Vec<usize> = off
            .lines()
            .nth(1)
            .unwrap()
            .split(' ')
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(header, vec![8 * 9, 6 * 9, 0]);
    }
}
