//! Named example complexes and seeded random generators for complexes,
//! programs and cube paths.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dipath::{CubePath, Move, MoveKind};
use crate::pcs::{
    axis_cross, box_union, interval, linear_graph, tensor, Cell, GridBox, PcsBuilder,
    PrecubicalSet, Sign,
};

pub const MUTEX_PROGRAM: &str = "P(m);V(m)|P(m);V(m)";
pub const BARRIER_PROGRAM: &str = "W(b)|W(b)";

/// Four edges meeting at the origin, two pointing in and two out.
pub fn cross() -> PrecubicalSet {
    axis_cross(2)
}

/// The three coordinate planes of `[-1, 1]^3`.
pub fn coordinate_planes() -> PrecubicalSet {
    axis_cross(3)
}

/// Two squares side by side, sharing the edge `(1,0>1)`.
pub fn two_squares() -> PrecubicalSet {
    tensor(&linear_graph(2), &interval())
}

/// A horizontal sheet over `x in [-1, 3]` and a vertical sheet over `x in [-3, 1]`
/// meeting along the `x` axis, each closed off by a transverse sheet where the
/// other one starts. Every cube with a germ passes the local lift check, yet no
/// germ path follows the whole axis.
pub fn two_sheets() -> PrecubicalSet {
    let boxes: Vec<GridBox> = vec![
        vec![(-1, 3), (-2, 2), (0, 0)],
        vec![(-3, 1), (0, 0), (-2, 2)],
        vec![(-1, -1), (-2, 2), (-2, 2)],
        vec![(1, 1), (-2, 2), (-2, 2)],
    ];
    box_union(&boxes)
}

/// A path along the grid axis `axis` from the vertex `start`, `len` edges long.
pub fn axis_path(p: &PrecubicalSet, start: &[i64], axis: usize, len: usize) -> Option<CubePath> {
    use crate::pcs::{grid_key, GridCoord};
    let mut at: Vec<GridCoord> = start.iter().map(|&x| GridCoord::Vertex(x)).collect();
    let mut steps = vec![grid_key(&at)];
    let mut moves = Vec::new();
    for _ in 0..len {
        let GridCoord::Vertex(x) = at[axis] else {
            unreachable!()
        };
        at[axis] = GridCoord::Edge(x);
        steps.push(grid_key(&at));
        moves.push(Move {
            kind: MoveKind::Up,
            faces: vec![(0, Sign::Minus)],
        });
        at[axis] = GridCoord::Vertex(x + 1);
        steps.push(grid_key(&at));
        moves.push(Move {
            kind: MoveKind::Down,
            faces: vec![(0, Sign::Plus)],
        });
    }
    if steps.iter().any(|k| p.cell(k).is_none()) {
        return None;
    }
    Some(CubePath { steps, moves })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A directed multigraph with `1..=max_vertices` vertices and up to `max_edges`
/// edges; loops and parallel edges allowed.
pub fn random_graph(rng: &mut impl Rng, max_vertices: usize, max_edges: usize) -> PrecubicalSet {
    let nv = rng.gen_range(1..=max_vertices);
    let ne = rng.gen_range(0..=max_edges);
    let names: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
    let mut b = PcsBuilder::new();
    for v in &names {
        b.vertex(v.clone());
    }
    for e in 0..ne {
        let s = &names[rng.gen_range(0..nv)];
        let t = &names[rng.gen_range(0..nv)];
        b.edge(format!("e{e}"), s, t);
    }
    b.build().expect("graphs are well formed")
}

/// A complex of dimension at most two with at most `max_cells` cubes: a graph,
/// a product of two graphs, or the span of some cubes of such a product.
pub fn random_complex(rng: &mut impl Rng, max_cells: usize) -> PrecubicalSet {
    loop {
        let candidate = match rng.gen_range(0..3) {
            0 => random_graph(rng, 5, 7),
            1 => tensor(&random_graph(rng, 3, 3), &random_graph(rng, 3, 3)),
            _ => {
                let full = tensor(&random_graph(rng, 4, 4), &random_graph(rng, 3, 3));
                let cells: Vec<Cell> = full.all_cells().collect();
                let k = rng.gen_range(1..=cells.len());
                let picked: Vec<Cell> = cells.choose_multiple(rng, k).copied().collect();
                full.span(picked)
            }
        };
        if !candidate.is_empty() && candidate.len() <= max_cells {
            return candidate;
        }
    }
}

/// `count` complexes from `seed`.
pub fn complexes(seed: u64, count: usize, max_cells: usize) -> Vec<PrecubicalSet> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_complex(&mut r, max_cells))
        .collect()
}

/// `count` graphs from `seed`.
pub fn graphs(seed: u64, count: usize) -> Vec<PrecubicalSet> {
    let mut r = rng(seed);
    (0..count).map(|_| random_graph(&mut r, 5, 7)).collect()
}

/// Program text with up to `max_processes` processes over a few mutexes,
/// barriers and plain actions; every process is conservative.
pub fn random_program(rng: &mut impl Rng, max_processes: usize) -> String {
    let np = rng.gen_range(1..=max_processes);
    let mut procs = Vec::with_capacity(np);
    for _ in 0..np {
        let mut ins: Vec<String> = Vec::new();
        let mut held: Vec<&str> = Vec::new();
        let len = rng.gen_range(1..=4);
        for _ in 0..len {
            match rng.gen_range(0..4) {
                0 => {
                    let m = ["m", "n"][rng.gen_range(0..2)];
                    if let Some(pos) = held.iter().position(|&h| h == m) {
                        held.remove(pos);
                        ins.push(format!("V({m})"));
                    } else {
                        held.push(m);
                        ins.push(format!("P({m})"));
                    }
                }
                1 => ins.push("W(b)".into()),
                _ => ins.push(["a", "b", "c"][rng.gen_range(0..3)].into()),
            }
        }
        while let Some(m) = held.pop() {
            ins.push(format!("V({m})"));
        }
        procs.push(ins.join(";"));
    }
    procs.join("|")
}

/// A random path of up to `len` moves starting at a random vertex. Consecutive
/// moves of the same kind are sometimes merged into one multi-face move.
pub fn random_walk(p: &PrecubicalSet, rng: &mut impl Rng, len: usize) -> Option<CubePath> {
    let vertices: Vec<Cell> = p.vertices().collect();
    let mut at = *vertices.choose(rng)?;
    let mut steps = vec![p.key(at).to_string()];
    let mut moves: Vec<Move> = Vec::new();
    for _ in 0..len {
        let mut options: Vec<(Cell, Move)> = p
            .cofaces(at)
            .iter()
            .filter(|cf| cf.sign == Sign::Minus)
            .map(|cf| {
                (
                    cf.cube,
                    Move {
                        kind: MoveKind::Up,
                        faces: vec![(cf.dir, Sign::Minus)],
                    },
                )
            })
            .collect();
        for i in 0..at.dim {
            options.push((
                p.face(at, i, Sign::Plus),
                Move {
                    kind: MoveKind::Down,
                    faces: vec![(i, Sign::Plus)],
                },
            ));
        }
        let Some((next, mv)) = options.choose(rng).cloned() else {
            break;
        };
        let merge = moves.last().is_some_and(|last| last.kind == mv.kind) && rng.gen_bool(0.5);
        if merge {
            let last = moves.pop().expect("checked");
            steps.pop();
            let faces = match mv.kind {
                MoveKind::Up => mv.faces.iter().chain(&last.faces).copied().collect(),
                MoveKind::Down => last.faces.iter().chain(&mv.faces).copied().collect(),
            };
            moves.push(Move {
                kind: mv.kind,
                faces,
            });
        } else {
            moves.push(mv);
        }
        steps.push(p.key(next).to_string());
        at = next;
    }
    Some(CubePath { steps, moves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipath::validate_path;
    use crate::hda::parse;
    use crate::pcs::grid_window;

    #[test]
    fn generators_are_reproducible() {
        let a = complexes(7, 10, 40);
        let b = complexes(7, 10, 40);
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|p| p.len() <= 40 && p.dim() <= 2 && p.validate().is_ok()));
    }

    #[test]
    fn programs_parse() {
        let mut r = rng(3);
        for _ in 0..50 {
            let text = random_program(&mut r, 3);
            parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        }
    }

    #[test]
    fn walks_are_valid() {
        let g = grid_window(2, 2);
        let mut r = rng(11);
        for _ in 0..30 {
            let path = random_walk(&g, &mut r, 8).unwrap();
            assert!(validate_path(&g, &path).is_ok(), "{path:?}");
        }
    }

    #[test]
    fn sheets() {
        let p = two_sheets();
        assert!(p.validate().is_ok());
        assert!(axis_path(&p, &[-2, 0, 0], 0, 4).is_some());
        assert!(axis_path(&p, &[-2, 1, 0], 0, 4).is_none());
    }
}
