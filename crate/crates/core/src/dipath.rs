//! Cube paths and their lifts to the blowup.
//!
//! A cube path alternates between going up into a cube from one of its lower
//! faces and going down from a cube to one of its upper faces. Each transition
//! stores the face word relating the two cubes. A lift picks one germ per step
//! so that consecutive germs are related by the restriction maps.
//!
//! Only germs built from cubes of `(1/6)P` are represented. Directed curves that
//! cut across cubes (diagonals and the like) have no counterpart here, so a
//! missing lift says nothing about continuous lifts along such curves.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blowup::{fiber, BlowupComplex, BlowupError, GermPoint};
use crate::pcs::{Cell, PrecubicalSet, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    /// From a lower face into the cube.
    Up,
    /// From the cube to an upper face.
    Down,
}

impl MoveKind {
    pub fn sign(self) -> Sign {
        match self {
            MoveKind::Up => Sign::Minus,
            MoveKind::Down => Sign::Plus,
        }
    }
}

/// One transition. `faces` is applied to the larger cube, first pair first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Move {
    pub kind: MoveKind,
    pub faces: Vec<(usize, Sign)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubePath {
    pub steps: Vec<String>,
    pub moves: Vec<Move>,
}

#[derive(Debug, Error)]
pub enum PathError {
    #[error("malformed path: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid path:\n{0}")]
    Invalid(PathReport),
    #[error(transparent)]
    Blowup(#[from] BlowupError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathViolation {
    UnknownCube {
        step: usize,
        key: String,
    },
    MoveCount {
        steps: usize,
        moves: usize,
    },
    EmptyMove {
        step: usize,
    },
    WrongSign {
        step: usize,
    },
    FaceOutOfRange {
        step: usize,
    },
    Mismatch {
        step: usize,
        expected: String,
        found: String,
    },
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::UnknownCube { step, key } => {
                write!(f, "step {step}: unknown cube `{key}`")
            }
            PathViolation::MoveCount { steps, moves } => {
                write!(
                    f,
                    "{steps} steps need {} moves, found {moves}",
                    steps.saturating_sub(1)
                )
            }
            PathViolation::EmptyMove { step } => write!(f, "move {step}: empty face word"),
            PathViolation::WrongSign { step } => {
                write!(
                    f,
                    "move {step}: up moves use lower faces, down moves upper faces"
                )
            }
            PathViolation::FaceOutOfRange { step } => {
                write!(f, "move {step}: face index out of range")
            }
            PathViolation::Mismatch {
                step,
                expected,
                found,
            } => {
                write!(
                    f,
                    "move {step}: face word reaches `{found}`, path has `{expected}`"
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathReport {
    pub violations: Vec<PathViolation>,
}

impl PathReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PathReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl CubePath {
    pub fn from_json(text: &str) -> Result<CubePath, PathError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("paths serialize");
        s.push('\n');
        s
    }

    /// Builds a path through `cells`, choosing for every transition the face
    /// word that removes the original directions in ascending order.
    pub fn through(p: &PrecubicalSet, cells: &[Cell]) -> Option<CubePath> {
        let mut moves = Vec::new();
        for w in cells.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mv = if b.dim > a.dim {
                Move {
                    kind: MoveKind::Up,
                    faces: find_word(p, b, a, Sign::Minus)?,
                }
            } else if a.dim > b.dim {
                Move {
                    kind: MoveKind::Down,
                    faces: find_word(p, a, b, Sign::Plus)?,
                }
            } else {
                return None;
            };
            moves.push(mv);
        }
        Some(CubePath {
            steps: cells.iter().map(|&c| p.key(c).to_string()).collect(),
            moves,
        })
    }

    /// The same path with every face word rewritten in the given order.
    pub fn reordered(&self, order: ChainOrder) -> CubePath {
        CubePath {
            steps: self.steps.clone(),
            moves: self
                .moves
                .iter()
                .map(|m| {
                    let dirs = original_directions(&m.faces);
                    let sign = m.kind.sign();
                    Move {
                        kind: m.kind,
                        faces: match order {
                            ChainOrder::Ascending => ascending_word(&dirs, sign),
                            ChainOrder::Descending => descending_word(&dirs, sign),
                        },
                    }
                })
                .collect(),
        }
    }
}

/// Order in which a multi-direction face word removes directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainOrder {
    Ascending,
    Descending,
}

/// Directions of the larger cube removed by a face word, sorted. The word must
/// be in range for a cube with enough directions.
pub fn original_directions(word: &[(usize, Sign)]) -> Vec<usize> {
    let width = word.iter().map(|&(i, _)| i).max().map_or(0, |m| m + 1) + word.len();
    let mut remaining: Vec<usize> = (0..width).collect();
    let mut dirs: Vec<usize> = word.iter().map(|&(i, _)| remaining.remove(i)).collect();
    dirs.sort_unstable();
    dirs
}

/// Removes the sorted directions `dirs` lowest first.
pub fn ascending_word(dirs: &[usize], sign: Sign) -> Vec<(usize, Sign)> {
    dirs.iter()
        .enumerate()
        .map(|(k, &d)| (d - k, sign))
        .collect()
}

/// Removes the sorted directions `dirs` highest first.
pub fn descending_word(dirs: &[usize], sign: Sign) -> Vec<(usize, Sign)> {
    dirs.iter().rev().map(|&d| (d, sign)).collect()
}

fn find_word(p: &PrecubicalSet, big: Cell, small: Cell, sign: Sign) -> Option<Vec<(usize, Sign)>> {
    let k = big.dim - small.dim;
    let mut found = None;
    for_each_subset(big.dim, k, &mut |dirs| {
        if found.is_none() {
            let w = ascending_word(dirs, sign);
            if p.face_word(big, &w) == Some(small) {
                found = Some(w);
            }
        }
    });
    found
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(n: usize, k: usize, start: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for d in start..n {
            acc.push(d);
            rec(n, k, d + 1, acc, f);
            acc.pop();
        }
    }
    rec(n, k, 0, &mut Vec::new(), f);
}

/// Checks every move of `path` against `p`.
pub fn validate_path(p: &PrecubicalSet, path: &CubePath) -> PathReport {
    let mut report = PathReport::default();
    let mut cells = Vec::with_capacity(path.steps.len());
    for (step, key) in path.steps.iter().enumerate() {
        match p.cell(key) {
            Some(c) => cells.push(Some(c)),
            None => {
                report.violations.push(PathViolation::UnknownCube {
                    step,
                    key: key.clone(),
                });
                cells.push(None);
            }
        }
    }
    if path.steps.is_empty() || path.moves.len() + 1 != path.steps.len() {
        report.violations.push(PathViolation::MoveCount {
            steps: path.steps.len(),
            moves: path.moves.len(),
        });
        return report;
    }
    for (step, mv) in path.moves.iter().enumerate() {
        if mv.faces.is_empty() {
            report.violations.push(PathViolation::EmptyMove { step });
            continue;
        }
        if mv.faces.iter().any(|&(_, s)| s != mv.kind.sign()) {
            report.violations.push(PathViolation::WrongSign { step });
            continue;
        }
        let (Some(a), Some(b)) = (cells[step], cells[step + 1]) else {
            continue;
        };
        let (big, small) = match mv.kind {
            MoveKind::Up => (b, a),
            MoveKind::Down => (a, b),
        };
        match p.face_word(big, &mv.faces) {
            None => report
                .violations
                .push(PathViolation::FaceOutOfRange { step }),
            Some(f) if f != small => report.violations.push(PathViolation::Mismatch {
                step,
                expected: p.key(small).to_string(),
                found: p.key(f).to_string(),
            }),
            Some(_) => {}
        }
    }
    report
}

/// One germ per path step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GermPath {
    pub germs: Vec<GermPoint>,
}

impl GermPath {
    pub fn indices(&self) -> Vec<usize> {
        self.germs.iter().map(|g| g.germ).collect()
    }
}

/// Per-step compatibility: `links[k][g]` lists the germs at step `k + 1`
/// compatible with germ `g` at step `k`, ascending.
struct Links {
    cells: Vec<Cell>,
    links: Vec<Vec<Vec<usize>>>,
}

fn links(b: &BlowupComplex, path: &CubePath) -> Result<Links, PathError> {
    let p = b.base();
    let report = validate_path(p, path);
    if !report.is_ok() {
        return Err(PathError::Invalid(report));
    }
    let cells: Vec<Cell> = path
        .steps
        .iter()
        .map(|k| p.cell(k).expect("validated"))
        .collect();
    let mut all = Vec::with_capacity(path.moves.len());
    for (k, mv) in path.moves.iter().enumerate() {
        let (a, c) = (cells[k], cells[k + 1]);
        let mut step = vec![Vec::new(); b.fiber_size(a)];
        match mv.kind {
            MoveKind::Up => {
                for (g, out) in step.iter_mut().enumerate() {
                    if let Some(h) = b.restrict_along(c, &mv.faces, g) {
                        out.push(h);
                    }
                }
            }
            MoveKind::Down => {
                for h in 0..b.fiber_size(c) {
                    if let Some(g) = b.restrict_along(a, &mv.faces, h) {
                        step[g].push(h);
                    }
                }
            }
        }
        all.push(step);
    }
    Ok(Links { cells, links: all })
}

/// Number of lifts, by dynamic programming over the path.
pub fn count_lifts(b: &BlowupComplex, path: &CubePath) -> Result<u128, PathError> {
    let l = links(b, path)?;
    let last = *l.cells.last().expect("non-empty path");
    let mut counts = vec![1u128; b.fiber_size(last)];
    for k in (0..l.links.len()).rev() {
        counts = l.links[k]
            .iter()
            .map(|next| next.iter().map(|&h| counts[h]).sum())
            .collect();
    }
    Ok(counts.iter().sum())
}

/// All lifts of `path`, in lexicographic order of germ indices.
pub fn lift_path(b: &BlowupComplex, path: &CubePath) -> Result<Vec<GermPath>, PathError> {
    let l = links(b, path)?;
    let m = l.cells.len();
    let mut alive: Vec<Vec<bool>> = vec![Vec::new(); m];
    alive[m - 1] = vec![true; b.fiber_size(l.cells[m - 1])];
    for k in (0..m - 1).rev() {
        alive[k] = l.links[k]
            .iter()
            .map(|next| next.iter().any(|&h| alive[k + 1][h]))
            .collect();
    }
    let mut out = Vec::new();
    let mut acc = Vec::with_capacity(m);
    for g in 0..alive[0].len() {
        if alive[0][g] {
            acc.push(g);
            extend(&l, &alive, &mut acc, &mut out);
            acc.pop();
        }
    }
    Ok(out)
}

fn extend(l: &Links, alive: &[Vec<bool>], acc: &mut Vec<usize>, out: &mut Vec<GermPath>) {
    let k = acc.len() - 1;
    if k + 1 == l.cells.len() {
        out.push(GermPath {
            germs: acc
                .iter()
                .zip(&l.cells)
                .map(|(&germ, &cube)| GermPoint { cube, germ })
                .collect(),
        });
        return;
    }
    let g = acc[k];
    for &h in &l.links[k][g] {
        if alive[k + 1][h] {
            acc.push(h);
            extend(l, alive, acc, out);
            acc.pop();
        }
    }
}

/// Checks a germ path against the restriction maps one move at a time.
pub fn is_lift(b: &BlowupComplex, path: &CubePath, lift: &GermPath) -> bool {
    let p = b.base();
    if lift.germs.len() != path.steps.len() {
        return false;
    }
    for (g, key) in lift.germs.iter().zip(&path.steps) {
        if p.cell(key) != Some(g.cube) || g.germ >= b.fiber_size(g.cube) {
            return false;
        }
    }
    path.moves.iter().enumerate().all(|(k, mv)| {
        let (x, y) = (lift.germs[k], lift.germs[k + 1]);
        match mv.kind {
            MoveKind::Up => b.restrict_along(y.cube, &mv.faces, x.germ) == Some(y.germ),
            MoveKind::Down => b.restrict_along(x.cube, &mv.faces, y.germ) == Some(x.germ),
        }
    })
}

/// Coverage of the edge-following one-dimensional germs at one cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeLiftReport {
    pub cube: Cell,
    pub fiber_size: usize,
    /// Edge-following germs of dimension one at the cube.
    pub line_germs: usize,
    /// How many of those lie inside some germ of the fiber.
    pub covered: usize,
}

impl CubeLiftReport {
    pub fn passes(&self) -> bool {
        self.covered == self.line_germs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftReport {
    pub cubes: Vec<CubeLiftReport>,
}

impl LiftReport {
    pub fn passes_everywhere(&self) -> bool {
        self.cubes.iter().all(CubeLiftReport::passes)
    }

    /// Every cube with a non-empty fiber passes.
    pub fn passes_on_support(&self) -> bool {
        self.cubes
            .iter()
            .filter(|r| r.fiber_size > 0)
            .all(CubeLiftReport::passes)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CubeLiftReport> {
        self.cubes.iter().filter(|r| !r.passes())
    }
}

/// For every cube of dimension at most one, checks that each one-dimensional
/// germ running along edges of the base lies inside some germ of the fiber.
/// One-dimensional germs entering higher cubes are not inspected.
pub fn local_lift_report(b: &BlowupComplex) -> Result<LiftReport, BlowupError> {
    let p = b.base();
    let mut cubes = Vec::new();
    for c in p.all_cells().filter(|c| c.dim <= 1) {
        let sd = crate::subdivision::Subdivider::new(p, crate::blowup::GERM_FACTOR);
        let lines: Vec<_> = fiber(p, c, 1)?
            .into_iter()
            .filter(|q| {
                q.spanned
                    .iter()
                    .all(|k| sd.parse(k).is_ok_and(|e| e.base.dim <= 1))
            })
            .collect();
        let germs: Vec<BTreeSet<&str>> = b
            .fiber(c)
            .iter()
            .map(|q| q.spanned.iter().map(String::as_str).collect())
            .collect();
        let covered = lines
            .iter()
            .filter(|l| {
                germs
                    .iter()
                    .any(|g| l.spanned.iter().all(|k| g.contains(k.as_str())))
            })
            .count();
        cubes.push(CubeLiftReport {
            cube: c,
            fiber_size: b.fiber_size(c),
            line_germs: lines.len(),
            covered,
        });
    }
    Ok(LiftReport { cubes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::build_blowup;
    use crate::pcs::{axis_cross, interval, tensor};

    fn cells(p: &PrecubicalSet, keys: &[&str]) -> Vec<Cell> {
        keys.iter().map(|k| p.cell(k).unwrap()).collect()
    }

    #[test]
    fn words_between_orders() {
        assert_eq!(
            original_directions(&[(0, Sign::Minus), (0, Sign::Minus)]),
            vec![0, 1]
        );
        assert_eq!(
            original_directions(&[(1, Sign::Plus), (0, Sign::Plus)]),
            vec![0, 1]
        );
        assert_eq!(original_directions(&[(2, Sign::Plus)]), vec![2]);
        assert_eq!(
            ascending_word(&[0, 2], Sign::Plus),
            vec![(0, Sign::Plus), (1, Sign::Plus)]
        );
        assert_eq!(
            descending_word(&[0, 2], Sign::Plus),
            vec![(2, Sign::Plus), (0, Sign::Plus)]
        );
    }

    #[test]
    fn validation() {
        let sq = tensor(&interval(), &interval());
        let path = CubePath::through(&sq, &cells(&sq, &["(0,0)", "(0>1,0>1)", "(1,1)"])).unwrap();
        assert_eq!(
            path.moves[0].faces,
            vec![(0, Sign::Minus), (0, Sign::Minus)]
        );
        assert!(validate_path(&sq, &path).is_ok());
        let mut bad = path.clone();
        bad.moves[1].faces = vec![(0, Sign::Minus), (0, Sign::Minus)];
        assert!(matches!(
            validate_path(&sq, &bad).violations[..],
            [PathViolation::WrongSign { step: 1 }]
        ));
        bad.moves[1].kind = MoveKind::Up;
        assert!(!validate_path(&sq, &bad).is_ok());
        assert!(CubePath::through(&sq, &cells(&sq, &["(1,1)", "(0>1,0>1)"])).is_none());
    }

    #[test]
    fn json_shape() {
        let sq = tensor(&interval(), &interval());
        let path = CubePath::through(&sq, &cells(&sq, &["(0,0)", "(0>1,0)"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&path.to_json()).unwrap();
        assert_eq!(v["moves"][0]["kind"], "up");
        assert_eq!(v["moves"][0]["faces"][0][1], "-");
        assert_eq!(CubePath::from_json(&path.to_json()).unwrap(), path);
    }

    #[test]
    fn straight_through_the_cross() {
        let g = axis_cross(2);
        let b = build_blowup(&g, 1).unwrap();
        let path = CubePath::through(&g, &cells(&g, &["(-1>0,0)", "(0,0)", "(0>1,0)"])).unwrap();
        let lifts = lift_path(&b, &path).unwrap();
        assert_eq!(lifts.len(), 1);
        assert!(is_lift(&b, &path, &lifts[0]));
        assert_eq!(count_lifts(&b, &path).unwrap(), 1);
        let turn = CubePath::through(&g, &cells(&g, &["(-1>0,0)", "(0,0)", "(0,0>1)"])).unwrap();
        assert_eq!(count_lifts(&b, &turn).unwrap(), 1);
    }

    #[test]
    fn graph_reports_pass() {
        let g = axis_cross(2);
        let b = build_blowup(&g, 1).unwrap();
        let r = local_lift_report(&b).unwrap();
        assert!(r.passes_everywhere());
    }
}
