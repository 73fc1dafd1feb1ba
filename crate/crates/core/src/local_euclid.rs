//! Local grid structures at a vertex.
//!
//! A grid germ of dimension `n` at a vertex `v` consists of `n` axes, each an
//! in-edge and an out-edge at `v`, and for every sign tuple (a choice of in or out
//! on a subset of the axes) a filler cube adjacent to `v` whose edges at `v` are
//! exactly the chosen ones. Faces of fillers at `v` must be the fillers of the
//! sub-tuples, and the subobject spanned by the fillers must be a copy of the
//! triple grid `(. -> . -> .)^n` centred at `v`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iso::SymmetricMap;
use crate::pcs::{grid_window, parse_grid_key, Cell, GridCoord, PrecubicalSet, Sign};
use crate::subdivision::{local_star, SubdividedCube, Subdivider, Subdivision};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LocalError {
    #[error("`{0}` is not a vertex")]
    NotAVertex(String),
    #[error("`{vertex}` is not a vertex of `{cube}`")]
    NotOnCube { vertex: String, cube: String },
    #[error("`{vertex}` sits at several corners of `{cube}`")]
    NotSimple { vertex: String, cube: String },
    #[error("unknown cube `{0}`")]
    UnknownCube(String),
    #[error("malformed germ: {0}")]
    Malformed(String),
    #[error("grid certificate failed: {0}")]
    Certificate(String),
    #[error("grid embedding is not injective")]
    NotInjective,
}

/// Corner positions of `v` in `c`: every corner (sign per direction) whose vertex is `v`.
pub fn positions(p: &PrecubicalSet, v: Cell, c: Cell) -> Result<BTreeSet<Vec<Sign>>, LocalError> {
    if v.dim != 0 {
        return Err(LocalError::NotAVertex(p.key(v).to_string()));
    }
    let out: BTreeSet<Vec<Sign>> = (0..1usize << c.dim)
        .map(|mask| crate::pcs::corner_signs(mask, c.dim))
        .filter(|q| p.corner(c, q) == v)
        .collect();
    if out.is_empty() {
        return Err(LocalError::NotOnCube {
            vertex: p.key(v).to_string(),
            cube: p.key(c).to_string(),
        });
    }
    Ok(out)
}

/// Cubes other than `v` having `v` as an iterated face.
pub fn neighborhood(p: &PrecubicalSet, v: Cell) -> BTreeSet<Cell> {
    p.upper_star(v)
}

/// Whether `v` occupies at most one corner of every adjacent cube of dimension `<= k`.
pub fn simplicity(p: &PrecubicalSet, v: Cell, k: usize) -> bool {
    neighborhood(p, v)
        .into_iter()
        .filter(|c| c.dim <= k)
        .all(|c| positions(p, v, c).is_ok_and(|s| s.len() <= 1))
}

/// The face of `c` through the corner `q` spanned by the directions in `keep`.
pub fn face_at_corner(p: &PrecubicalSet, mut c: Cell, q: &[Sign], keep: &[bool]) -> Cell {
    for dir in (0..q.len()).rev() {
        if !keep[dir] {
            c = p.face(c, dir, q[dir]);
        }
    }
    c
}

/// The edge of `c` at corner `q` in direction `j`.
pub fn edge_at_corner(p: &PrecubicalSet, c: Cell, q: &[Sign], j: usize) -> Cell {
    let keep: Vec<bool> = (0..q.len()).map(|d| d == j).collect();
    face_at_corner(p, c, q, &keep)
}

/// Choice of in (`-1`), out (`+1`) or nothing (`0`) for each axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignTuple(pub Vec<i8>);

impl SignTuple {
    pub fn support(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    pub fn without(&self, axis: usize) -> SignTuple {
        let mut t = self.0.clone();
        t[axis] = 0;
        SignTuple(t)
    }
}

impl fmt::Display for SignTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            let c = match s {
                -1 => '-',
                1 => '+',
                _ => '0',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for SignTuple {
    type Err = LocalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '-' => Ok(-1),
                '+' => Ok(1),
                '0' => Ok(0),
                _ => Err(LocalError::Malformed(format!("sign tuple `{s}`"))),
            })
            .collect::<Result<Vec<i8>, _>>()
            .map(SignTuple)
    }
}

/// All non-empty sign tuples on `n` axes, by support size then lexicographically.
pub fn sign_tuples(n: usize) -> Vec<SignTuple> {
    let mut all: Vec<SignTuple> = Vec::new();
    let mut acc: Vec<Vec<i8>> = vec![Vec::new()];
    for _ in 0..n {
        acc = acc
            .into_iter()
            .flat_map(|t| {
                [-1i8, 0, 1].into_iter().map(move |s| {
                    let mut t = t.clone();
                    t.push(s);
                    t
                })
            })
            .collect();
    }
    for t in acc {
        let t = SignTuple(t);
        if t.support() > 0 {
            all.push(t);
        }
    }
    all.sort_by(|a, b| a.support().cmp(&b.support()).then(a.cmp(b)));
    all
}

/// A grid germ: center, axes and fillers, named by cube keys of the ambient set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lps {
    pub n: usize,
    pub center: String,
    /// `(in-edge, out-edge)` per axis.
    pub axes: Vec<(String, String)>,
    /// Filler per non-empty sign tuple; singletons are the axis edges.
    pub fillers: BTreeMap<SignTuple, String>,
    /// Sorted keys of the spanned subobject.
    pub spanned: Vec<String>,
}

/// Serialized form of an [`Lps`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpsRecord {
    pub center: String,
    pub axes: Vec<[String; 2]>,
    pub fillers: BTreeMap<String, String>,
}

impl Lps {
    pub fn contains(&self, key: &str) -> bool {
        self.spanned
            .binary_search_by(|k| k.as_str().cmp(key))
            .is_ok()
    }

    pub fn record(&self) -> LpsRecord {
        LpsRecord {
            center: self.center.clone(),
            axes: self
                .axes
                .iter()
                .map(|(a, b)| [a.clone(), b.clone()])
                .collect(),
            fillers: self
                .fillers
                .iter()
                .map(|(t, c)| (t.to_string(), c.clone()))
                .collect(),
        }
    }

    /// Rebuilds a germ from its record, recomputing the span in `ambient`.
    pub fn from_record(rec: &LpsRecord, ambient: &PrecubicalSet) -> Result<Lps, LocalError> {
        let n = rec.axes.len();
        let mut fillers = BTreeMap::new();
        for (t, c) in &rec.fillers {
            let t: SignTuple = t.parse()?;
            if t.0.len() != n {
                return Err(LocalError::Malformed(format!(
                    "tuple `{t}` has the wrong length"
                )));
            }
            fillers.insert(t, c.clone());
        }
        let mut seeds = vec![rec.center.clone()];
        seeds.extend(fillers.values().cloned());
        let cells = seeds
            .iter()
            .map(|k| {
                ambient
                    .cell(k)
                    .ok_or_else(|| LocalError::UnknownCube(k.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Lps {
            n,
            center: rec.center.clone(),
            axes: rec
                .axes
                .iter()
                .map(|[a, b]| (a.clone(), b.clone()))
                .collect(),
            fillers,
            spanned: sorted_keys(ambient, &ambient.closure(cells)),
        })
    }

    /// Checks the axis and filler conditions in `ambient`.
    pub fn check(&self, ambient: &PrecubicalSet) -> Result<(), LocalError> {
        let cell = |k: &str| {
            ambient
                .cell(k)
                .ok_or_else(|| LocalError::UnknownCube(k.to_string()))
        };
        let center = cell(&self.center)?;
        let mut edges = BTreeSet::new();
        for (a, (i, o)) in self.axes.iter().enumerate() {
            let (i, o) = (cell(i)?, cell(o)?);
            if i.dim != 1 || o.dim != 1 {
                return Err(LocalError::Malformed(format!(
                    "axis {a} is not a pair of edges"
                )));
            }
            if ambient.face(i, 0, Sign::Plus) != center || ambient.face(o, 0, Sign::Minus) != center
            {
                return Err(LocalError::Malformed(format!(
                    "axis {a} does not meet the center"
                )));
            }
            edges.insert(i);
            edges.insert(o);
        }
        if edges.len() != 2 * self.n {
            return Err(LocalError::Malformed("axis edges are not distinct".into()));
        }
        let tuples = sign_tuples(self.n);
        if tuples.len() != self.fillers.len() {
            return Err(LocalError::Malformed("wrong number of fillers".into()));
        }
        for t in &tuples {
            let f = cell(
                self.fillers
                    .get(t)
                    .ok_or_else(|| LocalError::Malformed(format!("no filler for `{t}`")))?,
            )?;
            let pos = positions(ambient, center, f)?;
            if pos.len() != 1 {
                return Err(LocalError::NotSimple {
                    vertex: self.center.clone(),
                    cube: ambient.key(f).to_string(),
                });
            }
            let q = pos.into_iter().next().expect("one position");
            let mut want: BTreeSet<Cell> = BTreeSet::new();
            for (a, &s) in t.0.iter().enumerate() {
                if s != 0 {
                    let (i, o) = &self.axes[a];
                    want.insert(cell(if s < 0 { i } else { o })?);
                }
            }
            let got: BTreeSet<Cell> = (0..f.dim)
                .map(|j| edge_at_corner(ambient, f, &q, j))
                .collect();
            if got != want || f.dim != t.support() {
                return Err(LocalError::Malformed(format!(
                    "filler of `{t}` has the wrong edges"
                )));
            }
            for j in 0..f.dim {
                let e = edge_at_corner(ambient, f, &q, j);
                let a = self.axis_of_edge(ambient.key(e)).expect("edge on an axis");
                if t.support() > 1 {
                    let face = ambient.face(f, j, q[j]);
                    if ambient.key(face) != self.fillers[&t.without(a)] {
                        return Err(LocalError::Malformed(format!(
                            "face of the filler of `{t}` is not a filler"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn axis_of_edge(&self, key: &str) -> Option<usize> {
        self.axes.iter().position(|(i, o)| i == key || o == key)
    }

    /// Direction-to-axis table of every filler, with the corner of the center.
    fn filler_frames(
        &self,
        ambient: &PrecubicalSet,
    ) -> Result<BTreeMap<SignTuple, (Cell, Vec<usize>)>, LocalError> {
        let center = ambient
            .cell(&self.center)
            .ok_or_else(|| LocalError::UnknownCube(self.center.clone()))?;
        let mut out = BTreeMap::new();
        for (t, key) in &self.fillers {
            let f = ambient
                .cell(key)
                .ok_or_else(|| LocalError::UnknownCube(key.clone()))?;
            let pos = positions(ambient, center, f)?;
            if pos.len() != 1 {
                return Err(LocalError::NotSimple {
                    vertex: self.center.clone(),
                    cube: key.clone(),
                });
            }
            let q = pos.into_iter().next().expect("one position");
            let dir_axis = (0..f.dim)
                .map(|j| {
                    let e = edge_at_corner(ambient, f, &q, j);
                    self.axis_of_edge(ambient.key(e)).ok_or_else(|| {
                        LocalError::Malformed(format!("filler `{key}` leaves the axes"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.insert(t.clone(), (f, dir_axis));
        }
        Ok(out)
    }

    /// Builds the grid map `(. -> . -> .)^n -> ambient` determined by the fillers and
    /// checks that it is an injective symmetric morphism.
    pub fn certify(&self, ambient: &PrecubicalSet) -> Result<SymmetricMap, LocalError> {
        let center = ambient
            .cell(&self.center)
            .ok_or_else(|| LocalError::UnknownCube(self.center.clone()))?;
        let grid = triple_grid(self.n);
        let frames = self.filler_frames(ambient)?;
        let table = grid_table(&grid, self.n, |tuple, far| {
            if tuple.support() == 0 {
                return Ok((center, Vec::new()));
            }
            let (f, dir_axis) = &frames[tuple];
            let mut c = *f;
            let mut dirs: Vec<usize> = (0..f.dim).collect();
            for j in (0..f.dim).rev() {
                let a = dir_axis[j];
                if far[a] {
                    let sign = if tuple.0[a] < 0 {
                        Sign::Minus
                    } else {
                        Sign::Plus
                    };
                    c = ambient.face(c, j, sign);
                    dirs.remove(j);
                }
            }
            let axes: Vec<usize> = dirs.iter().map(|&j| dir_axis[j]).collect();
            Ok((c, axes))
        })?;
        let map = SymmetricMap::from_table(table);
        map.check(&grid, ambient).map_err(LocalError::Certificate)?;
        if !map.is_injective() {
            return Err(LocalError::NotInjective);
        }
        Ok(map)
    }
}

fn sorted_keys(p: &PrecubicalSet, cells: &BTreeSet<Cell>) -> Vec<String> {
    let mut keys: Vec<String> = cells.iter().map(|&c| p.key(c).to_string()).collect();
    keys.sort();
    keys
}

/// `(. -> . -> .)^n`, a single vertex for `n = 0`.
pub fn triple_grid(n: usize) -> PrecubicalSet {
    if n == 0 {
        let mut b = crate::pcs::PcsBuilder::new();
        b.vertex("()");
        return b.build().expect("point");
    }
    grid_window(n, 1)
}

/// Per-axis sign and far-end flag of a triple-grid cube.
fn grid_shape(coords: &[GridCoord]) -> (SignTuple, Vec<bool>) {
    let mut signs = Vec::with_capacity(coords.len());
    let mut far = Vec::with_capacity(coords.len());
    for c in coords {
        let (s, f) = match *c {
            GridCoord::Vertex(0) => (0, false),
            GridCoord::Vertex(x) => (x.signum() as i8, true),
            GridCoord::Edge(-1) => (-1, false),
            GridCoord::Edge(_) => (1, false),
        };
        signs.push(s);
        far.push(f);
    }
    (SignTuple(signs), far)
}

/// Fills the image table of a map out of the triple grid. `image(tuple, far)`
/// returns the target cube and, for each of its directions in order, the axis
/// it realizes.
fn grid_table(
    grid: &PrecubicalSet,
    n: usize,
    mut image: impl FnMut(&SignTuple, &[bool]) -> Result<(Cell, Vec<usize>), LocalError>,
) -> Result<Vec<Vec<(Cell, Vec<usize>)>>, LocalError> {
    let mut table = Vec::new();
    for dim in 0..=grid.dim() {
        let mut level = Vec::with_capacity(grid.count(dim));
        for x in grid.cells(dim) {
            let (tuple, far) = if n == 0 {
                (SignTuple(Vec::new()), Vec::new())
            } else {
                let coords = parse_grid_key(grid.key(x)).expect("grid key");
                grid_shape(&coords)
            };
            let (y, axes) = image(&tuple, &far)?;
            // Directions of x are its edge coordinates in axis order.
            let x_axes: Vec<usize> = (0..n).filter(|&a| tuple.0[a] != 0 && !far[a]).collect();
            let perm = x_axes
                .iter()
                .map(|a| {
                    axes.iter()
                        .position(|b| b == a)
                        .ok_or_else(|| LocalError::Certificate("axis lost in the image".into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            level.push((y, perm));
        }
        table.push(level);
    }
    Ok(table)
}

struct CenterData {
    /// Corner of the center and center edges per direction, for adjacent cubes of
    /// dimension at least 2 with distinct center edges.
    frames: HashMap<Cell, (Vec<Sign>, Vec<Cell>)>,
    buckets: HashMap<Vec<Cell>, Vec<Cell>>,
    ins: Vec<Cell>,
    outs: Vec<Cell>,
}

fn center_data(p: &PrecubicalSet, v: Cell, n: usize) -> Result<CenterData, LocalError> {
    let mut data = CenterData {
        frames: HashMap::new(),
        buckets: HashMap::new(),
        ins: Vec::new(),
        outs: Vec::new(),
    };
    for c in neighborhood(p, v) {
        if c.dim > n {
            continue;
        }
        let pos = positions(p, v, c)?;
        if pos.len() > 1 {
            return Err(LocalError::NotSimple {
                vertex: p.key(v).to_string(),
                cube: p.key(c).to_string(),
            });
        }
        let q = pos.into_iter().next().expect("one position");
        if c.dim == 1 {
            if q[0] == Sign::Plus {
                data.ins.push(c);
            } else {
                data.outs.push(c);
            }
            continue;
        }
        let edges: Vec<Cell> = (0..c.dim).map(|j| edge_at_corner(p, c, &q, j)).collect();
        let mut key = edges.clone();
        key.sort();
        key.dedup();
        if key.len() == c.dim {
            data.buckets.entry(key).or_default().push(c);
            data.frames.insert(c, (q, edges));
        }
    }
    Ok(data)
}

fn combinations(items: &[Cell], k: usize) -> Vec<Vec<Cell>> {
    fn rec(items: &[Cell], k: usize, start: usize, acc: &mut Vec<Cell>, out: &mut Vec<Vec<Cell>>) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for i in start..items.len() {
            acc.push(items[i]);
            rec(items, k, i + 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

fn arrangements(items: &[Cell], k: usize) -> Vec<Vec<Cell>> {
    fn rec(
        items: &[Cell],
        k: usize,
        used: &mut Vec<bool>,
        acc: &mut Vec<Cell>,
        out: &mut Vec<Vec<Cell>>,
    ) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                acc.push(items[i]);
                rec(items, k, used, acc, out);
                acc.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(
        items,
        k,
        &mut vec![false; items.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn tuple_edges(axes: &[(Cell, Cell)], t: &SignTuple) -> Vec<Cell> {
    let mut e: Vec<Cell> =
        t.0.iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(a, &s)| if s < 0 { axes[a].0 } else { axes[a].1 })
            .collect();
    e.sort();
    e
}

/// Every grid germ of dimension `n` centred at `v`, deduplicated by spanned set and
/// ordered by the sorted key lists of the spans. Adjacent cubes of dimension
/// `<= n` must meet `v` at one corner only.
pub fn grid_germs_at(p: &PrecubicalSet, v: Cell, n: usize) -> Result<Vec<Lps>, LocalError> {
    if v.dim != 0 {
        return Err(LocalError::NotAVertex(p.key(v).to_string()));
    }
    if n == 0 {
        return Ok(vec![Lps {
            n: 0,
            center: p.key(v).to_string(),
            axes: Vec::new(),
            fillers: BTreeMap::new(),
            spanned: vec![p.key(v).to_string()],
        }]);
    }
    let data = center_data(p, v, n)?;
    let tuples: Vec<SignTuple> = sign_tuples(n)
        .into_iter()
        .filter(|t| t.support() >= 2)
        .collect();
    let expected = 5usize.pow(n as u32);
    let mut found: BTreeMap<Vec<String>, Lps> = BTreeMap::new();
    for ins in combinations(&data.ins, n) {
        for outs in arrangements(&data.outs, n) {
            let axes: Vec<(Cell, Cell)> = ins.iter().copied().zip(outs.iter().copied()).collect();
            let mut fillers: HashMap<SignTuple, Cell> = HashMap::new();
            for (a, &(i, o)) in axes.iter().enumerate() {
                let mut t = vec![0i8; n];
                t[a] = -1;
                fillers.insert(SignTuple(t.clone()), i);
                t[a] = 1;
                fillers.insert(SignTuple(t), o);
            }
            let mut ctx = FillSearch {
                p,
                data: &data,
                axes: &axes,
                tuples: &tuples,
                fillers,
                expected,
                found: &mut found,
                center: v,
                n,
            };
            ctx.run(0);
        }
    }
    Ok(found.into_values().collect())
}

struct FillSearch<'a> {
    p: &'a PrecubicalSet,
    data: &'a CenterData,
    axes: &'a [(Cell, Cell)],
    tuples: &'a [SignTuple],
    fillers: HashMap<SignTuple, Cell>,
    expected: usize,
    found: &'a mut BTreeMap<Vec<String>, Lps>,
    center: Cell,
    n: usize,
}

impl FillSearch<'_> {
    fn axis_of(&self, e: Cell) -> usize {
        self.axes
            .iter()
            .position(|&(i, o)| i == e || o == e)
            .expect("edge on an axis")
    }

    fn run(&mut self, pos: usize) {
        if pos == self.tuples.len() {
            self.finish();
            return;
        }
        let t = self.tuples[pos].clone();
        let Some(cands) = self.data.buckets.get(&tuple_edges(self.axes, &t)) else {
            return;
        };
        for &c in cands {
            let (q, edges) = &self.data.frames[&c];
            let coherent = (0..c.dim).all(|j| {
                let a = self.axis_of(edges[j]);
                let face = self.p.face(c, j, q[j]);
                self.fillers.get(&t.without(a)) == Some(&face)
            });
            if coherent {
                self.fillers.insert(t.clone(), c);
                self.run(pos + 1);
                self.fillers.remove(&t);
            }
        }
    }

    fn finish(&mut self) {
        let tops: Vec<Cell> = self
            .fillers
            .iter()
            .filter(|(t, _)| t.support() == self.n)
            .map(|(_, &c)| c)
            .collect();
        let span = self.p.closure(tops);
        if span.len() != self.expected {
            return;
        }
        let spanned = sorted_keys(self.p, &span);
        if self.found.contains_key(&spanned) {
            return;
        }
        let key = |c: Cell| self.p.key(c).to_string();
        let lps = Lps {
            n: self.n,
            center: key(self.center),
            axes: self.axes.iter().map(|&(i, o)| (key(i), key(o))).collect(),
            fillers: self
                .fillers
                .iter()
                .map(|(t, &c)| (t.clone(), key(c)))
                .collect(),
            spanned: spanned.clone(),
        };
        self.found.insert(spanned, lps);
    }
}

/// Grid germs of dimension `n` at the midpoint of `c`, computed inside
/// `local_star(P, 6, m(c), 1)`. Empty when `0 < n < dim c`; for `n = 0` the
/// only germ is the point `m(c)` itself.
pub fn enumerate_lps(p: &PrecubicalSet, c: Cell, n: usize) -> Result<Vec<Lps>, LocalError> {
    if n > 0 && c.dim > n {
        return Ok(Vec::new());
    }
    let sd = Subdivider::new(p, 6);
    let m = sd.midpoint(c).expect("6 is even");
    let star = local_star(p, 6, &m, 1);
    let center = star.cell_of(&m).expect("center lies in its star");
    let germs = grid_germs_at(star.set(), center, n)?;
    debug_assert!(germs.iter().all(|g| g.certify(star.set()).is_ok()));
    Ok(germs)
}

/// Recognizes a grid germ at `v` spanned by the whole neighbourhood of `v`.
///
/// `v` must have exactly `n` in-edges and `n` out-edges, each in-edge pairs with
/// the unique out-edge it shares no square with, every admissible sign tuple has
/// exactly one filler and nothing else is adjacent to `v`. Fails when `v` meets an
/// adjacent cube of dimension `<= n` at several corners.
pub fn detect_lps(p: &PrecubicalSet, v: Cell, n: usize) -> Result<Option<Lps>, LocalError> {
    if v.dim != 0 {
        return Err(LocalError::NotAVertex(p.key(v).to_string()));
    }
    let nb = neighborhood(p, v);
    if nb.iter().any(|c| c.dim > n) {
        return Ok(None);
    }
    if !simplicity(p, v, n) {
        let bad = nb
            .iter()
            .find(|&&c| positions(p, v, c).is_ok_and(|s| s.len() > 1))
            .expect("a non-simple cube");
        return Err(LocalError::NotSimple {
            vertex: p.key(v).to_string(),
            cube: p.key(*bad).to_string(),
        });
    }
    let data = center_data(p, v, n)?;
    if data.ins.len() != n || data.outs.len() != n {
        return Ok(None);
    }
    if nb.len() != 3usize.pow(n as u32) - 1 {
        return Ok(None);
    }
    let mut axes = Vec::with_capacity(n);
    for &i in &data.ins {
        let partners: Vec<Cell> = if n == 1 {
            data.outs.clone()
        } else {
            data.outs
                .iter()
                .copied()
                .filter(|&o| {
                    let mut k = vec![i, o];
                    k.sort();
                    !data.buckets.contains_key(&k)
                })
                .collect()
        };
        if partners.len() != 1 {
            return Ok(None);
        }
        axes.push((i, partners[0]));
    }
    let distinct: BTreeSet<Cell> = axes.iter().map(|a| a.1).collect();
    if distinct.len() != n {
        return Ok(None);
    }
    let mut fillers = BTreeMap::new();
    for t in sign_tuples(n) {
        let c = if t.support() == 1 {
            let a = t.0.iter().position(|&s| s != 0).expect("support");
            if t.0[a] < 0 {
                axes[a].0
            } else {
                axes[a].1
            }
        } else {
            match data.buckets.get(&tuple_edges(&axes, &t)) {
                Some(cs) if cs.len() == 1 => cs[0],
                _ => return Ok(None),
            }
        };
        fillers.insert(t, p.key(c).to_string());
    }
    let mut seeds: BTreeSet<Cell> = nb.clone();
    seeds.insert(v);
    let key = |c: Cell| p.key(c).to_string();
    Ok(Some(Lps {
        n,
        center: key(v),
        axes: axes.iter().map(|&(i, o)| (key(i), key(o))).collect(),
        fillers,
        spanned: sorted_keys(p, &p.closure(seeds)),
    }))
}

/// The explicit grid map of a detected germ into the 3-subdivision.
#[derive(Clone, Debug)]
pub struct GridEmbedding {
    pub grid: PrecubicalSet,
    pub star: Subdivision,
    pub map: SymmetricMap,
}

impl GridEmbedding {
    /// Keys of the image cubes in `(1/3)P`.
    pub fn image_keys(&self) -> Vec<String> {
        sorted_keys(self.star.set(), &self.map.image_set())
    }
}

/// Sends the center to `v`, the in-edge of an axis to the last third of that edge
/// and the out-edge to its first third; a filler of a sign tuple goes to the
/// element of its cube at `5/6` on in-axes and `1/6` on out-axes.
pub fn embed_lps(lps: &Lps, p: &PrecubicalSet) -> Result<GridEmbedding, LocalError> {
    let v = p
        .cell(&lps.center)
        .ok_or_else(|| LocalError::UnknownCube(lps.center.clone()))?;
    let sd = Subdivider::new(p, 3);
    let star = local_star(p, 3, &sd.vertex(v), 1);
    let grid = triple_grid(lps.n);
    let frames = lps.filler_frames(p)?;
    let table = grid_table(&grid, lps.n, |tuple, far| {
        if tuple.support() == 0 {
            let c = star.cell_of(&sd.vertex(v)).expect("center in star");
            return Ok((c, Vec::new()));
        }
        let (f, dir_axis) = &frames[tuple];
        let coords = dir_axis
            .iter()
            .map(|&a| if tuple.0[a] < 0 { 5 } else { 1 })
            .collect();
        let mut e = SubdividedCube { base: *f, coords };
        let mut axes: Vec<usize> = dir_axis.clone();
        for j in (0..f.dim).rev() {
            let a = dir_axis[j];
            if far[a] {
                let sign = if tuple.0[a] < 0 {
                    Sign::Minus
                } else {
                    Sign::Plus
                };
                e = sd.face(&e, j, sign);
                axes.remove(j);
            }
        }
        let c = star
            .cell_of(&e)
            .ok_or_else(|| LocalError::Certificate(format!("`{}` outside the star", sd.key(&e))))?;
        Ok((c, axes))
    })?;
    let map = SymmetricMap::from_table(table);
    map.check(&grid, star.set())
        .map_err(LocalError::Certificate)?;
    if !map.is_injective() {
        return Err(LocalError::NotInjective);
    }
    Ok(GridEmbedding { grid, star, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcs::{axis_cross, interval, loop_graph, tensor, triple_interval};
    use crate::subdivision::subdivide;

    #[test]
    fn positions_and_simplicity() {
        let l = loop_graph();
        let v = l.cell("v").unwrap();
        let e = l.cell("v>v").unwrap();
        assert_eq!(positions(&l, v, e).unwrap().len(), 2);
        assert!(!simplicity(&l, v, 1));
        let sub = subdivide(&l, 2);
        for w in sub.set().vertices() {
            assert!(simplicity(sub.set(), w, 1));
        }
        let sq = tensor(&interval(), &interval());
        let c = sq.cells(2).next().unwrap();
        let min = sq.cell("(0,0)").unwrap();
        assert_eq!(
            positions(&sq, min, c).unwrap(),
            BTreeSet::from([vec![Sign::Minus, Sign::Minus]])
        );
    }

    #[test]
    fn neighborhoods() {
        let g = axis_cross(2);
        assert_eq!(neighborhood(&g, g.cell("(0,0)").unwrap()).len(), 4);
        let t = grid_window(2, 1);
        assert_eq!(neighborhood(&t, t.cell("(0,0)").unwrap()).len(), 8);
    }

    #[test]
    fn sign_tuple_text() {
        let t: SignTuple = "-0+".parse().unwrap();
        assert_eq!(t, SignTuple(vec![-1, 0, 1]));
        assert_eq!(t.to_string(), "-0+");
        assert_eq!(sign_tuples(2).len(), 8);
    }

    #[test]
    fn detect_on_grids() {
        for n in 1..=3 {
            let g = grid_window(n, 1);
            let center = g.cell(&format!("({})", vec!["0"; n].join(","))).unwrap();
            let lps = detect_lps(&g, center, n).unwrap().expect("grid center");
            assert_eq!(lps.spanned.len(), g.len());
            lps.check(&g).unwrap();
            lps.certify(&g).unwrap();
        }
        let cross = axis_cross(2);
        assert!(detect_lps(&cross, cross.cell("(0,0)").unwrap(), 1)
            .unwrap()
            .is_none());
    }

    #[test]
    fn detect_rejects_non_simple() {
        let l = loop_graph();
        assert!(matches!(
            detect_lps(&l, l.cell("v").unwrap(), 1),
            Err(LocalError::NotSimple { .. })
        ));
    }

    #[test]
    fn embedding_of_a_line() {
        let line = triple_interval();
        let v = line.cell("0").unwrap();
        let lps = detect_lps(&line, v, 1).unwrap().unwrap();
        let emb = embed_lps(&lps, &line).unwrap();
        assert_eq!(
            emb.image_keys(),
            vec![
                "-1>0@(4)/6",
                "-1>0@(5)/6",
                "0>1@(1)/6",
                "0>1@(2)/6",
                "0@()/6"
            ]
        );
    }

    #[test]
    fn embedding_of_a_plane() {
        let g = grid_window(2, 1);
        let v = g.cell("(0,0)").unwrap();
        let lps = detect_lps(&g, v, 2).unwrap().unwrap();
        let emb = embed_lps(&lps, &g).unwrap();
        let squares: Vec<String> = emb
            .map
            .image_set()
            .into_iter()
            .filter(|c| c.dim == 2)
            .map(|c| emb.star.set().key(c).to_string())
            .collect();
        assert_eq!(squares.len(), 4);
        for k in squares {
            let coords = k.split('@').nth(1).unwrap();
            assert!(
                ["(1,1)/6", "(1,5)/6", "(5,1)/6", "(5,5)/6"].contains(&coords),
                "{k}"
            );
        }
    }

    #[test]
    fn cross_center_has_four_line_germs() {
        let g = axis_cross(2);
        let center = g.cell("(0,0)").unwrap();
        assert_eq!(enumerate_lps(&g, center, 1).unwrap().len(), 4);
        let edge = g.cell("(0>1,0)").unwrap();
        assert_eq!(enumerate_lps(&g, edge, 1).unwrap().len(), 1);
        let leaf = g.cell("(1,0)").unwrap();
        assert!(enumerate_lps(&g, leaf, 1).unwrap().is_empty());
        assert_eq!(enumerate_lps(&g, edge, 0).unwrap().len(), 1);
    }
}
