//! The `s`-subdivision of a precubical set.
//!
//! An element of `(1/s)P` is a base cube `x` of `P` with one coordinate per
//! direction of `x`, stored as an integer numerator over `2s` in `1..2s`. Odd
//! numerators are arrow coordinates (the element extends along that axis), even
//! ones are vertex coordinates. Face `i` of an element acts on its `i`-th arrow
//! coordinate: it moves one step inward, or drops the coordinate and descends to
//! the corresponding face of the base cube when the coordinate touches the
//! boundary.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::pcs::{Cell, Level, PrecubicalSet, Sign};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubdivisionError {
    #[error("midpoints need an even subdivision factor, got {0}")]
    OddFactor(u32),
    #[error("malformed subdivided key `{0}`")]
    BadKey(String),
    #[error("unknown base cube `{0}`")]
    UnknownBase(String),
    #[error("`{0}` is not an element of this subdivision")]
    UnknownElement(String),
    #[error("`{0}` is not a vertex")]
    NotAVertex(String),
}

/// `(base, coords)` with numerators over `2s`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubdividedCube {
    pub base: Cell,
    pub coords: Vec<u32>,
}

impl SubdividedCube {
    pub fn dim(&self) -> usize {
        self.coords.iter().filter(|&&t| t % 2 == 1).count()
    }

    pub fn is_vertex(&self) -> bool {
        self.dim() == 0
    }

    /// Position among `coords` of arrow coordinate number `i`.
    pub fn arrow_position(&self, i: usize) -> usize {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, &t)| t % 2 == 1)
            .nth(i)
            .map(|(j, _)| j)
            .expect("arrow index in range")
    }
}

/// Face maps and naming for `(1/s)P` without materializing it.
#[derive(Clone, Copy, Debug)]
pub struct Subdivider<'a> {
    base: &'a PrecubicalSet,
    s: u32,
}

impl<'a> Subdivider<'a> {
    pub fn new(base: &'a PrecubicalSet, s: u32) -> Self {
        assert!(s >= 1, "subdivision factor must be positive");
        Subdivider { base, s }
    }

    pub fn base(&self) -> &'a PrecubicalSet {
        self.base
    }

    pub fn factor(&self) -> u32 {
        self.s
    }

    pub fn denominator(&self) -> u32 {
        2 * self.s
    }

    pub fn face(&self, e: &SubdividedCube, i: usize, sign: Sign) -> SubdividedCube {
        let j = e.arrow_position(i);
        let t = e.coords[j];
        let top = self.denominator() - 1;
        match sign {
            Sign::Minus if t == 1 => self.drop_coordinate(e, j, Sign::Minus),
            Sign::Plus if t == top => self.drop_coordinate(e, j, Sign::Plus),
            Sign::Minus => {
                let mut coords = e.coords.clone();
                coords[j] -= 1;
                SubdividedCube {
                    base: e.base,
                    coords,
                }
            }
            Sign::Plus => {
                let mut coords = e.coords.clone();
                coords[j] += 1;
                SubdividedCube {
                    base: e.base,
                    coords,
                }
            }
        }
    }

    fn drop_coordinate(&self, e: &SubdividedCube, j: usize, sign: Sign) -> SubdividedCube {
        let mut coords = e.coords.clone();
        coords.remove(j);
        SubdividedCube {
            base: self.base.face(e.base, j, sign),
            coords,
        }
    }

    /// `"key@(t1,...,tk)/2s"`.
    pub fn key(&self, e: &SubdividedCube) -> String {
        let parts: Vec<String> = e.coords.iter().map(u32::to_string).collect();
        format!(
            "{}@({})/{}",
            self.base.key(e.base),
            parts.join(","),
            self.denominator()
        )
    }

    pub fn parse(&self, key: &str) -> Result<SubdividedCube, SubdivisionError> {
        let bad = || SubdivisionError::BadKey(key.to_string());
        let (base_key, rest) = key.rsplit_once('@').ok_or_else(bad)?;
        let (tuple, den) = rest.rsplit_once('/').ok_or_else(bad)?;
        if den.parse::<u32>().map_err(|_| bad())? != self.denominator() {
            return Err(bad());
        }
        let inner = tuple
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(bad)?;
        let coords: Vec<u32> = if inner.is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|p| p.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?
        };
        let base = self
            .base
            .cell(base_key)
            .ok_or_else(|| SubdivisionError::UnknownBase(base_key.to_string()))?;
        let top = self.denominator();
        if coords.len() != base.dim || coords.iter().any(|&t| t == 0 || t >= top) {
            return Err(bad());
        }
        Ok(SubdividedCube { base, coords })
    }

    /// The `(2s-1)^dim` elements over `base`.
    pub fn elements_over(&self, base: Cell) -> Vec<SubdividedCube> {
        let top = self.denominator();
        let mut out = vec![Vec::new()];
        for _ in 0..base.dim {
            out = out
                .into_iter()
                .flat_map(|t: Vec<u32>| {
                    (1..top).map(move |a| {
                        let mut t = t.clone();
                        t.push(a);
                        t
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|coords| SubdividedCube { base, coords })
            .collect()
    }

    /// `m(c)`, the vertex with every coordinate at one half.
    pub fn midpoint(&self, c: Cell) -> Result<SubdividedCube, SubdivisionError> {
        if self.s % 2 == 1 && c.dim > 0 {
            return Err(SubdivisionError::OddFactor(self.s));
        }
        Ok(SubdividedCube {
            base: c,
            coords: vec![self.s; c.dim],
        })
    }

    /// The copy in `(1/s)P` of a vertex of `P`.
    pub fn vertex(&self, v: Cell) -> SubdividedCube {
        assert_eq!(v.dim, 0);
        SubdividedCube {
            base: v,
            coords: Vec::new(),
        }
    }

    /// Every element having `w` as an iterated face, `w` excluded, sorted.
    ///
    /// The cubes of `P` containing `w.base` are walked upwards through cofaces;
    /// each upward embedding places the original coordinates of `w` and pins the
    /// new ones at `0` or `2s`. Adjacent cells then move each original coordinate
    /// by at most one step and each pinned coordinate one step inwards.
    pub fn vertex_star(&self, w: &SubdividedCube) -> Vec<SubdividedCube> {
        assert!(w.is_vertex(), "stars are taken at vertices");
        let top = self.denominator();
        let mut seen: HashSet<(Cell, Vec<u32>)> = HashSet::new();
        let mut queue = VecDeque::from([(w.base, w.coords.clone())]);
        seen.insert((w.base, w.coords.clone()));
        let mut embeddings = Vec::new();
        while let Some((d, tau)) = queue.pop_front() {
            for cf in self.base.cofaces(d) {
                let mut t2 = tau.clone();
                t2.insert(cf.dir, if cf.sign == Sign::Minus { 0 } else { top });
                if seen.insert((cf.cube, t2.clone())) {
                    queue.push_back((cf.cube, t2));
                }
            }
            embeddings.push((d, tau));
        }
        let mut out = BTreeSet::new();
        for (d, tau) in embeddings {
            let mut acc: Vec<Vec<u32>> = vec![Vec::new()];
            for &t in &tau {
                let options: Vec<u32> = if t == 0 {
                    vec![1]
                } else if t == top {
                    vec![top - 1]
                } else {
                    vec![t - 1, t, t + 1]
                };
                acc = acc
                    .into_iter()
                    .flat_map(|p| {
                        options.iter().map(move |&o| {
                            let mut p = p.clone();
                            p.push(o);
                            p
                        })
                    })
                    .collect();
            }
            for coords in acc {
                let e = SubdividedCube { base: d, coords };
                if e != *w {
                    out.insert(e);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Faces of `seeds`, iterated, together with the seeds.
    pub fn closure(
        &self,
        seeds: impl IntoIterator<Item = SubdividedCube>,
    ) -> HashSet<SubdividedCube> {
        let mut out = HashSet::new();
        let mut stack: Vec<SubdividedCube> = seeds.into_iter().collect();
        while let Some(e) = stack.pop() {
            if out.contains(&e) {
                continue;
            }
            for i in 0..e.dim() {
                for sign in Sign::BOTH {
                    let f = self.face(&e, i, sign);
                    if !out.contains(&f) {
                        stack.push(f);
                    }
                }
            }
            out.insert(e);
        }
        out
    }

    /// Whether `small` is an iterated face of `big` (or equal to it).
    pub fn is_face_of(&self, small: &SubdividedCube, big: &SubdividedCube) -> bool {
        !self.track_coordinate(big, small, None).is_empty() || small == big
    }

    /// Positions in `big.coords` that end up at coordinate `coord` of `small` along
    /// some chain of face maps from `big` to `small`. With `coord = None` the result
    /// holds a marker entry `usize::MAX` when `small` is a proper face at all.
    pub fn track_coordinate(
        &self,
        big: &SubdividedCube,
        small: &SubdividedCube,
        coord: Option<usize>,
    ) -> BTreeSet<usize> {
        let mut found = BTreeSet::new();
        let origin: Vec<usize> = (0..big.coords.len()).collect();
        let mut memo = HashSet::new();
        self.track_rec(big.clone(), origin, small, coord, &mut found, &mut memo);
        found
    }

    fn track_rec(
        &self,
        e: SubdividedCube,
        origin: Vec<usize>,
        target: &SubdividedCube,
        coord: Option<usize>,
        found: &mut BTreeSet<usize>,
        memo: &mut HashSet<(SubdividedCube, Vec<usize>)>,
    ) {
        if e.dim() < target.dim() || e.coords.len() < target.coords.len() {
            return;
        }
        if e == *target {
            found.insert(coord.map_or(usize::MAX, |c| origin[c]));
            return;
        }
        if !memo.insert((e.clone(), origin.clone())) {
            return;
        }
        for i in 0..e.dim() {
            let j = e.arrow_position(i);
            for sign in Sign::BOTH {
                let f = self.face(&e, i, sign);
                let o = if f.coords.len() < e.coords.len() {
                    let mut o = origin.clone();
                    o.remove(j);
                    o
                } else {
                    origin.clone()
                };
                self.track_rec(f, o, target, coord, found, memo);
            }
        }
    }

    /// Materializes a face-closed set of elements.
    pub fn assemble(&self, elements: impl IntoIterator<Item = SubdividedCube>) -> Subdivision {
        let elements: Vec<SubdividedCube> = {
            let mut v: Vec<_> = elements.into_iter().collect();
            v.sort();
            v.dedup();
            v
        };
        let top = elements.iter().map(|e| e.dim() + 1).max().unwrap_or(0);
        let mut per_dim: Vec<Vec<SubdividedCube>> = vec![Vec::new(); top];
        for e in elements {
            per_dim[e.dim()].push(e);
        }
        let local: HashMap<&SubdividedCube, usize> = per_dim
            .iter()
            .flat_map(|l| l.iter().enumerate().map(|(i, e)| (e, i)))
            .collect();
        let mut levels = Vec::with_capacity(top);
        for (dim, items) in per_dim.iter().enumerate() {
            let mut level = Level {
                keys: items.iter().map(|e| self.key(e)).collect(),
                faces: Vec::with_capacity(items.len() * 2 * dim),
            };
            for e in items {
                for i in 0..dim {
                    for sign in Sign::BOTH {
                        let f = self.face(e, i, sign);
                        let idx = *local
                            .get(&f)
                            .expect("assembled elements must be face closed");
                        level.faces.push(idx);
                    }
                }
            }
            levels.push(level);
        }
        let (set, positions) =
            PrecubicalSet::from_levels(levels, HashMap::new()).expect("subdivided keys are unique");
        let mut sorted: Vec<Vec<SubdividedCube>> = per_dim
            .iter()
            .map(|l| {
                vec![
                    SubdividedCube {
                        base: Cell::new(0, 0),
                        coords: Vec::new()
                    };
                    l.len()
                ]
            })
            .collect();
        let mut lookup = HashMap::new();
        for (dim, items) in per_dim.into_iter().enumerate() {
            for (old, e) in items.into_iter().enumerate() {
                let new = positions[dim][old];
                lookup.insert(e.clone(), Cell::new(dim, new));
                sorted[dim][new] = e;
            }
        }
        Subdivision {
            s: self.s,
            set,
            elements: sorted,
            lookup,
        }
    }
}

/// A materialized subobject of `(1/s)P` with its projection to `P`.
#[derive(Clone, Debug)]
pub struct Subdivision {
    s: u32,
    set: PrecubicalSet,
    elements: Vec<Vec<SubdividedCube>>,
    lookup: HashMap<SubdividedCube, Cell>,
}

impl Subdivision {
    pub fn factor(&self) -> u32 {
        self.s
    }

    pub fn set(&self) -> &PrecubicalSet {
        &self.set
    }

    pub fn into_set(self) -> PrecubicalSet {
        self.set
    }

    pub fn element(&self, cell: Cell) -> &SubdividedCube {
        &self.elements[cell.dim][cell.index]
    }

    pub fn cell_of(&self, e: &SubdividedCube) -> Option<Cell> {
        self.lookup.get(e).copied()
    }

    /// `pi_1`: the base cube of an element.
    pub fn underlying_cube(&self, cell: Cell) -> Cell {
        self.element(cell).base
    }

    pub fn underlying_cube_of_key(&self, key: &str) -> Result<Cell, SubdivisionError> {
        self.set
            .cell(key)
            .map(|c| self.underlying_cube(c))
            .ok_or_else(|| SubdivisionError::UnknownElement(key.to_string()))
    }
}

/// The full subdivision `(1/s)P`.
pub fn subdivide(p: &PrecubicalSet, s: u32) -> Subdivision {
    let sd = Subdivider::new(p, s);
    let elements: Vec<SubdividedCube> = p.all_cells().flat_map(|c| sd.elements_over(c)).collect();
    sd.assemble(elements)
}

/// The part of `(1/s)P` within `radius` vertex stars of `center`: the closed star
/// of `center`, then the closed stars of its vertices, and so on.
pub fn local_star(
    p: &PrecubicalSet,
    s: u32,
    center: &SubdividedCube,
    radius: usize,
) -> Subdivision {
    let sd = Subdivider::new(p, s);
    let mut cells: HashSet<SubdividedCube> = HashSet::from([center.clone()]);
    let mut expanded: HashSet<SubdividedCube> = HashSet::new();
    let mut frontier = vec![center.clone()];
    for _ in 0..radius {
        let mut grown = Vec::new();
        for v in frontier {
            if !expanded.insert(v.clone()) {
                continue;
            }
            grown.extend(sd.vertex_star(&v));
        }
        let closed = sd.closure(grown);
        frontier = closed
            .iter()
            .filter(|e| e.is_vertex() && !expanded.contains(*e))
            .cloned()
            .collect();
        frontier.sort();
        cells.extend(closed);
    }
    let star = sd.assemble(cells);
    #[cfg(debug_assertions)]
    debug_check_star(&sd, &star);
    star
}

/// Every face computed inside the star must agree with the face formulas of the
/// full subdivision.
#[cfg(debug_assertions)]
fn debug_check_star(sd: &Subdivider<'_>, star: &Subdivision) {
    for c in star.set().all_cells() {
        let e = star.element(c);
        for i in 0..c.dim {
            for sign in Sign::BOTH {
                let f = star.element(star.set().face(c, i, sign));
                debug_assert_eq!(*f, sd.face(e, i, sign));
            }
        }
    }
}

impl fmt::Display for SubdividedCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.base, self.coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcs::{interval, loop_graph, tensor};

    #[test]
    fn halved_interval() {
        let i = interval();
        let sub = subdivide(&i, 2);
        assert_eq!(sub.set().counts(), vec![3, 2]);
        let sd = Subdivider::new(&i, 2);
        let e = sd.parse("0>1@(1)/4").unwrap();
        let src = sd.face(&e, 0, Sign::Minus);
        assert_eq!(sd.key(&src), "0@()/4");
        assert_eq!(sd.key(&sd.face(&e, 0, Sign::Plus)), "0>1@(2)/4");
    }

    #[test]
    fn square_counts() {
        let sq = tensor(&interval(), &interval());
        let half = subdivide(&sq, 2);
        assert_eq!(half.set().counts(), vec![9, 12, 4]);
        assert!(half.set().cell("(0>1,0>1)@(2,2)/4").is_some());
        assert_eq!(subdivide(&sq, 3).set().counts(), vec![16, 24, 9]);
        assert!(subdivide(&sq, 3).set().validate().is_ok());
    }

    #[test]
    fn fibers_of_the_projection() {
        let sq = tensor(&interval(), &interval());
        let sub = subdivide(&sq, 3);
        let mut sizes: HashMap<Cell, usize> = HashMap::new();
        for c in sub.set().all_cells() {
            *sizes.entry(sub.underlying_cube(c)).or_default() += 1;
        }
        for (base, n) in sizes {
            assert_eq!(n, 5usize.pow(base.dim as u32));
        }
    }

    #[test]
    fn midpoints() {
        let sq = tensor(&interval(), &interval());
        let c = sq.cells(2).next().unwrap();
        let sd = Subdivider::new(&sq, 6);
        let m = sd.midpoint(c).unwrap();
        assert_eq!(sd.key(&m), "(0>1,0>1)@(6,6)/12");
        let star = sd.vertex_star(&m);
        assert_eq!(star.iter().filter(|e| e.dim() == 1).count(), 4);
        assert_eq!(star.iter().filter(|e| e.dim() == 2).count(), 4);
        assert!(star.iter().all(|e| e.base == c));
        assert_eq!(
            Subdivider::new(&sq, 3).midpoint(c),
            Err(SubdivisionError::OddFactor(3))
        );
        let v = sq.cell("(0,0)").unwrap();
        assert!(sd.midpoint(v).unwrap().coords.is_empty());
    }

    #[test]
    fn loop_subdivision_is_a_cycle() {
        let l = loop_graph();
        let sub = subdivide(&l, 2);
        assert_eq!(sub.set().counts(), vec![2, 2]);
        assert!(sub.set().validate().is_ok());
    }

    #[test]
    fn bad_keys() {
        let i = interval();
        let sd = Subdivider::new(&i, 2);
        assert!(sd.parse("0>1@(4)/4").is_err());
        assert!(sd.parse("0>1@(1)/6").is_err());
        assert!(sd.parse("x@()/4").is_err());
    }

    #[test]
    fn tracked_coordinates() {
        let sq = tensor(&interval(), &interval());
        let sd = Subdivider::new(&sq, 6);
        let big = sd.parse("(0>1,0>1)@(1,5)/12").unwrap();
        let small = sd.parse("(0,0>1)@(5)/12").unwrap();
        assert_eq!(
            sd.track_coordinate(&big, &small, Some(0)),
            BTreeSet::from([1])
        );
        assert!(sd.is_face_of(&small, &big));
    }
}
