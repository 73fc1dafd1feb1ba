//! Fibers of grid germs over the cubes of a precubical set and the shift
//! restrictions between them.
//!
//! The fiber over a cube `c` is the list of `n`-dimensional grid germs of
//! `(1/6)P` centred at the midpoint `m(c)`. For a face `c' = face(c, i, eps)`
//! a germ `Q` at `m(c')` either contains the edge of `(1/6)P` leaving `m(c')`
//! into `c` or it does not. In the first case the cubes of `Q` around that edge
//! are pushed along direction `i` until they straddle `m(c)`, which yields a
//! germ over `c`; otherwise the restriction is the empty germ `None`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::local_euclid::{enumerate_lps, LocalError, Lps};
use crate::pcs::{Cell, PrecubicalSet, Sign};
use crate::subdivision::{local_star, SubdividedCube, Subdivider, Subdivision};

/// Subdivision factor of the ambient complex of every germ.
pub const GERM_FACTOR: u32 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlowupError {
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error("a germ at `{face}` shifted into `{cube}` matches {matches} germs")]
    Restriction {
        face: String,
        cube: String,
        matches: usize,
    },
    #[error("shifted germ at `{cube}` is not a grid: {reason}")]
    Shift { cube: String, reason: String },
    #[error("restrictions disagree on `{cube}` (directions {i}, {j}, signs {eps}{eta}) for germ {germ} at `{corner}`")]
    Presheaf {
        cube: String,
        corner: String,
        i: usize,
        j: usize,
        eps: Sign,
        eta: Sign,
        germ: usize,
    },
    #[error("unknown cube `{0}`")]
    UnknownCube(String),
}

/// A cube of the base together with one germ of its fiber.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GermPoint {
    pub cube: Cell,
    pub germ: usize,
}

/// The fiber over `c`: grid germs at `m(c)`, in canonical order.
pub fn fiber(p: &PrecubicalSet, c: Cell, n: usize) -> Result<Vec<Lps>, BlowupError> {
    Ok(enumerate_lps(p, c, n)?)
}

/// The subdivided edge leaving `m(face(c, i, eps))` into `c`.
pub fn inside_edge(c: Cell, i: usize, eps: Sign) -> SubdividedCube {
    let den = 2 * GERM_FACTOR;
    let mut coords = vec![den / 2; c.dim];
    coords[i] = match eps {
        Sign::Minus => 1,
        Sign::Plus => den - 1,
    };
    SubdividedCube { base: c, coords }
}

/// The cubes of a germ having `e` as a face, each with the position of the
/// coordinate that becomes the arrow coordinate of `e`.
pub fn star_of_edge(
    p: &PrecubicalSet,
    germ: &Lps,
    e: &SubdividedCube,
    axis: usize,
) -> Result<Vec<(SubdividedCube, usize)>, String> {
    let sd = Subdivider::new(p, GERM_FACTOR);
    let mut out = Vec::new();
    for key in &germ.spanned {
        let x = sd.parse(key).map_err(|err| err.to_string())?;
        if x.dim() < e.dim() {
            continue;
        }
        let tracked = sd.track_coordinate(&x, e, Some(axis));
        match tracked.len() {
            0 => {}
            1 => out.push((x, *tracked.iter().next().expect("one"))),
            _ => {
                return Err(format!(
                    "`{key}` meets the inside edge along several coordinates"
                ))
            }
        }
    }
    Ok(out)
}

/// Shifts the star of the inside edge to the band around `m(c)` and spans it in
/// `local_star(P, 6, m(c), 1)`; returns the sorted keys of the span.
fn shifted_span(
    p: &PrecubicalSet,
    c: Cell,
    star: &[(SubdividedCube, usize)],
    ambient: &Subdivision,
) -> Result<Vec<String>, String> {
    let sd = Subdivider::new(p, GERM_FACTOR);
    let mut seeds = Vec::new();
    for (x, j) in star {
        for t in [GERM_FACTOR - 1, GERM_FACTOR + 1] {
            let mut y = x.clone();
            y.coords[*j] = t;
            let cell = ambient.cell_of(&y).ok_or_else(|| {
                format!("`{}` lies outside the star of m({})", sd.key(&y), p.key(c))
            })?;
            seeds.push(cell);
        }
    }
    let set = ambient.set();
    let mut keys: Vec<String> = set
        .closure(seeds)
        .into_iter()
        .map(|x| set.key(x).to_string())
        .collect();
    keys.sort();
    Ok(keys)
}

fn midpoint_star(p: &PrecubicalSet, c: Cell) -> Subdivision {
    let sd = Subdivider::new(p, GERM_FACTOR);
    let m = sd.midpoint(c).expect("even factor");
    local_star(p, GERM_FACTOR, &m, 1)
}

/// Restriction of `germ` at `face(c, i, eps)` into `c`, as an index into
/// `cube_fiber` (the fiber over `c`) or `None` for the empty germ.
pub fn restrict(
    p: &PrecubicalSet,
    c: Cell,
    i: usize,
    eps: Sign,
    germ: &Lps,
    cube_fiber: &[Lps],
) -> Result<Option<usize>, BlowupError> {
    let ambient = midpoint_star(p, c);
    restrict_in(p, c, i, eps, germ, cube_fiber, &ambient)
}

fn restrict_in(
    p: &PrecubicalSet,
    c: Cell,
    i: usize,
    eps: Sign,
    germ: &Lps,
    cube_fiber: &[Lps],
    ambient: &Subdivision,
) -> Result<Option<usize>, BlowupError> {
    let sd = Subdivider::new(p, GERM_FACTOR);
    let e = inside_edge(c, i, eps);
    if !germ.contains(&sd.key(&e)) {
        return Ok(None);
    }
    let shift_err = |reason: String| BlowupError::Shift {
        cube: p.key(c).to_string(),
        reason,
    };
    let star = star_of_edge(p, germ, &e, i).map_err(shift_err)?;
    let span = shifted_span(p, c, &star, ambient).map_err(shift_err)?;
    let matches: Vec<usize> = cube_fiber
        .iter()
        .enumerate()
        .filter(|(_, q)| q.spanned == span)
        .map(|(k, _)| k)
        .collect();
    if matches.len() != 1 {
        return Err(BlowupError::Restriction {
            face: p.key(p.face(c, i, eps)).to_string(),
            cube: p.key(c).to_string(),
            matches: matches.len(),
        });
    }
    Ok(Some(matches[0]))
}

/// All fibers and codimension-one restriction tables of a base set.
#[derive(Clone, Debug)]
pub struct BlowupComplex {
    n: usize,
    base: PrecubicalSet,
    fibers: Vec<Vec<Vec<Lps>>>,
    /// `[dim][cube][2 * i + bit(eps)][germ at the face]`.
    restrictions: Vec<Vec<Vec<Vec<Option<usize>>>>>,
}

impl BlowupComplex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> &PrecubicalSet {
        &self.base
    }

    pub fn fiber(&self, c: Cell) -> &[Lps] {
        &self.fibers[c.dim][c.index]
    }

    pub fn fiber_size(&self, c: Cell) -> usize {
        self.fiber(c).len()
    }

    pub fn total(&self) -> usize {
        self.fibers.iter().flatten().map(Vec::len).sum()
    }

    /// Image of every germ at `face(c, i, eps)` in the fiber over `c`.
    pub fn restriction(&self, c: Cell, i: usize, eps: Sign) -> &[Option<usize>] {
        &self.restrictions[c.dim][c.index][2 * i + eps.bit()]
    }

    pub fn restrict_point(&self, c: Cell, i: usize, eps: Sign, germ: usize) -> Option<usize> {
        self.restriction(c, i, eps)[germ]
    }

    /// Germ points in cube order.
    pub fn points(&self) -> impl Iterator<Item = GermPoint> + '_ {
        self.base
            .all_cells()
            .flat_map(move |c| (0..self.fiber_size(c)).map(move |germ| GermPoint { cube: c, germ }))
    }

    /// Cubes grouped by fiber size.
    pub fn size_classes(&self) -> BTreeMap<usize, Vec<Cell>> {
        let mut out: BTreeMap<usize, Vec<Cell>> = BTreeMap::new();
        for c in self.base.all_cells() {
            out.entry(self.fiber_size(c)).or_default().push(c);
        }
        out
    }

    /// Restriction along a face word, applied from the innermost face outward.
    /// `word` lists faces as taken from `c` downward; the germ lives on the final face.
    pub fn restrict_along(&self, c: Cell, word: &[(usize, Sign)], germ: usize) -> Option<usize> {
        let mut chain = vec![c];
        for &(i, eps) in word {
            let last = *chain.last().expect("non-empty");
            chain.push(self.base.face(last, i, eps));
        }
        let mut g = Some(germ);
        for (k, &(i, eps)) in word.iter().enumerate().rev() {
            g = g.and_then(|g| self.restrict_point(chain[k], i, eps, g));
        }
        g
    }

    /// Checks that the two ways of restricting from a codimension-two face agree.
    pub fn check_presheaf(&self) -> Result<(), BlowupError> {
        let p = &self.base;
        for c in p.all_cells() {
            let k = c.dim;
            for j in 0..k.saturating_sub(1) {
                for i in 0..=j {
                    for eps in Sign::BOTH {
                        for eta in Sign::BOTH {
                            let a1 = p.face(c, j + 1, eps);
                            let a2 = p.face(c, i, eta);
                            let b = p.face(a1, i, eta);
                            debug_assert_eq!(b, p.face(a2, j, eps));
                            for g in 0..self.fiber_size(b) {
                                let route_a = self
                                    .restrict_point(a1, i, eta, g)
                                    .and_then(|h| self.restrict_point(c, j + 1, eps, h));
                                let route_b = self
                                    .restrict_point(a2, j, eps, g)
                                    .and_then(|h| self.restrict_point(c, i, eta, h));
                                if route_a != route_b {
                                    return Err(BlowupError::Presheaf {
                                        cube: p.key(c).to_string(),
                                        corner: p.key(b).to_string(),
                                        i,
                                        j,
                                        eps,
                                        eta,
                                        germ: g,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Computes every fiber and every codimension-one restriction table, then checks
/// the presheaf law. Work is spread over the current rayon pool; the result does
/// not depend on the number of threads.
pub fn build_blowup(p: &PrecubicalSet, n: usize) -> Result<BlowupComplex, BlowupError> {
    let cells: Vec<Cell> = p.all_cells().collect();
    let computed: Vec<Vec<Lps>> = cells
        .par_iter()
        .map(|&c| fiber(p, c, n))
        .collect::<Result<_, _>>()?;
    let mut fibers: Vec<Vec<Vec<Lps>>> = (0..=p.dim())
        .map(|d| vec![Vec::new(); p.count(d)])
        .collect();
    if p.is_empty() {
        fibers.clear();
    }
    for (&c, f) in cells.iter().zip(computed) {
        fibers[c.dim][c.index] = f;
    }
    let tables: Vec<Vec<Vec<Option<usize>>>> = cells
        .par_iter()
        .map(|&c| restriction_tables(p, c, &fibers))
        .collect::<Result<_, _>>()?;
    let mut restrictions: Vec<Vec<Vec<Vec<Option<usize>>>>> = fibers
        .iter()
        .map(|level| vec![Vec::new(); level.len()])
        .collect();
    for (&c, t) in cells.iter().zip(tables) {
        restrictions[c.dim][c.index] = t;
    }
    let complex = BlowupComplex {
        n,
        base: p.clone(),
        fibers,
        restrictions,
    };
    complex.check_presheaf()?;
    Ok(complex)
}

fn restriction_tables(
    p: &PrecubicalSet,
    c: Cell,
    fibers: &[Vec<Vec<Lps>>],
) -> Result<Vec<Vec<Option<usize>>>, BlowupError> {
    let cube_fiber = &fibers[c.dim][c.index];
    let mut out = Vec::with_capacity(2 * c.dim);
    let needs_star = c.dim > 0 && !cube_fiber.is_empty();
    let ambient = needs_star.then(|| midpoint_star(p, c));
    for i in 0..c.dim {
        for eps in Sign::BOTH {
            let face = p.face(c, i, eps);
            let face_fiber = &fibers[face.dim][face.index];
            let mut table = Vec::with_capacity(face_fiber.len());
            for germ in face_fiber {
                let image = match &ambient {
                    None => None,
                    Some(ambient) => restrict_in(p, c, i, eps, germ, cube_fiber, ambient)?,
                };
                table.push(image);
            }
            out.push(table);
        }
    }
    Ok(out)
}

/// Independent reference computations used to cross-check the fibers and
/// restrictions.
pub mod oracle {
    use super::*;
    use crate::iso::monomorphisms;
    use crate::local_euclid::{triple_grid, LpsRecord, SignTuple};
    use crate::pcs::{parse_grid_key, GridCoord};

    /// Grid germs at `m(c)` found by brute-force search for injective symmetric
    /// morphisms from the triple grid into `local_star(P, 6, m(c), 1)` that send
    /// the grid center to `m(c)`, deduplicated by image.
    pub fn oracle_fiber(p: &PrecubicalSet, c: Cell, n: usize) -> Vec<Lps> {
        if n > 0 && c.dim > n {
            return Vec::new();
        }
        let sd = Subdivider::new(p, GERM_FACTOR);
        let m = sd.midpoint(c).expect("even factor");
        let star = local_star(p, GERM_FACTOR, &m, 1);
        let set = star.set();
        let center = star.cell_of(&m).expect("center");
        let grid = triple_grid(n);
        let grid_center = grid
            .vertices()
            .find(|&v| is_center(&grid, v, n))
            .expect("grid center");
        let mut by_image: BTreeMap<Vec<String>, Lps> = BTreeMap::new();
        for map in monomorphisms(&grid, set, &[(grid_center, center)]) {
            let mut keys: Vec<String> = map
                .image_set()
                .into_iter()
                .map(|x| set.key(x).to_string())
                .collect();
            keys.sort();
            if by_image.contains_key(&keys) {
                continue;
            }
            let lps = germ_from_map(&grid, set, &map, n, keys.clone());
            by_image.insert(keys, lps);
        }
        by_image.into_values().collect()
    }

    fn is_center(grid: &PrecubicalSet, v: Cell, n: usize) -> bool {
        n == 0
            || parse_grid_key(grid.key(v))
                .is_some_and(|cs| cs.iter().all(|c| *c == GridCoord::Vertex(0)))
    }

    fn germ_from_map(
        grid: &PrecubicalSet,
        set: &PrecubicalSet,
        map: &crate::iso::SymmetricMap,
        n: usize,
        spanned: Vec<String>,
    ) -> Lps {
        let mut fillers: BTreeMap<SignTuple, String> = BTreeMap::new();
        let mut center = String::new();
        for dim in 0..=grid.dim() {
            for x in grid.cells(dim) {
                let coords = if n == 0 {
                    Vec::new()
                } else {
                    parse_grid_key(grid.key(x)).expect("grid key")
                };
                let mut tuple = Vec::with_capacity(n);
                let mut inner = true;
                for c in &coords {
                    match *c {
                        GridCoord::Vertex(0) => tuple.push(0),
                        GridCoord::Edge(-1) => tuple.push(-1),
                        GridCoord::Edge(_) => tuple.push(1),
                        GridCoord::Vertex(_) => inner = false,
                    }
                }
                if !inner {
                    continue;
                }
                let key = set.key(map.image(x)).to_string();
                if tuple.iter().all(|&s| s == 0) {
                    center = key;
                } else {
                    fillers.insert(SignTuple(tuple), key);
                }
            }
        }
        let axes = (0..n)
            .map(|a| {
                let mut t = vec![0i8; n];
                t[a] = -1;
                let i = fillers[&SignTuple(t.clone())].clone();
                t[a] = 1;
                (i, fillers[&SignTuple(t)].clone())
            })
            .collect::<Vec<_>>();
        let mut lps = Lps {
            n,
            center,
            axes,
            fillers,
            spanned,
        };
        canonicalize_axes(&mut lps);
        lps
    }

    /// Reorders the axes of a germ by in-edge key.
    pub fn canonicalize_axes(lps: &mut Lps) {
        let mut order: Vec<usize> = (0..lps.n).collect();
        order.sort_by(|&a, &b| lps.axes[a].0.cmp(&lps.axes[b].0));
        lps.axes = order.iter().map(|&a| lps.axes[a].clone()).collect();
        lps.fillers = std::mem::take(&mut lps.fillers)
            .into_iter()
            .map(|(t, c)| (SignTuple(order.iter().map(|&a| t.0[a]).collect()), c))
            .collect();
    }

    /// Canonical record of a germ, independent of the axis order it was found in.
    pub fn canonical_record(lps: &Lps) -> LpsRecord {
        let mut l = lps.clone();
        canonicalize_axes(&mut l);
        l.record()
    }

    /// A half-open or closed interval of numerators over the common denominator.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
    pub enum Span {
        Point(u32),
        Open(u32, u32),
    }

    /// Open box of a subdivided cube inside its base cube: one span per base
    /// coordinate, numerators over `2s`.
    pub fn open_box(e: &SubdividedCube) -> Vec<Span> {
        e.coords
            .iter()
            .map(|&t| {
                if t % 2 == 1 {
                    Span::Open(t - 1, t + 1)
                } else {
                    Span::Point(t)
                }
            })
            .collect()
    }

    /// The boxes of the cells of `germ` along a tube around an arrow coordinate,
    /// as `(base cube, box with that coordinate removed)`. The tube is given by
    /// the edge `e` of `(1/6)P` whose arrow coordinate `axis` is followed.
    pub fn cross_section(
        p: &PrecubicalSet,
        germ: &Lps,
        e: &SubdividedCube,
        axis: usize,
    ) -> Result<BTreeSet<(Cell, Vec<Span>)>, String> {
        let star = star_of_edge(p, germ, e, axis)?;
        let mut out = BTreeSet::new();
        for (x, j) in star {
            let mut b = open_box(&x);
            let along = b.remove(j);
            if along != open_box(e)[axis] {
                return Err("tracked coordinate is not the edge coordinate".into());
            }
            out.insert((x.base, b));
        }
        Ok(out)
    }

    /// Checks a computed restriction against the boxes of the two germs: the
    /// part of `from` along the inside edge and the parts of `to` along the two
    /// edges at `m(c)` in direction `i` must have the same cross-section, and
    /// `to` must be empty exactly when `from` avoids the inside edge.
    pub fn germ_overlap_check(
        p: &PrecubicalSet,
        c: Cell,
        i: usize,
        eps: Sign,
        from: &Lps,
        to: Option<&Lps>,
    ) -> Result<(), String> {
        let e = inside_edge(c, i, eps);
        let near = cross_section(p, from, &e, i)?;
        match (near.is_empty(), to) {
            (true, None) => return Ok(()),
            (true, Some(_)) => return Err("germ avoids the inside edge but restricts".into()),
            (false, None) => {
                return Err("germ meets the inside edge but restricts to nothing".into())
            }
            (false, Some(_)) => {}
        }
        let to = to.expect("checked");
        for t in [GERM_FACTOR - 1, GERM_FACTOR + 1] {
            let mut f = e.clone();
            f.coords[i] = t;
            let far = cross_section(p, to, &f, i)?;
            if far != near {
                return Err(format!(
                    "cross-sections differ at {t}/{}: {near:?} vs {far:?}",
                    2 * GERM_FACTOR
                ));
            }
        }
        Ok(())
    }
}
