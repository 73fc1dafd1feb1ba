//! Symmetric morphisms between precubical sets.
//!
//! A symmetric morphism sends each cube `x` to a cube `y` of the same dimension
//! together with a permutation `perm` of its directions such that
//! `phi(face(x, i, eps)) == face(phi(x), perm[i], eps)`, the face carrying the
//! permutation induced on the remaining directions. The search assigns maximal
//! cubes in breadth-first adjacency order and propagates through faces.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::pcs::{Cell, PrecubicalSet, Sign};

/// Images and axis permutations of every cube of a source set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricMap {
    images: Vec<Vec<(Cell, Vec<usize>)>>,
}

impl SymmetricMap {
    /// Assembles a map from an explicit table; `table[d][i]` is the image of `Cell(d, i)`.
    pub fn from_table(images: Vec<Vec<(Cell, Vec<usize>)>>) -> Self {
        SymmetricMap { images }
    }

    pub fn image(&self, c: Cell) -> Cell {
        self.images[c.dim][c.index].0
    }

    pub fn axis_perm(&self, c: Cell) -> &[usize] {
        &self.images[c.dim][c.index].1
    }

    pub fn image_set(&self) -> BTreeSet<Cell> {
        self.images.iter().flatten().map(|(c, _)| *c).collect()
    }

    pub fn source_len(&self) -> usize {
        self.images.iter().map(Vec::len).sum()
    }

    pub fn is_injective(&self) -> bool {
        self.image_set().len() == self.source_len()
    }

    /// Checks the face condition for every cube, direction and sign.
    pub fn check(&self, src: &PrecubicalSet, dst: &PrecubicalSet) -> Result<(), String> {
        if self.images.len() < src.counts().len() {
            return Err("map does not cover every dimension".into());
        }
        for x in src.all_cells() {
            let Some((y, perm)) = self.images.get(x.dim).and_then(|v| v.get(x.index)) else {
                return Err(format!("no image for `{}`", src.key(x)));
            };
            if y.dim != x.dim || y.index >= dst.count(y.dim) || !is_permutation(perm, x.dim) {
                return Err(format!("bad image for `{}`", src.key(x)));
            }
            for i in 0..x.dim {
                for sign in Sign::BOTH {
                    let fx = src.face(x, i, sign);
                    let (fy, fperm) = &self.images[fx.dim][fx.index];
                    if *fy != dst.face(*y, perm[i], sign) {
                        return Err(format!("face {i}{sign} of `{}` not preserved", src.key(x)));
                    }
                    if *fperm != induced(perm, i) {
                        return Err(format!(
                            "axis permutation of face {i}{sign} of `{}` inconsistent",
                            src.key(x)
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `other . self`.
    pub fn then(&self, other: &SymmetricMap) -> SymmetricMap {
        let images = self
            .images
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|(y, p)| {
                        let (z, q) = &other.images[y.dim][y.index];
                        (*z, p.iter().map(|&a| q[a]).collect())
                    })
                    .collect()
            })
            .collect();
        SymmetricMap { images }
    }
}

/// A bijective symmetric morphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricIso {
    map: SymmetricMap,
}

impl SymmetricIso {
    pub fn map(&self) -> &SymmetricMap {
        &self.map
    }

    pub fn image(&self, c: Cell) -> Cell {
        self.map.image(c)
    }

    pub fn axis_perm(&self, c: Cell) -> &[usize] {
        self.map.axis_perm(c)
    }

    pub fn compose(&self, other: &SymmetricIso) -> SymmetricIso {
        SymmetricIso {
            map: self.map.then(&other.map),
        }
    }

    pub fn inverse(&self) -> SymmetricIso {
        let mut images: Vec<Vec<(Cell, Vec<usize>)>> = self
            .map
            .images
            .iter()
            .map(|l| vec![(Cell::new(0, 0), Vec::new()); l.len()])
            .collect();
        for (d, level) in self.map.images.iter().enumerate() {
            for (i, (y, p)) in level.iter().enumerate() {
                let mut inv = vec![0; p.len()];
                for (a, &b) in p.iter().enumerate() {
                    inv[b] = a;
                }
                images[y.dim][y.index] = (Cell::new(d, i), inv);
            }
        }
        SymmetricIso {
            map: SymmetricMap { images },
        }
    }

    /// Verifies the face condition in both directions and bijectivity.
    pub fn check(&self, src: &PrecubicalSet, dst: &PrecubicalSet) -> Result<(), String> {
        if src.counts() != dst.counts() {
            return Err("cube counts differ".into());
        }
        self.map.check(src, dst)?;
        if !self.map.is_injective() {
            return Err("not injective".into());
        }
        self.inverse().map.check(dst, src)
    }
}

fn is_permutation(p: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    p.len() == k
        && p.iter()
            .all(|&a| a < k && !std::mem::replace(&mut seen[a], true))
}

/// Permutation carried by `face(x, i, _)` when `x` carries `perm`.
pub fn induced(perm: &[usize], i: usize) -> Vec<usize> {
    let pi = perm[i];
    perm.iter()
        .enumerate()
        .filter(|&(d, _)| d != i)
        .map(|(_, &t)| if t > pi { t - 1 } else { t })
        .collect()
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for a in 0..used.len() {
            if !used[a] {
                used[a] = true;
                prefix.push(a);
                rec(prefix, used, out);
                prefix.pop();
                used[a] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Iso,
    Mono,
}

struct Search<'a> {
    src: &'a PrecubicalSet,
    dst: &'a PrecubicalSet,
    mode: Mode,
    order: Vec<Cell>,
    src_corners: HashMap<Cell, Vec<Cell>>,
    dst_star: Vec<Vec<Cell>>,
    perms: Vec<Vec<Vec<usize>>>,
    assigned: Vec<Vec<Option<(Cell, Vec<usize>)>>>,
    used: HashMap<Cell, Cell>,
    trail: Vec<Cell>,
}

impl<'a> Search<'a> {
    fn new(src: &'a PrecubicalSet, dst: &'a PrecubicalSet, mode: Mode) -> Self {
        let maximal: Vec<Cell> = src
            .all_cells()
            .filter(|c| src.cofaces(*c).is_empty())
            .collect();
        let src_corners: HashMap<Cell, Vec<Cell>> =
            maximal.iter().map(|&c| (c, src.corners(c))).collect();
        let order = bfs_order(src, &maximal, &src_corners);
        let mut dst_star = vec![Vec::new(); dst.count(0)];
        for c in dst.all_cells() {
            let mut seen = BTreeSet::new();
            for v in dst.corners(c) {
                if seen.insert(v) {
                    dst_star[v.index].push(c);
                }
            }
        }
        let top = src.dim().max(dst.dim());
        Search {
            src,
            dst,
            mode,
            order,
            src_corners,
            dst_star,
            perms: (0..=top).map(permutations).collect(),
            assigned: src.counts().iter().map(|&n| vec![None; n]).collect(),
            used: HashMap::new(),
            trail: Vec::new(),
        }
    }

    fn assign(&mut self, x: Cell, y: Cell, perm: Vec<usize>) -> bool {
        if x.dim != y.dim {
            return false;
        }
        if let Some((yy, pp)) = &self.assigned[x.dim][x.index] {
            return *yy == y && *pp == perm;
        }
        if let Some(&other) = self.used.get(&y) {
            if other != x {
                return false;
            }
        }
        if self.mode == Mode::Iso && self.src.cofaces(x).len() != self.dst.cofaces(y).len() {
            return false;
        }
        self.assigned[x.dim][x.index] = Some((y, perm.clone()));
        self.used.insert(y, x);
        self.trail.push(x);
        for i in 0..x.dim {
            for sign in Sign::BOTH {
                let fx = self.src.face(x, i, sign);
                let fy = self.dst.face(y, perm[i], sign);
                if !self.assign(fx, fy, induced(&perm, i)) {
                    return false;
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let x = self.trail.pop().expect("trail entry");
            if let Some((y, _)) = self.assigned[x.dim][x.index].take() {
                self.used.remove(&y);
            }
        }
    }

    fn candidates(&self, x: Cell) -> Vec<Cell> {
        let anchor = self.src_corners[&x]
            .iter()
            .find_map(|v| self.assigned[0][v.index].as_ref().map(|(w, _)| *w));
        match anchor {
            Some(w) => self.dst_star[w.index]
                .iter()
                .copied()
                .filter(|c| c.dim == x.dim)
                .collect(),
            None => self.dst.cells(x.dim).collect(),
        }
    }

    fn run(&mut self, pos: usize, emit: &mut dyn FnMut(SymmetricMap) -> bool) -> bool {
        if pos == self.order.len() {
            let images = self
                .assigned
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|a| a.clone().expect("all cubes assigned"))
                        .collect()
                })
                .collect();
            return emit(SymmetricMap { images });
        }
        let x = self.order[pos];
        if self.assigned[x.dim][x.index].is_some() {
            return self.run(pos + 1, emit);
        }
        for y in self.candidates(x) {
            for p in 0..self.perms[x.dim].len() {
                let perm = self.perms[x.dim][p].clone();
                let mark = self.trail.len();
                if self.assign(x, y, perm) && !self.run(pos + 1, emit) {
                    self.undo(mark);
                    return false;
                }
                self.undo(mark);
            }
        }
        true
    }
}

fn bfs_order(
    src: &PrecubicalSet,
    maximal: &[Cell],
    corners: &HashMap<Cell, Vec<Cell>>,
) -> Vec<Cell> {
    let mut by_vertex: Vec<Vec<Cell>> = vec![Vec::new(); src.count(0)];
    for &c in maximal {
        for v in &corners[&c] {
            by_vertex[v.index].push(c);
        }
    }
    let mut ranked: Vec<Cell> = maximal.to_vec();
    ranked.sort_by(|a, b| b.dim.cmp(&a.dim).then(a.cmp(b)));
    let mut seen = BTreeSet::new();
    let mut order = Vec::with_capacity(maximal.len());
    for &start in &ranked {
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for v in &corners[&c] {
                for &n in &by_vertex[v.index] {
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    order
}

fn search(
    src: &PrecubicalSet,
    dst: &PrecubicalSet,
    mode: Mode,
    pins: &[(Cell, Cell)],
    emit: &mut dyn FnMut(SymmetricMap) -> bool,
) {
    if mode == Mode::Iso && src.counts() != dst.counts() {
        return;
    }
    let mut s = Search::new(src, dst, mode);
    for &(a, b) in pins {
        if a.dim != 0 || b.dim != 0 || !s.assign(a, b, Vec::new()) {
            return;
        }
    }
    s.run(0, emit);
}

/// First symmetric isomorphism found, optionally sending vertex `pin.0` to `pin.1`.
pub fn symmetric_iso(
    p: &PrecubicalSet,
    q: &PrecubicalSet,
    pin: Option<(Cell, Cell)>,
) -> Option<SymmetricIso> {
    symmetric_isos(p, q, pin, Some(1)).into_iter().next()
}

/// Symmetric isomorphisms in search order, at most `limit` of them.
pub fn symmetric_isos(
    p: &PrecubicalSet,
    q: &PrecubicalSet,
    pin: Option<(Cell, Cell)>,
    limit: Option<usize>,
) -> Vec<SymmetricIso> {
    let mut out = Vec::new();
    let pins: Vec<_> = pin.into_iter().collect();
    search(p, q, Mode::Iso, &pins, &mut |map| {
        out.push(SymmetricIso { map });
        limit.is_none_or(|l| out.len() < l)
    });
    out
}

/// Every injective symmetric morphism `src -> dst` respecting the pinned vertices.
pub fn monomorphisms(
    src: &PrecubicalSet,
    dst: &PrecubicalSet,
    pins: &[(Cell, Cell)],
) -> Vec<SymmetricMap> {
    let mut out = Vec::new();
    search(src, dst, Mode::Mono, pins, &mut |map| {
        out.push(map);
        true
    });
    out
}

/// Distinct images of the monomorphisms `src -> dst`, in first-found order.
pub fn monomorphism_images(
    src: &PrecubicalSet,
    dst: &PrecubicalSet,
    pins: &[(Cell, Cell)],
) -> Vec<BTreeSet<Cell>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    search(src, dst, Mode::Mono, pins, &mut |map| {
        let img = map.image_set();
        if seen.insert(img.clone()) {
            out.push(img);
        }
        true
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcs::{grid_window, interval, linear_graph, tensor, PcsBuilder};

    #[test]
    fn induced_permutation() {
        assert_eq!(induced(&[1, 0], 0), vec![0]);
        assert_eq!(induced(&[2, 0, 1], 1), vec![1, 0]);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn swapped_square() {
        let mut b = PcsBuilder::new();
        b.vertex("s").vertex("t").edge("j", "s", "t");
        let j = b.build().unwrap();
        let i = interval();
        let ij = tensor(&i, &j);
        let ji = tensor(&j, &i);
        let all = symmetric_isos(&ij, &ji, None, None);
        assert_eq!(all.len(), 2);
        let sq = ij.cells(2).next().unwrap();
        let swap = all.iter().find(|w| w.axis_perm(sq) == [1, 0]).unwrap();
        assert_eq!(ji.key(swap.image(sq)), "(j,0>1)");
        let v = ij.cell("(0,t)").unwrap();
        assert_eq!(ji.key(swap.image(v)), "(t,0)");
        for w in &all {
            w.check(&ij, &ji).unwrap();
        }
    }

    #[test]
    fn counts_must_match() {
        assert!(symmetric_iso(&interval(), &linear_graph(2), None).is_none());
    }

    #[test]
    fn grid_automorphisms_fixing_center() {
        let g = grid_window(2, 1);
        let c = g.cell("(0,0)").unwrap();
        let all = symmetric_isos(&g, &g, Some((c, c)), None);
        for w in &all {
            w.check(&g, &g).unwrap();
            assert_eq!(w.image(c), c);
        }
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn monomorphisms_of_an_edge_into_a_chain() {
        let e = interval();
        let chain = linear_graph(3);
        assert_eq!(monomorphisms(&e, &chain, &[]).len(), 3);
        let images = monomorphism_images(&linear_graph(2), &chain, &[]);
        assert_eq!(images.len(), 2);
    }
}
