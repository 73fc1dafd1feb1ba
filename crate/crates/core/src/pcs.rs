//! Precubical sets.
//!
//! A [`PrecubicalSet`] stores its cubes graded by dimension, each cube named by an
//! opaque string key that is unique across the whole set. Cubes are addressed
//! internally through [`Cell`] handles (dimension plus position in the sorted key
//! list of that dimension).
//!
//! # Face convention
//!
//! A `k`-cube has directions `0..k`. `face(c, i, eps)` removes direction `i`,
//! fixing coordinate `i` at `0` (`Minus`) or `1` (`Plus`). On a free square
//! `face(c, 1, Minus)` is the bottom edge, `face(c, 0, Minus)` the left edge and
//! `face(face(c, 0, Minus), 0, Plus)` the top-left corner.
//!
//! With this indexing the cocubical identities checked by [`PrecubicalSet::validate`]
//! are, for every `k`-cube `c` and `0 <= i <= j < k - 1`,
//!
//! ```text
//! face(face(c, j + 1, eps), i, eta) == face(face(c, i, eta), j, eps)
//! ```
//!
//! which is `d[eps; k-1, j] . d[eta; k, i] = d[eta; k-1, i] . d[eps; k, j+1]`
//! written with the face operators composed right to left.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Orientation of a face: the lower (`Minus`) or upper (`Plus`) end of an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Minus, Sign::Plus];

    pub fn bit(self) -> usize {
        match self {
            Sign::Minus => 0,
            Sign::Plus => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Sign {
        if bit == 0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }

    pub fn from_symbol(c: char) -> Option<Sign> {
        match c {
            '-' => Some(Sign::Minus),
            '+' => Some(Sign::Plus),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Handle to a cube of one particular [`PrecubicalSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub dim: usize,
    pub index: usize,
}

impl Cell {
    pub fn new(dim: usize, index: usize) -> Self {
        Cell { dim, index }
    }
}

/// Set-independent name of a cube.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeId {
    pub dim: usize,
    pub key: String,
}

/// One incidence `face(cube, dir, sign) == self`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coface {
    pub cube: Cell,
    pub dir: usize,
    pub sign: Sign,
}

#[derive(Debug, Error)]
pub enum PcsError {
    #[error("duplicate cube key `{0}`")]
    DuplicateKey(String),
    #[error("unknown cube `{0}`")]
    UnknownCube(String),
    #[error(
        "cube `{cube}`: face {dir}{sign} is `{face}` of dimension {found}, expected {expected}"
    )]
    FaceDimension {
        cube: String,
        dir: usize,
        sign: Sign,
        face: String,
        found: usize,
        expected: usize,
    },
    #[error("invalid precubical set:\n{0}")]
    Invalid(ValidationReport),
    #[error("malformed document: {0}")]
    Malformed(String),
}

/// A failed check found by validation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// `face(face(c, j+1, eps), i, eta) != face(face(c, i, eta), j, eps)`.
    Cocubical {
        cube: String,
        i: usize,
        j: usize,
        eps: Sign,
        eta: Sign,
    },
    MissingFace {
        cube: String,
        dir: usize,
        sign: Sign,
    },
    UnknownTarget {
        cube: String,
        dir: usize,
        sign: Sign,
        target: String,
    },
    WrongDimension {
        cube: String,
        dir: usize,
        sign: Sign,
        target: String,
    },
    UnexpectedFace {
        cube: String,
        entry: String,
    },
    DuplicateKey {
        key: String,
    },
    BadDimension {
        entry: String,
    },
    UnknownCube {
        key: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cocubical {
                cube,
                i,
                j,
                eps,
                eta,
            } => write!(
                f,
                "cocubical relation fails at `{cube}` (i={i}, j={j}, eps={eps}, eta={eta})"
            ),
            Violation::MissingFace { cube, dir, sign } => {
                write!(f, "`{cube}` has no face {dir}{sign}")
            }
            Violation::UnknownTarget {
                cube,
                dir,
                sign,
                target,
            } => write!(f, "`{cube}` face {dir}{sign} names unknown cube `{target}`"),
            Violation::WrongDimension {
                cube,
                dir,
                sign,
                target,
            } => write!(
                f,
                "`{cube}` face {dir}{sign} = `{target}` has the wrong dimension"
            ),
            Violation::UnexpectedFace { cube, entry } => {
                write!(f, "`{cube}` has unexpected face entry `{entry}`")
            }
            Violation::DuplicateKey { key } => write!(f, "key `{key}` appears more than once"),
            Violation::BadDimension { entry } => write!(f, "bad dimension entry `{entry}`"),
            Violation::UnknownCube { key } => write!(f, "entry for unknown cube `{key}`"),
        }
    }
}

/// Outcome of a validation pass; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Unsorted description of one dimension, used by internal constructors.
#[derive(Clone, Debug, Default)]
pub(crate) struct Level {
    pub keys: Vec<String>,
    /// `2 * dim` entries per cube, `faces[c * 2k + 2i + sign.bit()]`, indexing the
    /// previous level in its unsorted order.
    pub faces: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PrecubicalSet {
    keys: Vec<Vec<String>>,
    index: HashMap<String, Cell>,
    faces: Vec<Vec<usize>>,
    cofaces: Vec<Vec<Vec<Coface>>>,
    labels: BTreeMap<Cell, String>,
}

impl PartialEq for PrecubicalSet {
    fn eq(&self, other: &Self) -> bool {
        self.keys == other.keys && self.faces == other.faces && self.labels == other.labels
    }
}

impl Eq for PrecubicalSet {}

impl PrecubicalSet {
    pub fn empty() -> Self {
        Self::from_levels(Vec::new(), HashMap::new())
            .map(|(p, _)| p)
            .expect("empty set is well formed")
    }

    /// Builds a set from unsorted levels. Returns the set and, per dimension, the
    /// sorted position of every input cube.
    pub(crate) fn from_levels(
        mut levels: Vec<Level>,
        labels: HashMap<(usize, usize), String>,
    ) -> Result<(Self, Vec<Vec<usize>>), PcsError> {
        while levels.last().is_some_and(|l| l.keys.is_empty()) {
            levels.pop();
        }
        let mut keys = Vec::with_capacity(levels.len());
        let mut positions: Vec<Vec<usize>> = Vec::with_capacity(levels.len());
        for level in &levels {
            let mut order: Vec<usize> = (0..level.keys.len()).collect();
            order.sort_by(|&a, &b| level.keys[a].cmp(&level.keys[b]));
            let mut pos = vec![0; order.len()];
            for (new, &old) in order.iter().enumerate() {
                pos[old] = new;
            }
            keys.push(
                order
                    .iter()
                    .map(|&o| level.keys[o].clone())
                    .collect::<Vec<_>>(),
            );
            positions.push(pos);
        }
        let mut index = HashMap::new();
        for (dim, ks) in keys.iter().enumerate() {
            for (i, k) in ks.iter().enumerate() {
                if index.insert(k.clone(), Cell::new(dim, i)).is_some() {
                    return Err(PcsError::DuplicateKey(k.clone()));
                }
            }
        }
        let mut faces = Vec::with_capacity(levels.len());
        for (dim, level) in levels.iter().enumerate() {
            let width = 2 * dim;
            let mut table = vec![0; level.keys.len() * width];
            for old in 0..level.keys.len() {
                let new = positions[dim][old];
                for slot in 0..width {
                    let f = level.faces[old * width + slot];
                    table[new * width + slot] = positions[dim - 1][f];
                }
            }
            faces.push(table);
        }
        let labels = labels
            .into_iter()
            .map(|((d, i), l)| (Cell::new(d, positions[d][i]), l))
            .collect();
        let mut set = PrecubicalSet {
            keys,
            index,
            faces,
            cofaces: Vec::new(),
            labels,
        };
        set.cofaces = set.compute_cofaces();
        Ok((set, positions))
    }

    fn compute_cofaces(&self) -> Vec<Vec<Vec<Coface>>> {
        let mut cofaces: Vec<Vec<Vec<Coface>>> = self
            .keys
            .iter()
            .map(|ks| vec![Vec::new(); ks.len()])
            .collect();
        for dim in 1..self.keys.len() {
            for index in 0..self.keys[dim].len() {
                let cube = Cell::new(dim, index);
                for dir in 0..dim {
                    for sign in Sign::BOTH {
                        let f = self.face(cube, dir, sign);
                        cofaces[dim - 1][f.index].push(Coface { cube, dir, sign });
                    }
                }
            }
        }
        cofaces
    }

    /// Highest dimension holding a cube; 0 for an empty set.
    pub fn dim(&self) -> usize {
        self.keys.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn count(&self, dim: usize) -> usize {
        self.keys.get(dim).map_or(0, Vec::len)
    }

    /// Number of cubes per dimension.
    pub fn counts(&self) -> Vec<usize> {
        self.keys.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.keys.iter().map(Vec::len).sum()
    }

    pub fn cells(&self, dim: usize) -> impl Iterator<Item = Cell> + '_ {
        (0..self.count(dim)).map(move |i| Cell::new(dim, i))
    }

    pub fn all_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.keys.len()).flat_map(move |d| self.cells(d))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells(0)
    }

    pub fn key(&self, cell: Cell) -> &str {
        &self.keys[cell.dim][cell.index]
    }

    pub fn keys(&self, dim: usize) -> &[String] {
        self.keys.get(dim).map_or(&[], Vec::as_slice)
    }

    pub fn cube_id(&self, cell: Cell) -> CubeId {
        CubeId {
            dim: cell.dim,
            key: self.key(cell).to_string(),
        }
    }

    pub fn cell(&self, key: &str) -> Option<Cell> {
        self.index.get(key).copied()
    }

    pub fn cell_of(&self, id: &CubeId) -> Option<Cell> {
        self.cell(&id.key).filter(|c| c.dim == id.dim)
    }

    /// `face(c, dir, sign)`; panics if `dir >= c.dim`.
    pub fn face(&self, cell: Cell, dir: usize, sign: Sign) -> Cell {
        assert!(
            dir < cell.dim,
            "direction {dir} out of range for a {}-cube",
            cell.dim
        );
        let width = 2 * cell.dim;
        let f = self.faces[cell.dim][cell.index * width + 2 * dir + sign.bit()];
        Cell::new(cell.dim - 1, f)
    }

    /// Applies a word of face operators left to right.
    pub fn face_word(&self, mut cell: Cell, word: &[(usize, Sign)]) -> Option<Cell> {
        for &(dir, sign) in word {
            if dir >= cell.dim {
                return None;
            }
            cell = self.face(cell, dir, sign);
        }
        Some(cell)
    }

    /// All incidences in which `cell` is a codimension-one face.
    pub fn cofaces(&self, cell: Cell) -> &[Coface] {
        &self.cofaces[cell.dim][cell.index]
    }

    /// The vertex of `cell` at `corner`, where `corner[i]` is the sign of direction `i`.
    pub fn corner(&self, mut cell: Cell, corner: &[Sign]) -> Cell {
        debug_assert_eq!(corner.len(), cell.dim);
        for dir in (0..cell.dim).rev() {
            cell = self.face(cell, dir, corner[dir]);
        }
        cell
    }

    /// The vertices of `cell`, indexed by corner bitmask (bit `i` = direction `i`).
    pub fn corners(&self, cell: Cell) -> Vec<Cell> {
        (0..1usize << cell.dim)
            .map(|mask| self.corner(cell, &corner_signs(mask, cell.dim)))
            .collect()
    }

    pub fn label(&self, cell: Cell) -> Option<&str> {
        self.labels.get(&cell).map(String::as_str)
    }

    pub fn labels(&self) -> &BTreeMap<Cell, String> {
        &self.labels
    }

    pub fn with_labels(mut self, labels: BTreeMap<Cell, String>) -> Self {
        self.labels = labels;
        self
    }

    /// Checks the cocubical identities on every cube (face targets always exist
    /// once a set has been constructed).
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for k in 2..self.keys.len() {
            for c in self.cells(k) {
                for j in 0..k - 1 {
                    for i in 0..=j {
                        for eps in Sign::BOTH {
                            for eta in Sign::BOTH {
                                let lhs = self.face(self.face(c, j + 1, eps), i, eta);
                                let rhs = self.face(self.face(c, i, eta), j, eps);
                                if lhs != rhs {
                                    violations.push(Violation::Cocubical {
                                        cube: self.key(c).to_string(),
                                        i,
                                        j,
                                        eps,
                                        eta,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Faces of `seeds`, iterated, together with the seeds.
    pub fn closure(&self, seeds: impl IntoIterator<Item = Cell>) -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<Cell> = seeds.into_iter().collect();
        while let Some(c) = stack.pop() {
            if !out.insert(c) {
                continue;
            }
            for dir in 0..c.dim {
                for sign in Sign::BOTH {
                    let f = self.face(c, dir, sign);
                    if !out.contains(&f) {
                        stack.push(f);
                    }
                }
            }
        }
        out
    }

    /// Cubes having `cell` as an iterated face, excluding `cell` itself.
    pub fn upper_star(&self, cell: Cell) -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([cell]);
        while let Some(c) = queue.pop_front() {
            for cf in self.cofaces(c) {
                if out.insert(cf.cube) {
                    queue.push_back(cf.cube);
                }
            }
        }
        out
    }

    /// The subobject on a face-closed set of cubes, keeping keys and labels.
    pub fn subobject(&self, cells: &BTreeSet<Cell>) -> PrecubicalSet {
        let top = cells.iter().map(|c| c.dim + 1).max().unwrap_or(0);
        let mut levels = vec![Level::default(); top];
        let mut local: HashMap<Cell, usize> = HashMap::new();
        let mut labels = HashMap::new();
        for &c in cells {
            let level = &mut levels[c.dim];
            let idx = level.keys.len();
            level.keys.push(self.key(c).to_string());
            local.insert(c, idx);
            if let Some(l) = self.label(c) {
                labels.insert((c.dim, idx), l.to_string());
            }
        }
        for &c in cells {
            for dir in 0..c.dim {
                for sign in Sign::BOTH {
                    let f = self.face(c, dir, sign);
                    let fi = *local
                        .get(&f)
                        .expect("subobject requires a face-closed set of cubes");
                    levels[c.dim].faces.push(fi);
                }
            }
        }
        PrecubicalSet::from_levels(levels, labels)
            .expect("keys of a subobject are unique")
            .0
    }

    /// Smallest subobject containing `seeds`.
    pub fn span(&self, seeds: impl IntoIterator<Item = Cell>) -> PrecubicalSet {
        self.subobject(&self.closure(seeds))
    }

    /// [`PrecubicalSet::span`] with seeds given by key.
    pub fn span_keys<S: AsRef<str>>(&self, seeds: &[S]) -> Result<PrecubicalSet, PcsError> {
        let cells = seeds
            .iter()
            .map(|k| {
                self.cell(k.as_ref())
                    .ok_or_else(|| PcsError::UnknownCube(k.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.span(cells))
    }

    pub fn to_document(&self) -> PcsDocument {
        let mut dims = BTreeMap::new();
        let mut faces = BTreeMap::new();
        for (dim, ks) in self.keys.iter().enumerate() {
            dims.insert(dim.to_string(), ks.clone());
            for c in self.cells(dim) {
                let mut entry = BTreeMap::new();
                for dir in 0..dim {
                    for sign in Sign::BOTH {
                        entry.insert(
                            format!("{dir}{sign}"),
                            self.key(self.face(c, dir, sign)).to_string(),
                        );
                    }
                }
                if dim > 0 {
                    faces.insert(self.key(c).to_string(), entry);
                }
            }
        }
        let labels = self
            .labels
            .iter()
            .map(|(c, l)| (self.key(*c).to_string(), l.clone()))
            .collect();
        PcsDocument {
            dims,
            faces,
            labels,
        }
    }

    /// Key-sorted JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<PrecubicalSet, PcsError> {
        let doc: PcsDocument =
            serde_json::from_str(text).map_err(|e| PcsError::Malformed(e.to_string()))?;
        doc.into_set()
    }
}

/// Signs of the corner encoded by `mask`.
pub fn corner_signs(mask: usize, dim: usize) -> Vec<Sign> {
    (0..dim).map(|i| Sign::from_bit((mask >> i) & 1)).collect()
}

/// JSON interchange form of a precubical set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcsDocument {
    pub dims: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub faces: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

impl PcsDocument {
    /// Structural checks that must pass before a set can be built.
    pub fn structural_report(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut dim_of: HashMap<&str, usize> = HashMap::new();
        for (entry, ks) in &self.dims {
            let Ok(dim) = entry.parse::<usize>() else {
                violations.push(Violation::BadDimension {
                    entry: entry.clone(),
                });
                continue;
            };
            for k in ks {
                if dim_of.insert(k, dim).is_some() {
                    violations.push(Violation::DuplicateKey { key: k.clone() });
                }
            }
        }
        for (cube, entries) in &self.faces {
            if !dim_of.contains_key(cube.as_str()) {
                violations.push(Violation::UnknownCube { key: cube.clone() });
            }
            for entry in entries.keys() {
                if parse_face_entry(entry).is_none() {
                    violations.push(Violation::UnexpectedFace {
                        cube: cube.clone(),
                        entry: entry.clone(),
                    });
                }
            }
        }
        for key in self.labels.keys() {
            if !dim_of.contains_key(key.as_str()) {
                violations.push(Violation::UnknownCube { key: key.clone() });
            }
        }
        let empty = BTreeMap::new();
        for (entry, ks) in &self.dims {
            let Ok(dim) = entry.parse::<usize>() else {
                continue;
            };
            for cube in ks {
                let entries = self.faces.get(cube).unwrap_or(&empty);
                for e in entries.keys() {
                    if let Some((dir, _)) = parse_face_entry(e) {
                        if dir >= dim {
                            violations.push(Violation::UnexpectedFace {
                                cube: cube.clone(),
                                entry: e.clone(),
                            });
                        }
                    }
                }
                for dir in 0..dim {
                    for sign in Sign::BOTH {
                        match entries.get(&format!("{dir}{sign}")) {
                            None => violations.push(Violation::MissingFace {
                                cube: cube.clone(),
                                dir,
                                sign,
                            }),
                            Some(target) => match dim_of.get(target.as_str()) {
                                None => violations.push(Violation::UnknownTarget {
                                    cube: cube.clone(),
                                    dir,
                                    sign,
                                    target: target.clone(),
                                }),
                                Some(&d) if d + 1 != dim => {
                                    violations.push(Violation::WrongDimension {
                                        cube: cube.clone(),
                                        dir,
                                        sign,
                                        target: target.clone(),
                                    })
                                }
                                Some(_) => {}
                            },
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Full validation: structure first, then the cocubical identities.
    pub fn validate(&self) -> ValidationReport {
        let structural = self.structural_report();
        if !structural.is_ok() {
            return structural;
        }
        match self.build() {
            Ok(set) => set.validate(),
            Err(_) => structural,
        }
    }

    fn build(&self) -> Result<PrecubicalSet, PcsError> {
        let top = self
            .dims
            .keys()
            .filter_map(|d| d.parse::<usize>().ok())
            .max()
            .map_or(0, |d| d + 1);
        let mut levels = vec![Level::default(); top];
        let mut local: HashMap<&str, (usize, usize)> = HashMap::new();
        for (entry, ks) in &self.dims {
            let dim: usize = entry
                .parse()
                .map_err(|_| PcsError::Malformed(format!("dimension `{entry}`")))?;
            for k in ks {
                local.insert(k, (dim, levels[dim].keys.len()));
                levels[dim].keys.push(k.clone());
            }
        }
        for (dim, level) in levels.iter_mut().enumerate() {
            for k in level.keys.clone() {
                for dir in 0..dim {
                    for sign in Sign::BOTH {
                        let target = self
                            .faces
                            .get(&k)
                            .and_then(|e| e.get(&format!("{dir}{sign}")))
                            .ok_or_else(|| {
                                PcsError::Malformed(format!("`{k}` lacks {dir}{sign}"))
                            })?;
                        let (_, idx) = *local
                            .get(target.as_str())
                            .ok_or_else(|| PcsError::UnknownCube(target.clone()))?;
                        level.faces.push(idx);
                    }
                }
            }
        }
        let mut labels = HashMap::new();
        for (k, l) in &self.labels {
            let &(dim, idx) = local
                .get(k.as_str())
                .ok_or_else(|| PcsError::UnknownCube(k.clone()))?;
            labels.insert((dim, idx), l.clone());
        }
        Ok(PrecubicalSet::from_levels(levels, labels)?.0)
    }

    /// Builds and validates; any violation is returned as [`PcsError::Invalid`].
    pub fn into_set(self) -> Result<PrecubicalSet, PcsError> {
        let structural = self.structural_report();
        if !structural.is_ok() {
            return Err(PcsError::Invalid(structural));
        }
        let set = self.build()?;
        let report = set.validate();
        if !report.is_ok() {
            return Err(PcsError::Invalid(report));
        }
        Ok(set)
    }
}

fn parse_face_entry(entry: &str) -> Option<(usize, Sign)> {
    let sign = Sign::from_symbol(entry.chars().last()?)?;
    let dir = entry[..entry.len() - 1].parse().ok()?;
    Some((dir, sign))
}

/// Incremental construction from string keys.
#[derive(Clone, Debug, Default)]
pub struct PcsBuilder {
    cubes: Vec<(String, Vec<[String; 2]>)>,
    labels: Vec<(String, String)>,
}

impl PcsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, key: impl Into<String>) -> &mut Self {
        self.cubes.push((key.into(), Vec::new()));
        self
    }

    /// Adds a cube whose `i`-th face pair is `(lower, upper)`; its dimension is
    /// the number of pairs.
    pub fn cube<K: Into<String>, F: AsRef<str>>(&mut self, key: K, faces: &[(F, F)]) -> &mut Self {
        let faces = faces
            .iter()
            .map(|(a, b)| [a.as_ref().to_string(), b.as_ref().to_string()])
            .collect();
        self.cubes.push((key.into(), faces));
        self
    }

    pub fn edge(&mut self, key: impl Into<String>, source: &str, target: &str) -> &mut Self {
        self.cube(key, &[(source, target)])
    }

    pub fn label(&mut self, key: impl Into<String>, label: impl Into<String>) -> &mut Self {
        self.labels.push((key.into(), label.into()));
        self
    }

    pub fn build(&self) -> Result<PrecubicalSet, PcsError> {
        let mut dim_of: HashMap<&str, (usize, usize)> = HashMap::new();
        let top = self
            .cubes
            .iter()
            .map(|(_, f)| f.len() + 1)
            .max()
            .unwrap_or(0);
        let mut levels = vec![Level::default(); top];
        for (key, faces) in &self.cubes {
            let dim = faces.len();
            let idx = levels[dim].keys.len();
            if dim_of.insert(key, (dim, idx)).is_some() {
                return Err(PcsError::DuplicateKey(key.clone()));
            }
            levels[dim].keys.push(key.clone());
        }
        for (key, faces) in &self.cubes {
            let dim = faces.len();
            for (dir, pair) in faces.iter().enumerate() {
                for (bit, target) in pair.iter().enumerate() {
                    let &(fd, fi) = dim_of
                        .get(target.as_str())
                        .ok_or_else(|| PcsError::UnknownCube(target.clone()))?;
                    if fd + 1 != dim {
                        return Err(PcsError::FaceDimension {
                            cube: key.clone(),
                            dir,
                            sign: Sign::from_bit(bit),
                            face: target.clone(),
                            found: fd,
                            expected: dim - 1,
                        });
                    }
                    levels[dim].faces.push(fi);
                }
            }
        }
        let mut labels = HashMap::new();
        for (key, label) in &self.labels {
            let &(d, i) = dim_of
                .get(key.as_str())
                .ok_or_else(|| PcsError::UnknownCube(key.clone()))?;
            labels.insert((d, i), label.clone());
        }
        Ok(PrecubicalSet::from_levels(levels, labels)?.0)
    }
}

/// Tensor product of two sets; cube `(a, b)` is keyed `"(a,b)"`.
pub fn tensor(p: &PrecubicalSet, q: &PrecubicalSet) -> PrecubicalSet {
    tensor_many(&[p, q])
}

/// Tensor product of several sets with flat tuple keys `"(k1,...,kn)"`.
///
/// Labels concatenate in factor order; a product cube is labelled when at least
/// one of its factors is.
pub fn tensor_many(factors: &[&PrecubicalSet]) -> PrecubicalSet {
    if factors.is_empty() {
        return PrecubicalSet::empty();
    }
    let all: Vec<Vec<Cell>> = factors.iter().map(|f| f.all_cells().collect()).collect();
    let mut tuples: Vec<Vec<Cell>> = vec![Vec::new()];
    for cells in &all {
        let mut next = Vec::with_capacity(tuples.len() * cells.len());
        for t in &tuples {
            for &c in cells {
                let mut t2 = t.clone();
                t2.push(c);
                next.push(t2);
            }
        }
        tuples = next;
    }
    let top: usize = factors.iter().map(|f| f.dim()).sum::<usize>() + 1;
    let mut levels = vec![Level::default(); top];
    let mut local: HashMap<Vec<Cell>, usize> = HashMap::new();
    let mut labels = HashMap::new();
    for t in &tuples {
        let dim: usize = t.iter().map(|c| c.dim).sum();
        let idx = levels[dim].keys.len();
        let parts: Vec<&str> = t.iter().zip(factors).map(|(c, f)| f.key(*c)).collect();
        levels[dim].keys.push(format!("({})", parts.join(",")));
        let labelled: Vec<Option<&str>> = t.iter().zip(factors).map(|(c, f)| f.label(*c)).collect();
        if labelled.iter().any(Option::is_some) {
            let l: String = labelled.iter().map(|l| l.unwrap_or("")).collect();
            labels.insert((dim, idx), l);
        }
        local.insert(t.clone(), idx);
    }
    for t in &tuples {
        let dim: usize = t.iter().map(|c| c.dim).sum();
        for dir in 0..dim {
            let (slot, within) = locate_direction(t, dir);
            for sign in Sign::BOTH {
                let mut f = t.clone();
                f[slot] = factors[slot].face(t[slot], within, sign);
                levels[dim].faces.push(local[&f]);
            }
        }
    }
    PrecubicalSet::from_levels(levels, labels)
        .expect("tensor keys collide; factor keys contain unbalanced separators")
        .0
}

/// Factor owning direction `dir` of a product cube, and the direction within it.
fn locate_direction(tuple: &[Cell], mut dir: usize) -> (usize, usize) {
    for (slot, c) in tuple.iter().enumerate() {
        if dir < c.dim {
            return (slot, dir);
        }
        dir -= c.dim;
    }
    unreachable!("direction beyond the product dimension")
}

/// `tensor_many` of `n` copies of `p`.
pub fn tensor_power(p: &PrecubicalSet, n: usize) -> PrecubicalSet {
    let copies: Vec<&PrecubicalSet> = std::iter::repeat_n(p, n).collect();
    tensor_many(&copies)
}

/// One edge `0 -> 1`.
pub fn interval() -> PrecubicalSet {
    linear_graph(1)
}

/// Two edges `-1 -> 0 -> 1`.
pub fn triple_interval() -> PrecubicalSet {
    centered_line(1)
}

/// Vertices `0..=k` and edges `i>i+1`.
pub fn linear_graph(k: usize) -> PrecubicalSet {
    assert!(k >= 1);
    chain(0, k as i64)
}

/// Vertices `-r..=r` and edges `i>i+1`.
pub fn centered_line(r: usize) -> PrecubicalSet {
    assert!(r >= 1);
    chain(-(r as i64), r as i64)
}

fn chain(lo: i64, hi: i64) -> PrecubicalSet {
    let mut b = PcsBuilder::new();
    for x in lo..=hi {
        b.vertex(x.to_string());
    }
    for x in lo..hi {
        b.edge(
            format!("{x}>{}", x + 1),
            &x.to_string(),
            &(x + 1).to_string(),
        );
    }
    b.build().expect("chain is well formed")
}

/// One vertex `v` with one edge `v>v`.
pub fn loop_graph() -> PrecubicalSet {
    let mut b = PcsBuilder::new();
    b.vertex("v").edge("v>v", "v", "v");
    b.build().expect("loop is well formed")
}

/// A line `a -> v -> b` with an extra loop at `v`.
pub fn loop_with_tail() -> PrecubicalSet {
    let mut b = PcsBuilder::new();
    b.vertex("a")
        .vertex("v")
        .vertex("b")
        .edge("a>v", "a", "v")
        .edge("v>b", "v", "b")
        .edge("v>v", "v", "v");
    b.build().expect("loop with tail is well formed")
}

/// The window `[-r, r]^n` of the standard grid, keys `"(x1,...,xn)"` where each
/// coordinate is an integer `a` or an edge `a>a+1`.
pub fn grid_window(n: usize, r: usize) -> PrecubicalSet {
    assert!(n >= 1 && r >= 1);
    tensor_power(&centered_line(r), n)
}

/// Closed integer box `[lo_i, hi_i]` per axis.
pub type GridBox = Vec<(i64, i64)>;

/// Coordinate of a grid cube along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridCoord {
    Vertex(i64),
    Edge(i64),
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridCoord::Vertex(a) => write!(f, "{a}"),
            GridCoord::Edge(a) => write!(f, "{a}>{}", a + 1),
        }
    }
}

/// Parses a grid key such as `"(0>1,-1)"`.
pub fn parse_grid_key(key: &str) -> Option<Vec<GridCoord>> {
    let inner = key.strip_prefix('(')?.strip_suffix(')')?;
    inner
        .split(',')
        .map(|part| match part.split_once('>') {
            Some((a, b)) => {
                let a: i64 = a.parse().ok()?;
                let b: i64 = b.parse().ok()?;
                (b == a + 1).then_some(GridCoord::Edge(a))
            }
            None => part.parse().ok().map(GridCoord::Vertex),
        })
        .collect()
}

pub fn grid_key(coords: &[GridCoord]) -> String {
    let parts: Vec<String> = coords.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

/// Union of closed boxes of the integer grid, with the keys of [`grid_window`].
/// All boxes must have the same number of axes.
pub fn box_union(boxes: &[GridBox]) -> PrecubicalSet {
    let mut cells: BTreeSet<Vec<GridCoord>> = BTreeSet::new();
    for bx in boxes {
        let mut acc: Vec<Vec<GridCoord>> = vec![Vec::new()];
        for &(lo, hi) in bx {
            let mut options = Vec::new();
            for a in lo..=hi {
                options.push(GridCoord::Vertex(a));
                if a < hi {
                    options.push(GridCoord::Edge(a));
                }
            }
            acc = acc
                .into_iter()
                .flat_map(|t| {
                    options.iter().map(move |o| {
                        let mut t = t.clone();
                        t.push(*o);
                        t
                    })
                })
                .collect();
        }
        cells.extend(acc);
    }
    grid_cells(&cells)
}

fn grid_cells(cells: &BTreeSet<Vec<GridCoord>>) -> PrecubicalSet {
    let mut b = PcsBuilder::new();
    for t in cells {
        let mut faces = Vec::new();
        for (slot, c) in t.iter().enumerate() {
            if let GridCoord::Edge(a) = *c {
                let mut lo = t.clone();
                lo[slot] = GridCoord::Vertex(a);
                let mut hi = t.clone();
                hi[slot] = GridCoord::Vertex(a + 1);
                faces.push((grid_key(&lo), grid_key(&hi)));
            }
        }
        b.cube(grid_key(t), &faces);
    }
    b.build().expect("box union is face closed")
}

/// Cubes of `grid_window(d, 1)` having at least one coordinate equal to the vertex 0:
/// for `d = 2` the four-armed cross, for `d = 3` the union of the three coordinate
/// planes.
pub fn axis_cross(d: usize) -> PrecubicalSet {
    let boxes: Vec<GridBox> = (0..d)
        .map(|zero| {
            (0..d)
                .map(|i| if i == zero { (0, 0) } else { (-1, 1) })
                .collect()
        })
        .collect();
    box_union(&boxes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_square() -> PrecubicalSet {
        tensor(&interval(), &interval())
    }

    #[test]
    fn free_square_faces_follow_the_convention() {
        let sq = free_square();
        let c = sq.cells(2).next().unwrap();
        assert_eq!(sq.key(sq.face(c, 1, Sign::Minus)), "(0>1,0)");
        assert_eq!(sq.key(sq.face(c, 0, Sign::Minus)), "(0,0>1)");
        assert_eq!(sq.key(sq.face(c, 0, Sign::Plus)), "(1,0>1)");
        let top_left = sq.face(sq.face(c, 0, Sign::Minus), 0, Sign::Plus);
        assert_eq!(sq.key(top_left), "(0,1)");
        assert!(sq.validate().is_ok());
    }

    #[test]
    fn redirected_edge_breaks_one_relation() {
        let mut b = PcsBuilder::new();
        for v in ["00", "10", "01", "11", "w"] {
            b.vertex(v);
        }
        b.edge("bottom", "00", "w")
            .edge("top", "01", "11")
            .edge("left", "00", "01")
            .edge("right", "10", "11")
            .cube("sq", &[("left", "right"), ("bottom", "top")]);
        let report = b.build().unwrap().validate();
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::Cocubical { cube, i, j, .. } => {
                assert_eq!((cube.as_str(), *i, *j), ("sq", 0, 0));
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn tensor_counts() {
        assert_eq!(free_square().counts(), vec![4, 4, 1]);
        let i = triple_interval();
        assert_eq!(tensor_many(&[&i, &i, &i]).counts(), vec![27, 54, 36, 8]);
    }

    #[test]
    fn tensor_labels_concatenate() {
        let mut a = PcsBuilder::new();
        a.vertex("s")
            .vertex("t")
            .edge("e", "s", "t")
            .label("e", "a");
        let mut b = PcsBuilder::new();
        b.vertex("s")
            .vertex("t")
            .edge("e", "s", "t")
            .label("e", "b");
        let sq = tensor(&a.build().unwrap(), &b.build().unwrap());
        let c = sq.cells(2).next().unwrap();
        assert_eq!(sq.label(c), Some("ab"));
        let sides: Vec<_> = (0..2)
            .flat_map(|d| Sign::BOTH.map(|s| sq.label(sq.face(c, d, s)).unwrap().to_string()))
            .collect();
        assert_eq!(sides, ["b", "b", "a", "a"]);
    }

    #[test]
    fn builders() {
        assert_eq!(linear_graph(3).counts(), vec![4, 3]);
        let l = loop_graph();
        assert_eq!(l.counts(), vec![1, 1]);
        let e = l.cells(1).next().unwrap();
        assert_eq!(l.face(e, 0, Sign::Minus), l.face(e, 0, Sign::Plus));
        assert_eq!(grid_window(2, 1).counts(), vec![9, 12, 4]);
        assert_eq!(grid_window(2, 2).counts(), vec![25, 40, 16]);
        assert_eq!(axis_cross(2).counts(), vec![5, 4]);
        assert_eq!(axis_cross(3).counts(), vec![19, 30, 12]);
    }

    #[test]
    fn span_examples() {
        let sq = free_square();
        let c = sq.cells(2).next().unwrap();
        assert_eq!(sq.span([c]), sq);
        let g = axis_cross(2);
        let right = g.span_keys(&["(0>1,0)"]).unwrap();
        assert_eq!(right.counts(), vec![2, 1]);
        assert!(matches!(
            g.span_keys(&["nope"]),
            Err(PcsError::UnknownCube(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = grid_window(2, 1);
        let text = g.to_json();
        let back = PrecubicalSet::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"0+\""));
    }

    #[test]
    fn loader_reports_missing_targets() {
        let text = r#"{"dims":{"0":["a"],"1":["e"]},"faces":{"e":{"0-":"a","0+":"b"}}}"#;
        match PrecubicalSet::from_json(text) {
            Err(PcsError::Invalid(r)) => {
                assert!(matches!(r.violations[0], Violation::UnknownTarget { .. }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_keys_parse() {
        assert_eq!(
            parse_grid_key("(0>1,-1)"),
            Some(vec![GridCoord::Edge(0), GridCoord::Vertex(-1)])
        );
        assert_eq!(parse_grid_key("(0>2)"), None);
        assert_eq!(parse_grid_key("v"), None);
    }
}
