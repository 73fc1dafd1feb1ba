//! A toy concurrent language and its cubical semantics.
//!
//! A program is a parallel composition `p1 | p2 | ...` of processes, each a
//! sequence `i1; i2; ...` of instructions. `P(m)` and `V(m)` lock and release a
//! mutex, `W(b)` waits at a barrier, and any other identifier is a plain action.
//! A process becomes a labelled linear graph and a program the tensor product
//! of its processes. The geometric model removes the cubes where a mutex is held
//! twice or where a barrier is reached by some participants only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::pcs::{linear_graph, parse_grid_key, tensor_many, Cell, GridCoord, PrecubicalSet, Sign};

/// Letter used on the padding edges around atomic instructions.
pub const PADDING: &str = "_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomicKind {
    P,
    V,
    W,
}

impl AtomicKind {
    fn symbol(self) -> char {
        match self {
            AtomicKind::P => 'P',
            AtomicKind::V => 'V',
            AtomicKind::W => 'W',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Atomic { kind: AtomicKind, resource: String },
    Plain(String),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Atomic { kind, resource } => write!(f, "{}({resource})", kind.symbol()),
            Instruction::Plain(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub processes: Vec<Vec<Instruction>>,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let procs: Vec<String> = self
            .processes
            .iter()
            .map(|p| {
                p.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect();
        write!(f, "{}", procs.join("|"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HdaError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("process {process}: {message}")]
    NotConservative { process: usize, message: String },
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

#[derive(Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Open,
    Close,
    Semi,
    Bar,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Open => "`(`".into(),
            Token::Close => "`)`".into(),
            Token::Semi => "`;`".into(),
            Token::Bar => "`|`".into(),
            Token::End => "end of input".into(),
        }
    }
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Next token with the position where it starts.
    fn next(&mut self) -> Result<(Token, usize, usize), HdaError> {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
        let (line, column) = (self.line, self.column);
        let Some(&c) = self.chars.peek() else {
            return Ok((Token::End, line, column));
        };
        let tok = match c {
            '(' => Token::Open,
            ')' => Token::Close,
            ';' => Token::Semi,
            '|' => Token::Bar,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                return Ok((Token::Ident(s), line, column));
            }
            other => {
                return Err(HdaError::Syntax {
                    line,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        self.bump();
        Ok((tok, line, column))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    ahead: (Token, usize, usize),
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, HdaError> {
        let mut lexer = Lexer::new(text);
        let ahead = lexer.next()?;
        Ok(Parser { lexer, ahead })
    }

    fn advance(&mut self) -> Result<(Token, usize, usize), HdaError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.ahead, next))
    }

    fn error<T>(&self, expected: &str) -> Result<T, HdaError> {
        Err(HdaError::Syntax {
            line: self.ahead.1,
            column: self.ahead.2,
            message: format!("expected {expected}, found {}", self.ahead.0.describe()),
        })
    }

    fn instruction(&mut self) -> Result<Instruction, HdaError> {
        let Token::Ident(name) = &self.ahead.0 else {
            return self.error("an instruction");
        };
        let name = name.clone();
        let (_, line, column) = self.advance()?;
        let kind = match name.as_str() {
            "P" => Some(AtomicKind::P),
            "V" => Some(AtomicKind::V),
            "W" => Some(AtomicKind::W),
            _ => None,
        };
        match (kind, &self.ahead.0) {
            (Some(kind), Token::Open) => {
                self.advance()?;
                let Token::Ident(resource) = &self.ahead.0 else {
                    return self.error("a resource name");
                };
                let resource = resource.clone();
                self.advance()?;
                if self.ahead.0 != Token::Close {
                    return self.error("`)`");
                }
                self.advance()?;
                Ok(Instruction::Atomic { kind, resource })
            }
            _ if name == PADDING => Err(HdaError::Syntax {
                line,
                column,
                message: format!("`{PADDING}` is reserved"),
            }),
            _ => Ok(Instruction::Plain(name)),
        }
    }

    fn program(&mut self) -> Result<Program, HdaError> {
        let mut processes = vec![vec![self.instruction()?]];
        loop {
            match self.ahead.0 {
                Token::Semi => {
                    self.advance()?;
                    let i = self.instruction()?;
                    processes.last_mut().expect("non-empty").push(i);
                }
                Token::Bar => {
                    self.advance()?;
                    processes.push(vec![self.instruction()?]);
                }
                Token::End => return Ok(Program { processes }),
                _ => return self.error("`;`, `|` or end of input"),
            }
        }
    }
}

/// Parses a program and checks that every process locks and releases each
/// mutex alternately, starting with `P` and ending released.
pub fn parse(text: &str) -> Result<Program, HdaError> {
    let program = Parser::new(text)?.program()?;
    for (k, process) in program.processes.iter().enumerate() {
        let mut held: BTreeSet<&str> = BTreeSet::new();
        for ins in process {
            if let Instruction::Atomic { kind, resource } = ins {
                match kind {
                    AtomicKind::P if !held.insert(resource) => {
                        return Err(HdaError::NotConservative {
                            process: k,
                            message: format!("`P({resource})` while holding `{resource}`"),
                        })
                    }
                    AtomicKind::V if !held.remove(resource.as_str()) => {
                        return Err(HdaError::NotConservative {
                            process: k,
                            message: format!("`V({resource})` without holding `{resource}`"),
                        })
                    }
                    _ => {}
                }
            }
        }
        if let Some(r) = held.first() {
            return Err(HdaError::NotConservative {
                process: k,
                message: format!("`{r}` is never released"),
            });
        }
    }
    Ok(program)
}

/// A letter of a cube label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Atomic(AtomicKind, String),
    Plain(String),
    Padding,
}

impl Letter {
    /// Letters that label edges.
    pub fn is_action(&self) -> bool {
        !matches!(self, Letter::Atomic(..))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Atomic(k, r) => write!(f, "{}({r})", k.symbol()),
            Letter::Plain(n) => write!(f, "{n}"),
            Letter::Padding => write!(f, "{PADDING}"),
        }
    }
}

pub fn render_word(word: &[Letter]) -> String {
    word.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A labelled precubical set built from a program. Cubes of the product are
/// tuples of cubes of the process graphs; `words` holds the label of every cube.
#[derive(Clone, Debug)]
pub struct Hda {
    pub set: PrecubicalSet,
    pub words: BTreeMap<Cell, Vec<Letter>>,
    processes: Vec<ProcessGraph>,
}

/// The linear graph of one process: positions of the vertices and edges along it.
#[derive(Clone, Debug)]
struct ProcessGraph {
    vertex_words: Vec<Vec<Letter>>,
    edge_letters: Vec<Letter>,
}

impl ProcessGraph {
    fn build(process: &[Instruction]) -> ProcessGraph {
        let mut vertex_words = vec![Vec::new()];
        let mut edge_letters = Vec::new();
        for ins in process {
            match ins {
                Instruction::Atomic { kind, resource } => {
                    edge_letters.push(Letter::Padding);
                    vertex_words.push(vec![Letter::Atomic(*kind, resource.clone())]);
                }
                Instruction::Plain(name) => {
                    edge_letters.push(Letter::Plain(name.clone()));
                    vertex_words.push(Vec::new());
                }
            }
        }
        if matches!(process.last(), Some(Instruction::Atomic { .. })) {
            edge_letters.push(Letter::Padding);
            vertex_words.push(Vec::new());
        }
        ProcessGraph {
            vertex_words,
            edge_letters,
        }
    }

    fn word(&self, c: GridCoord) -> Vec<Letter> {
        match c {
            GridCoord::Vertex(x) => self.vertex_words[x as usize].clone(),
            GridCoord::Edge(x) => vec![self.edge_letters[x as usize].clone()],
        }
    }

    fn graph(&self) -> PrecubicalSet {
        linear_graph(self.edge_letters.len())
    }

    fn atomics(&self) -> impl Iterator<Item = (usize, &AtomicKind, &str)> {
        self.vertex_words.iter().enumerate().flat_map(|(x, w)| {
            w.iter().filter_map(move |l| match l {
                Letter::Atomic(k, r) => Some((x, k, r.as_str())),
                _ => None,
            })
        })
    }
}

impl Hda {
    fn coords(&self, c: Cell) -> Vec<GridCoord> {
        parse_grid_key(self.set.key(c)).expect("product keys")
    }

    fn word_of(&self, coords: &[GridCoord]) -> Vec<Letter> {
        coords
            .iter()
            .zip(&self.processes)
            .flat_map(|(&c, g)| g.word(c))
            .collect()
    }

    /// Position of every cube along each process.
    pub fn coordinates(&self, c: Cell) -> Vec<GridCoord> {
        self.coords(c)
    }

    /// Checks that every cube carries as many action letters as its dimension
    /// and that taking a face replaces the action letter of that direction by the
    /// word of the vertex reached.
    pub fn check(&self) -> Result<(), String> {
        for c in self.set.all_cells() {
            let word = &self.words[&c];
            let actions = word.iter().filter(|l| l.is_action()).count();
            if actions != c.dim {
                return Err(format!(
                    "`{}` has {actions} action letters",
                    self.set.key(c)
                ));
            }
            let coords = self.coords(c);
            let slots: Vec<usize> = (0..coords.len())
                .filter(|&k| matches!(coords[k], GridCoord::Edge(_)))
                .collect();
            for (i, &slot) in slots.iter().enumerate() {
                for sign in Sign::BOTH {
                    let face = self.set.face(c, i, sign);
                    let GridCoord::Edge(x) = coords[slot] else {
                        unreachable!()
                    };
                    let end = GridCoord::Vertex(x + sign.bit() as i64);
                    let before: usize = coords[..slot]
                        .iter()
                        .zip(&self.processes)
                        .map(|(&k, g)| g.word(k).len())
                        .sum();
                    let mut expected = word.clone();
                    expected.splice(before..before + 1, self.processes[slot].word(end));
                    if self.words[&face] != expected {
                        return Err(format!(
                            "face {i}{sign} of `{}` is labelled `{}`",
                            self.set.key(c),
                            render_word(&self.words[&face])
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn assemble(processes: Vec<ProcessGraph>) -> Hda {
    let graphs: Vec<PrecubicalSet> = processes.iter().map(ProcessGraph::graph).collect();
    let refs: Vec<&PrecubicalSet> = graphs.iter().collect();
    let set = tensor_many(&refs);
    let mut hda = Hda {
        set,
        words: BTreeMap::new(),
        processes,
    };
    let words: BTreeMap<Cell, Vec<Letter>> = hda
        .set
        .all_cells()
        .map(|c| (c, hda.word_of(&hda.coords(c))))
        .collect();
    let labels = words
        .iter()
        .filter(|(_, w)| !w.is_empty())
        .map(|(&c, w)| (c, render_word(w)))
        .collect();
    hda.set = std::mem::replace(&mut hda.set, PrecubicalSet::empty()).with_labels(labels);
    hda.words = words;
    hda
}

/// The labelled linear graph of one process: a padding edge before every atomic
/// instruction followed by a vertex carrying it, one labelled edge per plain
/// instruction, and a closing padding edge after a final atomic instruction.
pub fn interpret_process(process: &[Instruction]) -> Hda {
    assemble(vec![ProcessGraph::build(process)])
}

/// The tensor product of the process graphs, labels concatenated in process order.
pub fn interpret_program(program: &Program) -> Hda {
    assemble(
        program
            .processes
            .iter()
            .map(|p| ProcessGraph::build(p))
            .collect(),
    )
}

/// Why a cube leaves the geometric model.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Conflict {
    Mutex(String),
    Barrier(String),
}

/// The geometric model of a program.
#[derive(Clone, Debug)]
pub struct Model {
    /// The subobject spanned by the cubes without conflicts.
    pub set: PrecubicalSet,
    /// Every cube with a conflict, by key.
    pub removed: BTreeMap<String, Vec<Conflict>>,
    /// Conflicting cubes that are faces of conflict-free cubes and therefore
    /// remain in the span.
    pub restored: Vec<String>,
}

/// Marks the cubes where two processes hold the same mutex or where a barrier
/// has been reached by some of its participants and not by others, then spans
/// the remaining cubes.
///
/// A process holds `m` on the cubes strictly between a `P(m)` vertex and the
/// matching `V(m)` vertex. The participants of a barrier are all processes that
/// wait on it.
pub fn geometric_model(hda: &Hda) -> Model {
    let mut holds: BTreeMap<&str, Vec<Vec<(i64, i64)>>> = BTreeMap::new();
    let mut waits: BTreeMap<&str, Vec<Vec<i64>>> = BTreeMap::new();
    let np = hda.processes.len();
    for (k, g) in hda.processes.iter().enumerate() {
        let mut open: BTreeMap<&str, i64> = BTreeMap::new();
        for (x, kind, r) in g.atomics() {
            match kind {
                AtomicKind::P => {
                    open.insert(r, x as i64);
                }
                AtomicKind::V => {
                    let start = open.remove(r).expect("conservative program");
                    holds.entry(r).or_insert_with(|| vec![Vec::new(); np])[k]
                        .push((start, x as i64));
                }
                AtomicKind::W => {
                    waits.entry(r).or_insert_with(|| vec![Vec::new(); np])[k].push(x as i64);
                }
            }
        }
    }
    let inside = |c: GridCoord, (a, b): (i64, i64)| match c {
        GridCoord::Vertex(x) => a < x && x < b,
        GridCoord::Edge(x) => a <= x && x < b,
    };
    let mut removed: BTreeMap<String, Vec<Conflict>> = BTreeMap::new();
    let mut kept = Vec::new();
    for c in hda.set.all_cells() {
        let coords = hda.coords(c);
        let mut conflicts = Vec::new();
        for (m, per) in &holds {
            let holding = coords
                .iter()
                .zip(per)
                .filter(|(&x, spans)| spans.iter().any(|&s| inside(x, s)))
                .count();
            if holding >= 2 {
                conflicts.push(Conflict::Mutex(m.to_string()));
            }
        }
        for (b, per) in &waits {
            let at: Vec<bool> = coords
                .iter()
                .zip(per)
                .filter(|(_, ws)| !ws.is_empty())
                .map(|(&x, ws)| ws.iter().any(|&w| x == GridCoord::Vertex(w)))
                .collect();
            if at.iter().any(|&a| a) && at.iter().any(|&a| !a) {
                conflicts.push(Conflict::Barrier(b.to_string()));
            }
        }
        if conflicts.is_empty() {
            kept.push(c);
        } else {
            removed.insert(hda.set.key(c).to_string(), conflicts);
        }
    }
    let set = hda.set.span(kept);
    let restored = removed
        .keys()
        .filter(|k| set.cell(k).is_some())
        .cloned()
        .collect();
    Model {
        set,
        removed,
        restored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_two_examples() {
        let mutex = parse("P(m);V(m)|P(m);V(m)").unwrap();
        assert_eq!(mutex.processes.len(), 2);
        assert_eq!(mutex.processes[0].len(), 2);
        let barrier = parse(" W(b) |\n W(b) ").unwrap();
        assert_eq!(
            barrier.processes,
            vec![
                vec![Instruction::Atomic {
                    kind: AtomicKind::W,
                    resource: "b".into()
                }];
                2
            ]
        );
        assert_eq!(mutex.to_string(), "P(m);V(m)|P(m);V(m)");
    }

    #[test]
    fn syntax_errors_have_positions() {
        assert_eq!(
            parse("a;\n  ;b"),
            Err(HdaError::Syntax {
                line: 2,
                column: 3,
                message: "expected an instruction, found `;`".into()
            })
        );
        assert!(matches!(
            parse("P(m"),
            Err(HdaError::Syntax {
                line: 1,
                column: 4,
                ..
            })
        ));
        assert!(matches!(
            parse("a # b"),
            Err(HdaError::Syntax { column: 3, .. })
        ));
        assert!(matches!(parse("_"), Err(HdaError::Syntax { .. })));
        assert!(matches!(parse(""), Err(HdaError::Syntax { .. })));
    }

    #[test]
    fn conservativeness() {
        assert!(matches!(
            parse("P(m);P(m)"),
            Err(HdaError::NotConservative { process: 0, .. })
        ));
        assert!(matches!(
            parse("a|V(m)"),
            Err(HdaError::NotConservative { process: 1, .. })
        ));
        assert!(matches!(
            parse("P(m)"),
            Err(HdaError::NotConservative { .. })
        ));
        assert!(parse("P(a);P(b);V(a);V(b)").is_ok());
    }

    #[test]
    fn process_graphs() {
        let p = parse("P(m);V(m)").unwrap();
        let h = interpret_process(&p.processes[0]);
        assert_eq!(h.set.counts(), vec![4, 3]);
        assert_eq!(h.set.label(h.set.cell("(1)").unwrap()), Some("P(m)"));
        assert_eq!(h.set.label(h.set.cell("(2)").unwrap()), Some("V(m)"));
        assert_eq!(h.set.label(h.set.cell("(0)").unwrap()), None);
        let w = interpret_process(&parse("W(b)").unwrap().processes[0]);
        assert_eq!(w.set.counts(), vec![3, 2]);
        assert_eq!(w.set.label(w.set.cell("(1)").unwrap()), Some("W(b)"));
        let plain = interpret_process(&parse("a;b").unwrap().processes[0]);
        assert_eq!(plain.set.counts(), vec![3, 2]);
        assert_eq!(plain.set.label(plain.set.cell("(0>1)").unwrap()), Some("a"));
        assert_eq!(plain.set.label(plain.set.cell("(1>2)").unwrap()), Some("b"));
        assert!(h.check().is_ok() && w.check().is_ok() && plain.check().is_ok());
    }

    #[test]
    fn mutex_model() {
        let h = interpret_program(&parse("P(m);V(m)|P(m);V(m)").unwrap());
        assert_eq!(h.set.counts(), vec![16, 24, 9]);
        h.check().unwrap();
        assert_eq!(h.set.label(h.set.cell("(1>2,1)").unwrap()), Some("_ P(m)"));
        let model = geometric_model(&h);
        assert_eq!(model.removed.keys().collect::<Vec<_>>(), vec!["(1>2,1>2)"]);
        assert!(model.restored.is_empty());
        assert_eq!(model.set.counts(), vec![16, 24, 8]);
        assert!(model.set.validate().is_ok());
    }

    #[test]
    fn barrier_model() {
        let h = interpret_program(&parse("W(b)|W(b)").unwrap());
        assert_eq!(h.set.counts(), vec![9, 12, 4]);
        let model = geometric_model(&h);
        assert_eq!(model.removed.len(), 8);
        assert!(model
            .removed
            .values()
            .all(|c| c == &vec![Conflict::Barrier("b".into())]));
        assert_eq!(model.set.count(2), 4);
        assert_eq!(model.restored.len(), 8);
    }

    #[test]
    fn nothing_removed_without_atomics() {
        let h = interpret_program(&parse("a;b|c").unwrap());
        let model = geometric_model(&h);
        assert!(model.removed.is_empty());
        assert_eq!(model.set, h.set);
    }
}
