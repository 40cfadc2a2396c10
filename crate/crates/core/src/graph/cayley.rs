//! Cayley balls `B(1, R)` in the word metric.
//!
//! Words use the letters `a b c d` for generators and capitals for their
//! inverses. The identity is the empty word, printed as `e`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use super::{Graph, GraphError, Result, Vertex};

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

/// The commutator product `[a,b][c,d]`.
const SURFACE_RELATOR: &[u8] = b"abABcdCD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Free group on `rank` generators, `1 <= rank <= 4`.
    Free { rank: u8 },
    /// `Z^2` with generators `a`, `b`; not hyperbolic.
    Grid2d,
    /// `Z/2 * Z/3 = <a, b | a^2, b^3>`.
    FreeProductZ2Z3,
    /// Fundamental group of the closed genus-2 surface.
    SurfaceGenus2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub radius: u32,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, radius: u32) -> Result<Self> {
        if let GroupKind::Free { rank } = kind {
            if !(1..=4).contains(&rank) {
                return Err(GraphError::InvalidSpec(format!("free rank {rank} outside 1..=4")));
            }
        }
        Ok(GroupSpec { kind, radius })
    }

    pub fn free(rank: u8, radius: u32) -> Self {
        Self::new(GroupKind::Free { rank }, radius).expect("rank in 1..=4")
    }

    pub fn grid2d(radius: u32) -> Self {
        GroupSpec { kind: GroupKind::Grid2d, radius }
    }

    pub fn z2z3(radius: u32) -> Self {
        GroupSpec { kind: GroupKind::FreeProductZ2Z3, radius }
    }

    pub fn surface_genus2(radius: u32) -> Self {
        GroupSpec { kind: GroupKind::SurfaceGenus2, radius }
    }

    /// Builds the ball with the default vertex cap.
    pub fn build(&self) -> Result<Graph> {
        cayley_ball(self, DEFAULT_VERTEX_CAP)
    }
}

impl FromStr for GroupKind {
    type Err = GraphError;

    /// Accepts `free:<rank>`, `grid2d`, `z2z3` and `surface2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(rank) = s.strip_prefix("free:") {
            let rank: u8 = rank
                .parse()
                .map_err(|_| GraphError::InvalidSpec(format!("bad free rank {rank:?}")))?;
            return GroupSpec::new(GroupKind::Free { rank }, 0).map(|g| g.kind);
        }
        match s.as_str() {
            "grid2d" | "grid" | "z2" => Ok(GroupKind::Grid2d),
            "z2z3" | "free_product_z2_z3" => Ok(GroupKind::FreeProductZ2Z3),
            "surface2" | "surface_genus2" => Ok(GroupKind::SurfaceGenus2),
            other => Err(GraphError::InvalidSpec(format!("unknown group {other:?}"))),
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Free { rank } => write!(f, "free:{rank}"),
            GroupKind::Grid2d => f.write_str("grid2d"),
            GroupKind::FreeProductZ2Z3 => f.write_str("z2z3"),
            GroupKind::SurfaceGenus2 => f.write_str("surface2"),
        }
    }
}

/// A word over the generator alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&c| invert(c)).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("e")
        } else {
            f.write_str(std::str::from_utf8(&self.0).expect("ascii letters"))
        }
    }
}

impl FromStr for Word {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" || s == "1" {
            return Ok(Word::identity());
        }
        if !s.bytes().all(|c| c.is_ascii_alphabetic()) {
            return Err(GraphError::InvalidWord(s.to_string()));
        }
        Ok(Word(s.as_bytes().to_vec()))
    }
}

fn invert(c: u8) -> u8 {
    if c.is_ascii_lowercase() {
        c.to_ascii_uppercase()
    } else {
        c.to_ascii_lowercase()
    }
}

impl GroupKind {
    /// Generating set in BFS order: each generator followed by its inverse.
    pub fn generators(&self) -> Vec<u8> {
        match *self {
            GroupKind::Free { rank } => (0..rank).flat_map(|i| [b'a' + i, b'A' + i]).collect(),
            GroupKind::Grid2d => b"aAbB".to_vec(),
            GroupKind::FreeProductZ2Z3 => b"abB".to_vec(),
            GroupKind::SurfaceGenus2 => b"aAbBcCdD".to_vec(),
        }
    }

    fn allows(&self, c: u8) -> bool {
        let lower = c.to_ascii_lowercase();
        match *self {
            GroupKind::Free { rank } => lower >= b'a' && lower < b'a' + rank,
            GroupKind::Grid2d | GroupKind::FreeProductZ2Z3 => lower == b'a' || lower == b'b',
            GroupKind::SurfaceGenus2 => (b'a'..=b'd').contains(&lower),
        }
    }

    pub fn validate(&self, w: &Word) -> Result<()> {
        if w.0.iter().all(|&c| self.allows(c)) {
            Ok(())
        } else {
            Err(GraphError::InvalidWord(w.to_string()))
        }
    }

    /// Reduced representative. Canonical except for the surface group, where
    /// it is the Dehn-reduced word.
    pub fn reduce(&self, w: &Word) -> Word {
        match self {
            GroupKind::Free { .. } => Word(free_reduce(&w.0)),
            GroupKind::Grid2d => {
                let (mut i, mut j) = (0i64, 0i64);
                for &c in &w.0 {
                    match c {
                        b'a' => i += 1,
                        b'A' => i -= 1,
                        b'b' => j += 1,
                        _ => j -= 1,
                    }
                }
                let mut v = Vec::new();
                v.extend(std::iter::repeat_n(if i > 0 { b'a' } else { b'A' }, i.unsigned_abs() as usize));
                v.extend(std::iter::repeat_n(if j > 0 { b'b' } else { b'B' }, j.unsigned_abs() as usize));
                Word(v)
            }
            GroupKind::FreeProductZ2Z3 => Word(z2z3_reduce(&w.0)),
            GroupKind::SurfaceGenus2 => Word(dehn_reduce(&w.0)),
        }
    }

    fn has_canonical_form(&self) -> bool {
        !matches!(self, GroupKind::SurfaceGenus2)
    }
}

fn free_reduce(w: &[u8]) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::with_capacity(w.len());
    for &c in w {
        if out.last() == Some(&invert(c)) {
            out.pop();
        } else {
            out.push(c);
        }
    }
    out
}

fn z2z3_reduce(w: &[u8]) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::with_capacity(w.len());
    for &c in w {
        let c = if c == b'A' { b'a' } else { c };
        match (out.last().copied(), c) {
            (Some(b'a'), b'a') | (Some(b'b'), b'B') | (Some(b'B'), b'b') => {
                out.pop();
            }
            (Some(b'b'), b'b') => *out.last_mut().unwrap() = b'B',
            (Some(b'B'), b'B') => *out.last_mut().unwrap() = b'b',
            _ => out.push(c),
        }
    }
    out
}

/// Cyclic conjugates of the relator and of its inverse.
fn relator_conjugates() -> Vec<Vec<u8>> {
    let r = SURFACE_RELATOR;
    let inv: Vec<u8> = r.iter().rev().map(|&c| invert(c)).collect();
    let mut out = Vec::with_capacity(2 * r.len());
    for base in [r.to_vec(), inv] {
        for k in 0..base.len() {
            let mut s = base[k..].to_vec();
            s.extend_from_slice(&base[..k]);
            out.push(s);
        }
    }
    out
}

/// Dehn's algorithm: replace any subword that is more than half of a cyclic
/// conjugate of the relator (or its inverse) by the inverse of the shorter
/// complement, freely reducing in between, until no such subword remains.
fn dehn_reduce(w: &[u8]) -> Vec<u8> {
    let conjugates = relator_conjugates();
    let half = SURFACE_RELATOR.len() / 2;
    let mut w = free_reduce(w);
    'outer: loop {
        for i in 0..w.len() {
            for s in &conjugates {
                let l = w[i..].iter().zip(s).take_while(|(a, b)| a == b).count();
                if l > half {
                    let replacement: Vec<u8> = s[l..].iter().rev().map(|&c| invert(c)).collect();
                    let mut next = w[..i].to_vec();
                    next.extend_from_slice(&replacement);
                    next.extend_from_slice(&w[i + l..]);
                    w = free_reduce(&next);
                    continue 'outer;
                }
            }
        }
        return w;
    }
}

fn abelianization(w: &[u8]) -> [i32; 4] {
    let mut v = [0i32; 4];
    for &c in w {
        let idx = (c.to_ascii_lowercase() - b'a') as usize;
        v[idx] += if c.is_ascii_lowercase() { 1 } else { -1 };
    }
    v
}

#[derive(Debug, Clone)]
enum Locator {
    Canonical(HashMap<Word, Vertex>),
    // abelianization buckets; membership confirmed by Dehn's algorithm
    Buckets(HashMap<[i32; 4], Vec<Vertex>>),
}

/// Group-theoretic data attached to a Cayley ball.
#[derive(Debug, Clone)]
pub struct CayleyData {
    pub spec: GroupSpec,
    labels: Vec<Word>,
    locator: Locator,
}

impl CayleyData {
    fn new(spec: GroupSpec) -> Self {
        let locator = if spec.kind.has_canonical_form() {
            Locator::Canonical(HashMap::new())
        } else {
            Locator::Buckets(HashMap::new())
        };
        CayleyData { spec, labels: Vec::new(), locator }
    }

    fn insert(&mut self, w: Word) -> Vertex {
        let v = self.labels.len();
        match &mut self.locator {
            Locator::Canonical(map) => {
                map.insert(w.clone(), v);
            }
            Locator::Buckets(map) => map.entry(abelianization(&w.0)).or_default().push(v),
        }
        self.labels.push(w);
        v
    }

    /// Reduced word labelling `v`; vertex 0 is the identity.
    pub fn label(&self, v: Vertex) -> &Word {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[Word] {
        &self.labels
    }

    /// The vertex representing the group element `w`, if it lies in the ball.
    pub fn locate(&self, w: &Word) -> Option<Vertex> {
        let kind = self.spec.kind;
        let reduced = kind.reduce(w);
        match &self.locator {
            Locator::Canonical(map) => map.get(&reduced).copied(),
            Locator::Buckets(map) => {
                let bucket = map.get(&abelianization(&reduced.0))?;
                bucket.iter().copied().find(|&v| {
                    let probe = reduced.concat(&self.labels[v].inverse());
                    kind.reduce(&probe).is_empty()
                })
            }
        }
    }

    /// Parses and locates a word, validating its alphabet.
    pub fn vertex_of(&self, word: &str) -> Result<Option<Vertex>> {
        let w: Word = word.parse()?;
        self.spec.kind.validate(&w)?;
        Ok(self.locate(&w))
    }

    /// Left translation `v -> w·v`, partial on the finite ball.
    pub fn translate(&self, w: &Word, v: Vertex) -> Result<Option<Vertex>> {
        self.spec.kind.validate(w)?;
        if v >= self.labels.len() {
            return Err(GraphError::InvalidVertex { vertex: v, count: self.labels.len() });
        }
        Ok(self.locate(&w.concat(&self.labels[v])))
    }
}

/// Builds the ball of radius `spec.radius` around the identity, with edges
/// `g -- g·s` for every generator `s` whenever both ends lie in the ball.
pub fn cayley_ball(spec: &GroupSpec, vertex_cap: usize) -> Result<Graph> {
    let kind = spec.kind;
    let gens = kind.generators();
    let mut data = CayleyData::new(*spec);
    data.insert(Word::identity());
    let mut level = vec![0u32];
    let mut edges = BTreeSet::new();
    let mut next = 0;
    while next < data.labels.len() {
        let v = next;
        next += 1;
        for &s in &gens {
            let cand = data.labels[v].concat(&Word(vec![s]));
            match data.locate(&cand) {
                Some(w) => {
                    if w != v {
                        edges.insert((v.min(w), v.max(w)));
                    }
                }
                None if level[v] < spec.radius => {
                    if data.labels.len() >= vertex_cap {
                        return Err(GraphError::TooLarge { cap: vertex_cap });
                    }
                    let label = if kind.has_canonical_form() { kind.reduce(&cand) } else { cand };
                    let w = data.insert(label);
                    level.push(level[v] + 1);
                    edges.insert((v, w));
                }
                None => {}
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Ok(Graph::new(data.labels.len(), &edges)?.with_cayley(data))
}

/// Left translation on a Cayley ball.
pub fn translate(g: &Graph, w: &Word, v: Vertex) -> Result<Option<Vertex>> {
    g.cayley().ok_or(GraphError::NotCayley)?.translate(w, v)
}
