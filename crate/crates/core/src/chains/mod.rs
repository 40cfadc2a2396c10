//! 1-chains on oriented edges modulo `e^op = -e`, their boundary, `ℓ^p`
//! norms, and the decomposition into weighted paths plus cycles.

mod decompose;

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeId, Graph, GraphError, Vertex};

pub use decompose::{decompose, CycleTerm, Decomposition, PathTerm};

/// Absolute values below this are treated as zero in floating point.
pub const NEGLIGIBLE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("exponent p must be at least 1, got {0}")]
    InvalidExponent(f64),
    #[error("edge id {0} out of range")]
    InvalidEdge(EdgeId),
    #[error("boundary is neither zero nor of the form δ_y - δ_x")]
    InadmissibleBoundary,
    #[error("walk stuck at vertex {0}: no outgoing edge with positive coefficient")]
    Stuck(Vertex),
    #[error("decomposition made no progress")]
    NoProgress,
    #[error("malformed chain: {0}")]
    Parse(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = ChainError> = std::result::Result<T, E>;

/// Scalar field for chain coefficients.
pub trait Coefficient: Signed + Clone + PartialOrd + Debug + Send + Sync {
    /// True when the value should be treated as zero.
    fn is_negligible(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Coefficient for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() < NEGLIGIBLE
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Coefficient for BigRational {
    fn is_negligible(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Finitely supported chain: `coeffs[e]` is the value on the canonical
/// orientation `(u, v)`, `u < v`, of edge `e`; zero entries are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<T = f64> {
    coeffs: BTreeMap<EdgeId, T>,
}

impl<T: Coefficient> Default for Chain<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Coefficient> Chain<T> {
    pub fn zero() -> Self {
        Chain { coeffs: BTreeMap::new() }
    }

    /// Builds a chain from canonical-edge coefficients, summing repeats.
    pub fn from_coeffs(g: &Graph, entries: impl IntoIterator<Item = (EdgeId, T)>) -> Result<Self> {
        let mut c = Self::zero();
        for (e, v) in entries {
            if e >= g.edge_count() {
                return Err(ChainError::InvalidEdge(e));
            }
            c.add_to(e, v);
        }
        Ok(c)
    }

    /// Unit chain on the oriented edge `u -> v`.
    pub fn oriented_edge(g: &Graph, u: Vertex, v: Vertex) -> Result<Self> {
        let mut c = Self::zero();
        c.add_oriented(g, u, v, T::one())?;
        Ok(c)
    }

    pub fn coeff(&self, e: EdgeId) -> T {
        self.coeffs.get(&e).cloned().unwrap_or_else(T::zero)
    }

    /// Value on the oriented edge `u -> v`; the opposite orientation reads the negative.
    pub fn oriented(&self, g: &Graph, u: Vertex, v: Vertex) -> Result<T> {
        let e = g.edge_between(u, v).ok_or(GraphError::NotAdjacent(u, v))?;
        let c = self.coeff(e);
        Ok(if u < v { c } else { -c })
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, &T)> + '_ {
        self.coeffs.iter().map(|(&e, v)| (e, v))
    }

    pub fn support(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub(crate) fn add_to(&mut self, e: EdgeId, v: T) {
        let slot = self.coeffs.entry(e).or_insert_with(T::zero);
        *slot = slot.clone() + v;
        if slot.is_negligible() {
            self.coeffs.remove(&e);
        }
    }

    pub(crate) fn add_oriented(&mut self, g: &Graph, u: Vertex, v: Vertex, w: T) -> Result<()> {
        let e = g.edge_between(u, v).ok_or(GraphError::NotAdjacent(u, v))?;
        self.add_to(e, if u < v { w } else { -w });
        Ok(())
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, other: &Chain<T>, s: &T) -> Chain<T> {
        let mut out = self.clone();
        for (e, v) in other.iter() {
            out.add_to(e, s.clone() * v.clone());
        }
        out
    }

    pub fn scaled(&self, s: &T) -> Chain<T> {
        Chain::zero().add_scaled(self, s)
    }

    /// Largest coefficient-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Chain<T>) -> f64 {
        let diff = self.add_scaled(other, &-T::one());
        diff.iter().map(|(_, v)| v.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> Chain<f64> {
        Chain { coeffs: self.coeffs.iter().map(|(&e, v)| (e, v.to_f64())).collect() }
    }

    /// `(u, v, c(u,v))` triples with `u < v`, in edge order.
    pub fn to_triples(&self, g: &Graph) -> Vec<ChainTriple> {
        self.iter()
            .map(|(e, v)| {
                let (a, b) = g.edge(e);
                ChainTriple { u: a, v: b, coef: v.to_f64() }
            })
            .collect()
    }
}

impl Chain<f64> {
    /// Accepts either orientation; `(v, u, c)` stores `-c` on `(u, v)`.
    pub fn from_triples(g: &Graph, triples: &[ChainTriple]) -> Result<Self> {
        let mut c = Self::zero();
        for t in triples {
            g.check_vertex(t.u)?;
            g.check_vertex(t.v)?;
            if !t.coef.is_finite() {
                return Err(ChainError::Parse(format!("non-finite coefficient on ({}, {})", t.u, t.v)));
            }
            c.add_oriented(g, t.u, t.v, t.coef)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainTriple {
    pub u: Vertex,
    pub v: Vertex,
    pub coef: f64,
}

/// One `u v coefficient` line per supported edge.
pub fn write_chain(g: &Graph, c: &Chain<f64>) -> String {
    c.to_triples(g)
        .iter()
        .map(|t| format!("{} {} {:e}\n", t.u, t.v, t.coef))
        .collect()
}

/// Parses `u v coefficient` lines; `#` comments and blank lines are skipped.
pub fn parse_chain(g: &Graph, text: &str) -> Result<Chain<f64>> {
    let mut triples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || ChainError::Parse(format!("line {}: expected `u v coefficient`", lineno + 1));
        if fields.len() != 3 {
            return Err(bad());
        }
        triples.push(ChainTriple {
            u: fields[0].parse().map_err(|_| bad())?,
            v: fields[1].parse().map_err(|_| bad())?,
            coef: fields[2].parse().map_err(|_| bad())?,
        });
    }
    Chain::from_triples(g, &triples)
}

/// Finitely supported function on vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexCharge<T = f64> {
    values: BTreeMap<Vertex, T>,
}

impl<T: Coefficient> VertexCharge<T> {
    /// `δ_y - δ_x`.
    pub fn unit_difference(x: Vertex, y: Vertex) -> Self {
        let mut q = VertexCharge { values: BTreeMap::new() };
        q.add(y, T::one());
        q.add(x, -T::one());
        q
    }

    pub fn get(&self, v: Vertex) -> T {
        self.values.get(&v).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, &T)> + '_ {
        self.values.iter().map(|(&v, q)| (v, q))
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> T {
        self.values.values().cloned().fold(T::zero(), |a, b| a + b)
    }

    fn add(&mut self, v: Vertex, q: T) {
        let slot = self.values.entry(v).or_insert_with(T::zero);
        *slot = slot.clone() + q;
        if slot.is_negligible() {
            self.values.remove(&v);
        }
    }

    /// `(x, y)` when the charge is `δ_y - δ_x` up to negligible error.
    pub fn as_unit_difference(&self) -> Option<(Vertex, Vertex)> {
        if self.values.len() != 2 {
            return None;
        }
        let mut x = None;
        let mut y = None;
        for (&v, q) in &self.values {
            if (q.clone() - T::one()).is_negligible() {
                y = Some(v);
            } else if (q.clone() + T::one()).is_negligible() {
                x = Some(v);
            }
        }
        Some((x?, y?))
    }

    /// Largest absolute difference at any vertex.
    pub fn max_abs_diff(&self, other: &VertexCharge<T>) -> f64 {
        let mut d = 0.0f64;
        for (&v, q) in &self.values {
            d = d.max((q.clone() - other.get(v)).to_f64().abs());
        }
        for (&v, q) in &other.values {
            d = d.max((q.clone() - self.get(v)).to_f64().abs());
        }
        d
    }
}

/// `∂c = Σ c(e) (δ_{e⁺} - δ_{e⁻})`.
pub fn boundary<T: Coefficient>(g: &Graph, c: &Chain<T>) -> VertexCharge<T> {
    let mut q = VertexCharge { values: BTreeMap::new() };
    for (e, v) in c.iter() {
        let (a, b) = g.edge(e);
        q.add(b, v.clone());
        q.add(a, -v.clone());
    }
    q
}

/// Sum of the oriented edges along `path`; back-and-forth steps cancel.
pub fn chain_from_path<T: Coefficient>(g: &Graph, path: &[Vertex]) -> Result<Chain<T>> {
    g.check_path(path)?;
    let mut c = Chain::zero();
    for w in path.windows(2) {
        c.add_oriented(g, w[0], w[1], T::one())?;
    }
    Ok(c)
}

/// `(Σ_e |c(e)|^p)^{1/p}`, one term per unoriented edge.
pub fn lp_norm<T: Coefficient>(c: &Chain<T>, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(ChainError::InvalidExponent(p));
    }
    if p == 1.0 {
        return Ok(c.iter().map(|(_, v)| v.to_f64().abs()).sum());
    }
    let s: f64 = c.iter().map(|(_, v)| v.to_f64().abs().powf(p)).sum();
    Ok(s.powf(1.0 / p))
}
