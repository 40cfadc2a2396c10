//! Hyperbolicity diagnostics: Gromov products, the four-point constant,
//! the geodesic nesting predicate, visual metrics and neighbourhood growth.

mod growth;
mod visual;

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex};

pub use growth::{growth_fit, GrowthFit};
pub use visual::{build_visual_metric, suggest_epsilon, EpsilonChoice, VisualMetric, EPSILON_GRID_STEPS};

/// Exact mode refuses graphs above this size.
pub const DEFAULT_EXACT_DELTA_CAP: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicityError {
    #[error("{n} vertices exceeds the exact four-point cap of {cap}; use sampled mode")]
    TooLarge { n: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no epsilon on the grid reaches C <= {cap}; best was epsilon={best_epsilon} with C={best_c}")]
    NoEpsilon { cap: f64, best_epsilon: f64, best_c: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = HyperbolicityError> = std::result::Result<T, E>;

/// An exact multiple of one half, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

/// `(x, y)_t = (d(x,t) + d(y,t) - d(x,y)) / 2`.
pub fn gromov_product(g: &Graph, t: Vertex, x: Vertex, y: Vertex) -> Result<HalfInt> {
    let xt = g.distance(x, t)? as i64;
    let yt = g.distance(y, t)? as i64;
    let xy = g.distance(x, y)? as i64;
    Ok(HalfInt(xt + yt - xy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    Exact,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// False when the value is only a lower bound from sampling.
    pub exact: bool,
    pub quadruples: u64,
    /// A quadruple attaining `delta`.
    pub witness: [Vertex; 4],
}

/// Excess of the largest of the three pair sums over the second largest.
/// The four-point inequality for all orderings of `{a,b,c,d}` holds exactly
/// when `δ` is at least this value.
#[inline]
fn quadruple_excess(ab: u32, cd: u32, ac: u32, bd: u32, ad: u32, bc: u32) -> u32 {
    let s1 = ab + cd;
    let s2 = ac + bd;
    let s3 = ad + bc;
    let hi = s1.max(s2).max(s3);
    let mid = if hi == s1 {
        s2.max(s3)
    } else if hi == s2 {
        s1.max(s3)
    } else {
        s1.max(s2)
    };
    hi - mid
}

/// Smallest `δ` with
/// `d(a,c) + d(b,d) <= max(d(a,d) + d(b,c), d(a,b) + d(c,d)) + δ`
/// over every ordered quadruple (exact), or over sampled quadruples.
pub fn four_point_delta(g: &Graph, mode: DeltaMode) -> Result<DeltaEstimate> {
    four_point_delta_capped(g, mode, DEFAULT_EXACT_DELTA_CAP)
}

pub fn four_point_delta_capped(g: &Graph, mode: DeltaMode, cap: usize) -> Result<DeltaEstimate> {
    let n = g.vertex_count();
    match mode {
        DeltaMode::Exact => {
            if n > cap {
                return Err(HyperbolicityError::TooLarge { n, cap });
            }
            let rows: Vec<Vec<u32>> = (0..n).map(|v| g.distances_from(v)).collect();
            let best = (0..n)
                .into_par_iter()
                .map(|a| {
                    let ra = &rows[a];
                    let mut best = (0u32, [a, a, a, a]);
                    for b in a + 1..n {
                        let rb = &rows[b];
                        for c in b + 1..n {
                            let rc = &rows[c];
                            for d in c + 1..n {
                                let e = quadruple_excess(ra[b], rc[d], ra[c], rb[d], ra[d], rb[c]);
                                if e > best.0 {
                                    best = (e, [a, b, c, d]);
                                }
                            }
                        }
                    }
                    best
                })
                .reduce(|| (0, [0; 4]), pick_witness);
            let quads = if n >= 4 { choose4(n as u64) } else { 0 };
            Ok(DeltaEstimate { delta: best.0 as f64, exact: true, quadruples: quads, witness: best.1 })
        }
        DeltaMode::Sampled { count, seed } => {
            if count == 0 {
                return Err(HyperbolicityError::InvalidArgument("sample count must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let quads: Vec<[Vertex; 4]> = (0..count)
                .map(|_| std::array::from_fn(|_| rng.gen_range(0..n)))
                .collect();
            let mut rows: HashMap<Vertex, Vec<u32>> = HashMap::new();
            for q in &quads {
                for &v in &q[..3] {
                    rows.entry(v).or_insert_with(|| g.distances_from(v));
                }
            }
            let best = quads
                .par_iter()
                .map(|&[a, b, c, d]| {
                    let (ra, rb, rc) = (&rows[&a], &rows[&b], &rows[&c]);
                    let e = quadruple_excess(ra[b], rc[d], ra[c], rb[d], ra[d], rb[c]);
                    (e, [a, b, c, d])
                })
                .reduce(|| (0, [0; 4]), pick_witness);
            Ok(DeltaEstimate { delta: best.0 as f64, exact: false, quadruples: count as u64, witness: best.1 })
        }
    }
}

fn pick_witness(x: (u32, [Vertex; 4]), y: (u32, [Vertex; 4])) -> (u32, [Vertex; 4]) {
    match x.0.cmp(&y.0) {
        std::cmp::Ordering::Greater => x,
        std::cmp::Ordering::Less => y,
        std::cmp::Ordering::Equal => {
            if x.1 <= y.1 {
                x
            } else {
                y
            }
        }
    }
}

fn choose4(n: u64) -> u64 {
    n * (n - 1) / 2 * (n - 2) / 3 * (n - 3) / 4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nesting {
    Holds,
    Vacuous,
    Violated,
}

const SLACK: f64 = 1e-9;

/// Geodesic nesting: if `b ∈ η₁-géod(a,c)`, `c ∈ η₂-géod(b,d)` and
/// `d(b,c) > (η₁+η₂+δ)/2`, then `b ∈ (η₁+δ)-géod(a,d)` and
/// `c ∈ (η₂+δ)-géod(a,d)`.
pub fn nesting_check(g: &Graph, quad: [Vertex; 4], eta1: f64, eta2: f64, delta: f64) -> Result<Nesting> {
    for v in quad {
        g.check_vertex(v)?;
    }
    let [a, b, c, d] = quad;
    let dist = |x, y| g.dist(x, y);
    Ok(nesting_from_distances(
        [dist(a, b), dist(a, c), dist(a, d), dist(b, c), dist(b, d), dist(c, d)],
        eta1,
        eta2,
        delta,
    ))
}

/// Same predicate from the six pairwise distances
/// `[ab, ac, ad, bc, bd, cd]`.
pub fn nesting_from_distances(dists: [u32; 6], eta1: f64, eta2: f64, delta: f64) -> Nesting {
    let [ab, ac, ad, bc, bd, cd] = dists.map(|x| x as f64);
    let hyp1 = ab + bc <= ac + eta1 + SLACK;
    let hyp2 = bc + cd <= bd + eta2 + SLACK;
    let gap = bc > (eta1 + eta2 + delta) / 2.0 + SLACK;
    if !(hyp1 && hyp2 && gap) {
        return Nesting::Vacuous;
    }
    let b_ok = ab + bd <= ad + eta1 + delta + SLACK;
    let c_ok = ac + cd <= ad + eta2 + delta + SLACK;
    if b_ok && c_ok {
        Nesting::Holds
    } else {
        Nesting::Violated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_from_edges, GroupSpec};

    fn path(n: usize) -> Graph {
        build_from_edges(&(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        build_from_edges(&(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    /// Direct scan of every ordered quadruple against the displayed inequality.
    fn delta_by_ordered_scan(g: &Graph) -> u32 {
        let n = g.vertex_count();
        let d = |x, y| g.dist(x, y);
        let mut best = 0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let lhs = d(a, c) + d(b, e);
                        let rhs = (d(a, e) + d(b, c)).max(d(a, b) + d(c, e));
                        best = best.max(lhs.saturating_sub(rhs));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn gromov_product_examples() {
        let p = path(4);
        assert_eq!(gromov_product(&p, 0, 2, 3).unwrap(), HalfInt(4));
        assert_eq!(gromov_product(&p, 0, 2, 3).unwrap().to_f64(), 2.0);
        assert_eq!(gromov_product(&p, 0, 3, 3).unwrap().to_f64(), 3.0);
        assert_eq!(gromov_product(&p, 1, 0, 3).unwrap().to_f64(), 0.0);
        let c = cycle(3);
        assert_eq!(gromov_product(&c, 0, 1, 2).unwrap().to_string(), "0.5");
    }

    #[test]
    fn gromov_product_bounds_exhaustive() {
        let g = GroupSpec::z2z3(3).build().unwrap();
        let n = g.vertex_count();
        for t in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let p = gromov_product(&g, t, x, y).unwrap();
                    assert_eq!(p, gromov_product(&g, t, y, x).unwrap());
                    assert!(p.0 >= 0);
                    assert!(p.0 <= 2 * g.dist(x, t).min(g.dist(y, t)) as i64);
                }
            }
        }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(four_point_delta(&path(7), DeltaMode::Exact).unwrap().delta, 0.0);
        let tree = GroupSpec::free(2, 2).build().unwrap();
        assert_eq!(four_point_delta(&tree, DeltaMode::Exact).unwrap().delta, 0.0);
        let c4 = four_point_delta(&cycle(4), DeltaMode::Exact).unwrap();
        assert_eq!(c4.delta, 2.0);
        assert_eq!(c4.witness, [0, 1, 2, 3]);
    }

    #[test]
    fn delta_matches_ordered_scan() {
        for g in [cycle(5), cycle(6), GroupSpec::z2z3(2).build().unwrap(), GroupSpec::grid2d(2).build().unwrap()] {
            let est = four_point_delta(&g, DeltaMode::Exact).unwrap();
            assert_eq!(est.delta, delta_by_ordered_scan(&g) as f64);
            let [a, b, c, d] = est.witness;
            let e = quadruple_excess(g.dist(a, b), g.dist(c, d), g.dist(a, c), g.dist(b, d), g.dist(a, d), g.dist(b, c));
            assert_eq!(e as f64, est.delta);
        }
    }

    #[test]
    fn sampled_delta_is_lower_bound() {
        let g = GroupSpec::grid2d(3).build().unwrap();
        let exact = four_point_delta(&g, DeltaMode::Exact).unwrap();
        let sampled = four_point_delta(&g, DeltaMode::Sampled { count: 500, seed: 7 }).unwrap();
        assert!(!sampled.exact);
        assert!(sampled.delta <= exact.delta);
        let again = four_point_delta(&g, DeltaMode::Sampled { count: 500, seed: 7 }).unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn exact_cap() {
        let g = cycle(12);
        assert_eq!(
            four_point_delta_capped(&g, DeltaMode::Exact, 10).unwrap_err(),
            HyperbolicityError::TooLarge { n: 12, cap: 10 }
        );
    }

    #[test]
    fn nesting_examples() {
        let p = path(10);
        assert_eq!(nesting_check(&p, [0, 3, 6, 9], 0.0, 0.0, 0.0).unwrap(), Nesting::Holds);
        assert_eq!(nesting_check(&p, [0, 3, 3, 9], 0.0, 0.0, 1.0).unwrap(), Nesting::Vacuous);
    }

    #[test]
    fn nesting_never_violated_on_trees() {
        for g in [GroupSpec::free(2, 2).build().unwrap(), path(9)] {
            let n = g.vertex_count();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            for (e1, e2) in [(0.0, 0.0), (1.0, 0.0), (0.5, 2.0)] {
                                assert_ne!(nesting_check(&g, [a, b, c, d], e1, e2, 0.0).unwrap(), Nesting::Violated);
                            }
                        }
                    }
                }
            }
        }
    }
}
