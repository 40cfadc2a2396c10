use std::collections::HashMap;

use super::{boundary, chain_from_path, lp_norm, Chain, ChainError, Coefficient, Result};
use crate::graph::{Graph, Vertex};

/// `α · c` where `c` is the unit chain of an edge-simple path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTerm<T = f64> {
    pub alpha: T,
    pub vertices: Vec<Vertex>,
    pub chain: Chain<T>,
}

/// `β · l` with `β > 0` and `l` the unit chain of a simple closed walk
/// (`vertices` starts and ends at the same vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleTerm<T = f64> {
    pub beta: T,
    pub vertices: Vec<Vertex>,
    pub chain: Chain<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T = f64> {
    /// `(x, y)` when the input had boundary `δ_y - δ_x`.
    pub endpoints: Option<(Vertex, Vertex)>,
    pub path_terms: Vec<PathTerm<T>>,
    pub cycle_terms: Vec<CycleTerm<T>>,
    pub iterations: usize,
}

impl<T: Coefficient> Decomposition<T> {
    pub fn alpha_sum(&self) -> T {
        self.path_terms.iter().fold(T::zero(), |s, t| s + t.alpha.clone())
    }

    /// `ℓ = Σ β_j l_j`.
    pub fn cycle_part(&self) -> Chain<T> {
        self.cycle_terms
            .iter()
            .fold(Chain::zero(), |acc, t| acc.add_scaled(&t.chain, &t.beta))
    }

    /// `Σ α_k c_k + ℓ`.
    pub fn reconstruct(&self) -> Chain<T> {
        self.path_terms
            .iter()
            .fold(self.cycle_part(), |acc, t| acc.add_scaled(&t.chain, &t.alpha))
    }

    /// `Σ |α_k| ‖c_k‖₁ + ‖ℓ‖₁`.
    pub fn l1_mass(&self) -> f64 {
        let paths: f64 = self
            .path_terms
            .iter()
            .map(|t| t.alpha.to_f64().abs() * (t.vertices.len() - 1) as f64)
            .sum();
        paths + lp_norm(&self.cycle_part(), 1.0).expect("p = 1")
    }

    /// Signs of the path coefficients, in extraction order.
    pub fn alpha_signs(&self) -> Vec<i8> {
        self.path_terms
            .iter()
            .map(|t| if t.alpha.is_negative() { -1 } else { 1 })
            .collect()
    }
}

enum Walk {
    Path(Vec<Vertex>),
    Loop(Vec<Vertex>),
}

/// Greedy walk in the oriented support graph `S_w` (edges oriented so that
/// the coefficient is positive), taking the largest outgoing coefficient and
/// the smallest edge id on ties.
fn walk<T: Coefficient>(g: &Graph, w: &Chain<T>, start: Vertex, target: Option<Vertex>) -> Result<Walk> {
    let mut seen: HashMap<Vertex, usize> = HashMap::new();
    let mut verts = vec![start];
    seen.insert(start, 0);
    let mut cur = start;
    loop {
        let mut best: Option<(T, usize, Vertex)> = None;
        for (&nb, &e) in g.neighbors(cur).iter().zip(g.incident_edges(cur)) {
            let c = w.coeff(e);
            let out = if cur < nb { c } else { -c };
            if !out.is_positive() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bv, be, _)) => out > *bv || (out == *bv && e < *be),
            };
            if better {
                best = Some((out, e, nb));
            }
        }
        let (_, _, next) = best.ok_or(ChainError::Stuck(cur))?;
        if let Some(&i) = seen.get(&next) {
            let mut l = verts[i..].to_vec();
            l.push(next);
            return Ok(Walk::Loop(l));
        }
        verts.push(next);
        if Some(next) == target {
            return Ok(Walk::Path(verts));
        }
        seen.insert(next, verts.len() - 1);
        cur = next;
    }
}

/// Smallest coefficient of `w` along the oriented vertex sequence.
fn min_along<T: Coefficient>(g: &Graph, w: &Chain<T>, verts: &[Vertex]) -> Result<T> {
    let mut m: Option<T> = None;
    for s in verts.windows(2) {
        let v = w.oriented(g, s[0], s[1])?;
        if m.as_ref().is_none_or(|cur| v < *cur) {
            m = Some(v);
        }
    }
    Ok(m.expect("walk has at least one edge"))
}

/// Splits `c` into weighted paths from `x` to `y` plus weighted loops.
///
/// `∂c` must be zero or `δ_y - δ_x`. Each round walks the support graph of
/// the current remainder; a path is removed with weight equal to its smallest
/// coefficient and the remainder is rescaled by `1/(1-α)`, a loop is removed
/// with weight equal to its smallest coefficient. Every round zeroes at least
/// one edge, so the number of rounds is at most the support size.
///
/// The path weights sum to one. All removed pieces are sign-conformal to `c`,
/// so `‖c‖₁` splits additively over the pieces.
pub fn decompose<T: Coefficient>(g: &Graph, c: &Chain<T>) -> Result<Decomposition<T>> {
    let charge = boundary(g, c);
    let endpoints = if charge.is_zero() {
        None
    } else {
        Some(charge.as_unit_difference().ok_or(ChainError::InadmissibleBoundary)?)
    };
    let mut out = Decomposition { endpoints, path_terms: Vec::new(), cycle_terms: Vec::new(), iterations: 0 };
    let mut w = c.clone();
    // the unprocessed part of c is scale · w
    let mut scale = T::one();
    let mut path_mode = endpoints.is_some();
    let max_rounds = c.support_len();

    while !w.is_zero() {
        if out.iterations == max_rounds {
            return Err(ChainError::NoProgress);
        }
        out.iterations += 1;
        let found = match (path_mode, endpoints) {
            (true, Some((x, y))) => walk(g, &w, x, Some(y))?,
            _ => {
                let (e, v) = w.iter().next().expect("nonzero chain");
                let (a, b) = g.edge(e);
                walk(g, &w, if v.is_positive() { a } else { b }, None)?
            }
        };
        match found {
            Walk::Path(verts) => {
                let unit: Chain<T> = chain_from_path(g, &verts)?;
                let alpha = min_along(g, &w, &verts)?;
                w = w.add_scaled(&unit, &-alpha.clone());
                let rest = T::one() - alpha.clone();
                if rest.is_negligible() {
                    out.path_terms.push(PathTerm { alpha: scale.clone(), vertices: verts, chain: unit });
                    path_mode = false;
                } else {
                    out.path_terms.push(PathTerm { alpha: scale.clone() * alpha, vertices: verts, chain: unit });
                    w = w.scaled(&(T::one() / rest.clone()));
                    scale = scale * rest;
                }
            }
            Walk::Loop(mut verts) => {
                let mut unit: Chain<T> = chain_from_path(g, &verts)?;
                let beta = min_along(g, &w, &verts)?;
                w = w.add_scaled(&unit, &-beta.clone());
                let mut weight = scale.clone() * beta;
                if weight.is_negative() {
                    weight = -weight;
                    verts.reverse();
                    unit = unit.scaled(&-T::one());
                }
                out.cycle_terms.push(CycleTerm { beta: weight, vertices: verts, chain: unit });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::VertexCharge;
    use crate::graph::{build_from_edges, GroupSpec};
    use num_rational::BigRational;
    use num_traits::{One, Signed, Zero};
    use proptest::prelude::*;

    fn cycle(n: usize) -> Graph {
        build_from_edges(&(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn single_path() {
        let g = cycle(6);
        let c: Chain = chain_from_path(&g, &[0, 1, 2, 3]).unwrap();
        let d = decompose(&g, &c).unwrap();
        assert_eq!(d.path_terms.len(), 1);
        assert_eq!(d.path_terms[0].alpha, 1.0);
        assert_eq!(d.path_terms[0].vertices, vec![0, 1, 2, 3]);
        assert!(d.cycle_terms.is_empty());
        assert_eq!(d.endpoints, Some((0, 3)));
    }

    #[test]
    fn four_cycle_split_exact() {
        let g = cycle(4);
        let upper: Chain<BigRational> = chain_from_path(&g, &[0, 1, 2]).unwrap();
        let lower: Chain<BigRational> = chain_from_path(&g, &[0, 3, 2]).unwrap();
        let half = ratio(1, 2);
        let c = upper.scaled(&half).add_scaled(&lower, &half);
        let d = decompose(&g, &c).unwrap();
        assert_eq!(d.path_terms.len(), 2);
        assert!(d.path_terms.iter().all(|t| t.alpha == half));
        assert!(d.cycle_terms.is_empty());
        assert_eq!(d.alpha_sum(), BigRational::one());
        assert_eq!(d.reconstruct(), c);
        // ties broken by edge id: edge (0,1) has id 0, (0,3) has id 1
        assert_eq!(d.path_terms[0].vertices, vec![0, 1, 2]);
    }

    #[test]
    fn pure_loop() {
        let g = cycle(5);
        let c: Chain = chain_from_path(&g, &[2, 1, 0, 4, 3, 2]).unwrap();
        let d = decompose(&g, &c).unwrap();
        assert!(d.path_terms.is_empty());
        assert_eq!(d.cycle_terms.len(), 1);
        assert_eq!(d.cycle_terms[0].beta, 1.0);
        assert_eq!(d.reconstruct(), c);
        assert!(decompose(&g, &Chain::<f64>::zero()).unwrap().iterations == 0);
    }

    #[test]
    fn heavy_circulation_gives_negative_alpha() {
        // path 0->1->2 plus three times the loop 0->1->2->3->0: the walk from 0
        // sees coefficient 4 on 0->1 and 4 on 1->2, so the first path weight
        // exceeds one and the rescaling flips sign
        let g = cycle(4);
        let p: Chain<BigRational> = chain_from_path(&g, &[0, 1, 2]).unwrap();
        let l: Chain<BigRational> = chain_from_path(&g, &[0, 1, 2, 3, 0]).unwrap();
        let c = p.add_scaled(&l, &ratio(3, 1));
        let d = decompose(&g, &c).unwrap();
        assert_eq!(d.alpha_sum(), BigRational::one());
        assert_eq!(d.reconstruct(), c);
        assert!(d.cycle_terms.iter().all(|t| t.beta.is_positive()));
        assert!(d.alpha_signs().contains(&-1));
        assert!((d.l1_mass() - lp_norm(&c, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_inadmissible_boundaries() {
        let g = cycle(4);
        let c = Chain::from_coeffs(&g, [(0, 2.0)]).unwrap();
        assert_eq!(decompose(&g, &c).unwrap_err(), ChainError::InadmissibleBoundary);
        let two_sinks = Chain::from_coeffs(&g, [(0, 1.0), (3, 1.0)]).unwrap();
        assert_eq!(decompose(&g, &two_sinks).unwrap_err(), ChainError::InadmissibleBoundary);
    }

    /// Random chain with boundary `δ_y - δ_x`: a convex combination of random
    /// walks from x to y plus random multiples of closed walks.
    fn random_chain(g: &Graph, seeds: &[(u64, f64)], loops: &[(u64, f64)], x: Vertex, y: Vertex) -> Chain {
        let total: f64 = seeds.iter().map(|s| s.1).sum();
        let mut c = Chain::zero();
        for &(seed, w) in seeds {
            let p = random_walk_to(g, seed, x, y);
            c = c.add_scaled(&chain_from_path(g, &p).unwrap(), &(w / total));
        }
        for &(seed, w) in loops {
            let p = random_walk_to(g, seed, x, x);
            c = c.add_scaled(&chain_from_path(g, &p).unwrap(), &w);
        }
        c
    }

    fn random_walk_to(g: &Graph, seed: u64, x: Vertex, y: Vertex) -> Vec<Vertex> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = vec![x];
        let mut cur = x;
        for _ in 0..rng.gen_range(1..12) {
            let nb = g.neighbors(cur);
            cur = nb[rng.gen_range(0..nb.len())];
            p.push(cur);
        }
        p.extend(g.geodesic_path(cur, y).into_iter().skip(1));
        p
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn decomposition_invariants(
            seeds in prop::collection::vec((any::<u64>(), 0.05f64..1.0), 1..6),
            loops in prop::collection::vec((any::<u64>(), -2.0f64..2.0), 0..3),
            y in 1usize..12,
        ) {
            let g = GroupSpec::grid2d(3).build().unwrap();
            let c = random_chain(&g, &seeds, &loops, 0, y);
            let charge = boundary(&g, &c);
            prop_assert!(charge.max_abs_diff(&VertexCharge::unit_difference(0, y)) < 1e-9);
            let d = decompose(&g, &c).unwrap();
            prop_assert!((d.alpha_sum() - 1.0).abs() < 1e-12);
            prop_assert!(d.reconstruct().max_abs_diff(&c) < 1e-9);
            prop_assert!((d.l1_mass() - lp_norm(&c, 1.0).unwrap()).abs() < 1e-9);
            prop_assert!(d.iterations <= c.support_len());
            prop_assert!(d.cycle_terms.iter().all(|t| t.beta > 0.0));
            for t in &d.path_terms {
                prop_assert_eq!((t.vertices[0], *t.vertices.last().unwrap()), (0, y));
            }
        }

        #[test]
        fn kirchhoff_node_law(
            seeds in prop::collection::vec((any::<u64>(), 0.05f64..1.0), 1..6),
            y in 1usize..12,
        ) {
            let g = GroupSpec::grid2d(3).build().unwrap();
            let c = random_chain(&g, &seeds, &[], 0, y);
            for z in 0..g.vertex_count() {
                let (mut inflow, mut outflow) = (0.0, 0.0);
                for &nb in g.neighbors(z) {
                    let out = c.oriented(&g, z, nb).unwrap();
                    if out > 0.0 { outflow += out } else { inflow -= out }
                }
                let net = if z == y { 1.0 } else if z == 0 { -1.0 } else { 0.0 };
                prop_assert!((inflow - outflow - net).abs() < 1e-9);
            }
        }

        #[test]
        fn path_boundary_telescopes(seed in any::<u64>(), y in 0usize..12) {
            let g = GroupSpec::grid2d(3).build().unwrap();
            let p = random_walk_to(&g, seed, 0, y);
            let c: Chain<BigRational> = chain_from_path(&g, &p).unwrap();
            let q = boundary(&g, &c);
            prop_assert!(q.total().is_zero());
            if y == 0 {
                prop_assert!(q.is_zero());
            } else {
                prop_assert_eq!(q, VertexCharge::unit_difference(0, y));
            }
        }
    }
}
