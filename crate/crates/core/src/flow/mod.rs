//! Minimal `ℓ^p` flows: the quotient norm of `δ_y - δ_x` under the boundary
//! map, exact for `p = 1` and computed by a reweighted Newton iteration over
//! vertex potentials for `p > 1`, with a KKT optimality certificate.

mod laplacian;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chains::{boundary, chain_from_path, lp_norm, Chain, ChainError, ChainTriple, VertexCharge};
use crate::graph::{EdgeId, Graph, GraphError, Vertex};
use laplacian::LaplacianSolver;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Largest boundary mismatch accepted for a supplied chain.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

const SMOOTHING_FLOOR: f64 = 1e-15;
const ARMIJO: f64 = 1e-4;
const STEP_TOLERANCE: f64 = 1e-13;
const MAX_REFINEMENTS: usize = 100;
const POLISH_ITERATIONS: usize = 200;
// primal steps between attempts to finish on the dual side
const POLISH_EVERY: usize = 20;
// weights below this fraction of the largest are raised to it
const WEIGHT_RATIO_FLOOR: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("exponent must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("source and target coincide")]
    SameEndpoints,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("chain is not feasible: boundary mismatch {0:e}")]
    Infeasible(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;

/// `min ‖c‖₁` over chains with `∂c = δ_y - δ_x`: the graph distance, attained
/// by the indicator chain of a geodesic.
pub fn quotient_norm_l1(g: &Graph, x: Vertex, y: Vertex) -> Result<(u32, Chain)> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    let path = g.geodesic_path(x, y);
    Ok(((path.len() - 1) as u32, chain_from_path(g, &path)?))
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Target for the KKT residual.
    pub tol: f64,
    pub max_iterations: usize,
    /// Feasible starting chain; the geodesic indicator when absent.
    pub init: Option<Chain>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: DEFAULT_TOLERANCE, max_iterations: DEFAULT_MAX_ITERATIONS, init: None }
    }
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub source: Vertex,
    pub target: Vertex,
    pub p: f64,
    /// Iterate with entries below `1e-12` dropped.
    pub chain: Chain,
    /// Unrounded iterate, indexed by edge id.
    pub flows: Vec<f64>,
    /// `‖chain‖_p`, a feasible upper bound on the quotient norm.
    pub value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub source: Vertex,
    pub target: Vertex,
    pub p: f64,
    pub value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub chain: Vec<ChainTriple>,
}

impl FlowSolution {
    pub fn report(&self, g: &Graph) -> FlowReport {
        FlowReport {
            source: self.source,
            target: self.target,
            p: self.p,
            value: self.value,
            kkt_residual: self.kkt_residual,
            iterations: self.iterations,
            converged: self.converged,
            chain: self.chain.to_triples(g),
        }
    }

    /// Largest deviation of `∂chain` from `δ_y - δ_x`.
    pub fn boundary_mismatch(&self, g: &Graph) -> f64 {
        boundary(g, &self.chain).max_abs_diff(&VertexCharge::unit_difference(self.source, self.target))
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(FlowError::InvalidExponent(p))
    }
}

fn dense_flows(g: &Graph, c: &Chain) -> Vec<f64> {
    let mut f = vec![0.0; g.edge_count()];
    for (e, &v) in c.iter() {
        f[e] = v;
    }
    f
}

fn flow_mismatch(g: &Graph, flows: &[f64], x: Vertex, y: Vertex) -> f64 {
    let mut q = vec![0.0; g.vertex_count()];
    for (e, &v) in flows.iter().enumerate() {
        let (a, b) = g.edge(e);
        q[b] += v;
        q[a] -= v;
    }
    q[y] -= 1.0;
    q[x] += 1.0;
    q.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[inline]
fn grad(c: f64, p: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        p * c.signum() * c.abs().powf(p - 1.0)
    }
}

/// A 2-edge-connected component in local coordinates.
struct Block<'a> {
    vertices: &'a [Vertex],
    // (tail, head) in local indices
    ends: Vec<(usize, usize)>,
}

impl<'a> Block<'a> {
    fn new(g: &Graph, vertices: &'a [Vertex], edges: &'a [EdgeId]) -> Self {
        let local = |v: Vertex| vertices.binary_search(&v).expect("edge inside component");
        let ends = edges
            .iter()
            .map(|&e| {
                let (a, b) = g.edge(e);
                (local(a), local(b))
            })
            .collect();
        Block { vertices, ends }
    }

    fn divergence(&self, c: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.vertices.len()];
        for (&(a, b), &v) in self.ends.iter().zip(c) {
            q[b] += v;
            q[a] -= v;
        }
        q
    }

    fn objective(c: &[f64], p: f64) -> f64 {
        c.iter().map(|v| v.abs().powf(p)).sum()
    }

    /// Least-squares potentials for `g = ∇F(c)` and the resulting residual.
    fn kkt(&self, ls: &LaplacianSolver, c: &[f64], p: f64) -> (f64, Vec<f64>) {
        let gr: Vec<f64> = c.iter().map(|&v| grad(v, p)).collect();
        let phi = ls.solve(&self.divergence(&gr));
        let mut on_support = 0.0f64;
        let mut off_support = 0.0f64;
        for ((&(a, b), &gv), &cv) in self.ends.iter().zip(&gr).zip(c) {
            let r = (gv - (phi[b] - phi[a])).abs();
            if cv != 0.0 {
                on_support = on_support.max(r);
            } else {
                off_support = off_support.max(r);
            }
        }
        (on_support + off_support, phi)
    }

    fn unweighted(&self) -> LaplacianSolver {
        LaplacianSolver::new(self.vertices.len(), &self.ends, &vec![1.0; self.ends.len()])
    }

    /// Minimises `Σ|c|^p` subject to `div c = b` starting from the feasible `c`.
    fn solve(&self, mut c: Vec<f64>, b: &[f64], p: f64, tol: f64, budget: usize) -> BlockResult {
        let ls = self.unweighted();
        let mut eps = 1.0f64;
        let mut f = Self::objective(&c, p);
        let mut iterations = 0;
        let mut kkt = self.kkt(&ls, &c, p).0;
        // for p >= 2 a small gradient residual leaves small flows loosely
        // determined, so Newton steps continue until they stall
        let mut last_step = f64::INFINITY;
        let mut refinements = 0;
        while (kkt > tol || (p >= 2.0 && last_step > STEP_TOLERANCE && refinements < MAX_REFINEMENTS))
            && iterations < budget
        {
            iterations += 1;
            if kkt <= tol {
                refinements += 1;
            }
            let gr: Vec<f64> = c.iter().map(|&v| grad(v, p)).collect();
            let mut w: Vec<f64> = c
                .iter()
                .map(|&v| 1.0 / (p * (p - 1.0) * (v * v + eps * eps).powf((p - 2.0) / 2.0)))
                .collect();
            let wmax = w.iter().copied().fold(0.0, f64::max);
            for wi in &mut w {
                *wi = wi.max(wmax * WEIGHT_RATIO_FLOOR);
            }
            // L_w φ = B W g + (b - B c) makes the step restore feasibility
            let wg: Vec<f64> = w.iter().zip(&gr).map(|(a, b)| a * b).collect();
            let mut rhs = self.divergence(&wg);
            let drift = self.divergence(&c);
            for i in 0..rhs.len() {
                rhs[i] += b[i] - drift[i];
            }
            let phi = LaplacianSolver::new(self.vertices.len(), &self.ends, &w).solve(&rhs);
            let d: Vec<f64> = self
                .ends
                .iter()
                .zip(&w)
                .zip(&gr)
                .map(|((&(a, bb), &wi), &gi)| -wi * (gi - (phi[bb] - phi[a])))
                .collect();
            // gᵀd = -Σ w r² on the feasible set; this form keeps its sign under rounding
            let slope: f64 = -d.iter().zip(&w).map(|(di, wi)| di * di / wi).sum::<f64>();
            let mut t = 1.0;
            let mut accepted = None;
            if -slope <= 1e-15 * f.max(1.0) {
                // predicted decrease is below rounding in F: take the Newton step
                let trial: Vec<f64> = c.iter().zip(&d).map(|(ci, di)| ci + di).collect();
                let ft = Self::objective(&trial, p);
                accepted = Some((trial, ft));
            } else {
                while t > 1e-20 {
                    let trial: Vec<f64> = c.iter().zip(&d).map(|(ci, di)| ci + t * di).collect();
                    let ft = Self::objective(&trial, p);
                    if ft <= f + ARMIJO * t * slope {
                        accepted = Some((trial, ft));
                        break;
                    }
                    t *= 0.5;
                }
            }
            match accepted {
                Some((trial, ft)) => {
                    let step = d.iter().fold(0.0f64, |m, v| m.max(v.abs())) * t;
                    c = trial;
                    f = ft;
                    last_step = step;
                    if step < eps {
                        eps = (eps * 0.1).max(SMOOTHING_FLOOR);
                    }
                }
                None if eps > SMOOTHING_FLOOR => eps = (eps * 0.1).max(SMOOTHING_FLOOR),
                None => break,
            }
            kkt = self.kkt(&ls, &c, p).0;
            if kkt > tol && p < 2.0 && iterations % POLISH_EVERY == 0 {
                if let Some(polished) = self.polish(&ls, &c, b, p, tol) {
                    iterations += polished.iterations;
                    if polished.converged {
                        kkt = polished.kkt;
                        c = polished.flows;
                        break;
                    }
                }
            }
        }
        if kkt > tol && p < 2.0 {
            if let Some(polished) = self.polish(&ls, &c, b, p, tol) {
                if polished.kkt < kkt {
                    iterations += polished.iterations;
                    kkt = polished.kkt;
                    c = polished.flows;
                }
            }
        }
        BlockResult { converged: kkt <= tol, flows: c, iterations, kkt }
    }

    /// Newton iteration on the concave dual `D(φ) = bᵀφ - Σ f*(Bᵀφ)`, with
    /// `f*(s) = (p-1)(|s|/p)^q`, started from the least-squares potentials of
    /// `c`. The flows `c(φ) = (f*)'(Bᵀφ)` satisfy the gradient condition by
    /// construction, so only feasibility needs to converge. Returns `None`
    /// when the polished flows are not feasible to `1e-10`.
    fn polish(&self, ls: &LaplacianSolver, c: &[f64], b: &[f64], p: f64, tol: f64) -> Option<BlockResult> {
        let q = p / (p - 1.0);
        let mut phi = self.kkt(ls, c, p).1;
        let slopes = |phi: &[f64]| -> Vec<f64> { self.ends.iter().map(|&(a, bb)| phi[bb] - phi[a]).collect() };
        let flows_of = |s: &[f64]| -> Vec<f64> { s.iter().map(|&v| v.signum() * (v.abs() / p).powf(q - 1.0)).collect() };
        let dual = |phi: &[f64], s: &[f64]| -> f64 {
            let lin: f64 = b.iter().zip(phi).map(|(x, y)| x * y).sum();
            lin - s.iter().map(|&v| (p - 1.0) * (v.abs() / p).powf(q)).sum::<f64>()
        };
        let mut s = slopes(&phi);
        let mut flows = flows_of(&s);
        let mut d_cur = dual(&phi, &s);
        let mut iterations = 0;
        for _ in 0..POLISH_ITERATIONS {
            let div = self.divergence(&flows);
            let res: Vec<f64> = b.iter().zip(&div).map(|(x, y)| x - y).collect();
            if res.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-13 {
                break;
            }
            iterations += 1;
            let mut w: Vec<f64> = s
                .iter()
                .zip(&flows)
                .map(|(&sv, &cv)| if sv == 0.0 { 0.0 } else { (q - 1.0) * cv / sv })
                .collect();
            let wmax = w.iter().copied().fold(0.0, f64::max);
            if !(wmax > 0.0) || !wmax.is_finite() {
                break;
            }
            for wi in &mut w {
                *wi = wi.max(wmax * WEIGHT_RATIO_FLOOR);
            }
            let step = LaplacianSolver::new(self.vertices.len(), &self.ends, &w).solve(&res);
            let slope: f64 = res.iter().zip(&step).map(|(x, y)| x * y).sum();
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let trial: Vec<f64> = phi.iter().zip(&step).map(|(x, y)| x + t * y).collect();
                let ts = slopes(&trial);
                let td = dual(&trial, &ts);
                if td >= d_cur + ARMIJO * t * slope {
                    phi = trial;
                    flows = flows_of(&ts);
                    s = ts;
                    d_cur = td;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let mismatch = self
            .divergence(&flows)
            .iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if mismatch > 1e-10 {
            return None;
        }
        let kkt = self.kkt(ls, &flows, p).0;
        Some(BlockResult { converged: kkt <= tol, flows, iterations, kkt })
    }
}

struct BlockResult {
    flows: Vec<f64>,
    iterations: usize,
    kkt: f64,
    converged: bool,
}

/// Minimal `ℓ^p` chain with boundary `δ_y - δ_x` for `p > 1`.
///
/// The cycle space splits over 2-edge-connected components, so bridges keep
/// the flow of the starting chain and each component is solved on its own;
/// a component that the flow does not cross has optimum zero. Trees need no
/// iteration at all.
pub fn min_norm_flow(g: &Graph, x: Vertex, y: Vertex, p: f64, opts: &FlowOptions) -> Result<FlowSolution> {
    check_exponent(p)?;
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if x == y {
        return Err(FlowError::SameEndpoints);
    }
    if !(opts.tol > 0.0) {
        return Err(FlowError::InvalidTolerance(opts.tol));
    }
    let start = match &opts.init {
        Some(c) => {
            let flows = dense_flows(g, c);
            let mismatch = flow_mismatch(g, &flows, x, y);
            if mismatch > FEASIBILITY_TOLERANCE {
                return Err(FlowError::Infeasible(mismatch));
            }
            flows
        }
        None => dense_flows(g, &quotient_norm_l1(g, x, y)?.1),
    };
    let mut flows = start;
    let mut iterations = 0;
    let mut kkt = 0.0f64;
    let mut converged = true;
    if !g.is_tree() {
        for comp in &g.bridge_structure().components {
            let block = Block::new(g, &comp.vertices, &comp.edges);
            let local: Vec<f64> = comp.edges.iter().map(|&e| flows[e]).collect();
            let demand = block.divergence(&local);
            let result = if demand.iter().all(|v| v.abs() < FEASIBILITY_TOLERANCE) {
                BlockResult { flows: vec![0.0; local.len()], iterations: 0, kkt: 0.0, converged: true }
            } else {
                block.solve(local, &demand, p, opts.tol, opts.max_iterations - iterations.min(opts.max_iterations))
            };
            for (&e, &v) in comp.edges.iter().zip(&result.flows) {
                flows[e] = v;
            }
            iterations += result.iterations;
            kkt = kkt.max(result.kkt);
            converged &= result.converged;
        }
    }
    let chain = Chain::from_coeffs(g, flows.iter().enumerate().map(|(e, &v)| (e, v)))?;
    let value = lp_norm(&chain, p)?;
    Ok(FlowSolution { source: x, target: y, p, chain, flows, value, kkt_residual: kkt, iterations, converged })
}

/// Potentials `φ` minimising `Σ_e (∇F(c)_e - (φ(e⁺) - φ(e⁻)))²`, normalised
/// by `φ(0) = 0`. Bridges are fitted exactly.
pub fn least_squares_potentials(g: &Graph, flows: &[f64], p: f64) -> Result<Vec<f64>> {
    check_exponent(p)?;
    let n = g.vertex_count();
    let bs = g.bridge_structure();
    let mut phi = vec![f64::NAN; n];
    let mut comp_of = vec![usize::MAX; n];
    let mut local_phi: Vec<Vec<f64>> = Vec::with_capacity(bs.components.len());
    for (i, comp) in bs.components.iter().enumerate() {
        let block = Block::new(g, &comp.vertices, &comp.edges);
        let local: Vec<f64> = comp.edges.iter().map(|&e| flows[e]).collect();
        local_phi.push(block.kkt(&block.unweighted(), &local, p).1);
        for &v in &comp.vertices {
            comp_of[v] = i;
        }
    }
    let assign = |v: Vertex, value: f64, phi: &mut Vec<f64>, queue: &mut Vec<Vertex>| {
        match comp_of[v] {
            usize::MAX => {
                phi[v] = value;
                queue.push(v);
            }
            i => {
                let comp = &bs.components[i];
                let at = comp.vertices.binary_search(&v).expect("member");
                let offset = value - local_phi[i][at];
                for (&u, &lp) in comp.vertices.iter().zip(&local_phi[i]) {
                    phi[u] = lp + offset;
                    queue.push(u);
                }
            }
        }
    };
    let mut queue = Vec::new();
    assign(0, 0.0, &mut phi, &mut queue);
    while let Some(v) = queue.pop() {
        for (&w, &e) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
            if phi[w].is_nan() {
                let gv = grad(flows[e], p);
                let value = if v < w { phi[v] + gv } else { phi[v] - gv };
                assign(w, value, &mut phi, &mut queue);
            }
        }
    }
    Ok(phi)
}

/// Optimality residual of a feasible solution: with `r = ∇F(c) - Bᵀφ` for
/// least-squares potentials `φ`, the largest `|r|` over supported edges plus
/// the largest `|r|` over zero edges.
pub fn kkt_residual(g: &Graph, s: &FlowSolution) -> Result<f64> {
    check_exponent(s.p)?;
    if s.flows.len() != g.edge_count() {
        return Err(FlowError::Infeasible(f64::INFINITY));
    }
    let mismatch = flow_mismatch(g, &s.flows, s.source, s.target);
    if mismatch > FEASIBILITY_TOLERANCE {
        return Err(FlowError::Infeasible(mismatch));
    }
    let mut worst = 0.0f64;
    for comp in &g.bridge_structure().components {
        let block = Block::new(g, &comp.vertices, &comp.edges);
        let local: Vec<f64> = comp.edges.iter().map(|&e| s.flows[e]).collect();
        worst = worst.max(block.kkt(&block.unweighted(), &local, s.p).0);
    }
    Ok(worst)
}

/// Unit chains of the fundamental cycles of the BFS tree rooted at 0, one per
/// non-tree edge, oriented along the non-tree edge.
pub fn fundamental_cycles(g: &Graph) -> Vec<Chain> {
    let n = g.vertex_count();
    let mut parent = vec![usize::MAX; n];
    let mut tree_edge = vec![false; g.edge_count()];
    let mut order = vec![0];
    parent[0] = 0;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        for (&w, &e) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
            if parent[w] == usize::MAX {
                parent[w] = v;
                tree_edge[e] = true;
                order.push(w);
            }
        }
    }
    let to_root = |mut v: Vertex| {
        let mut path = vec![v];
        while v != 0 {
            v = parent[v];
            path.push(v);
        }
        path
    };
    let mut cycles = Vec::new();
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        if tree_edge[e] {
            continue;
        }
        // a -> b, then b up to the root and back down to a
        let mut walk = vec![a];
        walk.extend(to_root(b));
        let mut down = to_root(a);
        down.reverse();
        walk.extend(down.into_iter().skip(1));
        cycles.push(chain_from_path(g, &walk).expect("tree walk"));
    }
    cycles
}

/// The geodesic indicator plus random multiples in `[-scale, scale]` of the
/// fundamental cycles: a feasible, generally non-optimal start.
pub fn perturbed_start(g: &Graph, x: Vertex, y: Vertex, scale: f64, seed: u64) -> Result<Chain> {
    let (_, mut c) = quotient_norm_l1(g, x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for cyc in fundamental_cycles(g) {
        c = c.add_scaled(&cyc, &rng.gen_range(-scale..=scale));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_from_edges, GroupSpec};

    fn cycle(n: usize) -> Graph {
        build_from_edges(&(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    /// `min (2 s^p + 2 (1-s)^p)^{1/p}` over `s ∈ [0,1]` by golden-section search.
    fn four_cycle_oracle(p: f64) -> f64 {
        let f = |s: f64| 2.0 * s.powf(p) + 2.0 * (1.0 - s).powf(p);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        f((lo + hi) / 2.0).powf(1.0 / p)
    }

    #[test]
    fn l1_norm_is_distance() {
        let g = GroupSpec::free(2, 3).build().unwrap();
        let data = g.cayley().unwrap();
        let a = data.vertex_of("a").unwrap().unwrap();
        let ba = data.vertex_of("Ba").unwrap().unwrap();
        let (d, c) = quotient_norm_l1(&g, a, ba).unwrap();
        assert_eq!(d, g.dist(a, ba));
        assert_eq!(lp_norm(&c, 1.0).unwrap(), d as f64);
        assert_eq!(quotient_norm_l1(&g, 3, 3).unwrap().0, 0);
        let path = build_from_edges(&[(0, 1), (1, 2)]).unwrap();
        assert_eq!(quotient_norm_l1(&path, 0, 2).unwrap().0, 2);
    }

    #[test]
    fn tree_flow_is_geodesic() {
        let g = GroupSpec::free(2, 4).build().unwrap();
        for p in [1.1, 1.5, 2.0, 3.0] {
            let s = min_norm_flow(&g, 5, 150, p, &FlowOptions::default()).unwrap();
            let d = g.dist(5, 150) as f64;
            assert!((s.value - d.powf(1.0 / p)).abs() < 1e-12);
            assert!(s.converged);
            assert_eq!(s.kkt_residual, 0.0);
            assert_eq!(kkt_residual(&g, &s).unwrap(), 0.0);
            assert_eq!(s.chain, quotient_norm_l1(&g, 5, 150).unwrap().1);
        }
    }

    #[test]
    fn tree_potentials_integrate_the_gradient() {
        let g = build_from_edges(&[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let s = min_norm_flow(&g, 0, 3, 2.0, &FlowOptions::default()).unwrap();
        let phi = least_squares_potentials(&g, &s.flows, 2.0).unwrap();
        assert_eq!(phi, vec![0.0, 2.0, 4.0, 6.0, 2.0]);
    }

    #[test]
    fn four_cycle_p2_splits_evenly() {
        let g = cycle(4);
        let s = min_norm_flow(&g, 0, 2, 2.0, &FlowOptions::default()).unwrap();
        assert!(s.converged);
        assert!((s.value - 1.0).abs() < 1e-10);
        assert!(s.kkt_residual <= 1e-10);
        for (u, v) in [(0, 1), (1, 2), (0, 3), (3, 2)] {
            assert!((s.chain.oriented(&g, u, v).unwrap() - 0.5).abs() < 1e-10);
        }
        assert!(s.boundary_mismatch(&g) < 1e-12);
    }

    #[test]
    fn four_cycle_matches_one_dimensional_oracle() {
        let g = cycle(4);
        for p in [1.001, 1.01, 1.1, 1.5, 3.0, 6.0] {
            let s = min_norm_flow(&g, 0, 2, p, &FlowOptions::default()).unwrap();
            assert!(s.converged, "p = {p}");
            assert!((s.value - four_cycle_oracle(p)).abs() < 1e-9, "p = {p}: {} vs {}", s.value, four_cycle_oracle(p));
            assert!(s.value <= 2f64.powf(1.0 / p) + 1e-12);
        }
    }

    #[test]
    fn kkt_detects_suboptimal_chains() {
        let g = cycle(4);
        let c = Chain::from_coeffs(&g, [(0, 0.7), (2, 0.7), (1, 0.3), (3, -0.3)]).unwrap();
        assert!(boundary(&g, &c).max_abs_diff(&VertexCharge::unit_difference(0, 2)) < 1e-15);
        let s = FlowSolution {
            source: 0,
            target: 2,
            p: 2.0,
            flows: dense_flows(&g, &c),
            value: lp_norm(&c, 2.0).unwrap(),
            chain: c,
            kkt_residual: f64::NAN,
            iterations: 0,
            converged: false,
        };
        assert!(kkt_residual(&g, &s).unwrap() > 1e-3);
        let infeasible = FlowSolution { flows: vec![1.0, 0.0, 0.0, 0.0], ..s };
        assert!(matches!(kkt_residual(&g, &infeasible), Err(FlowError::Infeasible(_))));
    }

    #[test]
    fn perturbed_starts_reach_the_same_chain() {
        let g = GroupSpec::grid2d(3).build().unwrap();
        for p in [1.2, 2.0, 2.5] {
            let base = min_norm_flow(&g, 0, 20, p, &FlowOptions::default()).unwrap();
            assert!(base.converged, "p = {p}: kkt {} after {}", base.kkt_residual, base.iterations);
            for seed in 0..3 {
                let init = perturbed_start(&g, 0, 20, 0.5, seed).unwrap();
                let opts = FlowOptions { init: Some(init), ..FlowOptions::default() };
                let s = min_norm_flow(&g, 0, 20, p, &opts).unwrap();
                assert!(s.converged);
                assert!(s.chain.max_abs_diff(&base.chain) < 1e-6);
            }
        }
    }

    #[test]
    fn fundamental_cycles_span_the_cycle_space() {
        for g in [cycle(5), GroupSpec::grid2d(3).build().unwrap(), GroupSpec::z2z3(3).build().unwrap()] {
            let cycles = fundamental_cycles(&g);
            assert_eq!(cycles.len(), g.cycle_rank());
            for c in &cycles {
                assert!(boundary(&g, c).is_zero());
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = cycle(4);
        let o = FlowOptions::default();
        assert_eq!(min_norm_flow(&g, 0, 2, 1.0, &o).unwrap_err(), FlowError::InvalidExponent(1.0));
        assert_eq!(min_norm_flow(&g, 1, 1, 2.0, &o).unwrap_err(), FlowError::SameEndpoints);
        let bad = FlowOptions { init: Some(Chain::oriented_edge(&g, 0, 1).unwrap()), ..FlowOptions::default() };
        assert!(matches!(min_norm_flow(&g, 0, 2, 2.0, &bad), Err(FlowError::Infeasible(_))));
    }
}
