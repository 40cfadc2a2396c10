use serde::Serialize;

use super::{HyperbolicityError, Result};
use crate::graph::{Graph, Vertex};

/// Number of halvings tried by [`suggest_epsilon`] after the base value.
pub const EPSILON_GRID_STEPS: u32 = 12;
const MAX_CENTERS: usize = 10;

#[derive(Debug, Clone)]
enum Values {
    /// Row-major `n × n` chain infima.
    Table(Vec<f64>),
    /// On trees the single hop is already optimal, so `d_t = ρ`.
    Kernel,
}

/// A visual metric `d_t` centred at `t`:
/// the chain infimum of `ρ(u,v) = exp(-ϵ (u,v)_t)` over finite vertex
/// sequences, with `d_t(x,x) := ρ(x,x) > 0`.
#[derive(Debug, Clone)]
pub struct VisualMetric<'g> {
    graph: &'g Graph,
    center: Vertex,
    epsilon: f64,
    to_center: Vec<u32>,
    values: Values,
    sandwich_c: f64,
    worst_pair: (Vertex, Vertex),
}

impl<'g> VisualMetric<'g> {
    pub fn center(&self) -> Vertex {
        self.center
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Smallest `C >= 1` with `ρ/C <= d_t <= C ρ` over all pairs.
    pub fn sandwich_c(&self) -> f64 {
        self.sandwich_c
    }

    /// A pair attaining the sandwich constant.
    pub fn worst_pair(&self) -> (Vertex, Vertex) {
        self.worst_pair
    }

    /// `ρ(x, y) = exp(-ϵ (x,y)_t)`.
    pub fn kernel(&self, x: Vertex, y: Vertex) -> f64 {
        let twice = self.to_center[x] as f64 + self.to_center[y] as f64 - self.graph.dist(x, y) as f64;
        (-self.epsilon * twice / 2.0).exp()
    }

    pub fn get(&self, x: Vertex, y: Vertex) -> f64 {
        match &self.values {
            Values::Table(t) => t[x * self.graph.vertex_count() + y],
            Values::Kernel => self.kernel(x, y),
        }
    }
}

/// Builds `d_t` for centre `t` and parameter `ϵ`, measuring the sandwich
/// constant exhaustively over all pairs.
pub fn build_visual_metric(g: &Graph, t: Vertex, epsilon: f64) -> Result<VisualMetric<'_>> {
    g.check_vertex(t)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(HyperbolicityError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = g.vertex_count();
    let to_center = g.distances_from(t);
    let mut vm = VisualMetric {
        graph: g,
        center: t,
        epsilon,
        to_center,
        values: Values::Kernel,
        sandwich_c: 1.0,
        worst_pair: (t, t),
    };
    if g.is_tree() {
        return Ok(vm);
    }

    let mut table = vec![0.0f64; n * n];
    let rows: Vec<Vec<u32>> = (0..n).map(|x| g.distances_from(x)).collect();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let twice = vm.to_center[x] as f64 + vm.to_center[y] as f64 - rows[x][y] as f64;
                table[x * n + y] = (-epsilon * twice / 2.0).exp();
            }
        }
    }
    let rho = table.clone();
    floyd_warshall(&mut table, n);

    let mut worst = (1.0, (t, t));
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let ratio = rho[x * n + y] / table[x * n + y];
            if ratio > worst.0 {
                worst = (ratio, (x, y));
            }
        }
    }
    for x in 0..n {
        table[x * n + x] = (-epsilon * vm.to_center[x] as f64).exp();
    }
    vm.values = Values::Table(table);
    vm.sandwich_c = worst.0;
    vm.worst_pair = worst.1;
    Ok(vm)
}

fn floyd_warshall(d: &mut [f64], n: usize) {
    let mut row_k = vec![0.0; n];
    for k in 0..n {
        row_k.copy_from_slice(&d[k * n..(k + 1) * n]);
        for i in 0..n {
            let row = &mut d[i * n..(i + 1) * n];
            let dik = row[k];
            for (dij, &dkj) in row.iter_mut().zip(&row_k) {
                let via = dik + dkj;
                if via < *dij {
                    *dij = via;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonChoice {
    pub epsilon: f64,
    /// Worst sandwich constant over the sampled centres.
    pub worst_c: f64,
    /// Grid index `j` of the chosen value.
    pub grid_index: u32,
    pub centers: Vec<Vertex>,
}

/// Largest `ϵ` in `{ln 2 / max(δ,1) · 2^-j : j = 0..=12}` whose visual metrics,
/// centred at up to ten evenly spaced vertices, all have `C <= c_cap`.
pub fn suggest_epsilon(g: &Graph, delta: f64, c_cap: f64) -> Result<EpsilonChoice> {
    suggest_epsilon_with_steps(g, delta, c_cap, EPSILON_GRID_STEPS)
}

fn suggest_epsilon_with_steps(g: &Graph, delta: f64, c_cap: f64, steps: u32) -> Result<EpsilonChoice> {
    if !(delta >= 0.0) {
        return Err(HyperbolicityError::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
    }
    if !(c_cap > 1.0) {
        return Err(HyperbolicityError::InvalidArgument(format!("C cap must exceed 1, got {c_cap}")));
    }
    let n = g.vertex_count();
    let k = n.min(MAX_CENTERS);
    let centers: Vec<Vertex> = (0..k).map(|i| i * n / k).collect();
    let base = std::f64::consts::LN_2 / delta.max(1.0);
    let mut best: Option<(f64, f64)> = None;
    for j in 0..=steps {
        let epsilon = base * 0.5f64.powi(j as i32);
        let mut worst = 1.0f64;
        for &t in &centers {
            worst = worst.max(build_visual_metric(g, t, epsilon)?.sandwich_c());
        }
        if worst <= c_cap {
            return Ok(EpsilonChoice { epsilon, worst_c: worst, grid_index: j, centers });
        }
        if best.is_none_or(|(_, c)| worst < c) {
            best = Some((epsilon, worst));
        }
    }
    let (best_epsilon, best_c) = best.expect("grid is nonempty");
    Err(HyperbolicityError::NoEpsilon { cap: c_cap, best_epsilon, best_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_from_edges, GroupSpec};

    fn cycle(n: usize) -> Graph {
        build_from_edges(&(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    /// Chain infimum by Bellman-Ford style relaxation over sequences of
    /// bounded length, independent of the Floyd-Warshall route.
    fn chain_infimum_oracle(g: &Graph, t: Vertex, eps: f64) -> Vec<f64> {
        let n = g.vertex_count();
        let rho = |x: Vertex, y: Vertex| {
            let twice = g.dist(x, t) as f64 + g.dist(y, t) as f64 - g.dist(x, y) as f64;
            (-eps * twice / 2.0).exp()
        };
        let mut best = vec![f64::INFINITY; n * n];
        for x in 0..n {
            // cur[z] = cheapest chain from x to z with the current hop budget
            let mut cur: Vec<f64> = (0..n).map(|z| if z == x { 0.0 } else { f64::INFINITY }).collect();
            for _ in 0..n {
                let mut next = cur.clone();
                for z in 0..n {
                    for w in 0..n {
                        if w != z && cur[z] + rho(z, w) < next[w] {
                            next[w] = cur[z] + rho(z, w);
                        }
                    }
                }
                cur = next;
            }
            for y in 0..n {
                best[x * n + y] = if x == y { rho(x, x) } else { cur[y] };
            }
        }
        best
    }

    #[test]
    fn tree_metric_is_the_kernel() {
        for r in 1..=2 {
            let g = GroupSpec::free(2, r).build().unwrap();
            let n = g.vertex_count();
            for t in [0, n - 1] {
                let vm = build_visual_metric(&g, t, 0.7).unwrap();
                assert_eq!(vm.sandwich_c(), 1.0);
                let oracle = chain_infimum_oracle(&g, t, 0.7);
                for x in 0..n {
                    for y in 0..n {
                        assert!((vm.get(x, y) - oracle[x * n + y]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn floyd_warshall_matches_oracle() {
        let g = GroupSpec::z2z3(2).build().unwrap();
        let n = g.vertex_count();
        let vm = build_visual_metric(&g, 1, 1.3).unwrap();
        let oracle = chain_infimum_oracle(&g, 1, 1.3);
        for x in 0..n {
            for y in 0..n {
                assert!((vm.get(x, y) - oracle[x * n + y]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn four_cycle_metric_properties() {
        let g = cycle(4);
        let vm = build_visual_metric(&g, 0, 1.0).unwrap();
        let c = vm.sandwich_c();
        assert!(c.is_finite() && c >= 1.0);
        for x in 0..4 {
            assert!(vm.get(x, x) > 0.0);
            for y in 0..4 {
                assert_eq!(vm.get(x, y), vm.get(y, x));
                let k = vm.kernel(x, y);
                assert!(vm.get(x, y) <= c * k * (1.0 + 1e-12));
                assert!(vm.get(x, y) >= k / c * (1.0 - 1e-12));
                for z in 0..4 {
                    if x != z {
                        assert!(vm.get(x, z) <= vm.get(x, y) + vm.get(y, z) + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn epsilon_suggestions() {
        let tree = GroupSpec::free(2, 3).build().unwrap();
        let choice = suggest_epsilon(&tree, 0.0, 2.0).unwrap();
        assert_eq!(choice.grid_index, 0);
        assert_eq!(choice.epsilon, std::f64::consts::LN_2);
        assert_eq!(choice.worst_c, 1.0);

        let c4 = suggest_epsilon(&cycle(4), 2.0, 10.0).unwrap();
        assert!(c4.epsilon > 0.0);

        assert!(matches!(suggest_epsilon(&cycle(4), 2.0, 1.0), Err(HyperbolicityError::InvalidArgument(_))));
        assert!(matches!(build_visual_metric(&tree, 0, 0.0), Err(HyperbolicityError::InvalidArgument(_))));
    }

    #[test]
    fn no_grid_point_qualifies() {
        let g = GroupSpec::grid2d(3).build().unwrap();
        // small enough epsilon always gives C = 1 on a finite graph, so only
        // the top of the grid is searched here
        match suggest_epsilon_with_steps(&g, 0.0, 1.0 + 1e-9, 0) {
            Err(HyperbolicityError::NoEpsilon { best_c, best_epsilon, .. }) => {
                assert!(best_c > 1.0 + 1e-9);
                assert!(best_epsilon > 0.0);
            }
            other => panic!("expected NoEpsilon, got {other:?}"),
        }
    }
}
