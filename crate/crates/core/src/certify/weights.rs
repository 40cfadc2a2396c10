use rayon::prelude::*;
use serde::Serialize;

use super::{CertifyError, Result};
use crate::chains::{boundary, Chain, VertexCharge};
use crate::graph::{GroupKind, GroupSpec, Graph, Vertex};

/// Boundary mismatch tolerated by [`chain_weight_sum`].
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// `d(·, géod(x, y))` for every vertex.
pub fn distance_to_geodesics(g: &Graph, x: Vertex, y: Vertex) -> Result<Vec<u32>> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    Ok(g.bfs_multi(&g.geodesic_set(x, y)))
}

/// `Σ_{i<n} e^{-ϵ d(x_i, géod(x,y))}` along `path = (x_0, …, x_n)`.
pub fn path_weight_sum(g: &Graph, path: &[Vertex], x: Vertex, y: Vertex, epsilon: f64) -> Result<f64> {
    let to_geod = distance_to_geodesics(g, x, y)?;
    path_weight_sum_with(g, path, x, y, epsilon, &to_geod)
}

pub(crate) fn path_weight_sum_with(
    g: &Graph,
    path: &[Vertex],
    x: Vertex,
    y: Vertex,
    epsilon: f64,
    to_geod: &[u32],
) -> Result<f64> {
    g.check_path(path)?;
    if path.first() != Some(&x) || path.last() != Some(&y) {
        return Err(CertifyError::EndpointMismatch { x, y });
    }
    Ok(path[..path.len() - 1].iter().map(|&v| (-epsilon * to_geod[v] as f64).exp()).sum())
}

/// `Σ_e |c(e)| e^{-ϵ d(e, géod(x,y))}` with the edge distance taken as the
/// smaller of its endpoint distances.
pub fn chain_weight_sum(g: &Graph, c: &Chain, x: Vertex, y: Vertex, epsilon: f64) -> Result<f64> {
    let to_geod = distance_to_geodesics(g, x, y)?;
    chain_weight_sum_with(g, c, x, y, epsilon, &to_geod)
}

pub(crate) fn chain_weight_sum_with(
    g: &Graph,
    c: &Chain,
    x: Vertex,
    y: Vertex,
    epsilon: f64,
    to_geod: &[u32],
) -> Result<f64> {
    let mismatch = boundary(g, c).max_abs_diff(&VertexCharge::unit_difference(x, y));
    if !(mismatch <= BOUNDARY_TOLERANCE) {
        return Err(CertifyError::WrongBoundary(mismatch));
    }
    Ok(c.iter()
        .map(|(e, &v)| {
            let (a, b) = g.edge(e);
            v.abs() * (-epsilon * to_geod[a].min(to_geod[b]) as f64).exp()
        })
        .sum())
}

/// A member of a family for [`measure_beta`].
#[derive(Debug, Clone)]
pub enum BetaSample {
    /// A vertex path; its endpoints are `x` and `y`.
    Path(Vec<Vertex>),
    Chain { chain: Chain, x: Vertex, y: Vertex },
}

impl BetaSample {
    fn endpoints(&self) -> Option<(Vertex, Vertex)> {
        match self {
            BetaSample::Path(p) => Some((*p.first()?, *p.last()?)),
            BetaSample::Chain { x, y, .. } => Some((*x, *y)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaMeasurement {
    /// Infimum of weighted sum over `d(x,y)`.
    pub beta_emp: f64,
    /// Index of the minimising member.
    pub witness: usize,
    /// Members with `x ≠ y` that entered the infimum.
    pub members: usize,
}

/// Empirical `β`: the infimum of the weighted sum over `d(x,y)` across the
/// family. Members with equal endpoints are skipped.
pub fn measure_beta(g: &Graph, epsilon: f64, family: &[BetaSample]) -> Result<BetaMeasurement> {
    let ratios: Vec<Option<f64>> = family
        .par_iter()
        .map(|s| -> Result<Option<f64>> {
            let (x, y) = s.endpoints().ok_or_else(|| CertifyError::InvalidArgument("empty path".into()))?;
            let d = g.distance(x, y)?;
            if d == 0 {
                return Ok(None);
            }
            let sum = match s {
                BetaSample::Path(p) => path_weight_sum(g, p, x, y, epsilon)?,
                BetaSample::Chain { chain, .. } => chain_weight_sum(g, chain, x, y, epsilon)?,
            };
            Ok(Some(sum / d as f64))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, usize)> = None;
    let mut members = 0;
    for (i, r) in ratios.into_iter().enumerate() {
        if let Some(r) = r {
            members += 1;
            if best.is_none_or(|(b, _)| r < b) {
                best = Some((r, i));
            }
        }
    }
    let (beta_emp, witness) =
        best.ok_or_else(|| CertifyError::InvalidArgument("family has no member with distinct endpoints".into()))?;
    Ok(BetaMeasurement { beta_emp, witness, members })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub m: u32,
    pub d_len: u32,
    pub epsilon: f64,
    /// `Σ_{k<m} e^{-ϵk} + d e^{-ϵm} + Σ_{k=1}^{m} e^{-ϵk}`.
    pub formula_value: f64,
    /// Weighted sum along the rectangular detour in the grid.
    pub constructed_value: f64,
    /// `2/(1-e^{-ϵ}) + d e^{-ϵm}`.
    pub upper_bound: f64,
    /// `constructed_value / d`.
    pub beta_emp: f64,
    pub grid_radius: u32,
    pub path: Vec<Vertex>,
}

/// The closed-form sum along a rectangle of height `m` over a segment of
/// length `d_len`.
pub fn euclid_formula(m: u32, d_len: u32, epsilon: f64) -> f64 {
    let e = |k: u32| (-epsilon * k as f64).exp();
    (0..m).map(e).sum::<f64>() + d_len as f64 * e(m) + (1..=m).map(e).sum::<f64>()
}

/// Smallest grid ball containing the rectangle used by [`euclid_counterexample`].
pub fn euclid_grid_radius(m: u32, d_len: u32) -> u32 {
    d_len.div_ceil(2) + m
}

/// Builds the grid ball and evaluates [`euclid_counterexample_in`].
pub fn euclid_counterexample(m: u32, d_len: u32, epsilon: f64) -> Result<Counterexample> {
    let g = GroupSpec::grid2d(euclid_grid_radius(m, d_len)).build()?;
    euclid_counterexample_in(&g, m, d_len, epsilon)
}

/// Path up `m` rows from `x = (-⌊d/2⌋, 0)`, across `d` columns, then down to
/// `y = (⌈d/2⌉, 0)`; the unique geodesic is the bottom segment.
pub fn euclid_counterexample_in(g: &Graph, m: u32, d_len: u32, epsilon: f64) -> Result<Counterexample> {
    if m == 0 || d_len == 0 {
        return Err(CertifyError::InvalidArgument("m and d_len must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CertifyError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let data = g.cayley().ok_or(CertifyError::NotCayley)?;
    if data.spec.kind != GroupKind::Grid2d {
        return Err(CertifyError::InvalidArgument("the counterexample lives in the grid group".into()));
    }
    let needed = euclid_grid_radius(m, d_len);
    if data.spec.radius < needed {
        return Err(CertifyError::GridTooSmall { needed, radius: data.spec.radius });
    }
    let at = |i: i64, h: i64| -> Result<Vertex> {
        let mut w = String::new();
        let (a, b) = (if i < 0 { 'A' } else { 'a' }, if h < 0 { 'B' } else { 'b' });
        w.extend(std::iter::repeat_n(a, i.unsigned_abs() as usize));
        w.extend(std::iter::repeat_n(b, h.unsigned_abs() as usize));
        data.vertex_of(&w)?.ok_or(CertifyError::GridTooSmall { needed, radius: data.spec.radius })
    };
    let (m, d) = (m as i64, d_len as i64);
    let x0 = -(d / 2);
    let mut path = Vec::with_capacity((2 * m + d + 1) as usize);
    for h in 0..m {
        path.push(at(x0, h)?);
    }
    for i in 0..d {
        path.push(at(x0 + i, m)?);
    }
    for h in (0..=m).rev() {
        path.push(at(x0 + d, h)?);
    }
    let (x, y) = (path[0], *path.last().expect("nonempty"));
    let constructed_value = path_weight_sum(g, &path, x, y, epsilon)?;
    let (m, d_len) = (m as u32, d_len as u32);
    Ok(Counterexample {
        m,
        d_len,
        epsilon,
        formula_value: euclid_formula(m, d_len, epsilon),
        constructed_value,
        upper_bound: 2.0 / -(-epsilon).exp_m1() + d_len as f64 * (-epsilon * m as f64).exp(),
        beta_emp: constructed_value / d_len as f64,
        grid_radius: needed,
        path,
    })
}
