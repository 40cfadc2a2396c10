use rayon::prelude::*;
use serde::Serialize;

use super::{HyperbolicityError, Result};
use crate::graph::{Graph, Vertex};

/// Exponential growth bound `N(k) <= D · exp(β′ k) · d(x, y)` for the
/// `k`-neighbourhoods of geodesic intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub beta_prime: f64,
    /// `D`, tight: the bound is an equality at `witness`.
    pub growth_prefactor: f64,
    /// `exp(intercept)` of the least-squares line before tightening.
    pub fitted_prefactor: f64,
    /// Root mean square residual of the log-linear fit.
    pub residual_rms: f64,
    /// `(x, y, k)` attaining the bound.
    pub witness: (Vertex, Vertex, u32),
    /// Set when the fitted slope was not positive and had to be floored.
    pub slope_floored: bool,
    /// `N(k)` for each sampled pair, `k = 0..=k_max`.
    pub counts: Vec<Vec<usize>>,
}

const MIN_SLOPE: f64 = 1e-9;

/// `N(k) = card{z : d(z, géod(x,y)) <= k}` for `k = 0..=k_max`.
pub fn neighbourhood_counts(g: &Graph, x: Vertex, y: Vertex, k_max: u32) -> Vec<usize> {
    let geod = g.geodesic_set(x, y);
    let dist = g.bfs_multi(&geod);
    let mut counts = vec![0usize; k_max as usize + 1];
    for d in dist {
        if d <= k_max {
            counts[d as usize] += 1;
        }
    }
    for k in 1..counts.len() {
        counts[k] += counts[k - 1];
    }
    counts
}

/// Least-squares fit of `ln(N(k) / d(x,y))` against `k` over all sampled
/// pairs, followed by the smallest prefactor that makes the bound hold at
/// every sample point.
pub fn growth_fit(g: &Graph, pairs: &[(Vertex, Vertex)], k_max: u32) -> Result<GrowthFit> {
    if pairs.is_empty() {
        return Err(HyperbolicityError::InvalidArgument("empty pair sample".into()));
    }
    if k_max == 0 {
        return Err(HyperbolicityError::InvalidArgument("k_max must be at least 1".into()));
    }
    for &(x, y) in pairs {
        g.check_vertex(x)?;
        g.check_vertex(y)?;
        if x == y {
            return Err(HyperbolicityError::InvalidArgument(format!("pair ({x}, {x}) has equal endpoints")));
        }
    }
    let counts: Vec<Vec<usize>> = pairs
        .par_iter()
        .map(|&(x, y)| neighbourhood_counts(g, x, y, k_max))
        .collect();
    let dists: Vec<f64> = pairs.iter().map(|&(x, y)| g.dist(x, y) as f64).collect();

    let mut pts = Vec::with_capacity(pairs.len() * (k_max as usize + 1));
    for (row, &d) in counts.iter().zip(&dists) {
        for (k, &nk) in row.iter().enumerate() {
            pts.push((k as f64, (nk as f64 / d).ln()));
        }
    }
    let m = pts.len() as f64;
    let mean_k = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_k).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_k) * (p.1 - mean_y)).sum();
    let raw_slope = sxy / sxx;
    let intercept = mean_y - raw_slope * mean_k;
    let residual_rms = (pts.iter().map(|p| (p.1 - intercept - raw_slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    let slope_floored = !(raw_slope > MIN_SLOPE);
    let beta_prime = if slope_floored { MIN_SLOPE } else { raw_slope };

    let mut prefactor = 0.0f64;
    let mut witness = (pairs[0].0, pairs[0].1, 0);
    for ((row, &d), &(x, y)) in counts.iter().zip(&dists).zip(pairs) {
        for (k, &nk) in row.iter().enumerate() {
            let need = nk as f64 / ((beta_prime * k as f64).exp() * d);
            if need > prefactor {
                prefactor = need;
                witness = (x, y, k as u32);
            }
        }
    }
    Ok(GrowthFit {
        beta_prime,
        growth_prefactor: prefactor,
        fitted_prefactor: intercept.exp(),
        residual_rms,
        witness,
        slope_floored,
        counts,
    })
}
