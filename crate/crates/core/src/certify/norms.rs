use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::constants::{ExponentConstants, ProofConstants};
use super::report::{compare, StatementReport, Witness};
use super::weights::{chain_weight_sum_with, distance_to_geodesics, path_weight_sum_with};
use super::{CertifyError, Result};
use crate::chains::{chain_from_path, decompose, Chain};
use crate::flow::{min_norm_flow, quotient_norm_l1, FlowOptions, FEASIBILITY_TOLERANCE};
use crate::graph::{Graph, Vertex};
use crate::hyperbolicity::Nesting;

/// Certificate tolerance for solutions entering the harness.
pub const KKT_TOLERANCE: f64 = 1e-6;

/// `count` ordered pairs of distinct vertices.
pub fn sample_pairs(g: &Graph, count: usize, seed: u64) -> Result<Vec<(Vertex, Vertex)>> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(CertifyError::InvalidArgument("need two vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if x != y {
            out.push((x, y));
        }
    }
    Ok(out)
}

fn random_walk_to(g: &Graph, rng: &mut ChaCha8Rng, x: Vertex, y: Vertex, max_walk: usize) -> Vec<Vertex> {
    let mut path = vec![x];
    let mut v = x;
    for _ in 0..rng.gen_range(0..=max_walk) {
        let nb = g.neighbors(v);
        v = nb[rng.gen_range(0..nb.len())];
        path.push(v);
    }
    path.extend(g.geodesic_path(v, y).into_iter().skip(1));
    path
}

/// Chains with boundary `δ_y - δ_x`: affine combinations of up to three
/// random paths, some weights negative, plus a random closed walk.
pub fn sample_chains(g: &Graph, count: usize, seed: u64) -> Result<Vec<(Chain, Vertex, Vertex)>> {
    let pairs = sample_pairs(g, count, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut out = Vec::with_capacity(count);
    for (x, y) in pairs {
        let k = rng.gen_range(1..=3);
        let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let s: f64 = weights.iter().sum();
        if s.abs() < 0.2 {
            weights = vec![1.0 / k as f64; k];
        } else {
            weights.iter_mut().for_each(|w| *w /= s);
        }
        let mut c = Chain::zero();
        for w in weights {
            let p: Chain = chain_from_path(g, &random_walk_to(g, &mut rng, x, y, 6))?;
            c = c.add_scaled(&p, &w);
        }
        if rng.gen_bool(0.5) {
            let v = rng.gen_range(0..g.vertex_count());
            let loop_path = random_walk_to(g, &mut rng, v, v, 8);
            if loop_path.len() > 1 {
                let l: Chain = chain_from_path(g, &loop_path)?;
                c = c.add_scaled(&l, &rng.gen_range(-1.0..1.0));
            }
        }
        out.push((c, x, y));
    }
    Ok(out)
}

/// Checks `Σ_e |c(e)| e^{-ϵ d(e, géod)} >= β d(x,y)` and replays the
/// reduction to paths through the decomposition:
/// chain sum `>= Σ_k |α_k| · (path sum of c_k)` and each path sum `>= β d`.
pub fn verify_cor_2_7(g: &Graph, k: &ProofConstants, members: &[(Chain, Vertex, Vertex)]) -> Result<StatementReport> {
    let parts: Vec<StatementReport> = members
        .par_iter()
        .enumerate()
        .map(|(i, (c, x, y))| cor_2_7_member(g, k, c, *x, *y, i))
        .collect::<Result<_>>()?;
    let mut rep = StatementReport::new("2.7");
    rep.declare("conclusion", false);
    rep.declare("decomposition_reduction", false);
    rep.declare("path_terms", false);
    rep.declare("decomposition", true);
    for p in parts {
        rep.absorb(p);
    }
    rep.measured.insert("beta_paper".into(), k.beta_paper);
    Ok(rep)
}

fn cor_2_7_member(g: &Graph, k: &ProofConstants, c: &Chain, x: Vertex, y: Vertex, i: usize) -> Result<StatementReport> {
    let mut part = StatementReport::new("2.7");
    let d = g.distance(x, y)? as f64;
    if d == 0.0 {
        part.conclusion(Nesting::Vacuous);
        return Ok(part);
    }
    let to_geod = distance_to_geodesics(g, x, y)?;
    let sum = chain_weight_sum_with(g, c, x, y, k.epsilon, &to_geod)?;
    let edges = || c.support().map(|e| g.edge(e)).collect::<Vec<_>>();
    let bound = k.beta_paper * d;
    let v = compare(sum, bound);
    part.conclusion(v);
    part.measure_min("min_beta_emp", sum / d);
    if v == Nesting::Violated {
        part.witness(Witness::new("conclusion", i, vec![x, y], sum, bound).with_edges(edges()));
    }
    let dec = match decompose(g, c) {
        Ok(dec) => dec,
        Err(e) => {
            part.record("decomposition", Nesting::Violated);
            part.witness(Witness::new("decomposition", i, vec![x, y], 0.0, 0.0).with_edges(edges()).with_note(e.to_string()));
            return Ok(part);
        }
    };
    part.record("decomposition", Nesting::Holds);
    let mut reduced = 0.0;
    for term in &dec.path_terms {
        let ps = path_weight_sum_with(g, &term.vertices, x, y, k.epsilon, &to_geod)?;
        reduced += term.alpha.abs() * ps;
        let v = compare(ps, bound);
        part.record("path_terms", v);
        if v == Nesting::Violated {
            part.witness(Witness::new("path_terms", i, term.vertices.clone(), ps, bound));
        }
    }
    let v = compare(sum, reduced);
    part.record("decomposition_reduction", v);
    if v == Nesting::Violated {
        part.witness(Witness::new("decomposition_reduction", i, vec![x, y], sum, reduced).with_edges(edges()));
    }
    Ok(part)
}

/// Checks `α′ d^{1/p} <= ‖c‖_p <= d^{1/p}` for the optimal chain of every
/// pair and replays the Hölder step
/// `‖c‖_p (Σ_e e^{-ϵq d(e,géod)})^{1/q} >= Σ_e |c(e)| e^{-ϵ d(e,géod)} >= β d`.
/// `β = min(β_paper, β_emp)`, with `β_emp` measured on the optimal chains.
pub fn verify_prop_2_9(
    g: &Graph,
    p: f64,
    k: &ProofConstants,
    pairs: &[(Vertex, Vertex)],
    opts: &FlowOptions,
) -> Result<(StatementReport, ExponentConstants)> {
    let pre = k.for_exponent(p)?;
    let q = pre.q;
    struct Solved {
        x: Vertex,
        y: Vertex,
        d: f64,
        value: f64,
        mismatch: f64,
        kkt: f64,
        converged: bool,
        weighted: f64,
        holder_factor: f64,
        edges: Vec<(Vertex, Vertex)>,
    }
    let solved: Vec<Option<Solved>> = pairs
        .par_iter()
        .map(|&(x, y)| -> Result<Option<Solved>> {
            let d = g.distance(x, y)? as f64;
            if d == 0.0 {
                return Ok(None);
            }
            let s = min_norm_flow(g, x, y, p, opts)?;
            let to_geod = distance_to_geodesics(g, x, y)?;
            let weighted = chain_weight_sum_with(g, &s.chain, x, y, k.epsilon, &to_geod)?;
            let power_sum: f64 = g
                .edges()
                .iter()
                .map(|&(a, b)| (-k.epsilon * q * to_geod[a].min(to_geod[b]) as f64).exp())
                .sum();
            Ok(Some(Solved {
                x,
                y,
                d,
                value: s.value,
                mismatch: s.boundary_mismatch(g),
                kkt: s.kkt_residual,
                converged: s.converged,
                weighted,
                holder_factor: power_sum.powf(1.0 / q),
                edges: s.chain.support().map(|e| g.edge(e)).collect(),
            }))
        })
        .collect::<Result<_>>()?;

    let mut measured = k.clone();
    let beta_emp = solved.iter().flatten().map(|s| s.weighted / s.d).fold(f64::INFINITY, f64::min);
    if beta_emp.is_finite() {
        measured.beta_emp = Some(measured.beta_emp.map_or(beta_emp, |b| b.min(beta_emp)));
    }
    let ek = measured.for_exponent(p)?;

    let mut rep = StatementReport::new("2.9");
    for (name, info) in [
        ("conclusion", false),
        ("upper_bound", false),
        ("feasibility", false),
        ("holder", false),
        ("cor_2_7", false),
        ("edge_growth", true),
        ("certificate", true),
    ] {
        rep.declare(name, info);
    }
    let mut unconverged = 0u64;
    for (i, s) in solved.iter().enumerate() {
        let Some(s) = s else {
            rep.conclusion(Nesting::Vacuous);
            continue;
        };
        let check = |rep: &mut StatementReport, name: &str, lhs: f64, rhs: f64| {
            let v = compare(lhs, rhs);
            if name == "conclusion" {
                rep.conclusion(v);
            } else {
                rep.record(name, v);
            }
            if v == Nesting::Violated {
                rep.witness(Witness::new(name, i, vec![s.x, s.y], lhs, rhs).with_edges(s.edges.clone()));
            }
        };
        let root = s.d.powf(1.0 / p);
        check(&mut rep, "conclusion", s.value, ek.alpha_prime * root);
        check(&mut rep, "upper_bound", root + 1e-9, s.value);
        check(&mut rep, "feasibility", FEASIBILITY_TOLERANCE, s.mismatch);
        check(&mut rep, "holder", s.value * s.holder_factor, s.weighted);
        check(&mut rep, "cor_2_7", s.weighted, ek.beta * s.d);
        let growth = (k.growth_prefactor * ek.series_sum * s.d).powf(1.0 / q);
        check(&mut rep, "edge_growth", growth, s.holder_factor);
        let cert_ok = s.converged && s.kkt <= KKT_TOLERANCE;
        check(&mut rep, "certificate", if cert_ok { 1.0 } else { 0.0 }, 1.0);
        unconverged += u64::from(!s.converged);
        rep.measure_min("min_value_over_bound", s.value / (ek.alpha_prime * root));
        rep.measure_max("max_kkt_residual", s.kkt);
    }
    if let Some(b) = measured.beta_emp {
        rep.measured.insert("beta_emp".into(), b);
    }
    rep.measured.insert("beta_paper".into(), k.beta_paper);
    rep.measured.insert("unconverged".into(), unconverged as f64);
    Ok((rep, ek))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub radius: u32,
    pub min_norm: f64,
    pub max_norm: f64,
    pub p: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub p: f64,
    pub basepoint: Vertex,
    pub rows: Vec<ProfileRow>,
    pub unconverged: usize,
    pub max_kkt_residual: f64,
}

impl Profile {
    /// Whether the sphere minima never decrease with the radius.
    pub fn min_is_nondecreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].min_norm >= w[0].min_norm)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,min_norm,max_norm,p\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.radius, r.min_norm, r.max_norm, r.p));
        }
        s
    }
}

/// Quotient norm of `δ_o - δ_v` for every vertex, summarised per sphere
/// around `o`. At `p = 1` the exact distance-based value is used.
pub fn properness_profile(g: &Graph, p: f64, o: Vertex, opts: &FlowOptions) -> Result<Profile> {
    if g.cayley().is_none() {
        return Err(CertifyError::NotCayley);
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(CertifyError::InvalidArgument(format!("exponent must be at least 1, got {p}")));
    }
    g.check_vertex(o)?;
    let radius = g.distances_from(o);
    let values: Vec<(f64, f64, bool)> = (0..g.vertex_count())
        .into_par_iter()
        .map(|v| -> Result<(f64, f64, bool)> {
            if v == o {
                return Ok((0.0, 0.0, true));
            }
            if p == 1.0 {
                return Ok((quotient_norm_l1(g, o, v)?.0 as f64, 0.0, true));
            }
            let s = min_norm_flow(g, o, v, p, opts)?;
            Ok((s.value, s.kkt_residual, s.converged))
        })
        .collect::<Result<_>>()?;
    let r_max = radius.iter().copied().max().unwrap_or(0);
    let mut rows: Vec<ProfileRow> = (0..=r_max)
        .map(|r| ProfileRow { radius: r, min_norm: f64::INFINITY, max_norm: f64::NEG_INFINITY, p, count: 0 })
        .collect();
    let mut unconverged = 0;
    let mut max_kkt = 0.0f64;
    for (v, &(value, kkt, converged)) in values.iter().enumerate() {
        let row = &mut rows[radius[v] as usize];
        row.min_norm = row.min_norm.min(value);
        row.max_norm = row.max_norm.max(value);
        row.count += 1;
        unconverged += usize::from(!converged);
        max_kkt = max_kkt.max(kkt);
    }
    Ok(Profile { p, basepoint: o, rows, unconverged, max_kkt_residual: max_kkt })
}
