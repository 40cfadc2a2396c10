//! Certification harness: the explicit constants, proof replays for each
//! statement, the Euclidean counterexample and properness profiles.

mod constants;
mod lemmas;
mod norms;
mod pipeline;
mod report;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::chains::ChainError;
use crate::flow::{FlowError, FlowOptions};
use crate::graph::{Graph, GraphError};
use crate::hyperbolicity::{
    build_visual_metric, four_point_delta, growth_fit, suggest_epsilon, DeltaMode, HyperbolicityError,
    DEFAULT_EXACT_DELTA_CAP,
};

pub use constants::{
    alpha_eta, alpha_prime, beta_from_gaps, conjugate, default_gaps, nesting_slacks, p_zero, series_sum,
    ExponentConstants, NestingSlacks, ProofConstants,
};
pub use lemmas::{
    sample_lemma_2_5, verify_inequality_2, verify_lemma_2_4, verify_lemma_2_5, Lemma25Sample, NESTING_EXHAUSTIVE_CAP,
    VISUAL_REPLAY_CAP,
};
pub use norms::{
    properness_profile, sample_chains, sample_pairs, verify_cor_2_7, verify_prop_2_9, Profile, ProfileRow,
    KKT_TOLERANCE,
};
pub use pipeline::{sample_detour_paths, verify_prop_2_6_pipeline};
pub use report::{
    compare, CertReport, CheckSummary, Instance, StatementReport, VerdictCounts, Witness, SCHEMA_VERSION,
    WITNESS_LIMIT,
};
pub use weights::{
    chain_weight_sum, distance_to_geodesics, euclid_counterexample, euclid_counterexample_in, euclid_formula,
    euclid_grid_radius, measure_beta, path_weight_sum, BetaMeasurement, BetaSample, Counterexample,
    BOUNDARY_TOLERANCE,
};

fn show_p_zero(p0: &Option<f64>) -> String {
    p0.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exponent {p} lies outside the certified range (1, {})", show_p_zero(.p_zero))]
    OutOfRange { p: f64, p_zero: Option<f64> },
    #[error("series diverges: q = {q} does not exceed {threshold}")]
    DivergentSeries { q: f64, threshold: f64 },
    #[error("path does not run from {x} to {y}")]
    EndpointMismatch { x: usize, y: usize },
    #[error("chain boundary is off by {0}")]
    WrongBoundary(f64),
    #[error("grid radius {radius} cannot hold the rectangle; need {needed}")]
    GridTooSmall { needed: u32, radius: u32 },
    #[error("graph has no Cayley labels")]
    NotCayley,
    #[error("{n} vertices exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Hyperbolicity(#[from] HyperbolicityError),
}

pub type Result<T, E = CertifyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Statement {
    Lemma24,
    Lemma25,
    Prop26,
    Cor27,
    Prop29,
}

impl Statement {
    pub const ALL: [Statement; 5] =
        [Statement::Lemma24, Statement::Lemma25, Statement::Prop26, Statement::Cor27, Statement::Prop29];

    pub fn id(self) -> &'static str {
        match self {
            Statement::Lemma24 => "2.4",
            Statement::Lemma25 => "2.5",
            Statement::Prop26 => "2.6",
            Statement::Cor27 => "2.7",
            Statement::Prop29 => "2.9",
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Statement {
    type Err = CertifyError;

    fn from_str(s: &str) -> Result<Self> {
        Statement::ALL
            .into_iter()
            .find(|st| st.id() == s)
            .ok_or_else(|| CertifyError::InvalidArgument(format!("unknown statement {s:?}")))
    }
}

/// `ϵ` and `C` with `C` measured over every centre when that is affordable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedEpsilon {
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// True when `C` was measured at every vertex.
    pub all_centers: bool,
}

/// Picks `ϵ` on the default grid, then re-measures `C` at every centre on
/// graphs small enough for that; trees have `C = 1` everywhere.
pub fn certify_epsilon(g: &Graph, delta: f64, c_cap: f64) -> Result<CertifiedEpsilon> {
    let choice = suggest_epsilon(g, delta, c_cap)?;
    if g.is_tree() {
        return Ok(CertifiedEpsilon { epsilon: choice.epsilon, c: 1.0, all_centers: true });
    }
    if g.vertex_count() > VISUAL_REPLAY_CAP {
        return Ok(CertifiedEpsilon { epsilon: choice.epsilon, c: choice.worst_c, all_centers: false });
    }
    use rayon::prelude::*;
    let cs: Vec<f64> = (0..g.vertex_count())
        .into_par_iter()
        .map(|t| build_visual_metric(g, t, choice.epsilon).map(|vm| vm.sandwich_c()))
        .collect::<Result<_, _>>()?;
    let c = cs.into_iter().fold(choice.worst_c, f64::max);
    Ok(CertifiedEpsilon { epsilon: choice.epsilon, c, all_centers: true })
}

/// Inputs for [`run_certification`].
#[derive(Debug, Clone)]
pub struct CertConfig {
    pub statements: Vec<Statement>,
    /// Exponent for the `ℓ^p` statement.
    pub p: Option<f64>,
    pub seed: u64,
    /// Paths, walks and chains per sampled statement.
    pub samples: usize,
    /// Pairs for the growth fit and the flow solves.
    pub pairs: usize,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub c_cap: f64,
    pub growth_k_max: u32,
    pub description: String,
    pub flow: FlowOptions,
}

impl Default for CertConfig {
    fn default() -> Self {
        CertConfig {
            statements: Statement::ALL.to_vec(),
            p: None,
            seed: 0,
            samples: 200,
            pairs: 60,
            threads: 0,
            c_cap: 4.0,
            growth_k_max: 3,
            description: String::new(),
            flow: FlowOptions::default(),
        }
    }
}

/// Measures `δ`, certifies `(ϵ, C)`, fits the growth constants and runs the
/// selected statements. Parallel sections collect in sample order, so the
/// report does not depend on the thread count.
pub fn run_certification(g: &Graph, cfg: &CertConfig) -> Result<CertReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CertifyError::ThreadPool(e.to_string()))?;
    pool.install(|| run_inner(g, cfg))
}

/// Seed offsets keep the sampled families independent of each other.
const STREAM_GROWTH: u64 = 1;
const STREAM_WALKS: u64 = 2;
const STREAM_PATHS: u64 = 3;
const STREAM_CHAINS: u64 = 4;
const STREAM_PAIRS: u64 = 5;
const STREAM_QUADS: u64 = 6;

fn stream(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k)
}

fn run_inner(g: &Graph, cfg: &CertConfig) -> Result<CertReport> {
    if cfg.statements.contains(&Statement::Prop29) && cfg.p.is_none() {
        return Err(CertifyError::InvalidArgument("statement 2.9 needs an exponent".into()));
    }
    let n = g.vertex_count();
    let mode = if n <= DEFAULT_EXACT_DELTA_CAP {
        DeltaMode::Exact
    } else {
        DeltaMode::Sampled { count: 200_000, seed: cfg.seed }
    };
    let delta_est = four_point_delta(g, mode)?;
    let delta = delta_est.delta;
    let eps = certify_epsilon(g, delta, cfg.c_cap)?;
    let growth_pairs = sample_pairs(g, cfg.pairs.max(1), stream(cfg.seed, STREAM_GROWTH))?;
    let growth = growth_fit(g, &growth_pairs, cfg.growth_k_max)?;
    let mut constants = ProofConstants::new(delta, eps.epsilon, eps.c, growth.beta_prime, growth.growth_prefactor)?;

    let mut statements = Vec::new();
    let mut exponent = None;
    let mut beta_emp: Option<f64> = None;
    let mut note_beta = |rep: &StatementReport| {
        if let Some(&b) = rep.measured.get("min_beta_emp").or(rep.measured.get("beta_emp")) {
            beta_emp = Some(beta_emp.map_or(b, |a| a.min(b)));
        }
    };
    let mut sorted = cfg.statements.clone();
    sorted.sort();
    sorted.dedup();
    for st in sorted {
        let mut rep = match st {
            Statement::Lemma24 => {
                let mode = if n <= NESTING_EXHAUSTIVE_CAP {
                    DeltaMode::Exact
                } else {
                    DeltaMode::Sampled { count: cfg.samples * 1000, seed: stream(cfg.seed, STREAM_QUADS) }
                };
                verify_lemma_2_4(g, delta, mode)?
            }
            Statement::Lemma25 => {
                let eta_max = constants.slacks(constants.delta2).third;
                let samples = sample_lemma_2_5(g, cfg.samples, 12, eta_max, stream(cfg.seed, STREAM_WALKS))?;
                let mut rep = verify_lemma_2_5(g, eps.epsilon, eps.c, &samples)?;
                rep.absorb(verify_inequality_2(g));
                rep
            }
            Statement::Prop26 => {
                let paths = sample_detour_paths(g, cfg.samples, 8, stream(cfg.seed, STREAM_PATHS))?;
                verify_prop_2_6_pipeline(g, &constants, &paths)?
            }
            Statement::Cor27 => {
                let chains = sample_chains(g, cfg.samples, stream(cfg.seed, STREAM_CHAINS))?;
                verify_cor_2_7(g, &constants, &chains)?
            }
            Statement::Prop29 => {
                let p = cfg.p.expect("checked above");
                let pairs = sample_pairs(g, cfg.pairs, stream(cfg.seed, STREAM_PAIRS))?;
                let (rep, ek) = verify_prop_2_9(g, p, &constants, &pairs, &cfg.flow)?;
                exponent = Some(ek);
                rep
            }
        };
        rep.statement = st.id().to_string();
        note_beta(&rep);
        statements.push(rep);
    }
    constants.beta_emp = beta_emp;
    if !eps.all_centers {
        if let Some(r) = statements.first_mut() {
            r.notes.push("C measured at sampled centres only".into());
        }
    }
    Ok(CertReport {
        schema_version: SCHEMA_VERSION,
        timestamp: report::timestamp(),
        seed: cfg.seed,
        instance: Instance {
            description: cfg.description.clone(),
            vertices: n,
            edges: g.edge_count(),
            is_tree: g.is_tree(),
            delta,
            delta_exact: delta_est.exact,
        },
        constants: Some(constants),
        exponent,
        statements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GroupSpec;

    #[test]
    fn statements_parse() {
        for st in Statement::ALL {
            assert_eq!(st.id().parse::<Statement>().unwrap(), st);
        }
        assert!("2.8".parse::<Statement>().is_err());
    }

    #[test]
    fn full_run_on_a_small_ball() {
        let g = GroupSpec::z2z3(5).build().unwrap();
        let cfg = CertConfig { p: Some(1.05), samples: 40, pairs: 20, description: "z2z3 r5".into(), ..Default::default() };
        let rep = run_certification(&g, &cfg).unwrap();
        assert_eq!(rep.statements.len(), 5);
        assert_eq!(rep.violations(), 0, "{}", rep.body_json());
        let again = run_certification(&g, &CertConfig { threads: 1, ..cfg }).unwrap();
        assert_eq!(rep.body_json(), again.body_json());
    }

    #[test]
    fn missing_exponent_is_refused() {
        let g = GroupSpec::free(2, 2).build().unwrap();
        let cfg = CertConfig { statements: vec![Statement::Prop29], ..Default::default() };
        assert!(matches!(run_certification(&g, &cfg), Err(CertifyError::InvalidArgument(_))));
    }
}
