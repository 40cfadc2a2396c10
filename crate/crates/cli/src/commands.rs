use std::fs;
use std::path::Path;

use hypquot::certify::{self, CertConfig, CertifyError, Statement};
use hypquot::chains::{decompose, parse_chain, ChainError};
use hypquot::flow::{min_norm_flow, quotient_norm_l1, FlowError, FlowOptions};
use hypquot::graph::{parse_graph, write_graph, GraphError, GroupKind, GroupSpec, Graph, Vertex};
use hypquot::hyperbolicity::{
    build_visual_metric, four_point_delta, suggest_epsilon, DeltaMode, HyperbolicityError,
};
use serde_json::{json, Value};

use crate::{Cli, Command, Input};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }

    fn resource(message: impl Into<String>) -> Self {
        Failure { code: EXIT_RESOURCE, kind: "resource", message: message.into() }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::TooLarge { .. } => Failure::resource(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<ChainError> for Failure {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::NoProgress | ChainError::Stuck(_) => Failure::resource(e.to_string()),
            ChainError::Graph(g) => g.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Infeasible(_) => Failure::resource(e.to_string()),
            FlowError::Graph(g) => g.into(),
            FlowError::Chain(c) => c.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<HyperbolicityError> for Failure {
    fn from(e: HyperbolicityError) -> Self {
        match e {
            HyperbolicityError::InvalidArgument(_) => Failure::usage(e.to_string()),
            HyperbolicityError::Graph(g) => g.into(),
            _ => Failure::resource(e.to_string()),
        }
    }
}

impl From<CertifyError> for Failure {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::TooLarge { .. } | CertifyError::ThreadPool(_) => Failure::resource(e.to_string()),
            CertifyError::Graph(g) => g.into(),
            CertifyError::Chain(c) => c.into(),
            CertifyError::Flow(f) => f.into(),
            CertifyError::Hyperbolicity(h) => h.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

type Outcome = Result<(Value, u8), Failure>;

/// Runs a parsed command line; the JSON report (or error) goes to `--out`
/// or stdout.
pub fn run(cli: Cli) -> u8 {
    let result = dispatch(&cli);
    let (body, code) = match result {
        Ok(v) => v,
        Err(f) => (json!({ "error": { "kind": f.kind, "message": f.message } }), f.code),
    };
    let text = serde_json::to_string_pretty(&body).expect("json values serialise") + "\n";
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_RESOURCE;
            }
        }
        None => print!("{text}"),
    }
    if code != EXIT_OK {
        if let Some(msg) = body.get("error").and_then(|e| e.get("message")) {
            eprintln!("error: {}", msg.as_str().unwrap_or_default());
        }
    }
    code
}

fn load(input: &Input) -> Result<(Graph, String), Failure> {
    match (&input.group, input.radius, &input.graph) {
        (Some(group), Some(radius), None) => {
            let kind: GroupKind = group.parse()?;
            let spec = GroupSpec::new(kind, radius)?;
            Ok((spec.build()?, format!("{kind} ball of radius {radius}")))
        }
        (None, _, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            Ok((parse_graph(&text)?, path.display().to_string()))
        }
        _ => Err(Failure::usage("give exactly one of --group/--radius or --graph")),
    }
}

/// A word on Cayley balls, a vertex index on plain graphs.
fn vertex(g: &Graph, token: &str) -> Result<Vertex, Failure> {
    match g.cayley() {
        Some(data) => data
            .vertex_of(token)?
            .ok_or_else(|| Failure::usage(format!("word {token:?} lies outside the ball"))),
        None => {
            let v: Vertex = if token == "e" {
                0
            } else {
                token.parse().map_err(|_| Failure::usage(format!("expected a vertex index, got {token:?}")))?
            };
            g.check_vertex(v)?;
            Ok(v)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::resource(format!("{}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialise")
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::resource(e.to_string()))
}

fn dispatch(cli: &Cli) -> Outcome {
    let pool = pool(cli.threads)?;
    match &cli.command {
        Command::Graph { input, write } => {
            let (g, desc) = load(input)?;
            if let Some(path) = write {
                write_file(path, &write_graph(&g))?;
            }
            let bridges = g.bridge_structure();
            Ok((
                json!({
                    "schema_version": certify::SCHEMA_VERSION,
                    "instance": desc,
                    "vertices": g.vertex_count(),
                    "edges": g.edge_count(),
                    "is_tree": g.is_tree(),
                    "cycle_rank": g.cycle_rank(),
                    "degree_bound": g.degree_bound(),
                    "bridges": bridges.bridge_count(),
                    "two_edge_connected_blocks": bridges.components.len(),
                }),
                EXIT_OK,
            ))
        }
        Command::Delta { input, samples, seed } => {
            let (g, desc) = load(input)?;
            let mode = match samples {
                Some(count) => DeltaMode::Sampled { count: *count, seed: *seed },
                None => DeltaMode::Exact,
            };
            let est = pool.install(|| four_point_delta(&g, mode))?;
            Ok((json!({ "schema_version": certify::SCHEMA_VERSION, "instance": desc, "seed": seed, "delta": to_value(&est) }), EXIT_OK))
        }
        Command::Visual { input, epsilon, center, c_cap } => {
            let (g, desc) = load(input)?;
            let mut body = json!({ "schema_version": certify::SCHEMA_VERSION, "instance": desc });
            match epsilon {
                Some(eps) => {
                    let t = vertex(&g, center)?;
                    let vm = build_visual_metric(&g, t, *eps)?;
                    body["visual_metric"] = json!({
                        "center": t,
                        "epsilon": eps,
                        "C": vm.sandwich_c(),
                        "worst_pair": vm.worst_pair(),
                    });
                }
                None => {
                    let est = pool.install(|| four_point_delta(&g, DeltaMode::Exact))?;
                    let choice = pool.install(|| suggest_epsilon(&g, est.delta, *c_cap))?;
                    body["delta"] = json!(est.delta);
                    body["suggestion"] = to_value(&choice);
                }
            }
            Ok((body, EXIT_OK))
        }
        Command::Norm { input, from, to, p, tol } => {
            let (g, desc) = load(input)?;
            let (x, y) = (vertex(&g, from)?, vertex(&g, to)?);
            if *p == 1.0 {
                let (d, chain) = quotient_norm_l1(&g, x, y)?;
                return Ok((
                    json!({
                        "schema_version": certify::SCHEMA_VERSION,
                        "instance": desc,
                        "solution": {
                            "source": x, "target": y, "p": 1.0, "value": d as f64,
                            "kkt_residual": 0.0, "iterations": 0, "converged": true,
                            "chain": to_value(&chain.to_triples(&g)),
                        },
                    }),
                    EXIT_OK,
                ));
            }
            let opts = FlowOptions { tol: *tol, ..FlowOptions::default() };
            let s = min_norm_flow(&g, x, y, *p, &opts)?;
            let code = if s.converged { EXIT_OK } else { EXIT_RESOURCE };
            Ok((json!({ "schema_version": certify::SCHEMA_VERSION, "instance": desc, "solution": to_value(&s.report(&g)) }), code))
        }
        Command::Decompose { input, chain } => {
            let (g, desc) = load(input)?;
            let text = fs::read_to_string(chain).map_err(|e| Failure::usage(format!("{}: {e}", chain.display())))?;
            let c = parse_chain(&g, &text)?;
            let dec = decompose(&g, &c)?;
            let paths: Vec<Value> = dec
                .path_terms
                .iter()
                .map(|t| json!({ "alpha": t.alpha, "vertices": t.vertices }))
                .collect();
            let cycles: Vec<Value> = dec
                .cycle_terms
                .iter()
                .map(|t| json!({ "beta": t.beta, "vertices": t.vertices }))
                .collect();
            Ok((
                json!({
                    "schema_version": certify::SCHEMA_VERSION,
                    "instance": desc,
                    "endpoints": dec.endpoints,
                    "alpha_sum": dec.alpha_sum(),
                    "alpha_signs": dec.alpha_signs(),
                    "l1_mass": dec.l1_mass(),
                    "iterations": dec.iterations,
                    "paths": paths,
                    "cycles": cycles,
                }),
                EXIT_OK,
            ))
        }
        Command::Certify { statement, input, p, seed, samples, pairs, c_cap } => {
            let statements = if statement == "all" {
                let mut all = Statement::ALL.to_vec();
                if p.is_none() {
                    all.retain(|s| *s != Statement::Prop29);
                }
                all
            } else {
                vec![statement.parse::<Statement>()?]
            };
            let (g, desc) = load(input)?;
            let cfg = CertConfig {
                statements,
                p: *p,
                seed: *seed,
                samples: *samples,
                pairs: *pairs,
                threads: cli.threads,
                c_cap: *c_cap,
                description: desc,
                ..CertConfig::default()
            };
            let report = certify::run_certification(&g, &cfg)?;
            let code = if report.violations() > 0 { EXIT_VIOLATION } else { EXIT_OK };
            Ok((to_value(&report), code))
        }
        Command::Profile { input, p, from, csv } => {
            let (g, desc) = load(input)?;
            let o = vertex(&g, from)?;
            let prof = pool.install(|| certify::properness_profile(&g, *p, o, &FlowOptions::default()))?;
            if let Some(path) = csv {
                write_file(path, &prof.to_csv())?;
            }
            let code = if prof.unconverged == 0 { EXIT_OK } else { EXIT_RESOURCE };
            Ok((
                json!({
                    "schema_version": certify::SCHEMA_VERSION,
                    "instance": desc,
                    "profile": to_value(&prof),
                    "min_nondecreasing": prof.min_is_nondecreasing(),
                }),
                code,
            ))
        }
        Command::Counterexample { m, d, epsilon, csv } => {
            let ce = certify::euclid_counterexample(*m, *d, *epsilon)?;
            if let Some(path) = csv {
                let text = format!(
                    "m,d_len,epsilon,formula_value,constructed_value,upper_bound,beta_emp\n{},{},{},{},{},{},{}\n",
                    ce.m, ce.d_len, ce.epsilon, ce.formula_value, ce.constructed_value, ce.upper_bound, ce.beta_emp
                );
                write_file(path, &text)?;
            }
            Ok((json!({ "schema_version": certify::SCHEMA_VERSION, "counterexample": to_value(&ce) }), EXIT_OK))
        }
    }
}
