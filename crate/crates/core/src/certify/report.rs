use std::collections::BTreeMap;

use serde::Serialize;

use super::constants::{ExponentConstants, ProofConstants};
use crate::graph::Vertex;
use crate::hyperbolicity::Nesting;

/// Bumped whenever a field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;
/// Witnesses kept per check; the smallest sample indices win.
pub const WITNESS_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub holds: u64,
    pub violated: u64,
    pub vacuous: u64,
}

impl VerdictCounts {
    pub fn record(&mut self, n: Nesting) {
        match n {
            Nesting::Holds => self.holds += 1,
            Nesting::Violated => self.violated += 1,
            Nesting::Vacuous => self.vacuous += 1,
        }
    }

    pub fn merge(&mut self, other: &VerdictCounts) {
        self.holds += other.holds;
        self.violated += other.violated;
        self.vacuous += other.vacuous;
    }

    pub fn total(&self) -> u64 {
        self.holds + self.violated + self.vacuous
    }
}

/// Verdict of an inequality `lhs >= rhs`, with a relative slack for rounding.
pub fn compare(lhs: f64, rhs: f64) -> Nesting {
    if lhs >= rhs - 1e-12 * rhs.abs().max(1.0) {
        Nesting::Holds
    } else {
        Nesting::Violated
    }
}

/// One intermediate step of a proof replay.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckSummary {
    pub counts: VerdictCounts,
    /// Informational steps never turn a report red.
    pub informational: bool,
}

/// A concrete instance that failed a check, replayable from its vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub check: String,
    pub sample: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(Vertex, Vertex)>,
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

impl Witness {
    pub fn new(check: &str, sample: usize, vertices: Vec<Vertex>, lhs: f64, rhs: f64) -> Self {
        Witness { check: check.to_string(), sample, vertices, edges: Vec::new(), lhs, rhs, note: String::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_edges(mut self, edges: Vec<(Vertex, Vertex)>) -> Self {
        self.edges = edges;
        self
    }
}

/// Verdicts for one statement: the conclusion itself plus every replayed step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementReport {
    pub statement: String,
    pub counts: VerdictCounts,
    pub checks: BTreeMap<String, CheckSummary>,
    pub measured: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl StatementReport {
    pub fn new(statement: &str) -> Self {
        StatementReport {
            statement: statement.to_string(),
            counts: VerdictCounts::default(),
            checks: BTreeMap::new(),
            measured: BTreeMap::new(),
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Registers a check name so that it appears even with no samples.
    pub fn declare(&mut self, check: &str, informational: bool) {
        self.checks
            .entry(check.to_string())
            .or_insert_with(|| CheckSummary { counts: VerdictCounts::default(), informational });
    }

    pub fn record(&mut self, check: &str, verdict: Nesting) {
        self.checks.entry(check.to_string()).or_default().counts.record(verdict);
    }

    pub fn conclusion(&mut self, verdict: Nesting) {
        self.counts.record(verdict);
    }

    pub fn witness(&mut self, w: Witness) {
        if self.witnesses.iter().filter(|x| x.check == w.check).count() < WITNESS_LIMIT {
            self.witnesses.push(w);
        }
    }

    pub fn measure_min(&mut self, key: &str, v: f64) {
        let e = self.measured.entry(key.to_string()).or_insert(v);
        *e = e.min(v);
    }

    pub fn measure_max(&mut self, key: &str, v: f64) {
        let e = self.measured.entry(key.to_string()).or_insert(v);
        *e = e.max(v);
    }

    /// Number of violated conclusions plus violated non-informational steps.
    pub fn violations(&self) -> u64 {
        self.counts.violated
            + self.checks.values().filter(|c| !c.informational).map(|c| c.counts.violated).sum::<u64>()
    }

    /// Appends another fragment's counts and witnesses; fragments must be
    /// absorbed in sample order so that witness selection stays deterministic.
    pub fn absorb(&mut self, other: StatementReport) {
        self.counts.merge(&other.counts);
        for (k, v) in other.checks {
            let e = self.checks.entry(k).or_insert_with(|| CheckSummary { informational: v.informational, ..Default::default() });
            e.counts.merge(&v.counts);
        }
        for (k, v) in other.measured {
            let e = self.measured.entry(k.clone()).or_insert(v);
            *e = if k.starts_with("max_") { e.max(v) } else { e.min(v) };
        }
        for w in other.witnesses {
            self.witness(w);
        }
        self.notes.extend(other.notes);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub description: String,
    pub vertices: usize,
    pub edges: usize,
    pub is_tree: bool,
    pub delta: f64,
    pub delta_exact: bool,
}

/// Full harness output. Everything except `timestamp` is a deterministic
/// function of the instance, the seed and the sample counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub schema_version: u32,
    pub timestamp: String,
    pub seed: u64,
    pub instance: Instance,
    pub constants: Option<ProofConstants>,
    pub exponent: Option<ExponentConstants>,
    pub statements: Vec<StatementReport>,
}

impl CertReport {
    pub fn violations(&self) -> u64 {
        self.statements.iter().map(StatementReport::violations).sum()
    }

    /// JSON body with the timestamp removed, for byte comparison.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timestamp");
        }
        serde_json::to_string_pretty(&v).expect("report serialises")
    }
}

pub(crate) fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}
