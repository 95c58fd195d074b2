//! Run reports: per-query records, outcome counts, and a canonical hash
//! that ignores wall-clock fields so equal runs hash equal.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Report schema version, bumped on breaking layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// How a single query ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The query produced a definite answer.
    Ok,
    /// The probe budget ran out before a definite answer.
    Unknown,
    /// An asserted invariant did not hold.
    Failed,
    /// The query could not run (bad level, shape mismatch, budget error).
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryRecord {
    pub index: usize,
    pub kind: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub wall_ms: u64,
    pub data: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub schema: u32,
    pub config_sha256: String,
    pub seed: u64,
    pub queries: Vec<QueryRecord>,
    pub failures: usize,
    pub unknowns: usize,
    pub report_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn assemble(config_sha256: String, seed: u64, queries: Vec<QueryRecord>) -> Report {
        let failures = queries
            .iter()
            .filter(|q| matches!(q.outcome, Outcome::Failed | Outcome::Error))
            .count();
        let unknowns = queries.iter().filter(|q| q.outcome == Outcome::Unknown).count();
        let mut report = Report {
            tool: format!("osys {}", env!("CARGO_PKG_VERSION")),
            schema: SCHEMA_VERSION,
            config_sha256,
            seed,
            queries,
            failures,
            unknowns,
            report_hash: String::new(),
        };
        report.report_hash = report.canonical_hash();
        report
    }

    /// Hash over the canonical serialization with wall times zeroed and the
    /// hash field emptied, so reruns of one config and seed agree.
    pub fn canonical_hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.report_hash = String::new();
        for q in &mut stripped.queries {
            q.wall_ms = 0;
        }
        let bytes = serde_json::to_vec(&stripped).expect("report serializes");
        sha256_hex(&bytes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{}  schema {}  seed {}\nconfig sha256 {}\n",
            self.tool, self.schema, self.seed, self.config_sha256
        ));
        for q in &self.queries {
            let verdict = match q.outcome {
                Outcome::Ok => "ok",
                Outcome::Unknown => "unknown",
                Outcome::Failed => "FAILED",
                Outcome::Error => "ERROR",
            };
            out.push_str(&format!("[{}] {}: {} ({} ms)\n", q.index, q.kind, verdict, q.wall_ms));
            let line = serde_json::to_string(&q.data).expect("data serializes");
            out.push_str(&format!("    {line}\n"));
        }
        out.push_str(&format!(
            "queries {}, failures {}, unknowns {}\nreport hash {}\n",
            self.queries.len(),
            self.failures,
            self.unknowns,
            self.report_hash
        ));
        out
    }

    /// Exit status: failures always count, unknowns only under the strict flag.
    pub fn exit_code(&self, strict_unknown: bool) -> i32 {
        if self.failures > 0 || (strict_unknown && self.unknowns > 0) {
            1
        } else {
            0
        }
    }
}
