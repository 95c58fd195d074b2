//! Command-line driver: load a config, run its query list, emit a report
//! with a stable hash and meaningful exit code.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_config, resolve, ConfigError, ConfigFile, Format, QuerySpec, Resolved};
pub use report::{Outcome, QueryRecord, Report, SCHEMA_VERSION};
pub use runner::{derive_seed, run_queries, RunOptions};

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Text,
}

#[derive(Parser)]
#[command(name = "osys", version, about = "Batch verifier for finite-scale operator system models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every query in a config and print the report.
    Run {
        config: PathBuf,
        /// Master seed; per-query seeds derive from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for independent queries.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
        /// Count unknown verdicts as failures in the exit code.
        #[arg(long)]
        strict_unknown: bool,
    },
    /// Parse and cross-check a config without running queries.
    Validate { config: PathBuf },
    /// Describe one query kind and its fields, or list all kinds.
    Explain { kind: Option<String> },
}

fn detect_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Toml,
    }
}

/// Reads, parses, and resolves a config; returns it with its content hash.
pub fn load_config(path: &Path) -> Result<(Resolved, String), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Syntax(format!("cannot read {}: {e}", path.display())))?;
    let sha = report::sha256_hex(text.as_bytes());
    let file = parse_config(&text, detect_format(path))?;
    let res = resolve(&file)?;
    Ok((res, sha))
}

const KINDS: [&str; 16] = [
    "check-tower",
    "limit-norm",
    "limit-positive",
    "null-space",
    "eq-in-limit",
    "pullback-state",
    "glimm",
    "iso-search",
    "envelope",
    "relation-roundtrip",
    "epsilon",
    "omin",
    "omax-verify",
    "min-commute",
    "max-commute",
    "cp-check",
];

fn explain_text(kind: &str) -> Option<&'static str> {
    let text = match kind {
        "check-tower" => {
            "check-tower { tower }\n\
             Reports the tower's explicit length, cap, and computed embedding flag.\n\
             Fails when the config declared `embedding = true|false` and the computed\n\
             flag disagrees."
        }
        "limit-norm" => {
            "limit-norm { tower, element, level, horizon? }\n\
             Norm of the element's image in the limit: constant along embedding\n\
             towers, otherwise bracketed by the non-increasing level norms up to the\n\
             horizon (default: the tower cap). A bracket that does not close within\n\
             tolerance reports unknown."
        }
        "limit-positive" => {
            "limit-positive { tower, element, level, horizon? }\n\
             Whether the element's image lies in the limit cone: decided at the base\n\
             level on embedding towers, otherwise by unit-shift absorption along\n\
             probes up to the horizon. Witness state included when negativity\n\
             persists."
        }
        "null-space" => {
            "null-space { tower, element, level, horizon? }\n\
             Whether the level norms decay to zero, i.e. the element represents zero\n\
             in the limit. Yes needs a certified decay pattern; No needs a\n\
             stabilizing lower bound."
        }
        "eq-in-limit" => {
            "eq-in-limit { tower, left, left_level, right, right_level, horizon? }\n\
             Whether two level-tagged representatives agree in the limit, by pushing\n\
             both to common levels and testing the difference for null-space\n\
             membership."
        }
        "pullback-state" => {
            "pullback-state { tower, level, density, to_level }\n\
             Pulls a state (PSD, trace one, given as a density matrix over the\n\
             level's ambient algebra, optionally with a block factor) back along the\n\
             connecting maps to `to_level`."
        }
        "glimm" => {
            "glimm { a, b }\n\
             Compares two multiplicity streams by their prime exponent profiles.\n\
             Not-equivalent verdicts name a separating prime and which side carries\n\
             the larger exponent."
        }
        "iso-search" => {
            "iso-search { a, b, depth? }\n\
             Searches for a two-sided intertwining family of index maps between two\n\
             graph towers (found witnesses are replayed before acceptance), refutes\n\
             via separating primes or an abelian-versus-edged stream split, and\n\
             reports unknown when the budgeted search at the given depth (default 3)\n\
             is exhausted."
        }
        "envelope" => {
            "envelope { graph }\n\
             Block sizes of the algebra generated by the graph system: one block per\n\
             connected component, sizes sorted descending."
        }
        "relation-roundtrip" => {
            "relation-roundtrip { graph }\n\
             Converts the graph to its level relation and back; fails unless the\n\
             roundtrip reproduces the graph exactly."
        }
        "epsilon" => {
            "epsilon { graph }\n\
             Transitive closure of the graph's extended relation, reported as\n\
             equivalence classes (1-based vertex lists)."
        }
        "omin" => {
            "omin { system, element, multistarts?, rounds? }\n\
             Membership of the element in the minimal cone over the system: exact\n\
             slice test on abelian systems, otherwise a budgeted search for a\n\
             violating state (outside verdicts carry the witness functional)."
        }
        "omax-verify" => {
            "omax-verify { system, claimed, terms, alpha? }\n\
             Checks a sums-of-compressions certificate for maximal-cone membership:\n\
             every coefficient must be PSD, every element positive, and the\n\
             assembled sum must reproduce the claimed element."
        }
        "min-commute" => {
            "min-commute { tower, right, samples?, levels? }\n\
             Samples elements of the tensor system at the base level and checks that\n\
             minimal-cone membership agrees after pushing through the extended\n\
             connecting maps at every probed level. Embedding towers only."
        }
        "max-commute" => {
            "max-commute { tower, right, samples?, levels? }\n\
             Transports random valid maximal-cone certificates up the tower and\n\
             re-verifies at every level; also certifies elementary positive tensors\n\
             and checks that a corrupted certificate is rejected."
        }
        "cp-check" => {
            "cp-check { map, level? }\n\
             Verifies complete positivity of a named map up to the given matrix\n\
             level (default 2): exactly for star homomorphisms, by Choi matrix\n\
             positivity for linear maps on full algebras, and by sampled matrix\n\
             amplifications otherwise."
        }
        _ => return None,
    };
    Some(text)
}

/// CLI entry point; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, seed, parallel, format, strict_unknown } => {
            let (res, sha) = match load_config(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("osys: {e}");
                    return 2;
                }
            };
            let report = run_queries(&res, &sha, &RunOptions { seed, parallel });
            match format {
                OutFormat::Json => println!("{}", report.to_json()),
                OutFormat::Text => print!("{}", report.to_text()),
            }
            report.exit_code(strict_unknown)
        }
        Cmd::Validate { config } => match load_config(&config) {
            Ok((res, _)) => {
                println!(
                    "config ok: {} systems, {} graphs, {} towers, {} graph towers, {} elements, {} queries",
                    res.systems.len(),
                    res.graphs.len(),
                    res.towers.len(),
                    res.graph_towers.len(),
                    res.elements.len(),
                    res.queries.len()
                );
                0
            }
            Err(e) => {
                eprintln!("osys: {e}");
                2
            }
        },
        Cmd::Explain { kind: None } => {
            println!("query kinds:\n  {}", KINDS.join("\n  "));
            0
        }
        Cmd::Explain { kind: Some(kind) } => match explain_text(&kind) {
            Some(text) => {
                println!("{text}");
                0
            }
            None => {
                eprintln!("osys: unknown query kind {kind:?}; known kinds:\n  {}", KINDS.join("\n  "));
                2
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_toml(text: &str, seed: u64) -> Report {
        let file = parse_config(text, Format::Toml).expect("parses");
        let res = resolve(&file).expect("resolves");
        let sha = report::sha256_hex(text.as_bytes());
        run_queries(&res, &sha, &RunOptions { seed, parallel: 1 })
    }

    const GLIMM_CONFIG: &str = r#"
version = 1

[uhf.two]
n1 = 2
period = [2]

[uhf.three]
n1 = 3
period = [3]

[[queries]]
kind = "glimm"
a = "two"
b = "three"
"#;

    #[test]
    fn minimal_glimm_config_runs() {
        let rep = run_toml(GLIMM_CONFIG, 0);
        assert_eq!(rep.queries.len(), 1);
        let rec = &rep.queries[0];
        assert_eq!(rec.outcome, Outcome::Ok);
        assert_eq!(rec.data["verdict"], "not-equivalent");
        assert_eq!(rec.data["prime"], 3);
        assert_eq!(rec.data["larger"], "right");
        assert_eq!(rep.exit_code(false), 0);
    }

    #[test]
    fn json_mirror_parses_the_same_config() {
        let json = r#"{
            "version": 1,
            "uhf": {
                "two": { "n1": 2, "period": [2] },
                "three": { "n1": 3, "period": [3] }
            },
            "queries": [ { "kind": "glimm", "a": "two", "b": "three" } ]
        }"#;
        let file = parse_config(json, Format::Json).expect("parses");
        let res = resolve(&file).expect("resolves");
        let rep = run_queries(&res, "x", &RunOptions { seed: 0, parallel: 1 });
        assert_eq!(rep.queries[0].data["prime"], 3);
    }

    #[test]
    fn undeclared_tower_reference_is_rejected() {
        let text = r#"
version = 1

[[queries]]
kind = "check-tower"
tower = "nope"
"#;
        let file = parse_config(text, Format::Toml).expect("parses");
        let e = resolve(&file).expect_err("dangling name");
        let msg = e.to_string();
        assert!(msg.contains("queries[0].tower"), "got: {msg}");
        assert!(msg.contains("nope"), "got: {msg}");
    }

    #[test]
    fn asymmetric_edge_list_is_rejected() {
        let text = r#"
version = 1

[graphs.g]
n = 3
edges = [[1, 2]]
"#;
        let file = parse_config(text, Format::Toml).expect("parses");
        let e = resolve(&file).expect_err("asymmetric");
        let msg = e.to_string();
        assert!(msg.contains("graphs.g.edges"), "got: {msg}");
        assert!(msg.contains("symmetric"), "got: {msg}");
    }

    #[test]
    fn loop_edges_are_rejected() {
        let text = r#"
version = 1

[graphs.g]
n = 2
edges = [[1, 1]]
"#;
        let file = parse_config(text, Format::Toml).expect("parses");
        let e = resolve(&file).expect_err("loop");
        assert!(e.to_string().contains("antireflexive"), "got: {e}");
    }

    #[test]
    fn unknown_query_kind_is_a_parse_error() {
        let text = r#"
version = 1

[[queries]]
kind = "frobnicate"
"#;
        let e = parse_config(text, Format::Toml).expect_err("unknown kind");
        assert!(e.to_string().contains("frobnicate"), "got: {e}");
    }

    const DYADIC_CONFIG: &str = r#"
version = 1

[systems.m2]
kind = "full"
dim = 2

[towers.dyadic]
levels = ["m2"]
cap = 6
tail = { kind = "canonical-embed", mult = 2 }
embedding = true

[elements.e12]
system = "m2"
matrix = [[0, 1], [0, 0]]

[[queries]]
kind = "check-tower"
tower = "dyadic"

[[queries]]
kind = "limit-norm"
tower = "dyadic"
element = "e12"
level = 1
"#;

    #[test]
    fn limit_norm_of_a_matrix_unit_is_one() {
        let rep = run_toml(DYADIC_CONFIG, 0);
        assert_eq!(rep.queries[0].outcome, Outcome::Ok);
        let norm = &rep.queries[1];
        assert_eq!(norm.outcome, Outcome::Ok);
        assert_eq!(norm.data["verdict"]["kind"], "value");
        let v = norm.data["verdict"]["value"].as_f64().expect("number");
        assert!((v - 1.0).abs() < 1e-9, "norm {v}");
    }

    #[test]
    fn envelope_of_a_single_edge_on_three_vertices() {
        let text = r#"
version = 1

[graphs.p]
n = 3
edges = [[1, 2], [2, 1]]

[[queries]]
kind = "envelope"
graph = "p"
"#;
        let rep = run_toml(text, 0);
        let blocks: Vec<u64> = rep.queries[0].data["blocks"]
            .as_array()
            .expect("array")
            .iter()
            .map(|v| v.as_u64().expect("number"))
            .collect();
        assert_eq!(blocks, vec![2, 1]);
    }

    #[test]
    fn declared_embedding_mismatch_fails_the_query() {
        let text = DYADIC_CONFIG.replace("embedding = true", "embedding = false");
        let rep = run_toml(&text, 0);
        assert_eq!(rep.queries[0].outcome, Outcome::Failed);
        assert_eq!(rep.failures, 1);
        assert_eq!(rep.exit_code(false), 1);
    }

    #[test]
    fn empty_query_list_reports_clean() {
        let rep = run_toml("version = 1\n", 0);
        assert!(rep.queries.is_empty());
        assert_eq!(rep.failures, 0);
        assert_eq!(rep.exit_code(false), 0);
        assert_eq!(rep.exit_code(true), 0);
    }

    #[test]
    fn same_seed_gives_identical_report_hashes() {
        let a = run_toml(DYADIC_CONFIG, 7);
        let b = run_toml(DYADIC_CONFIG, 7);
        assert_eq!(a.report_hash, b.report_hash);
        let c = run_toml(DYADIC_CONFIG, 8);
        assert_ne!(a.report_hash, c.report_hash, "seed is part of the report");
    }

    #[test]
    fn parallel_run_matches_sequential() {
        let file = parse_config(DYADIC_CONFIG, Format::Toml).expect("parses");
        let res = resolve(&file).expect("resolves");
        let seq = run_queries(&res, "x", &RunOptions { seed: 3, parallel: 1 });
        let par = run_queries(&res, "x", &RunOptions { seed: 3, parallel: 4 });
        assert_eq!(seq.report_hash, par.report_hash);
    }

    #[test]
    fn every_kind_has_an_explanation() {
        for kind in KINDS {
            assert!(explain_text(kind).is_some(), "missing explain for {kind}");
        }
        assert!(explain_text("no-such-kind").is_none());
    }

    #[test]
    fn per_query_seeds_are_stable_and_distinct() {
        let s0 = derive_seed(0, 0);
        let s1 = derive_seed(0, 1);
        assert_ne!(s0, s1);
        assert_eq!(s0, derive_seed(0, 0));
    }
}
