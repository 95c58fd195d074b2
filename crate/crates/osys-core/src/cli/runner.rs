//! Query execution: per-query seeds derived from the master seed, kind
//! dispatch, and record collection in config order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{matrix_from_spec, QuerySpec, Resolved};
use super::report::{Outcome, QueryRecord, Report};
use crate::indlimit::{
    eq_in_limit, limit_norm, limit_positive, null_space_member, pullback_state, EqVerdict,
    LevelState, LimitElement, NormVerdict, NullVerdict, PosVerdict,
};
use crate::matcore::{CMat, Tol};
use crate::opsys::{
    cp_check, omax_certificate_check, omin_contains, AouMatrix, CertOutcome, CertWhy, CpLevel,
    CpVerdict, OmaxCertificate, OminBudget, OminVerdict,
};
use crate::tensorlab::{verify_max_commutation, verify_min_commutation};
use crate::uhf_graph::{
    envelope_blocks, epsilon_closure, glimm_equivalent, iso_search, relation_of_system,
    replay_witness, system_of_relation, GlimmVerdict, IndexMap, IsoOutcome, IsoWitness,
    Refutation, Side,
};

pub struct RunOptions {
    pub seed: u64,
    pub parallel: usize,
}

/// Per-query seed: hash of master seed and index, so inserting a query does
/// not shift its neighbors' randomness.
pub fn derive_seed(master: u64, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 8 bytes"))
}

fn jmat(m: &CMat) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|r| {
            let row: Vec<Value> =
                (0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect();
            json!(row)
        })
        .collect();
    json!(rows)
}

fn jstate(s: &LevelState) -> Value {
    json!({ "level": s.level, "n": s.n, "density": jmat(&s.density) })
}

fn jside(s: Side) -> Value {
    match s {
        Side::Left => json!("left"),
        Side::Right => json!("right"),
    }
}

fn jindexmap(m: &IndexMap) -> Value {
    json!({ "mult": m.mult, "src_dim": m.src_dim, "map": m.map })
}

fn jwitness(w: &IsoWitness) -> Value {
    json!({
        "a_levels": w.a_levels,
        "b_levels": w.b_levels,
        "fwd": w.fwd.iter().map(jindexmap).collect::<Vec<_>>(),
        "bwd": w.bwd.iter().map(jindexmap).collect::<Vec<_>>(),
    })
}

fn cert_why(why: &CertWhy) -> Value {
    match why {
        CertWhy::CoeffNotPsd { index } => json!({ "reason": "coeff-not-psd", "index": index }),
        CertWhy::ElementNotPositive { index } => {
            json!({ "reason": "element-not-positive", "index": index })
        }
        CertWhy::ReconstructionMismatch { max_err } => {
            json!({ "reason": "reconstruction-mismatch", "max_err": max_err })
        }
    }
}

fn exec(res: &Resolved, q: &QuerySpec, seed: u64) -> Result<(Outcome, Value), String> {
    let tol = Tol::default();
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match q {
        QuerySpec::CheckTower { tower } => {
            let rt = res.towers.get(tower).expect("validated");
            let computed = rt.tower.is_embedding();
            let outcome = match rt.declared_embedding {
                Some(want) if want != computed => Outcome::Failed,
                _ => Outcome::Ok,
            };
            Ok((
                outcome,
                json!({
                    "explicit_levels": rt.tower.explicit_len(),
                    "cap": rt.tower.cap(),
                    "is_embedding": computed,
                    "declared_embedding": rt.declared_embedding,
                }),
            ))
        }
        QuerySpec::LimitNorm { tower, element, level, horizon } => {
            let rt = res.towers.get(tower).expect("validated");
            let e = LimitElement::scalar(
                *level,
                res.elements.get(element).expect("validated").element.clone(),
            );
            let horizon = horizon.unwrap_or_else(|| rt.tower.cap());
            let rep = limit_norm(&rt.tower, &e, horizon, tol).map_err(|e| err(&e))?;
            let (outcome, verdict) = match rep.verdict {
                NormVerdict::Value(v) => (Outcome::Ok, json!({ "kind": "value", "value": v })),
                NormVerdict::Bracket { lo, hi } => {
                    (Outcome::Unknown, json!({ "kind": "bracket", "lo": lo, "hi": hi }))
                }
            };
            Ok((
                outcome,
                json!({ "verdict": verdict, "probed_to": rep.probed_to, "norms": rep.norms }),
            ))
        }
        QuerySpec::LimitPositive { tower, element, level, horizon } => {
            let rt = res.towers.get(tower).expect("validated");
            let e = LimitElement::scalar(
                *level,
                res.elements.get(element).expect("validated").element.clone(),
            );
            let horizon = horizon.unwrap_or_else(|| rt.tower.cap());
            let rep = limit_positive(&rt.tower, &e, horizon, tol).map_err(|e| err(&e))?;
            let (outcome, verdict) = match rep.verdict {
                PosVerdict::Positive => (Outcome::Ok, "positive"),
                PosVerdict::NotPositive => (Outcome::Ok, "not-positive"),
                PosVerdict::Undetermined => (Outcome::Unknown, "undetermined"),
            };
            Ok((
                outcome,
                json!({
                    "verdict": verdict,
                    "r_passed": rep.r_passed,
                    "probed_to": rep.probed_to,
                    "min_eigs": rep.min_eigs,
                    "witness": rep.witness.as_ref().map(jstate),
                }),
            ))
        }
        QuerySpec::NullSpace { tower, element, level, horizon } => {
            let rt = res.towers.get(tower).expect("validated");
            let e = LimitElement::scalar(
                *level,
                res.elements.get(element).expect("validated").element.clone(),
            );
            let horizon = horizon.unwrap_or_else(|| rt.tower.cap());
            let rep = null_space_member(&rt.tower, &e, horizon, tol).map_err(|e| err(&e))?;
            let (outcome, verdict) = match rep.verdict {
                NullVerdict::Yes => (Outcome::Ok, "yes"),
                NullVerdict::No => (Outcome::Ok, "no"),
                NullVerdict::Undetermined => (Outcome::Unknown, "undetermined"),
            };
            Ok((
                outcome,
                json!({
                    "verdict": verdict,
                    "probed_to": rep.probed_to,
                    "norms": rep.norms,
                    "witness": rep.witness.as_ref().map(jstate),
                }),
            ))
        }
        QuerySpec::EqInLimit { tower, left, left_level, right, right_level, horizon } => {
            let rt = res.towers.get(tower).expect("validated");
            let e1 = LimitElement::scalar(
                *left_level,
                res.elements.get(left).expect("validated").element.clone(),
            );
            let e2 = LimitElement::scalar(
                *right_level,
                res.elements.get(right).expect("validated").element.clone(),
            );
            let horizon = horizon.unwrap_or_else(|| rt.tower.cap());
            let rep = eq_in_limit(&rt.tower, &e1, &e2, horizon, tol).map_err(|e| err(&e))?;
            let (outcome, verdict) = match rep.verdict {
                EqVerdict::Equal => (Outcome::Ok, "equal"),
                EqVerdict::NotEqual => (Outcome::Ok, "not-equal"),
                EqVerdict::Undetermined => (Outcome::Unknown, "undetermined"),
            };
            Ok((
                outcome,
                json!({ "verdict": verdict, "probed_to": rep.probed_to, "norms": rep.norms }),
            ))
        }
        QuerySpec::PullbackState { tower, level, density, to_level } => {
            let rt = res.towers.get(tower).expect("validated");
            let dm = matrix_from_spec("density", density).map_err(|e| err(&e))?;
            let ambient = rt.tower.system(*level).map_err(|e| err(&e))?.ambient_dim();
            if dm.nrows() != dm.ncols() {
                return Err(format!(
                    "density must be square, got {}x{}",
                    dm.nrows(),
                    dm.ncols()
                ));
            }
            if ambient == 0 || dm.nrows() % ambient != 0 {
                return Err(format!(
                    "density size {} is not a multiple of the level-{level} ambient dimension {ambient}",
                    dm.nrows()
                ));
            }
            let n = dm.nrows() / ambient;
            let state = LevelState::new(&rt.tower, *level, n, dm, tol).map_err(|e| err(&e))?;
            let pulled = pullback_state(&rt.tower, &state, *to_level, tol).map_err(|e| err(&e))?;
            Ok((Outcome::Ok, json!({ "state": jstate(&pulled) })))
        }
        QuerySpec::Glimm { a, b } => {
            let sa = res.uhf.get(a).expect("validated");
            let sb = res.uhf.get(b).expect("validated");
            let data = match glimm_equivalent(sa, sb) {
                GlimmVerdict::Equivalent => json!({ "verdict": "equivalent" }),
                GlimmVerdict::NotEquivalent { prime, larger } => json!({
                    "verdict": "not-equivalent",
                    "prime": prime,
                    "larger": jside(larger),
                }),
            };
            Ok((Outcome::Ok, data))
        }
        QuerySpec::IsoSearch { a, b, depth } => {
            let ta = res.graph_towers.get(a).expect("validated");
            let tb = res.graph_towers.get(b).expect("validated");
            let depth = depth.unwrap_or(3);
            match iso_search(ta, tb, depth) {
                IsoOutcome::Found(w) => match replay_witness(ta, tb, &w) {
                    Ok(()) => Ok((
                        Outcome::Ok,
                        json!({ "outcome": "found", "witness": jwitness(&w), "replayed": true }),
                    )),
                    Err(e) => Ok((
                        Outcome::Failed,
                        json!({
                            "outcome": "found",
                            "witness": jwitness(&w),
                            "replayed": false,
                            "replay_error": e.to_string(),
                        }),
                    )),
                },
                IsoOutcome::Refuted(r) => {
                    let refutation = match r {
                        Refutation::GlimmClass { prime, larger } => json!({
                            "kind": "glimm-class", "prime": prime, "larger": jside(larger),
                        }),
                        Refutation::EnvelopeStream { abelian, edged_level } => json!({
                            "kind": "envelope-stream",
                            "abelian": jside(abelian),
                            "edged_level": edged_level,
                        }),
                    };
                    Ok((Outcome::Ok, json!({ "outcome": "refuted", "refutation": refutation })))
                }
                IsoOutcome::Unknown { depth } => {
                    Ok((Outcome::Unknown, json!({ "outcome": "unknown", "depth": depth })))
                }
            }
        }
        QuerySpec::Envelope { graph } => {
            let g = res.graphs.get(graph).expect("validated");
            Ok((Outcome::Ok, json!({ "blocks": envelope_blocks(g) })))
        }
        QuerySpec::RelationRoundtrip { graph } => {
            let g = res.graphs.get(graph).expect("validated");
            let p = relation_of_system(g);
            let back = system_of_relation(&p);
            let equal = back.n() == g.n() && back.edges() == g.edges();
            let outcome = if equal { Outcome::Ok } else { Outcome::Failed };
            Ok((
                outcome,
                json!({
                    "n": g.n(),
                    "edges": g.edges(),
                    "relation_pairs": p.rel().count(),
                    "roundtrip_equal": equal,
                }),
            ))
        }
        QuerySpec::Epsilon { graph } => {
            let g = res.graphs.get(graph).expect("validated");
            let p = relation_of_system(g);
            let closure = epsilon_closure(&p);
            let classes: Vec<Vec<usize>> = closure
                .rel()
                .components()
                .into_iter()
                .map(|c| c.into_iter().map(|v| v + 1).collect())
                .collect();
            Ok((
                Outcome::Ok,
                json!({
                    "level": p.level(),
                    "closure_pairs": closure.rel().count(),
                    "classes": classes,
                }),
            ))
        }
        QuerySpec::Omin { system, element, multistarts, rounds } => {
            let sys = res.systems.get(system).expect("validated");
            let x = AouMatrix::scalar(res.elements.get(element).expect("validated").element.clone());
            let budget = OminBudget {
                multistarts: multistarts.unwrap_or(64),
                rounds: rounds.unwrap_or(60),
                seed,
            };
            let data = match omin_contains(sys, &x, tol, budget).map_err(|e| err(&e))? {
                OminVerdict::Inside => (Outcome::Ok, json!({ "verdict": "inside" })),
                OminVerdict::Outside { lambda, value } => (
                    Outcome::Ok,
                    json!({
                        "verdict": "outside",
                        "value": value,
                        "lambda": lambda.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>(),
                    }),
                ),
                OminVerdict::Unknown { multistarts, best } => (
                    Outcome::Unknown,
                    json!({ "verdict": "unknown", "multistarts": multistarts, "best": best }),
                ),
            };
            Ok(data)
        }
        QuerySpec::OmaxVerify { system, claimed, terms, alpha } => {
            let sys = res.systems.get(system).expect("validated");
            let claimed_elt =
                res.elements.get(claimed).expect("validated").element.clone();
            let claimed_block = AouMatrix::scalar(claimed_elt);
            let mut cert_terms = Vec::new();
            for (t, tc) in terms.iter().enumerate() {
                let coeff =
                    matrix_from_spec(&format!("terms[{t}].coeff"), &tc.coeff).map_err(|e| err(&e))?;
                let elt = res.elements.get(&tc.element).expect("validated").element.clone();
                cert_terms.push((coeff, elt));
            }
            let alpha = match alpha {
                Some(a) => Some(matrix_from_spec("alpha", a).map_err(|e| err(&e))?),
                None => None,
            };
            let cert = OmaxCertificate { n: 1, terms: cert_terms, alpha };
            match omax_certificate_check(sys, &cert, &claimed_block, tol).map_err(|e| err(&e))? {
                CertOutcome::Accepted => Ok((Outcome::Ok, json!({ "accepted": true }))),
                CertOutcome::Rejected(why) => {
                    Ok((Outcome::Failed, json!({ "accepted": false, "why": cert_why(&why) })))
                }
            }
        }
        QuerySpec::MinCommute { tower, right, samples, levels } => {
            let rt = res.towers.get(tower).expect("validated");
            let rsys = res.systems.get(right).expect("validated");
            let rep = verify_min_commutation(
                &rt.tower,
                rsys,
                samples.unwrap_or(16),
                levels.unwrap_or(3),
                tol,
                seed,
            )
            .map_err(|e| err(&e))?;
            let outcome = if rep.passed { Outcome::Ok } else { Outcome::Failed };
            Ok((
                outcome,
                json!({
                    "seed": rep.seed,
                    "levels": rep.levels,
                    "samples": rep.samples.len(),
                    "disagreements": rep.disagreements,
                    "passed": rep.passed,
                }),
            ))
        }
        QuerySpec::MaxCommute { tower, right, samples, levels } => {
            let rt = res.towers.get(tower).expect("validated");
            let rsys = res.systems.get(right).expect("validated");
            let rep = verify_max_commutation(
                &rt.tower,
                rsys,
                samples.unwrap_or(16),
                levels.unwrap_or(3),
                tol,
                seed,
            )
            .map_err(|e| err(&e))?;
            let transports_ok = rep.transports.iter().filter(|t| t.all_accepted).count();
            let elementary_ok = rep
                .elementary
                .iter()
                .filter(|t| t.limit_certified && t.accepted && t.accepted_after_push)
                .count();
            let outcome = if rep.passed { Outcome::Ok } else { Outcome::Failed };
            Ok((
                outcome,
                json!({
                    "seed": rep.seed,
                    "levels": rep.levels,
                    "transports": rep.transports.len(),
                    "transports_ok": transports_ok,
                    "elementary": rep.elementary.len(),
                    "elementary_ok": elementary_ok,
                    "corruption_rejected": rep.corruption_rejected,
                    "passed": rep.passed,
                }),
            ))
        }
        QuerySpec::CpCheck { map, level } => {
            let m = res.maps.get(map).expect("validated");
            match cp_check(m, level.unwrap_or(2), tol, seed).map_err(|e| err(&e))? {
                CpVerdict::Verified { level, exact } => {
                    let level = match level {
                        CpLevel::Unchecked => json!("unchecked"),
                        CpLevel::Finite(k) => json!(k),
                        CpLevel::Complete => json!("complete"),
                    };
                    Ok((Outcome::Ok, json!({ "verified": true, "level": level, "exact": exact })))
                }
                CpVerdict::NotPositiveAt { level, witness } => Ok((
                    Outcome::Failed,
                    json!({ "verified": false, "level": level, "witness": jmat(&witness) }),
                )),
            }
        }
    }
}

fn run_one(res: &Resolved, index: usize, master_seed: u64) -> QueryRecord {
    let q = &res.queries[index];
    let seed = derive_seed(master_seed, index);
    let start = Instant::now();
    let (outcome, data) = match exec(res, q, seed) {
        Ok(pair) => pair,
        Err(msg) => (Outcome::Error, json!({ "error": msg })),
    };
    QueryRecord {
        index,
        kind: q.kind_name().to_string(),
        seed,
        outcome,
        wall_ms: start.elapsed().as_millis() as u64,
        data,
    }
}

/// Runs every query, in parallel when asked, and reassembles records in
/// config order so reports stay deterministic.
pub fn run_queries(res: &Resolved, config_sha256: &str, opts: &RunOptions) -> Report {
    let n = res.queries.len();
    let workers = opts.parallel.max(1).min(n.max(1));
    let records: Vec<QueryRecord> = if workers <= 1 {
        (0..n).map(|i| run_one(res, i, opts.seed)).collect()
    } else {
        let slots: Mutex<Vec<Option<QueryRecord>>> = Mutex::new((0..n).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let rec = run_one(res, i, opts.seed);
                    slots.lock().expect("no panics in workers")[i] = Some(rec);
                });
            }
        });
        slots
            .into_inner()
            .expect("scope joined")
            .into_iter()
            .map(|r| r.expect("every index visited"))
            .collect()
    };
    Report::assemble(config_sha256.to_string(), opts.seed, records)
}
