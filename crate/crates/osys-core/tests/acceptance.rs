//! Workspace acceptance sweep: one test per headline guarantee, each checked
//! against the independent oracles in `common` and printed as a single pass
//! line with its wall time. Time caps are asserted where a guarantee is
//! cheap enough to promise one.

mod common;

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use osys_core::cli::{load_config, run_queries, RunOptions};
use osys_core::indlimit::{
    limit_norm, limit_positive, null_space_member, LimitElement, NormVerdict, NullVerdict,
    PosVerdict, Tail, Tower, R_LADDER,
};
use osys_core::matcore::{cx, matrix_unit, sample, CMat, Tol};
use osys_core::opsys::{
    assemble, cone_contains, omin_contains, AouMatrix, ConcreteOpSys, CpMap, OminBudget,
    OminVerdict,
};
use osys_core::tensorlab::{verify_max_commutation, verify_min_commutation};
use osys_core::uhf_graph::{
    canonical_embed, envelope_blocks, epsilon_closure, glimm_equivalent, iso_search,
    refine_relation, relation_of_system, replay_witness, system_of_relation, FiniteGraph,
    GlimmVerdict, GraphTail, GraphTowerSpec, IsoOutcome, IsoWitness, Refutation, UhfSpec,
};

use common::{
    generated_algebra_scan, jacobi_eigenvalues, prober_glimm_equivalent, rng,
    shuffle_embed_oracle, slice_psd_violation, SpecMults,
};

fn report(label: &str, t0: Instant) {
    println!("PASS {} ({:.2} s)", label, t0.elapsed().as_secs_f64());
}

/// Every graph on n labeled vertices, as a bitmask sweep over vertex pairs.
fn all_graphs(n: usize) -> Vec<FiniteGraph> {
    let pairs: Vec<(usize, usize)> =
        (1..=n).flat_map(|i| ((i + 1)..=n).map(move |j| (i, j))).collect();
    (0u32..(1 << pairs.len()))
        .map(|bits| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| bits >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            FiniteGraph::new(n, &edges).expect("bitmask sweep only emits valid edge sets")
        })
        .collect()
}

fn random_graph(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> FiniteGraph {
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            if rng.random::<bool>() {
                edges.push((i, j));
            }
        }
    }
    FiniteGraph::new(n, &edges).unwrap()
}

/// Hermitian generating set of the graph system: diagonal units plus the
/// real and imaginary combination for each edge.
fn hermitian_generators(g: &FiniteGraph) -> Vec<CMat> {
    let n = g.n();
    let mut gens = Vec::new();
    for i in 1..=n {
        gens.push(matrix_unit(n, i, i).unwrap());
    }
    for (i, j) in g.edges() {
        let eij = matrix_unit(n, i, j).unwrap();
        let eji = matrix_unit(n, j, i).unwrap();
        gens.push(&eij + &eji);
        gens.push((&eij - &eji).map(|v| v * cx(0.0, 1.0)));
    }
    gens
}

fn oracle_op_norm(x: &CMat) -> f64 {
    let gram = x.adjoint() * x;
    let evs = jacobi_eigenvalues(&gram);
    evs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// One-level full-matrix tower growing by canonical embeddings.
fn embedding_tower(base: usize, mult: usize, cap: usize) -> Tower {
    let sys = ConcreteOpSys::full_matrix(base);
    Tower::new(vec![sys], vec![], Some(Tail::CanonicalEmbed { mult }), cap).unwrap()
}

/// Constant diag(C^2) levels with the averaging map (a,b) -> (a,(a+b)/2);
/// the second coordinate halves per level, so it dies in the limit.
fn averaging_tower(cap: usize) -> Tower {
    let d2 = ConcreteOpSys::diagonal_algebra(2);
    let coeff = DMatrix::from_row_slice(
        2,
        2,
        &[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.5, 0.0), cx(0.5, 0.0)],
    );
    let avg = CpMap::linear(d2.clone(), d2.clone(), coeff, Tol::default()).unwrap();
    Tower::new(vec![d2.clone(), d2], vec![avg], Some(Tail::RepeatLastMap), cap).unwrap()
}

#[test]
fn block_embeddings_match_the_shuffle_permutation_oracle() {
    let t0 = Instant::now();
    let mut checked = 0usize;
    for n in 1..=4usize {
        for l in 1..=3usize {
            for i in 1..=n {
                for j in 1..=n {
                    let x = matrix_unit(n, i, j).unwrap();
                    let lib = canonical_embed(&x, l).unwrap();
                    let oracle = shuffle_embed_oracle(&x, l);
                    assert_eq!(
                        lib, oracle,
                        "unit ({i},{j}) of the {n}x{n} algebra at multiplicity {l}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, (1 + 4 + 9 + 16) * 3);
    assert!(t0.elapsed().as_secs_f64() < 1.0, "embedding sweep must finish under 1 s");
    report("block embeddings match the shuffle-permutation oracle", t0);
}

#[test]
fn envelope_blocks_match_generated_algebra_scans() {
    let t0 = Instant::now();
    let mut graphs = 0usize;
    for n in 1..=5usize {
        for g in all_graphs(n) {
            let scan = generated_algebra_scan(&hermitian_generators(&g), n);
            let blocks = envelope_blocks(&g);
            assert_eq!(blocks, scan.block_sizes, "graph {:?} on {n} vertices", g.edges());
            let dim: usize = blocks.iter().map(|b| b * b).sum();
            assert_eq!(dim, scan.dim, "block sizes must account for the algebra dimension");
            graphs += 1;
        }
    }
    assert_eq!(graphs, 1 + 2 + 8 + 64 + 1024);
    assert!(t0.elapsed().as_secs_f64() < 30.0, "exhaustive scan must finish under 30 s");
    report("envelope blocks match generated-algebra scans on every graph up to 5 vertices", t0);
}

#[test]
fn closure_classes_match_envelope_blocks() {
    let t0 = Instant::now();
    for n in 1..=5usize {
        for g in all_graphs(n) {
            let closed = epsilon_closure(&relation_of_system(&g));
            let mut sizes: Vec<usize> =
                closed.rel().components().iter().map(|c| c.len()).collect();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(sizes, envelope_blocks(&g), "graph {:?} on {n} vertices", g.edges());
        }
    }
    assert!(t0.elapsed().as_secs_f64() < 10.0, "closure sweep must finish under 10 s");
    report("closure classes match envelope blocks on every graph up to 5 vertices", t0);
}

#[test]
fn relation_and_system_conversions_invert_and_commute_with_refinement() {
    let t0 = Instant::now();
    for n in 1..=5usize {
        for g in all_graphs(n) {
            assert_eq!(system_of_relation(&relation_of_system(&g)), g);
        }
    }
    let mut r = rng(0xC4);
    for _ in 0..500 {
        let g = random_graph(6, &mut r);
        assert_eq!(system_of_relation(&relation_of_system(&g)), g);
    }
    // refinement naturality: refining the relation and refining the graph
    // must stay in lockstep along the whole chain
    for trial in 0..30 {
        let base_n = 1 + trial % 3;
        let base = random_graph(base_n, &mut r);
        let mut g = base.clone();
        let mut p = relation_of_system(&base);
        for _ in 0..5 {
            let l = 1 + r.random_range(0..3usize);
            let g_next = g.refine(l);
            let p_next = refine_relation(&p, l);
            assert_eq!(system_of_relation(&p_next), g_next, "trial {trial}");
            assert_eq!(p_next.rel(), relation_of_system(&g_next).rel(), "trial {trial}");
            g = g_next;
            p = p_next;
        }
    }
    report("relation and system conversions invert each other and commute with refinement", t0);
}

#[test]
fn tower_classification_agrees_with_divisibility_probing() {
    let t0 = Instant::now();
    let two = UhfSpec::constant(2, 2).unwrap();
    let four = UhfSpec::constant(4, 4).unwrap();
    assert_eq!(glimm_equivalent(&two, &four), GlimmVerdict::Equivalent);
    // grouping steps of the 2-tower two at a time lands on the 4-tower
    let stepped = UhfSpec::new(2, vec![2, 2, 2, 2], vec![2]).unwrap();
    let grouped = stepped.telescope(&[2, 2]).unwrap();
    assert_eq!(glimm_equivalent(&stepped, &grouped), GlimmVerdict::Equivalent);
    assert_eq!(glimm_equivalent(&grouped, &four), GlimmVerdict::Equivalent);

    let three = UhfSpec::constant(3, 3).unwrap();
    match glimm_equivalent(&two, &three) {
        GlimmVerdict::NotEquivalent { prime, .. } => assert!(prime == 2 || prime == 3),
        GlimmVerdict::Equivalent => panic!("2-tower and 3-tower must separate"),
    }

    let alternating = UhfSpec::new(2, vec![], vec![3, 2]).unwrap();
    let six = UhfSpec::constant(6, 6).unwrap();
    assert_eq!(glimm_equivalent(&alternating, &six), GlimmVerdict::Equivalent);

    // random eventually-periodic pairs against the residual-gcd prober;
    // small primes and short periods keep 20 probed dimensions decisive
    let mut r = rng(0xC5);
    let primes = [2u64, 3, 5];
    let draw = |r: &mut rand_chacha::ChaCha8Rng| -> (UhfSpec, SpecMults) {
        let n1 = r.random_range(1..=6u64);
        let prefix: Vec<u64> =
            (0..r.random_range(0..=2usize)).map(|_| primes[r.random_range(0..3)]).collect();
        let period: Vec<u64> =
            (0..r.random_range(1..=3usize)).map(|_| primes[r.random_range(0..3)]).collect();
        let spec = UhfSpec::new(n1, prefix.clone(), period.clone()).unwrap();
        (spec, SpecMults { first: n1, prefix, period })
    };
    for pair in 0..100 {
        let (ua, ma) = draw(&mut r);
        let (ub, mb) = draw(&mut r);
        let exact = matches!(glimm_equivalent(&ua, &ub), GlimmVerdict::Equivalent);
        let probed = prober_glimm_equivalent(&ma, &mb, 20);
        assert_eq!(exact, probed, "pair {pair}: {ma:?} vs {mb:?}");
    }
    assert!(t0.elapsed().as_secs_f64() < 1.0, "classification sweep must finish under 1 s");
    report("tower classification agrees with divisibility probing", t0);
}

#[test]
fn limit_norms_equal_level_norms_on_embeddings_and_vanish_on_averaging() {
    let t0 = Instant::now();
    let tol = Tol::default();
    let mut r = rng(0xC6);
    let setups = [(2usize, 2usize, 4usize, 60usize), (3, 3, 3, 40)];
    let mut checked = 0usize;
    for (base, mult, kmax, count) in setups {
        let tower = embedding_tower(base, mult, kmax + 1);
        let sys1 = tower.system(1).unwrap();
        for s in 0..count {
            let amb = sample::gaussian_matrix(base, base, &mut r);
            let e = sys1.element_from_matrix(&amb, tol).unwrap();
            let rep = limit_norm(&tower, &LimitElement::scalar(1, e), 8, tol).unwrap();
            let v = match rep.verdict {
                NormVerdict::Value(v) => v,
                other => panic!("embedding towers settle norms, got {other:?}"),
            };
            let mut cur = amb.clone();
            for k in 1..=kmax {
                if k > 1 {
                    cur = shuffle_embed_oracle(&cur, mult);
                }
                let level_norm = oracle_op_norm(&cur);
                assert!(
                    (level_norm - v).abs() <= 1e-9 * v.max(1.0),
                    "sample {s} at level {k}: {level_norm} vs {v}"
                );
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 100);

    let avg = averaging_tower(40);
    let d2 = avg.system(1).unwrap();
    let dying = LimitElement::scalar(1, d2.element_from_real(&[0.0, 1.0]).unwrap());
    let rep = limit_norm(&avg, &dying, 40, tol).unwrap();
    match rep.verdict {
        NormVerdict::Value(v) => assert!(v.abs() <= 1e-9, "norm must vanish, got {v}"),
        other => panic!("averaging witness must settle, got {other:?}"),
    }
    let null = null_space_member(&avg, &dying, 40, tol).unwrap();
    assert!(matches!(null.verdict, NullVerdict::Yes), "decaying element must be null");
    report("limit norms equal level norms on embeddings and vanish on the averaging tower", t0);
}

#[test]
fn limit_positivity_agrees_with_level_cones() {
    let t0 = Instant::now();
    let tol = Tol::default();
    let mut r = rng(0xC7);
    let mut checked = 0usize;
    for (base, mult) in [(2usize, 2usize), (3, 3)] {
        let tower = embedding_tower(base, mult, 5);
        let mut s = 0usize;
        while s < 100 {
            let level = 1 + s % 2;
            let n = 1 + (s / 2) % 2;
            let sys = tower.system(level).unwrap();
            let d = sys.ambient_dim();
            let h = sample::hermitian(n * d, &mut r);
            let evs = jacobi_eigenvalues(&h);
            // resample draws that sit on the cone boundary
            if evs.iter().any(|v| v.abs() < 1e-6) {
                continue;
            }
            let entries: Vec<_> = (0..n * n)
                .map(|pq| {
                    let (p, q) = (pq / n, pq % n);
                    let block = CMat::from_fn(d, d, |i, j| h[(p * d + i, q * d + j)]);
                    sys.element_from_matrix(&block, tol).unwrap()
                })
                .collect();
            let x = AouMatrix::new(n, entries).unwrap();
            let member = cone_contains(&sys, &x, tol).unwrap();
            assert_eq!(member, evs[0] > 0.0, "level cone must match the eigenvalue oracle");
            let rep =
                limit_positive(&tower, &LimitElement { level, block: x }, 4, tol).unwrap();
            match rep.verdict {
                PosVerdict::Positive => assert!(member, "sample {s} at level {level}"),
                PosVerdict::NotPositive => assert!(!member, "sample {s} at level {level}"),
                PosVerdict::Undetermined => panic!("embedding towers decide exactly"),
            }
            s += 1;
            checked += 1;
        }
    }
    assert_eq!(checked, 200);

    let avg = averaging_tower(40);
    let d2 = avg.system(1).unwrap();
    let absorbed = LimitElement::scalar(1, d2.element_from_real(&[0.0, -1.0]).unwrap());
    let rep = limit_positive(&avg, &absorbed, 40, tol).unwrap();
    assert!(
        matches!(rep.verdict, PosVerdict::Positive),
        "a dying negative coordinate is positive in the limit"
    );
    assert_eq!(rep.r_passed, R_LADDER.to_vec(), "every unit shift must get absorbed");
    let persistent = LimitElement::scalar(1, d2.element_from_real(&[-1.0, 0.0]).unwrap());
    let rep = limit_positive(&avg, &persistent, 40, tol).unwrap();
    assert!(
        matches!(rep.verdict, PosVerdict::NotPositive),
        "a preserved negative coordinate stays outside the cone"
    );
    assert!(rep.witness.is_some(), "rejection must carry a state witness");
    report("limit positivity agrees with level cones", t0);
}

#[test]
fn min_tensor_membership_commutes_with_tower_limits() {
    let t0 = Instant::now();
    let tower = embedding_tower(1, 2, 6);
    let rights = [ConcreteOpSys::full_matrix(2), ConcreteOpSys::diagonal_algebra(3)];
    for (i, right) in rights.iter().enumerate() {
        let rep =
            verify_min_commutation(&tower, right, 100, 4, Tol { eps: 1e-9 }, 0xC8 + i as u64)
                .unwrap();
        assert_eq!(rep.samples.len(), 100);
        assert_eq!(rep.disagreements, 0, "right factor {i}");
        assert!(rep.passed);
        for s in &rep.samples {
            assert!(s.agree, "sample {} over right factor {i}", s.index);
            assert!(!s.pushed.is_empty(), "every sample must get pushed at least once");
            for &(_, pushed_member) in &s.pushed {
                assert_eq!(pushed_member, s.base_member);
            }
        }
    }
    assert!(t0.elapsed().as_secs_f64() < 60.0, "commutation sweep must finish under 60 s");
    report("min tensor membership commutes with tower limits", t0);
}

#[test]
fn max_certificates_transport_and_reverify_at_every_level() {
    let t0 = Instant::now();
    let tower = embedding_tower(2, 2, 4);
    let rights = [ConcreteOpSys::full_matrix(2), ConcreteOpSys::diagonal_algebra(2)];
    for (i, right) in rights.iter().enumerate() {
        let rep =
            verify_max_commutation(&tower, right, 100, 3, Tol::default(), 0xC9 + i as u64)
                .unwrap();
        assert!(rep.passed, "right factor {i}");
        assert!(rep.corruption_rejected, "tampered certificates must be rejected");
        assert_eq!(rep.transports.len(), 100);
        for t in &rep.transports {
            assert!(t.base_accepted, "certificate {} must verify where drawn", t.index);
            assert!(t.all_accepted, "certificate {} must survive transport", t.index);
            assert!(!t.checks.is_empty());
            for &(level, ok) in &t.checks {
                assert!(ok, "certificate {} rejected at level {level}", t.index);
            }
        }
        assert_eq!(rep.elementary.len(), 100);
        for e in &rep.elementary {
            assert!(e.limit_certified, "elementary positive {} must certify", e.index);
            assert!(e.accepted && e.accepted_after_push, "elementary trial {}", e.index);
        }
    }
    report("max certificates transport and re-verify at every probed level", t0);
}

#[test]
fn abelian_omin_membership_matches_the_slice_positivity_oracle() {
    let t0 = Instant::now();
    let tol = Tol::default();
    let mut r = rng(0xA10);
    let mut inside_pool: Vec<(ConcreteOpSys, AouMatrix, usize, usize)> = Vec::new();
    let mut instances = 0usize;
    while instances < 500 {
        let d = 1 + instances % 4;
        let n = 1 + (instances / 4) % 2;
        let sys = ConcreteOpSys::diagonal_algebra(d);
        let slices: Vec<CMat> = (0..d).map(|_| sample::hermitian(n, &mut r)).collect();
        // resample draws whose slices sit on the boundary
        if slices.iter().any(|m| jacobi_eigenvalues(m).iter().any(|v| v.abs() < 1e-6)) {
            continue;
        }
        let entries: Vec<_> = (0..n * n)
            .map(|pq| {
                let (p, q) = (pq / n, pq % n);
                let diag = CMat::from_fn(d, d, |i, j| {
                    if i == j {
                        slices[i][(p, q)]
                    } else {
                        cx(0.0, 0.0)
                    }
                });
                sys.element_from_matrix(&diag, tol).unwrap()
            })
            .collect();
        let x = AouMatrix::new(n, entries).unwrap();
        let assembled = assemble(&sys, &x).unwrap();
        let violation = slice_psd_violation(&assembled, n, d, 1e-9);
        let budget = OminBudget { multistarts: 64, rounds: 60, seed: 7 + instances as u64 };
        match omin_contains(&sys, &x, tol, budget).unwrap() {
            OminVerdict::Inside => {
                assert!(violation.is_none(), "instance {instances}: oracle found {violation:?}");
                inside_pool.push((sys, x, d, n));
            }
            OminVerdict::Outside { .. } => {
                assert!(violation.is_some(), "instance {instances}: oracle saw no violation");
            }
            OminVerdict::Unknown { .. } => panic!("abelian membership must decide exactly"),
        }
        instances += 1;
    }
    assert!(!inside_pool.is_empty(), "the sweep must hit inside instances");

    // random states are a necessary check: every inside element must evaluate
    // to a PSD scalar matrix under every state of the diagonal algebra
    let mut probes = 0usize;
    let mut pick = 0usize;
    while probes < 1000 {
        let (sys, x, d, n) = &inside_pool[pick % inside_pool.len()];
        pick += 1;
        let assembled = assemble(sys, x).unwrap();
        let raw: Vec<f64> = (0..*d).map(|_| r.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let evaluated = CMat::from_fn(*n, *n, |p, q| {
            (0..*d).map(|s| assembled[(p * d + s, q * d + s)] * cx(raw[s] / total, 0.0)).sum()
        });
        let scale = evaluated.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
        let evs = jacobi_eigenvalues(&evaluated);
        assert!(
            evs.first().copied().unwrap_or(0.0) >= -1e-9 * scale,
            "probe {probes}: state evaluation dipped below zero"
        );
        probes += 1;
    }
    report("abelian omin membership matches the slice-positivity oracle", t0);
}

#[test]
fn iso_search_finds_telescoped_pairs_and_rejects_corrupted_witnesses() {
    let t0 = Instant::now();
    let mut witnesses: Vec<(GraphTowerSpec, GraphTowerSpec, IsoWitness)> = Vec::new();
    for t in 0..20usize {
        let n1 = [1u64, 2, 3][t % 3];
        let p = [2u64, 3][t % 2];
        let tail = if t < 10 { GraphTail::Complete } else { GraphTail::Empty };
        let a = GraphTowerSpec::new(UhfSpec::constant(n1, p).unwrap(), vec![], tail).unwrap();
        let b =
            GraphTowerSpec::new(UhfSpec::constant(n1, p * p).unwrap(), vec![], tail).unwrap();
        match iso_search(&a, &b, 6) {
            IsoOutcome::Found(w) => {
                replay_witness(&a, &b, &w).expect("fresh witnesses must replay");
                witnesses.push((a, b, w));
            }
            other => panic!("pair {t} must be found, got {other:?}"),
        }
    }

    let diag = GraphTowerSpec::new(UhfSpec::constant(2, 2).unwrap(), vec![], GraphTail::Empty)
        .unwrap();
    let full =
        GraphTowerSpec::new(UhfSpec::constant(2, 2).unwrap(), vec![], GraphTail::Complete)
            .unwrap();
    for (x, y) in [(&diag, &full), (&full, &diag)] {
        match iso_search(x, y, 6) {
            IsoOutcome::Refuted(Refutation::EnvelopeStream { .. }) => {}
            other => panic!("diagonal against complete must refute, got {other:?}"),
        }
    }

    // corrupted witnesses: every mutation below breaks a structural invariant
    // (bijectivity, level dimensions, or map length), so replay must fail
    let mut r = rng(0xC11);
    for i in 0..10_000usize {
        let (a, b, w) = &witnesses[i % witnesses.len()];
        let mut c = w.clone();
        match i % 3 {
            0 => {
                let mi = r.random_range(0..c.fwd.len());
                let m = &mut c.fwd[mi];
                if m.map.len() >= 2 {
                    let src = r.random_range(0..m.map.len());
                    let dst = (src + 1 + r.random_range(0..m.map.len() - 1)) % m.map.len();
                    m.map[dst] = m.map[src];
                } else {
                    // a one-entry map cannot lose bijectivity; break its level instead
                    c.a_levels[mi] += 1;
                }
            }
            1 => {
                let li = r.random_range(0..c.a_levels.len());
                c.a_levels[li] += 1;
            }
            _ => {
                let mi = r.random_range(0..c.bwd.len());
                c.bwd[mi].map.pop();
            }
        }
        assert!(
            replay_witness(a, b, &c).is_err(),
            "corrupted witness {i} must fail replay"
        );
    }
    assert!(t0.elapsed().as_secs_f64() < 120.0, "search sweep must finish under 120 s");
    report("iso search finds telescoped pairs and rejects corrupted witnesses", t0);
}

#[test]
fn batch_reports_are_deterministic_for_a_fixed_seed() {
    let t0 = Instant::now();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.toml");
    let (resolved, sha) = load_config(&path).unwrap();
    let first = run_queries(&resolved, &sha, &RunOptions { seed: 42, parallel: 1 });
    assert_eq!(first.failures, 0, "the demo config must pass end to end");
    let second = run_queries(&resolved, &sha, &RunOptions { seed: 42, parallel: 1 });
    assert_eq!(first.report_hash, second.report_hash, "same seed, same report");
    let parallel = run_queries(&resolved, &sha, &RunOptions { seed: 42, parallel: 4 });
    assert_eq!(first.report_hash, parallel.report_hash, "worker count must not leak");
    let other = run_queries(&resolved, &sha, &RunOptions { seed: 43, parallel: 1 });
    assert_ne!(first.report_hash, other.report_hash, "the seed must reach every query");
    report("batch reports are deterministic for a fixed seed", t0);
}
