//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (visible with `--nocapture`).
//!
//! Criteria 5-7 fix delta = 0.7 for the accuracy measurements and sweep
//! delta in {0.5, 0.7, 0.9} for filter safety; accuracy counts are pooled
//! across corpora before computing recall and precision.

use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fuzzyjoin::bench::{run_join, run_oracle, AccuracyReport, JoinConfig};
use fuzzyjoin::corpus::{build_collection, generate_synthetic_with, Collection, LoadOptions, SynthConfig};
use fuzzyjoin::matching::{
    brute_force_matching, ev_hungarian, greedy_matching, hungarian, locally_dominant_matching,
    BipartiteGraph, EvDecision, StreamState,
};
use fuzzyjoin::sim::SimilarityKind;
use fuzzyjoin::verify::MatcherKind;

// The speed criterion times full join runs, so the criteria must not run
// concurrently with each other. Every test takes this lock first.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn random_graph(rng: &mut ChaCha8Rng, max_side: usize) -> BipartiteGraph {
    let nl = rng.gen_range(1..=max_side);
    let nr = rng.gen_range(nl..=max_side);
    let mut g = BipartiteGraph::new(nl, nr);
    for i in 0..nl {
        for j in 0..nr {
            g.set_weight(i, j, rng.gen_range(0.0..=1.0));
        }
    }
    g
}

fn stream_graph(g: &BipartiteGraph, eps: f64) -> fuzzyjoin::matching::PsResult {
    let mut st = StreamState::new(g.n_left(), g.n_right(), eps);
    for i in 0..g.n_left() {
        for j in 0..g.n_right() {
            st.push(i, j, g.weight(i, j));
        }
    }
    st.finalize()
}

#[test]
fn criterion_1_hungarian_matches_enumeration() {
    let _lock = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for case in 0..200 {
        let g = random_graph(&mut rng, 8);
        let exact = hungarian(&g).total_weight;
        let oracle = brute_force_matching(&g).unwrap().total_weight;
        assert!(
            (exact - oracle).abs() <= 1e-9,
            "case {case}: hungarian {exact} vs enumeration {oracle}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "budget exceeded: {elapsed:?}");
    println!("criterion 1 PASS: 200 graphs exact within 1e-9 in {elapsed:?}");
}

#[test]
fn criterion_2_approximation_guarantees() {
    let _lock = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    for case in 0..500 {
        let g = random_graph(&mut rng, 12);
        let opt = hungarian(&g).total_weight;
        let gd = greedy_matching(&g).total_weight;
        let ld = locally_dominant_matching(&g).total_weight;
        assert!(gd >= 0.5 * opt - 1e-9, "case {case}: greedy {gd} < half of {opt}");
        assert!(ld >= 0.5 * opt - 1e-9, "case {case}: locally dominant {ld} < half of {opt}");
        for eps in [0.0, 0.001, 0.1] {
            let ps = stream_graph(&g, eps).matching.total_weight;
            assert!(
                ps >= opt / (2.0 + eps) - 1e-9,
                "case {case}: streaming {ps} < {opt}/(2+{eps})"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "budget exceeded: {elapsed:?}");
    println!("criterion 2 PASS: 500 graphs, zero ratio violations in {elapsed:?}");
}

#[test]
fn criterion_3_dual_upper_bound() {
    let _lock = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    for case in 0..500 {
        let g = random_graph(&mut rng, 12);
        let opt = hungarian(&g).total_weight;
        for eps in [0.0, 0.001, 0.1] {
            let out = stream_graph(&g, eps);
            assert!(
                (1.0 + eps) * out.dual_sum >= opt - 1e-9,
                "case {case}: dual bound {} < optimum {opt} at eps {eps}",
                (1.0 + eps) * out.dual_sum
            );
        }
    }
    println!("criterion 3 PASS: dual bound dominated the optimum on 500 graphs");
}

#[test]
fn criterion_4_greedy_equals_locally_dominant() {
    let _lock = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    for case in 0..500 {
        let g = random_graph(&mut rng, 12);
        let gd = greedy_matching(&g);
        let ld = locally_dominant_matching(&g);
        assert_eq!(gd.edge_set(), ld.edge_set(), "case {case}");
    }
    println!("criterion 4 PASS: identical edge sets on 500 graphs");
}

/// Small planted corpora of two flavors: word-level perturbed copies from
/// the synthetic generator, and family corpora whose sets hold several
/// stem+suffix variants of one base word. The family flavor produces
/// borderline pairs where approximate matching genuinely drops results
/// and the upper-bound variant genuinely adds extras.
fn planted_corpus(seed: u64) -> Collection {
    if seed % 2 == 0 {
        let mut cfg = SynthConfig::new(56, 6, 26, seed);
        cfg.planted_fraction = 0.25;
        cfg.perturb_prob = 0.06 + (seed % 6) as f64 * 0.04;
        generate_synthetic_with(&cfg).unwrap()
    } else {
        family_corpus(seed)
    }
}

fn family_corpus(seed: u64) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = b"abcdefghijklmnopqrstuvwxyz";
    let word = |len: usize, rng: &mut ChaCha8Rng| -> String {
        (0..len).map(|_| letters[(rng.next_u64() % 26) as usize] as char).collect()
    };
    let n_fam = 30;
    let stems: Vec<String> = (0..n_fam).map(|_| word(16, &mut rng)).collect();
    // short suffixes over a tiny alphabet: weights inside a family block
    // come out noisy enough that scores straddle the threshold; four of the
    // seven elements carry longer suffixes to keep most pairs clear of it
    let suffix = |spread: bool, rng: &mut ChaCha8Rng| -> String {
        let len = if spread { 1 + (rng.next_u64() % 3) as usize } else { 1 };
        (0..len).map(|_| letters[(rng.next_u64() % 4) as usize] as char).collect()
    };
    let make_set = |f: usize, rng: &mut ChaCha8Rng| -> String {
        let elems: Vec<String> =
            (0..7).map(|i| format!("{}{}", stems[f], suffix(i < 4, rng))).collect();
        elems.join(";")
    };
    let n_sets = 56;
    let n_copies = 18;
    let n_base = n_sets - n_copies;
    let mut lines = Vec::new();
    let mut base_fam = Vec::new();
    for _ in 0..n_base {
        let f = (rng.next_u64() % n_fam as u64) as usize;
        base_fam.push(f);
        let line = make_set(f, &mut rng);
        lines.push(line);
    }
    for _ in 0..n_copies {
        let src = (rng.next_u64() % n_base as u64) as usize;
        let line = make_set(base_fam[src], &mut rng);
        lines.push(line);
    }
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    build_collection(refs, &LoadOptions::default()).unwrap()
}

#[test]
fn criterion_5_filter_safety_exact_join() {
    let _lock = serial();
    let start = Instant::now();
    let mut checked_pairs = 0usize;
    for seed in 0..50u64 {
        let col = planted_corpus(2000 + seed);
        for delta in [0.5, 0.7, 0.9] {
            let join =
                run_join(&col, &JoinConfig::new(delta, MatcherKind::Hg, SimilarityKind::Jac))
                    .unwrap();
            let oracle = run_oracle(&col, delta, SimilarityKind::Jac).unwrap();
            assert_eq!(
                join.pairs.len(),
                oracle.pairs.len(),
                "seed {seed} delta {delta}: pipeline {} vs oracle {}",
                join.pairs.len(),
                oracle.pairs.len()
            );
            for (a, b) in join.pairs.iter().zip(&oracle.pairs) {
                assert_eq!((a.r_id, a.s_id), (b.r_id, b.s_id), "seed {seed} delta {delta}");
                assert!((a.score - b.score).abs() <= 1e-9);
            }
            checked_pairs += join.pairs.len();
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "budget exceeded: {elapsed:?}");
    println!(
        "criterion 5 PASS: 50 corpora x 3 thresholds equal the brute-force join \
         ({checked_pairs} result pairs) in {elapsed:?}"
    );
}

#[test]
fn criterion_6_matching_weight_precision_one() {
    let _lock = serial();
    let kinds = [MatcherKind::Gd, MatcherKind::Ld, MatcherKind::Ps];
    let mut pooled: Vec<(usize, usize, usize)> = vec![(0, 0, 0); kinds.len()]; // tp, fp, fn
    for seed in 0..50u64 {
        let col = planted_corpus(2000 + seed);
        let exact =
            run_join(&col, &JoinConfig::new(0.7, MatcherKind::Hg, SimilarityKind::Jac)).unwrap();
        for (ki, &kind) in kinds.iter().enumerate() {
            let approx =
                run_join(&col, &JoinConfig::new(0.7, kind, SimilarityKind::Jac)).unwrap();
            let acc = AccuracyReport::versus(&exact, &approx);
            assert_eq!(acc.false_pos, 0, "seed {seed} {kind}: precision must be exactly 1");
            pooled[ki].0 += acc.true_pos;
            pooled[ki].1 += acc.false_pos;
            pooled[ki].2 += acc.false_neg;
        }
    }
    for (ki, &kind) in kinds.iter().enumerate() {
        let (tp, fp, fneg) = pooled[ki];
        let recall = tp as f64 / (tp + fneg) as f64;
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        assert_eq!(precision, 1.0, "{kind}");
        assert!(recall >= 0.95, "{kind}: pooled recall {recall} < 0.95 (tp {tp}, fn {fneg})");
        println!(
            "criterion 6 PASS ({kind}): precision 1.0, pooled recall {recall:.4} \
             over {tp} true pairs"
        );
    }
}

#[test]
fn criterion_7_upper_bound_recall_one() {
    let _lock = serial();
    let kinds = [MatcherKind::Gd, MatcherKind::Ld, MatcherKind::Ps];
    let mut pooled: Vec<(usize, usize, usize)> = vec![(0, 0, 0); kinds.len()];
    for seed in 0..50u64 {
        let col = planted_corpus(2000 + seed);
        let exact =
            run_join(&col, &JoinConfig::new(0.7, MatcherKind::Hg, SimilarityKind::Jac)).unwrap();
        for (ki, &kind) in kinds.iter().enumerate() {
            let mut cfg = JoinConfig::new(0.7, kind, SimilarityKind::Jac);
            cfg.ub_variant = true;
            let ub = run_join(&col, &cfg).unwrap();
            let acc = AccuracyReport::versus(&exact, &ub);
            assert_eq!(acc.false_neg, 0, "seed {seed} {kind}: recall must be exactly 1");
            pooled[ki].0 += acc.true_pos;
            pooled[ki].1 += acc.false_pos;
            pooled[ki].2 += acc.false_neg;
        }
    }
    for (ki, &kind) in kinds.iter().enumerate() {
        let (tp, fp, _) = pooled[ki];
        let precision = tp as f64 / (tp + fp) as f64;
        assert!(precision >= 0.90, "{kind}: pooled precision {precision} < 0.90");
        println!(
            "criterion 7 PASS ({kind}): recall 1.0, pooled precision {precision:.4} \
             ({fp} extra pairs over {tp} true)"
        );
    }
}

#[test]
fn criterion_8_ev_consistency_and_early_exits() {
    let _lock = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let mut far_total = 0usize;
    let mut far_early = 0usize;
    for case in 0..500 {
        let g = random_graph(&mut rng, 10);
        let opt = hungarian(&g).total_weight;
        // alternate far-low, far-high and near thresholds
        let theta = match case % 4 {
            0 => 0.4 * opt,
            1 => 2.2 * opt + 0.05,
            2 => opt * rng.gen_range(0.9..1.1),
            _ => rng.gen_range(0.0..=(2.0 * opt + 0.1)),
        };
        let far = (theta - opt).abs() >= 0.5 * opt;
        let out = ev_hungarian(&g, theta);
        match out.decision {
            EvDecision::Accept => {
                assert!(opt >= theta - 1e-9, "case {case}: accepted with optimum {opt} < {theta}")
            }
            EvDecision::Reject => {
                assert!(opt < theta + 1e-9, "case {case}: rejected with optimum {opt} >= {theta}")
            }
            EvDecision::Exact => assert!((out.weight_or_bound - opt).abs() <= 1e-9),
        }
        if far {
            far_total += 1;
            if out.early {
                far_early += 1;
            }
        }
    }
    let frac = far_early as f64 / far_total as f64;
    assert!(
        frac >= 0.20,
        "early exits fired on only {far_early}/{far_total} far-threshold instances"
    );
    println!(
        "criterion 8 PASS: 0 misdecisions on 500 instances; early exit on \
         {far_early}/{far_total} ({:.0}%) far-threshold instances",
        frac * 100.0
    );
}

// ---------------------------------------------------------------------------
// Dense corpus for the speed and memory criteria. Copies keep a few
// families of stem+suffix elements whole and most families only partially,
// refilling the dropped slots from fresh families. Rows of a partial
// family all prefer the surviving columns, so the exact matcher resolves
// the contention with deep alternating trees, while the terminating
// variant's upper bound erodes steeply and decides after a fraction of
// the phases.
// ---------------------------------------------------------------------------

const DENSE_SETS: usize = 520;
const DENSE_FAMS_PER_SET: usize = 8;
const DENSE_ELEMS_PER_FAM: usize = 7;
const DENSE_STEM_LEN: usize = 22;
const DENSE_PART_FAMS: usize = 5;
const DENSE_PART_KEEP: usize = 2;
const DENSE_DELTA: f64 = 0.33;

fn rand_word(len: usize, rng: &mut ChaCha8Rng) -> String {
    let letters = b"abcdefghijklmnopqrstuvwxyz";
    (0..len).map(|_| letters[(rng.next_u64() % 26) as usize] as char).collect()
}

fn dense_corpus(seed: u64) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_copies = DENSE_SETS * 4 / 10;
    let n_base = DENSE_SETS - n_copies;
    let mut lines: Vec<String> = Vec::with_capacity(DENSE_SETS);
    // base sets draw fresh families, so only copy clusters share tokens
    let mut base_elems: Vec<Vec<String>> = Vec::with_capacity(n_base);
    for _ in 0..n_base {
        let mut elems = Vec::new();
        for _ in 0..DENSE_FAMS_PER_SET {
            let s = rand_word(DENSE_STEM_LEN, &mut rng);
            for _ in 0..DENSE_ELEMS_PER_FAM {
                elems.push(format!("{}{}", s, rand_word(2, &mut rng)));
            }
        }
        lines.push(elems.join(";"));
        base_elems.push(elems);
    }
    for c in 0..n_copies {
        let src_i = (rng.next_u64() % n_base as u64) as usize;
        let src = &base_elems[src_i];
        let mut elems: Vec<String> = Vec::with_capacity(src.len());
        // 20% of the copies drop slots in only two families: those pairs
        // accept on the initial lower bound and their orphan rows never
        // cost the terminating variant anything. The rest gut five
        // families, and the upper bound takes many phases to erode.
        let part_fams = if c % 20 < 4 { 2 } else { DENSE_PART_FAMS };
        // re-suffix kept elements so raws differ from the source
        for fam in 0..DENSE_FAMS_PER_SET {
            let keep = if fam < part_fams {
                DENSE_PART_KEEP
            } else {
                DENSE_ELEMS_PER_FAM
            };
            for e in 0..DENSE_ELEMS_PER_FAM {
                if e < keep {
                    let base_word = &src[fam * DENSE_ELEMS_PER_FAM + e];
                    let stem_part: String = base_word.chars().take(DENSE_STEM_LEN).collect();
                    elems.push(format!("{}{}", stem_part, rand_word(2, &mut rng)));
                }
            }
        }
        while elems.len() < DENSE_FAMS_PER_SET * DENSE_ELEMS_PER_FAM {
            let s = rand_word(DENSE_STEM_LEN, &mut rng);
            for _ in 0..DENSE_ELEMS_PER_FAM
                .min(DENSE_FAMS_PER_SET * DENSE_ELEMS_PER_FAM - elems.len())
            {
                elems.push(format!("{}{}", s, rand_word(2, &mut rng)));
            }
        }
        lines.push(elems.join(";"));
    }
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    build_collection(refs, &LoadOptions::default()).unwrap()
}

fn median_matching_ms(col: &Collection, kind: MatcherKind) -> (f64, fuzzyjoin::bench::JoinReport) {
    let cfg = JoinConfig::new(DENSE_DELTA, kind, SimilarityKind::Jac);
    let mut times = Vec::new();
    let mut last = None;
    for _ in 0..3 {
        let report = run_join(col, &cfg).unwrap();
        times.push(report.timings.matching_ns);
        last = Some(report);
    }
    times.sort_unstable();
    (times[1] as f64 / 1e6, last.unwrap())
}

#[test]
fn criterion_9_matching_phase_speed_ordering() {
    let _lock = serial();
    let start = Instant::now();
    let col = dense_corpus(9001);
    let avg_elems: f64 =
        col.sets.iter().map(|s| s.len()).sum::<usize>() as f64 / col.len() as f64;
    assert!(avg_elems >= 50.0, "dense corpus must average >= 50 elements, got {avg_elems}");
    assert!(col.len() >= 500);

    let (hg_ms, hg_report) = median_matching_ms(&col, MatcherKind::Hg);
    let (ev_ms, _) = median_matching_ms(&col, MatcherKind::Ev);
    let (gd_ms, _) = median_matching_ms(&col, MatcherKind::Gd);
    let (ld_ms, _) = median_matching_ms(&col, MatcherKind::Ld);
    let (ps_ms, _) = median_matching_ms(&col, MatcherKind::Ps);

    println!(
        "criterion 9 matching-phase medians (ms): hg {hg_ms:.2} ev {ev_ms:.2} \
         gd {gd_ms:.2} ld {ld_ms:.2} ps {ps_ms:.2} | verified pairs {} matched {}",
        hg_report.counters.verified, hg_report.counters.matched
    );
    for (name, t) in [("gd", gd_ms), ("ld", ld_ms), ("ps", ps_ms)] {
        assert!(
            ev_ms >= 1.2 * t,
            "ev ({ev_ms:.3} ms) not at least 1.2x slower than {name} ({t:.3} ms)"
        );
    }
    assert!(hg_ms >= 1.2 * ev_ms, "hg ({hg_ms:.3} ms) not at least 1.2x slower than ev ({ev_ms:.3} ms)");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "budget exceeded: {elapsed:?}");
    println!("criterion 9 PASS: gd/ld/ps < ev < hg with 1.2x gaps in {elapsed:?}");
}

#[test]
fn criterion_10_streaming_storage_savings() {
    let _lock = serial();
    let col = dense_corpus(9002);
    let report =
        run_join(&col, &JoinConfig::new(DENSE_DELTA, MatcherKind::Ps, SimilarityKind::Jac))
            .unwrap();
    let c = &report.counters;
    assert!(c.ps_pairs_streamed > 0, "no pairs reached the streaming matcher");
    let frac = c.ps_pairs_storage_saved as f64 / c.ps_pairs_streamed as f64;
    assert!(
        frac >= 0.90,
        "stack stayed below the full edge count on only {:.1}% of {} streamed pairs",
        frac * 100.0,
        c.ps_pairs_streamed
    );
    println!(
        "criterion 10 PASS: stored-edge peak below full edge count on {:.1}% of {} \
         streamed pairs (max stack {} edges)",
        frac * 100.0,
        c.ps_pairs_streamed,
        c.ps_peak_edges_stored
    );
}

#[test]
fn criterion_11_byte_identical_join_runs() {
    let _lock = serial();
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.txt");
    let col = generate_synthetic_with(&SynthConfig::new(150, 6, 26, 42)).unwrap();
    col.write_text(&corpus_path, ';').unwrap();

    let bin = env!("CARGO_BIN_EXE_fuzzyjoin");
    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args([
                "join",
                "--input",
                corpus_path.to_str().unwrap(),
                "--delta",
                "0.7",
                "--matcher",
                "ps",
                "--sample",
                "0.8",
                "--seed",
                "7",
                "--output",
                out.to_str().unwrap(),
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.csv"));
    let b = run(&dir.path().join("b.csv"));
    assert!(!a.is_empty());
    assert_eq!(a, b, "two identical join invocations differed");
    println!("criterion 11 PASS: byte-identical pairs files across runs");
}
