//! End-to-end join driver, comparison harness and sweep machinery.
//!
//! `run_join` wires the filter pipeline to pair verification and records
//! per-phase timings plus pipeline counters. `run_oracle` is the
//! brute-force reference: every pair, exact matching, no filtering.
//! `run_compare` and `run_sweep` reproduce the accuracy and scaling
//! methodology; `performance_profile` emits best-offset step curves.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::corpus::{sample, Collection};
use crate::error::Error;
use crate::filtering::{build_index, FilterParams, FilterPipeline};
use crate::sim::SimilarityKind;
use crate::verify::{
    verify_pair, verify_pair_ub, MatcherKind, VerifyParams, VerifyPath, VerifyResult,
};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct JoinConfig {
    pub delta: f64,
    pub sim: SimilarityKind,
    pub kind: MatcherKind,
    pub epsilon: f64,
    pub use_positional: bool,
    pub use_joint: bool,
    pub ub_variant: bool,
}

impl JoinConfig {
    pub fn new(delta: f64, kind: MatcherKind, sim: SimilarityKind) -> Self {
        JoinConfig {
            delta,
            sim,
            kind,
            epsilon: 0.001,
            use_positional: true,
            use_joint: true,
            ub_variant: false,
        }
    }

    fn verify_params(&self) -> VerifyParams {
        VerifyParams { delta: self.delta, sim: self.sim, epsilon: self.epsilon }
    }

    fn filter_params(&self) -> FilterParams {
        FilterParams {
            delta: self.delta,
            sim: self.sim,
            use_positional: self.use_positional,
            use_joint: self.use_joint,
        }
    }
}

/// Nanosecond phase accumulators; verification = dedup + graph building +
/// matching.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PhaseTimings {
    pub init_ns: u64,
    pub candidate_gen_ns: u64,
    pub refinement_ns: u64,
    pub dedup_ns: u64,
    pub graph_build_ns: u64,
    pub matching_ns: u64,
}

impl PhaseTimings {
    pub fn verification_ns(&self) -> u64 {
        self.dedup_ns + self.graph_build_ns + self.matching_ns
    }

    pub fn total_ns(&self) -> u64 {
        self.init_ns + self.candidate_gen_ns + self.refinement_ns + self.verification_ns()
    }

    pub fn ms(ns: u64) -> f64 {
        ns as f64 / 1e6
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Counters {
    pub candidates_generated: usize,
    pub pruned_refinement: usize,
    pub verified: usize,
    pub dedup_only: usize,
    pub ub_pruned: usize,
    pub matched: usize,
    pub early_accept: usize,
    pub early_reject: usize,
    /// Pairs whose stream ran to completion.
    pub ps_pairs_streamed: usize,
    /// Streamed pairs whose stack stayed below the full edge count.
    pub ps_pairs_storage_saved: usize,
    /// Largest stack across all streamed pairs.
    pub ps_peak_edges_stored: usize,
    pub ps_edges_offered: usize,
}

impl Counters {
    fn record(&mut self, res: &VerifyResult) {
        self.verified += 1;
        match res.path {
            VerifyPath::DedupOnly => self.dedup_only += 1,
            VerifyPath::UbPruned => self.ub_pruned += 1,
            VerifyPath::Matched => self.matched += 1,
            VerifyPath::EarlyAccept => self.early_accept += 1,
            VerifyPath::EarlyReject => self.early_reject += 1,
        }
        if let Some(st) = &res.stream {
            self.ps_pairs_streamed += 1;
            if st.peak_stored < st.full_edges {
                self.ps_pairs_storage_saved += 1;
            }
            self.ps_peak_edges_stored = self.ps_peak_edges_stored.max(st.peak_stored);
            self.ps_edges_offered += st.edges_offered;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairOut {
    pub r_id: usize,
    pub s_id: usize,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct JoinReport {
    pub pairs: Vec<PairOut>,
    pub timings: PhaseTimings,
    pub counters: Counters,
    pub config: JoinConfig,
}

impl JoinReport {
    pub fn id_pairs(&self) -> HashSet<(usize, usize)> {
        self.pairs.iter().map(|p| (p.r_id, p.s_id)).collect()
    }
}

/// Self-join of the collection under the configured matcher.
pub fn run_join(collection: &Collection, config: &JoinConfig) -> Result<JoinReport> {
    let mut timings = PhaseTimings::default();
    let mut counters = Counters::default();

    let t0 = Instant::now();
    let index = build_index(collection);
    let pipeline = FilterPipeline::new(collection, &index, config.filter_params())?;
    timings.init_ns = t0.elapsed().as_nanos() as u64;

    let vparams = config.verify_params();
    let mut pairs: Vec<PairOut> = Vec::new();

    for query_pos in 0..collection.len() {
        let t = Instant::now();
        let generated = pipeline.generate(query_pos);
        timings.candidate_gen_ns += t.elapsed().as_nanos() as u64;
        let generated_count = generated.len();
        counters.candidates_generated += generated_count;

        let t = Instant::now();
        let kept = pipeline.refine(generated);
        timings.refinement_ns += t.elapsed().as_nanos() as u64;
        counters.pruned_refinement += generated_count - kept.len();

        for cand in kept {
            let r = &collection.sets[cand.r_pos];
            let s = &collection.sets[cand.s_pos];
            let res = if config.ub_variant && config.kind.is_approximate() {
                verify_pair_ub(r, s, &vparams, config.kind)
            } else {
                verify_pair(r, s, &vparams, config.kind)
            };
            timings.dedup_ns += res.timing.dedup_ns;
            timings.graph_build_ns += res.timing.graph_build_ns;
            timings.matching_ns += res.timing.matching_ns;
            counters.record(&res);
            if res.accepted {
                pairs.push(PairOut { r_id: cand.r_id, s_id: cand.s_id, score: res.score });
            }
        }
    }

    pairs.sort_by(|a, b| (a.r_id, a.s_id).cmp(&(b.r_id, b.s_id)));
    Ok(JoinReport { pairs, timings, counters, config: config.clone() })
}

/// Brute-force reference join: all pairs in collection order, verified with
/// the exact matcher, no candidate filtering.
pub fn run_oracle(collection: &Collection, delta: f64, sim: SimilarityKind) -> Result<JoinReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta must be in (0, 1], got {delta}")));
    }
    let config = JoinConfig::new(delta, MatcherKind::Hg, sim);
    let vparams = config.verify_params();
    let mut timings = PhaseTimings::default();
    let mut counters = Counters::default();
    let mut pairs = Vec::new();
    for i in 0..collection.len() {
        for j in (i + 1)..collection.len() {
            let r = &collection.sets[i];
            let s = &collection.sets[j];
            let res = verify_pair(r, s, &vparams, MatcherKind::Hg);
            timings.dedup_ns += res.timing.dedup_ns;
            timings.graph_build_ns += res.timing.graph_build_ns;
            timings.matching_ns += res.timing.matching_ns;
            counters.record(&res);
            if res.accepted {
                pairs.push(PairOut { r_id: r.id, s_id: s.id, score: res.score });
            }
        }
    }
    pairs.sort_by(|a, b| (a.r_id, a.s_id).cmp(&(b.r_id, b.s_id)));
    Ok(JoinReport { pairs, timings, counters, config })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AccuracyReport {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub recall: f64,
    pub precision: f64,
    /// Result size difference: approximate minus exact.
    pub delta_sets: i64,
}

impl AccuracyReport {
    pub fn versus(exact: &JoinReport, approx: &JoinReport) -> AccuracyReport {
        let truth = exact.id_pairs();
        let got = approx.id_pairs();
        let tp = got.intersection(&truth).count();
        let fp = got.len() - tp;
        let fneg = truth.len() - tp;
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        AccuracyReport {
            true_pos: tp,
            false_pos: fp,
            false_neg: fneg,
            recall: ratio(tp, tp + fneg),
            precision: ratio(tp, tp + fp),
            delta_sets: got.len() as i64 - truth.len() as i64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub kind: MatcherKind,
    pub report: JoinReport,
    pub accuracy: AccuracyReport,
}

/// Runs each matcher and scores it against the exact Hungarian result.
///
/// In matching-weight mode every approximate result is a subset of the
/// exact one (precision 1); in upper-bound mode a superset (recall 1).
/// Both facts are asserted on every run.
pub fn run_compare(
    collection: &Collection,
    base: &JoinConfig,
    kinds: &[MatcherKind],
    ub_variant: bool,
) -> Result<Vec<CompareRow>> {
    let exact_cfg = JoinConfig { kind: MatcherKind::Hg, ub_variant: false, ..base.clone() };
    let exact = run_join(collection, &exact_cfg)?;

    let mut rows = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let report = if kind == MatcherKind::Hg {
            exact.clone()
        } else {
            let cfg = JoinConfig { kind, ub_variant, ..base.clone() };
            run_join(collection, &cfg)?
        };
        let accuracy = AccuracyReport::versus(&exact, &report);
        if kind == MatcherKind::Ev {
            assert_eq!(
                accuracy.delta_sets, 0,
                "early-terminating verification must reproduce the exact result"
            );
        }
        if kind.is_approximate() {
            if ub_variant {
                assert_eq!(accuracy.false_neg, 0, "{kind}: upper-bound scoring lost a pair");
            } else {
                assert_eq!(accuracy.false_pos, 0, "{kind}: approximate join produced an extra pair");
            }
        }
        rows.push(CompareRow { kind, report, accuracy });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub fraction: f64,
    pub kind: MatcherKind,
    pub sets: usize,
    pub candidates: usize,
    pub verified: usize,
    pub result_pairs: usize,
    pub init_ms: f64,
    pub candidate_gen_ms: f64,
    pub refinement_ms: f64,
    pub dedup_ms: f64,
    pub graph_build_ms: f64,
    pub matching_ms: f64,
    pub verification_ms: f64,
    pub total_ms: f64,
    pub recall: f64,
    pub precision: f64,
    pub delta_sets: i64,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub sim: SimilarityKind,
    pub kinds: Vec<MatcherKind>,
    pub deltas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub seed: u64,
    /// Timing repeats per cell; the median run is reported.
    pub repeats: usize,
    pub epsilon: f64,
    pub use_positional: bool,
    pub use_joint: bool,
    pub ub_variant: bool,
}

impl SweepOptions {
    pub fn new(sim: SimilarityKind, kinds: Vec<MatcherKind>) -> Self {
        SweepOptions {
            sim,
            kinds,
            deltas: vec![0.7],
            fractions: vec![1.0],
            seed: 0,
            repeats: 3,
            epsilon: 0.001,
            use_positional: true,
            use_joint: true,
            ub_variant: false,
        }
    }
}

fn median_run(
    collection: &Collection,
    config: &JoinConfig,
    repeats: usize,
) -> Result<JoinReport> {
    let mut runs = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        runs.push(run_join(collection, config)?);
    }
    // identical pairs across repeats; pick the median by total time
    runs.sort_by_key(|r| r.timings.total_ns());
    Ok(runs.swap_remove(runs.len() / 2))
}

/// Cross product of (fraction, delta, kind). The sample for a fraction is
/// seeded once so every kind sees the same subset, and each cell reports
/// the median timings of `repeats` runs. Accuracy is always measured
/// against an exact run of the same cell.
pub fn run_sweep(collection: &Collection, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if opts.kinds.is_empty() || opts.deltas.is_empty() || opts.fractions.is_empty() {
        return Err(Error::InvalidArgument("sweep lists must be non-empty".into()));
    }
    let mut rows = Vec::new();
    for &fraction in &opts.fractions {
        let sampled;
        let subject = if fraction >= 1.0 {
            collection
        } else {
            let frac_seed = opts.seed.wrapping_add(fraction.to_bits());
            sampled = sample(collection, fraction, frac_seed)?;
            &sampled
        };
        for &delta in &opts.deltas {
            let mut base = JoinConfig::new(delta, MatcherKind::Hg, opts.sim);
            base.epsilon = opts.epsilon;
            base.use_positional = opts.use_positional;
            base.use_joint = opts.use_joint;

            let exact = median_run(subject, &base, opts.repeats)?;
            for &kind in &opts.kinds {
                let report = if kind == MatcherKind::Hg {
                    exact.clone()
                } else {
                    let cfg = JoinConfig {
                        kind,
                        ub_variant: opts.ub_variant && kind.is_approximate(),
                        ..base.clone()
                    };
                    median_run(subject, &cfg, opts.repeats)?
                };
                let acc = AccuracyReport::versus(&exact, &report);
                let t = &report.timings;
                rows.push(SweepRow {
                    delta,
                    fraction,
                    kind,
                    sets: subject.len(),
                    candidates: report.counters.candidates_generated,
                    verified: report.counters.verified,
                    result_pairs: report.pairs.len(),
                    init_ms: PhaseTimings::ms(t.init_ns),
                    candidate_gen_ms: PhaseTimings::ms(t.candidate_gen_ns),
                    refinement_ms: PhaseTimings::ms(t.refinement_ns),
                    dedup_ms: PhaseTimings::ms(t.dedup_ns),
                    graph_build_ms: PhaseTimings::ms(t.graph_build_ns),
                    matching_ms: PhaseTimings::ms(t.matching_ns),
                    verification_ms: PhaseTimings::ms(t.verification_ns()),
                    total_ms: PhaseTimings::ms(t.total_ns()),
                    recall: acc.recall,
                    precision: acc.precision,
                    delta_sets: acc.delta_sets,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfilePoint {
    pub kind: MatcherKind,
    pub offset_seconds: f64,
    pub cum_fraction: f64,
}

/// Performance profile: per instance, every kind's time is offset by the
/// best kind on that instance; each kind gets a cumulative step curve over
/// instances sorted by offset.
pub fn performance_profile(instances: &[Vec<(MatcherKind, f64)>]) -> Vec<ProfilePoint> {
    let mut per_kind: std::collections::HashMap<MatcherKind, Vec<f64>> =
        std::collections::HashMap::new();
    let mut n_instances = 0usize;
    for times in instances {
        if times.len() < 2 {
            continue;
        }
        n_instances += 1;
        let best = times.iter().map(|&(_, t)| t).fold(f64::INFINITY, f64::min);
        for &(kind, t) in times {
            per_kind.entry(kind).or_default().push(t - best);
        }
    }
    let mut points = Vec::new();
    let mut kinds: Vec<MatcherKind> = per_kind.keys().copied().collect();
    kinds.sort_by_key(|k| k.to_string());
    for kind in kinds {
        let offsets = per_kind.get_mut(&kind).unwrap();
        offsets.sort_by(f64::total_cmp);
        for (i, &off) in offsets.iter().enumerate() {
            points.push(ProfilePoint {
                kind,
                offset_seconds: off,
                cum_fraction: (i + 1) as f64 / n_instances as f64,
            });
        }
    }
    points
}

/// Speedup of each kind against the exact rows of the same sweep cells,
/// on verification time, as both geometric and arithmetic means.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedupSummary {
    pub kind: MatcherKind,
    pub geo_mean_speedup_vs_hg: f64,
    pub arith_mean_speedup_vs_hg: f64,
    pub cells: usize,
}

pub fn summarize_speedups(rows: &[SweepRow]) -> Vec<SpeedupSummary> {
    let hg_time = |delta: f64, fraction: f64| -> Option<f64> {
        rows.iter()
            .find(|r| r.kind == MatcherKind::Hg && r.delta == delta && r.fraction == fraction)
            .map(|r| r.verification_ms)
    };
    let mut kinds: Vec<MatcherKind> = rows.iter().map(|r| r.kind).collect();
    kinds.sort_by_key(|k| k.to_string());
    kinds.dedup();
    let mut out = Vec::new();
    for kind in kinds {
        if kind == MatcherKind::Hg {
            continue;
        }
        let mut ratios = Vec::new();
        for row in rows.iter().filter(|r| r.kind == kind) {
            if let Some(hg) = hg_time(row.delta, row.fraction) {
                if row.verification_ms > 0.0 && hg > 0.0 {
                    ratios.push(hg / row.verification_ms);
                }
            }
        }
        if ratios.is_empty() {
            continue;
        }
        let geo = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
        let arith = ratios.iter().sum::<f64>() / ratios.len() as f64;
        out.push(SpeedupSummary {
            kind,
            geo_mean_speedup_vs_hg: geo,
            arith_mean_speedup_vs_hg: arith,
            cells: ratios.len(),
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

pub fn pairs_to_csv(pairs: &[PairOut]) -> String {
    let mut out = String::from("r_id,s_id,score\n");
    for p in pairs {
        out.push_str(&format!("{},{},{}\n", p.r_id, p.s_id, p.score));
    }
    out
}

pub fn write_pairs_csv(path: &Path, pairs: &[PairOut]) -> Result<()> {
    write_file(path, &pairs_to_csv(pairs))
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: &'static str,
    config: &'a JoinConfig,
    result_pairs: usize,
    timings_ms: TimingsMs,
    counters: &'a Counters,
}

#[derive(Serialize)]
struct TimingsMs {
    init: f64,
    candidate_gen: f64,
    refinement: f64,
    dedup: f64,
    graph_build: f64,
    matching: f64,
    verification: f64,
    total: f64,
}

impl From<&PhaseTimings> for TimingsMs {
    fn from(t: &PhaseTimings) -> Self {
        TimingsMs {
            init: PhaseTimings::ms(t.init_ns),
            candidate_gen: PhaseTimings::ms(t.candidate_gen_ns),
            refinement: PhaseTimings::ms(t.refinement_ns),
            dedup: PhaseTimings::ms(t.dedup_ns),
            graph_build: PhaseTimings::ms(t.graph_build_ns),
            matching: PhaseTimings::ms(t.matching_ns),
            verification: PhaseTimings::ms(t.verification_ns()),
            total: PhaseTimings::ms(t.total_ns()),
        }
    }
}

pub fn report_to_json(report: &JoinReport) -> String {
    let doc = ReportJson {
        schema: "fuzzyjoin-report-v1",
        config: &report.config,
        result_pairs: report.pairs.len(),
        timings_ms: TimingsMs::from(&report.timings),
        counters: &report.counters,
    };
    serde_json::to_string_pretty(&doc).expect("report serialization")
}

pub fn write_report_json(path: &Path, report: &JoinReport) -> Result<()> {
    write_file(path, &report_to_json(report))
}

pub fn report_to_csv(report: &JoinReport) -> String {
    let t = &report.timings;
    let mut out = String::from(
        "version,kind,sim,delta,result_pairs,candidates,verified,init_ms,candidate_gen_ms,\
         refinement_ms,dedup_ms,graph_build_ms,matching_ms,verification_ms,total_ms\n",
    );
    out.push_str(&format!(
        "1,{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.config.kind,
        report.config.sim,
        report.config.delta,
        report.pairs.len(),
        report.counters.candidates_generated,
        report.counters.verified,
        PhaseTimings::ms(t.init_ns),
        PhaseTimings::ms(t.candidate_gen_ns),
        PhaseTimings::ms(t.refinement_ns),
        PhaseTimings::ms(t.dedup_ns),
        PhaseTimings::ms(t.graph_build_ns),
        PhaseTimings::ms(t.matching_ns),
        PhaseTimings::ms(t.verification_ns()),
        PhaseTimings::ms(t.total_ns()),
    ));
    out
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "version,delta,fraction,kind,sets,candidates,verified,result_pairs,init_ms,\
         candidate_gen_ms,refinement_ms,dedup_ms,graph_build_ms,matching_ms,verification_ms,\
         total_ms,recall,precision,delta_sets\n",
    );
    for r in rows {
        out.push_str(&format!(
            "1,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.delta,
            r.fraction,
            r.kind,
            r.sets,
            r.candidates,
            r.verified,
            r.result_pairs,
            r.init_ms,
            r.candidate_gen_ms,
            r.refinement_ms,
            r.dedup_ms,
            r.graph_build_ms,
            r.matching_ms,
            r.verification_ms,
            r.total_ms,
            r.recall,
            r.precision,
            r.delta_sets,
        ));
    }
    out
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_file(path, &sweep_to_csv(rows))
}

pub fn profile_to_csv(points: &[ProfilePoint]) -> String {
    let mut out = String::from("version,kind,offset_seconds,cum_fraction\n");
    for p in points {
        out.push_str(&format!("1,{},{},{}\n", p.kind, p.offset_seconds, p.cum_fraction));
    }
    out
}

pub fn write_profile_csv(path: &Path, points: &[ProfilePoint]) -> Result<()> {
    write_file(path, &profile_to_csv(points))
}

pub fn summary_to_csv(rows: &[SpeedupSummary]) -> String {
    let mut out =
        String::from("version,kind,geo_mean_speedup_vs_hg,arith_mean_speedup_vs_hg,cells\n");
    for r in rows {
        out.push_str(&format!(
            "1,{},{},{},{}\n",
            r.kind, r.geo_mean_speedup_vs_hg, r.arith_mean_speedup_vs_hg, r.cells
        ));
    }
    out
}
