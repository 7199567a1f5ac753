//! Pair verification: dedup, graph building with a running upper bound,
//! matcher dispatch, and the streaming-integrated variant.
//!
//! A pair is scored as W / (|R| + |S| - W) where W is the exact-duplicate
//! overlap plus the weight of a matching over the residual elements. While
//! the graph is built, an upper bound on W starts at |R| and loses
//! (1 - max row weight) per row; the pair is dropped as soon as the bound
//! falls under the pair threshold, which implies the score cannot reach
//! the join threshold.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{Element, SetRecord};
use crate::filtering::pair_threshold;
use crate::matching::{
    ev_hungarian, greedy_matching, hungarian, locally_dominant_matching, BipartiteGraph,
    EvDecision, StreamState,
};
use crate::sim::{element_sim, SimilarityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherKind {
    Hg,
    Ev,
    Gd,
    Ld,
    Ps,
}

impl MatcherKind {
    pub fn is_approximate(self) -> bool {
        matches!(self, MatcherKind::Gd | MatcherKind::Ld | MatcherKind::Ps)
    }

    pub const ALL: [MatcherKind; 5] = [
        MatcherKind::Hg,
        MatcherKind::Ev,
        MatcherKind::Gd,
        MatcherKind::Ld,
        MatcherKind::Ps,
    ];
}

impl std::fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MatcherKind::Hg => "hg",
            MatcherKind::Ev => "ev",
            MatcherKind::Gd => "gd",
            MatcherKind::Ld => "ld",
            MatcherKind::Ps => "ps",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for MatcherKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hg" => Ok(MatcherKind::Hg),
            "ev" => Ok(MatcherKind::Ev),
            "gd" => Ok(MatcherKind::Gd),
            "ld" => Ok(MatcherKind::Ld),
            "ps" => Ok(MatcherKind::Ps),
            other => Err(crate::Error::InvalidArgument(format!("unknown matcher '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyPath {
    DedupOnly,
    UbPruned,
    Matched,
    EarlyAccept,
    EarlyReject,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyTiming {
    pub dedup_ns: u64,
    pub graph_build_ns: u64,
    pub matching_ns: u64,
}

/// Storage counters of one streamed pair.
#[derive(Debug, Clone, Copy)]
pub struct StreamStats {
    pub edges_offered: usize,
    pub peak_stored: usize,
    /// Edge count of the residual graph had it been materialized.
    pub full_edges: usize,
}

#[derive(Debug, Clone)]
pub struct VerifyResult {
    pub score: f64,
    pub accepted: bool,
    pub path: VerifyPath,
    /// Residual matching weight (or the bound credited on bound-based
    /// paths); the dedup overlap is not included.
    pub matching_weight: f64,
    pub overlap: usize,
    pub timing: VerifyTiming,
    pub stream: Option<StreamStats>,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyParams {
    pub delta: f64,
    pub sim: SimilarityKind,
    pub epsilon: f64,
}

impl VerifyParams {
    pub fn new(delta: f64, sim: SimilarityKind) -> Self {
        VerifyParams { delta, sim, epsilon: 0.001 }
    }
}

/// Smaller set first; ties by id so equal-sized pairs orient the same way
/// regardless of argument order.
fn orient<'a>(r: &'a SetRecord, s: &'a SetRecord) -> (&'a SetRecord, &'a SetRecord) {
    if (r.len(), r.id) <= (s.len(), s.id) {
        (r, s)
    } else {
        (s, r)
    }
}

pub fn score_from_weight(w_m: f64, size_r: usize, size_s: usize) -> f64 {
    w_m / (size_r as f64 + size_s as f64 - w_m)
}

/// Exact-duplicate removal on raw strings (multiset semantics). Returns
/// the overlap count and both residual element lists in stored order.
pub fn deduplicate<'a>(
    r: &'a SetRecord,
    s: &'a SetRecord,
) -> (usize, Vec<&'a Element>, Vec<&'a Element>) {
    let mut remaining: HashMap<&str, usize> = HashMap::with_capacity(s.len());
    for e in &s.elements {
        *remaining.entry(e.raw.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    let mut consumed: HashMap<&str, usize> = HashMap::new();
    let mut r_d: Vec<&Element> = Vec::new();
    for e in &r.elements {
        match remaining.get_mut(e.raw.as_str()) {
            Some(c) if *c > 0 => {
                *c -= 1;
                *consumed.entry(e.raw.as_str()).or_insert(0) += 1;
                overlap += 1;
            }
            _ => r_d.push(e),
        }
    }
    let mut s_d: Vec<&Element> = Vec::new();
    for e in &s.elements {
        match consumed.get_mut(e.raw.as_str()) {
            Some(c) if *c > 0 => *c -= 1,
            _ => s_d.push(e),
        }
    }
    (overlap, r_d, s_d)
}

fn dedup_only_result(
    overlap: usize,
    size_r: usize,
    size_s: usize,
    delta: f64,
    timing: VerifyTiming,
) -> VerifyResult {
    let score = score_from_weight(overlap as f64, size_r, size_s);
    VerifyResult {
        score,
        accepted: score >= delta,
        path: VerifyPath::DedupOnly,
        matching_weight: 0.0,
        overlap,
        timing,
        stream: None,
    }
}

fn ub_pruned_result(
    overlap: usize,
    ub: f64,
    size_r: usize,
    size_s: usize,
    timing: VerifyTiming,
) -> VerifyResult {
    VerifyResult {
        score: score_from_weight(ub.max(0.0), size_r, size_s),
        accepted: false,
        path: VerifyPath::UbPruned,
        matching_weight: 0.0,
        overlap,
        timing,
        stream: None,
    }
}

/// Outcome of the shared dedup + bounded graph-building front end.
enum FrontEnd {
    Done(VerifyResult),
    Graph { overlap: usize, graph: BipartiteGraph, timing: VerifyTiming },
}

/// Dedup, then build the residual graph row by row while tracking the
/// upper bound; exits early when the bound drops under the pair threshold.
fn front_end(r: &SetRecord, s: &SetRecord, params: &VerifyParams) -> FrontEnd {
    let (size_r, size_s) = (r.len(), s.len());
    let theta_r = pair_threshold(size_r, size_s, params.delta);
    let mut timing = VerifyTiming::default();

    let t = Instant::now();
    let (overlap, r_d, s_d) = deduplicate(r, s);
    timing.dedup_ns = t.elapsed().as_nanos() as u64;

    if r_d.is_empty() {
        return FrontEnd::Done(dedup_only_result(overlap, size_r, size_s, params.delta, timing));
    }

    let t = Instant::now();
    let mut graph = BipartiteGraph::new(r_d.len(), s_d.len());
    let mut ub = size_r as f64;
    for (li, re) in r_d.iter().enumerate() {
        let mut max_s = 0.0f64;
        for (ri, se) in s_d.iter().enumerate() {
            let w = element_sim(params.sim, re, se);
            graph.set_weight(li, ri, w);
            max_s = max_s.max(w);
        }
        ub -= 1.0 - max_s;
        if theta_r > ub {
            timing.graph_build_ns = t.elapsed().as_nanos() as u64;
            return FrontEnd::Done(ub_pruned_result(overlap, ub, size_r, size_s, timing));
        }
    }
    timing.graph_build_ns = t.elapsed().as_nanos() as u64;
    FrontEnd::Graph { overlap, graph, timing }
}

/// Scores one pair with the requested matcher.
pub fn verify_pair(
    r: &SetRecord,
    s: &SetRecord,
    params: &VerifyParams,
    kind: MatcherKind,
) -> VerifyResult {
    let (r, s) = orient(r, s);
    if kind == MatcherKind::Ps {
        return verify_pair_ps(r, s, params);
    }
    let (size_r, size_s) = (r.len(), s.len());
    let (overlap, graph, mut timing) = match front_end(r, s, params) {
        FrontEnd::Done(res) => return res,
        FrontEnd::Graph { overlap, graph, timing } => (overlap, graph, timing),
    };

    let t = Instant::now();
    let (score, path, weight) = match kind {
        MatcherKind::Hg | MatcherKind::Gd | MatcherKind::Ld => {
            let w = match kind {
                MatcherKind::Hg => hungarian(&graph).total_weight,
                MatcherKind::Gd => greedy_matching(&graph).total_weight,
                _ => locally_dominant_matching(&graph).total_weight,
            };
            let score = score_from_weight(overlap as f64 + w, size_r, size_s);
            (score, VerifyPath::Matched, w)
        }
        MatcherKind::Ev => {
            // Threshold net of the dedup credit: the residual matching
            // alone must make up the rest.
            let theta_res = pair_threshold(size_r, size_s, params.delta) - overlap as f64;
            let out = ev_hungarian(&graph, theta_res);
            let score =
                score_from_weight(overlap as f64 + out.weight_or_bound, size_r, size_s);
            let path = match out.decision {
                EvDecision::Accept => VerifyPath::EarlyAccept,
                EvDecision::Reject => VerifyPath::EarlyReject,
                EvDecision::Exact => VerifyPath::Matched,
            };
            (score, path, out.weight_or_bound)
        }
        MatcherKind::Ps => unreachable!(),
    };
    timing.matching_ns = t.elapsed().as_nanos() as u64;

    VerifyResult {
        score,
        accepted: score >= params.delta,
        path,
        matching_weight: weight,
        overlap,
        timing,
        stream: None,
    }
}

/// Streaming-integrated verification: every edge weight is offered to the
/// stream the moment it is computed and only stack survivors are stored.
/// Dedup and upper-bound early exits behave exactly like [`verify_pair`].
pub fn verify_pair_ps(r: &SetRecord, s: &SetRecord, params: &VerifyParams) -> VerifyResult {
    let (r, s) = orient(r, s);
    match stream_pair(r, s, params) {
        Streamed::Done(res) => res,
        Streamed::Complete { overlap, state, mut timing, full_edges } => {
            let (size_r, size_s) = (r.len(), s.len());
            let t = Instant::now();
            let out = state.finalize();
            timing.matching_ns = t.elapsed().as_nanos() as u64;
            let score =
                score_from_weight(overlap as f64 + out.matching.total_weight, size_r, size_s);
            VerifyResult {
                score,
                accepted: score >= params.delta,
                path: VerifyPath::Matched,
                matching_weight: out.matching.total_weight,
                overlap,
                timing,
                stream: Some(StreamStats {
                    edges_offered: out.edges_offered,
                    peak_stored: out.peak_stack,
                    full_edges,
                }),
            }
        }
    }
}

enum Streamed {
    Done(VerifyResult),
    Complete { overlap: usize, state: StreamState, timing: VerifyTiming, full_edges: usize },
}

/// Shared dedup + fused stream loop of the integrated path. The fused loop
/// is attributed to graph building; only finalization counts as matching.
fn stream_pair(r: &SetRecord, s: &SetRecord, params: &VerifyParams) -> Streamed {
    let (size_r, size_s) = (r.len(), s.len());
    let theta_r = pair_threshold(size_r, size_s, params.delta);
    let mut timing = VerifyTiming::default();

    let t = Instant::now();
    let (overlap, r_d, s_d) = deduplicate(r, s);
    timing.dedup_ns = t.elapsed().as_nanos() as u64;

    if r_d.is_empty() {
        return Streamed::Done(dedup_only_result(overlap, size_r, size_s, params.delta, timing));
    }

    let t = Instant::now();
    let mut state = StreamState::new(r_d.len(), s_d.len(), params.epsilon);
    let mut ub = size_r as f64;
    for (li, re) in r_d.iter().enumerate() {
        let mut max_s = 0.0f64;
        for (ri, se) in s_d.iter().enumerate() {
            let w = element_sim(params.sim, re, se);
            state.push(li, ri, w);
            max_s = max_s.max(w);
        }
        ub -= 1.0 - max_s;
        if theta_r > ub {
            timing.graph_build_ns = t.elapsed().as_nanos() as u64;
            return Streamed::Done(ub_pruned_result(overlap, ub, size_r, size_s, timing));
        }
    }
    timing.graph_build_ns = t.elapsed().as_nanos() as u64;
    let full_edges = r_d.len() * s_d.len();
    Streamed::Complete { overlap, state, timing, full_edges }
}

/// Upper-bound scoring variant for approximate matchers: credits twice the
/// half-approximate weight (or the scaled dual total for the streaming
/// matcher), capped at min(|R|, |S|). The credited weight never falls
/// below the true matching weight, so everything the exact join accepts
/// is accepted here too.
pub fn verify_pair_ub(
    r: &SetRecord,
    s: &SetRecord,
    params: &VerifyParams,
    kind: MatcherKind,
) -> VerifyResult {
    assert!(kind.is_approximate(), "upper-bound scoring needs gd, ld or ps");
    let (r, s) = orient(r, s);
    let (size_r, size_s) = (r.len(), s.len());

    if kind == MatcherKind::Ps {
        return match stream_pair(r, s, params) {
            Streamed::Done(res) => res,
            Streamed::Complete { overlap, state, mut timing, full_edges } => {
                let t = Instant::now();
                let bound = (1.0 + params.epsilon) * state.dual_sum();
                let out = state.finalize();
                timing.matching_ns = t.elapsed().as_nanos() as u64;
                let m_hat = (overlap as f64 + bound).min(size_r.min(size_s) as f64);
                let score = score_from_weight(m_hat, size_r, size_s);
                VerifyResult {
                    score,
                    accepted: score >= params.delta,
                    path: VerifyPath::Matched,
                    matching_weight: m_hat - overlap as f64,
                    overlap,
                    timing,
                    stream: Some(StreamStats {
                        edges_offered: out.edges_offered,
                        peak_stored: out.peak_stack,
                        full_edges,
                    }),
                }
            }
        };
    }

    let (overlap, graph, mut timing) = match front_end(r, s, params) {
        FrontEnd::Done(res) => return res,
        FrontEnd::Graph { overlap, graph, timing } => (overlap, graph, timing),
    };
    let t = Instant::now();
    let w = match kind {
        MatcherKind::Gd => greedy_matching(&graph).total_weight,
        MatcherKind::Ld => locally_dominant_matching(&graph).total_weight,
        _ => unreachable!(),
    };
    let m_hat = (overlap as f64 + 2.0 * w).min(size_r.min(size_s) as f64);
    timing.matching_ns = t.elapsed().as_nanos() as u64;
    let score = score_from_weight(m_hat, size_r, size_s);
    VerifyResult {
        score,
        accepted: score >= params.delta,
        path: VerifyPath::Matched,
        matching_weight: m_hat - overlap as f64,
        overlap,
        timing,
        stream: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_collection, Collection, LoadOptions};

    fn corpus(lines: &[&str]) -> Collection {
        build_collection(lines.iter().copied(), &LoadOptions::default()).unwrap()
    }

    fn by_id(col: &Collection, id: usize) -> &SetRecord {
        col.sets.iter().find(|s| s.id == id).unwrap()
    }

    #[test]
    fn dedup_examples() {
        let col = corpus(&["abc;xyz", "abc;xyw"]);
        let r = by_id(&col, 0);
        let s = by_id(&col, 1);
        let (ov, rd, sd) = deduplicate(r, s);
        assert_eq!(ov, 1);
        assert_eq!(rd.iter().map(|e| e.raw.as_str()).collect::<Vec<_>>(), vec!["xyz"]);
        assert_eq!(sd.iter().map(|e| e.raw.as_str()).collect::<Vec<_>>(), vec!["xyw"]);

        let (ov2, rd2, sd2) = deduplicate(r, r);
        assert_eq!(ov2, r.len());
        assert!(rd2.is_empty() && sd2.is_empty());

        let col2 = corpus(&["aaa;bbb", "ccc;ddd"]);
        let (ov3, rd3, sd3) = deduplicate(by_id(&col2, 0), by_id(&col2, 1));
        assert_eq!(ov3, 0);
        assert_eq!(rd3.len(), 2);
        assert_eq!(sd3.len(), 2);
    }

    #[test]
    fn identical_sets_score_one() {
        let col = corpus(&["abcd;efgh", "abcd;efgh"]);
        for kind in MatcherKind::ALL {
            let params = VerifyParams::new(0.7, SimilarityKind::Jac);
            let res = verify_pair(by_id(&col, 0), by_id(&col, 1), &params, kind);
            assert_eq!(res.score, 1.0);
            assert!(res.accepted);
            assert_eq!(res.path, VerifyPath::DedupOnly);
        }
    }

    #[test]
    fn disjoint_tokens_ub_pruned() {
        let col = corpus(&["abc", "abd"]);
        let params = VerifyParams::new(0.9, SimilarityKind::Jac);
        let res = verify_pair(by_id(&col, 0), by_id(&col, 1), &params, MatcherKind::Hg);
        assert_eq!(res.path, VerifyPath::UbPruned);
        assert!(!res.accepted);
        assert_eq!(res.score, 0.0);
    }

    #[test]
    fn single_shared_gram_scores_point_two() {
        let col = corpus(&["abcd", "abce"]);
        let params = VerifyParams::new(0.1, SimilarityKind::Jac);
        let res = verify_pair(by_id(&col, 0), by_id(&col, 1), &params, MatcherKind::Hg);
        assert_eq!(res.path, VerifyPath::Matched);
        assert!((res.matching_weight - 1.0 / 3.0).abs() < 1e-12);
        assert!((res.score - 0.2).abs() < 1e-12);
        assert!(res.accepted);
    }

    #[test]
    fn score_formula_arithmetic() {
        assert!((score_from_weight(1.1, 2, 2) - 1.1 / 2.9).abs() < 1e-15);
        assert_eq!(score_from_weight(2.0, 2, 2), 1.0);
        assert_eq!(score_from_weight(0.0, 3, 5), 0.0);
    }

    #[test]
    fn ps_path_equals_streaming_full_graph() {
        let col = corpus(&[
            "abcdef;ghijkl;mnopqr",
            "abcdxf;ghijkl;mnopyr",
            "zzzzzz;yyyyyy",
        ]);
        let params = VerifyParams { delta: 0.3, sim: SimilarityKind::Jac, epsilon: 0.0 };
        for i in 0..col.len() {
            for j in (i + 1)..col.len() {
                let (r, s) = orient(&col.sets[i], &col.sets[j]);
                let res = verify_pair_ps(r, s, &params);
                if res.path != VerifyPath::Matched {
                    continue;
                }
                let (ov, rd, sd) = deduplicate(r, s);
                let mut st = StreamState::new(rd.len(), sd.len(), 0.0);
                for (li, re) in rd.iter().enumerate() {
                    for (ri, se) in sd.iter().enumerate() {
                        st.push(li, ri, element_sim(params.sim, re, se));
                    }
                }
                let out = st.finalize();
                let expect =
                    score_from_weight(ov as f64 + out.matching.total_weight, r.len(), s.len());
                assert_eq!(res.score, expect);
            }
        }
    }

    #[test]
    fn approx_scores_never_exceed_exact() {
        let col = corpus(&[
            "abcdef;ghijkl;mnopqr;stuvwx",
            "abcdxf;ghijkl;mnopyr;stuvwz",
            "abcdef;ghijkl;zzzzzz;stuvwx",
        ]);
        let params = VerifyParams::new(0.1, SimilarityKind::Jac);
        for i in 0..col.len() {
            for j in (i + 1)..col.len() {
                let exact = verify_pair(&col.sets[i], &col.sets[j], &params, MatcherKind::Hg);
                for kind in [MatcherKind::Gd, MatcherKind::Ld, MatcherKind::Ps] {
                    let approx = verify_pair(&col.sets[i], &col.sets[j], &params, kind);
                    assert!(
                        approx.score <= exact.score + 1e-9,
                        "{kind} exceeded exact: {} > {}",
                        approx.score,
                        exact.score
                    );
                }
            }
        }
    }

    #[test]
    fn ub_variant_dominates_exact() {
        let col = corpus(&[
            "abcdef;ghijkl;mnopqr;stuvwx",
            "abcdxf;ghijkl;mnopyr;stuvwz",
            "abcdef;ghijkl;zzzzzz;stuvwx",
        ]);
        let params = VerifyParams::new(0.1, SimilarityKind::Jac);
        for i in 0..col.len() {
            for j in (i + 1)..col.len() {
                let exact = verify_pair(&col.sets[i], &col.sets[j], &params, MatcherKind::Hg);
                if exact.path == VerifyPath::UbPruned {
                    continue; // the variant prunes identically
                }
                for kind in [MatcherKind::Gd, MatcherKind::Ld, MatcherKind::Ps] {
                    let ub = verify_pair_ub(&col.sets[i], &col.sets[j], &params, kind);
                    assert!(
                        ub.score >= exact.score - 1e-9,
                        "{kind} under-credited: {} < {}",
                        ub.score,
                        exact.score
                    );
                    assert!(ub.score <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ub_variant_caps_at_min_size() {
        // residual weights are all high, so twice the greedy weight
        // overshoots |R| and the cap takes over
        let col = corpus(&["abcdefgh;ijklmnop", "abcdefgx;ijklmnoy"]);
        let params = VerifyParams::new(0.5, SimilarityKind::Jac);
        let res = verify_pair_ub(by_id(&col, 0), by_id(&col, 1), &params, MatcherKind::Gd);
        assert!(res.score <= 1.0);
        assert!(res.matching_weight + res.overlap as f64 <= 2.0 + 1e-12);
    }

    #[test]
    fn orientation_is_symmetric() {
        let col = corpus(&["abcdef;ghijkl", "abcdxf;ghijkl;mnopqr"]);
        let params = VerifyParams::new(0.2, SimilarityKind::Jac);
        for kind in MatcherKind::ALL {
            let a = verify_pair(&col.sets[0], &col.sets[1], &params, kind);
            let b = verify_pair(&col.sets[1], &col.sets[0], &params, kind);
            assert_eq!(a.score, b.score, "kind {kind}");
            assert_eq!(a.accepted, b.accepted);
        }
    }

    #[test]
    fn ev_decisions_match_exact_verdict() {
        let col = corpus(&[
            "abcdef;ghijkl;mnopqr",
            "abcdxf;ghijkl;mnopyr",
            "abcdef;ghijkl;mnopqr;stuvwx",
            "qqqqqq;wwwwww;eeeeee",
        ]);
        for delta in [0.3, 0.5, 0.7, 0.9] {
            let params = VerifyParams::new(delta, SimilarityKind::Jac);
            for i in 0..col.len() {
                for j in (i + 1)..col.len() {
                    let hg = verify_pair(&col.sets[i], &col.sets[j], &params, MatcherKind::Hg);
                    let ev = verify_pair(&col.sets[i], &col.sets[j], &params, MatcherKind::Ev);
                    assert_eq!(hg.accepted, ev.accepted, "delta {delta} pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn neds_verification_scores_residual_edit_similarity() {
        let col = corpus(&["kitten;mitten", "sitting;mitten"]);
        let params = VerifyParams::new(0.5, SimilarityKind::Neds);
        let res = verify_pair(by_id(&col, 0), by_id(&col, 1), &params, MatcherKind::Hg);
        let w = 1.0 + (1.0 - 3.0 / 7.0);
        let expect = score_from_weight(w, 2, 2);
        assert!((res.score - expect).abs() < 1e-12);
    }
}
