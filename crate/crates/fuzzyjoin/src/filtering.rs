//! Candidate generation and refinement over a token inverted index.
//!
//! Generation walks the query's tokens (rarest first) through posting
//! lists, accumulating per-candidate utility, and stops once the utility
//! still attainable drops under the generation threshold. Refinement
//! recomputes a per-pair upper bound against the concrete candidate and
//! prunes pairs that cannot reach the pair threshold. Every bound here
//! over-estimates the true matching score, so filtering never discards a
//! pair that belongs to the join result.
//!
//! All threshold comparisons lean inclusive by a small epsilon: a filter
//! may only ever over-include.

use std::collections::HashMap;

use crate::corpus::Collection;
use crate::error::Error;
use crate::sim::SimilarityKind;
use crate::Result;

const FILTER_EPS: f64 = 1e-9;

/// Matching weight needed for the pair score to reach delta:
/// delta / (1 + delta) * (|R| + |S|).
pub fn pair_threshold(size_r: usize, size_s: usize, delta: f64) -> f64 {
    delta / (1.0 + delta) * (size_r as f64 + size_s as f64)
}

/// Normalized stopping bound for candidate generation: 2 delta / (1 + delta).
pub fn generation_threshold(delta: f64) -> f64 {
    2.0 * delta / (1.0 + delta)
}

#[derive(Debug, Clone, Copy)]
pub struct PostingEntry {
    /// Position of the set in the collection's (size, id) order.
    pub set_pos: usize,
    pub elem_idx: u32,
    /// Rank of the token within its element's sorted token list.
    pub token_rank: u32,
}

/// Token id -> postings, each list ascending by set size then id (inherited
/// from the collection order).
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    pub postings: Vec<Vec<PostingEntry>>,
}

impl InvertedIndex {
    pub fn entry_count(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }
}

pub fn build_index(collection: &Collection) -> InvertedIndex {
    let mut postings: Vec<Vec<PostingEntry>> = vec![Vec::new(); collection.token_dict.len()];
    for (pos, set) in collection.sets.iter().enumerate() {
        for (ei, elem) in set.elements.iter().enumerate() {
            for (rank, &t) in elem.tokens.iter().enumerate() {
                postings[t as usize].push(PostingEntry {
                    set_pos: pos,
                    elem_idx: ei as u32,
                    token_rank: rank as u32,
                });
            }
        }
    }
    InvertedIndex { postings }
}

#[derive(Debug, Clone)]
pub struct CandidatePair {
    pub r_id: usize,
    pub s_id: usize,
    pub r_pos: usize,
    pub s_pos: usize,
    /// Upper bound on the matching score of the pair.
    pub utility_ub: f64,
    pub theta_rs: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FilterParams {
    pub delta: f64,
    pub sim: SimilarityKind,
    pub use_positional: bool,
    pub use_joint: bool,
}

impl FilterParams {
    pub fn new(delta: f64, sim: SimilarityKind) -> Self {
        FilterParams { delta, sim, use_positional: true, use_joint: true }
    }
}

/// Per-collection state shared by generation and refinement.
pub struct FilterPipeline<'a> {
    collection: &'a Collection,
    index: &'a InvertedIndex,
    params: FilterParams,
    theta_gen: f64,
    /// Sorted distinct token union per set.
    token_union: Vec<Vec<u32>>,
    /// Longest raw element (chars) per set; edit-similarity length bound.
    max_raw_len: Vec<usize>,
    /// Per set: token filtering is provably lossless for edit similarity.
    neds_token_safe: Vec<bool>,
}

impl<'a> FilterPipeline<'a> {
    pub fn new(
        collection: &'a Collection,
        index: &'a InvertedIndex,
        params: FilterParams,
    ) -> Result<Self> {
        if !(params.delta > 0.0 && params.delta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be in (0, 1], got {}",
                params.delta
            )));
        }
        let theta_gen = generation_threshold(params.delta);
        let q = collection.q;
        let grams_plain = !collection.per_word && !collection.pretokenized;

        let mut token_union = Vec::with_capacity(collection.len());
        let mut max_raw_len = Vec::with_capacity(collection.len());
        let mut neds_token_safe = Vec::with_capacity(collection.len());
        for set in &collection.sets {
            let mut union: Vec<u32> =
                set.elements.iter().flat_map(|e| e.tokens.iter().copied()).collect();
            union.sort_unstable();
            union.dedup();
            token_union.push(union);
            max_raw_len.push(
                set.elements.iter().map(|e| e.raw.chars().count()).max().unwrap_or(0),
            );
            // An element is token-visible if any partner at element
            // similarity >= theta_gen must still share a q-gram with it:
            // an edit destroys at most q grams and a theta-level partner
            // allows at most (1 - theta) * len / theta edits.
            let safe = grams_plain
                && set.elements.iter().all(|e| {
                    let len = e.raw.chars().count();
                    len >= q && {
                        let grams = (len - q + 1) as f64;
                        let max_edits = (1.0 - theta_gen) * len as f64 / theta_gen;
                        grams - q as f64 * max_edits >= 0.5
                    }
                });
            neds_token_safe.push(safe);
        }
        Ok(FilterPipeline {
            collection,
            index,
            params,
            theta_gen,
            token_union,
            max_raw_len,
            neds_token_safe,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    fn size_window_ok(&self, size_r: usize, size_s: usize) -> bool {
        // theta_rs <= min(|R|, |S|) in both directions, inclusive at the
        // boundary.
        let d = self.params.delta;
        let (a, b) = (size_r as f64, size_s as f64);
        d * (a + b) <= (1.0 + d) * a + FILTER_EPS && d * (a + b) <= (1.0 + d) * b + FILTER_EPS
    }

    /// Candidates for the query at `query_pos` (self-join: only sets after
    /// the query in collection order are produced).
    pub fn generate(&self, query_pos: usize) -> Vec<CandidatePair> {
        match self.params.sim {
            SimilarityKind::Jac => self.generate_jac(query_pos),
            SimilarityKind::Neds => self.generate_neds(query_pos),
        }
    }

    fn emit(&self, query_pos: usize, s_pos: usize, utility_ub: f64) -> CandidatePair {
        let r = &self.collection.sets[query_pos];
        let s = &self.collection.sets[s_pos];
        CandidatePair {
            r_id: r.id,
            s_id: s.id,
            r_pos: query_pos,
            s_pos,
            utility_ub,
            theta_rs: pair_threshold(r.len(), s.len(), self.params.delta),
        }
    }

    fn generate_jac(&self, query_pos: usize) -> Vec<CandidatePair> {
        let query = &self.collection.sets[query_pos];
        let size_r = query.len();

        // Token stream of the query, rarest token first.
        let mut stream: Vec<(u32, f64)> = Vec::new();
        for elem in &query.elements {
            let u = 1.0 / elem.tokens.len() as f64;
            for &t in &elem.tokens {
                stream.push((t, u));
            }
        }
        stream.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let mut acc: HashMap<usize, f64> = HashMap::new();
        let mut sigma = 1.0f64;
        for &(t, u) in &stream {
            if sigma < self.theta_gen {
                break;
            }
            for entry in &self.index.postings[t as usize] {
                if entry.set_pos <= query_pos {
                    continue;
                }
                let size_s = self.collection.sets[entry.set_pos].len();
                if !self.size_window_ok(size_r, size_s) {
                    // postings are size-ascending: everything after is
                    // larger still
                    if size_s > size_r {
                        break;
                    }
                    continue;
                }
                *acc.entry(entry.set_pos).or_insert(0.0) += u;
            }
            sigma -= u / size_r as f64;
        }
        let slack = sigma.max(0.0) * size_r as f64;

        let mut positions: Vec<usize> = acc.keys().copied().collect();
        positions.sort_unstable();
        positions
            .into_iter()
            .map(|s_pos| self.emit(query_pos, s_pos, acc[&s_pos] + slack))
            .collect()
    }

    fn generate_neds(&self, query_pos: usize) -> Vec<CandidatePair> {
        let query = &self.collection.sets[query_pos];
        let size_r = query.len();

        if !self.neds_token_safe[query_pos] {
            // Token visibility cannot be certified: keep every set in the
            // size window rather than risk dropping a result pair.
            return (query_pos + 1..self.collection.len())
                .filter(|&p| self.size_window_ok(size_r, self.collection.sets[p].len()))
                .map(|p| {
                    let ub = size_r.min(self.collection.sets[p].len()) as f64;
                    self.emit(query_pos, p, ub)
                })
                .collect();
        }

        // Walk every query token (no early stop); any set sharing a token
        // becomes a candidate with the trivial bound.
        let mut seen: Vec<usize> = Vec::new();
        for t in &self.token_union[query_pos] {
            for entry in &self.index.postings[*t as usize] {
                if entry.set_pos <= query_pos {
                    continue;
                }
                let size_s = self.collection.sets[entry.set_pos].len();
                if !self.size_window_ok(size_r, size_s) {
                    if size_s > size_r {
                        break;
                    }
                    continue;
                }
                seen.push(entry.set_pos);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        seen.into_iter()
            .map(|p| {
                let ub = size_r.min(self.collection.sets[p].len()) as f64;
                self.emit(query_pos, p, ub)
            })
            .collect()
    }

    /// Recomputes each pair's bound against the concrete candidate set and
    /// drops pairs that provably cannot reach their pair threshold.
    pub fn refine(&self, pairs: Vec<CandidatePair>) -> Vec<CandidatePair> {
        pairs
            .into_iter()
            .filter_map(|mut pair| {
                if pair.utility_ub < pair.theta_rs - FILTER_EPS {
                    return None;
                }
                let bound = match self.params.sim {
                    SimilarityKind::Jac => self.refine_bound_jac(&pair),
                    SimilarityKind::Neds => self.refine_bound_neds(&pair),
                };
                let bound = bound.min(pair.utility_ub);
                if bound < pair.theta_rs - FILTER_EPS {
                    None
                } else {
                    pair.utility_ub = bound;
                    Some(pair)
                }
            })
            .collect()
    }

    fn refine_bound_jac(&self, pair: &CandidatePair) -> f64 {
        let r = &self.collection.sets[pair.r_pos];
        let s = &self.collection.sets[pair.s_pos];
        let s_union = &self.token_union[pair.s_pos];

        // R side: per element, shared-token utility capped at 1, optionally
        // tightened by the first shared rank (tokens of an element pair can
        // only match at or after it).
        let mut r_side = 0.0f64;
        for elem in &r.elements {
            let k = elem.tokens.len() as f64;
            let mut shared = 0usize;
            let mut first_rank: Option<usize> = None;
            for (rank, t) in elem.tokens.iter().enumerate() {
                if s_union.binary_search(t).is_ok() {
                    shared += 1;
                    if first_rank.is_none() {
                        first_rank = Some(rank);
                    }
                }
            }
            let mut bound = (shared as f64 / k).min(1.0);
            if self.params.use_positional {
                if let Some(p) = first_rank {
                    bound = bound.min((elem.tokens.len() - p) as f64 / k);
                }
            }
            r_side += bound;
        }

        if !self.params.use_joint {
            return r_side;
        }

        // Joint side: the matching uses at most min(|R|, |S|) candidate
        // elements; cap by the top-l per-element utilities seen from S.
        let r_union = &self.token_union[pair.r_pos];
        let mut s_utils: Vec<f64> = s
            .elements
            .iter()
            .map(|elem| {
                let shared =
                    elem.tokens.iter().filter(|t| r_union.binary_search(t).is_ok()).count();
                (shared as f64 / elem.tokens.len() as f64).min(1.0)
            })
            .collect();
        let l = r.len().min(s.len());
        s_utils.sort_unstable_by(|a, b| b.total_cmp(a));
        let joint: f64 = s_utils.iter().take(l).sum();

        r_side.min(joint)
    }

    fn refine_bound_neds(&self, pair: &CandidatePair) -> f64 {
        let r = &self.collection.sets[pair.r_pos];
        let s = &self.collection.sets[pair.s_pos];
        let q = self.collection.q;
        let grams_plain = !self.collection.per_word && !self.collection.pretokenized;
        if !grams_plain {
            return pair.utility_ub; // no sound tightening available
        }

        let zero_share_bound = |len: usize, other_max: usize| -> f64 {
            // No shared q-gram forces at least (len - q + 1) / q edits.
            let m = len.max(other_max) as f64;
            let b = 1.0 - (len - q + 1) as f64 / (q as f64 * m);
            b.clamp(0.0, 1.0)
        };

        let bound_side = |elems: &[crate::corpus::Element],
                          other_union: &[u32],
                          other_max: usize| {
            elems
                .iter()
                .map(|elem| {
                    let shares =
                        elem.tokens.iter().any(|t| other_union.binary_search(t).is_ok());
                    let len = elem.raw.chars().count();
                    if shares || len < q {
                        1.0
                    } else {
                        zero_share_bound(len, other_max)
                    }
                })
                .collect::<Vec<f64>>()
        };

        let r_bounds = bound_side(
            &r.elements,
            &self.token_union[pair.s_pos],
            self.max_raw_len[pair.s_pos],
        );
        let r_side: f64 = r_bounds.iter().sum();

        if !self.params.use_joint {
            return r_side;
        }
        let mut s_bounds = bound_side(
            &s.elements,
            &self.token_union[pair.r_pos],
            self.max_raw_len[pair.r_pos],
        );
        s_bounds.sort_unstable_by(|a, b| b.total_cmp(a));
        let joint: f64 = s_bounds.iter().take(r.len().min(s.len())).sum();
        r_side.min(joint)
    }
}
