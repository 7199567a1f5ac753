//! Element-level similarity measures.
//!
//! Two measures are supported: Jaccard similarity over token-id sets and
//! normalized edit similarity over raw strings. Both map into [0, 1] and
//! are symmetric.

use serde::{Deserialize, Serialize};

use crate::corpus::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Jac,
    Neds,
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimilarityKind::Jac => write!(f, "jac"),
            SimilarityKind::Neds => write!(f, "neds"),
        }
    }
}

/// Jaccard similarity of two sorted, duplicate-free token-id lists.
///
/// Both lists empty counts as identical (1.0); that only occurs for
/// degenerate corpora since empty elements are dropped at load time.
pub fn jaccard(a: &[u32], b: &[u32]) -> f64 {
    debug_assert!(a.windows(2).all(|w| w[0] < w[1]), "left list unsorted");
    debug_assert!(b.windows(2).all(|w| w[0] < w[1]), "right list unsorted");
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut inter = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Levenshtein distance with the two-row dynamic program.
pub fn levenshtein(a: &str, b: &str) -> usize {
    if a == b {
        return 0;
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Normalized edit similarity: 1 - LD(a,b) / max(|a|,|b|).
///
/// Both-empty is defined as 1.0.
pub fn neds(a: &str, b: &str) -> f64 {
    let la = a.chars().count();
    let lb = b.chars().count();
    if la == 0 && lb == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / la.max(lb) as f64
}

/// Edge-weight dispatch used when building the bipartite graph of a pair.
pub fn element_sim(kind: SimilarityKind, r: &Element, s: &Element) -> f64 {
    match kind {
        SimilarityKind::Jac => jaccard(&r.tokens, &s.tokens),
        SimilarityKind::Neds => neds(&r.raw, &s.raw),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jaccard_basics() {
        assert_eq!(jaccard(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(jaccard(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(jaccard(&[1], &[2]), 0.0);
        assert_eq!(jaccard(&[], &[]), 1.0);
        assert_eq!(jaccard(&[], &[1]), 0.0);
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("a", "b"), 1);
    }

    /// Full-table reference DP, kept independent of the two-row version.
    fn levenshtein_full_table(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 0..=a.len() {
            t[i][0] = i;
        }
        for j in 0..=b.len() {
            t[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
            }
        }
        t[a.len()][b.len()]
    }

    #[test]
    fn neds_basics() {
        assert_eq!(neds("abc", "abc"), 1.0);
        let expect = 1.0 - levenshtein_full_table("kitten", "sitting") as f64 / 7.0;
        assert!((neds("kitten", "sitting") - expect).abs() < 1e-12);
        assert!((neds("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-9);
        assert_eq!(neds("a", "b"), 0.0);
        assert_eq!(neds("", ""), 1.0);
    }

    #[test]
    fn element_sim_dispatch() {
        let r = Element { raw: "abc".into(), tokens: vec![1, 2, 3] };
        let s = Element { raw: "abc".into(), tokens: vec![2, 3, 4] };
        assert_eq!(element_sim(SimilarityKind::Jac, &r, &s), 0.5);
        assert_eq!(element_sim(SimilarityKind::Neds, &r, &s), 1.0);
        assert_eq!(element_sim(SimilarityKind::Jac, &r, &r), 1.0);
    }

    fn arb_tokens() -> impl Strategy<Value = Vec<u32>> {
        proptest::collection::btree_set(0u32..40, 0..12).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_bounded(a in arb_tokens(), b in arb_tokens()) {
            let ab = jaccard(&a, &b);
            let ba = jaccard(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b);
        }

        #[test]
        fn levenshtein_matches_full_table(a in "[a-d]{0,8}", b in "[a-d]{0,8}") {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein_full_table(&a, &b));
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        }

        #[test]
        fn levenshtein_triangle(a in "[a-c]{0,6}", b in "[a-c]{0,6}", c in "[a-c]{0,6}") {
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        }

        #[test]
        fn neds_identity_and_range(a in "[a-e]{1,8}", b in "[a-e]{1,8}") {
            let v = neds(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 1.0, a == b);
            prop_assert_eq!(v, neds(&b, &a));
        }
    }
}
