//! Half-approximate matchers: greedy edge scan and locally dominant
//! pointer chasing.
//!
//! Both follow one strict total edge order (weight descending, ties by
//! ascending (left, right) index), which makes them deterministic and
//! makes the greedy matching the unique locally dominant one, so the two
//! return identical edge sets.

#[cfg(test)]
use std::cmp::Ordering;

use super::{BipartiteGraph, Matching};

/// Strict total order over edges: heavier first, ties by indices.
/// Reference definition; the sort below uses the packed-key encoding.
#[cfg(test)]
fn edge_order(a: &(usize, usize, f64), b: &(usize, usize, f64)) -> Ordering {
    b.2.total_cmp(&a.2).then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
}

/// Same order encoded as an integer tuple so sorting compares machine
/// words. Weights are non-negative, so the IEEE bit pattern is monotone
/// in the value; complementing flips to descending.
#[inline]
pub(crate) fn edge_sort_key(left: usize, right: usize, w: f64) -> (u64, u32, u32) {
    debug_assert!(w >= 0.0);
    let bits = if w == 0.0 { 0 } else { w.to_bits() };
    (!bits, left as u32, right as u32)
}

/// Scans all edges in the strict order and keeps every non-conflicting
/// one. Maximal; weight is at least half the optimum.
pub fn greedy_matching(g: &BipartiteGraph) -> Matching {
    let mut edges: Vec<(u64, u32, u32)> = Vec::with_capacity(g.edge_count());
    for i in 0..g.n_left() {
        for j in 0..g.n_right() {
            edges.push(edge_sort_key(i, j, g.weight(i, j)));
        }
    }
    edges.sort_unstable();

    let mut used_l = vec![false; g.n_left()];
    let mut used_r = vec![false; g.n_right()];
    let mut m = Matching::default();
    for (_, i, j) in edges {
        let (i, j) = (i as usize, j as usize);
        if !used_l[i] && !used_r[j] {
            used_l[i] = true;
            used_r[j] = true;
            m.push(i, j, g.weight(i, j));
        }
    }
    m
}

/// Rounds of pointing and matching: every free vertex points at its best
/// free neighbour under the strict edge order; mutual pointers are
/// committed and removed. Repeats until nothing can be matched.
pub fn locally_dominant_matching(g: &BipartiteGraph) -> Matching {
    let nl = g.n_left();
    let nr = g.n_right();
    let mut free_l: Vec<bool> = vec![true; nl];
    let mut free_r: Vec<bool> = vec![true; nr];
    let mut m = Matching::default();

    loop {
        // Pointing phase.
        let mut ptr_l: Vec<Option<usize>> = vec![None; nl];
        let mut ptr_r: Vec<Option<usize>> = vec![None; nr];
        for i in 0..nl {
            if !free_l[i] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..nr {
                if !free_r[j] {
                    continue;
                }
                let w = g.weight(i, j);
                // strictly better weight, or same weight at a lower index
                if best.map_or(true, |(_, bw)| w > bw) {
                    best = Some((j, w));
                }
            }
            ptr_l[i] = best.map(|(j, _)| j);
        }
        for j in 0..nr {
            if !free_r[j] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for i in 0..nl {
                if !free_l[i] {
                    continue;
                }
                let w = g.weight(i, j);
                if best.map_or(true, |(_, bw)| w > bw) {
                    best = Some((i, w));
                }
            }
            ptr_r[j] = best.map(|(i, _)| i);
        }

        // Matching phase: commit mutual pointers.
        let mut committed = 0usize;
        for i in 0..nl {
            if let (true, Some(j)) = (free_l[i], ptr_l[i]) {
                if ptr_r[j] == Some(i) {
                    free_l[i] = false;
                    free_r[j] = false;
                    m.push(i, j, g.weight(i, j));
                    committed += 1;
                }
            }
        }
        if committed == 0 {
            break;
        }
    }
    m
}
