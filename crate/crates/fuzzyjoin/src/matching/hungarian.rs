//! Primal-dual Hungarian matching and its early-terminating variant.
//!
//! The solver works on the maximization form directly: left duals start at
//! each vertex's maximum incident weight, right duals at zero, and phases
//! grow an alternating tree over tight edges, shifting duals until an
//! augmenting path appears. Matched edges stay tight throughout, so on
//! termination the dual total equals the matching weight and certifies
//! optimality. Duals never go negative: while a phase runs, some free
//! right vertex still carries a zero dual, which bounds every dual shift
//! by the smallest left dual in the tree.

use super::{BipartiteGraph, Matching};

struct Engine<'a> {
    g: &'a BipartiteGraph,
    y_left: Vec<f64>,
    y_right: Vec<f64>,
    match_left: Vec<Option<usize>>,
    match_right: Vec<Option<usize>>,
    row_max: Vec<f64>,
}

impl<'a> Engine<'a> {
    /// `seed_tight` pre-matches vertices along initially tight edges (each
    /// left vertex is tight exactly on its maximum-weight edges). The plain
    /// solver runs without it, one phase per left vertex; the
    /// early-terminating variant seeds first so its initial bounds start
    /// from a real partial matching. Seeded edges sit at their row maximum,
    /// so the partial matching stays optimal for the lefts it covers.
    fn new(g: &'a BipartiteGraph, seed_tight: bool) -> Self {
        assert!(
            g.n_left() <= g.n_right(),
            "caller must orient the graph with n_left <= n_right"
        );
        let nl = g.n_left();
        let nr = g.n_right();
        let row_max: Vec<f64> = (0..nl)
            .map(|i| (0..nr).map(|j| g.weight(i, j)).fold(0.0, f64::max))
            .collect();
        let mut eng = Engine {
            g,
            y_left: row_max.clone(),
            y_right: vec![0.0; nr],
            match_left: vec![None; nl],
            match_right: vec![None; nr],
            row_max,
        };
        if seed_tight {
            for i in 0..nl {
                for j in 0..nr {
                    if eng.match_right[j].is_none() && g.weight(i, j) == eng.y_left[i] {
                        eng.match_left[i] = Some(j);
                        eng.match_right[j] = Some(i);
                        break;
                    }
                }
            }
        }
        eng
    }

    fn matched_weight(&self) -> f64 {
        self.match_left
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| self.g.weight(i, j)))
            .sum()
    }

    fn left_perfect(&self) -> bool {
        self.match_left.iter().all(Option::is_some)
    }

    fn first_unmatched_left(&self) -> Option<usize> {
        self.match_left.iter().position(Option::is_none)
    }

    /// One augmentation phase: grows the alternating tree from `root`
    /// until a free right vertex becomes reachable, then augments.
    fn phase(&mut self, root: usize) {
        let nl = self.g.n_left();
        let nr = self.g.n_right();
        debug_assert!(nr > 0 && self.match_left[root].is_none());

        let mut in_tree_left = vec![false; nl];
        let mut in_tree_right = vec![false; nr];
        let mut slack = vec![0.0f64; nr];
        let mut slack_from = vec![root; nr];
        let mut parent_right = vec![usize::MAX; nr];
        in_tree_left[root] = true;
        for j in 0..nr {
            slack[j] = self.y_left[root] + self.y_right[j] - self.g.weight(root, j);
        }

        loop {
            let mut delta = f64::INFINITY;
            let mut jt = usize::MAX;
            for j in 0..nr {
                if !in_tree_right[j] && slack[j] < delta {
                    delta = slack[j];
                    jt = j;
                }
            }
            debug_assert!(jt != usize::MAX, "complete graph always has a reachable column");
            let delta = delta.max(0.0); // guard against rounding residue

            if delta > 0.0 {
                for (i, &inl) in in_tree_left.iter().enumerate() {
                    if inl {
                        self.y_left[i] -= delta;
                    }
                }
                for j in 0..nr {
                    if in_tree_right[j] {
                        self.y_right[j] += delta;
                    } else {
                        slack[j] -= delta;
                    }
                }
            }

            parent_right[jt] = slack_from[jt];
            match self.match_right[jt] {
                None => {
                    // Augment along the alternating path back to the root.
                    let mut j = jt;
                    loop {
                        let l = parent_right[j];
                        let next = self.match_left[l];
                        self.match_left[l] = Some(j);
                        self.match_right[j] = Some(l);
                        match next {
                            Some(nj) if l != root => j = nj,
                            _ => break,
                        }
                    }
                    return;
                }
                Some(l2) => {
                    in_tree_right[jt] = true;
                    in_tree_left[l2] = true;
                    for j in 0..nr {
                        if !in_tree_right[j] {
                            let s = self.y_left[l2] + self.y_right[j] - self.g.weight(l2, j);
                            if s < slack[j] {
                                slack[j] = s;
                                slack_from[j] = l2;
                            }
                        }
                    }
                }
            }
        }
    }

    fn into_matching(self) -> (Matching, Vec<f64>, Vec<f64>) {
        let mut m = Matching::default();
        for (i, mj) in self.match_left.iter().enumerate() {
            if let Some(j) = mj {
                m.push(i, *j, self.g.weight(i, *j));
            }
        }
        (m, self.y_left, self.y_right)
    }
}

/// Maximum-weight matching saturating every left vertex (requires
/// n_left <= n_right; callers orient via transposition).
pub fn hungarian(g: &BipartiteGraph) -> Matching {
    hungarian_with_duals(g).0
}

/// Like [`hungarian`], also returning the final feasible duals
/// (left then right) whose total equals the matching weight.
pub fn hungarian_with_duals(g: &BipartiteGraph) -> (Matching, Vec<f64>, Vec<f64>) {
    if g.n_left() == 0 || g.n_right() == 0 {
        return (Matching::default(), vec![0.0; g.n_left()], vec![0.0; g.n_right()]);
    }
    let mut eng = Engine::new(g, false);
    while let Some(root) = eng.first_unmatched_left() {
        eng.phase(root);
    }
    eng.into_matching()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvDecision {
    Accept,
    Reject,
    /// Ran to completion without either bound deciding. With bounds checked
    /// after the final phase this is unreachable (they collapse onto the
    /// optimum), but it is kept so the outcome type states the full contract.
    Exact,
}

#[derive(Debug, Clone)]
pub struct EvOutcome {
    pub decision: EvDecision,
    /// Rejecting upper bound, accepting lower bound, or the exact optimum
    /// when the decision fell at termination.
    pub weight_or_bound: f64,
    /// Decision was made before the matching saturated the left side.
    pub early: bool,
    pub phases_run: usize,
}

/// Hungarian with upper/lower-bound early termination against a matching
/// weight threshold.
///
/// After the initial tight seeding and after every augmentation phase:
/// UB = matched weight + sum over unmatched left vertices of their maximum
/// incident weight (overlaps allowed); LB = matched weight + a greedy
/// completion over the unmatched remainder. Rejects when UB < theta,
/// accepts when LB >= theta, rejection checked first. At termination the
/// two bounds equal the optimum, so the final check always decides.
pub fn ev_hungarian(g: &BipartiteGraph, theta: f64) -> EvOutcome {
    if g.n_left() == 0 || g.n_right() == 0 {
        return if theta > 0.0 {
            EvOutcome { decision: EvDecision::Reject, weight_or_bound: 0.0, early: false, phases_run: 0 }
        } else {
            EvOutcome { decision: EvDecision::Accept, weight_or_bound: 0.0, early: false, phases_run: 0 }
        };
    }

    let mut eng = Engine::new(g, true);
    let mut phases_run = 0usize;
    loop {
        let matched = eng.matched_weight();
        let complete = eng.left_perfect();
        let ub: f64 = matched
            + eng
                .match_left
                .iter()
                .enumerate()
                .filter(|(_, m)| m.is_none())
                .map(|(i, _)| eng.row_max[i])
                .sum::<f64>();
        // Initial check uses the full sorted greedy; per-phase rechecks use
        // the O(n^2) row-scan completion so bounds never dominate a phase.
        let lb = if phases_run == 0 {
            matched + greedy_completion(&eng)
        } else {
            matched + rowscan_completion(&eng)
        };
        if ub < theta {
            return EvOutcome {
                decision: EvDecision::Reject,
                weight_or_bound: ub,
                early: !complete,
                phases_run,
            };
        }
        if lb >= theta {
            return EvOutcome {
                decision: EvDecision::Accept,
                weight_or_bound: lb,
                early: !complete,
                phases_run,
            };
        }
        match eng.first_unmatched_left() {
            Some(root) => {
                eng.phase(root);
                phases_run += 1;
            }
            None => {
                return EvOutcome {
                    decision: EvDecision::Exact,
                    weight_or_bound: matched,
                    early: false,
                    phases_run,
                }
            }
        }
    }
}

/// Greedy matching weight over unmatched lefts x free rights, using the
/// shared strict edge order (weight descending, then indices).
fn greedy_completion(eng: &Engine) -> f64 {
    let free_lefts: Vec<usize> = (0..eng.g.n_left()).filter(|&i| eng.match_left[i].is_none()).collect();
    if free_lefts.is_empty() {
        return 0.0;
    }
    let free_rights: Vec<usize> =
        (0..eng.g.n_right()).filter(|&j| eng.match_right[j].is_none()).collect();
    let mut edges: Vec<(u64, u32, u32)> =
        Vec::with_capacity(free_lefts.len() * free_rights.len());
    for &i in &free_lefts {
        for &j in &free_rights {
            edges.push(super::greedy::edge_sort_key(i, j, eng.g.weight(i, j)));
        }
    }
    edges.sort_unstable();
    let mut used_l = vec![false; eng.g.n_left()];
    let mut used_r = vec![false; eng.g.n_right()];
    let mut total = 0.0;
    for (_, i, j) in edges {
        let (i, j) = (i as usize, j as usize);
        if !used_l[i] && !used_r[j] {
            used_l[i] = true;
            used_r[j] = true;
            total += eng.g.weight(i, j);
        }
    }
    total
}

/// Cheaper completion: each unmatched left takes its best still-free right,
/// scanned in reverse index order. Any completion is a matching, so this
/// stays a valid lower bound.
fn rowscan_completion(eng: &Engine) -> f64 {
    let mut used_r: Vec<bool> =
        (0..eng.g.n_right()).map(|j| eng.match_right[j].is_some()).collect();
    let mut total = 0.0;
    for i in (0..eng.g.n_left()).rev() {
        if eng.match_left[i].is_some() {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, used) in used_r.iter().enumerate() {
            if !used {
                let w = eng.g.weight(i, j);
                if best.map_or(true, |(_, bw)| w > bw) {
                    best = Some((j, w));
                }
            }
        }
        if let Some((j, w)) = best {
            used_r[j] = true;
            total += w;
        }
    }
    total
}
