//! Bipartite weighted matching kernels.
//!
//! Exact Hungarian with maintained duals, a bound-driven early-terminating
//! variant, greedy and locally dominant half-approximations, and a
//! semi-streaming matcher with per-vertex dual variables. A brute-force
//! enumerator serves as the test oracle and LP-duality certificates make
//! optimality checkable on any instance.

mod greedy;
mod hungarian;
mod streaming;

pub use greedy::{greedy_matching, locally_dominant_matching};
pub use hungarian::{ev_hungarian, hungarian, hungarian_with_duals, EvDecision, EvOutcome};
pub use streaming::{PsResult, StreamState};

use crate::error::Error;
use crate::Result;

/// Complete bipartite graph with dense weights in [0, 1].
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    n_left: usize,
    n_right: usize,
    weights: Vec<f64>,
}

impl BipartiteGraph {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        BipartiteGraph { n_left, n_right, weights: vec![0.0; n_left * n_right] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_left = rows.len();
        let n_right = rows.first().map_or(0, Vec::len);
        let mut g = BipartiteGraph::new(n_left, n_right);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_right, "ragged weight matrix");
            for (j, &w) in row.iter().enumerate() {
                g.set_weight(i, j, w);
            }
        }
        g
    }

    #[inline]
    pub fn weight(&self, left: usize, right: usize) -> f64 {
        self.weights[left * self.n_right + right]
    }

    #[inline]
    pub fn set_weight(&mut self, left: usize, right: usize, w: f64) {
        debug_assert!((0.0..=1.0).contains(&w), "weight {w} out of [0,1]");
        self.weights[left * self.n_right + right] = w;
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn edge_count(&self) -> usize {
        self.n_left * self.n_right
    }

    pub fn transposed(&self) -> BipartiteGraph {
        let mut t = BipartiteGraph::new(self.n_right, self.n_left);
        for i in 0..self.n_left {
            for j in 0..self.n_right {
                t.set_weight(j, i, self.weight(i, j));
            }
        }
        t
    }
}

/// Vertex-disjoint edge set with its total weight.
#[derive(Debug, Clone, Default)]
pub struct Matching {
    pub pairs: Vec<(usize, usize, f64)>,
    pub total_weight: f64,
}

impl Matching {
    pub fn push(&mut self, left: usize, right: usize, w: f64) {
        self.pairs.push((left, right, w));
        self.total_weight += w;
    }

    pub fn is_vertex_disjoint(&self) -> bool {
        let mut lefts: Vec<usize> = self.pairs.iter().map(|p| p.0).collect();
        let mut rights: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        lefts.sort_unstable();
        rights.sort_unstable();
        lefts.windows(2).all(|w| w[0] != w[1]) && rights.windows(2).all(|w| w[0] != w[1])
    }

    /// Edge set as a sorted list, ignoring weights. Used by equivalence tests.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self.pairs.iter().map(|p| (p.0, p.1)).collect();
        e.sort_unstable();
        e
    }
}

/// Maximum-weight matching by enumerating injective assignments.
///
/// Test oracle only: the smaller side is capped at 9 vertices.
pub fn brute_force_matching(g: &BipartiteGraph) -> Result<Matching> {
    if g.n_left() > g.n_right() {
        let t = g.transposed();
        let m = brute_force_matching(&t)?;
        let mut out = Matching::default();
        for (l, r, w) in m.pairs {
            out.push(r, l, w);
        }
        return Ok(out);
    }
    if g.n_left() > 9 {
        return Err(Error::InvalidArgument(format!(
            "brute force enumeration capped at 9 left vertices, got {}",
            g.n_left()
        )));
    }

    fn rec(
        g: &BipartiteGraph,
        row: usize,
        used: u64,
        weight: f64,
        assign: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        if row == g.n_left() {
            if weight > best.0 {
                *best = (weight, assign.clone());
            }
            return;
        }
        for j in 0..g.n_right() {
            if used & (1 << j) == 0 {
                assign.push(j);
                rec(g, row + 1, used | (1 << j), weight + g.weight(row, j), assign, best);
                assign.pop();
            }
        }
    }

    let mut best = (f64::NEG_INFINITY, Vec::new());
    if g.n_left() == 0 || g.n_right() == 0 {
        return Ok(Matching::default());
    }
    debug_assert!(g.n_right() < 64, "right side too large for the bitmask");
    rec(g, 0, 0, 0.0, &mut Vec::new(), &mut best);
    let mut m = Matching::default();
    for (i, &j) in best.1.iter().enumerate() {
        m.push(i, j, g.weight(i, j));
    }
    Ok(m)
}

/// Result of an LP-duality check of a matching against per-vertex duals
/// (left vertices first, then right).
#[derive(Debug, Clone)]
pub struct DualityCheck {
    /// y(u) + y(v) >= w(u,v) held on every edge.
    pub feasible: bool,
    /// Sum of duals equals the matching weight within 1e-7.
    pub optimal: bool,
    /// First edge violating feasibility, if any.
    pub violating_edge: Option<(usize, usize)>,
    pub dual_total: f64,
}

impl DualityCheck {
    pub fn passes(&self) -> bool {
        self.feasible && self.optimal
    }
}

/// Verifies dual feasibility on all edges and whether the dual total
/// certifies `m` as optimal (strong duality).
pub fn check_duality_certificate(g: &BipartiteGraph, m: &Matching, y: &[f64]) -> DualityCheck {
    assert_eq!(y.len(), g.n_left() + g.n_right(), "one dual per vertex");
    let mut violating_edge = None;
    'scan: for i in 0..g.n_left() {
        for j in 0..g.n_right() {
            if y[i] + y[g.n_left() + j] < g.weight(i, j) - 1e-9 {
                violating_edge = Some((i, j));
                break 'scan;
            }
        }
    }
    let dual_total: f64 = y.iter().sum();
    DualityCheck {
        feasible: violating_edge.is_none(),
        optimal: (dual_total - m.total_weight).abs() <= 1e-7,
        violating_edge,
        dual_total,
    }
}

#[cfg(test)]
pub(crate) fn random_graph(rng: &mut impl rand::Rng, max_side: usize) -> BipartiteGraph {
    let nl = rng.gen_range(1..=max_side);
    let nr = rng.gen_range(nl..=max_side.max(nl));
    let mut g = BipartiteGraph::new(nl, nr);
    for i in 0..nl {
        for j in 0..nr {
            g.set_weight(i, j, rng.gen_range(0.0..=1.0));
        }
    }
    g
}
