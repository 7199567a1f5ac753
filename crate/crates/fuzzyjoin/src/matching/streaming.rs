//! Semi-streaming matching over an edge stream.
//!
//! Each vertex carries an approximate dual value phi, initially zero. An
//! arriving edge survives only if its weight beats (1 + eps) times the sum
//! of its endpoint duals; surviving edges add their residual weight to
//! both duals and go on a stack. Unwinding the stack greedily yields a
//! matching with weight at least opt / (2 + 2 eps), and (1 + eps) * phi is
//! a feasible dual solution, so (1 + eps) * sum(phi) upper-bounds the
//! optimum on every instance.

use super::Matching;

#[derive(Debug, Clone)]
pub struct StreamState {
    n_left: usize,
    n_right: usize,
    phi_left: Vec<f64>,
    phi_right: Vec<f64>,
    stack: Vec<(usize, usize, f64)>,
    epsilon: f64,
    offered: usize,
}

/// Outcome of unwinding a stream: the matching, the dual total at the end
/// of the stream, and storage counters.
#[derive(Debug, Clone)]
pub struct PsResult {
    pub matching: Matching,
    /// Sum of phi over all vertices; (1 + eps) times this bounds the optimum.
    pub dual_sum: f64,
    /// Peak number of edges stored (the stack never shrinks mid-stream).
    pub peak_stack: usize,
    pub edges_offered: usize,
}

impl StreamState {
    pub fn new(n_left: usize, n_right: usize, epsilon: f64) -> Self {
        assert!(epsilon >= 0.0, "epsilon must be non-negative");
        StreamState {
            n_left,
            n_right,
            phi_left: vec![0.0; n_left],
            phi_right: vec![0.0; n_right],
            stack: Vec::new(),
            epsilon,
            offered: 0,
        }
    }

    /// Offers one edge to the stream. Returns whether it was kept.
    pub fn push(&mut self, left: usize, right: usize, w: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&w), "weight {w} out of [0,1]");
        self.offered += 1;
        let base = self.phi_left[left] + self.phi_right[right];
        if w > (1.0 + self.epsilon) * base {
            let residual = w - base;
            self.phi_left[left] += residual;
            self.phi_right[right] += residual;
            self.stack.push((left, right, w));
            true
        } else {
            false
        }
    }

    pub fn dual_sum(&self) -> f64 {
        self.phi_left.iter().sum::<f64>() + self.phi_right.iter().sum::<f64>()
    }

    /// Duals scaled by (1 + eps): a feasible solution of the dual LP,
    /// usable with the duality certificate check. Left first, then right.
    pub fn scaled_duals(&self) -> Vec<f64> {
        self.phi_left
            .iter()
            .chain(self.phi_right.iter())
            .map(|&p| p * (1.0 + self.epsilon))
            .collect()
    }

    pub fn stack_len(&self) -> usize {
        self.stack.len()
    }

    pub fn edges_offered(&self) -> usize {
        self.offered
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Pops the stack, inserting every edge whose endpoints are still free.
    pub fn finalize(self) -> PsResult {
        let dual_sum = self.dual_sum();
        let peak_stack = self.stack.len();
        let mut covered_l = vec![false; self.n_left];
        let mut covered_r = vec![false; self.n_right];
        let mut m = Matching::default();
        let mut stack = self.stack;
        while let Some((l, r, w)) = stack.pop() {
            if !covered_l[l] && !covered_r[r] {
                covered_l[l] = true;
                covered_r[r] = true;
                m.push(l, r, w);
            }
        }
        PsResult { matching: m, dual_sum, peak_stack, edges_offered: self.offered }
    }
}
