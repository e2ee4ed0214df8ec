//! Online estimation of the relaxation weight from transition counts.
//!
//! The target weight is `1 / (1 - γ p_min)` where `p_min` is the smallest
//! self-loop probability over state-action pairs. The estimator keeps a
//! visit tensor `Y[i][j][a]`, forms self-loop probability estimates from it,
//! and tracks the induced target with a Robbins-Monro iterate
//!
//! ```text
//! w_{n+1} = w_n + α(n) * ( 1 / (1 - γ p̂_min) - w_n ),   α(n) = n^(-step_exponent)
//! ```
//!
//! clamped to `[1, 1/(1-γ)]`, the interval the true target always lies in.
//!
//! Self-loop probabilities are normalized by per-(i,a) visit counts, which is
//! the estimator consistent with the strong law under any non-degenerate
//! behavior policy. Normalizing by the total step count instead converges to
//! a visitation-weighted quantity; that variant is kept behind
//! [`SorEstimator::with_total_count_normalization`] for fidelity experiments.

use serde::{Deserialize, Serialize};

/// How self-loop probabilities are estimated from the count tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountNormalization {
    /// `Y[i][i][a] / Σ_j Y[i][j][a]` — consistent for `p(i|i,a)`.
    PerVisit,
    /// `Y[i][i][a] / n` — the visitation-weighted variant.
    TotalSteps,
}

/// Transition counter plus the scalar relaxation-weight iterate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SorEstimator {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    /// Flat `Y[i][j][a]` visit tensor, indexed `(i * S + j) * A + a`.
    counts: Vec<u64>,
    /// Per-(i,a) totals, kept alongside the tensor so the minimum can be
    /// recomputed cheaply after every transition.
    pair_visits: Vec<u64>,
    pair_self_visits: Vec<u64>,
    total_steps: u64,
    w: f64,
    step_exponent: f64,
    normalization: CountNormalization,
    frozen: bool,
}

impl SorEstimator {
    pub fn new(n_states: usize, n_actions: usize, gamma: f64) -> Self {
        assert!((0.0..1.0).contains(&gamma));
        Self {
            n_states,
            n_actions,
            gamma,
            counts: vec![0; n_states * n_states * n_actions],
            pair_visits: vec![0; n_states * n_actions],
            pair_self_visits: vec![0; n_states * n_actions],
            total_steps: 0,
            w: 1.0,
            step_exponent: 1.0,
            normalization: CountNormalization::PerVisit,
            frozen: false,
        }
    }

    /// Start the iterate somewhere other than the default `w0 = 1`.
    pub fn with_initial_w(mut self, w0: f64) -> Self {
        assert!(w0 >= 1.0 && w0 <= self.w_max());
        self.w = w0;
        self
    }

    /// Exponent of `α(n) = n^(-p)`; valid range `(0.5, 1]`.
    pub fn with_step_exponent(mut self, p: f64) -> Self {
        assert!(p > 0.5 && p <= 1.0);
        self.step_exponent = p;
        self
    }

    pub fn with_total_count_normalization(mut self) -> Self {
        self.normalization = CountNormalization::TotalSteps;
        self
    }

    /// Pin the iterate: counts still accumulate but `update_w` is a no-op.
    /// Used to compare model-free agents against their fixed-weight
    /// counterparts under shared randomness.
    pub fn frozen_at(n_states: usize, n_actions: usize, gamma: f64, w: f64) -> Self {
        let mut est = Self::new(n_states, n_actions, gamma);
        est.w = w;
        est.frozen = true;
        est
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn count(&self, i: usize, j: usize, a: usize) -> u64 {
        self.counts[(i * self.n_states + j) * self.n_actions + a]
    }

    /// Upper clamp bound, `1/(1-γ)`.
    pub fn w_max(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    /// Record one observed transition `i --a--> j`.
    pub fn record(&mut self, i: usize, a: usize, j: usize) {
        assert!(i < self.n_states && j < self.n_states && a < self.n_actions);
        self.counts[(i * self.n_states + j) * self.n_actions + a] += 1;
        self.pair_visits[i * self.n_actions + a] += 1;
        if i == j {
            self.pair_self_visits[i * self.n_actions + a] += 1;
        }
        self.total_steps += 1;
    }

    /// Smallest estimated self-loop probability over all pairs. Returns 0
    /// while any pair is unvisited, which drives the weight target to its
    /// conservative lower end of 1.
    pub fn estimated_min_self_loop(&self) -> f64 {
        let mut min = f64::INFINITY;
        for idx in 0..self.pair_visits.len() {
            let visits = self.pair_visits[idx];
            if visits == 0 {
                return 0.0;
            }
            let denom = match self.normalization {
                CountNormalization::PerVisit => visits as f64,
                CountNormalization::TotalSteps => self.total_steps as f64,
            };
            let p = self.pair_self_visits[idx] as f64 / denom;
            if p < min {
                min = p;
            }
        }
        min
    }

    /// Weight the iterate is currently chasing.
    pub fn current_target(&self) -> f64 {
        1.0 / (1.0 - self.gamma * self.estimated_min_self_loop())
    }

    /// One Robbins-Monro step toward the current target, using the number of
    /// recorded transitions as the step index. Call after [`record`].
    ///
    /// [`record`]: SorEstimator::record
    pub fn update_w(&mut self) -> f64 {
        if self.frozen {
            return self.w;
        }
        let n = self.total_steps.max(1) as f64;
        let alpha = n.powf(-self.step_exponent);
        let target = self.current_target();
        self.w += alpha * (target - self.w);
        self.w = self.w.clamp(1.0, self.w_max());
        self.w
    }
}
