//! Finite tabular MDPs, the Bellman optimality operator and its
//! over-relaxed variant, and the fixed-point solvers used as ground-truth
//! oracles throughout the crate.
//!
//! The over-relaxed operator blends the one-step backup with the current
//! state's greedy value:
//!
//! ```text
//! (U_w Q)(i,a) = w * ( r(i,a) + γ Σ_j p(j|i,a) max_b Q(j,b) ) + (1-w) * max_b Q(i,b)
//! ```
//!
//! For `0 < w ≤ w*`, with `w* = min_{i,a} 1/(1 - γ p(i|i,a))`, the map is a
//! contraction with modulus `1 - w + wγ ≤ γ`, so value iteration under `U_w`
//! never converges slower than under the plain operator (`w = 1`). The fixed
//! points differ entry-wise across `w` but share per-state maxima, hence the
//! same greedy policies.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for treating two action values as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance on transition-row sums in [`TabularMdp::validate`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Default ∞-norm tolerance for [`TabularMdp::solve_fixed_point`].
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;

/// Dense |S|×|A| action-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let base = state * self.n_actions;
        &self.values[base..base + self.n_actions]
    }

    /// Greedy value `max_a Q(state, a)`.
    pub fn max_action_value(&self, state: usize) -> f64 {
        self.row(state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// First action attaining the row maximum (deterministic tie-break).
    pub fn argmax_first(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    /// Per-state greedy values together with the full set of actions that
    /// attain them within [`TIE_TOLERANCE`]. Exact float ties (e.g. at zero
    /// initialization) are reported as sets rather than resolved silently;
    /// tie resolution policy belongs to the caller.
    pub fn greedy_values_and_policy(&self) -> (Vec<f64>, Vec<Vec<usize>>) {
        let mut values = Vec::with_capacity(self.n_states);
        let mut argmax_sets = Vec::with_capacity(self.n_states);
        for s in 0..self.n_states {
            let max = self.max_action_value(s);
            let set: Vec<usize> = self
                .row(s)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v >= max - TIE_TOLERANCE)
                .map(|(a, _)| a)
                .collect();
            values.push(max);
            argmax_sets.push(set);
        }
        (values, argmax_sets)
    }

    /// True iff both tables have identical shape and bit-identical entries.
    /// Stricter than `==`, which treats `0.0` and `-0.0` as equal.
    pub fn bit_eq(&self, other: &QTable) -> bool {
        self.n_states == other.n_states
            && self.n_actions == other.n_actions
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// ∞-norm distance between two tables of identical shape.
    pub fn linf_distance(&self, other: &QTable) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl std::ops::Index<(usize, usize)> for QTable {
    type Output = f64;
    fn index(&self, (s, a): (usize, usize)) -> &f64 {
        &self.values[s * self.n_actions + a]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QTable {
    fn index_mut(&mut self, (s, a): (usize, usize)) -> &mut f64 {
        &mut self.values[s * self.n_actions + a]
    }
}

/// Finite MDP with dense transition and reward tensors.
///
/// Terminal states are modeled as zero-reward self-loop absorbing states;
/// episodic semantics live in the environment layer, not here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    /// `transition[i][a][j]` = probability of reaching `j` from `i` under `a`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `reward[i][a][j]` = reward received on the transition `i --a--> j`.
    pub reward: Vec<Vec<Vec<f64>>>,
    pub terminal: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<Vec<f64>>>,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let mdp = Self {
            n_states,
            n_actions,
            gamma,
            transition,
            reward,
            terminal,
        };
        mdp.check_shape()?;
        Ok(mdp)
    }

    fn check_shape(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::ShapeMismatch(what.to_string()));
        if self.n_states == 0 || self.n_actions == 0 {
            return bad("n_states and n_actions must be positive");
        }
        if self.transition.len() != self.n_states || self.reward.len() != self.n_states {
            return bad("outer tensor length != n_states");
        }
        if self.terminal.len() != self.n_states {
            return bad("terminal flag length != n_states");
        }
        for i in 0..self.n_states {
            if self.transition[i].len() != self.n_actions || self.reward[i].len() != self.n_actions
            {
                return bad("per-state action count != n_actions");
            }
            for a in 0..self.n_actions {
                if self.transition[i][a].len() != self.n_states
                    || self.reward[i][a].len() != self.n_states
                {
                    return bad("per-(state,action) row length != n_states");
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn p(&self, i: usize, a: usize, j: usize) -> f64 {
        self.transition[i][a][j]
    }

    #[inline]
    pub fn r(&self, i: usize, a: usize, j: usize) -> f64 {
        self.reward[i][a][j]
    }

    /// Largest absolute reward, used in divergence diagnostics.
    pub fn r_max(&self) -> f64 {
        self.reward
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Diagnostic invariant check. Returns one human-readable violation per
    /// problem found; an empty list means the model is well-formed.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.check_shape().is_err() {
            violations.push("tensor shapes inconsistent with n_states/n_actions".to_string());
            return violations;
        }
        if !(0.0..1.0).contains(&self.gamma) {
            violations.push(format!("discount {} outside [0, 1)", self.gamma));
        }
        for i in 0..self.n_states {
            for a in 0..self.n_actions {
                let mut sum = 0.0;
                for j in 0..self.n_states {
                    let p = self.p(i, a, j);
                    if !(0.0..=1.0).contains(&p) {
                        violations.push(format!("P[{i}][{a}][{j}] = {p} outside [0, 1]"));
                    }
                    if !self.r(i, a, j).is_finite() {
                        violations.push(format!("reward[{i}][{a}][{j}] is not finite"));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    violations.push(format!("transition row ({i},{a}) sums to {sum}, not 1"));
                }
            }
        }
        for i in 0..self.n_states {
            if !self.terminal[i] {
                continue;
            }
            for a in 0..self.n_actions {
                if (self.p(i, a, i) - 1.0).abs() > ROW_SUM_TOLERANCE {
                    violations.push(format!("terminal state {i} does not self-loop under {a}"));
                }
                for j in 0..self.n_states {
                    if self.p(i, a, j) > 0.0 && self.r(i, a, j) != 0.0 {
                        violations.push(format!(
                            "terminal state {i} has nonzero reward under action {a}"
                        ));
                    }
                }
            }
        }
        violations
    }

    /// Largest relaxation weight preserving contraction:
    /// `w* = min_{i,a} 1 / (1 - γ p(i|i,a))`. Always ≥ 1; equals 1 as soon
    /// as some pair has zero self-loop probability.
    pub fn sor_star(&self) -> f64 {
        let mut w_star = f64::INFINITY;
        for i in 0..self.n_states {
            for a in 0..self.n_actions {
                let w = 1.0 / (1.0 - self.gamma * self.p(i, a, i));
                if w < w_star {
                    w_star = w;
                }
            }
        }
        w_star
    }

    /// Contraction modulus of the relaxed operator, `1 - w + wγ`.
    pub fn contraction_modulus(&self, w: f64) -> f64 {
        1.0 - w + w * self.gamma
    }

    fn per_state_max(&self, q: &QTable) -> Vec<f64> {
        (0..self.n_states).map(|s| q.max_action_value(s)).collect()
    }

    fn check_q_shape(&self, q: &QTable) -> Result<()> {
        if q.n_states() != self.n_states || q.n_actions() != self.n_actions {
            return Err(Error::ShapeMismatch(format!(
                "Q table is {}x{}, model is {}x{}",
                q.n_states(),
                q.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    fn check_weight(&self, w: f64) -> Result<()> {
        let w_star = self.sor_star();
        // Small slop so that w = sor_star() computed elsewhere passes.
        if !(w > 0.0 && w <= w_star + 1e-12) {
            return Err(Error::InvalidWeight { w, w_star });
        }
        Ok(())
    }

    /// One application of the relaxed operator without the weight range
    /// check. Bias experiments deliberately exceed `w*`; this is their
    /// entry point.
    pub fn apply_sor_bellman_unchecked(&self, q: &QTable, w: f64) -> QTable {
        let maxq = self.per_state_max(q);
        let mut out = QTable::zeros(self.n_states, self.n_actions);
        for i in 0..self.n_states {
            for a in 0..self.n_actions {
                let mut expected = 0.0;
                for j in 0..self.n_states {
                    expected += self.p(i, a, j) * (self.r(i, a, j) + self.gamma * maxq[j]);
                }
                out[(i, a)] = w * expected + (1.0 - w) * maxq[i];
            }
        }
        out
    }

    /// One application of the relaxed operator; fails unless `0 < w ≤ w*`.
    pub fn apply_sor_bellman(&self, q: &QTable, w: f64) -> Result<QTable> {
        self.check_q_shape(q)?;
        self.check_weight(w)?;
        Ok(self.apply_sor_bellman_unchecked(q, w))
    }

    /// One application of the plain Bellman optimality operator. This is the
    /// relaxed operator at `w = 1` and is computed through the same kernel,
    /// bit for bit.
    pub fn apply_bellman(&self, q: &QTable) -> Result<QTable> {
        self.check_q_shape(q)?;
        Ok(self.apply_sor_bellman_unchecked(q, 1.0))
    }

    /// Value iteration under the relaxed operator, starting from `Q = 0`,
    /// until the ∞-norm step falls below `tol`. Returns the iterate and the
    /// number of operator applications. Termination is guaranteed for
    /// `0 < w ≤ w*` since the contraction modulus is below one.
    pub fn solve_fixed_point(&self, w: f64, tol: f64, max_iter: usize) -> Result<(QTable, usize)> {
        assert!(tol > 0.0, "tolerance must be positive");
        self.check_weight(w)?;
        let mut q = QTable::zeros(self.n_states, self.n_actions);
        let mut residual = f64::INFINITY;
        for k in 1..=max_iter {
            let next = self.apply_sor_bellman_unchecked(&q, w);
            residual = next.linf_distance(&q);
            q = next;
            if residual < tol {
                return Ok((q, k));
            }
        }
        Err(Error::MaxIterations { max_iter, residual })
    }

    /// Draw a successor and reward for `(state, action)` by inverse CDF over
    /// the stored successor ordering.
    pub fn sample_transition(
        &self,
        state: usize,
        action: usize,
        rng: &mut impl Rng,
    ) -> (usize, f64) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for j in 0..self.n_states {
            let p = self.p(state, action, j);
            if p > 0.0 {
                last_nonzero = j;
                acc += p;
                if u < acc {
                    return (j, self.r(state, action, j));
                }
            }
        }
        // Rounding can leave acc marginally below 1; fall back to the last
        // reachable successor.
        (last_nonzero, self.r(state, action, last_nonzero))
    }

    /// Random test-bed MDP, deterministic in `seed`. Transition rows are
    /// Dirichlet(1,..,1) draws blended with a self-loop floor so that
    /// `P[i][a][i] ≥ min_self_loop`; rewards are uniform in [-1, 1].
    pub fn random(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        min_self_loop: f64,
        seed: u64,
    ) -> TabularMdp {
        assert!((0.0..1.0).contains(&min_self_loop));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut transition = vec![vec![vec![0.0; n_states]; n_actions]; n_states];
        let mut reward = vec![vec![vec![0.0; n_states]; n_actions]; n_states];
        for i in 0..n_states {
            for a in 0..n_actions {
                let mut row: Vec<f64> = (0..n_states).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= total;
                }
                for j in 0..n_states {
                    let base = if j == i { min_self_loop } else { 0.0 };
                    transition[i][a][j] = base + (1.0 - min_self_loop) * row[j];
                    reward[i][a][j] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        TabularMdp {
            n_states,
            n_actions,
            gamma,
            transition,
            reward,
            terminal: vec![false; n_states],
        }
    }

    /// Serialize to JSON with every real rendered at 17 significant digits,
    /// which round-trips `f64` exactly.
    pub fn to_json_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, F64Formatter);
        self.serialize(&mut ser)?;
        Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mdp: TabularMdp = serde_json::from_str(s)?;
        mdp.check_shape()?;
        Ok(mdp)
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// JSON formatter that renders every float with 17 significant digits.
struct F64Formatter;

impl serde_json::ser::Formatter for F64Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}
