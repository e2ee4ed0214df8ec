//! Sample-based learners behind a single step interface.
//!
//! Six algorithms share two update kernels:
//!
//! - single-table: `Q(i,a) ← (1-β) Q(i,a) + β [ w (r + γ max_b Q(j,b)) + (1-w) max_b Q(i,b) ]`
//! - double-table: a fair coin picks the table to update; the selected
//!   table supplies the argmax actions and the other table supplies their
//!   values, which damps maximization bias (van Hasselt, 2010).
//!
//! Plain Q-learning and double Q-learning are exactly the kernels at
//! `w = 1`, so with shared random streams the pairs produce bit-identical
//! tables — a property the tests lean on heavily. The model-free variants
//! drive `w` with an attached [`SorEstimator`] instead of a fixed value,
//! recording every transition and nudging the weight before each update.
//!
//! Argmax ties inside updates break toward the lowest action index so traces
//! are reproducible; action-selection ties break uniformly at random so
//! exploration stays unbiased.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::QTable;
use crate::relaxation::SorEstimator;

/// Algorithm tag carried by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ql,
    Dql,
    Sorql,
    Dsorql,
    MfSorql,
    MfDsorql,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ql => "ql",
            Algorithm::Dql => "dql",
            Algorithm::Sorql => "sorql",
            Algorithm::Dsorql => "dsorql",
            Algorithm::MfSorql => "mf_sorql",
            Algorithm::MfDsorql => "mf_dsorql",
        }
    }

    pub fn is_double(self) -> bool {
        matches!(
            self,
            Algorithm::Dql | Algorithm::Dsorql | Algorithm::MfDsorql
        )
    }

    pub fn is_model_free_sor(self) -> bool {
        matches!(self, Algorithm::MfSorql | Algorithm::MfDsorql)
    }
}

/// Learning-rate schedule, evaluated per state-action pair.
///
/// `beta(n)` receives the number of updates already applied to the pair, so
/// the first update of a polynomial schedule uses β = 1 (full replacement of
/// the zero initialization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `β = 1 / N(i,a)^exponent` with the 1-based visit count N.
    Polynomial { exponent: f64 },
    /// `β = numerator / (n + shift)` with the 0-based prior-update count n.
    LinearShifted { numerator: f64, shift: f64 },
}

impl StepSchedule {
    pub fn polynomial(exponent: f64) -> Self {
        StepSchedule::Polynomial { exponent }
    }

    pub fn linear_shifted(numerator: f64, shift: f64) -> Self {
        StepSchedule::LinearShifted { numerator, shift }
    }

    /// Validity of the parameters: β must stay in [0, 1] with Σβ = ∞ and
    /// Σβ² < ∞, which holds for exponents in (0.5, 1] and numerator ≤ shift.
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Polynomial { exponent } => {
                if !(exponent > 0.5 && exponent <= 1.0) {
                    return Err(Error::Config(format!(
                        "polynomial step exponent {exponent} outside (0.5, 1]"
                    )));
                }
            }
            StepSchedule::LinearShifted { numerator, shift } => {
                if !(numerator > 0.0 && shift > 0.0 && numerator <= shift) {
                    return Err(Error::Config(format!(
                        "linear_shifted schedule needs 0 < numerator <= shift, got {numerator}/{shift}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Step size for an update when `prior_updates` have already hit the pair.
    pub fn beta(&self, prior_updates: u64) -> f64 {
        match *self {
            StepSchedule::Polynomial { exponent } => {
                1.0 / ((prior_updates + 1) as f64).powf(exponent)
            }
            StepSchedule::LinearShifted { numerator, shift } => {
                numerator / (prior_updates as f64 + shift)
            }
        }
    }
}

/// Where the relaxation weight comes from.
#[derive(Debug, Clone)]
pub enum WMode {
    Fixed(f64),
    Estimated(SorEstimator),
}

/// One observed transition.
#[derive(Debug, Clone, Copy)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub reward: f64,
}

impl Transition {
    pub fn new(state: usize, action: usize, next_state: usize, reward: f64) -> Self {
        Self {
            state,
            action,
            next_state,
            reward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Table {
    A,
    B,
}

/// A learner: one or two Q tables, per-pair visit counters, a step-size
/// schedule, the relaxation-weight source, and a private random stream.
#[derive(Debug, Clone)]
pub struct AgentState {
    algorithm: Algorithm,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    q_a: QTable,
    q_b: Option<QTable>,
    counts_a: Vec<u64>,
    counts_b: Option<Vec<u64>>,
    w_mode: WMode,
    schedule: StepSchedule,
    rng: ChaCha8Rng,
    total_updates: u64,
    /// Compatibility switch: when updating table B, take the argmax actions
    /// from table A instead of table B. The symmetric form (argmax from the
    /// updated table, values from the other) is the default.
    literal_b_argmax: bool,
}

impl AgentState {
    pub fn new(
        algorithm: Algorithm,
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        w_mode: WMode,
        schedule: StepSchedule,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        schedule.validate()?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount {gamma} outside [0, 1)")));
        }
        let w_mode = match (algorithm, w_mode) {
            // Plain learners are the w = 1 case regardless of what was passed.
            (Algorithm::Ql | Algorithm::Dql, _) => WMode::Fixed(1.0),
            (Algorithm::Sorql | Algorithm::Dsorql, WMode::Fixed(w)) => {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::Config(format!("fixed weight {w} must be positive")));
                }
                WMode::Fixed(w)
            }
            (Algorithm::Sorql | Algorithm::Dsorql, WMode::Estimated(_)) => {
                return Err(Error::Config(
                    "sorql/dsorql take a fixed weight, not an estimator".into(),
                ))
            }
            (Algorithm::MfSorql | Algorithm::MfDsorql, WMode::Estimated(est)) => {
                WMode::Estimated(est)
            }
            (Algorithm::MfSorql | Algorithm::MfDsorql, WMode::Fixed(_)) => {
                return Err(Error::DetachedEstimator)
            }
        };
        let double = algorithm.is_double();
        Ok(Self {
            algorithm,
            n_states,
            n_actions,
            gamma,
            q_a: QTable::zeros(n_states, n_actions),
            q_b: double.then(|| QTable::zeros(n_states, n_actions)),
            counts_a: vec![0; n_states * n_actions],
            counts_b: double.then(|| vec![0; n_states * n_actions]),
            w_mode,
            schedule,
            rng,
            total_updates: 0,
            literal_b_argmax: false,
        })
    }

    pub fn set_literal_b_argmax(&mut self, literal: bool) {
        self.literal_b_argmax = literal;
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn q_a(&self) -> &QTable {
        &self.q_a
    }

    pub fn q_b(&self) -> Option<&QTable> {
        self.q_b.as_ref()
    }

    /// Updates applied to `(state, action)` on table A (the only table for
    /// single variants).
    pub fn visit_count(&self, state: usize, action: usize) -> u64 {
        self.counts_a[state * self.n_actions + action]
    }

    pub fn visit_count_b(&self, state: usize, action: usize) -> Option<u64> {
        self.counts_b
            .as_ref()
            .map(|c| c[state * self.n_actions + action])
    }

    /// Current relaxation weight (fixed value or the estimator's iterate).
    pub fn current_w(&self) -> f64 {
        match &self.w_mode {
            WMode::Fixed(w) => *w,
            WMode::Estimated(est) => est.w(),
        }
    }

    pub fn estimator(&self) -> Option<&SorEstimator> {
        match &self.w_mode {
            WMode::Estimated(est) => Some(est),
            WMode::Fixed(_) => None,
        }
    }

    /// Table used for greedy decisions and evaluation: `q_a` for single
    /// variants, the elementwise mean of both tables for double variants.
    pub fn decision_table(&self) -> QTable {
        match &self.q_b {
            None => self.q_a.clone(),
            Some(q_b) => {
                let mut out = QTable::zeros(self.n_states, self.n_actions);
                for s in 0..self.n_states {
                    for a in 0..self.n_actions {
                        out[(s, a)] = 0.5 * (self.q_a[(s, a)] + q_b[(s, a)]);
                    }
                }
                out
            }
        }
    }

    #[inline]
    fn decision_value(&self, state: usize, action: usize) -> f64 {
        match &self.q_b {
            None => self.q_a[(state, action)],
            Some(q_b) => 0.5 * (self.q_a[(state, action)] + q_b[(state, action)]),
        }
    }

    /// Greedy value of the decision table at `state`.
    pub fn decision_max(&self, state: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| self.decision_value(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact-tie greedy action set size and membership test for `action`,
    /// from the decision table. Used by the harness to turn a table into an
    /// ε-greedy action probability without sampling.
    pub fn greedy_tie_info(&self, state: usize, action: usize) -> (usize, bool) {
        let max = self.decision_max(state);
        let mut ties = 0;
        let mut contains = false;
        for a in 0..self.n_actions {
            if self.decision_value(state, a) == max {
                ties += 1;
                if a == action {
                    contains = true;
                }
            }
        }
        (ties, contains)
    }

    /// ε-greedy action selection on the decision table. Ties at the maximum
    /// break uniformly at random.
    pub fn act_epsilon_greedy(&mut self, state: usize, epsilon: f64) -> usize {
        let u: f64 = self.rng.gen();
        if u < epsilon {
            return self.rng.gen_range(0..self.n_actions);
        }
        let max = self.decision_max(state);
        let mut ties = 0;
        let mut first = 0;
        for a in 0..self.n_actions {
            if self.decision_value(state, a) == max {
                if ties == 0 {
                    first = a;
                }
                ties += 1;
            }
        }
        if ties <= 1 {
            return first;
        }
        let pick = self.rng.gen_range(0..ties);
        let mut seen = 0;
        for a in 0..self.n_actions {
            if self.decision_value(state, a) == max {
                if seen == pick {
                    return a;
                }
                seen += 1;
            }
        }
        unreachable!("tie index within counted ties")
    }

    fn expect(&self, expected: Algorithm) -> Result<()> {
        if self.algorithm != expected {
            return Err(Error::WrongAlgorithm {
                expected: expected.name(),
                actual: self.algorithm.name(),
            });
        }
        Ok(())
    }

    fn fixed_w(&self) -> f64 {
        match &self.w_mode {
            WMode::Fixed(w) => *w,
            WMode::Estimated(_) => unreachable!("fixed-weight algorithms hold WMode::Fixed"),
        }
    }

    /// Record the transition on the attached estimator and advance the
    /// weight iterate. Errors if the agent holds a fixed weight.
    fn observe_and_update_w(&mut self, t: &Transition) -> Result<f64> {
        match &mut self.w_mode {
            WMode::Estimated(est) => {
                est.record(t.state, t.action, t.next_state);
                Ok(est.update_w())
            }
            WMode::Fixed(_) => Err(Error::DetachedEstimator),
        }
    }

    fn beta_for(&mut self, table: Table, state: usize, action: usize) -> f64 {
        let idx = state * self.n_actions + action;
        let counts = match table {
            Table::A => &mut self.counts_a,
            Table::B => self.counts_b.as_mut().expect("double variant carries B"),
        };
        let prior = counts[idx];
        counts[idx] += 1;
        self.schedule.beta(prior)
    }

    fn write(&mut self, table: Table, state: usize, action: usize, value: f64) -> Result<()> {
        self.total_updates += 1;
        let q = match table {
            Table::A => &mut self.q_a,
            Table::B => self.q_b.as_mut().expect("double variant carries B"),
        };
        q[(state, action)] = value;
        if !value.is_finite() {
            return Err(Error::Divergence {
                state,
                action,
                step: self.total_updates,
            });
        }
        Ok(())
    }

    /// Single-table relaxed update. All single-table algorithms funnel
    /// through here so that w = 1 reproduces plain Q-learning bit for bit.
    fn single_step(&mut self, t: &Transition, w: f64) -> Result<()> {
        let max_next = self.q_a.max_action_value(t.next_state);
        let max_cur = self.q_a.max_action_value(t.state);
        let target = w * (t.reward + self.gamma * max_next) + (1.0 - w) * max_cur;
        let beta = self.beta_for(Table::A, t.state, t.action);
        let old = self.q_a[(t.state, t.action)];
        self.write(
            Table::A,
            t.state,
            t.action,
            (1.0 - beta) * old + beta * target,
        )
    }

    /// Double-table relaxed update: a fair coin picks the table.
    fn double_step(&mut self, t: &Transition, w: f64) -> Result<()> {
        let update_a = self.rng.gen_bool(0.5);
        let q_b = self.q_b.as_ref().expect("double variant carries B");
        let (selector, values) = if update_a {
            (&self.q_a, q_b)
        } else if self.literal_b_argmax {
            (&self.q_a, &self.q_a)
        } else {
            (q_b, &self.q_a)
        };
        let best_next = selector.argmax_first(t.next_state);
        let best_cur = selector.argmax_first(t.state);
        let target = w * (t.reward + self.gamma * values[(t.next_state, best_next)])
            + (1.0 - w) * values[(t.state, best_cur)];
        let table = if update_a { Table::A } else { Table::B };
        let beta = self.beta_for(table, t.state, t.action);
        let old = match table {
            Table::A => self.q_a[(t.state, t.action)],
            Table::B => self.q_b.as_ref().unwrap()[(t.state, t.action)],
        };
        self.write(table, t.state, t.action, (1.0 - beta) * old + beta * target)
    }

    pub fn ql_step(&mut self, t: &Transition) -> Result<()> {
        self.expect(Algorithm::Ql)?;
        self.single_step(t, 1.0)
    }

    pub fn sorql_step(&mut self, t: &Transition) -> Result<()> {
        self.expect(Algorithm::Sorql)?;
        let w = self.fixed_w();
        self.single_step(t, w)
    }

    pub fn dql_step(&mut self, t: &Transition) -> Result<()> {
        self.expect(Algorithm::Dql)?;
        self.double_step(t, 1.0)
    }

    pub fn dsorql_step(&mut self, t: &Transition) -> Result<()> {
        self.expect(Algorithm::Dsorql)?;
        let w = self.fixed_w();
        self.double_step(t, w)
    }

    pub fn mf_sorql_step(&mut self, t: &Transition) -> Result<()> {
        self.expect(Algorithm::MfSorql)?;
        let w = self.observe_and_update_w(t)?;
        self.single_step(t, w)
    }

    pub fn mf_dsorql_step(&mut self, t: &Transition) -> Result<()> {
        self.expect(Algorithm::MfDsorql)?;
        let w = self.observe_and_update_w(t)?;
        self.double_step(t, w)
    }

    /// Dispatch on the algorithm tag.
    pub fn step(&mut self, t: &Transition) -> Result<()> {
        match self.algorithm {
            Algorithm::Ql => self.ql_step(t),
            Algorithm::Dql => self.dql_step(t),
            Algorithm::Sorql => self.sorql_step(t),
            Algorithm::Dsorql => self.dsorql_step(t),
            Algorithm::MfSorql => self.mf_sorql_step(t),
            Algorithm::MfDsorql => self.mf_dsorql_step(t),
        }
    }

    /// Synchronous sweep: apply the update rule to every action of `state`
    /// at once, each with its own sampled outcome, all targets computed from
    /// the tables as they stood before the sweep. Double variants flip one
    /// coin per action. Intended for single-state setups where every action
    /// can be sampled in one trial.
    pub fn sync_sweep(&mut self, state: usize, outcomes: &[(usize, f64)]) -> Result<()> {
        assert_eq!(outcomes.len(), self.n_actions, "one outcome per action");
        if self.algorithm.is_model_free_sor() {
            for (a, &(next, _)) in outcomes.iter().enumerate() {
                let t = Transition::new(state, a, next, 0.0);
                self.observe_and_update_w(&t)?;
            }
        }
        let w = self.current_w();
        if self.algorithm.is_double() {
            let snapshot_a = self.q_a.clone();
            let snapshot_b = self.q_b.clone().expect("double variant carries B");
            // All targets read the pre-sweep snapshot, so per-state argmaxes
            // can be memoized across the sweep.
            let mut argmax_a = vec![usize::MAX; self.n_states];
            let mut argmax_b = vec![usize::MAX; self.n_states];
            let mut memo_argmax = |table: &QTable, cache: &mut Vec<usize>, s: usize| {
                if cache[s] == usize::MAX {
                    cache[s] = table.argmax_first(s);
                }
                cache[s]
            };
            let mut writes = Vec::with_capacity(self.n_actions);
            for (a, &(next, reward)) in outcomes.iter().enumerate() {
                let update_a = self.rng.gen_bool(0.5);
                let literal = self.literal_b_argmax;
                let (best_next, best_cur, values) = if update_a {
                    (
                        memo_argmax(&snapshot_a, &mut argmax_a, next),
                        memo_argmax(&snapshot_a, &mut argmax_a, state),
                        &snapshot_b,
                    )
                } else if literal {
                    (
                        memo_argmax(&snapshot_a, &mut argmax_a, next),
                        memo_argmax(&snapshot_a, &mut argmax_a, state),
                        &snapshot_a,
                    )
                } else {
                    (
                        memo_argmax(&snapshot_b, &mut argmax_b, next),
                        memo_argmax(&snapshot_b, &mut argmax_b, state),
                        &snapshot_a,
                    )
                };
                let target = w * (reward + self.gamma * values[(next, best_next)])
                    + (1.0 - w) * values[(state, best_cur)];
                let table = if update_a { Table::A } else { Table::B };
                let beta = self.beta_for(table, state, a);
                let old = match table {
                    Table::A => snapshot_a[(state, a)],
                    Table::B => snapshot_b[(state, a)],
                };
                writes.push((table, a, (1.0 - beta) * old + beta * target));
            }
            for (table, a, value) in writes {
                self.write(table, state, a, value)?;
            }
        } else {
            let snapshot = self.q_a.clone();
            let max_cur = snapshot.max_action_value(state);
            let mut max_next_memo = vec![f64::NAN; self.n_states];
            let mut writes = Vec::with_capacity(self.n_actions);
            for (a, &(next, reward)) in outcomes.iter().enumerate() {
                if max_next_memo[next].is_nan() {
                    max_next_memo[next] = snapshot.max_action_value(next);
                }
                let target = w * (reward + self.gamma * max_next_memo[next]) + (1.0 - w) * max_cur;
                let beta = self.beta_for(Table::A, state, a);
                let old = snapshot[(state, a)];
                writes.push((a, (1.0 - beta) * old + beta * target));
            }
            for (a, value) in writes {
                self.write(Table::A, state, a, value)?;
            }
        }
        Ok(())
    }
}
