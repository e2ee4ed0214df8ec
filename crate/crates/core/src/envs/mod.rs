//! Benchmark environments behind one episodic interface.
//!
//! Every environment reports transitions as [`EnvStep`]s. A step with
//! `terminal = true` ends the episode; its `next_state` still carries a
//! valid state id (the environment's absorbing state), so learners always
//! bootstrap `max_b Q(next_state, b)` with no special casing:
//!
//! - roulette and the bandit have exactly one state, which doubles as the
//!   absorbing id — the quit action marks an episode boundary while the
//!   model remains a genuine single-state MDP where every action self-loops
//!   (and hence `w* = 1/(1-γ)`);
//! - the chain and cart-pole route terminal steps to a dedicated absorbing
//!   state whose Q row is never written and stays at zero.

mod bandit;
mod cartpole;
mod chain;
mod roulette;

pub use bandit::Bandit;
pub use cartpole::{discretize, physics_step, CartPole, CartPoleConfig, PUSH_LEFT, PUSH_RIGHT};
pub use chain::{step_from, Chain, ChainConfig, CHAIN_LEFT, CHAIN_RIGHT};
pub use roulette::Roulette;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::TabularMdp;

/// One environment transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvStep {
    /// Successor state id; on terminal steps, the absorbing state.
    pub next_state: usize,
    pub reward: f64,
    /// True when the episode ends with this step.
    pub terminal: bool,
}

/// The benchmark environments.
#[derive(Debug, Clone)]
pub enum Env {
    Roulette(Roulette),
    Bandit(Bandit),
    Chain(Chain),
    CartPole(CartPole),
}

impl Env {
    /// Number of state ids an agent must size its tables for, including any
    /// absorbing state.
    pub fn n_states(&self) -> usize {
        match self {
            Env::Roulette(_) => 1,
            Env::Bandit(_) => 1,
            Env::Chain(c) => c.n_states(),
            Env::CartPole(c) => c.n_states(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Env::Roulette(_) => roulette::N_ACTIONS,
            Env::Bandit(b) => b.n_actions(),
            Env::Chain(_) => 2,
            Env::CartPole(_) => 2,
        }
    }

    /// Start a fresh episode and return the initial state id.
    pub fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Env::Roulette(_) | Env::Bandit(_) => 0,
            Env::Chain(c) => c.reset(),
            Env::CartPole(c) => c.reset(rng),
        }
    }

    pub fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> EnvStep {
        match self {
            Env::Roulette(r) => r.step(action, rng),
            Env::Bandit(b) => b.step(action, rng),
            Env::Chain(c) => c.step(action, rng),
            Env::CartPole(c) => c.step(action, rng),
        }
    }

    /// State at which scalar metrics (greedy value, action probabilities)
    /// are probed.
    pub fn probe_state(&self) -> usize {
        match self {
            Env::Roulette(_) | Env::Bandit(_) | Env::Chain(_) => 0,
            Env::CartPole(c) => c.probe_state(),
        }
    }

    /// True for environments with exactly one non-terminal state, the only
    /// ones that admit synchronous (all actions at once) sweeps.
    pub fn supports_synchronous(&self) -> bool {
        matches!(self, Env::Roulette(_) | Env::Bandit(_))
    }

    /// Exact expectation-reward model, where one exists. Used for oracle
    /// values and for resolving weights specified as a fraction of `w*`.
    pub fn model(&self, gamma: f64) -> Option<TabularMdp> {
        match self {
            Env::Roulette(r) => Some(r.model(gamma)),
            Env::Bandit(b) => Some(b.model(gamma)),
            Env::Chain(c) => Some(c.model(gamma)),
            Env::CartPole(_) => None,
        }
    }
}
