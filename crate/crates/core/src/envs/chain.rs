//! Maximization-bias chain.
//!
//! States `0..=m`: the agent starts at 0. Moving right from 0 ends the
//! episode with no reward; moving left lands uniformly on one of the `m`
//! middle states. From a middle state, right returns to 0 with no reward and
//! left ends the episode with a reward drawn from N(-0.1, 1). The noisy
//! left exits make max-based learners transiently prefer left from state 0
//! even though right is never worse.
//!
//! State id `m + 1` is the absorbing terminal state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EnvStep;
use crate::mdp::TabularMdp;

pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of middle states.
    pub m: usize,
    pub left_reward_mean: f64,
    pub left_reward_std: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            m: 8,
            left_reward_mean: -0.1,
            left_reward_std: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    config: ChainConfig,
    state: usize,
}

impl Chain {
    pub fn new(config: ChainConfig) -> Self {
        assert!(config.m >= 1);
        Self { config, state: 0 }
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    /// All walkable states plus the absorbing terminal.
    pub fn n_states(&self) -> usize {
        self.config.m + 2
    }

    pub fn terminal_state(&self) -> usize {
        self.config.m + 1
    }

    pub fn reset(&mut self) -> usize {
        self.state = 0;
        0
    }

    pub fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> EnvStep {
        let step = step_from(self.state, action, &self.config, rng);
        self.state = step.next_state;
        step
    }

    /// Exact model with expectation rewards, suitable for oracle solves.
    pub fn model(&self, gamma: f64) -> TabularMdp {
        let cfg = &self.config;
        let n = self.n_states();
        let t = self.terminal_state();
        let mut transition = vec![vec![vec![0.0; n]; 2]; n];
        let mut reward = vec![vec![vec![0.0; n]; 2]; n];
        // start state
        for k in 1..=cfg.m {
            transition[0][CHAIN_LEFT][k] = 1.0 / cfg.m as f64;
        }
        transition[0][CHAIN_RIGHT][t] = 1.0;
        // middle states
        for k in 1..=cfg.m {
            transition[k][CHAIN_LEFT][t] = 1.0;
            reward[k][CHAIN_LEFT][t] = cfg.left_reward_mean;
            transition[k][CHAIN_RIGHT][0] = 1.0;
        }
        // absorbing terminal
        for a in 0..2 {
            transition[t][a][t] = 1.0;
        }
        let mut terminal = vec![false; n];
        terminal[t] = true;
        TabularMdp::new(n, 2, gamma, transition, reward, terminal)
            .expect("well-formed by construction")
    }
}

/// Pure transition function; `state` must be walkable (not the absorbing id).
pub fn step_from(
    state: usize,
    action: usize,
    config: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> EnvStep {
    assert!(action < 2, "chain actions are left (0) and right (1)");
    assert!(state <= config.m, "invalid chain state {state}");
    let terminal_state = config.m + 1;
    if state == 0 {
        if action == CHAIN_RIGHT {
            EnvStep {
                next_state: terminal_state,
                reward: 0.0,
                terminal: true,
            }
        } else {
            EnvStep {
                next_state: 1 + rng.gen_range(0..config.m),
                reward: 0.0,
                terminal: false,
            }
        }
    } else if action == CHAIN_RIGHT {
        EnvStep {
            next_state: 0,
            reward: 0.0,
            terminal: false,
        }
    } else {
        let z: f64 = rng.sample(StandardNormal);
        EnvStep {
            next_state: terminal_state,
            reward: config.left_reward_mean + config.left_reward_std * z,
            terminal: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn right_from_start_ends_with_zero_reward() {
        let mut env = Chain::new(ChainConfig::default());
        let mut rng = substream(0, 0);
        env.reset();
        let step = env.step(CHAIN_RIGHT, &mut rng);
        assert!(step.terminal);
        assert_eq!(step.reward, 0.0);
        assert_eq!(step.next_state, env.terminal_state());
    }

    #[test]
    fn left_from_start_is_uniform_over_middles() {
        let config = ChainConfig::default();
        let mut rng = substream(1, 0);
        let mut counts = vec![0u64; config.m + 2];
        let draws = 100_000;
        for _ in 0..draws {
            let step = step_from(0, CHAIN_LEFT, &config, &mut rng);
            counts[step.next_state] += 1;
        }
        assert_eq!(counts[0], 0);
        assert_eq!(counts[config.m + 1], 0);
        for k in 1..=config.m {
            let freq = counts[k] as f64 / draws as f64;
            assert!((freq - 1.0 / config.m as f64).abs() < 0.01, "freq {freq}");
        }
    }

    #[test]
    fn left_from_middle_draws_gaussian_reward() {
        let config = ChainConfig::default();
        let mut rng = substream(2, 0);
        let n = 1_000_000u64;
        let mut total = 0.0;
        for _ in 0..n {
            total += step_from(3, CHAIN_LEFT, &config, &mut rng).reward;
        }
        assert_abs_diff_eq!(total / n as f64, -0.1, epsilon = 0.004);
    }

    #[test]
    fn right_from_middle_returns_to_start() {
        let config = ChainConfig::default();
        let mut rng = substream(3, 0);
        let step = step_from(5, CHAIN_RIGHT, &config, &mut rng);
        assert_eq!(step.next_state, 0);
        assert!(!step.terminal);
        assert_eq!(step.reward, 0.0);
    }

    #[test]
    fn exported_model_orders_actions_correctly() {
        let env = Chain::new(ChainConfig::default());
        let mdp = env.model(0.999);
        assert!(mdp.validate().is_empty());
        let (q, _) = mdp.solve_fixed_point(1.0, 1e-10, 100_000).unwrap();
        // Right from the start is worth exactly zero. Left ties it in the
        // optimal values (the agent can always come back), so right is never
        // worse; at the middle states right is strictly better.
        assert_abs_diff_eq!(q[(0, CHAIN_RIGHT)], 0.0, epsilon = 1e-9);
        assert!(q[(0, CHAIN_LEFT)] <= q[(0, CHAIN_RIGHT)] + 1e-9);
        for k in 1..=env.config().m {
            assert_abs_diff_eq!(q[(k, CHAIN_LEFT)], -0.1, epsilon = 1e-9);
            assert!(q[(k, CHAIN_RIGHT)] > q[(k, CHAIN_LEFT)] + 0.05);
        }
    }
}
