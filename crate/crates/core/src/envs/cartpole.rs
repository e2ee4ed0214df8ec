//! Cart-pole balancing with a coarse tabular discretization.
//!
//! Standard benchmark dynamics (gravity 9.8, cart mass 1.0, pole mass 0.1,
//! half-length 0.5, force ±10 N) integrated with semi-implicit Euler at
//! τ = 0.02 s. The episode ends when the pole angle leaves ±12° or the cart
//! leaves ±2.4 m; every non-terminal step pays +1.
//!
//! The default discretization uses 72 states: position and velocity are
//! left unbinned while the pole angle gets 12 bins over ±12° and the angular
//! velocity 6 bins over ±2 rad/s. State id 72 is the absorbing terminal.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EnvStep;

pub const PUSH_LEFT: usize = 0;
pub const PUSH_RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleConfig {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub force_mag: f64,
    /// Integration step in seconds.
    pub tau: f64,
    /// Termination bound on |x|.
    pub x_limit: f64,
    /// Termination bound on |θ| in radians.
    pub theta_limit: f64,
    /// Bins per dimension, in (x, ẋ, θ, θ̇) order.
    pub bins: [usize; 4],
    /// Lower grid bounds per dimension (values clamp to edge bins).
    pub low: [f64; 4],
    pub high: [f64; 4],
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        let theta_limit = 12.0_f64.to_radians();
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            x_limit: 2.4,
            theta_limit,
            bins: [1, 1, 12, 6],
            low: [-2.4, -3.0, -theta_limit, -2.0],
            high: [2.4, 3.0, theta_limit, 2.0],
        }
    }
}

impl CartPoleConfig {
    pub fn n_bins(&self) -> usize {
        self.bins.iter().product()
    }
}

/// Advance the continuous state one step under the given push direction.
pub fn physics_step(state: [f64; 4], action: usize, cfg: &CartPoleConfig) -> [f64; 4] {
    let [mut x, mut x_dot, mut theta, mut theta_dot] = state;
    let force = if action == PUSH_RIGHT {
        cfg.force_mag
    } else {
        -cfg.force_mag
    };
    let cos = theta.cos();
    let sin = theta.sin();
    let total_mass = cfg.cart_mass + cfg.pole_mass;
    let polemass_length = cfg.pole_mass * cfg.pole_half_length;
    let temp = (force + polemass_length * theta_dot * theta_dot * sin) / total_mass;
    let theta_acc = (cfg.gravity * sin - cos * temp)
        / (cfg.pole_half_length * (4.0 / 3.0 - cfg.pole_mass * cos * cos / total_mass));
    let x_acc = temp - polemass_length * theta_acc * cos / total_mass;
    // Semi-implicit Euler: velocities first, then positions with the new
    // velocities.
    x_dot += cfg.tau * x_acc;
    x += cfg.tau * x_dot;
    theta_dot += cfg.tau * theta_acc;
    theta += cfg.tau * theta_dot;
    [x, x_dot, theta, theta_dot]
}

pub fn is_terminal(state: &[f64; 4], cfg: &CartPoleConfig) -> bool {
    state[0].abs() > cfg.x_limit || state[2].abs() > cfg.theta_limit
}

fn bin_index(value: f64, low: f64, high: f64, bins: usize) -> usize {
    if bins == 1 || value <= low {
        return 0;
    }
    if value >= high {
        return bins - 1;
    }
    let idx = ((value - low) / (high - low) * bins as f64) as usize;
    idx.min(bins - 1)
}

/// Flattened bin id of a continuous state, in [0, product of bins).
pub fn discretize(state: &[f64; 4], cfg: &CartPoleConfig) -> usize {
    assert!(state.iter().all(|v| v.is_finite()));
    let mut id = 0;
    for d in 0..4 {
        let b = bin_index(state[d], cfg.low[d], cfg.high[d], cfg.bins[d]);
        id = id * cfg.bins[d] + b;
    }
    id
}

#[derive(Debug, Clone)]
pub struct CartPole {
    config: CartPoleConfig,
    state: [f64; 4],
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new(CartPoleConfig::default())
    }
}

impl CartPole {
    pub fn new(config: CartPoleConfig) -> Self {
        assert!(config.tau > 0.0);
        Self {
            config,
            state: [0.0; 4],
        }
    }

    pub fn config(&self) -> &CartPoleConfig {
        &self.config
    }

    /// Bin states plus the absorbing terminal id.
    pub fn n_states(&self) -> usize {
        self.config.n_bins() + 1
    }

    pub fn terminal_state(&self) -> usize {
        self.config.n_bins()
    }

    pub fn continuous_state(&self) -> [f64; 4] {
        self.state
    }

    /// Bin id of the upright center state.
    pub fn probe_state(&self) -> usize {
        discretize(&[0.0; 4], &self.config)
    }

    /// Draw each state component uniformly from [-0.05, 0.05].
    pub fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize {
        for v in &mut self.state {
            *v = rng.gen_range(-0.05..0.05);
        }
        discretize(&self.state, &self.config)
    }

    pub fn step(&mut self, action: usize, _rng: &mut ChaCha8Rng) -> EnvStep {
        assert!(action < 2, "cart-pole actions are left (0) and right (1)");
        self.state = physics_step(self.state, action, &self.config);
        if is_terminal(&self.state, &self.config) {
            EnvStep {
                next_state: self.terminal_state(),
                reward: 0.0,
                terminal: true,
            }
        } else {
            EnvStep {
                next_state: discretize(&self.state, &self.config),
                reward: 1.0,
                terminal: false,
            }
        }
    }
}
