//! Single-state Gaussian bandit with an explicit quit action.
//!
//! The default configuration has 39 actions: 38 arms drawing rewards from
//! N(-0.0526, 1) that stay in the single state, and a 39th action that ends
//! the episode with no reward. The optimal value is zero. Arm count and the
//! reward distribution are configurable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::EnvStep;
use crate::mdp::TabularMdp;

#[derive(Debug, Clone)]
pub struct Bandit {
    n_arms: usize,
    mean: f64,
    std: f64,
}

impl Default for Bandit {
    fn default() -> Self {
        Self::new(38, -0.0526, 1.0)
    }
}

impl Bandit {
    /// `n_arms` reward arms plus the quit action.
    pub fn new(n_arms: usize, mean: f64, std: f64) -> Self {
        assert!(n_arms >= 1 && std >= 0.0);
        Self { n_arms, mean, std }
    }

    pub fn n_actions(&self) -> usize {
        self.n_arms + 1
    }

    /// Id of the episode-ending action.
    pub fn quit_action(&self) -> usize {
        self.n_arms
    }

    pub fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> EnvStep {
        assert!(action < self.n_actions(), "invalid bandit action {action}");
        if action == self.quit_action() {
            return EnvStep {
                next_state: 0,
                reward: 0.0,
                terminal: true,
            };
        }
        let z: f64 = rng.sample(StandardNormal);
        EnvStep {
            next_state: 0,
            reward: self.mean + self.std * z,
            terminal: false,
        }
    }

    pub fn model(&self, gamma: f64) -> TabularMdp {
        let mut rewards = vec![vec![self.mean]; self.n_actions()];
        rewards[self.quit_action()][0] = 0.0;
        TabularMdp::new(
            1,
            self.n_actions(),
            gamma,
            vec![vec![vec![1.0]; self.n_actions()]],
            vec![rewards],
            vec![false],
        )
        .expect("well-formed by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quit_ends_the_episode_with_no_reward() {
        let mut env = Bandit::default();
        let mut rng = substream(0, 0);
        let step = env.step(38, &mut rng);
        assert_eq!(
            step,
            EnvStep {
                next_state: 0,
                reward: 0.0,
                terminal: true
            }
        );
    }

    #[test]
    fn arm_rewards_match_declared_distribution() {
        let mut env = Bandit::default();
        let mut rng = substream(1, 0);
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let r = env.step(5, &mut rng).reward;
            sum += r;
            sumsq += r * r;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert_abs_diff_eq!(mean, -0.0526, epsilon = 0.004);
        assert_abs_diff_eq!(var, 1.0, epsilon = 0.01);
    }

    #[test]
    fn optimal_value_is_zero() {
        let env = Bandit::default();
        let mdp = env.model(0.99);
        assert!(mdp.validate().is_empty());
        let (q, _) = mdp.solve_fixed_point(1.0, 1e-10, 100_000).unwrap();
        assert_abs_diff_eq!(q.max_action_value(0), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(mdp.sor_star(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn arm_count_is_configurable() {
        let env = Bandit::new(10, -0.1, 1.0);
        assert_eq!(env.n_actions(), 11);
        assert_eq!(env.quit_action(), 10);
    }
}
