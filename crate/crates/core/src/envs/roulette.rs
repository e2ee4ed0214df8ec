//! Single-state roulette with 170 betting actions and one quit action.
//!
//! Every bet is a straight-number bet on a double-zero (38 pocket) wheel
//! paying 35:1, so each play returns +35 with probability 1/38 and -1
//! otherwise — an expected loss of 1/19 ≈ $0.053 per dollar. Quitting pays
//! nothing and ends the episode; since the game has a single state, the quit
//! action is an episode boundary marker and the underlying model keeps every
//! action as a self-loop.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::EnvStep;
use crate::mdp::TabularMdp;

pub const N_BETS: usize = 170;
pub const N_ACTIONS: usize = N_BETS + 1;
/// Id of the "walk away" action.
pub const QUIT: usize = N_BETS;

const POCKETS: u32 = 38;
const PAYOUT: f64 = 35.0;

#[derive(Debug, Clone, Default)]
pub struct Roulette;

impl Roulette {
    pub fn new() -> Self {
        Roulette
    }

    pub fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> EnvStep {
        assert!(action < N_ACTIONS, "invalid roulette action {action}");
        if action == QUIT {
            return EnvStep {
                next_state: 0,
                reward: 0.0,
                terminal: true,
            };
        }
        let reward = if rng.gen_range(0..POCKETS) == 0 {
            PAYOUT
        } else {
            -1.0
        };
        EnvStep {
            next_state: 0,
            reward,
            terminal: false,
        }
    }

    /// Expected per-play return of any bet, `36/38 - 1 = -1/19`.
    pub fn expected_bet_return() -> f64 {
        PAYOUT / POCKETS as f64 + (-1.0) * (POCKETS - 1) as f64 / POCKETS as f64
    }

    /// Exact single-state model with expectation rewards; all actions
    /// self-loop, so `sor_star()` is `1/(1-γ)`.
    pub fn model(&self, gamma: f64) -> TabularMdp {
        let mut rewards = vec![vec![Self::expected_bet_return()]; N_ACTIONS];
        rewards[QUIT][0] = 0.0;
        TabularMdp::new(
            1,
            N_ACTIONS,
            gamma,
            vec![vec![vec![1.0]; N_ACTIONS]],
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
    fn quit_ends_the_episode_with_zero_payout() {
        let mut env = Roulette::new();
        let mut rng = substream(0, 0);
        let step = env.step(QUIT, &mut rng);
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
    fn bets_stay_in_the_single_state() {
        let mut env = Roulette::new();
        let mut rng = substream(1, 0);
        for action in [0, 77, 169] {
            let step = env.step(action, &mut rng);
            assert_eq!(step.next_state, 0);
            assert!(!step.terminal);
        }
    }

    #[test]
    fn bet_mean_matches_expected_loss() {
        let mut env = Roulette::new();
        let mut rng = substream(2, 0);
        let n = 4_000_000u64;
        let mut total = 0.0;
        for _ in 0..n {
            total += env.step(13, &mut rng).reward;
        }
        let mean = total / n as f64;
        assert_abs_diff_eq!(mean, Roulette::expected_bet_return(), epsilon = 0.004);
        assert_abs_diff_eq!(Roulette::expected_bet_return(), -1.0 / 19.0, epsilon = 1e-15);
    }

    #[test]
    fn model_is_valid_and_has_w_star_one_over_one_minus_gamma() {
        let env = Roulette::new();
        let mdp = env.model(0.95);
        assert!(mdp.validate().is_empty());
        assert_abs_diff_eq!(mdp.sor_star(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn optimal_value_is_zero() {
        let env = Roulette::new();
        let mdp = env.model(0.95);
        let (q, _) = mdp.solve_fixed_point(1.0, 1e-10, 100_000).unwrap();
        assert_abs_diff_eq!(q.max_action_value(0), 0.0, epsilon = 1e-8);
    }
}
