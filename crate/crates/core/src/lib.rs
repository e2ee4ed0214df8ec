//! Tabular reinforcement-learning laboratory built around successive
//! over-relaxation (SOR) of the Bellman optimality operator.
//!
//! The crate has three layers:
//!
//! - exact machinery used as ground truth: [`mdp`] holds finite MDP models,
//!   the plain and over-relaxed Bellman operators, and fixed-point solvers;
//!   [`relaxation`] estimates the largest admissible relaxation factor online
//!   from transition counts.
//! - sample-based learners: [`agents`] implements Q-learning, double
//!   Q-learning, their over-relaxed counterparts (fixed weight), and the
//!   model-free variants that track the weight with a [`relaxation::SorEstimator`].
//!   [`bias`] measures the estimator bias of the max / weighted-max / double
//!   estimators in isolation, outside any learning loop.
//! - experiment plumbing: [`envs`] provides the benchmark environments
//!   (roulette, a 39-arm Gaussian bandit, a maximization-bias chain, and
//!   discretized cart-pole), and [`harness`] runs seeded, reproducible
//!   experiment configurations and emits CSV and SVG output.
//!
//! Everything is deterministic given the configured seeds: all randomness
//! flows through explicitly passed ChaCha streams (see [`rng`]).

pub mod agents;
pub mod bias;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod relaxation;
pub mod rng;

pub use agents::{AgentState, Algorithm, StepSchedule, Transition};
pub use bias::{BiasEstimate, EstimatorProblem};
pub use envs::{Env, EnvStep};
pub use error::{Error, Result};
pub use harness::{ExperimentSpec, RunRecord};
pub use mdp::{QTable, TabularMdp};
pub use relaxation::SorEstimator;
