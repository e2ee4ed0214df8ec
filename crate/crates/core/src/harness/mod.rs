//! Configuration-driven experiment runner.
//!
//! An [`ExperimentSpec`] names an environment preset, one or more agent
//! configurations, an episode (or step) budget, an exploration schedule, and
//! a list of seeds. [`run_experiment`] trains every (agent, seed) pair from
//! scratch and returns metric samples as flat [`RunRecord`]s in a fixed
//! order, so identical specs produce identical records — and identical CSV
//! bytes. Seeds map to independent random streams via a counter-based split,
//! so extending the seed list never perturbs existing runs.
//!
//! Runs are embarrassingly parallel; [`run_experiment_parallel`] executes
//! them on a thread pool and merges results in the same deterministic order
//! as the serial path.

mod plot;
mod presets;
mod records;

pub use plot::{plot_svg, write_plot};
pub use presets::{preset_by_name, preset_names, presets};
pub use records::{
    aggregate, parse_csv, records_to_csv_string, summaries_to_csv_string, write_records_csv,
    write_summaries_csv, GroupField, Summary,
};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentState, Algorithm, StepSchedule, Transition, WMode};
use crate::envs::{Bandit, CartPole, Chain, ChainConfig, Env, Roulette};
use crate::error::{Error, Result};
use crate::relaxation::SorEstimator;
use crate::rng::{substream, AGENT_STREAM, ENV_STREAM};

/// Config schema identifier expected at the top of experiment files.
pub const SCHEMA: &str = "sorq-experiment/1";

/// Environment preset, selected by name: `roulette`, `bandit39`, `chain(m)`,
/// or `cartpole72`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvPreset {
    Roulette,
    Bandit39,
    Chain { m: usize },
    CartPole72,
}

impl EnvPreset {
    pub fn build(&self) -> Env {
        match *self {
            EnvPreset::Roulette => Env::Roulette(Roulette::new()),
            EnvPreset::Bandit39 => Env::Bandit(Bandit::default()),
            EnvPreset::Chain { m } => Env::Chain(Chain::new(ChainConfig {
                m,
                ..ChainConfig::default()
            })),
            EnvPreset::CartPole72 => Env::CartPole(CartPole::default()),
        }
    }
}

impl fmt::Display for EnvPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvPreset::Roulette => write!(f, "roulette"),
            EnvPreset::Bandit39 => write!(f, "bandit39"),
            EnvPreset::Chain { m } => write!(f, "chain({m})"),
            EnvPreset::CartPole72 => write!(f, "cartpole72"),
        }
    }
}

impl FromStr for EnvPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roulette" => return Ok(EnvPreset::Roulette),
            "bandit39" => return Ok(EnvPreset::Bandit39),
            "cartpole72" => return Ok(EnvPreset::CartPole72),
            _ => {}
        }
        if let Some(inner) = s.strip_prefix("chain(").and_then(|r| r.strip_suffix(')')) {
            let m: usize = inner
                .parse()
                .map_err(|_| Error::Config(format!("bad chain size in environment '{s}'")))?;
            if m == 0 {
                return Err(Error::Config("chain needs at least one middle state".into()));
            }
            return Ok(EnvPreset::Chain { m });
        }
        Err(Error::Config(format!(
            "unknown environment '{s}' (expected roulette, bandit39, chain(m), or cartpole72)"
        )))
    }
}

impl Serialize for EnvPreset {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EnvPreset {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Exploration schedule, evaluated at the global environment-step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Constant(f64),
    Linear {
        start: f64,
        end: f64,
        decay_steps: u64,
    },
}

impl EpsilonSchedule {
    pub fn at(&self, step: u64) -> f64 {
        match *self {
            EpsilonSchedule::Constant(eps) => eps,
            EpsilonSchedule::Linear {
                start,
                end,
                decay_steps,
            } => {
                if step >= decay_steps {
                    end
                } else {
                    start + (end - start) * step as f64 / decay_steps as f64
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |e: f64| (0.0..=1.0).contains(&e);
        match *self {
            EpsilonSchedule::Constant(e) if ok(e) => Ok(()),
            EpsilonSchedule::Linear {
                start,
                end,
                decay_steps,
            } if ok(start) && ok(end) && decay_steps > 0 => Ok(()),
            _ => Err(Error::Config(
                "epsilon values must lie in [0, 1] with positive decay_steps".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    Asynchronous,
    Synchronous,
}

/// Where an agent's relaxation weight comes from, as written in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WSpec {
    Fixed(f64),
    Estimated,
    /// `w = fraction * w*`, with `w*` computed from the environment's exact
    /// model. Only available for environments that expose one.
    WStarFraction(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    /// CSV label; defaults to the algorithm name. Must be alphanumeric or
    /// underscore so CSV output never needs quoting.
    #[serde(default)]
    pub label: Option<String>,
    pub w: WSpec,
    pub schedule: StepSchedule,
    #[serde(default)]
    pub literal_b_argmax: bool,
}

impl AgentConfig {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.algorithm.name().to_string())
    }
}

/// Metric tags the runner can sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpec {
    /// Greedy value of the decision table at the environment's probe state.
    MaxQ,
    EpisodeReturn,
    RollingMeanReturn { window: usize },
    /// First episode whose trailing-window mean return reaches the
    /// threshold; emitted once per run, -1 when never reached.
    EpisodesToThreshold { threshold: f64, window: usize },
    /// ε-greedy probability of action 0 at the probe state, implied by the
    /// current decision table (no sampling).
    LeftActionProbability,
    /// Current relaxation weight.
    WTrace,
}

impl MetricSpec {
    fn tag(&self) -> &'static str {
        match self {
            MetricSpec::MaxQ => "max_q",
            MetricSpec::EpisodeReturn => "episode_return",
            MetricSpec::RollingMeanReturn { .. } => "rolling_mean_return",
            MetricSpec::EpisodesToThreshold { .. } => "episodes_to_threshold",
            MetricSpec::LeftActionProbability => "left_action_probability",
            MetricSpec::WTrace => "w_trace",
        }
    }
}

/// Metric tag used to flag a run aborted on non-finite Q values.
pub const DIVERGED_TAG: &str = "diverged";

/// One experiment: environment, agents, budget, exploration, seeds, metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema: String,
    pub name: String,
    pub environment: EnvPreset,
    pub gamma: f64,
    pub agents: Vec<AgentConfig>,
    /// Episode budget (trial budget in synchronous mode). Exactly one of
    /// `episodes` and `max_steps` must be set.
    #[serde(default)]
    pub episodes: Option<u64>,
    /// Global environment-step budget, as an alternative to `episodes`.
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub max_steps_per_episode: Option<u64>,
    pub epsilon: EpsilonSchedule,
    pub update_mode: UpdateMode,
    pub seeds: Vec<u64>,
    pub metrics: Vec<MetricSpec>,
    /// Record metrics every `eval_cadence` episodes (trials when
    /// synchronous). Index 0 is always recorded before training.
    #[serde(default = "default_cadence")]
    pub eval_cadence: u64,
}

fn default_cadence() -> u64 {
    1
}

fn label_ok(label: &str) -> bool {
    !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ExperimentSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.schema != SCHEMA {
            return cfg(format!(
                "schema: expected '{SCHEMA}', found '{}'",
                self.schema
            ));
        }
        if !label_ok(&self.name) {
            return cfg(format!(
                "name: '{}' must be alphanumeric/underscore",
                self.name
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return cfg(format!("gamma: {} outside [0, 1)", self.gamma));
        }
        if self.seeds.is_empty() {
            return cfg("seeds: at least one seed required".into());
        }
        if self.agents.is_empty() {
            return cfg("agents: at least one agent required".into());
        }
        match (self.episodes, self.max_steps) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return cfg("budget: set exactly one of episodes / max_steps".into()),
        }
        if self.max_steps == Some(0) {
            return cfg("max_steps: must be positive".into());
        }
        self.epsilon.validate()?;
        if self.eval_cadence == 0 {
            return cfg("eval_cadence: must be positive".into());
        }
        let env = self.environment.build();
        if self.update_mode == UpdateMode::Synchronous {
            if !env.supports_synchronous() {
                return cfg(format!(
                    "update_mode: environment '{}' has more than one state and cannot be swept synchronously",
                    self.environment
                ));
            }
            if self.episodes.is_none() {
                return cfg("update_mode: synchronous runs take an episodes (trial) budget".into());
            }
        }
        let mut labels = std::collections::BTreeSet::new();
        for agent in &self.agents {
            let label = agent.label();
            if !label_ok(&label) {
                return cfg(format!(
                    "agents: label '{label}' must be alphanumeric/underscore"
                ));
            }
            if !labels.insert(label.clone()) {
                return cfg(format!("agents: duplicate label '{label}'"));
            }
            agent.schedule.validate()?;
            match (agent.algorithm, agent.w) {
                (_, WSpec::Fixed(w)) if !(w > 0.0 && w.is_finite()) => {
                    return cfg(format!("agents[{label}]: fixed w {w} must be positive"));
                }
                (_, WSpec::WStarFraction(f)) if !(f > 0.0 && f.is_finite()) => {
                    return cfg(format!("agents[{label}]: w_star_fraction {f} must be positive"));
                }
                (_, WSpec::WStarFraction(_)) if env.model(self.gamma).is_none() => {
                    return cfg(format!(
                        "agents[{label}]: environment '{}' has no exact model to take w* from",
                        self.environment
                    ));
                }
                (Algorithm::MfSorql | Algorithm::MfDsorql, WSpec::Fixed(_) | WSpec::WStarFraction(_)) => {
                    return cfg(format!(
                        "agents[{label}]: model-free variants need w = \"estimated\""
                    ));
                }
                (Algorithm::Sorql | Algorithm::Dsorql, WSpec::Estimated) => {
                    return cfg(format!(
                        "agents[{label}]: sorql/dsorql take a fixed or w*-fraction weight"
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn resolve_w(&self, agent: &AgentConfig, env: &Env) -> WMode {
        match agent.w {
            WSpec::Fixed(w) => WMode::Fixed(w),
            WSpec::Estimated => WMode::Estimated(SorEstimator::new(
                env.n_states(),
                env.n_actions(),
                self.gamma,
            )),
            WSpec::WStarFraction(f) => {
                let model = env.model(self.gamma).expect("validated");
                WMode::Fixed(f * model.sor_star())
            }
        }
    }
}

/// One metric sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub algorithm: String,
    pub seed: u64,
    pub index: u64,
    pub metric: String,
    pub value: f64,
}

/// Run every (agent, seed) pair serially. Divergent runs are kept, truncated
/// at the point of divergence and flagged with a [`DIVERGED_TAG`] record.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let mut records = Vec::new();
    for agent_cfg in &spec.agents {
        for &seed in &spec.seeds {
            records.extend(run_single(spec, agent_cfg, seed));
        }
    }
    Ok(records)
}

/// Parallel variant of [`run_experiment`]; record order is identical.
pub fn run_experiment_parallel(spec: &ExperimentSpec, threads: usize) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let jobs: Vec<(&AgentConfig, u64)> = spec
        .agents
        .iter()
        .flat_map(|a| spec.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let chunks: Vec<Vec<RunRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|(agent_cfg, seed)| run_single(spec, agent_cfg, *seed))
            .collect()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// True if any record in the set flags a diverged run.
pub fn any_diverged(records: &[RunRecord]) -> bool {
    records.iter().any(|r| r.metric == DIVERGED_TAG)
}

struct RunState<'a> {
    spec: &'a ExperimentSpec,
    label: String,
    seed: u64,
    records: Vec<RunRecord>,
    returns_window: VecDeque<f64>,
    episodes_to_threshold: Option<u64>,
    global_step: u64,
}

impl<'a> RunState<'a> {
    fn push(&mut self, index: u64, metric: &str, value: f64) {
        self.records.push(RunRecord {
            experiment: self.spec.name.clone(),
            algorithm: self.label.clone(),
            seed: self.seed,
            index,
            metric: metric.to_string(),
            value,
        });
    }

    /// Metrics that read the agent's tables, recorded at cadence and at
    /// index 0 before any training.
    fn record_state_metrics(&mut self, index: u64, agent: &AgentState, env: &Env) {
        for metric in &self.spec.metrics {
            match metric {
                MetricSpec::MaxQ => {
                    let v = agent.decision_max(env.probe_state());
                    self.push(index, metric.tag(), v);
                }
                MetricSpec::LeftActionProbability => {
                    let eps = self.spec.epsilon.at(self.global_step);
                    let n_actions = env.n_actions() as f64;
                    let (ties, contains) = agent.greedy_tie_info(env.probe_state(), 0);
                    let greedy = if contains { 1.0 / ties as f64 } else { 0.0 };
                    let v = eps / n_actions + (1.0 - eps) * greedy;
                    self.push(index, metric.tag(), v);
                }
                MetricSpec::WTrace => {
                    self.push(index, metric.tag(), agent.current_w());
                }
                _ => {}
            }
        }
    }

    /// Metrics derived from a finished episode.
    fn record_episode_metrics(&mut self, episode: u64, ep_return: f64, at_cadence: bool) {
        for metric in &self.spec.metrics {
            match *metric {
                MetricSpec::EpisodeReturn if at_cadence => {
                    self.push(episode, metric.tag(), ep_return);
                }
                MetricSpec::RollingMeanReturn { window } if at_cadence => {
                    let n = self.returns_window.len().min(window);
                    let mean = self
                        .returns_window
                        .iter()
                        .rev()
                        .take(n)
                        .sum::<f64>()
                        / n as f64;
                    self.push(episode, metric.tag(), mean);
                }
                _ => {}
            }
        }
    }

    fn finish(&mut self, agent: &AgentState, env: &Env) {
        for metric in &self.spec.metrics {
            if let MetricSpec::EpisodesToThreshold { .. } = metric {
                let value = self
                    .episodes_to_threshold
                    .map(|e| e as f64)
                    .unwrap_or(-1.0);
                self.push(0, metric.tag(), value);
            }
        }
        let _ = (agent, env);
    }
}

fn run_single(spec: &ExperimentSpec, agent_cfg: &AgentConfig, seed: u64) -> Vec<RunRecord> {
    let mut env = spec.environment.build();
    let mut env_rng = substream(seed, ENV_STREAM);
    let agent_rng = substream(seed, AGENT_STREAM);
    let mut agent = AgentState::new(
        agent_cfg.algorithm,
        env.n_states(),
        env.n_actions(),
        spec.gamma,
        spec.resolve_w(agent_cfg, &env),
        agent_cfg.schedule,
        agent_rng,
    )
    .expect("agent config validated");
    agent.set_literal_b_argmax(agent_cfg.literal_b_argmax);

    let mut run = RunState {
        spec,
        label: agent_cfg.label(),
        seed,
        records: Vec::new(),
        returns_window: VecDeque::new(),
        episodes_to_threshold: None,
        global_step: 0,
    };

    let threshold_window = spec.metrics.iter().find_map(|m| match *m {
        MetricSpec::EpisodesToThreshold { threshold, window } => Some((threshold, window)),
        _ => None,
    });
    let rolling_window = spec
        .metrics
        .iter()
        .find_map(|m| match *m {
            MetricSpec::RollingMeanReturn { window } => Some(window),
            _ => None,
        })
        .max(threshold_window.map(|(_, w)| w))
        .unwrap_or(1);

    match spec.update_mode {
        UpdateMode::Synchronous => {
            let trials = spec.episodes.expect("validated");
            let state = env.reset(&mut env_rng);
            run.record_state_metrics(0, &agent, &env);
            let n_actions = env.n_actions();
            let mut outcomes = vec![(0usize, 0.0f64); n_actions];
            for trial in 1..=trials {
                for (action, slot) in outcomes.iter_mut().enumerate() {
                    let step = env.step(action, &mut env_rng);
                    *slot = (step.next_state, step.reward);
                }
                run.global_step += n_actions as u64;
                if let Err(e) = agent.sync_sweep(state, &outcomes) {
                    run.push(trial, DIVERGED_TAG, run.global_step as f64);
                    let _ = e;
                    break;
                }
                if trial % spec.eval_cadence == 0 {
                    run.record_state_metrics(trial, &agent, &env);
                }
            }
        }
        UpdateMode::Asynchronous => {
            let mut state = env.reset(&mut env_rng);
            run.record_state_metrics(0, &agent, &env);
            let mut episode: u64 = 0;
            let mut diverged = false;
            loop {
                match (spec.episodes, spec.max_steps) {
                    (Some(eps), _) if episode >= eps => break,
                    (_, Some(steps)) if run.global_step >= steps => break,
                    _ => {}
                }
                let mut ep_return = 0.0;
                let mut steps_in_ep: u64 = 0;
                loop {
                    let eps_now = spec.epsilon.at(run.global_step);
                    let action = agent.act_epsilon_greedy(state, eps_now);
                    let step = env.step(action, &mut env_rng);
                    let t = Transition::new(state, action, step.next_state, step.reward);
                    run.global_step += 1;
                    if agent.step(&t).is_err() {
                        diverged = true;
                        break;
                    }
                    ep_return += step.reward;
                    steps_in_ep += 1;
                    if step.terminal {
                        break;
                    }
                    state = step.next_state;
                    if spec
                        .max_steps_per_episode
                        .is_some_and(|cap| steps_in_ep >= cap)
                    {
                        break;
                    }
                    if spec.max_steps.is_some_and(|cap| run.global_step >= cap) {
                        break;
                    }
                }
                if diverged {
                    run.push(episode + 1, DIVERGED_TAG, run.global_step as f64);
                    break;
                }
                episode += 1;
                run.returns_window.push_back(ep_return);
                if run.returns_window.len() > rolling_window {
                    run.returns_window.pop_front();
                }
                if let Some((threshold, window)) = threshold_window {
                    if run.episodes_to_threshold.is_none() && run.returns_window.len() >= window {
                        let mean = run
                            .returns_window
                            .iter()
                            .rev()
                            .take(window)
                            .sum::<f64>()
                            / window as f64;
                        if mean >= threshold {
                            run.episodes_to_threshold = Some(episode);
                        }
                    }
                }
                let at_cadence = episode % spec.eval_cadence == 0;
                run.record_episode_metrics(episode, ep_return, at_cadence);
                if at_cadence {
                    run.record_state_metrics(episode, &agent, &env);
                }
                state = env.reset(&mut env_rng);
            }
        }
    }
    run.finish(&agent, &env);
    run.records
}

/// Post-hoc form of the threshold metric: smallest episode index whose
/// trailing `window` mean of `episode_return` records reaches `threshold`.
/// Assumes the records come from one run sampled at cadence 1.
pub fn episodes_to_threshold(
    records: &[RunRecord],
    threshold: f64,
    window: usize,
) -> Option<u64> {
    let mut returns: Vec<(u64, f64)> = records
        .iter()
        .filter(|r| r.metric == "episode_return")
        .map(|r| (r.index, r.value))
        .collect();
    returns.sort_by_key(|(i, _)| *i);
    if window == 0 || returns.len() < window {
        return None;
    }
    let mut sum: f64 = returns[..window].iter().map(|(_, v)| v).sum();
    if sum / window as f64 >= threshold {
        return Some(returns[window - 1].0);
    }
    for k in window..returns.len() {
        sum += returns[k].1 - returns[k - window].1;
        if sum / window as f64 >= threshold {
            return Some(returns[k].0);
        }
    }
    None
}
