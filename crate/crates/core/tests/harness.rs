//! End-to-end checks of the experiment runner: determinism, parallel/serial
//! equivalence, record layout, and the threshold post-processing.

use sorq_core::agents::{Algorithm, StepSchedule};
use sorq_core::harness::{
    self, records_to_csv_string, run_experiment, run_experiment_parallel, AgentConfig, EnvPreset,
    EpsilonSchedule, ExperimentSpec, MetricSpec, RunRecord, UpdateMode, WSpec, SCHEMA,
};

fn tiny_chain_spec() -> ExperimentSpec {
    ExperimentSpec {
        schema: SCHEMA.to_string(),
        name: "tiny_chain".into(),
        environment: EnvPreset::Chain { m: 3 },
        gamma: 0.9,
        agents: vec![
            AgentConfig {
                algorithm: Algorithm::Ql,
                label: Some("ql".into()),
                w: WSpec::Fixed(1.0),
                schedule: StepSchedule::polynomial(0.8),
                literal_b_argmax: false,
            },
            AgentConfig {
                algorithm: Algorithm::Dsorql,
                label: Some("dsorql".into()),
                w: WSpec::Fixed(1.05),
                schedule: StepSchedule::polynomial(0.8),
                literal_b_argmax: false,
            },
        ],
        episodes: Some(40),
        max_steps: None,
        max_steps_per_episode: Some(100),
        epsilon: EpsilonSchedule::Constant(0.2),
        update_mode: UpdateMode::Asynchronous,
        seeds: vec![0, 1, 2],
        metrics: vec![
            MetricSpec::MaxQ,
            MetricSpec::EpisodeReturn,
            MetricSpec::LeftActionProbability,
        ],
        eval_cadence: 1,
    }
}

#[test]
fn identical_specs_produce_identical_records() {
    let spec = tiny_chain_spec();
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x, y);
        assert_eq!(x.value.to_bits(), y.value.to_bits());
    }
    assert_eq!(records_to_csv_string(&a), records_to_csv_string(&b));
}

#[test]
fn parallel_equals_serial() {
    let spec = tiny_chain_spec();
    let serial = run_experiment(&spec).unwrap();
    for threads in [2, 4] {
        let parallel = run_experiment_parallel(&spec, threads).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (x, y) in serial.iter().zip(&parallel) {
            assert_eq!(x, y);
        }
    }
}

#[test]
fn zero_episode_spec_emits_only_initial_state_metrics() {
    let mut spec = tiny_chain_spec();
    spec.episodes = Some(0);
    spec.seeds = vec![7];
    let records = run_experiment(&spec).unwrap();
    assert!(!records.is_empty());
    for r in &records {
        assert_eq!(r.index, 0, "{r:?}");
        assert_ne!(r.metric, "episode_return");
    }
    // max_q and left_action_probability at index 0 for both agents.
    assert_eq!(records.len(), 4);
}

#[test]
fn adding_seeds_does_not_perturb_existing_runs() {
    let mut spec = tiny_chain_spec();
    spec.seeds = vec![0, 1];
    let short = run_experiment(&spec).unwrap();
    spec.seeds = vec![0, 1, 99];
    let long = run_experiment(&spec).unwrap();
    let filter = |records: &[RunRecord]| -> Vec<RunRecord> {
        records.iter().filter(|r| r.seed <= 1).cloned().collect()
    };
    assert_eq!(filter(&short), filter(&long));
}

#[test]
fn synchronous_mode_is_rejected_for_multi_state_environments() {
    let mut spec = tiny_chain_spec();
    spec.update_mode = UpdateMode::Synchronous;
    assert!(run_experiment(&spec).is_err());
}

#[test]
fn config_errors_name_the_offending_field() {
    let mut spec = tiny_chain_spec();
    spec.agents[1].label = Some("ql".into());
    let err = run_experiment(&spec).unwrap_err().to_string();
    assert!(err.contains("duplicate label"), "{err}");

    let mut spec = tiny_chain_spec();
    spec.seeds.clear();
    let err = run_experiment(&spec).unwrap_err().to_string();
    assert!(err.contains("seeds"), "{err}");

    let mut spec = tiny_chain_spec();
    spec.episodes = None;
    let err = run_experiment(&spec).unwrap_err().to_string();
    assert!(err.contains("budget"), "{err}");
}

#[test]
fn environment_names_parse_and_render() {
    for (name, preset) in [
        ("roulette", EnvPreset::Roulette),
        ("bandit39", EnvPreset::Bandit39),
        ("chain(8)", EnvPreset::Chain { m: 8 }),
        ("cartpole72", EnvPreset::CartPole72),
    ] {
        let parsed: EnvPreset = name.parse().unwrap();
        assert_eq!(parsed, preset);
        assert_eq!(parsed.to_string(), name);
    }
    assert!("chain(0)".parse::<EnvPreset>().is_err());
    assert!("lunarlander".parse::<EnvPreset>().is_err());
}

#[test]
fn threshold_post_processing_matches_examples() {
    let mk = |index: u64, value: f64| RunRecord {
        experiment: "e".into(),
        algorithm: "ql".into(),
        seed: 0,
        index,
        metric: "episode_return".into(),
        value,
    };
    // Constant return 200 with window 50 crosses at episode 50.
    let records: Vec<RunRecord> = (1..=60).map(|i| mk(i, 200.0)).collect();
    assert_eq!(harness::episodes_to_threshold(&records, 195.0, 50), Some(50));
    // Constant 100 never reaches 195.
    let records: Vec<RunRecord> = (1..=60).map(|i| mk(i, 100.0)).collect();
    assert_eq!(harness::episodes_to_threshold(&records, 195.0, 50), None);
    // Window larger than the record count -> none.
    let records: Vec<RunRecord> = (1..=10).map(|i| mk(i, 200.0)).collect();
    assert_eq!(harness::episodes_to_threshold(&records, 195.0, 50), None);
}

#[test]
fn synchronous_roulette_smoke_run_records_trials() {
    let mut spec = sorq_core::harness::preset_by_name("roulette").unwrap();
    spec.episodes = Some(50);
    spec.seeds = vec![0];
    spec.eval_cadence = 10;
    spec.agents.truncate(2);
    let records = run_experiment(&spec).unwrap();
    // Indices 0, 10, 20, 30, 40, 50 for each agent.
    let ql_points: Vec<u64> = records
        .iter()
        .filter(|r| r.algorithm == "ql" && r.metric == "max_q")
        .map(|r| r.index)
        .collect();
    assert_eq!(ql_points, vec![0, 10, 20, 30, 40, 50]);
}

#[test]
fn w_star_fraction_resolves_against_the_model() {
    let mut spec = tiny_chain_spec();
    // The chain's start state never self-loops, so w* = 1 and any fraction
    // of it is the fraction itself.
    spec.agents = vec![AgentConfig {
        algorithm: Algorithm::Sorql,
        label: Some("sorql".into()),
        w: WSpec::WStarFraction(0.5),
        schedule: StepSchedule::polynomial(0.8),
        literal_b_argmax: false,
    }];
    spec.episodes = Some(5);
    spec.seeds = vec![0];
    assert!(run_experiment(&spec).is_ok());

    // No exact model for cart-pole: the fraction must be rejected.
    spec.environment = EnvPreset::CartPole72;
    let err = run_experiment(&spec).unwrap_err().to_string();
    assert!(err.contains("no exact model"), "{err}");
}

#[test]
fn mf_agents_run_and_emit_w_traces() {
    let mut spec = tiny_chain_spec();
    spec.agents = vec![AgentConfig {
        algorithm: Algorithm::MfDsorql,
        label: Some("mf_dsorql".into()),
        w: WSpec::Estimated,
        schedule: StepSchedule::polynomial(0.8),
        literal_b_argmax: false,
    }];
    spec.metrics = vec![MetricSpec::WTrace];
    spec.episodes = Some(30);
    spec.seeds = vec![0];
    let records = run_experiment(&spec).unwrap();
    let ws: Vec<f64> = records
        .iter()
        .filter(|r| r.metric == "w_trace")
        .map(|r| r.value)
        .collect();
    assert!(!ws.is_empty());
    // The chain's w* is 1 (zero self-loop at the start state), and the
    // weight iterate is clamped to [1, 1/(1-γ)].
    for w in ws {
        assert!((1.0..=1.0 / (1.0 - spec.gamma) + 1e-9).contains(&w), "w = {w}");
    }
}
