use dkmatch_core::ddpg::{train_agent, AgentCheckpoint, AgentSettings, DeepConfig, DeepMethod, NetworkShape};
use dkmatch_core::env::{DEFAULT_ACTION_CAP, DEFAULT_STATE_CAP};
use dkmatch_core::exact::{backward_induction, stationary_values, DEFAULT_TOLERANCE};
use dkmatch_core::harness::{
    evaluate_trained, generate_with, DeepGreedy, GeneratorSpec, RunRecord, TabularCheckpoint, TabularGreedy,
};
use dkmatch_core::schedule::{BetaSchedule, ExplorationSchedule};
use dkmatch_core::tabular::{make_prior_policy, train_tabular, DivergenceSpec, LearningConfig, TabularMethod, TabularModel};
use dkmatch_core::{Error, ProblemInstance};

fn small() -> ProblemInstance {
    generate_with(&GeneratorSpec { truncation: Some(3), ..GeneratorSpec::new(2, 3) }).unwrap()
}

#[test]
fn instance_file_round_trip_preserves_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small().with_horizon(2);
    let path = dir.path().join("inst.json");
    inst.save(&path).unwrap();
    let back = ProblemInstance::load(&path).unwrap();
    assert_eq!(back, inst);
    let a = backward_induction(&inst).unwrap();
    let b = backward_induction(&back).unwrap();
    assert_eq!(a.periods(), b.periods());
}

#[test]
fn tabular_train_checkpoint_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small();
    let model = TabularModel::new(&inst, DEFAULT_STATE_CAP, DEFAULT_ACTION_CAP).unwrap();
    let prior = make_prior_policy(&model, 0.0).unwrap();
    let config = LearningConfig {
        episodes: 30,
        steps_per_episode: 20,
        exploration: ExplorationSchedule::constant(0.3),
        record_wall_clock: false,
        ..LearningConfig::default()
    };
    let method =
        TabularMethod::DomainKnowledge { beta: BetaSchedule::Linear { kappa: 1e-2 }, divergence: DivergenceSpec::kl() };
    let (q, record) = train_tabular(&model, &config, &method, Some(&prior), 1, |_, _| {}).unwrap();
    assert!(record.is_consistent() && record.audit.is_clean());

    let path = dir.path().join("ckpt.json");
    TabularCheckpoint::new(&q, &model, &method, 1).unwrap().save(&path).unwrap();
    let ckpt = TabularCheckpoint::load(&path).unwrap();
    ckpt.check_instance(&inst).unwrap();
    let restored = ckpt.restore(&model).unwrap();
    assert_eq!(restored, q);

    let other = generate_with(&GeneratorSpec { truncation: Some(3), ..GeneratorSpec::new(2, 4) }).unwrap();
    assert!(ckpt.check_instance(&other).is_err());

    let trained = evaluate_trained(&TabularGreedy { model: &model, table: &restored }, &inst, 50, 9).unwrap();
    let again = evaluate_trained(&TabularGreedy { model: &model, table: &q }, &inst, 50, 9).unwrap();
    assert_eq!(trained, again);
    let optimal = stationary_values(&inst, DEFAULT_TOLERANCE).unwrap();
    assert!(evaluate_trained(&optimal, &inst, 50, 9).unwrap().is_finite());
}

#[test]
fn deep_train_checkpoint_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small();
    let config = DeepConfig {
        episodes: 5,
        steps_per_episode: 20,
        batch_size: 8,
        network: NetworkShape { actor_hidden: vec![8], critic_hidden: vec![8] },
        convergence_threshold: None,
        record_wall_clock: false,
        ..DeepConfig::default()
    };
    let method = DeepMethod::DomainKnowledge { beta: BetaSchedule::Fixed { beta: 5.0 } };
    let (agent, record) = train_agent(&inst, &config, &method, 2).unwrap();

    let mut csv = Vec::new();
    record.write_csv(&mut csv, "abc").unwrap();
    let (manifest, rows) = RunRecord::read_csv(csv.as_slice()).unwrap();
    assert_eq!((manifest.as_str(), rows), ("abc", record.rows.clone()));

    let path = dir.path().join("agent.json");
    AgentCheckpoint::new(&agent, &inst, &method, config.exploration, 2).unwrap().save(&path).unwrap();
    let restored = AgentCheckpoint::load(&path).unwrap().restore(&AgentSettings::default()).unwrap();
    assert_eq!(restored.actor, agent.actor);
    assert_eq!(restored.target_critic, agent.target_critic);
    let a = evaluate_trained(&DeepGreedy { agent: &agent, n_d: inst.n_d() }, &inst, 40, 1).unwrap();
    let b = evaluate_trained(&DeepGreedy { agent: &restored, n_d: inst.n_d() }, &inst, 40, 1).unwrap();
    assert_eq!(a, b);

    let wide = generate_with(&GeneratorSpec { truncation: Some(2), ..GeneratorSpec::new(3, 0) }).unwrap();
    assert!(matches!(evaluate_trained(&DeepGreedy { agent: &agent, n_d: 2 }, &wide, 5, 0), Err(Error::Shape(_))));
}
