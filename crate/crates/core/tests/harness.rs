use discobench_core::env::{Design, EnvConfig, EnvId, GoalId, Value};
use discobench_core::eval::EigParams;
use discobench_core::harness::*;

fn quick() -> TrialSettings {
    TrialSettings { prior_samples: 4000, ..TrialSettings::default() }.without_eig()
}

fn goal_spec(cfg: &EnvConfig, goal: GoalId) -> discobench_core::env::GoalSpec {
    discobench_core::env::GoalSpec::new(cfg, goal).unwrap()
}

fn random_trial(env: EnvId, goal: GoalId, settings: TrialSettings, plan: SeedPlan) -> TrialRecord {
    let cfg = EnvConfig::default_for(env);
    let mut agent = baseline_agent(BaselineKind::Random, &cfg, &goal_spec(&cfg, goal), plan, 2000, settings.prior_samples)
        .unwrap();
    run_trial(cfg, goal, settings, plan, agent.as_mut()).unwrap()
}

#[test]
fn default_schedule_asks_before_observing() {
    let rec = random_trial(EnvId::DeathProcess, GoalId::NumInfected, quick(), SeedPlan::new(0, 0));
    assert!(rec.is_complete());
    let steps: Vec<usize> = rec.checkpoints.iter().map(|c| c.step).collect();
    assert_eq!(steps, vec![0, 1, 3, 5, 7, 10]);
    assert!(rec.checkpoints.iter().all(|c| c.predictions.len() == 10 && c.truths.len() == 10));
    assert_eq!(rec.steps.len(), 10);
    assert_eq!(rec.scored_predictions(), 60);
    assert!(matches!(rec.call_log[0].call, Call::Predictions { checkpoint: 0, .. }));
}

#[test]
fn checkpoint_queries_differ_between_checkpoints() {
    let rec = random_trial(EnvId::Dugongs, GoalId::Length, quick(), SeedPlan::new(3, 1));
    assert_ne!(rec.checkpoints[0].queries, rec.checkpoints[1].queries);
}

fn bad_hd() -> Design {
    Design::HyperbolicDiscounting { ir: 50.0, dr: 10.0, delay: 5.0 }
}

#[test]
fn invalid_design_consumes_retry_not_step() {
    let cfg = EnvConfig::default_for(EnvId::HyperbolicDiscounting);
    let good = Design::HyperbolicDiscounting { ir: 10.0, dr: 50.0, delay: 5.0 };
    let mut designs = vec![bad_hd(), bad_hd()];
    designs.extend(std::iter::repeat(good).take(3));
    let preds = vec![vec![Value::Scalar(1.0); 10]; 3];
    let mut agent = ScriptedAgent::new("script", designs, preds);
    let settings = TrialSettings { checkpoints: vec![0, 1, 3], ..quick() };
    let rec = run_trial(cfg, GoalId::Choice, settings, SeedPlan::new(1, 0), &mut agent).unwrap();
    assert!(rec.is_complete());
    assert_eq!(rec.steps.len(), 3);
    assert_eq!(rec.steps[0].step, 0);
    assert_eq!(rec.steps[0].rejected.len(), 2);
    assert_eq!(rec.steps[0].rejected[0].rejection.reason, "iR must be strictly less than dR");
    assert!(rec.steps[1].rejected.is_empty());
}

#[test]
fn retry_exhaustion_is_recorded() {
    let cfg = EnvConfig::default_for(EnvId::HyperbolicDiscounting);
    let mut agent = ScriptedAgent::new("script", vec![bad_hd(); 3], vec![vec![Value::Scalar(0.0); 10]]);
    let rec = run_trial(cfg, GoalId::Choice, quick(), SeedPlan::new(1, 0), &mut agent).unwrap();
    match &rec.status {
        TrialStatus::RetryExhausted { step, rejected } => {
            assert_eq!(*step, 0);
            assert_eq!(rejected.len(), 3);
        }
        other => panic!("{other:?}"),
    }
    assert!(rec.steps.is_empty());
    assert_eq!(rec.checkpoints.len(), 1);
}

#[test]
fn retry_limit_zero_is_immediately_fatal() {
    let cfg = EnvConfig::default_for(EnvId::HyperbolicDiscounting);
    let info = AgentInfo { retry_limit: 0, ..AgentInfo::in_process("strict") };
    let mut s = TrialSession::new(cfg, GoalId::Choice, quick(), SeedPlan::new(1, 0), info, Mode::Trial).unwrap();
    s.submit_predictions(vec![Value::Scalar(0.0); 10]).unwrap();
    assert!(matches!(s.submit_design(bad_hd()).unwrap(), DesignResult::Exhausted(_)));
    assert!(s.is_done());
}

#[test]
fn out_of_turn_and_bad_predictions_leave_state() {
    let cfg = EnvConfig::default_for(EnvId::DeathProcess);
    let mut s =
        TrialSession::new(cfg, GoalId::NumInfected, quick(), SeedPlan::new(1, 0), AgentInfo::in_process("x"), Mode::Trial)
            .unwrap();
    assert!(matches!(s.submit_design(Design::DeathProcess { time: 1.0 }), Err(HarnessError::OutOfTurn { .. })));
    assert!(matches!(s.submit_predictions(vec![Value::Scalar(1.0); 3]), Err(HarnessError::BadPredictions(_))));
    assert!(matches!(
        s.submit_predictions(vec![Value::Vector(vec![1.0, 2.0]); 10]),
        Err(HarnessError::BadPredictions(_))
    ));
    assert!(matches!(s.pending(), Pending::Predictions { checkpoint: 0, .. }));
    s.submit_predictions(vec![Value::Scalar(1.0); 10]).unwrap();
    assert!(matches!(s.pending(), Pending::Experiment { step: 0, .. }));
}

#[test]
fn mu0_predictor_scores_exactly_zero() {
    for (env, goal) in [
        (EnvId::DeathProcess, GoalId::NumInfected),
        (EnvId::PredatorPrey, GoalId::Population),
        (EnvId::Emotions, GoalId::EmotionLikert),
        (EnvId::LocationFinding, GoalId::SourceLocation),
    ] {
        let cfg = EnvConfig::default_for(env);
        let plan = SeedPlan::new(11, 2);
        let settings = TrialSettings { prior_samples: 500, ..quick() };
        let mut agent =
            baseline_agent(BaselineKind::Mu0Predictor, &cfg, &goal_spec(&cfg, goal), plan, 10, 500).unwrap();
        let rec = run_trial(cfg, goal, settings, plan, agent.as_mut()).unwrap();
        assert!(rec.checkpoints.iter().all(|c| c.standardized_error == 0.0), "{env}");
    }
}

#[test]
fn oracle_theta_is_never_worse_than_mu0() {
    for (env, goal) in [
        (EnvId::DeathProcess, GoalId::NumInfected),
        (EnvId::Dugongs, GoalId::Length),
        (EnvId::Irt, GoalId::Correctness),
        (EnvId::Mastectomy, GoalId::Survival),
        (EnvId::HyperbolicDiscounting, GoalId::DiscountFactor),
    ] {
        let cfg = EnvConfig::default_for(env);
        let plan = SeedPlan::new(5, 0);
        let mut agent =
            baseline_agent(BaselineKind::OracleTheta, &cfg, &goal_spec(&cfg, goal), plan, 10, 4000).unwrap();
        let rec = run_trial(cfg, goal, quick(), plan, agent.as_mut()).unwrap();
        for c in &rec.checkpoints {
            assert!(c.errors.iter().all(|e| *e == 0.0), "{env}");
            assert!(c.standardized_error <= 0.0, "{env}");
        }
    }
}

#[test]
fn oracle_scientist_teaches_parametric_novice_exactly() {
    for (env, goal) in [
        (EnvId::DeathProcess, GoalId::NumInfected),
        (EnvId::Peregrines, GoalId::Population),
        (EnvId::MoralMachines, GoalId::MoralJudgement),
        (EnvId::Mastectomy, GoalId::Survival),
    ] {
        let cfg = EnvConfig::default_for(env);
        let plan = SeedPlan::new(9, 1);
        let g = goal_spec(&cfg, goal);
        let mut sci = baseline_agent(BaselineKind::OracleTheta, &cfg, &g, plan, 10, 4000).unwrap();
        let mut nov = baseline_novice(NoviceKind::Parametric, &cfg, &g, plan, 4000).unwrap();
        let rec = run_discovery(cfg, goal, quick(), plan, sci.as_mut(), nov.as_mut()).unwrap();
        assert!(rec.is_complete(), "{env}");
        let novice = rec.novice.as_ref().unwrap();
        assert!(novice.errors.iter().all(|e| *e == 0.0), "{env}: {:?}", novice.errors);
        assert!(rec.scientist.checkpoints.last().unwrap().errors.iter().all(|e| *e == 0.0));
    }
}

#[test]
fn empty_explanation_leaves_novice_at_mu0() {
    let cfg = EnvConfig::default_for(EnvId::Dugongs);
    let plan = SeedPlan::new(2, 0);
    let g = goal_spec(&cfg, GoalId::Length);
    let mut sci = ScriptedAgent::new("silent", vec![Design::Dugongs { age: 1.0 }; 10], vec![vec![Value::Scalar(2.0); 10]; 6]);
    let mut nov = baseline_novice(NoviceKind::Parametric, &cfg, &g, plan, 4000).unwrap();
    let rec = run_discovery(cfg, GoalId::Length, quick(), plan, &mut sci, nov.as_mut()).unwrap();
    assert_eq!(rec.discovery_error(), Some(0.0));
}

#[test]
fn explanation_is_truncated_to_budget() {
    let cfg = EnvConfig::default_for(EnvId::Dugongs);
    let plan = SeedPlan::new(2, 0);
    let g = goal_spec(&cfg, GoalId::Length);
    let mut sci = ScriptedAgent::new("verbose", vec![Design::Dugongs { age: 1.0 }; 10], vec![vec![Value::Scalar(2.0); 10]; 6]);
    sci.explanation = "é".repeat(2500);
    let mut nov = baseline_novice(NoviceKind::Mu0Predictor, &cfg, &g, plan, 4000).unwrap();
    let rec = run_discovery(cfg, GoalId::Length, quick(), plan, &mut sci, nov.as_mut()).unwrap();
    let e = rec.explanation.unwrap();
    assert!(e.truncated);
    assert_eq!(e.submitted_chars, 2500);
    assert_eq!(e.text.chars().count(), 2000);
}

#[test]
fn novice_sees_no_history() {
    let cfg = EnvConfig::default_for(EnvId::DeathProcess);
    let plan = SeedPlan::new(4, 0);
    let g = goal_spec(&cfg, GoalId::NumInfected);
    let mut sci = baseline_agent(BaselineKind::Random, &cfg, &g, plan, 500, 4000).unwrap();
    let mut nov = baseline_novice(NoviceKind::Parametric, &cfg, &g, plan, 4000).unwrap();
    let mode = Mode::Discovery { novice: nov.info() };
    let s = TrialSession::new(cfg, GoalId::NumInfected, quick(), plan, sci.info(), mode).unwrap();
    let rec = {
        let record = drive(s, sci.as_mut(), Some(nov.as_mut()));
        let RunRecord::Discovery(d) = record else { panic!() };
        d
    };
    let novice = rec.novice.unwrap();
    assert!(novice.call_log.iter().all(|e| matches!(e.call, Call::NovicePredictions { .. }) && e.role == Role::Novice));
    assert!(rec.scientist.call_log.iter().all(|e| e.role != Role::Novice));
    // The brief is the same whatever the scientist observed.
    let brief_after = |time: f64| {
        let mut s = TrialSession::new(
            EnvConfig::default_for(EnvId::DeathProcess),
            GoalId::NumInfected,
            quick(),
            plan,
            AgentInfo::in_process("x"),
            Mode::Discovery { novice: AgentInfo::in_process("n") },
        )
        .unwrap();
        s.submit_predictions(vec![Value::Scalar(1.0); 10]).unwrap();
        for _ in 0..10 {
            s.submit_design(Design::DeathProcess { time }).unwrap();
            if let Pending::Predictions { .. } = s.pending() {
                s.submit_predictions(vec![Value::Scalar(1.0); 10]).unwrap();
            }
        }
        assert!(s.novice_brief().is_none());
        s.submit_explanation("theta=1.5".into()).unwrap();
        s.novice_brief().unwrap()
    };
    let brief = brief_after(0.5);
    assert_eq!(brief, brief_after(9.0));
    let json = serde_json::to_value(&brief).unwrap();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["description", "explanation", "goal", "goal_prompt"]);
}

#[test]
fn random_agent_improves_on_death_process() {
    let mut e0 = 0.0;
    let mut e10 = 0.0;
    for run in 0..5 {
        let rec = random_trial(EnvId::DeathProcess, GoalId::NumInfected, quick(), SeedPlan::new(0, run));
        e0 += rec.error_at(0).unwrap();
        e10 += rec.error_at(10).unwrap();
    }
    assert!(e10 <= e0, "Error@10 {} vs Error@0 {}", e10 / 5.0, e0 / 5.0);
}

fn roundtrip(rec: &RunRecord) -> RunRecord {
    let text = serde_json::to_string(rec).unwrap();
    let back: RunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    back
}

#[test]
fn records_replay_byte_identically() {
    let small_eig = EigSettings {
        params: EigParams { n_outer: 40, m_inner: 40 },
        n_random: 4,
        conditioning: Conditioning::Posterior { particles: 200 },
    };
    for env in [EnvId::Emotions, EnvId::MoralMachines, EnvId::Mastectomy, EnvId::PredatorPrey, EnvId::LocationFinding] {
        let settings = TrialSettings { checkpoints: vec![0, 1, 3], eig: Some(small_eig), prior_samples: 300, ..quick() };
        let goal = env.default_goal();
        let mut rec = RunRecord::Trial(random_trial(env, goal, settings, SeedPlan::new(21, 3)));
        rec.trial_mut().runtime = Some(Runtime { transport: Transport::InProcess, wall_clock_ms: 17 });
        let stored = roundtrip(&rec);
        let again = replay(&stored).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&stored.without_runtime()).unwrap(),
            "{env}"
        );
    }
}

#[test]
fn discovery_and_incomplete_records_replay() {
    let cfg = EnvConfig::default_for(EnvId::HyperbolicDiscounting);
    let plan = SeedPlan::new(8, 0);
    let g = goal_spec(&cfg, GoalId::Choice);
    let settings = TrialSettings { checkpoints: vec![0, 2], ..quick() };
    let mut sci = baseline_agent(BaselineKind::Random, &cfg, &g, plan, 300, 4000).unwrap();
    let mut nov = baseline_novice(NoviceKind::Parametric, &cfg, &g, plan, 4000).unwrap();
    let rec = RunRecord::Discovery(run_discovery(cfg.clone(), GoalId::Choice, settings.clone(), plan, sci.as_mut(), nov.as_mut()).unwrap());
    assert_eq!(replay(&roundtrip(&rec)).unwrap(), rec);

    let mut bad = ScriptedAgent::new("bad", vec![bad_hd(); 3], vec![vec![Value::Scalar(0.0); 10]]);
    let rec = RunRecord::Trial(run_trial(cfg, GoalId::Choice, settings, plan, &mut bad).unwrap());
    assert!(!rec.is_complete());
    assert_eq!(replay(&roundtrip(&rec)).unwrap(), rec);
}

#[test]
fn aggregation_ignores_order_and_incomplete_runs() {
    let mut recs: Vec<RunRecord> = (0..3)
        .map(|r| RunRecord::Trial(random_trial(EnvId::DeathProcess, GoalId::NumInfected, quick(), SeedPlan::new(0, r))))
        .collect();
    let cfg = EnvConfig::default_for(EnvId::DeathProcess);
    let mut failing = ScriptedAgent::new("random", vec![], vec![vec![Value::Scalar(0.0); 10]]);
    recs.push(RunRecord::Trial(run_trial(cfg, GoalId::NumInfected, quick(), SeedPlan::new(0, 9), &mut failing).unwrap()));
    let a = aggregate(&recs);
    recs.reverse();
    assert_eq!(aggregate(&recs), a);
    assert_eq!(a.len(), 1);
    assert_eq!((a[0].runs, a[0].incomplete), (3, 1));
    let e0: Vec<f64> = recs.iter().filter(|r| r.is_complete()).map(|r| r.trial().error_at(0).unwrap()).collect();
    assert!((a[0].error_at_0.unwrap().mean - e0.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    assert_eq!(a[0].final_step, 10);
}
