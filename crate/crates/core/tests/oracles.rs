mod oracle;

use discobench_core::env::{
    death_eta, dugong_mean_length, hd_choice_prob, irt_correct_prob, loc_signal_mean, mastectomy_death_prob,
    peregrine_log_rate, DeathConfig, IrtVariant, Latents, ModelConfig, PeregrineLatents,
};
use discobench_core::eval::{ei_regret, ei_regret_against, eig_nmc, EigParams, LatentSource};
use discobench_core::{Design, EnvConfig, EnvId, Outcome, RngState};

fn death5() -> EnvConfig {
    let model = DeathConfig { population: 5, ..DeathConfig::default() };
    EnvConfig { model: ModelConfig::DeathProcess(model), ..EnvConfig::default_for(EnvId::DeathProcess) }
}

fn mean_abs_error(n: usize, truth: f64, seeds: u64) -> f64 {
    let cfg = death5();
    let d = Design::DeathProcess { time: 1.0 };
    let total: f64 = (0..seeds)
        .map(|s| (eig_nmc(&cfg, &d, n, n, &RngState::new(100 + s)).unwrap().value - truth).abs())
        .sum();
    total / seeds as f64
}

#[test]
fn nmc_error_shrinks_with_samples() {
    let truth = oracle::death_eig(5, 1.0, &oracle::death_grid(2000));
    let small = mean_abs_error(250, truth, 8);
    let large = mean_abs_error(2000, truth, 8);
    assert!(large < small, "N=2000 error {large} vs N=250 error {small}");
    assert!(large < 0.02, "{large}");
}

#[test]
fn death_oracle_grid_is_converged() {
    for t in [0.2, 1.0, 4.0] {
        let a = oracle::death_eig(5, t, &oracle::death_grid(500));
        let b = oracle::death_eig(5, t, &oracle::death_grid(1000));
        assert!((a - b).abs() < 1e-3, "t={t}: {a} vs {b}");
    }
}

#[test]
fn kernels_match_reference_formulas() {
    for &(log_k, alpha, ir, dr, delay) in &[(-4.0, 2.0, 10.0, 100.0, 30.0), (-1.0, 0.5, 90.0, 100.0, 1.0)] {
        let lib = hd_choice_prob(f64::exp(log_k), alpha, ir, dr, delay, 0.01);
        let want = oracle::hd_delayed(log_k, alpha, ir, dr, delay, 0.01);
        assert!((lib - want).abs() < 1e-12);
    }
    for &(th, t) in &[(0.3, 1.0), (2.0, 0.01), (1.0, 0.0)] {
        assert!((death_eta(th, t) - (1.0 - f64::exp(-th * t))).abs() < 1e-14);
    }
    assert!((dugong_mean_length(2.5, 1.0, 0.9, 3.0) - (2.5 - 0.9f64.powi(3))).abs() < 1e-12);
    let logistic = |x: f64| 1.0 / (1.0 + f64::exp(-x));
    assert!((irt_correct_prob(IrtVariant::OnePl, 0.4, -0.2, 7.0, 0.3) - logistic(0.6)).abs() < 1e-12);
    assert!((irt_correct_prob(IrtVariant::TwoPl, 0.4, -0.2, 2.0, 0.3) - logistic(1.2)).abs() < 1e-12);
    let three = 0.3 + 0.7 * logistic(1.2);
    assert!((irt_correct_prob(IrtVariant::ThreePl, 0.4, -0.2, 2.0, 0.3) - three).abs() < 1e-12);

    let sources = vec![vec![0.0, 0.0], vec![1.0, -1.0]];
    let got = loc_signal_mean(&sources, &[1.0, 2.0], &[0.5, 0.5], 0.1, 1e-4);
    let want = 0.1 + 1.0 / (1e-4 + 0.5) + 2.0 / (1e-4 + 0.25 + 2.25);
    assert!((got - want).abs() < 1e-12);

    let (v, capped) = peregrine_log_rate([4.0, 1.0, 0.1, -0.2], 2.0, 20.0);
    assert!(!capped && (v - (4.0 + 2.0 + 0.4 - 1.6)).abs() < 1e-12);
    assert_eq!(peregrine_log_rate([30.0, 0.0, 0.0, 0.0], 1.0, 20.0), (20.0, true));

    let p = mastectomy_death_prob(0.1, 0.7, true, 3.0);
    assert!((p - logistic(3.0 * 0.1 * f64::exp(0.7))).abs() < 1e-12);
    assert!((mastectomy_death_prob(0.1, 0.7, false, 3.0) - logistic(0.3)).abs() < 1e-12);
}

#[test]
fn finite_support_means_are_likelihood_weighted_sums() {
    for id in EnvId::ALL {
        let cfg = EnvConfig::default_for(id);
        let env = cfg.env();
        let mut rng = RngState::new(3).substream(id.as_str(), 0);
        for _ in 0..5 {
            let latents = env.sample_latents(&mut rng);
            let design = env.random_design(&mut rng);
            let Some(support) = env.outcome_support(&design) else { continue };
            let mean = env.mean_outcome(&latents, &design);
            let mut sum = vec![0.0; mean.len()];
            let mut mass = 0.0;
            for y in &support {
                let p = env.log_likelihood(&latents, &design, y).exp();
                mass += p;
                for (s, v) in sum.iter_mut().zip(y.values()) {
                    *s += p * v;
                }
            }
            assert!((mass - 1.0).abs() < 1e-9, "{id}: mass {mass}");
            for (a, b) in mean.iter().zip(&sum) {
                assert!((a - b).abs() < 1e-9, "{id}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn peregrine_counts_at_unit_rate() {
    let cfg = EnvConfig::default_for(EnvId::Peregrines);
    let env = cfg.env();
    let latents = Latents::Peregrines(PeregrineLatents { alpha: 0.0, beta1: 0.0, beta2: 0.0, beta3: 0.0 });
    let design = Design::Peregrines { time: 1.0 };
    let mut rng = RngState::new(9);
    let xs: Vec<f64> = (0..20_000)
        .map(|_| match env.simulate(&latents, &design, &mut rng) {
            Outcome::Count(c) => c as f64,
            other => panic!("{other:?}"),
        })
        .collect();
    let m = oracle::moments(&xs);
    assert!((m.mean - 1.0).abs() < 0.03, "{}", m.mean);
}

#[test]
fn uninformative_choice_has_regret_equal_to_best_random() {
    let cfg = death5();
    let params = EigParams { n_outer: 200, m_inner: 200 };
    let src = LatentSource::Prior { context: None };
    let r = ei_regret(&cfg, &[Design::DeathProcess { time: 0.0 }], 10, params, src, &RngState::new(4)).unwrap();
    assert_eq!(r.mean_chosen, 0.0);
    assert_eq!(r.regret, r.best_random);
}

#[test]
fn random_designs_have_nonnegative_regret_within_noise() {
    let cfg = death5();
    let params = EigParams { n_outer: 300, m_inner: 300 };
    let src = LatentSource::Prior { context: None };
    let mut rng = RngState::new(12);
    let env = cfg.env();
    let chosen: Vec<Design> = (0..5).map(|_| env.random_design(&mut rng)).collect();
    let random: Vec<Design> = (0..10).map(|_| env.random_design(&mut rng)).collect();
    let r = ei_regret_against(&cfg, &chosen, &random, params, src, &RngState::new(13)).unwrap();
    let se = r.chosen.iter().chain(&r.random).map(|e| e.std_error).fold(0.0, f64::max);
    assert!(r.regret >= -3.0 * se, "regret {} se {se}", r.regret);
}
