use boundnoise::adaptive::{
    budget_sweep, run_adaptive_session, transfer_accuracy, AdaptiveSession, MechanismChoice, Planner,
};
use boundnoise::{CertConfig, Error, NoiseFamily, RngState};

fn bounded(p: f64) -> Planner {
    Planner::new(
        MechanismChoice::Bounded(NoiseFamily::poly(p).unwrap()),
        0.1,
        0.05,
        CertConfig::default(),
    )
    .unwrap()
}

#[test]
fn transfer_arithmetic() {
    // 0.05 + (e^0 - 1) + 0.01 + 2 * 0.02
    let (a, b) = transfer_accuracy(0.05, 0.0, 0.0, 0.0, 0.01, 0.02);
    assert!((a - 0.10).abs() < 1e-15 && b == 0.0, "{a}");
    let (_, b1) = transfer_accuracy(0.05, 0.0, 0.1, 1e-3, 0.01, 0.02);
    let (_, b2) = transfer_accuracy(0.05, 0.0, 0.1, 1e-3, 0.3, 0.02);
    assert_eq!(b1, b2);
    let (a, b) = transfer_accuracy(0.0, 0.01, 0.0, 0.01, 0.5, 0.1);
    assert!((a - 0.7).abs() < 1e-15 && (b - 0.12).abs() < 1e-15);
}

#[test]
fn bounded_plan_parameters() {
    let plan = bounded(2.0).sample_size_for_queries(100_000).unwrap();
    assert_eq!(plan.epsilon, 0.1 / 8.0);
    assert!((plan.delta - 0.1 * 0.05 / 4.0).abs() < 1e-18);
    assert_eq!(plan.beta_prime, 0.0);
    assert!(plan.alpha_prime > 0.0);
    assert!((1e5..=1e8).contains(&(plan.n as f64)), "{}", plan.n);
    let (a, b) = plan.transfer();
    assert!(a <= 0.1 / 2.0 + 1e-12 + 2.0 * plan.d && b <= 0.05 + 1e-15, "{a} {b}");
}

#[test]
fn gaussian_plan_meets_targets() {
    let g = Planner::new(MechanismChoice::Gaussian, 0.1, 0.05, CertConfig::default()).unwrap();
    let plan = g.sample_size_for_queries(1000).unwrap();
    let (a, b) = plan.transfer();
    assert!(a <= 0.1 + 1e-12 && b <= 0.05 + 1e-12, "{a} {b}");
    assert!(plan.unit_error > plan.unit_scale);
}

#[test]
fn doubling_k_scales_n_by_root_two() {
    let p = bounded(2.0);
    for k in [1000u64, 4000] {
        let n1 = p.sample_size_for_queries(k).unwrap().n as f64;
        let n2 = p.sample_size_for_queries(2 * k).unwrap().n as f64;
        let ratio = n2 / n1;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.02, "k={k}: {ratio}");
    }
}

#[test]
fn round_trip_and_monotonicity() {
    for planner in [bounded(2.0), Planner::new(MechanismChoice::Gaussian, 0.1, 0.05, CertConfig::default()).unwrap()] {
        for k in [10u64, 500] {
            let n = planner.sample_size_for_queries(k).unwrap().n;
            assert!(planner.max_queries_for_sample_size(n).unwrap() >= k);
        }
        let mut prev = 0;
        for n in [1_000u64, 10_000, 50_000, 100_000] {
            let k = planner.max_queries_for_sample_size(n).unwrap();
            assert!(k >= prev);
            prev = k;
        }
    }
}

#[test]
fn tiny_samples_answer_nothing() {
    assert_eq!(bounded(2.0).max_queries_for_sample_size(10).unwrap(), 0);
}

#[test]
fn too_small_alpha_is_infeasible() {
    assert!(Planner::new(MechanismChoice::Gaussian, 0.0, 0.05, CertConfig::default()).is_err());
    assert!(Planner::new(MechanismChoice::Gaussian, 0.1, 0.6, CertConfig::default()).is_err());
}

#[test]
fn session_contract() {
    let plan = bounded(2.0).sample_size_for_queries(5).unwrap();
    let data: Vec<f64> = (0..plan.n).map(|i| (i % 10) as f64 / 10.0).collect();
    let rng = RngState::new(17, 0);
    let mut s = AdaptiveSession::new(&data, plan.clone(), rng).unwrap();
    let scale = plan.noise_scale(data.len());
    for _ in 0..5 {
        let a = s.answer(|_| 1.0).unwrap();
        assert!((a - 1.0).abs() < scale);
    }
    assert_eq!(s.remaining(), 0);
    assert!(matches!(s.answer(|_| 1.0), Err(Error::BudgetExhausted(5))));

    let mut s = AdaptiveSession::new(&data, plan.clone(), rng).unwrap();
    assert!(matches!(s.answer(|x| 2.0 * x), Err(Error::Validation(_))));

    let queries: Vec<Box<dyn Fn(&f64) -> f64>> = (0..5)
        .map(|j| Box::new(move |x: &f64| if *x < j as f64 / 5.0 { 1.0 } else { 0.0 }) as Box<dyn Fn(&f64) -> f64>)
        .collect();
    let a = run_adaptive_session(&data, queries.iter().map(|q| |x: &f64| q(x)), plan.clone(), rng).unwrap();
    let b = run_adaptive_session(&data, queries.iter().map(|q| |x: &f64| q(x)), plan.clone(), rng).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let six = (0..6).map(|_| |_: &f64| 0.5);
    assert!(run_adaptive_session(&data, six, plan, rng).is_err());
}

#[test]
fn population_accuracy_over_seeded_sessions() {
    let (alpha, beta) = (0.1, 0.05);
    let k = 20u64;
    let plan = bounded(2.0).sample_size_for_queries(k).unwrap();
    let sessions = 200u64;
    let mut good = 0u64;
    for s in 0..sessions {
        // population: uniform on [0, 1]; query j is the indicator of x < (j + 1) / (k + 1)
        let data: Vec<f64> = RngState::new(1000 + s, 0).uniforms().take(plan.n as usize).collect();
        let thresholds: Vec<f64> = (0..k).map(|j| (j + 1) as f64 / (k + 1) as f64).collect();
        let queries = thresholds.iter().map(|&c| move |x: &f64| if *x < c { 1.0 } else { 0.0 });
        let t = run_adaptive_session(&data, queries, plan.clone(), RngState::new(s, 1)).unwrap();
        let worst = t
            .entries
            .iter()
            .zip(&thresholds)
            .map(|(e, c)| (e.answer - c).abs())
            .fold(0.0, f64::max);
        if worst <= alpha {
            good += 1;
        }
    }
    let n = sessions as f64;
    let floor = (1.0 - beta) * n - 3.0 * (n * beta * (1.0 - beta)).sqrt();
    assert!(good as f64 >= floor, "{good} of {sessions}");
}

#[test]
fn small_sweep_rows_are_ordered() {
    let rows = budget_sweep(&[20_000, 40_000], 0.1, 0.05, CertConfig::default()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].n, 20_000);
    assert!(rows[1].k_bounded_p2 >= rows[0].k_bounded_p2);
    assert!(rows[1].k_gaussian >= rows[0].k_gaussian);
}
