use boundnoise::empirical::{
    clopper_pearson_lower, estimate_delta_hat, exact_delta_oracle_1d, falsifier_check, privacy_loss_samples,
    FalsifierRule, FalsifierVerdict,
};
use boundnoise::{CertConfig, Certifier, NoiseFamily, PrivacyParams, RngState, ScaledNoise};
use statrs::distribution::{Binomial, DiscreteCDF};

fn poly2() -> NoiseFamily {
    NoiseFamily::poly(2.0).unwrap()
}

fn f_poly2(eta: f64) -> f64 {
    (1.0 - eta * eta).powi(-2)
}

fn calibrated(eps: f64, delta: f64, k: u64) -> ScaledNoise {
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    let cert = certifier
        .noise_upper_bound(&PrivacyParams::new(eps, delta, k, 1.0).unwrap())
        .unwrap();
    ScaledNoise::from_unit(certifier.unit().clone(), cert.r).unwrap()
}

#[test]
fn zero_shift_gives_zero_loss() {
    let s = ScaledNoise::new(poly2(), 5.0).unwrap();
    let set = privacy_loss_samples(&s, 7, 0.0, 1000, RngState::new(1, 0)).unwrap();
    assert!(set.losses.iter().all(|&l| l == 0.0));
    assert_eq!(set.infinite, 0);
}

#[test]
fn single_query_losses_follow_the_pushforward_law() {
    // g(eta) = f(eta + d) - f(eta) is increasing, so Pr[loss <= x] = cdf(g^-1(x))
    let r = 4.0;
    let d = 1.0 / r;
    let s = ScaledNoise::new(poly2(), r).unwrap();
    let n = 100_000;
    let set = privacy_loss_samples(&s, 1, 1.0, n, RngState::new(5, 2)).unwrap();
    let g = |e: f64| if e + d >= 1.0 { f64::INFINITY } else { f_poly2(e + d) - f_poly2(e) };
    let law = |x: f64| {
        let (mut lo, mut hi) = (-1.0, 1.0 - d);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        s.cdf(lo * r)
    };
    let mut losses = set.losses.clone();
    losses.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &x) in losses.iter().enumerate() {
        if !x.is_finite() {
            break;
        }
        let c = law(x);
        ks = ks.max((c - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - c).abs());
    }
    assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks}");
}

#[test]
fn losses_have_positive_mean() {
    let s = ScaledNoise::new(poly2(), 4.0).unwrap();
    let set = privacy_loss_samples(&s, 1, 1.0, 1_000_000, RngState::new(9, 0)).unwrap();
    let finite: Vec<f64> = set.finite_losses().collect();
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    assert!(mean > 0.0, "{mean}");
}

#[test]
fn delta_hat_basic_properties() {
    let s = ScaledNoise::new(poly2(), 30.0).unwrap();
    let set = privacy_loss_samples(&s, 20, 1.0, 20_000, RngState::new(3, 0)).unwrap();
    let max = set.finite_losses().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(set.infinite, 0);
    assert_eq!(estimate_delta_hat(&set, max).unwrap().0, 0.0);
    let mut prev = f64::INFINITY;
    for i in 0..40 {
        let eps = 0.05 * i as f64;
        let (d, _) = estimate_delta_hat(&set, eps).unwrap();
        assert!(d <= prev, "not monotone at eps={eps}");
        prev = d;
    }
}

#[test]
fn delta_hat_agrees_with_oracle_for_one_query() {
    // a modest R so that delta is large enough to estimate
    let s = ScaledNoise::new(poly2(), 6.0).unwrap();
    let set = privacy_loss_samples(&s, 1, 1.0, 1_000_000, RngState::new(21, 0)).unwrap();
    for &eps in &[0.1, 0.3] {
        let (hat, se) = estimate_delta_hat(&set, eps).unwrap();
        let exact = exact_delta_oracle_1d(&s, 1.0, eps).unwrap();
        assert!((hat - exact).abs() <= 4.0 * se, "eps={eps}: {hat:e} vs {exact:e} (se {se:e})");
    }
    let cal = calibrated(0.1, 1e-6, 1);
    let set = privacy_loss_samples(&cal, 1, 1.0, 1_000_000, RngState::new(22, 0)).unwrap();
    let (hat, se) = estimate_delta_hat(&set, 0.1).unwrap();
    let exact = exact_delta_oracle_1d(&cal, 1.0, 0.1).unwrap();
    assert!((hat - exact).abs() <= 4.0 * se + 1e-12, "{hat:e} vs {exact:e}");
}

#[test]
fn oracle_limits() {
    let s = ScaledNoise::new(poly2(), 1.0).unwrap();
    assert_eq!(exact_delta_oracle_1d(&s, 0.0, 0.3).unwrap(), 0.0);
    assert_eq!(exact_delta_oracle_1d(&s, 0.0, 0.0).unwrap(), 0.0);
    let tv = exact_delta_oracle_1d(&s, 2.0 - 1e-6, 0.0).unwrap();
    assert!(tv > 1.0 - 1e-9, "{tv}");
}

#[test]
fn oracle_matches_brute_force_hockey_stick() {
    let r = 20.0;
    let s = ScaledNoise::new(poly2(), r).unwrap();
    let eps = 0.5;
    let value = exact_delta_oracle_1d(&s, 1.0, eps).unwrap();
    let d = 1.0 / r;
    let density = |e: f64| if e.abs() < 1.0 { (-f_poly2(e)).exp() } else { 0.0 };
    let brute = |n: usize| {
        let h = 2.0 / n as f64;
        let (mut num, mut z) = (0.0, 0.0);
        for i in 0..n {
            let e = -1.0 + (i as f64 + 0.5) * h;
            let p = density(e);
            z += p;
            num += (p - eps.exp() * density(e - d)).max(0.0);
        }
        num / z
    };
    let (a, b) = (brute(10_000_000), brute(20_000_000));
    assert!((a - b).abs() < 1e-10, "{a:e} {b:e}");
    assert!((value - b).abs() < 1e-8, "{value:e} vs {b:e}");
}

#[test]
fn clopper_pearson_matches_binomial_tail() {
    assert_eq!(clopper_pearson_lower(0, 100, 0.99), 0.0);
    for &(x, n) in &[(1usize, 1000usize), (37, 1000), (999, 1000)] {
        let p = clopper_pearson_lower(x, n, 0.99);
        let tail = Binomial::new(p, n as u64).unwrap().sf(x as u64 - 1);
        assert!((tail - 0.01).abs() < 1e-6, "{x}/{n}: p={p} tail={tail}");
    }
    assert!((clopper_pearson_lower(1000, 1000, 0.99) - 0.01f64.powf(1e-3)).abs() < 1e-15);
}

#[test]
fn falsifier_respects_certificates() {
    let cal = calibrated(1.0, 1e-6, 100);
    let rng = RngState::new(7, 0);
    let ok = falsifier_check(&cal, 100, 1.0, 1.0, 1e-6, 20_000, rng, FalsifierRule::Generalized).unwrap();
    assert_eq!(ok.verdict, FalsifierVerdict::NotRefuted);
    let small = cal.with_magnitude(0.01 * cal.magnitude()).unwrap();
    let bad = falsifier_check(&small, 100, 1.0, 1.0, 1e-6, 20_000, rng, FalsifierRule::Generalized).unwrap();
    assert_eq!(bad.verdict, FalsifierVerdict::Refuted);
    assert!(bad.rho_hat > 0.99);
    let verbatim = falsifier_check(&small, 100, 1.0, 1.0, 1e-6, 20_000, rng, FalsifierRule::Verbatim).unwrap();
    assert_eq!(verbatim.verdict, FalsifierVerdict::Refuted);
}

#[test]
fn large_delta_is_never_refuted() {
    let s = ScaledNoise::new(poly2(), 0.5).unwrap();
    let rep = falsifier_check(&s, 100, 1.0, 1.0, 0.64, 5000, RngState::new(1, 1), FalsifierRule::Generalized).unwrap();
    assert!(rep.probability_threshold >= 1.0);
    assert_eq!(rep.verdict, FalsifierVerdict::NotRefuted);
    assert!(falsifier_check(&s, 1, 1.0, 1.0, 1e-6, 999, RngState::new(1, 1), FalsifierRule::Generalized).is_err());
}

#[test]
fn loss_csv_has_one_header() {
    let s = ScaledNoise::new(poly2(), 1.0).unwrap();
    let set = privacy_loss_samples(&s, 1, 0.9, 50, RngState::new(2, 0)).unwrap();
    let mut buf = Vec::new();
    set.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,loss");
    assert_eq!(lines.len(), 51);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",inf")).count(), set.infinite);
}
