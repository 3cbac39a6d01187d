use boundnoise::certify::{delta2_integral, deviation_bound, log_mgf, truncation_threshold};
use boundnoise::empirical::exact_delta_oracle_1d;
use boundnoise::sampler;
use boundnoise::{CertConfig, Certifier, NoiseFamily, PrivacyParams, RngState, ScaledNoise, Verdict};
use rayon::prelude::*;

fn poly2() -> NoiseFamily {
    NoiseFamily::poly(2.0).unwrap()
}

fn f_poly2(eta: f64) -> f64 {
    (1.0 - eta * eta).powi(-2)
}

/// Midpoint rule with `n` panels, summed in parallel blocks.
fn midpoint<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let block = 1 << 16;
    (0..n.div_ceil(block))
        .into_par_iter()
        .map(|blk| {
            let lo = blk * block;
            let hi = (lo + block).min(n);
            (lo..hi).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>()
        })
        .sum::<f64>()
        * h
}

fn poly2_z() -> f64 {
    midpoint(|e| (-f_poly2(e)).exp(), -1.0, 1.0, 10_000_000)
}

#[test]
fn truncation_tail_mass_goes_to_zero_width() {
    let s = ScaledNoise::new(poly2(), 1.0).unwrap();
    let l = truncation_threshold(&s, 1.0 - 1e-12).unwrap();
    assert!(l < 1e-9, "{l}");
    assert!(truncation_threshold(&s, 0.0).is_err());
    assert!(truncation_threshold(&s, 1.0).is_err());
}

#[test]
fn truncation_symmetry_identity() {
    let s = ScaledNoise::new(poly2(), 3.0).unwrap();
    for &m in &[0.5, 1e-2, 1e-5] {
        let l = truncation_threshold(&s, m).unwrap();
        let two_sided = 2.0 * (1.0 - s.cdf(l));
        assert!((two_sided - m).abs() <= 1e-9 * m.max(1e-3), "{m}: {two_sided}");
    }
}

#[test]
fn truncation_matches_brute_force_tail() {
    let s = ScaledNoise::new(poly2(), 1.0).unwrap();
    let l = truncation_threshold(&s, 1e-8).unwrap();
    let z = poly2_z();
    let tail = |x: f64| 2.0 * midpoint(|e| (-f_poly2(e)).exp(), x, 1.0, 1_000_000) / z;
    // the brute-force threshold by bisection on the quadrature tail
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > 1e-8 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((l - lo).abs() < 1e-6, "{l} vs {lo}");
    assert!(tail(l) <= 1e-8 * (1.0 + 1e-6));
}

#[test]
fn log_mgf_special_cases() {
    let s = ScaledNoise::new(poly2(), 10.0).unwrap();
    let l = 8.0;
    let inside = (s.cdf(l) - s.cdf(-l)).ln();
    let at_zero = log_mgf(&s, l, 0.0, 1.0).unwrap();
    assert!(at_zero <= 0.0);
    assert!(at_zero >= inside && at_zero - inside < 1e-9, "{at_zero} {inside}");
    for &lambda in &[0.0, 0.7, 5.0] {
        let v = log_mgf(&s, l, lambda, 0.0).unwrap();
        assert!(v >= inside && v - inside < 1e-9, "{lambda}: {v} {inside}");
    }
    assert!(log_mgf(&s, l, -1.0, 1.0).is_err());
}

#[test]
fn log_mgf_upper_bounds_fine_quadrature() {
    let r = 100.0;
    let l = 99.0 * 0.9;
    let s = ScaledNoise::new(poly2(), r).unwrap();
    let v = log_mgf(&s, l, 0.5, 1.0).unwrap();
    let z = poly2_z();
    let d = 1.0 / r;
    let integrand = |e: f64| (-f_poly2(e) + 0.5 * (f_poly2(e + d) - f_poly2(e))).exp();
    let oracle = (midpoint(integrand, -l / r, l / r, 10_000_000) / z).ln();
    assert!(v >= oracle - 1e-12 && v <= oracle + 1e-3, "{v} vs {oracle}");
}

#[test]
fn deviation_bound_special_cases() {
    let s = ScaledNoise::new(poly2(), 50.0).unwrap();
    assert_eq!(deviation_bound(&s, 40.0, 1.0, 10, 0.0).unwrap(), 1.0);
    assert_eq!(deviation_bound(&s, 40.0, 1.0, 10, -3.0).unwrap(), 1.0);
    assert_eq!(deviation_bound(&s, 40.0, 0.0, 10, 0.1).unwrap(), 0.0);
}

#[test]
fn deviation_bound_dominates_monte_carlo() {
    let params = PrivacyParams::new(1.0, 1e-6, 100, 1.0).unwrap();
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    let cert = certifier.noise_upper_bound(&params).unwrap();
    let s = ScaledNoise::from_unit(certifier.unit().clone(), cert.r).unwrap();
    let (l, d) = (cert.l, 1.0 / cert.r);
    let trials = 1_000_000usize;
    let ts = [0.2, 0.5, 1.0, 1.5];
    let rng = RngState::new(11, 0);
    let sums: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let eta = sampler::sample_from(&s, rng, (j * 100) as u64, 100);
            let mut total = 0.0;
            for y in eta {
                if y.abs() > l {
                    return None;
                }
                let e = y / cert.r;
                total += f_poly2(e + d) - f_poly2(e);
            }
            Some(total)
        })
        .collect();
    for &t in &ts {
        let freq = sums.iter().filter(|x| matches!(x, Some(v) if *v > t)).count() as f64 / trials as f64;
        let bound = deviation_bound(&s, l, 1.0, 100, t).unwrap();
        assert!(bound >= freq, "t={t}: bound {bound:e} < frequency {freq:e}");
    }
}

#[test]
fn delta2_integral_limits() {
    let config = CertConfig::default();
    // the mean loss of k queries sits far past eps + tail_t, so the bound is 1
    let s = ScaledNoise::new(poly2(), 1.0).unwrap();
    let v = delta2_integral(&s, 0.9, 0.09, 1_000_000, 0.5, &config).unwrap();
    assert!(v <= 1.0 && v >= 1.0 - (-config.tail_t).exp() - 1e-3, "{v}");
    let zero = delta2_integral(&s, 0.5, 0.0, 100, 0.5, &config).unwrap();
    assert!(zero <= 1e-300, "{zero}");
}

#[test]
fn delta2_grid_refinement_is_stable() {
    let params = PrivacyParams::new(0.1, 1e-6, 1000, 1.0).unwrap();
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    let cert = certifier.noise_upper_bound(&params).unwrap();
    let s = ScaledNoise::from_unit(certifier.unit().clone(), cert.r).unwrap();
    let coarse = CertConfig::default();
    let fine = CertConfig {
        t_grid_points: 2 * coarse.t_grid_points,
        ..coarse
    };
    let a = delta2_integral(&s, cert.l, 1.0, 1000, 0.1, &coarse).unwrap();
    let b = delta2_integral(&s, cert.l, 1.0, 1000, 0.1, &fine).unwrap();
    assert!(b <= a * (1.0 + 1e-12), "refining the grid must not raise the bound");
    assert!((a - b).abs() < 0.01 * a, "{a:e} {b:e}");
}

#[test]
fn small_r_is_rejected_by_the_guard() {
    let params = PrivacyParams::new(0.5, 1e-6, 10, 1.0).unwrap();
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    for r in [0.5, 1.0] {
        let cert = certifier.test_privacy(r, &params).unwrap();
        assert_eq!(cert.verdict, Verdict::Rejected);
        assert_eq!(cert.reject_reason.as_deref(), Some("L+Δ ≥ R"));
    }
}

#[test]
fn generous_r_is_certified() {
    let params = PrivacyParams::new(0.1, 1e-6, 100, 1.0).unwrap();
    let r = 10.0 * (100.0 * 1e6f64.ln()).sqrt() / 0.1;
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    let cert = certifier.test_privacy(r, &params).unwrap();
    assert!(cert.is_certified(), "{cert:?}");
    assert!(cert.delta1 + cert.delta2 <= 1e-6);
}

#[test]
fn certified_single_query_respects_the_oracle() {
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    for &(eps, delta) in &[(0.1, 1e-10), (0.5, 1e-6)] {
        let params = PrivacyParams::new(eps, delta, 1, 1.0).unwrap();
        let cert = certifier.noise_upper_bound(&params).unwrap();
        let s = ScaledNoise::from_unit(certifier.unit().clone(), cert.r).unwrap();
        let exact = exact_delta_oracle_1d(&s, 1.0, eps).unwrap();
        assert!(exact <= cert.delta1 + cert.delta2, "{eps} {delta}: {exact:e}");
        assert!(exact <= delta);
    }
}

#[test]
fn r_star_scales_with_sensitivity() {
    let config = CertConfig::default();
    let certifier = Certifier::new(poly2(), config).unwrap();
    let p1 = PrivacyParams::new(0.3, 1e-8, 50, 1.0).unwrap();
    let r1 = certifier.noise_upper_bound(&p1).unwrap().r;
    let r2 = certifier.noise_upper_bound(&p1.with_sensitivity(2.0)).unwrap().r;
    assert!((r2 / (2.0 * r1) - 1.0).abs() <= 2.0 * config.bisect_rel_tol, "{r1} {r2}");
}

#[test]
fn r_star_is_monotone() {
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    let r = |eps: f64, delta: f64, k: u64| {
        certifier
            .noise_upper_bound(&PrivacyParams::new(eps, delta, k, 1.0).unwrap())
            .unwrap()
            .r
    };
    assert!(r(0.1, 1e-6, 1000) >= r(0.1, 1e-6, 100));
    assert!(r(0.1, 1e-6, 100) >= r(0.2, 1e-6, 100));
    assert!(r(0.1, 1e-10, 100) >= r(0.1, 1e-6, 100));
}

#[test]
fn certificate_serializes_with_schema_fields() {
    let certifier = Certifier::new(poly2(), CertConfig::default()).unwrap();
    let params = PrivacyParams::new(1.0, 1e-6, 10, 1.0).unwrap();
    let cert = certifier.noise_upper_bound(&params).unwrap();
    let json = serde_json::to_value(&cert).unwrap();
    for key in ["schemaVersion", "R", "L", "delta1", "delta2", "verdict", "Delta", "configHash"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["verdict"], "certified");
    let back: boundnoise::Certificate = serde_json::from_value(json).unwrap();
    assert_eq!(back, cert);
}

#[test]
fn riemann_rule_is_also_sound() {
    let config = CertConfig {
        mgf_rule: boundnoise::certify::MgfRule::Riemann,
        ..CertConfig::default()
    };
    let certifier = Certifier::new(NoiseFamily::single_exp(), config).unwrap();
    let params = PrivacyParams::new(1.0, 1e-6, 1, 1.0).unwrap();
    let cert = certifier.noise_upper_bound(&params).unwrap();
    let s = ScaledNoise::from_unit(certifier.unit().clone(), cert.r).unwrap();
    assert!(exact_delta_oracle_1d(&s, 1.0, 1.0).unwrap() <= 1e-6);
}
