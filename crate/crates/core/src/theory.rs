//! Rate functions and the quantities derived from them.
//!
//! A rate `I` describes tails `Pr[|X| > t] <= C e^(-I(t))`. From it come the
//! regime threshold `t*` (solving `t^2 = k I(t) / 2`), the admissible-delta
//! floor `delta*_k = exp(-I(t*) / C_f)`, the moment constant `M` and a
//! two-regime bound on sums of `n` such variables. Unknown universal
//! constants are explicit arguments.

use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::certify::PrivacyParams;
use crate::error::{Error, Result};
use crate::family::NoiseFamily;
use crate::quadrature::{self, Tolerance};
use crate::registry::Registry;

pub trait RateFunction: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    /// `I(t)` for `t >= 0`.
    fn eval(&self, t: f64) -> f64;
    /// Exponent `a` with `I(t) >= c t^a` for large `t` (any `a' < a` works too).
    fn growth_exponent(&self) -> f64;
    fn parameter(&self) -> Option<f64> {
        None
    }
}

/// `I(t) = (t / 2p)^(p / (p + 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyRate {
    p: f64,
}

impl PolyRate {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::domain(format!("poly rate needs p > 0, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `t* = (k / (2 (2p)^(p/(p+1))))^((p+1)/(p+2))`.
    pub fn t_star_closed_form(&self, k: f64) -> f64 {
        let p = self.p;
        (k / (2.0 * (2.0 * p).powf(p / (p + 1.0)))).powf((p + 1.0) / (p + 2.0))
    }
}

impl RateFunction for PolyRate {
    fn name(&self) -> &'static str {
        "poly"
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        (t / (2.0 * self.p)).powf(self.p / (self.p + 1.0))
    }

    fn growth_exponent(&self) -> f64 {
        self.p / (self.p + 1.0)
    }

    fn parameter(&self) -> Option<f64> {
        Some(self.p)
    }
}

/// `I(t) = t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearRate;

impl RateFunction for LinearRate {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn eval(&self, t: f64) -> f64 {
        t.max(0.0)
    }

    fn growth_exponent(&self) -> f64 {
        1.0
    }
}

/// Smallest argument of `g`; `ln ln u` vanishes at `e`.
const G_DOMAIN_START: f64 = std::f64::consts::E + 1e-9;

/// `g(u) = 2 u ln u (ln ln u)^2` for `u > e`.
pub fn g_double_exp(u: f64) -> f64 {
    let l = u.ln();
    let ll = l.ln();
    2.0 * u * l * ll * ll
}

/// `I(t) = min(t, g^-1(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleExpRate {
    crossover: f64,
}

impl Default for DoubleExpRate {
    fn default() -> Self {
        Self::new()
    }
}

impl DoubleExpRate {
    pub fn new() -> Self {
        static CROSSOVER: OnceLock<f64> = OnceLock::new();
        let crossover = *CROSSOVER.get_or_init(|| {
            // g^-1(t) - t changes sign where g(t) = t, i.e. 2 ln t (ln ln t)^2 = 1
            let h = |t: f64| g_inverse(t) - t;
            let (mut lo, mut hi) = (G_DOMAIN_START, 1e3);
            debug_assert!(h(lo) > 0.0 && h(hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if h(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        });
        Self { crossover }
    }

    /// `t'`: `I(t) = t` below, `g^-1(t)` above.
    pub fn crossover(&self) -> f64 {
        self.crossover
    }
}

/// `g^-1(t)` by bisection on `[e + 1e-9, inf)`; `t` itself below `g(e + 1e-9)`.
pub fn g_inverse(t: f64) -> f64 {
    if t <= g_double_exp(G_DOMAIN_START) {
        return t;
    }
    let (mut lo, mut hi) = (G_DOMAIN_START, G_DOMAIN_START.max(t));
    while g_double_exp(hi) < t {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_double_exp(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (g_double_exp(lo) - t).abs() < (g_double_exp(hi) - t).abs() {
        lo
    } else {
        hi
    }
}

impl RateFunction for DoubleExpRate {
    fn name(&self) -> &'static str {
        "double-exp"
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t <= self.crossover {
            t
        } else {
            g_inverse(t).min(t)
        }
    }

    fn growth_exponent(&self) -> f64 {
        // t / polylog(t)
        0.99
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RateArgs {
    pub p: Option<f64>,
}

pub type RateRegistry = Registry<dyn RateFunction, RateArgs>;

pub fn builtin_rates() -> RateRegistry {
    let mut reg = RateRegistry::new("rate function");
    reg.register("poly", "(t / 2p)^(p / (p + 1))", |a| {
        let p = a.p.ok_or_else(|| Error::domain("the poly rate needs p"))?;
        Ok(Arc::new(PolyRate::new(p)?) as Arc<dyn RateFunction>)
    });
    reg.register("double-exp", "min(t, g^-1(t)), g(u) = 2u ln u (ln ln u)^2", |_| {
        Ok(Arc::new(DoubleExpRate::new()) as Arc<dyn RateFunction>)
    });
    reg.register("linear", "t", |_| Ok(Arc::new(LinearRate) as Arc<dyn RateFunction>));
    reg
}

pub fn rate_registry() -> &'static RateRegistry {
    static REGISTRY: OnceLock<RateRegistry> = OnceLock::new();
    REGISTRY.get_or_init(builtin_rates)
}

pub fn rate_eval(rate: &dyn RateFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("rate argument must be positive, got {t}")));
    }
    Ok(rate.eval(t))
}

/// Solution of `t^2 = scale * I(t) / 2` by bisection in `ln t`.
fn regime_threshold(rate: &dyn RateFunction, scale: f64) -> f64 {
    let phi = |t: f64| t * t - 0.5 * scale * rate.eval(t);
    let mut hi = 1.0f64;
    while phi(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while phi(lo) > 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    for _ in 0..400 {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `t*` for `k` variables: `t = k I(t) / 2t`.
pub fn t_star(rate: &dyn RateFunction, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    Ok(regime_threshold(rate, k as f64))
}

/// `delta*_k = exp(-I(t*) / C_f)`.
pub fn delta_star_k(rate: &dyn RateFunction, k: u64, c_f: f64) -> Result<f64> {
    if !(c_f > 0.0) {
        return Err(Error::domain(format!("C_f must be positive, got {c_f}")));
    }
    let t = t_star(rate, k)?;
    Ok((-rate.eval(t) / c_f).exp())
}

/// `int_0^horizon (t^2 + 2t) e^(-I(t)/2) dt`.
pub fn moment_integral(rate: &dyn RateFunction, horizon: f64) -> Result<f64> {
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-13,
        max_panels: 1 << 14,
    };
    let integrand = |t: f64| (t * t + 2.0 * t) * (-0.5 * rate.eval(t)).exp();
    let mut total = quadrature::CompensatedSum::default();
    let (mut a, mut b) = (0.0, 1.0f64.min(horizon));
    while a < horizon {
        total.add(quadrature::integrate(integrand, a, b, tol)?.value);
        a = b;
        b = (2.0 * b).min(horizon);
    }
    Ok(total.value())
}

/// Default horizon: the first power of two past which `(t^2 + 2t) e^(-I/2) < e^-90`.
pub fn moment_horizon(rate: &dyn RateFunction) -> Result<f64> {
    let mut t = 1.0f64;
    for _ in 0..1100 {
        let log_integrand = (t * t + 2.0 * t).ln() - 0.5 * rate.eval(t);
        if log_integrand < -90.0 && rate.eval(t) > 4.0 * (t + 1.0).ln() {
            return Ok(t);
        }
        t *= 2.0;
    }
    Err(Error::NonConvergence("moment integrand does not decay".into()))
}

/// `M = max(1, C int_0^inf (t^2 + 2t) e^(-I(t)/2) dt)`.
pub fn moment_constant_m(rate: &dyn RateFunction, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("C must be positive, got {c}")));
    }
    if rate.growth_exponent() < 0.5 {
        return Err(Error::domain(format!(
            "rate {} grows like t^{}, slower than sqrt(t)",
            rate.name(),
            rate.growth_exponent()
        )));
    }
    let horizon = moment_horizon(rate)?;
    Ok((c * moment_integral(rate, horizon)?).max(1.0))
}

/// Tail bound for `|X_1 + ... + X_n| > t` with two regimes split at the
/// solution of `t = M n I(t) / 2t`.
pub fn heavy_tail_bound(rate: &dyn RateFunction, c: f64, m: f64, n: u64, t: f64) -> Result<f64> {
    if n == 0 || !(t >= 0.0) || !(m > 0.0) || !(c > 0.0) {
        return Err(Error::domain("heavy-tail bound needs n >= 1, t >= 0, M > 0, C > 0"));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let nf = n as f64;
    let threshold = regime_threshold(rate, m * nf);
    let value = if t <= threshold {
        2.0 * (-t * t / (2.0 * m * nf)).exp() + c * nf * (-rate.eval(threshold)).exp()
    } else {
        let i = rate.eval(t);
        2.0 * (-i / 4.0).exp() + c * nf * (-i).exp()
    };
    Ok(value.min(1.0))
}

/// `C_f Delta sqrt(k ln(1/delta)) / eps`.
pub fn theoretical_r(params: &PrivacyParams, c_f: f64) -> Result<f64> {
    params.validate()?;
    if !(c_f > 0.0) {
        return Err(Error::domain(format!("C_f must be positive, got {c_f}")));
    }
    Ok(c_f * params.sensitivity * (params.k as f64 * (1.0 / params.delta).ln()).sqrt() / params.epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthReport {
    pub schema_version: u32,
    pub family: String,
    pub rate: String,
    pub grid_points: usize,
    /// Points where `f` (or a derivative) is not finite.
    pub skipped: usize,
    /// `max I(|f'(eta)|) - f(eta)`; `<= 0` means the first-derivative condition holds.
    pub max_violation: f64,
    pub max_violation_at: f64,
    /// `max |f''(eta)| / f(eta)^2`, the smallest admissible `C`.
    pub min_c: f64,
    pub min_c_at: f64,
    pub violations: usize,
}

/// Uniform grid of `n` points on `[-a, a]`.
pub fn symmetric_grid(a: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect()
}

pub fn verify_growth_conditions(family: &NoiseFamily, rate: &dyn RateFunction, grid: &[f64]) -> Result<GrowthReport> {
    if let Some(bad) = grid.iter().find(|x| !(x.abs() < 1.0)) {
        return Err(Error::domain(format!("grid point {bad} outside (-1, 1)")));
    }
    let mut report = GrowthReport {
        schema_version: crate::SCHEMA_VERSION,
        family: family.to_string(),
        rate: match rate.parameter() {
            Some(p) => format!("{}(p={p})", rate.name()),
            None => rate.name().to_string(),
        },
        grid_points: grid.len(),
        skipped: 0,
        max_violation: f64::NEG_INFINITY,
        max_violation_at: f64::NAN,
        min_c: 0.0,
        min_c_at: f64::NAN,
        violations: 0,
    };
    for &eta in grid {
        let f = family.eval_f(eta)?;
        let f1 = family.eval_f_prime(eta)?;
        let f2 = family.eval_f_second(eta)?;
        if !(f.is_finite() && f1.is_finite() && f2.is_finite()) {
            report.skipped += 1;
            continue;
        }
        let v = rate.eval(f1.abs()) - f;
        if v > report.max_violation {
            report.max_violation = v;
            report.max_violation_at = eta;
        }
        if v > 0.0 {
            report.violations += 1;
        }
        let c = f2.abs() / (f * f);
        if c > report.min_c {
            report.min_c = c;
            report.min_c_at = eta;
        }
    }
    Ok(report)
}
