//! MGF privacy certificates and the binary-search calibrator for `R`.
//!
//! Everything here runs in unit coordinates: with `d = Delta / R` and
//! `l = L / R`, the per-query loss on the truncation window is
//! `g(eta) = f(eta + d) - f(eta)` for `eta ~ mu_f` restricted to `|eta| <= l`.
//! The certificate only depends on `R` through `d`, which makes calibrated
//! magnitudes exactly linear in `Delta`.
//!
//! The bound for `k` queries is
//!
//! ```text
//! delta1 = Pr[some |eta_i| > l]                    (union bound, <= delta1Fraction * delta)
//! B(t)   = min(1, inf_lambda exp(k Lambda(lambda) - lambda t))
//! delta2 = int_eps^inf B(t) e^(eps - t) dt
//! ```
//!
//! with `Lambda(lambda) = ln int_{-l}^{l} p(eta) e^(lambda g(eta)) d eta`.
//! `Lambda` is evaluated by Gauss-Kronrod panels and padded upwards by the
//! panels' `|K15 - G7|`, so every quantity reported is an upper bound up to
//! the quadrature error estimate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distribution::{ScaledNoise, UnitNoise};
use crate::error::{Error, Result};
use crate::family::NoiseFamily;
use crate::quadrature;

/// Relative padding added to every MGF value on top of the quadrature error.
const MGF_FLOOR: f64 = 1e-12;
/// Doubling stops here (in units of `Delta`).
const MAX_DOUBLINGS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub k: u64,
    #[serde(rename = "Delta")]
    pub sensitivity: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, k: u64, sensitivity: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            k,
            sensitivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.k == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        if !(self.sensitivity.is_finite() && self.sensitivity > 0.0) {
            return Err(Error::domain(format!("Delta must be positive, got {}", self.sensitivity)));
        }
        Ok(())
    }

    pub fn with_k(self, k: u64) -> Self {
        Self { k, ..self }
    }

    pub fn with_sensitivity(self, sensitivity: f64) -> Self {
        Self { sensitivity, ..self }
    }
}

/// How `Lambda(lambda)` is integrated over the truncation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MgfRule {
    /// Graded Gauss-Kronrod panels, padded by `|K15 - G7|`.
    GaussKronrod,
    /// Exact panel masses times the loss at each panel's right end.
    Riemann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct CertConfig {
    /// `delta1 = delta1Fraction * delta`.
    pub delta1_fraction: f64,
    pub mgf_rule: MgfRule,
    /// Panels of the Riemann rule.
    pub mgf_panels: usize,
    /// Gauss-Kronrod panel width is at most `2L / gkPanels`, smaller where `f` steepens.
    pub gk_panels: usize,
    /// The `t` integral runs over `[eps, eps + tailT]`, plus a closed-form tail.
    pub tail_t: f64,
    pub t_grid_points: usize,
    /// Relative tolerance of the `lambda` solve.
    pub lambda_tolerance: f64,
    /// Relative tolerance on `R` in the calibrator.
    pub bisect_rel_tol: f64,
    /// Record `(t, lambda, bound)` for every grid point visited.
    pub trace: bool,
}

impl Default for CertConfig {
    fn default() -> Self {
        Self {
            delta1_fraction: 0.01,
            mgf_rule: MgfRule::GaussKronrod,
            mgf_panels: 1 << 14,
            gk_panels: 64,
            tail_t: 60.0,
            t_grid_points: 512,
            lambda_tolerance: 1e-8,
            bisect_rel_tol: 1e-6,
            trace: false,
        }
    }
}

impl CertConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta1_fraction > 0.0 && self.delta1_fraction < 1.0) {
            return Err(Error::domain(format!(
                "delta1Fraction must lie in (0, 1), got {}",
                self.delta1_fraction
            )));
        }
        if self.mgf_panels == 0 || self.gk_panels == 0 || self.t_grid_points < 2 {
            return Err(Error::domain("mgfPanels and gkPanels must be >= 1, tGridPoints >= 2"));
        }
        for (name, v) in [
            ("tailT", self.tail_t),
            ("lambdaTolerance", self.lambda_tolerance),
            ("bisectRelTol", self.bisect_rel_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// SHA-256 (hex) of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub t: f64,
    pub lambda: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub schema_version: u32,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k: u64,
    #[serde(rename = "Delta")]
    pub sensitivity: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_trace: Option<Vec<LambdaPoint>>,
    pub config_hash: String,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn params(&self) -> PrivacyParams {
        PrivacyParams {
            epsilon: self.epsilon,
            delta: self.delta,
            k: self.k,
            sensitivity: self.sensitivity,
        }
    }
}

/// Cumulants of the per-query loss on the window at one `lambda`.
#[derive(Debug, Clone, Copy)]
struct Cumulants {
    /// Upper bound on `Lambda(lambda)`.
    upper: f64,
    /// `Lambda'(lambda)`: mean of `g` under the tilted window measure.
    slope: f64,
    /// `Lambda''(lambda)`.
    curvature: f64,
}

/// Quadrature nodes for `int_{-l}^{l} p(eta) e^(lambda g(eta)) d eta`, fixed per `(l, d)`.
#[derive(Debug, Clone)]
struct LossWindow {
    /// `ln(K weight) + ln p(eta)` per node.
    log_weight: Vec<f64>,
    /// `1 - G weight / K weight`, for the error estimate.
    defect: Vec<f64>,
    loss: Vec<f64>,
    /// Node ranges of the panels.
    panels: Vec<std::ops::Range<usize>>,
    loss_max: f64,
}

impl LossWindow {
    fn build(unit: &UnitNoise, l: f64, d: f64, config: &CertConfig) -> Result<Self> {
        match config.mgf_rule {
            MgfRule::GaussKronrod => Self::gauss_kronrod(unit, l, d, config.gk_panels),
            MgfRule::Riemann => Self::riemann(unit, l, d, config.mgf_panels),
        }
    }

    fn gauss_kronrod(unit: &UnitNoise, l: f64, d: f64, width_panels: usize) -> Result<Self> {
        if !(l + d < 1.0) {
            return Err(Error::Infeasible(format!("L + Delta >= R (L/R = {l}, Delta/R = {d})")));
        }
        let f = unit.family();
        let loss_at = |eta: f64| -> f64 {
            let a = f.shape().value(eta + d);
            let b = f.shape().value(eta);
            a - b
        };
        let loss_max = loss_at(l);
        if !loss_max.is_finite() {
            return Err(Error::Infeasible(format!(
                "privacy loss overflows on the truncation window (L/R = {l}, Delta/R = {d})"
            )));
        }

        // Panel widths shrink near eta = -1 (where p vanishes) and near
        // eta = 1 - d (where g blows up).
        let h_max = 2.0 * l / width_panels as f64;
        let mut edges = vec![-l];
        let mut x = -l;
        while x < l {
            let dist = (1.0 + x).min(1.0 - d - x);
            let step = h_max.min(0.25 * dist).max(1e-3 * h_max);
            x = (x + step).min(l);
            if l - x < 0.25 * step {
                x = l;
            }
            edges.push(x);
        }

        let mut log_weight = Vec::with_capacity(15 * edges.len());
        let mut defect = Vec::with_capacity(15 * edges.len());
        let mut loss = Vec::with_capacity(15 * edges.len());
        let mut panels = Vec::with_capacity(edges.len());
        for w in edges.windows(2) {
            let start = loss.len();
            for (eta, kw, gw) in quadrature::gk15_nodes(w[0], w[1]) {
                let lp = unit.log_density(eta);
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                log_weight.push(kw.ln() + lp);
                defect.push(1.0 - gw / kw);
                loss.push(loss_at(eta));
            }
            panels.push(start..loss.len());
        }
        Ok(Self {
            log_weight,
            defect,
            loss,
            panels,
            loss_max,
        })
    }

    /// Upper Riemann sums: panel mass times the loss at the panel's right end.
    fn riemann(unit: &UnitNoise, l: f64, d: f64, panels: usize) -> Result<Self> {
        if !(l + d < 1.0) {
            return Err(Error::Infeasible(format!("L + Delta >= R (L/R = {l}, Delta/R = {d})")));
        }
        let f = unit.family();
        let loss_at = |eta: f64| f.shape().value(eta + d) - f.shape().value(eta);
        let loss_max = loss_at(l);
        if !loss_max.is_finite() {
            return Err(Error::Infeasible(format!(
                "privacy loss overflows on the truncation window (L/R = {l}, Delta/R = {d})"
            )));
        }
        // Lower masses left of 0 and upper tails right of it keep the tail digits.
        let mass_between = |a: f64, b: f64| -> f64 {
            if b <= 0.0 {
                unit.cdf(b) - unit.cdf(a)
            } else if a >= 0.0 {
                unit.upper_tail(a) - unit.upper_tail(b)
            } else {
                1.0 - unit.cdf(a) - unit.upper_tail(b)
            }
        };
        let mut log_weight = Vec::with_capacity(panels);
        let mut loss = Vec::with_capacity(panels);
        let mut a = -l;
        for i in 1..=panels {
            let b = if i == panels { l } else { -l + 2.0 * l * i as f64 / panels as f64 };
            let mass = mass_between(a, b);
            if mass > 0.0 {
                log_weight.push(mass.ln());
                loss.push(loss_at(b));
            }
            a = b;
        }
        let n = loss.len();
        Ok(Self {
            defect: vec![0.0; n],
            log_weight,
            loss,
            panels: vec![0..n],
            loss_max,
        })
    }

    fn cumulants(&self, lambda: f64) -> Cumulants {
        let mut top = f64::NEG_INFINITY;
        for (lw, g) in self.log_weight.iter().zip(&self.loss) {
            top = top.max(lw + lambda * g);
        }
        let (mut s0, mut s1, mut s2, mut err) = (0.0, 0.0, 0.0, 0.0);
        for range in &self.panels {
            let mut panel_err = 0.0;
            for j in range.clone() {
                let g = self.loss[j];
                let w = (self.log_weight[j] + lambda * g - top).exp();
                s0 += w;
                s1 += w * g;
                s2 += w * g * g;
                panel_err += self.defect[j] * w;
            }
            err += panel_err.abs();
        }
        let slope = s1 / s0;
        Cumulants {
            upper: top + (s0 + err).ln() + MGF_FLOOR,
            slope,
            curvature: (s2 / s0 - slope * slope).max(0.0),
        }
    }
}

/// Chernoff bound for `Pr[sum of k losses > t]` at the best `lambda`,
/// solving `k Lambda'(lambda) = t` by safeguarded Newton from `warm`.
#[derive(Debug, Clone, Copy)]
struct Tangent {
    lambda: f64,
    /// `ln B(t)` before capping at 0, i.e. `k Lambda(lambda) - lambda t`.
    log_bound: f64,
}

fn chernoff(window: &LossWindow, k: f64, t: f64, warm: f64, tol: f64) -> Tangent {
    if t >= k * window.loss_max {
        return Tangent {
            lambda: f64::INFINITY,
            log_bound: f64::NEG_INFINITY,
        };
    }
    let at = |lambda: f64| {
        let c = window.cumulants(lambda);
        (c, k * c.slope - t)
    };
    let (c0, psi0) = at(0.0);
    if psi0 >= 0.0 {
        return Tangent {
            lambda: 0.0,
            log_bound: k * c0.upper,
        };
    }
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut best = (0.0, k * c0.upper);
    let mut lambda = if warm > 0.0 && warm.is_finite() { warm } else { 1.0 / window.loss_max.max(1e-300) };
    for _ in 0..200 {
        let (c, psi) = at(lambda);
        let value = k * c.upper - lambda * t;
        if value < best.1 {
            best = (lambda, value);
        }
        if psi < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let step = if c.curvature > 0.0 { psi / (k * c.curvature) } else { f64::NAN };
        let newton = lambda - step;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * lambda.max(lo)
        };
        if (next - lambda).abs() <= tol * lambda || (hi - lo) <= tol * lo {
            lambda = next;
            break;
        }
        lambda = next;
    }
    let (c, _) = at(lambda);
    let value = k * c.upper - lambda * t;
    if value < best.1 {
        best = (lambda, value);
    }
    Tangent {
        lambda: best.0,
        log_bound: best.1,
    }
}

/// Outcome of the `delta2` sweep.
#[derive(Debug, Clone)]
struct Delta2 {
    value: f64,
    /// The partial sum alone already exceeded the budget.
    exceeded: bool,
    trace: Option<Vec<LambdaPoint>>,
}

/// Upper bound on `int_eps^inf B(t) e^(eps - t) dt`.
///
/// On each grid interval `[t_i, t_{i+1}]` the Chernoff exponent at the
/// interval's left `lambda_i` is linear in `t`, which is integrated exactly.
/// The sweep stops early once `budget` is exceeded or once the closed-form
/// tail from the current point is below `1e-4 * budget`.
fn delta2_sweep(window: &LossWindow, k: u64, epsilon: f64, budget: f64, config: &CertConfig) -> Delta2 {
    let k = k as f64;
    let horizon = epsilon + config.tail_t;
    let m = config.t_grid_points - 1;
    let ratio = (horizon / epsilon).powf(1.0 / m as f64);
    let mut trace = config.trace.then(Vec::new);
    let mut sum = quadrature::CompensatedSum::default();
    let mut warm = 0.0;
    let mut i = 0;
    loop {
        let t = if i == 0 { epsilon } else if i == m { horizon } else { epsilon * ratio.powi(i as i32) };
        let tangent = chernoff(window, k, t, warm, config.lambda_tolerance);
        if let Some(tr) = trace.as_mut() {
            tr.push(LambdaPoint {
                t,
                lambda: tangent.lambda,
                bound: tangent.log_bound.min(0.0).exp(),
            });
        }
        if tangent.log_bound == f64::NEG_INFINITY {
            // B vanishes from here on
            break;
        }
        let lambda = tangent.lambda;
        let capped = tangent.log_bound >= 0.0;
        // closed-form integral of the tangent over [t, inf)
        let tail = if capped {
            (epsilon - t).exp()
        } else {
            (tangent.log_bound + epsilon - t).exp() / (1.0 + lambda)
        };
        if i == m || (!capped && tail <= 1e-4 * budget) {
            sum.add(tail);
            break;
        }
        let next = if i + 1 == m { horizon } else { epsilon * ratio.powi(i as i32 + 1) };
        let h = next - t;
        let piece = if capped {
            (epsilon - t).exp() * -(-h).exp_m1()
        } else {
            (tangent.log_bound + epsilon - t).exp() * -(-(1.0 + lambda) * h).exp_m1() / (1.0 + lambda)
        };
        sum.add(piece);
        if sum.value() > budget {
            return Delta2 {
                value: sum.value(),
                exceeded: true,
                trace,
            };
        }
        warm = lambda;
        i += 1;
    }
    Delta2 {
        value: sum.value(),
        exceeded: false,
        trace,
    }
}

/// Smallest `L` with `Pr[|eta| > L] <= tail_mass` (rounded up).
pub fn truncation_threshold(scaled: &ScaledNoise, tail_mass: f64) -> Result<f64> {
    if !(tail_mass > 0.0 && tail_mass < 1.0) {
        return Err(Error::domain(format!("tail mass must lie in (0, 1), got {tail_mass}")));
    }
    Ok(scaled.upper_quantile_exact(0.5 * tail_mass))
}

fn window_for(scaled: &ScaledNoise, l: f64, sensitivity: f64, config: &CertConfig) -> Result<LossWindow> {
    if !(l >= 0.0 && sensitivity >= 0.0) {
        return Err(Error::domain("L and Delta must be non-negative"));
    }
    let r = scaled.magnitude();
    LossWindow::build(scaled.unit(), l / r, sensitivity / r, config)
}

/// Upper bound on `ln E[e^(lambda X)]`, `X` the truncated one-query loss.
pub fn log_mgf(scaled: &ScaledNoise, l: f64, lambda: f64, sensitivity: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be non-negative, got {lambda}")));
    }
    let window = window_for(scaled, l, sensitivity, &CertConfig::default())?;
    Ok(window.cumulants(lambda).upper)
}

/// Upper bound on `Pr[X_1 + ... + X_k > t]`.
pub fn deviation_bound(scaled: &ScaledNoise, l: f64, sensitivity: f64, k: u64, t: f64) -> Result<f64> {
    let config = CertConfig::default();
    let window = window_for(scaled, l, sensitivity, &config)?;
    if t <= 0.0 {
        return Ok(1.0);
    }
    let tangent = chernoff(&window, k as f64, t, 0.0, config.lambda_tolerance);
    Ok(tangent.log_bound.min(0.0).exp())
}

/// Upper bound on `int_eps^inf deviation_bound(t) e^(eps - t) dt`.
pub fn delta2_integral(
    scaled: &ScaledNoise,
    l: f64,
    sensitivity: f64,
    k: u64,
    epsilon: f64,
    config: &CertConfig,
) -> Result<f64> {
    config.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let window = window_for(scaled, l, sensitivity, config)?;
    Ok(delta2_sweep(&window, k, epsilon, f64::INFINITY, config).value)
}

/// Runs the certificate for one family, caching the normalization across `R`.
#[derive(Debug, Clone)]
pub struct Certifier {
    unit: Arc<UnitNoise>,
    config: CertConfig,
    config_hash: String,
}

impl Certifier {
    pub fn new(family: NoiseFamily, config: CertConfig) -> Result<Self> {
        Self::from_unit(Arc::new(UnitNoise::new(family)?), config)
    }

    pub fn from_unit(unit: Arc<UnitNoise>, config: CertConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            unit,
            config_hash: config.hash(),
            config,
        })
    }

    pub fn unit(&self) -> &Arc<UnitNoise> {
        &self.unit
    }

    pub fn config(&self) -> &CertConfig {
        &self.config
    }

    /// Unit-scale truncation level `l = L / R` for `params`.
    pub fn unit_threshold(&self, params: &PrivacyParams) -> f64 {
        let delta1 = self.config.delta1_fraction * params.delta;
        -self.unit.lower_quantile_exact(0.5 * delta1 / params.k as f64)
    }

    fn certificate(&self, r: f64, params: &PrivacyParams, l_unit: f64) -> Certificate {
        let spec = self.unit.family().spec();
        let delta1 = self.config.delta1_fraction * params.delta;
        let mut cert = Certificate {
            schema_version: crate::SCHEMA_VERSION,
            family: spec.family,
            p: spec.p,
            r,
            l: l_unit * r,
            delta1,
            delta2: f64::NAN,
            epsilon: params.epsilon,
            delta: params.delta,
            k: params.k,
            sensitivity: params.sensitivity,
            verdict: Verdict::Rejected,
            reject_reason: None,
            lambda_trace: None,
            config_hash: self.config_hash.clone(),
        };
        let d = params.sensitivity / r;
        if !(l_unit + d < 1.0) {
            cert.reject_reason = Some("L+Δ ≥ R".into());
            return cert;
        }
        let window = match LossWindow::build(&self.unit, l_unit, d, &self.config) {
            Ok(w) => w,
            Err(e) => {
                cert.reject_reason = Some(e.to_string());
                return cert;
            }
        };
        let budget = params.delta - delta1;
        let sweep = delta2_sweep(&window, params.k, params.epsilon, budget, &self.config);
        cert.delta2 = sweep.value;
        cert.lambda_trace = sweep.trace;
        if !sweep.exceeded && delta1 + sweep.value <= params.delta {
            cert.verdict = Verdict::Certified;
        } else {
            cert.reject_reason = Some(if sweep.exceeded {
                format!("δ₂ exceeds the remaining budget {budget:e} (partial sum {:e})", sweep.value)
            } else {
                format!("δ₁ + δ₂ = {:e} > δ", delta1 + sweep.value)
            });
        }
        cert
    }

    /// Algorithm-1 style test at magnitude `r`.
    pub fn test_privacy(&self, r: f64, params: &PrivacyParams) -> Result<Certificate> {
        params.validate()?;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain(format!("R must be positive, got {r}")));
        }
        Ok(self.certificate(r, params, self.unit_threshold(params)))
    }

    /// Smallest certified `R` (to `bisectRelTol`), with its certificate.
    pub fn noise_upper_bound(&self, params: &PrivacyParams) -> Result<Certificate> {
        params.validate()?;
        let l_unit = self.unit_threshold(params);
        let unit_delta = params.sensitivity;
        let mut b = unit_delta;
        let mut cert = self.certificate(b, params, l_unit);
        let mut doublings = 0;
        while !cert.is_certified() {
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::NonConvergence(format!(
                    "no certified R below 2^{MAX_DOUBLINGS} * Delta for {params:?}"
                )));
            }
            b *= 2.0;
            cert = self.certificate(b, params, l_unit);
        }
        let mut a = if doublings > 0 { 0.5 * b } else { 0.0 };
        while b - a > self.config.bisect_rel_tol * b {
            let mid = 0.5 * (a + b);
            let c = self.certificate(mid, params, l_unit);
            if c.is_certified() {
                b = mid;
                cert = c;
            } else {
                a = mid;
            }
        }
        Ok(cert)
    }
}

/// One-shot form of [`Certifier::test_privacy`].
pub fn test_privacy(family: NoiseFamily, r: f64, params: &PrivacyParams, config: &CertConfig) -> Result<Certificate> {
    Certifier::new(family, *config)?.test_privacy(r, params)
}

/// One-shot form of [`Certifier::noise_upper_bound`]; returns `R*`.
pub fn noise_upper_bound(family: NoiseFamily, params: &PrivacyParams, config: &CertConfig) -> Result<f64> {
    Ok(Certifier::new(family, *config)?.noise_upper_bound(params)?.r)
}
