//! Sample-size and query-budget planning through the transfer bound, and a
//! sequential query-answering harness.
//!
//! A plan answers `k` statistical queries on `n` rows. Each answer is the
//! sample mean plus noise calibrated for sensitivity `1/n`, so the noise scale
//! is `R_1 / n` (or `sigma_1 / n`), where `R_1` / `sigma_1` are calibrated at
//! `Delta = 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::certify::{CertConfig, Certifier, PrivacyParams};
use crate::distribution::{ScaledNoise, UnitNoise};
use crate::error::{Error, Result};
use crate::family::{FamilySpec, NoiseFamily};
use crate::gaussian::{gaussian_sigma_opt, normal_quantile};
use crate::mechanism::{max_error_quantile, NoiseLaw};
use crate::sampler::RngState;
use crate::theory::{self, DoubleExpRate, PolyRate, RateFunction};

/// Share of the accuracy gap left unused by bounded plans (their `c -> 0`).
const BOUNDED_GAP_USE: f64 = 0.99;
/// Candidate fractions of the gap given to `c` by Gaussian plans.
const GAUSSIAN_SPLITS: usize = 64;

/// `(alpha' + e^eps - 1 + c + 2d, beta'/c + delta/d)`.
pub fn transfer_accuracy(alpha_prime: f64, beta_prime: f64, epsilon: f64, delta: f64, c: f64, d: f64) -> (f64, f64) {
    let alpha = alpha_prime + epsilon.exp_m1() + c + 2.0 * d;
    let beta = if beta_prime == 0.0 { 0.0 } else { beta_prime / c } + delta / d;
    (alpha, beta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MechanismChoice {
    Bounded(NoiseFamily),
    Gaussian,
}

impl MechanismChoice {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismChoice::Bounded(_) => "bounded",
            MechanismChoice::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Plan {
    pub schema_version: u32,
    pub mechanism: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    pub n: u64,
    pub k: u64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub c: f64,
    pub d: f64,
    /// `R_1` (bounded) or `sigma_1` (Gaussian) at `Delta = 1`; the answer noise is this over `n`.
    pub unit_scale: f64,
    /// Confidence-`1 - beta'` bound on the largest of the `k` unit-scale noise magnitudes.
    pub unit_error: f64,
    /// `delta*_k` of the family's matched rate at `C_f = 1`, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_floor: Option<f64>,
    pub split: String,
}

impl Plan {
    /// Noise scale for sensitivity `1 / rows`.
    pub fn noise_scale(&self, rows: usize) -> f64 {
        self.unit_scale / rows as f64
    }

    pub fn transfer(&self) -> (f64, f64) {
        transfer_accuracy(self.alpha_prime, self.beta_prime, self.epsilon, self.delta, self.c, self.d)
    }
}

fn check_targets(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5 && beta > 0.0 && beta < 0.5) {
        return Err(Error::domain(format!("alpha and beta must lie in (0, 1/2), got {alpha}, {beta}")));
    }
    Ok(())
}

/// `alpha/2 - (e^(alpha/8) - 1)`: what remains for `alpha' + c` after `eps = alpha/8`, `d = alpha/4`.
fn accuracy_gap(alpha: f64) -> Result<f64> {
    let gap = 0.5 * alpha - (alpha / 8.0).exp_m1();
    if gap <= 0.0 {
        return Err(Error::Infeasible(format!("alpha = {alpha} leaves no accuracy budget")));
    }
    Ok(gap)
}

fn matched_rate(family: &NoiseFamily) -> Option<Box<dyn RateFunction>> {
    match (family.name(), family.exponent()) {
        ("poly", Some(p)) => PolyRate::new(p).ok().map(|r| Box::new(r) as Box<dyn RateFunction>),
        ("double-exp", _) => Some(Box::new(DoubleExpRate::new())),
        _ => None,
    }
}

/// Plans for a fixed mechanism; caches the unit normalization across `k`.
#[derive(Debug, Clone)]
pub struct Planner {
    choice: MechanismChoice,
    alpha: f64,
    beta: f64,
    certifier: Option<Certifier>,
}

impl Planner {
    pub fn new(choice: MechanismChoice, alpha: f64, beta: f64, config: CertConfig) -> Result<Self> {
        check_targets(alpha, beta)?;
        accuracy_gap(alpha)?;
        let certifier = match &choice {
            MechanismChoice::Bounded(f) => Some(Certifier::new(f.clone(), config)?),
            MechanismChoice::Gaussian => None,
        };
        Ok(Self {
            choice,
            alpha,
            beta,
            certifier,
        })
    }

    pub fn choice(&self) -> &MechanismChoice {
        &self.choice
    }

    /// Smallest `n` for which `k` queries meet `(alpha, beta)`.
    pub fn sample_size_for_queries(&self, k: u64) -> Result<Plan> {
        if k == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        let (alpha, beta) = (self.alpha, self.beta);
        let gap = accuracy_gap(alpha)?;
        let epsilon = alpha / 8.0;
        let d = alpha / 4.0;
        match (&self.choice, &self.certifier) {
            (MechanismChoice::Bounded(family), Some(certifier)) => {
                let delta = alpha * beta / 4.0;
                let alpha_prime = BOUNDED_GAP_USE * gap;
                let params = PrivacyParams::new(epsilon, delta, k, 1.0)?;
                let r1 = certifier.noise_upper_bound(&params)?.r;
                let n = (r1 / alpha_prime).ceil();
                let delta_floor = matched_rate(family).and_then(|r| theory::delta_star_k(r.as_ref(), k, 1.0).ok());
                Ok(Plan {
                    schema_version: crate::SCHEMA_VERSION,
                    mechanism: "bounded".into(),
                    family: Some(family.spec()),
                    n: n as u64,
                    k,
                    alpha,
                    beta,
                    epsilon,
                    delta,
                    alpha_prime,
                    beta_prime: 0.0,
                    c: (1.0 - BOUNDED_GAP_USE) * gap,
                    d,
                    unit_scale: r1,
                    unit_error: r1,
                    delta_floor,
                    split: "beta' = 0 (noise is bounded by R); c takes 1% of the accuracy gap".into(),
                })
            }
            _ => {
                let delta = alpha * beta / 8.0;
                let params = PrivacyParams::new(epsilon, delta, k, 1.0)?;
                let sigma1 = gaussian_sigma_opt(&params)?;
                let law = NoiseLaw::Gaussian { sigma: sigma1 };
                let mut best: Option<(f64, f64, f64, f64)> = None;
                for j in 0..GAUSSIAN_SPLITS {
                    // c = gamma * gap, gamma log-spaced on [1e-3, 0.9]
                    let gamma = 1e-3 * (900.0f64).powf(j as f64 / (GAUSSIAN_SPLITS - 1) as f64);
                    let c = gamma * gap;
                    let alpha_prime = gap - c;
                    let beta_prime = c * beta / 2.0;
                    let m1 = max_error_quantile(&law, k, 1.0 - beta_prime)?;
                    let n = (m1 / alpha_prime).ceil();
                    if best.is_none_or(|b| n < b.0) {
                        best = Some((n, c, alpha_prime, m1));
                    }
                }
                let (n, c, alpha_prime, m1) = best.expect("non-empty split grid");
                Ok(Plan {
                    schema_version: crate::SCHEMA_VERSION,
                    mechanism: "gaussian".into(),
                    family: None,
                    n: n as u64,
                    k,
                    alpha,
                    beta,
                    epsilon,
                    delta,
                    alpha_prime,
                    beta_prime: c * beta / 2.0,
                    c,
                    d,
                    unit_scale: sigma1,
                    unit_error: m1,
                    delta_floor: None,
                    split: "delta = alpha beta / 8, beta' = c beta / 2, c chosen on a grid to minimize n".into(),
                })
            }
        }
    }

    pub fn feasible(&self, k: u64, n: u64) -> Result<bool> {
        Ok(self.sample_size_for_queries(k)?.n <= n)
    }

    /// Largest `k` with `sample_size_for_queries(k) <= n`; 0 if none.
    pub fn max_queries_for_sample_size(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !self.feasible(1, n)? {
            return Ok(0);
        }
        let mut lo = 1u64;
        let mut hi = 2u64;
        while self.feasible(hi, n)? {
            lo = hi;
            if hi >= 1 << 62 {
                return Ok(hi);
            }
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.feasible(mid, n)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

pub fn sample_size_for_queries(k: u64, alpha: f64, beta: f64, choice: MechanismChoice, config: CertConfig) -> Result<Plan> {
    Planner::new(choice, alpha, beta, config)?.sample_size_for_queries(k)
}

pub fn max_queries_for_sample_size(n: u64, alpha: f64, beta: f64, choice: MechanismChoice, config: CertConfig) -> Result<u64> {
    Planner::new(choice, alpha, beta, config)?.max_queries_for_sample_size(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptEntry {
    pub index: usize,
    pub sample_mean: f64,
    pub answer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transcript {
    pub schema_version: u32,
    pub plan: Plan,
    pub rows: usize,
    pub noise_scale: f64,
    pub rng: RngState,
    pub entries: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone)]
enum SessionNoise {
    Bounded(ScaledNoise),
    Gaussian(f64),
}

/// Answers up to `plan.k` statistical queries over `data`, in order.
/// Answer `i` uses the first draw of stream `rng.stream + i`.
#[derive(Debug)]
pub struct AdaptiveSession<'a, T> {
    data: &'a [T],
    noise: SessionNoise,
    rng: RngState,
    transcript: Transcript,
}

impl<'a, T> AdaptiveSession<'a, T> {
    pub fn new(data: &'a [T], plan: Plan, rng: RngState) -> Result<Self> {
        Self::with_unit(data, plan, rng, None)
    }

    /// Reuses a precomputed normalization for bounded plans.
    pub fn with_unit(data: &'a [T], plan: Plan, rng: RngState, unit: Option<Arc<UnitNoise>>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::validation("the session needs at least one row"));
        }
        let scale = plan.noise_scale(data.len());
        let noise = match (&plan.family, plan.mechanism.as_str()) {
            (Some(spec), "bounded") => {
                let unit = match unit {
                    Some(u) => u,
                    None => Arc::new(UnitNoise::new(spec.build()?)?),
                };
                unit.warm_up();
                SessionNoise::Bounded(ScaledNoise::from_unit(unit, scale)?)
            }
            (None, "gaussian") => SessionNoise::Gaussian(scale),
            _ => return Err(Error::validation(format!("plan names an unknown mechanism {:?}", plan.mechanism))),
        };
        Ok(Self {
            data,
            noise,
            rng,
            transcript: Transcript {
                schema_version: crate::SCHEMA_VERSION,
                rows: data.len(),
                noise_scale: scale,
                rng,
                entries: Vec::new(),
                plan,
            },
        })
    }

    pub fn remaining(&self) -> u64 {
        self.transcript.plan.k - self.transcript.entries.len() as u64
    }

    /// Noisy mean of `query` over the rows; `query` must map every row into [0, 1].
    pub fn answer<Q: Fn(&T) -> f64>(&mut self, query: Q) -> Result<f64> {
        let index = self.transcript.entries.len();
        if index as u64 >= self.transcript.plan.k {
            return Err(Error::BudgetExhausted(index));
        }
        let mut sum = crate::quadrature::CompensatedSum::default();
        for (row, x) in self.data.iter().enumerate() {
            let v = query(x);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("query {index} maps row {row} to {v}, outside [0, 1]")));
            }
            sum.add(v);
        }
        let mean = sum.value() / self.data.len() as f64;
        let u = self.rng.with_stream(self.rng.stream.wrapping_add(index as u64)).uniforms().next_open01();
        let eta = match &self.noise {
            SessionNoise::Bounded(noise) => noise.magnitude() * noise.unit().quantile(u),
            SessionNoise::Gaussian(sigma) => sigma * normal_quantile(u),
        };
        let answer = mean + eta;
        self.transcript.entries.push(TranscriptEntry {
            index,
            sample_mean: mean,
            answer,
        });
        Ok(answer)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}

/// Runs every query of `queries` in order; fails with `BudgetExhausted` past `plan.k`.
pub fn run_adaptive_session<T, Q, I>(data: &[T], queries: I, plan: Plan, rng: RngState) -> Result<Transcript>
where
    Q: Fn(&T) -> f64,
    I: IntoIterator<Item = Q>,
{
    let mut session = AdaptiveSession::new(data, plan, rng)?;
    for q in queries {
        session.answer(q)?;
    }
    Ok(session.into_transcript())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub n: u64,
    pub k_bounded_p1: u64,
    pub k_bounded_p2: u64,
    pub k_gaussian: u64,
}

/// Query budgets per mechanism over a sweep of sample sizes.
pub fn budget_sweep(ns: &[u64], alpha: f64, beta: f64, config: CertConfig) -> Result<Vec<BudgetRow>> {
    let p1 = Planner::new(MechanismChoice::Bounded(NoiseFamily::poly(1.0)?), alpha, beta, config)?;
    let p2 = Planner::new(MechanismChoice::Bounded(NoiseFamily::poly(2.0)?), alpha, beta, config)?;
    let g = Planner::new(MechanismChoice::Gaussian, alpha, beta, config)?;
    ns.iter()
        .map(|&n| {
            Ok(BudgetRow {
                n,
                k_bounded_p1: p1.max_queries_for_sample_size(n)?,
                k_bounded_p2: p2.max_queries_for_sample_size(n)?,
                k_gaussian: g.max_queries_for_sample_size(n)?,
            })
        })
        .collect()
}
