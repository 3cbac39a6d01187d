//! Monte Carlo privacy-loss estimates, the exact one-query oracle, and a
//! necessary-condition falsifier.
//!
//! The loss of a `k`-query answer vector under the shift `v_i = +Delta` is
//! `sum_i f((eta_i + Delta) / R) - f(eta_i / R)` with `eta_i ~ mu_{f,R}`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::distribution::ScaledNoise;
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::sampler::RngState;

/// Samples per parallel work unit.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LossSampleSet {
    /// `+inf` where the shifted point leaves the support.
    pub losses: Vec<f64>,
    pub k: u64,
    #[serde(rename = "Delta")]
    pub sensitivity: f64,
    pub shift_pattern: String,
    pub rng: RngState,
    /// Number of `+inf` losses.
    pub infinite: usize,
}

impl LossSampleSet {
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn finite_losses(&self) -> impl Iterator<Item = f64> + '_ {
        self.losses.iter().copied().filter(|l| l.is_finite())
    }

    /// Writes `index,loss` rows under a single header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Validation(format!("csv export failed: {e}"));
        w.write_record(["index", "loss"]).map_err(io)?;
        for (i, l) in self.losses.iter().enumerate() {
            w.write_record([i.to_string(), format_loss(*l)]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("csv export failed: {e}")))?;
        Ok(())
    }
}

fn format_loss(l: f64) -> String {
    if l == f64::INFINITY {
        "inf".into()
    } else {
        format!("{l:e}")
    }
}

/// `n` losses for `k` queries; sample `j` uses draws `j k .. (j + 1) k` of `rng`.
pub fn privacy_loss_samples(
    scaled: &ScaledNoise,
    k: u64,
    sensitivity: f64,
    n: usize,
    rng: RngState,
) -> Result<LossSampleSet> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
        return Err(Error::domain(format!("Delta must be non-negative, got {sensitivity}")));
    }
    let unit = scaled.unit().clone();
    let d = sensitivity / scaled.magnitude();
    let family = unit.family().clone();
    unit.warm_up();
    let shift_pattern = "v_i = +Delta for all i".to_string();
    if d >= 1.0 {
        return Ok(LossSampleSet {
            losses: vec![f64::INFINITY; n],
            k,
            sensitivity,
            shift_pattern,
            rng,
            infinite: n,
        });
    }
    let mut losses = vec![0.0; n];
    losses.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let first = (c * CHUNK) as u64;
        let mut us = rng.uniforms_from(first * k);
        for slot in chunk.iter_mut() {
            let mut total = 0.0;
            for _ in 0..k {
                let eta = unit.quantile(us.next_open01());
                total += family.potential(eta + d) - family.potential(eta);
            }
            *slot = total;
        }
    });
    let infinite = losses.iter().filter(|l| l.is_infinite()).count();
    Ok(LossSampleSet {
        losses,
        k,
        sensitivity,
        shift_pattern,
        rng,
        infinite,
    })
}

/// Mean of `max(0, 1 - e^(eps - loss))` and its standard error.
pub fn estimate_delta_hat(samples: &LossSampleSet, epsilon: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::domain("no loss samples"));
    }
    let n = samples.len() as f64;
    let term = |l: f64| if l > epsilon { -(epsilon - l).exp_m1() } else { 0.0 };
    let mut sum = quadrature::CompensatedSum::default();
    for &l in &samples.losses {
        sum.add(term(l));
    }
    let mean = sum.value() / n;
    let mut sq = quadrature::CompensatedSum::default();
    for &l in &samples.losses {
        sq.add((term(l) - mean).powi(2));
    }
    let var = if samples.len() > 1 { sq.value() / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

/// `int max(0, p(y) - e^eps p(y - Delta)) dy` for one query.
pub fn exact_delta_oracle_1d(scaled: &ScaledNoise, sensitivity: f64, epsilon: f64) -> Result<f64> {
    if !(sensitivity >= 0.0 && epsilon >= 0.0) {
        return Err(Error::domain("Delta and epsilon must be non-negative"));
    }
    let unit = scaled.unit();
    let d = sensitivity / scaled.magnitude();
    if d == 0.0 {
        return Ok(0.0);
    }
    let cut = unit.cutoff();
    if d >= 2.0 * cut {
        return Ok(1.0);
    }
    let shape = unit.family().shape().clone();
    // p(eta) > e^eps p(eta - d) exactly left of the crossing
    let excess = |eta: f64| shape.value(eta - d) - shape.value(eta) - epsilon;
    let (mut lo, mut hi) = (-1.0 + d, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossing = lo.min(cut);
    let shifted_start = -cut + d;
    // left of shifted_start the shifted density is zero
    let mut total = unit.cdf(crossing.min(shifted_start));
    if crossing > shifted_start {
        let tol = Tolerance {
            abs: 1e-16,
            rel: 1e-13,
            max_panels: 1 << 20,
        };
        let e = epsilon.exp();
        let est = quadrature::integrate(
            |eta| (unit.density(eta) - e * unit.density(eta - d)).max(0.0),
            shifted_start,
            crossing,
            tol,
        )?;
        total += est.value;
    }
    Ok(total.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FalsifierRule {
    /// `Pr[loss >= 2 eps]` against `delta / (1 - e^-eps)`.
    Generalized,
    /// `Pr[loss >= 2]` against `2 delta`, the `eps = 1` form.
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FalsifierVerdict {
    Refuted,
    NotRefuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FalsifierReport {
    pub schema_version: u32,
    pub verdict: FalsifierVerdict,
    pub rule: FalsifierRule,
    pub loss_threshold: f64,
    pub exceedances: usize,
    pub n: usize,
    pub rho_hat: f64,
    /// One-sided Clopper-Pearson lower bound on the exceedance probability.
    pub rho_lower: f64,
    pub confidence: f64,
    pub probability_threshold: f64,
    pub infinite_losses: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub k: u64,
    #[serde(rename = "Delta")]
    pub sensitivity: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Lower `confidence` bound on a binomial proportion after `x` successes in `n`.
pub fn clopper_pearson_lower(x: usize, n: usize, confidence: f64) -> f64 {
    if x == 0 || n == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    if x == n {
        return alpha.powf(1.0 / n as f64);
    }
    // Pr[Bin(n, p) >= x] = I_p(x, n - x + 1), increasing in p
    let (a, b) = (x as f64, (n - x + 1) as f64);
    let (mut lo, mut hi) = (0.0f64, x as f64 / n as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) > alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

#[allow(clippy::too_many_arguments)]
pub fn falsifier_check(
    scaled: &ScaledNoise,
    k: u64,
    sensitivity: f64,
    epsilon: f64,
    delta: f64,
    n: usize,
    rng: RngState,
    rule: FalsifierRule,
) -> Result<FalsifierReport> {
    if n < 1000 {
        return Err(Error::domain(format!("the falsifier needs n >= 1000 samples, got {n}")));
    }
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("epsilon must be positive and delta in (0, 1)"));
    }
    let samples = privacy_loss_samples(scaled, k, sensitivity, n, rng)?;
    let (loss_threshold, probability_threshold) = match rule {
        FalsifierRule::Generalized => (2.0 * epsilon, delta / -(-epsilon).exp_m1()),
        FalsifierRule::Verbatim => (2.0, 2.0 * delta),
    };
    let exceedances = samples.losses.iter().filter(|&&l| l >= loss_threshold).count();
    let confidence = 0.99;
    let rho_lower = clopper_pearson_lower(exceedances, n, confidence);
    let verdict = if probability_threshold < 1.0 && rho_lower > probability_threshold {
        FalsifierVerdict::Refuted
    } else {
        FalsifierVerdict::NotRefuted
    };
    Ok(FalsifierReport {
        schema_version: crate::SCHEMA_VERSION,
        verdict,
        rule,
        loss_threshold,
        exceedances,
        n,
        rho_hat: exceedances as f64 / n as f64,
        rho_lower,
        confidence,
        probability_threshold,
        infinite_losses: samples.infinite,
        epsilon,
        delta,
        k,
        sensitivity,
        r: scaled.magnitude(),
    })
}
