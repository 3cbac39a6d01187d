//! The optimally calibrated Gaussian mechanism used as the baseline.
//!
//! For `k` queries of sensitivity `Delta` the mechanism is one Gaussian query
//! of L2 sensitivity `Delta_2 = Delta sqrt(k)`, whose exact privacy curve is
//!
//! ```text
//! delta(sigma) = Phi(Delta_2 / 2 sigma - eps sigma / Delta_2) - e^eps Phi(-Delta_2 / 2 sigma - eps sigma / Delta_2)
//! ```

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::certify::PrivacyParams;
use crate::error::{Error, Result};

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Phi(x)`, usable far into the lower tail.
pub fn normal_log_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Asymptotic series: Phi(x) = phi(x)/|x| (1 - 1/x^2 + 3/x^4 - 15/x^6 ...)
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - (2.0 * std::f64::consts::PI).sqrt().ln() - (-x).ln() + series.ln()
}

/// Standard normal quantile for `u` in (0, 1).
pub fn normal_quantile(u: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
    if !x.is_finite() {
        return x;
    }
    // one Newton step against the accurate cdf
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let r = if u < 0.5 { normal_cdf(x) - u } else { (1.0 - u) - normal_cdf(-x) };
    x - r / density
}

/// Exact `delta` of the Gaussian mechanism with noise `sigma` at `params.epsilon`.
pub fn gaussian_delta(sigma: f64, params: &PrivacyParams) -> f64 {
    let l2 = params.sensitivity * (params.k as f64).sqrt();
    let a = l2 / (2.0 * sigma);
    let b = params.epsilon * sigma / l2;
    let first = normal_log_cdf(a - b);
    let second = params.epsilon + normal_log_cdf(-a - b);
    if second >= first {
        return 0.0;
    }
    first.exp() * -(second - first).exp_m1()
}

/// `sigma` with `gaussian_delta(sigma) = delta`, by bisection in `ln sigma`.
pub fn gaussian_sigma_opt(params: &PrivacyParams) -> Result<f64> {
    params.validate()?;
    let l2 = params.sensitivity * (params.k as f64).sqrt();
    let target = params.delta;
    let residual = |sigma: f64| gaussian_delta(sigma, params) - target;
    // delta(sigma) decreases from 1 to 0
    let mut lo = l2 / params.epsilon;
    let mut hi = lo;
    let mut guard = 0;
    while residual(lo) <= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Numeric("gaussian calibration: no lower bracket".into()));
        }
    }
    while residual(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Numeric("gaussian calibration: no upper bracket".into()));
        }
    }
    for _ in 0..400 {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the endpoint with the smaller residual; hi is always private enough
    Ok(if residual(lo).abs() < residual(hi).abs() && residual(lo) <= 1e-12 * target {
        lo
    } else {
        hi
    })
}
