//! Calibration, sampling and accounting for bounded-noise differential privacy.
//!
//! A bounded-noise mechanism answers each query with i.i.d. noise whose
//! density is proportional to `exp(-f(y / R))` on `(-R, R)`, for a symmetric
//! convex `f` that diverges at +/-1. The crate provides:
//!
//! - [`family`] / [`distribution`]: the noise shapes, normalization, exact CDF and quantiles;
//! - [`sampler`]: deterministic, stream-split inversion sampling;
//! - [`certify`]: a sound MGF-based `(epsilon, delta)` certificate, the binary-search
//!   calibrator for `R`;
//! - [`gaussian`]: the optimally calibrated Gaussian baseline;
//! - [`quadrature`] / [`registry`]: integration rules and name-keyed strategy lookup;
//! - [`mechanism`]: bounded and Gaussian mechanisms behind one trait, selectable by name;
//! - [`empirical`]: Monte Carlo privacy-loss estimates, the exact one-query oracle and a falsifier;
//! - [`theory`]: rate functions, `t*`, `delta*_k`, the moment constant and the heavy-tail bound;
//! - [`adaptive`]: sample-size / query-budget planning through the transfer bound.

pub mod adaptive;
pub mod certify;
pub mod distribution;
pub mod empirical;
pub mod error;
pub mod family;
pub mod gaussian;
pub mod mechanism;
pub mod quadrature;
pub mod registry;
pub mod sampler;
pub mod theory;

pub use certify::{CertConfig, Certificate, Certifier, PrivacyParams, Verdict};
pub use distribution::{ScaledNoise, UnitNoise};
pub use error::{Error, Result};
pub use family::{NoiseFamily, NoiseShape};
pub use mechanism::{Mechanism, NoiseLaw};
pub use sampler::RngState;

/// Version tag carried by every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
