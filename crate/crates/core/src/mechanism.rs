//! Calibrated mechanisms behind one interface, selectable by name.

use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use crate::certify::{CertConfig, Certificate, Certifier, PrivacyParams};
use crate::distribution::ScaledNoise;
use crate::error::{Error, Result};
use crate::family::NoiseFamily;
use crate::gaussian::{gaussian_sigma_opt, normal_quantile};
use crate::registry::Registry;
use crate::sampler::{self, RngState};

/// A noise law with known quantiles.
#[derive(Debug, Clone)]
pub enum NoiseLaw {
    Gaussian { sigma: f64 },
    Bounded(ScaledNoise),
}

/// Level `m` with `Pr[max_{i <= k} |eta_i| <= m] = q`.
pub fn max_error_quantile(law: &NoiseLaw, k: u64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("q must lie in (0, 1), got {q}")));
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    // per-coordinate upper tail: (1 - q^(1/k)) / 2
    let tail = -0.5 * (q.ln() / k as f64).exp_m1();
    Ok(match law {
        NoiseLaw::Gaussian { sigma } => -sigma * normal_quantile(tail),
        NoiseLaw::Bounded(noise) => noise.upper_quantile_exact(tail),
    })
}

pub trait Mechanism: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn params(&self) -> &PrivacyParams;
    /// `R` for bounded noise, `sigma` for Gaussian noise.
    fn scale(&self) -> f64;
    /// Almost-sure bound on each noise coordinate, if there is one.
    fn absolute_bound(&self) -> Option<f64>;
    fn law(&self) -> NoiseLaw;

    /// Quantile `q` of the largest of `params().k` noise magnitudes.
    fn max_error_quantile(&self, q: f64) -> Result<f64> {
        max_error_quantile(&self.law(), self.params().k, q)
    }

    /// `n` noise draws from the stream `rng`.
    fn noise(&self, rng: RngState, n: usize) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct MechanismArgs {
    pub params: PrivacyParams,
    pub family: NoiseFamily,
    pub config: CertConfig,
}

#[derive(Debug, Clone)]
pub struct BoundedMechanism {
    params: PrivacyParams,
    noise: ScaledNoise,
    certificate: Certificate,
}

impl BoundedMechanism {
    /// Calibrates `R` with the certificate.
    pub fn calibrate(family: NoiseFamily, params: &PrivacyParams, config: CertConfig) -> Result<Self> {
        let certifier = Certifier::new(family, config)?;
        let certificate = certifier.noise_upper_bound(params)?;
        let noise = ScaledNoise::from_unit(certifier.unit().clone(), certificate.r)?;
        Ok(Self {
            params: *params,
            noise,
            certificate,
        })
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn noise_law(&self) -> &ScaledNoise {
        &self.noise
    }
}

impl Mechanism for BoundedMechanism {
    fn name(&self) -> &'static str {
        "bounded"
    }

    fn params(&self) -> &PrivacyParams {
        &self.params
    }

    fn scale(&self) -> f64 {
        self.noise.magnitude()
    }

    fn absolute_bound(&self) -> Option<f64> {
        Some(self.noise.magnitude())
    }

    fn law(&self) -> NoiseLaw {
        NoiseLaw::Bounded(self.noise.clone())
    }

    fn noise(&self, rng: RngState, n: usize) -> Vec<f64> {
        sampler::sample(&self.noise, rng, n)
    }
}

#[derive(Debug, Clone)]
pub struct GaussianMechanism {
    params: PrivacyParams,
    sigma: f64,
}

impl GaussianMechanism {
    pub fn calibrate(params: &PrivacyParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            sigma: gaussian_sigma_opt(params)?,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Mechanism for GaussianMechanism {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn params(&self) -> &PrivacyParams {
        &self.params
    }

    fn scale(&self) -> f64 {
        self.sigma
    }

    fn absolute_bound(&self) -> Option<f64> {
        None
    }

    fn law(&self) -> NoiseLaw {
        NoiseLaw::Gaussian { sigma: self.sigma }
    }

    fn noise(&self, rng: RngState, n: usize) -> Vec<f64> {
        rng.uniforms().take(n).map(|u| self.sigma * normal_quantile(u)).collect()
    }
}

pub type MechanismRegistry = Registry<dyn Mechanism, MechanismArgs>;

pub fn builtin_mechanisms() -> MechanismRegistry {
    let mut reg = MechanismRegistry::new("mechanism");
    reg.register("bounded", "bounded noise, R calibrated by the MGF certificate", |a| {
        Ok(Arc::new(BoundedMechanism::calibrate(a.family.clone(), &a.params, a.config)?) as Arc<dyn Mechanism>)
    });
    reg.register("gaussian", "Gaussian noise at the exact optimal sigma", |a| {
        Ok(Arc::new(GaussianMechanism::calibrate(&a.params)?) as Arc<dyn Mechanism>)
    });
    reg
}

pub fn mechanism_registry() -> &'static MechanismRegistry {
    static REGISTRY: OnceLock<MechanismRegistry> = OnceLock::new();
    REGISTRY.get_or_init(builtin_mechanisms)
}
