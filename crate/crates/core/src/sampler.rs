//! Seeded inversion sampling from [`ScaledNoise`].
//!
//! Draw `j` of a stream is `quantile(u_j)`, where `u_j` is the `j`-th open-unit
//! variate of a ChaCha8 keystream selected by `(seed, stream)`. Because ChaCha
//! supports random access, any block of draws can be regenerated (or produced
//! on another thread) without replaying the prefix.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::ScaledNoise;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Uniform variates starting at draw `offset` of this stream.
    pub fn uniforms_from(&self, offset: u64) -> Uniforms {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        // one u64 per variate = two 32-bit words
        rng.set_word_pos(2 * offset as u128);
        Uniforms { rng }
    }

    pub fn uniforms(&self) -> Uniforms {
        self.uniforms_from(0)
    }
}

/// Iterator over uniform variates in the open interval (0, 1).
#[derive(Debug, Clone)]
pub struct Uniforms {
    rng: ChaCha8Rng,
}

impl Uniforms {
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        // (k + 1/2) 2^-53 for k in [0, 2^53): never 0 or 1.
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl Iterator for Uniforms {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_open01())
    }
}

/// `n` i.i.d. draws from `noise`; all strictly inside (-R, R).
pub fn sample(noise: &ScaledNoise, rng: RngState, n: usize) -> Vec<f64> {
    sample_from(noise, rng, 0, n)
}

/// Draws `offset .. offset + n` of the stream.
pub fn sample_from(noise: &ScaledNoise, rng: RngState, offset: u64, n: usize) -> Vec<f64> {
    let unit = noise.unit();
    let r = noise.magnitude();
    rng.uniforms_from(offset)
        .take(n)
        .map(|u| r * unit.quantile(u))
        .collect()
}

/// One answer of the mechanism: `true_value + eta`, `eta` the first draw of `rng`.
pub fn answer_query(true_value: f64, noise: &ScaledNoise, rng: RngState) -> f64 {
    let u = rng.uniforms().next_open01();
    true_value + noise.magnitude() * noise.unit().quantile(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::NoiseFamily;

    fn ks_statistic(noise: &ScaledNoise, mut xs: Vec<f64>) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = noise.cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn empty_and_deterministic() {
        let noise = ScaledNoise::new(NoiseFamily::poly(2.0).unwrap(), 1.0).unwrap();
        assert!(sample(&noise, RngState::new(1, 0), 0).is_empty());
        let a = sample(&noise, RngState::new(42, 3), 1000);
        let b = sample(&noise, RngState::new(42, 3), 1000);
        assert_eq!(a, b);
        let c = sample(&noise, RngState::new(42, 4), 1000);
        assert_ne!(a, c);
    }

    #[test]
    fn offsets_address_the_same_stream() {
        let noise = ScaledNoise::new(NoiseFamily::single_exp(), 5.0).unwrap();
        let rng = RngState::new(7, 1);
        let all = sample(&noise, rng, 300);
        let tail = sample_from(&noise, rng, 200, 100);
        assert_eq!(&all[200..], &tail[..]);
    }

    #[test]
    fn draws_equal_quantile_of_uniforms() {
        let noise = ScaledNoise::new(NoiseFamily::poly(2.0).unwrap(), 3.0).unwrap();
        let rng = RngState::new(9, 0);
        let draws = sample(&noise, rng, 50);
        for (d, u) in draws.iter().zip(rng.uniforms()) {
            assert_eq!(*d, noise.quantile(u).unwrap());
        }
    }

    #[test]
    fn uniforms_are_open() {
        let mut us = RngState::new(0, 0).uniforms();
        for _ in 0..100_000 {
            let u = us.next_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn ks_poly2_unit() {
        let noise = ScaledNoise::new(NoiseFamily::poly(2.0).unwrap(), 1.0).unwrap();
        let n = 100_000;
        let xs = sample(&noise, RngState::new(2024, 0), n);
        assert!(xs.iter().all(|x| x.abs() < 1.0));
        let d = ks_statistic(&noise, xs);
        assert!(d < 1.63 / (n as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn answers_stay_within_magnitude() {
        let noise = ScaledNoise::new(NoiseFamily::poly(2.0).unwrap(), 0.05).unwrap();
        for stream in 0..2000 {
            let a = answer_query(0.3, &noise, RngState::new(5, stream));
            assert!(a > 0.25 && a < 0.35);
        }
        let rng = RngState::new(5, 17);
        assert_eq!(answer_query(0.3, &noise, rng), answer_query(0.3, &noise, rng));
    }

    #[test]
    fn noise_mean_is_zero() {
        let noise = ScaledNoise::new(NoiseFamily::poly(2.0).unwrap(), 1.0).unwrap();
        let xs = sample(&noise, RngState::new(11, 0), 1_000_000);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() <= 4.0 * sd / 1e3, "mean {mean}, sd {sd}");
    }
}
