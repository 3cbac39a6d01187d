//! Bounded-noise shape functions `f` on (-1, 1).
//!
//! The noise density at magnitude `R` is proportional to `exp(-f(y / R))` on
//! `(-R, R)`. Every shape is symmetric, convex and diverges at +/-1. Shapes
//! are trait objects registered by name so that new ones can be plugged in
//! without touching the calibration code.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Values of `f` above this are treated as `+inf` by the density: `exp(-700)`
/// is below 1e-304, so the truncated mass is invisible to every downstream integral.
pub const OVERFLOW_THRESHOLD: f64 = 700.0;

/// A symmetric convex potential on (-1, 1).
///
/// Implementations may assume `|eta| < 1`. They return `f64::INFINITY` when
/// the value overflows double precision.
pub trait NoiseShape: fmt::Debug + Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Shape exponent, for families that carry one.
    fn exponent(&self) -> Option<f64> {
        None
    }

    fn value(&self, eta: f64) -> f64;

    fn first_derivative(&self, eta: f64) -> f64;

    fn second_derivative(&self, eta: f64) -> f64;
}

/// `f(eta) = (1 - eta^2)^(-p)`, any real `p >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyInverse {
    p: f64,
}

impl PolyInverse {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::domain(format!("poly exponent must be >= 1, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl NoiseShape for PolyInverse {
    fn name(&self) -> &'static str {
        "poly"
    }

    fn exponent(&self) -> Option<f64> {
        Some(self.p)
    }

    fn value(&self, eta: f64) -> f64 {
        let s = (1.0 - eta) * (1.0 + eta);
        s.powf(-self.p)
    }

    fn first_derivative(&self, eta: f64) -> f64 {
        let s = (1.0 - eta) * (1.0 + eta);
        2.0 * self.p * eta * s.powf(-self.p - 1.0)
    }

    fn second_derivative(&self, eta: f64) -> f64 {
        // 2p s^(-p-2) (s + 2(p+1) eta^2)
        let p = self.p;
        let s = (1.0 - eta) * (1.0 + eta);
        2.0 * p * s.powf(-p - 2.0) * (s + 2.0 * (p + 1.0) * eta * eta)
    }
}

/// `h(eta) = 1 / (1 - eta^2)` and its first two derivatives.
fn inverse_gap(eta: f64) -> (f64, f64, f64) {
    let h = 1.0 / ((1.0 - eta) * (1.0 + eta));
    let h1 = 2.0 * eta * h * h;
    let h2 = 2.0 * h * h + 8.0 * eta * eta * h * h * h;
    (h, h1, h2)
}

/// `f(eta) = exp(1 / (1 - eta^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SingleExp;

impl NoiseShape for SingleExp {
    fn name(&self) -> &'static str {
        "single-exp"
    }

    fn value(&self, eta: f64) -> f64 {
        inverse_gap(eta).0.exp()
    }

    fn first_derivative(&self, eta: f64) -> f64 {
        let (h, h1, _) = inverse_gap(eta);
        h.exp() * h1
    }

    fn second_derivative(&self, eta: f64) -> f64 {
        let (h, h1, h2) = inverse_gap(eta);
        h.exp() * (h1 * h1 + h2)
    }
}

/// `f(eta) = exp(exp(1 / (1 - eta^2)))`, evaluated level by level so that
/// overflow of the inner exponential is caught before the outer one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleExp;

/// `ln(f64::MAX)`; beyond it `exp` overflows.
const EXP_OVERFLOW: f64 = 709.782_712_893_384;

impl NoiseShape for DoubleExp {
    fn name(&self) -> &'static str {
        "double-exp"
    }

    fn value(&self, eta: f64) -> f64 {
        let h = inverse_gap(eta).0;
        if h > EXP_OVERFLOW {
            return f64::INFINITY;
        }
        let inner = h.exp();
        if inner > EXP_OVERFLOW {
            return f64::INFINITY;
        }
        inner.exp()
    }

    fn first_derivative(&self, eta: f64) -> f64 {
        let (h, h1, _) = inverse_gap(eta);
        let f = self.value(eta);
        if !f.is_finite() {
            return f64::INFINITY.copysign(eta);
        }
        f * h.exp() * h1
    }

    fn second_derivative(&self, eta: f64) -> f64 {
        let (h, h1, h2) = inverse_gap(eta);
        let f = self.value(eta);
        if !f.is_finite() {
            return f64::INFINITY;
        }
        let eh = h.exp();
        f * eh * (eh * h1 * h1 + h1 * h1 + h2)
    }
}

/// Arguments for building a shape from the registry.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShapeArgs {
    pub p: Option<f64>,
}

fn build_poly(args: &ShapeArgs) -> Result<Arc<dyn NoiseShape>> {
    let p = args
        .p
        .ok_or_else(|| Error::validation("family 'poly' requires an exponent p"))?;
    Ok(Arc::new(PolyInverse::new(p)?))
}

fn build_single_exp(_: &ShapeArgs) -> Result<Arc<dyn NoiseShape>> {
    Ok(Arc::new(SingleExp))
}

fn build_double_exp(_: &ShapeArgs) -> Result<Arc<dyn NoiseShape>> {
    Ok(Arc::new(DoubleExp))
}

pub type ShapeRegistry = Registry<dyn NoiseShape, ShapeArgs>;

/// A registry pre-populated with the built-in shapes.
pub fn builtin_shapes() -> ShapeRegistry {
    let mut reg = Registry::new("noise family");
    reg.register("poly", "f(eta) = (1 - eta^2)^-p, p >= 1", build_poly);
    reg.register("single-exp", "f(eta) = exp(1 / (1 - eta^2))", build_single_exp);
    reg.register("double-exp", "f(eta) = exp(exp(1 / (1 - eta^2)))", build_double_exp);
    reg
}

pub fn shape_registry() -> &'static ShapeRegistry {
    static REGISTRY: OnceLock<ShapeRegistry> = OnceLock::new();
    REGISTRY.get_or_init(builtin_shapes)
}

/// A noise family: a shared handle to a registered [`NoiseShape`].
#[derive(Clone)]
pub struct NoiseFamily {
    shape: Arc<dyn NoiseShape>,
}

impl NoiseFamily {
    pub fn new(shape: Arc<dyn NoiseShape>) -> Self {
        Self { shape }
    }

    /// Looks `name` up in the default registry.
    pub fn from_name(name: &str, p: Option<f64>) -> Result<Self> {
        Ok(Self::new(shape_registry().build(name, &ShapeArgs { p })?))
    }

    pub fn poly(p: f64) -> Result<Self> {
        Ok(Self::new(Arc::new(PolyInverse::new(p)?)))
    }

    pub fn single_exp() -> Self {
        Self::new(Arc::new(SingleExp))
    }

    pub fn double_exp() -> Self {
        Self::new(Arc::new(DoubleExp))
    }

    pub fn name(&self) -> &'static str {
        self.shape.name()
    }

    pub fn exponent(&self) -> Option<f64> {
        self.shape.exponent()
    }

    pub fn shape(&self) -> &Arc<dyn NoiseShape> {
        &self.shape
    }

    fn check(eta: f64) -> Result<()> {
        if eta.is_nan() || eta.abs() >= 1.0 {
            return Err(Error::domain(format!("eta must lie in (-1, 1), got {eta}")));
        }
        Ok(())
    }

    /// `f(eta)`; `+inf` only when the value overflows double precision.
    pub fn eval_f(&self, eta: f64) -> Result<f64> {
        Self::check(eta)?;
        Ok(self.shape.value(eta))
    }

    pub fn eval_f_prime(&self, eta: f64) -> Result<f64> {
        Self::check(eta)?;
        Ok(self.shape.first_derivative(eta))
    }

    pub fn eval_f_second(&self, eta: f64) -> Result<f64> {
        Self::check(eta)?;
        Ok(self.shape.second_derivative(eta))
    }

    /// The potential seen by the density: `f(eta)` where `f <= 700`, `+inf`
    /// elsewhere (including `|eta| >= 1`).
    #[inline]
    pub fn potential(&self, eta: f64) -> f64 {
        if !(eta.abs() < 1.0) {
            return f64::INFINITY;
        }
        let v = self.shape.value(eta);
        if v > OVERFLOW_THRESHOLD {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Smallest `eta0 > 0` with `f(eta0) >= 700`; the density vanishes on `|eta| >= eta0`.
    pub fn cutoff(&self) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        // f is increasing on [0, 1); bisect to adjacent doubles.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.shape.value(mid) >= OVERFLOW_THRESHOLD {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Descriptor for serialization.
    pub fn spec(&self) -> FamilySpec {
        FamilySpec {
            family: self.name().to_string(),
            p: self.exponent(),
        }
    }
}

impl fmt::Debug for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent() {
            Some(p) => write!(f, "NoiseFamily({}, p={p})", self.name()),
            None => write!(f, "NoiseFamily({})", self.name()),
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent() {
            Some(p) => write!(f, "{}(p={p})", self.name()),
            None => write!(f, "{}", self.name()),
        }
    }
}

impl PartialEq for NoiseFamily {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name() && self.exponent() == other.exponent()
    }
}

/// Serializable `(family, p)` descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    pub p: Option<f64>,
}

impl FamilySpec {
    pub fn build(&self) -> Result<NoiseFamily> {
        NoiseFamily::from_name(&self.family, self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<NoiseFamily> {
        vec![
            NoiseFamily::poly(1.0).unwrap(),
            NoiseFamily::poly(2.0).unwrap(),
            NoiseFamily::poly(3.5).unwrap(),
            NoiseFamily::single_exp(),
            NoiseFamily::double_exp(),
        ]
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(NoiseFamily::poly(2.0).unwrap().eval_f(0.0).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((NoiseFamily::single_exp().eval_f(0.0).unwrap() - e).abs() < 1e-15);
        let ee = NoiseFamily::double_exp().eval_f(0.0).unwrap();
        assert!((ee - e.exp()).abs() < 1e-12);
        assert!((ee - 15.15426).abs() < 1e-5);
    }

    #[test]
    fn poly_near_edge_is_large_but_finite() {
        let v = NoiseFamily::poly(2.0).unwrap().eval_f(0.9999).unwrap();
        // 1 / (1.9999e-4)^2, computed by hand
        let expected = 1.0 / (1.9999e-4f64 * 1.9999e-4);
        assert!(v.is_finite() && v > 1e7);
        assert!((v - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn domain_errors() {
        let fam = NoiseFamily::single_exp();
        assert!(matches!(fam.eval_f(1.0), Err(Error::Domain(_))));
        assert!(matches!(fam.eval_f(-1.5), Err(Error::Domain(_))));
        assert!(matches!(fam.eval_f_prime(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(fam.eval_f_second(1.0), Err(Error::Domain(_))));
        assert!(PolyInverse::new(0.5).is_err());
    }

    #[test]
    fn single_exp_derivative_closed_form() {
        let d = NoiseFamily::single_exp().eval_f_prime(0.5).unwrap();
        let expected = 16.0 / 9.0 * (4.0f64 / 3.0).exp();
        assert!((d - expected).abs() < 1e-13 * expected);
        assert_eq!(NoiseFamily::single_exp().eval_f_prime(0.0).unwrap(), 0.0);
    }

    #[test]
    fn poly_derivative_matches_finite_difference() {
        let fam = NoiseFamily::poly(2.0).unwrap();
        let h = 1e-6;
        let fd = (fam.eval_f(0.5 + h).unwrap() - fam.eval_f(0.5 - h).unwrap()) / (2.0 * h);
        let d = fam.eval_f_prime(0.5).unwrap();
        assert!((fd - d).abs() < 1e-5 * d.abs());
    }

    #[test]
    fn symmetry_and_monotonicity_on_grid() {
        for fam in families() {
            let mut prev = 0.0;
            for i in 0..=2000 {
                let eta = 0.999 * i as f64 / 2000.0;
                let v = fam.potential(eta);
                assert_eq!(v, fam.potential(-eta), "{fam} at {eta}");
                assert!(v > 0.0);
                assert!(v >= prev, "{fam} not increasing at {eta}");
                prev = v;
            }
        }
    }

    #[test]
    fn convex_on_grid() {
        // Second differences of f on 10^4 points in (-0.999, 0.999), where finite.
        for fam in families() {
            let n = 10_000;
            let h = 1.998 / (n - 1) as f64;
            let xs: Vec<f64> = (0..n).map(|i| -0.999 + i as f64 * h).collect();
            for w in xs.windows(3) {
                let (a, b, c) = (
                    fam.shape().value(w[0]),
                    fam.shape().value(w[1]),
                    fam.shape().value(w[2]),
                );
                if a.is_finite() && b.is_finite() && c.is_finite() {
                    let d2 = a - 2.0 * b + c;
                    assert!(d2 >= -1e-6 * b.max(1.0), "{fam} second difference {d2} at {}", w[1]);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        for fam in families() {
            for i in 1..400 {
                let eta = -0.999 + 1.998 * i as f64 / 400.0;
                let f0 = fam.shape().value(eta);
                if !f0.is_finite() || f0 > 1e6 {
                    continue;
                }
                let h = 1e-5 * (1.0 - eta.abs());
                let fp = fam.shape().value(eta + h);
                let fm = fam.shape().value(eta - h);
                let d1 = fam.eval_f_prime(eta).unwrap();
                let d2 = fam.eval_f_second(eta).unwrap();
                let fd1 = (fp - fm) / (2.0 * h);
                let fd2 = (fp - 2.0 * f0 + fm) / (h * h);
                let scale1 = d1.abs().max(f0 / (1.0 - eta.abs()));
                assert!((fd1 - d1).abs() <= 1e-4 * scale1, "{fam} f' at {eta}: {d1} vs {fd1}");
                assert!((fd2 - d2).abs() <= 1e-4 * d2.abs().max(1.0), "{fam} f'' at {eta}: {d2} vs {fd2}");
                assert!(d2 >= 0.0);
            }
        }
    }

    #[test]
    fn second_derivative_over_f_squared_is_bounded() {
        for fam in [NoiseFamily::poly(2.0).unwrap(), NoiseFamily::single_exp(), NoiseFamily::double_exp()] {
            let mut worst = 0.0f64;
            for i in 0..10_000 {
                let eta = -0.999 + 1.998 * i as f64 / 9_999.0;
                let f = fam.potential(eta);
                if f.is_finite() {
                    worst = worst.max(fam.eval_f_second(eta).unwrap().abs() / (f * f));
                }
            }
            assert!(worst.is_finite() && worst > 0.0, "{fam}: {worst}");
        }
    }

    #[test]
    fn double_exp_overflows_to_infinity() {
        let fam = NoiseFamily::double_exp();
        assert!(fam.eval_f(0.9).unwrap().is_finite());
        assert_eq!(fam.potential(0.9), f64::INFINITY);
        assert_eq!(fam.eval_f(0.99).unwrap(), f64::INFINITY);
        assert_eq!(fam.potential(0.7), f64::INFINITY);
        let cut = fam.cutoff();
        assert!(fam.shape().value(cut) >= OVERFLOW_THRESHOLD);
        assert!(fam.shape().value(cut - 1e-12) < OVERFLOW_THRESHOLD + 1e-6);
        assert!(cut > 0.6 && cut < 0.7);
    }

    #[test]
    fn registry_builds_by_name() {
        let fam = NoiseFamily::from_name("POLY", Some(2.0)).unwrap();
        assert_eq!(fam, NoiseFamily::poly(2.0).unwrap());
        assert!(NoiseFamily::from_name("poly", None).is_err());
        assert!(matches!(
            NoiseFamily::from_name("laplace", None),
            Err(Error::UnknownStrategy { .. })
        ));
        let spec = NoiseFamily::double_exp().spec();
        assert_eq!(spec.build().unwrap(), NoiseFamily::double_exp());
    }
}
