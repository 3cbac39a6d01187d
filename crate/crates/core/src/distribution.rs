//! The normalized bounded-noise law `mu_f` on (-1, 1) and its scaling to (-R, R).
//!
//! [`UnitNoise`] owns everything that does not depend on `R`: the log
//! normalizer, the support cutoff, a knot table of lower-tail masses and a
//! lazily built quantile table. [`ScaledNoise`] is a cheap `(Arc<UnitNoise>, R)`
//! pair, so calibration loops over `R` never renormalize.
//!
//! Lower-tail masses are accumulated from the left edge, which keeps them
//! accurate in relative terms far into the tail (tail masses of 1e-20 and
//! below are routine for the truncation threshold).

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::family::NoiseFamily;
use crate::quadrature::{self, Tolerance};

const UNIFORM_KNOTS: usize = 2048;
const BAND_KNOTS: usize = 256;
const BAND_WIDTH: f64 = 1e-2;

const QUANTILE_KNOTS: usize = 8192;
/// Lowest tabulated `ln u`; smaller tail masses are solved exactly.
const QUANTILE_LOG_FLOOR: f64 = -80.0;
/// Above this level the table is uniform in `u` rather than `ln u`.
const QUANTILE_SPLIT: f64 = 0.05;
const CENTRAL_KNOTS: usize = 2048;

fn segment_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-14,
        max_panels: 512,
    }
}

/// Cubic Hermite table of the lower quantile, in `s = ln u` for the tail
/// and in `u` itself near the median.
#[derive(Debug)]
struct QuantileTables {
    tail: QuantileTable,
    central: QuantileTable,
}

#[derive(Debug)]
struct QuantileTable {
    /// First abscissa (in `ln u` or `u`).
    s_min: f64,
    step: f64,
    eta: Vec<f64>,
    slope: Vec<f64>,
}

impl QuantileTable {
    fn eval(&self, s: f64) -> f64 {
        let pos = (s - self.s_min) / self.step;
        let last = self.eta.len() - 1;
        let i = (pos.floor() as usize).min(last - 1);
        let t = pos - i as f64;
        let (y0, y1) = (self.eta[i], self.eta[i + 1]);
        let (m0, m1) = (self.slope[i] * self.step, self.slope[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

/// `mu_f`: the density `exp(-f(eta)) / Z_f` on (-1, 1).
#[derive(Debug)]
pub struct UnitNoise {
    family: NoiseFamily,
    log_z: f64,
    f0: f64,
    cut: f64,
    /// Ascending knots on [-cut, 0]; `knots[0] = -cut`, last is 0.
    knots: Vec<f64>,
    /// `lower_mass[i]` = mass of [-cut, knots[i]].
    lower_mass: Vec<f64>,
    quantiles: OnceLock<QuantileTables>,
}

impl UnitNoise {
    pub fn new(family: NoiseFamily) -> Result<Self> {
        let cut = family.cutoff();
        let f0 = family.potential(0.0);
        if !f0.is_finite() {
            return Err(Error::Numeric(format!("{family}: f(0) is not finite")));
        }

        let mut knots: Vec<f64> = (0..=UNIFORM_KNOTS)
            .map(|i| -cut + cut * i as f64 / UNIFORM_KNOTS as f64)
            .collect();
        // Geometric refinement towards the cutoff, offsets 1e-2 .. 1e-14.
        for j in 0..BAND_KNOTS {
            let offset = BAND_WIDTH * 1e-12f64.powf(j as f64 / (BAND_KNOTS - 1) as f64);
            knots.push(-cut + offset.min(cut));
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup();
        *knots.last_mut().unwrap() = 0.0;

        // Unnormalized masses of exp(-(f - f0)).
        let shifted = |eta: f64| (-(family.potential(eta) - f0)).exp();
        let mut cumulative = Vec::with_capacity(knots.len());
        let mut running = quadrature::CompensatedSum::default();
        cumulative.push(0.0);
        for w in knots.windows(2) {
            let est = quadrature::integrate(shifted, w[0], w[1], segment_tolerance())
                .map_err(|e| Error::Numeric(format!("{family}: normalization failed: {e}")))?;
            running.add(est.value);
            cumulative.push(running.value());
        }
        let half = running.value();
        if !(half > 0.0 && half.is_finite()) {
            return Err(Error::Numeric(format!("{family}: normalizer is {half}")));
        }
        let total = 2.0 * half;
        let log_z = total.ln() - f0;
        let lower_mass = cumulative.iter().map(|m| m / total).collect();

        Ok(Self {
            family,
            log_z,
            f0,
            cut,
            knots,
            lower_mass,
            quantiles: OnceLock::new(),
        })
    }

    pub fn family(&self) -> &NoiseFamily {
        &self.family
    }

    /// `ln Z_f`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Support cutoff: the density is exactly zero on `|eta| >= cutoff()`.
    pub fn cutoff(&self) -> f64 {
        self.cut
    }

    pub fn knot_count(&self) -> usize {
        self.knots.len()
    }

    #[inline]
    pub fn density(&self, eta: f64) -> f64 {
        let v = self.family.potential(eta);
        if v.is_finite() {
            (-(v - self.f0) - (self.log_z + self.f0)).exp()
        } else {
            0.0
        }
    }

    #[inline]
    pub fn log_density(&self, eta: f64) -> f64 {
        -self.family.potential(eta) - self.log_z
    }

    fn segment_mass(&self, a: f64, b: f64) -> f64 {
        let shift = self.log_z + self.f0;
        let f = |eta: f64| (-(self.family.potential(eta) - self.f0) - shift).exp();
        match quadrature::integrate(f, a, b, segment_tolerance()) {
            Ok(est) => est.value,
            // The knot table already integrated this segment at the same
            // tolerance, so failure here means a pathological sub-interval;
            // fall back to a fixed 15-point rule.
            Err(_) => quadrature::gk15(&f, a, b).0,
        }
    }

    /// Mass of [-cut, eta] for eta in [-cut, 0].
    fn lower_cdf(&self, eta: f64) -> f64 {
        if eta <= self.knots[0] {
            return 0.0;
        }
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&eta).unwrap()) {
            Ok(i) => return self.lower_mass[i],
            Err(i) => i - 1,
        };
        self.lower_mass[i] + self.segment_mass(self.knots[i], eta)
    }

    /// Distribution function of `mu_f`.
    pub fn cdf(&self, eta: f64) -> f64 {
        if eta.is_nan() {
            return f64::NAN;
        }
        if eta <= -self.cut {
            0.0
        } else if eta >= self.cut {
            1.0
        } else if eta <= 0.0 {
            self.lower_cdf(eta)
        } else {
            1.0 - self.lower_cdf(-eta)
        }
    }

    /// `Pr[eta > x]`, accurate in relative terms for large x.
    pub fn upper_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0 - self.lower_cdf(x.max(-self.cut))
        } else {
            self.lower_cdf(-x)
        }
    }

    /// Largest `eta` (up to the solver's resolution) with `Pr[X <= eta] <= mass`,
    /// for `mass` in (0, 1/2]. Erring low keeps the returned tail mass at or
    /// below the target.
    pub fn lower_quantile_exact(&self, mass: f64) -> f64 {
        if mass <= 0.0 {
            return -self.cut;
        }
        if mass >= 0.5 {
            return 0.0;
        }
        let idx = self.lower_mass.partition_point(|&m| m <= mass);
        // knots[idx-1] has mass <= target < mass at knots[idx]
        let (mut a, mut b) = (self.knots[idx - 1], self.knots[idx]);
        let base = self.lower_mass[idx - 1];
        let left = self.knots[idx - 1];
        let residual = |eta: f64| base + self.segment_mass(left, eta) - mass;
        let resolution = |x: f64| 4.0 * f64::EPSILON * x.abs().max(1e-300);
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let r = residual(x);
            if r <= 0.0 {
                a = x;
            } else {
                b = x;
            }
            if b - a <= resolution(b) {
                break;
            }
            let p = self.density(x);
            let newton = if p > 0.0 { x - r / p } else { f64::NAN };
            if newton > a && newton < b {
                if (newton - x).abs() <= resolution(x) {
                    // Converged; make sure we finish on the low side.
                    let below = newton - resolution(newton);
                    if below > a && residual(below) <= 0.0 {
                        return below;
                    }
                    x = 0.5 * (a + b);
                } else {
                    x = newton;
                }
            } else {
                x = 0.5 * (a + b);
            }
            if x <= a || x >= b {
                break;
            }
        }
        a
    }

    /// Hermite table over `x` in `[x_min, x_max]` where the level is `u = to_u(x)`
    /// and `du/dx = du_dx(x, u)`.
    fn hermite_table(
        &self,
        x_min: f64,
        x_max: f64,
        knots: usize,
        to_u: impl Fn(f64) -> f64,
        du_dx: impl Fn(f64, f64) -> f64,
    ) -> QuantileTable {
        let step = (x_max - x_min) / (knots - 1) as f64;
        let mut eta = Vec::with_capacity(knots);
        let mut slope = Vec::with_capacity(knots);
        for j in 0..knots {
            let x = if j == knots - 1 { x_max } else { x_min + step * j as f64 };
            let u = to_u(x);
            let e = self.lower_quantile_exact(u);
            eta.push(e);
            slope.push(du_dx(x, u) / self.density(e));
        }
        QuantileTable {
            s_min: x_min,
            step,
            eta,
            slope,
        }
    }

    fn quantile_tables(&self) -> &QuantileTables {
        self.quantiles.get_or_init(|| {
            let s_max = QUANTILE_SPLIT.ln();
            let smallest = self.lower_mass.iter().copied().find(|&m| m > 0.0).unwrap_or(1e-300);
            let s_min = QUANTILE_LOG_FLOOR.max(smallest.ln());
            QuantileTables {
                tail: self.hermite_table(s_min, s_max, QUANTILE_KNOTS, f64::exp, |_, u| u),
                central: self.hermite_table(QUANTILE_SPLIT, 0.5, CENTRAL_KNOTS, |u| u, |_, _| 1.0),
            }
        })
    }

    /// Lower quantile for `mass` in (0, 1/2]: table lookup in `ln mass`,
    /// exact solve below the table floor.
    pub fn lower_quantile(&self, mass: f64) -> f64 {
        if mass <= 0.0 {
            return -self.cut;
        }
        if mass >= 0.5 {
            return 0.0;
        }
        let tables = self.quantile_tables();
        if mass >= QUANTILE_SPLIT {
            return tables.central.eval(mass).clamp(-self.cut, 0.0);
        }
        let s = mass.ln();
        if s < tables.tail.s_min {
            return self.lower_quantile_exact(mass);
        }
        tables.tail.eval(s).clamp(-self.cut, 0.0)
    }

    /// Inverse distribution function.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            -self.cut
        } else if u >= 1.0 {
            self.cut
        } else if u <= 0.5 {
            self.lower_quantile(u)
        } else {
            // exact for u >= 1/2
            -self.lower_quantile(1.0 - u)
        }
    }

    /// Forces construction of the quantile table.
    pub fn warm_up(&self) {
        let _ = self.quantile_tables();
    }
}

/// `mu_{f,R}`: `mu_f` scaled to (-R, R).
#[derive(Debug, Clone)]
pub struct ScaledNoise {
    unit: Arc<UnitNoise>,
    r: f64,
}

impl ScaledNoise {
    pub fn new(family: NoiseFamily, r: f64) -> Result<Self> {
        Self::from_unit(Arc::new(UnitNoise::new(family)?), r)
    }

    pub fn from_unit(unit: Arc<UnitNoise>, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain(format!("noise magnitude R must be positive, got {r}")));
        }
        Ok(Self { unit, r })
    }

    /// Same family at a different magnitude, sharing the normalization tables.
    pub fn with_magnitude(&self, r: f64) -> Result<Self> {
        Self::from_unit(self.unit.clone(), r)
    }

    pub fn unit(&self) -> &Arc<UnitNoise> {
        &self.unit
    }

    pub fn family(&self) -> &NoiseFamily {
        self.unit.family()
    }

    pub fn magnitude(&self) -> f64 {
        self.r
    }

    /// `ln Z_{f,R} = ln R + ln Z_f`.
    pub fn log_z(&self) -> f64 {
        self.r.ln() + self.unit.log_z()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.unit.density(y / self.r) / self.r
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        self.unit.log_density(y / self.r) - self.r.ln()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.unit.cdf(y / self.r)
    }

    pub fn upper_tail(&self, y: f64) -> f64 {
        self.unit.upper_tail(y / self.r)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("quantile level must lie in [0, 1], got {u}")));
        }
        Ok(self.r * self.unit.quantile(u))
    }

    /// `y` with `Pr[Y > y] = tail`, computed without forming `1 - tail`.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        -self.r * self.unit.lower_quantile(tail)
    }

    /// Conservative version of [`upper_quantile`](Self::upper_quantile): the
    /// returned level has upper-tail mass at most `tail`.
    pub fn upper_quantile_exact(&self, tail: f64) -> f64 {
        -self.r * self.unit.lower_quantile_exact(tail)
    }
}
