//! Gauss-Kronrod (7, 15) quadrature.
//!
//! The 15-point Kronrod rule shares the odd-indexed nodes of the 7-point Gauss
//! rule, so one sweep over 15 nodes yields both estimates; `|K15 - G7|` is the
//! (pessimistic) local error estimate used for adaptive refinement and for the
//! one-sided padding of the MGF certificate.

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1); the negative half is mirrored. `KRONROD_NODES[7]` is the centre.
pub const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the Kronrod nodes 1, 3, 5 and 7 (the centre).
pub const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod nodes on [a, b] with their Kronrod and Gauss weights
/// (Gauss weight 0 for the Kronrod-only nodes).
pub fn gk15_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    let mut idx = 0;
    for j in 0..7 {
        let gw = if j % 2 == 1 { GAUSS_WEIGHTS[j / 2] } else { 0.0 };
        let dx = half * KRONROD_NODES[j];
        let kw = half * KRONROD_WEIGHTS[j];
        out[idx] = (centre - dx, kw, half * gw);
        out[idx + 1] = (centre + dx, kw, half * gw);
        idx += 2;
    }
    out[14] = (centre, half * KRONROD_WEIGHTS[7], half * GAUSS_WEIGHTS[3]);
    out
}

/// One Gauss-Kronrod step: returns `(kronrod, gauss)` estimates of the integral over [a, b].
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mut k = 0.0;
    let mut g = 0.0;
    for (x, kw, gw) in gk15_nodes(a, b) {
        let y = f(x);
        k += kw * y;
        g += gw * y;
    }
    (k, g)
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Refinement budget; the call stops splitting once this many panels exist.
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-300,
            rel: 1e-13,
            max_panels: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sum of the panels' `|K15 - G7|`.
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    k: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive quadrature: the panel with the largest `|K - G|` is split
/// until the summed error is below `max(abs, rel * |value|)`.
///
/// When the budget runs out (typically because the integrand is only known to
/// a few ulps) the result is still accepted if the error is within `1e3 * rel`
/// of the value.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let eval = |x0: f64, x1: f64| -> Result<Panel> {
        let (k, g) = gk15(&f, x0, x1);
        if !k.is_finite() {
            return Err(Error::Numeric(format!("integrand not finite on [{x0}, {x1}]")));
        }
        Ok(Panel {
            a: x0,
            b: x1,
            k,
            err: (k - g).abs(),
        })
    };
    let first = eval(lo, hi)?;
    let mut value = first.k;
    let mut error = first.err;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(first);
    while error > tol.abs.max(tol.rel * value.abs()) && heap.len() < tol.max_panels.max(1) {
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = eval(worst.a, mid)?;
        let right = eval(mid, worst.b)?;
        value += left.k + right.k - worst.k;
        error += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let mut v = CompensatedSum::default();
    let mut e = 0.0;
    for p in heap.iter() {
        v.add(p.k);
        e += p.err;
    }
    let (value, error) = (v.value(), e);
    if error > tol.abs.max(1e3 * tol.rel * value.abs()) {
        return Err(Error::Numeric(format!(
            "quadrature on [{a}, {b}] did not converge: value {value:e}, error {error:e}"
        )));
    }
    Ok(Estimate {
        value: sign * value,
        error,
        panels: heap.len(),
    })
}

/// Kahan-Babuska (Neumaier) compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
