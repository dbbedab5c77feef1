//! Radial functions and the weighted integrals built on them.

use crate::error::{Error, Result};
use crate::quad::{integrate_half_line, Estimate, QuadOptions};

pub trait RadialProfile {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;

    /// `ln E(s)` for a positive envelope `E`; profiles whose values leave
    /// the floating-point range override this together with [`Self::scaled`].
    fn ln_envelope(&self, _s: f64) -> f64 {
        0.0
    }

    /// `(value/E, derivative/E)`.
    fn scaled(&self, s: f64) -> (f64, f64) {
        (self.value(s), self.derivative(s))
    }
}

impl<T: RadialProfile + ?Sized> RadialProfile for &T {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn derivative(&self, s: f64) -> f64 {
        (**self).derivative(s)
    }
    fn ln_envelope(&self, s: f64) -> f64 {
        (**self).ln_envelope(s)
    }
    fn scaled(&self, s: f64) -> (f64, f64) {
        (**self).scaled(s)
    }
}

impl<T: RadialProfile + ?Sized> RadialProfile for Box<T> {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn derivative(&self, s: f64) -> f64 {
        (**self).derivative(s)
    }
    fn ln_envelope(&self, s: f64) -> f64 {
        (**self).ln_envelope(s)
    }
    fn scaled(&self, s: f64) -> (f64, f64) {
        (**self).scaled(s)
    }
}

/// A profile given by two closures.
pub struct FnProfile<F, G> {
    pub f: F,
    pub df: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> RadialProfile for FnProfile<F, G> {
    fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    fn derivative(&self, s: f64) -> f64 {
        (self.df)(s)
    }
}

pub fn profile<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, df: G) -> FnProfile<F, G> {
    FnProfile { f, df }
}

/// `c·(k + s^q)^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub scale: f64,
    pub shift: f64,
    pub power: f64,
    pub exponent: f64,
}

impl RadialProfile for PowerProfile {
    fn value(&self, s: f64) -> f64 {
        self.scale * (self.shift + s.powf(self.power)).powf(self.exponent)
    }
    fn derivative(&self, s: f64) -> f64 {
        let base = self.shift + s.powf(self.power);
        self.scale * self.exponent * base.powf(self.exponent - 1.0) * self.power * s.powf(self.power - 1.0)
    }
}

/// Sampled profile with the natural cubic spline through the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl SampledProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 || values.len() != n {
            return Err(Error::InvalidArgument(
                "sampled profile needs at least 3 nodes and matching values".into(),
            ));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample nodes must increase".into()));
        }
        // natural spline: tridiagonal system for the second derivatives
        let mut second = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (nodes[i] - nodes[i - 1]) / (nodes[i + 1] - nodes[i - 1]);
            let p = sig * second[i - 1] + 2.0;
            second[i] = (sig - 1.0) / p;
            let slope = (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i])
                - (values[i] - values[i - 1]) / (nodes[i] - nodes[i - 1]);
            u[i] = (6.0 * slope / (nodes[i + 1] - nodes[i - 1]) - sig * u[i - 1]) / p;
        }
        second[n - 1] = 0.0;
        for k in (0..n - 1).rev() {
            second[k] = second[k] * second[k + 1] + u[k];
        }
        Ok(Self { nodes, values, second })
    }

    pub fn domain_end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    fn locate(&self, s: f64) -> usize {
        match self.nodes.partition_point(|&x| x <= s) {
            0 => 0,
            k if k >= self.nodes.len() => self.nodes.len() - 2,
            k => k - 1,
        }
    }
}

impl RadialProfile for SampledProfile {
    fn value(&self, s: f64) -> f64 {
        if s > self.domain_end() {
            return 0.0;
        }
        let k = self.locate(s);
        let h = self.nodes[k + 1] - self.nodes[k];
        let a = (self.nodes[k + 1] - s) / h;
        let b = (s - self.nodes[k]) / h;
        a * self.values[k]
            + b * self.values[k + 1]
            + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h * h / 6.0
    }

    fn derivative(&self, s: f64) -> f64 {
        if s > self.domain_end() {
            return 0.0;
        }
        let k = self.locate(s);
        let h = self.nodes[k + 1] - self.nodes[k];
        let a = (self.nodes[k + 1] - s) / h;
        let b = (s - self.nodes[k]) / h;
        (self.values[k + 1] - self.values[k]) / h
            - (3.0 * a * a - 1.0) / 6.0 * h * self.second[k]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.second[k + 1]
    }
}

/// `∫_0^∞ F(s) s^{n−1} ds`.
pub fn moment<F: Fn(f64) -> f64>(f: F, n: f64, opts: QuadOptions) -> Result<Estimate> {
    integrate_half_line(|s| if s == 0.0 { 0.0 } else { f(s) * s.powf(n - 1.0) }, opts)
}

/// Local power-law exponent of `F` between `s` and `10s`; `None` when both
/// values vanish (underflow or compact support).
pub fn log_slope<F: Fn(f64) -> f64>(f: &F, s: f64) -> Option<f64> {
    let a = f(s).abs();
    let b = f(10.0 * s).abs();
    if a == 0.0 && b == 0.0 {
        return None;
    }
    if a == 0.0 || b == 0.0 || !a.is_finite() || !b.is_finite() {
        return Some(if b > a { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    Some((b / a).log10())
}

/// Refuse integrands `F` (already including the measure) whose power law
/// at `0` or at `∞` is not integrable.
pub fn check_integrable<F: Fn(f64) -> f64>(f: &F, which: &'static str) -> Result<()> {
    // tail: need F ~ s^k with k < −1
    if let Some(k) = log_slope(f, 1e4) {
        if k >= -1.0 - 1e-3 {
            return Err(Error::DivergentTail {
                which,
                location: "infinity",
                exponent: k,
            });
        }
    }
    // origin: need k > −1
    if let Some(k) = log_slope(f, 1e-7) {
        if k <= -1.0 + 1e-3 {
            return Err(Error::DivergentTail {
                which,
                location: "origin",
                exponent: k,
            });
        }
    }
    Ok(())
}
