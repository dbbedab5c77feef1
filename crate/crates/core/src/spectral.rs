//! Closed-form spectrum of the linearized operator, the Felli-Schneider and
//! σ curves, the δ/α threshold table and the region classifier.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{derive, require_admissible, Derived, Parameters};

/// Relative tolerance for equality decisions between closed forms.
pub const EQ_TOL: f64 = 1e-12;

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Positive root of `η(η+n−2) = (d−1)/α²`.
pub fn eta(alpha: f64, n: f64, d: u32) -> f64 {
    let c = (d as f64 - 1.0) / (alpha * alpha);
    let h = (n - 2.0) / 2.0;
    // η = √(c + h²) − h, written without cancellation
    c / ((c + h * h).sqrt() + h)
}

/// Positive root of `a(a+n−2) = μ_ℓ/α²` with `μ_ℓ = ℓ(ℓ+d−2)`.
pub fn angular_exponent(alpha: f64, n: f64, d: u32, ell: u32) -> f64 {
    let mu = ell as f64 * (ell as f64 + d as f64 - 2.0);
    if mu == 0.0 {
        return 0.0;
    }
    let c = mu / (alpha * alpha);
    let h = (n - 2.0) / 2.0;
    c / ((c + h * h).sqrt() + h)
}

pub fn beta_fs(gamma: f64, d: u32) -> Result<f64> {
    let df = d as f64;
    let arg = (df - gamma).powi(2) - 4.0 * (df - 1.0);
    if arg < 0.0 {
        return Err(Error::CurveUndefined(format!(
            "(d-gamma)^2 - 4(d-1) = {arg} < 0 at gamma = {gamma}"
        )));
    }
    Ok(df - 2.0 - arg.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FsTest {
    pub value: f64,
    pub breaking: bool,
}

/// `h_FS = (d−γ)² − (β−d+2)² − 4(d−1) = (2+β−γ)(2d−β−γ−2) − 4(d−1)`;
/// linear instability holds where this is positive.
pub fn h_fs(beta: f64, gamma: f64, d: u32) -> FsTest {
    let df = d as f64;
    let value = (df - gamma).powi(2) - (beta - df + 2.0).powi(2) - 4.0 * (df - 1.0);
    FsTest {
        value,
        breaking: value > 0.0,
    }
}

pub fn sigma(gamma: f64, p: f64, d: u32) -> f64 {
    let df = d as f64;
    -((df - gamma + p * (df + 2.0 - gamma)) * (df - gamma - p * (df - 2.0 + gamma)))
        / (2.0 * p * (p + 1.0) * (df - gamma))
}

/// Radial branch of the asymptotic rate, as a function of the original exponents.
pub fn radial_rate(params: &Parameters) -> f64 {
    let Parameters { d, beta, gamma, p } = *params;
    let df = d as f64;
    (2.0 + beta - gamma) / (2.0 * p) * (df - gamma - p * (df + gamma - 2.0 * beta - 4.0))
}

/// Nonradial branch `½(2+β−γ)²η`.
pub fn nonradial_rate(params: &Parameters) -> f64 {
    let der = crate::params::derive_unchecked(params);
    let e = eta(der.alpha, der.n, params.d);
    0.5 * (2.0 + params.beta - params.gamma).powi(2) * e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Radial,
    Nonradial,
    Threshold,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Radial => "radial",
            Branch::Nonradial => "nonradial",
            Branch::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    One,
    Two,
    Three,
    Boundary,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::One => "1",
            Region::Two => "2",
            Region::Three => "3",
            Region::Boundary => "boundary",
        }
    }
}

/// The linearized spectrum as a function of `(d, α, n)` and a free `δ`.
/// [`spectral_report`] evaluates it at `δ = 2p/(p−1)`; the threshold sweeps
/// move `δ` independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearized {
    pub d: u32,
    pub alpha: f64,
    pub n: f64,
    pub eta: f64,
}

impl Linearized {
    pub fn new(d: u32, alpha: f64, n: f64) -> Self {
        Self {
            d,
            alpha,
            n,
            eta: eta(alpha, n, d),
        }
    }

    pub fn from_derived(d: u32, der: &Derived) -> Self {
        Self::new(d, der.alpha, der.n)
    }

    fn a2(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn lambda10_formal(&self, delta: f64) -> f64 {
        2.0 * self.a2() * (2.0 * delta - self.n)
    }

    pub fn lambda01_formal(&self, delta: f64) -> f64 {
        2.0 * self.a2() * delta * self.eta
    }

    pub fn lambda_ess(&self, delta: f64) -> f64 {
        0.25 * self.a2() * (self.n - 2.0 - 2.0 * delta).powi(2)
    }

    pub fn lambda_star(&self, delta: f64) -> f64 {
        2.0 * self.a2() * delta
    }

    pub fn lambda10(&self, delta: f64) -> Option<f64> {
        (delta > (self.n + 2.0) / 2.0).then(|| self.lambda10_formal(delta))
    }

    pub fn lambda01(&self, delta: f64) -> Option<f64> {
        (delta > self.thresholds().delta4).then(|| self.lambda01_formal(delta))
    }

    /// Lowest positive point of the spectrum.
    pub fn gap(&self, delta: f64) -> f64 {
        let ess = self.lambda_ess(delta);
        [self.lambda10(delta), self.lambda01(delta)]
            .into_iter()
            .flatten()
            .fold(ess, f64::min)
    }

    pub fn thresholds(&self) -> ThresholdTable {
        let n = self.n;
        let e = self.eta;
        let d1 = self.d as f64 - 1.0;
        ThresholdTable {
            delta1: (n - 2.0) / 2.0,
            delta2: (n + 2.0) / 2.0,
            delta3: e + (n - 2.0) / 2.0,
            delta4: e + (n - 2.0) / 2.0 + d1.sqrt() / self.alpha,
            delta5: (e < 2.0).then(|| n / (2.0 - e)),
            alpha1: (d1 / (2.0 * n)).sqrt(),
            alpha2: (n + 2.0) / (2.0 * n) * d1.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta5: Option<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralReport {
    pub eta: f64,
    pub lambda00: f64,
    pub lambda10: Option<f64>,
    pub lambda01: Option<f64>,
    pub lambda_ess: f64,
    pub gap: f64,
    pub lambda_star: f64,
    pub rate: f64,
    pub gap_rate: f64,
    pub sigma: f64,
    pub branch: Branch,
}

pub fn spectral_report(params: &Parameters) -> Result<SpectralReport> {
    let der = derive(params)?;
    let lin = Linearized::from_derived(params.d, &der);
    let delta = der.delta;
    let sig = sigma(params.gamma, params.p, params.d);
    let branch = if rel_eq(params.beta, sig) {
        Branch::Threshold
    } else if params.beta < sig {
        Branch::Radial
    } else {
        Branch::Nonradial
    };
    let rate = match branch {
        Branch::Radial | Branch::Threshold => radial_rate(params),
        Branch::Nonradial => nonradial_rate(params),
    };
    let gap = lin.gap(delta);
    Ok(SpectralReport {
        eta: lin.eta,
        lambda00: 0.0,
        lambda10: lin.lambda10(delta),
        lambda01: lin.lambda01(delta),
        lambda_ess: lin.lambda_ess(delta),
        gap,
        lambda_star: lin.lambda_star(delta),
        rate,
        // 1 − m = (p−1)/(2p) without the cancellation in m
        gap_rate: (params.p - 1.0) / (2.0 * params.p) * gap,
        sigma: sig,
        branch,
    })
}

/// Sign of the gap branch test `α² − (d−1)δ²/(n(2δ−n)(δ−1))`:
/// negative means `Λ = Λ₁,₀`.
pub fn gap_branch_test(params: &Parameters) -> f64 {
    let der = crate::params::derive_unchecked(params);
    let (n, del) = (der.n, der.delta);
    der.alpha * der.alpha
        - (params.d as f64 - 1.0) * del * del / (n * (2.0 * del - n) * (del - 1.0))
}

pub fn classify_region(params: &Parameters) -> Result<Region> {
    let r = spectral_report(params)?;
    let l10 = r.lambda10.unwrap_or(f64::INFINITY);
    let l01 = r.lambda01.unwrap_or(f64::INFINITY);
    let ls = r.lambda_star;
    let finite_eq = |a: f64, b: f64| a.is_finite() && b.is_finite() && rel_eq(a, b);
    if finite_eq(l01, ls) || finite_eq(l10, ls) || finite_eq(l01, l10) {
        return Ok(Region::Boundary);
    }
    Ok(if l01 < ls && ls < l10 {
        Region::One
    } else if ls < l01 && l01 < l10 {
        Region::Two
    } else if ls < l10 && l10 < l01 {
        Region::Three
    } else {
        Region::Boundary
    })
}

pub fn thresholds(params: &Parameters) -> Result<ThresholdTable> {
    let der = derive(params)?;
    Ok(Linearized::from_derived(params.d, &der).thresholds())
}

/// `(p/(p−1)²)(2+β−γ)[d−2−β−p(d+γ−2β−4)] − Λ` with the gap `Λ`.
pub fn kappa(params: &Parameters) -> Result<f64> {
    let r = spectral_report(params)?;
    Ok(kappa_with(params, r.gap))
}

/// Same coefficient with an arbitrary `Λ` in place of the gap.
pub fn kappa_with(params: &Parameters, lambda: f64) -> f64 {
    let Parameters { d, beta, gamma, p } = *params;
    let df = d as f64;
    p / (p - 1.0).powi(2) * (2.0 + beta - gamma) * (df - 2.0 - beta - p * (df + gamma - 2.0 * beta - 4.0))
        - lambda
}

/// `β = (ℓ−1)(ℓ+d−1)/(d−1)`.
pub fn moment_beta(ell: i64, d: u32) -> Result<f64> {
    if ell <= 0 {
        return Err(Error::InvalidArgument(format!("moment_beta needs l >= 1, got {ell}")));
    }
    let l = ell as f64;
    let df = d as f64;
    Ok((l - 1.0) * (l + df - 1.0) / (df - 1.0))
}

/// Convenience: report for callers that already validated.
pub fn linearized(params: &Parameters) -> Result<(Derived, Linearized)> {
    require_admissible(params)?;
    let der = crate::params::derive_unchecked(params);
    Ok((der, Linearized::from_derived(params.d, &der)))
}
