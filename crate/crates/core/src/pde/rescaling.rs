//! The time-dependent rescaling between the original flow for `u` and the
//! Fokker–Planck form for `v`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{derive, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rescaling {
    pub r: f64,
    pub dr_dt: f64,
    /// `τ = ln R/(2+β−γ)`.
    pub tau: f64,
}

/// `R(t) = (1 + (2+β−γ)t/ρ)^ρ`.
pub fn rescaling(t: f64, params: &Parameters) -> Result<Rescaling> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    let der = derive(params)?;
    let w = 2.0 + params.beta - params.gamma;
    let rho = der.rho;
    let base = 1.0 + w * t / rho;
    let r = base.powf(rho);
    Ok(Rescaling {
        r,
        dr_dt: w * base.powf(rho - 1.0),
        tau: r.ln() / w,
    })
}

/// Right side of `dR/dt = (2+β−γ) R^{(m−1)(γ−d)−(2+β−γ)+1}`.
pub fn rescaling_ode_rhs(r: f64, params: &Parameters) -> Result<f64> {
    let der = derive(params)?;
    let Parameters { d, beta, gamma, .. } = *params;
    let w = 2.0 + beta - gamma;
    Ok(w * r.powf((der.m - 1.0) * (gamma - d as f64) - w + 1.0))
}

/// `u(t, r) = R^{γ−d} v(τ, r/R)` for radial `v(τ, ·)`.
pub fn u_from_v(v: impl Fn(f64, f64) -> f64, t: f64, r: f64, params: &Parameters) -> Result<f64> {
    let resc = rescaling(t, params)?;
    Ok(resc.r.powf(params.gamma - params.d as f64) * v(resc.tau, r / resc.r))
}

/// `v(τ, y) = R^{d−γ} u(t, R y)` with `t` recovered from `τ`.
pub fn v_from_u(u: impl Fn(f64, f64) -> f64, tau: f64, y: f64, params: &Parameters) -> Result<f64> {
    let der = derive(params)?;
    let w = 2.0 + params.beta - params.gamma;
    let r = (w * tau).exp();
    let t = (r.powf(1.0 / der.rho) - 1.0) * der.rho / w;
    Ok(r.powf(params.d as f64 - params.gamma) * u(t, r * y))
}

/// `R(t)^{γ−d} 𝔅(r/R(t))`.
pub fn self_similar(t: f64, r: f64, params: &Parameters) -> Result<f64> {
    let der = derive(params)?;
    let q = 2.0 + params.beta - params.gamma;
    u_from_v(|_, y| (1.0 + y.powf(q)).powf(1.0 / (der.m - 1.0)), t, r, params)
}
