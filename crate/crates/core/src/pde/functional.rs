//! `ℋ[v]`, its scaling optimization, and the identity relating it to the
//! entropy production deficit `ℐ[u] − ((1−m)/m)(2+β−γ)²𝒻[u]`.

use serde::Serialize;

use super::scheme::bregman_unit;
use crate::constants::{best_radial_constant, h_coefficients, mass_star, sphere_volume};
use crate::error::{Error, Result};
use crate::params::{derive, Parameters};
use crate::quad::{integrate_half_line, QuadOptions};
use crate::radial::{moment, RadialProfile};

/// `‖D_α v‖²`, `‖v‖_{p+1}^{p+1}`, `‖v‖_{2p}^{2p}` for radial `v(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub gradient_sq: f64,
    pub lp1: f64,
    pub l2p: f64,
}

pub fn norms(v: &dyn RadialProfile, params: &Parameters) -> Result<Norms> {
    let der = derive(params)?;
    let sd = sphere_volume(params.d);
    let p = params.p;
    let opts = QuadOptions::tight();
    let g = moment(|s| v.derivative(s).powi(2), der.n, opts)?.value;
    let a = moment(|s| v.value(s).abs().powf(p + 1.0), der.n, opts)?.value;
    let b = moment(|s| v.value(s).abs().powf(2.0 * p), der.n, opts)?.value;
    let out = Norms {
        gradient_sq: sd * der.alpha * der.alpha * g,
        lp1: sd * a,
        l2p: sd * b,
    };
    if !(out.gradient_sq.is_finite() && out.lp1.is_finite() && out.l2p.is_finite()) {
        return Err(Error::NonFinite("norms of v"));
    }
    Ok(out)
}

/// `(A/2)‖D_α v‖² + (B/(p+1))‖v‖_{p+1}^{p+1} − (1/(2p))‖v‖_{2p}^{2pk}`.
pub fn h_functional(v: &dyn RadialProfile, params: &Parameters) -> Result<f64> {
    let nv = norms(v, params)?;
    h_from_norms(&nv, params)
}

fn h_from_norms(nv: &Norms, params: &Parameters) -> Result<f64> {
    let h = h_coefficients(params)?;
    let p = params.p;
    Ok(h.a_coef / 2.0 * nv.gradient_sq + h.b_coef / (p + 1.0) * nv.lp1 - nv.l2p.powf(h.k_exp) / (2.0 * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingOptimum {
    pub mu_star: f64,
    /// `μ h'(μ★)` relative to the gradient term.
    pub stationarity: f64,
    pub h_value: f64,
    /// `2p·h(μ★)`.
    pub deficit: f64,
    /// `(K★‖D_α v‖^θ‖v‖_{p+1}^{1−θ})^{2pk} − ‖v‖_{2p}^{2pk}`.
    pub displayed: f64,
    pub rel_mismatch: f64,
}

/// Minimize `h(μ) = ℋ[μ^{n/(2p)} v(μ·)] = Xμ^{e₁} + Yμ^{e₂} − Z`.
pub fn scaling_optimum(v: &dyn RadialProfile, params: &Parameters) -> Result<ScalingOptimum> {
    let der = derive(params)?;
    let (n, p) = (der.n, params.p);
    let hc = h_coefficients(params)?;
    let nv = norms(v, params)?;
    let x = hc.a_coef / 2.0 * nv.gradient_sq;
    let y = hc.b_coef / (p + 1.0) * nv.lp1;
    let z = nv.l2p.powf(hc.k_exp) / (2.0 * p);
    let e1 = n / p - n + 2.0;
    let e2 = n * (p + 1.0) / (2.0 * p) - n;
    if !(e1 > 0.0 && e2 < 0.0 && x > 0.0 && y > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "h(mu) has no interior minimum: exponents {e1}, {e2}"
        )));
    }
    let h = |mu: f64| x * mu.powf(e1) + y * mu.powf(e2) - z;
    let dh = |mu: f64| x * e1 * mu.powf(e1 - 1.0) + y * e2 * mu.powf(e2 - 1.0);
    let mut mu = (-y * e2 / (x * e1)).powf(1.0 / (e1 - e2));
    // Newton in ln μ on μh'(μ)
    for _ in 0..20 {
        let l = mu.ln();
        let g = x * e1 * (e1 * l).exp() + y * e2 * (e2 * l).exp();
        let dg = x * e1 * e1 * (e1 * l).exp() + y * e2 * e2 * (e2 * l).exp();
        let step = g / dg;
        mu = (l - step).exp();
        if step.abs() < 1e-15 {
            break;
        }
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument("scaling optimization diverged".into()));
    }
    let stationarity = (mu * dh(mu) / (x * e1 * mu.powf(e1))).abs();
    let hv = h(mu);
    let k_star = best_radial_constant(params)?.k_star;
    let th = der.theta;
    let two_pk = 2.0 * p * hc.k_exp;
    let lhs = k_star * nv.gradient_sq.powf(th / 2.0) * nv.lp1.powf((1.0 - th) / (p + 1.0));
    let displayed = lhs.powf(two_pk) - nv.l2p.powf(hc.k_exp);
    let deficit = 2.0 * p * hv;
    let scale = nv.l2p.powf(hc.k_exp);
    Ok(ScalingOptimum {
        mu_star: mu,
        stationarity,
        h_value: hv,
        deficit,
        displayed,
        rel_mismatch: (deficit - displayed).abs() / displayed.abs().max(1e-300).max(1e-14 * scale),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceCheck {
    pub mass: f64,
    pub fisher: f64,
    pub free_energy: f64,
    pub h_value: f64,
    /// `ℐ − ((1−m)/m)(2+β−γ)²𝒻`.
    pub lhs: f64,
    /// `(4/α)((m−1)²/(2m−1)²)(2/A)ℋ[v]`.
    pub rhs: f64,
    pub residual: f64,
    /// `residual / max(|lhs|, |rhs|)`.
    pub relative: f64,
}

pub const MASS_TOL: f64 = 1e-8;

/// `v(s) = u(s^{1/α})^{m−1/2}` for radial `u(r)`.
struct Transformed<'a> {
    u: &'a dyn RadialProfile,
    alpha: f64,
    m: f64,
}

impl RadialProfile for Transformed<'_> {
    fn value(&self, s: f64) -> f64 {
        self.u.value(s.powf(1.0 / self.alpha)).powf(self.m - 0.5)
    }
    fn derivative(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let r = s.powf(1.0 / self.alpha);
        let u = self.u.value(r);
        (self.m - 0.5) * u.powf(self.m - 1.5) * self.u.derivative(r) * r / (self.alpha * s)
    }
}

/// Both sides of the identity for radial `u(r)` of mass `M★`.
pub fn equivalence_check(u: &dyn RadialProfile, params: &Parameters) -> Result<EquivalenceCheck> {
    let der = derive(params)?;
    let Parameters { d, beta, gamma, .. } = *params;
    let df = d as f64;
    let m = der.m;
    let q = 2.0 + beta - gamma;
    let sd = sphere_volume(d);
    let opts = QuadOptions::tight();
    let barenblatt = |r: f64| (1.0 + r.powf(q)).powf(1.0 / (m - 1.0));

    let mass = sd
        * integrate_half_line(|r| if r == 0.0 { 0.0 } else { u.value(r) * r.powf(df - 1.0 - gamma) }, opts)?.value;
    let expected = mass_star(params)?;
    if ((mass - expected) / expected).abs() > MASS_TOL {
        return Err(Error::MassMismatch { got: mass, expected });
    }

    // integrands vanish identically at u = 𝔅: absolute floors from the
    // magnitude of the terms they are built from
    let floor_of = |g: &dyn Fn(f64) -> f64| -> Result<QuadOptions> {
        let mag = integrate_half_line(g, QuadOptions::default())?.value;
        Ok(QuadOptions {
            abs_tol: 1e-14 * mag,
            ..opts
        })
    };
    let f_opts = floor_of(&|r: f64| {
        if r == 0.0 {
            0.0
        } else {
            barenblatt(r).powf(m) * r.powf(df - 1.0 - gamma)
        }
    })?;
    let i_opts = floor_of(&|r: f64| {
        if r == 0.0 {
            0.0
        } else {
            let uv = u.value(r);
            uv * (q * r.powf(q - 1.0)).powi(2) * r.powf(df - 1.0 - beta)
        }
    })?;
    let free_energy = sd / (m - 1.0)
        * integrate_half_line(
            |r| {
                if r == 0.0 {
                    return 0.0;
                }
                let b = barenblatt(r);
                b.powf(m) * bregman_unit(u.value(r) / b - 1.0, m) * r.powf(df - 1.0 - gamma)
            },
            f_opts,
        )?
        .value;
    let fisher = sd
        * integrate_half_line(
            |r| {
                if r == 0.0 {
                    return 0.0;
                }
                let uv = u.value(r);
                let g = (m - 1.0) * uv.powf(m - 2.0) * u.derivative(r) - q * r.powf(q - 1.0);
                uv * g * g * r.powf(df - 1.0 - beta)
            },
            i_opts,
        )?
        .value;
    let v = Transformed { u, alpha: der.alpha, m };
    let h_value = h_functional(&v, params)?;
    let a_coef = h_coefficients(params)?.a_coef;
    let lhs = fisher - (1.0 - m) / m * q * q * free_energy;
    let rhs = 4.0 / der.alpha * (m - 1.0).powi(2) / (2.0 * m - 1.0).powi(2) * (2.0 / a_coef) * h_value;
    let residual = (lhs - rhs).abs();
    let big = lhs.abs().max(rhs.abs());
    Ok(EquivalenceCheck {
        mass,
        fisher,
        free_energy,
        h_value,
        lhs,
        rhs,
        residual,
        relative: if big > 0.0 { residual / big } else { 0.0 },
    })
}

/// `λ·𝔅(r)(1 + a e^{−(r/b)²})` with `λ` fixing the mass to `M★`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedBarenblatt {
    pub q: f64,
    pub m: f64,
    pub amplitude: f64,
    pub width: f64,
    pub scale: f64,
}

impl PerturbedBarenblatt {
    pub fn normalized(params: &Parameters, amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude > -1.0) || !(width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need amplitude > -1 and width > 0, got {amplitude}, {width}"
            )));
        }
        let der = derive(params)?;
        let mut out = Self {
            q: 2.0 + params.beta - params.gamma,
            m: der.m,
            amplitude,
            width,
            scale: 1.0,
        };
        let df = params.d as f64;
        let mass = sphere_volume(params.d)
            * integrate_half_line(
                |r| if r == 0.0 { 0.0 } else { out.value(r) * r.powf(df - 1.0 - params.gamma) },
                QuadOptions::tight(),
            )?
            .value;
        out.scale = mass_star(params)? / mass;
        Ok(out)
    }
}

impl RadialProfile for PerturbedBarenblatt {
    fn value(&self, r: f64) -> f64 {
        let b = (1.0 + r.powf(self.q)).powf(1.0 / (self.m - 1.0));
        self.scale * b * (1.0 + self.amplitude * (-(r / self.width).powi(2)).exp())
    }
    fn derivative(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let e = 1.0 / (self.m - 1.0);
        let base = 1.0 + r.powf(self.q);
        let b = base.powf(e);
        let db = e * base.powf(e - 1.0) * self.q * r.powf(self.q - 1.0);
        let g = (-(r / self.width).powi(2)).exp();
        let bump = 1.0 + self.amplitude * g;
        let dbump = self.amplitude * g * (-2.0 * r / (self.width * self.width));
        self.scale * (db * bump + b * dbump)
    }
}
