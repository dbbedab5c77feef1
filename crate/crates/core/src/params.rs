//! Parameter validation and the closed-form derived scalars.
//!
//! Everything downstream reads `α`, `n`, `δ`, `θ` from [`Derived`]; nothing
//! else recomputes them.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack used for the closed edges `β = ((d−2)/d)γ` and `p = p★`.
const EDGE_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parameters {
    pub d: u32,
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
}

impl Parameters {
    pub fn new(d: u32, beta: f64, gamma: f64, p: f64) -> Self {
        Self { d, beta, gamma, p }
    }

    fn dim(&self) -> f64 {
        self.d as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    DimensionAtLeastTwo,
    GammaBelowDimension,
    BetaAboveGammaMinusTwo,
    BetaBelowUpperEdge,
    PAboveOne,
    PAtMostCritical,
    TwoDimBetaNegative,
    TwoDimPBelowCritical,
}

impl Constraint {
    pub fn describe(self) -> &'static str {
        match self {
            Constraint::DimensionAtLeastTwo => "d >= 2",
            Constraint::GammaBelowDimension => "gamma < d",
            Constraint::BetaAboveGammaMinusTwo => "beta > gamma - 2",
            Constraint::BetaBelowUpperEdge => "beta <= ((d-2)/d) gamma",
            Constraint::PAboveOne => "p > 1",
            Constraint::PAtMostCritical => "p <= p_star",
            Constraint::TwoDimBetaNegative => "d = 2 requires beta < 0",
            Constraint::TwoDimPBelowCritical => "d = 2 requires p < p_star",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub p_star: f64,
    pub violations: Vec<Violation>,
}

impl AdmissibilityReport {
    pub fn messages(&self) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| format!("violates {}: {}", v.constraint.describe(), v.detail))
            .collect()
    }
}

/// `p★ = (d−γ)/(d−2−β)`, `+∞` when the denominator is not positive.
pub fn p_star(d: u32, beta: f64, gamma: f64) -> f64 {
    let den = d as f64 - 2.0 - beta;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        (d as f64 - gamma) / den
    }
}

fn check_finite(params: &Parameters) -> Result<()> {
    if !params.beta.is_finite() {
        return Err(Error::NonFinite("beta"));
    }
    if !params.gamma.is_finite() {
        return Err(Error::NonFinite("gamma"));
    }
    if !params.p.is_finite() {
        return Err(Error::NonFinite("p"));
    }
    Ok(())
}

pub fn validate(params: &Parameters) -> Result<AdmissibilityReport> {
    check_finite(params)?;
    let Parameters { d, beta, gamma, p } = *params;
    let df = params.dim();
    let mut violations = Vec::new();
    let mut push = |constraint, detail: String| violations.push(Violation { constraint, detail });

    if d < 2 {
        push(Constraint::DimensionAtLeastTwo, format!("d = {d}"));
    }
    if gamma >= df {
        push(Constraint::GammaBelowDimension, format!("gamma = {gamma}, d = {d}"));
    }
    if beta <= gamma - 2.0 {
        push(
            Constraint::BetaAboveGammaMinusTwo,
            format!("beta = {beta}, gamma - 2 = {}", gamma - 2.0),
        );
    }
    let edge = (df - 2.0) / df * gamma;
    let on_or_below_edge = beta <= edge + EDGE_SLACK * edge.abs().max(1.0);
    if d == 2 {
        if beta >= 0.0 {
            push(Constraint::TwoDimBetaNegative, format!("beta = {beta}"));
        }
    } else if !on_or_below_edge {
        push(
            Constraint::BetaBelowUpperEdge,
            format!("beta = {beta}, ((d-2)/d) gamma = {edge}"),
        );
    }

    let ps = p_star(d, beta, gamma);
    if p <= 1.0 {
        push(Constraint::PAboveOne, format!("p = {p}"));
    }
    if d == 2 {
        if p >= ps {
            push(Constraint::TwoDimPBelowCritical, format!("p = {p}, p_star = {ps}"));
        }
    } else if p > ps * (1.0 + EDGE_SLACK) {
        push(Constraint::PAtMostCritical, format!("p = {p}, p_star = {ps}"));
    }

    Ok(AdmissibilityReport {
        admissible: violations.is_empty(),
        p_star: ps,
        violations,
    })
}

pub fn require_admissible(params: &Parameters) -> Result<()> {
    let report = validate(params)?;
    if report.admissible {
        Ok(())
    } else {
        Err(Error::Inadmissible(report.messages()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub alpha: f64,
    pub n: f64,
    pub m: f64,
    pub delta: f64,
    pub theta: f64,
    pub zeta: f64,
    pub p_star: f64,
    pub m1: f64,
    pub mc: f64,
    pub rho: f64,
    pub mu_exp: f64,
}

pub fn alpha_of(beta: f64, gamma: f64) -> f64 {
    1.0 + (beta - gamma) / 2.0
}

pub fn n_of(d: u32, beta: f64, gamma: f64) -> f64 {
    2.0 * (d as f64 - gamma) / (2.0 + beta - gamma)
}

pub fn theta_of(d: u32, beta: f64, gamma: f64, p: f64) -> f64 {
    let df = d as f64;
    (df - gamma) * (p - 1.0)
        / (p * (df + 2.0 + beta - 2.0 * gamma - p * (df - 2.0 - beta)))
}

pub fn zeta_of(d: u32, beta: f64, gamma: f64, p: f64) -> f64 {
    let theta = theta_of(d, beta, gamma, p);
    theta / 2.0 + (1.0 - theta) / (p + 1.0) - 1.0 / (2.0 * p)
}

/// Closed forms without the admissibility check. Callers that need the
/// formulas outside the admissible cone (inversion symmetry) use this.
pub fn derive_unchecked(params: &Parameters) -> Derived {
    let Parameters { d, beta, gamma, p } = *params;
    let df = params.dim();
    let alpha = alpha_of(beta, gamma);
    let n = n_of(d, beta, gamma);
    let m = (p + 1.0) / (2.0 * p);
    let delta = 2.0 * p / (p - 1.0);
    let theta = theta_of(d, beta, gamma, p);
    let zeta = zeta_of(d, beta, gamma, p);
    let m1 = (2.0 * df - 2.0 - beta - gamma) / (2.0 * (df - gamma));
    let mc = (df - 2.0 - beta) / (df - gamma);
    let rho = 1.0 / ((df - gamma) * (m - mc));
    let mu_exp = 1.0 / (1.0 / (m - 1.0) + n / 2.0);
    Derived {
        alpha,
        n,
        m,
        delta,
        theta,
        zeta,
        p_star: p_star(d, beta, gamma),
        m1,
        mc,
        rho,
        mu_exp,
    }
}

pub fn derive(params: &Parameters) -> Result<Derived> {
    require_admissible(params)?;
    Ok(derive_unchecked(params))
}

/// `(β, γ) ↦ (2(d−2)−β, 2d−γ)`.
pub fn inversion_dual(beta: f64, gamma: f64, d: u32) -> (f64, f64) {
    let df = d as f64;
    (2.0 * (df - 2.0) - beta, 2.0 * df - gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CknDelExponents {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

pub fn ckn_del_map(params: &Parameters) -> Result<CknDelExponents> {
    require_admissible(params)?;
    let q = 2.0 * p_star(params.d, params.beta, params.gamma);
    Ok(CknDelExponents {
        a: params.beta / 2.0,
        b: params.gamma / q,
        q,
    })
}
