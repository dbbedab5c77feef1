//! Sphere volume, Barenblatt mass, mass scaling, the radial optimal
//! constants and the coefficients of the `ℋ` functional.
//!
//! Conventions: `‖f‖_{q,d−n}^q = σ_d ∫ |f(s)|^q s^{n−1} ds` for radial `f`
//! of `s`, and `|D_α f|² = α² f'²` for radial `f`.

use serde::Serialize;

pub use crate::gamma::log_gamma;
use crate::error::{Error, Result};
use crate::params::{derive, Derived, Parameters};
use crate::quad::{integrate_half_line, Estimate, QuadOptions};
use crate::radial::moment;

pub fn sphere_volume(d: u32) -> f64 {
    let df = d as f64;
    // d ≥ 1; Γ(d/2) is finite and positive
    let lg = log_gamma(df / 2.0).expect("d >= 1");
    2.0 * (0.5 * df * std::f64::consts::PI.ln() - lg).exp()
}

/// `ln ∫_0^∞ s^{2a−1} (1+s²)^{−b} ds = ln[Γ(a)Γ(b−a)/(2Γ(b))]`.
fn ln_beta_moment(a: f64, b: f64) -> Result<f64> {
    if a <= 0.0 || b - a <= 0.0 {
        return Err(Error::GammaPole(format!(
            "Gamma(a)Gamma(b-a) with a = {a}, b - a = {}",
            b - a
        )));
    }
    Ok(log_gamma(a)? + log_gamma(b - a)? - log_gamma(b)? - std::f64::consts::LN_2)
}

/// `𝖢 = ∫(1+s²)^{−δ} s^{n−1} ds`.
fn integral_c(der: &Derived) -> Result<f64> {
    Ok(ln_beta_moment(der.n / 2.0, der.delta)?.exp())
}

pub fn mass_star(params: &Parameters) -> Result<f64> {
    let der = derive(params)?;
    Ok(sphere_volume(params.d) / der.alpha * integral_c(&der)?)
}

/// `∫ (C + |x|^{2+β−γ})^{1/(m−1)} |x|^{−γ} dx`, integrated in `r`.
pub fn barenblatt_mass_quadrature(params: &Parameters, c: f64) -> Result<Estimate> {
    let der = derive(params)?;
    let Parameters { d, beta, gamma, .. } = *params;
    let q = 2.0 + beta - gamma;
    let e = 1.0 / (der.m - 1.0);
    let sig = sphere_volume(d);
    let est = integrate_half_line(
        |r: f64| {
            if r == 0.0 {
                0.0
            } else {
                (c + r.powf(q)).powf(e) * r.powf(d as f64 - 1.0 - gamma)
            }
        },
        QuadOptions::tight(),
    )?;
    Ok(Estimate {
        value: sig * est.value,
        error: sig * est.error,
        evaluations: est.evaluations,
    })
}

pub fn mass_star_quadrature(params: &Parameters) -> Result<Estimate> {
    barenblatt_mass_quadrature(params, 1.0)
}

/// `C_M = (M/M★)^μ`.
pub fn c_m(mass: f64, params: &Parameters) -> Result<f64> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    let der = derive(params)?;
    Ok((mass / mass_star(params)?).powf(der.mu_exp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `(C_M + r^{2+β−γ})^{1/(m−1)}` in the physical radius.
    BarenblattWeighted,
    /// `(1 + s²)^{1/(m−1)}` in `s = r^α`.
    BarenblattStandard,
    /// `(1 + s²)^{−1/(p−1)}` in `s`.
    VStar,
    /// `(1 + r^{2+β−γ})^{−1/(p−1)}` in `r`.
    WStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub c_m: f64,
}

impl ProfileSpec {
    pub fn new(kind: ProfileKind) -> Self {
        Self { kind, c_m: 1.0 }
    }

    pub fn with_c_m(kind: ProfileKind, c_m: f64) -> Self {
        Self { kind, c_m }
    }

    /// Value at radius `x` (physical `r` or `s` depending on the kind).
    pub fn eval(&self, params: &Parameters, x: f64) -> f64 {
        let Parameters { beta, gamma, p, .. } = *params;
        let m = (p + 1.0) / (2.0 * p);
        let q = 2.0 + beta - gamma;
        match self.kind {
            ProfileKind::BarenblattWeighted => (self.c_m + x.powf(q)).powf(1.0 / (m - 1.0)),
            ProfileKind::BarenblattStandard => (1.0 + x * x).powf(1.0 / (m - 1.0)),
            ProfileKind::VStar => (1.0 + x * x).powf(-1.0 / (p - 1.0)),
            ProfileKind::WStar => (1.0 + x.powf(q)).powf(-1.0 / (p - 1.0)),
        }
    }
}

/// The three `v★` norms raised to their natural powers:
/// `‖D_α v★‖²`, `‖v★‖_{p+1}^{p+1}`, `‖v★‖_{2p}^{2p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VStarNorms {
    pub gradient_sq: f64,
    pub lp1: f64,
    pub l2p: f64,
}

pub fn v_star_norms_closed(params: &Parameters) -> Result<VStarNorms> {
    let der = derive(params)?;
    let sig = sphere_volume(params.d);
    let (n, p) = (der.n, params.p);
    let c = integral_c(&der)?;
    let a = c * 4.0 * n / ((p - 1.0) * (n + 2.0 - p * (n - 2.0)));
    let b = a * (p * p - 1.0) / (2.0 * n);
    Ok(VStarNorms {
        gradient_sq: sig * der.alpha * der.alpha * a,
        lp1: sig * b,
        l2p: sig * c,
    })
}

pub fn v_star_norms_quadrature(params: &Parameters) -> Result<VStarNorms> {
    let der = derive(params)?;
    let sig = sphere_volume(params.d);
    let p = params.p;
    let e = -1.0 / (p - 1.0);
    let v = |s: f64| (1.0 + s * s).powf(e);
    let dv = |s: f64| e * (1.0 + s * s).powf(e - 1.0) * 2.0 * s;
    let opts = QuadOptions::tight();
    let a = moment(|s| dv(s).powi(2), der.n, opts)?.value;
    let b = moment(|s| v(s).powf(p + 1.0), der.n, opts)?.value;
    let c = moment(|s| v(s).powf(2.0 * p), der.n, opts)?.value;
    Ok(VStarNorms {
        gradient_sq: sig * der.alpha * der.alpha * a,
        lp1: sig * b,
        l2p: sig * c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialConstants {
    pub k_star: f64,
    pub c_star: f64,
}

fn k_from_norms(norms: &VStarNorms, der: &Derived, p: f64) -> f64 {
    norms.l2p.powf(1.0 / (2.0 * p))
        / (norms.gradient_sq.powf(der.theta / 2.0) * norms.lp1.powf((1.0 - der.theta) / (p + 1.0)))
}

pub fn best_radial_constant(params: &Parameters) -> Result<RadialConstants> {
    let der = derive(params)?;
    let (n, p, th) = (der.n, params.p, der.theta);
    let den = n + 2.0 - p * (n - 2.0);
    if den <= 0.0 {
        return Err(Error::GammaPole(format!("n + 2 - p(n - 2) = {den} <= 0")));
    }
    let sc = sphere_volume(params.d) * integral_c(&der)?;
    let inv_k = der.alpha.powf(th)
        * (4.0 * n / ((p - 1.0) * den)).powf(th / 2.0)
        * (2.0 * (p + 1.0) / den).powf((1.0 - th) / (p + 1.0))
        * sc.powf(der.zeta);
    let k_star = 1.0 / inv_k;
    Ok(RadialConstants {
        k_star,
        c_star: der.alpha.powf(der.zeta) * k_star,
    })
}

pub fn best_radial_constant_quadrature(params: &Parameters) -> Result<RadialConstants> {
    let der = derive(params)?;
    let norms = v_star_norms_quadrature(params)?;
    let k_star = k_from_norms(&norms, &der, params.p);
    Ok(RadialConstants {
        k_star,
        c_star: der.alpha.powf(der.zeta) * k_star,
    })
}

/// `𝖺 = θ/‖D_α v★‖²`, the factor between `Q` and the reported `(2/𝖺)Q`.
pub fn q_normalization(params: &Parameters) -> Result<f64> {
    let der = derive(params)?;
    Ok(der.theta / v_star_norms_closed(params)?.gradient_sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    /// `k = (n+2−p(n−2))/(n−p(n−4))`.
    pub k_exp: f64,
    pub ab: f64,
    pub ac: f64,
}

pub fn h_coefficients(params: &Parameters) -> Result<HCoefficients> {
    let der = derive(params)?;
    let (n, p, a) = (der.n, params.p, der.alpha);
    let den = n - p * (n - 4.0);
    let top = n + 2.0 - p * (n - 2.0);
    if den <= 0.0 {
        return Err(Error::InvalidArgument(format!("n - p(n - 4) = {den} <= 0")));
    }
    if top < 0.0 {
        return Err(Error::InvalidArgument(format!("n + 2 - p(n - 2) = {top} < 0")));
    }
    let k = top / den;
    let norm_2p = v_star_norms_closed(params)?.l2p.powf(1.0 / (2.0 * p));
    let c_coef = k * norm_2p.powf(-4.0 * p * (p - 1.0) / den);
    Ok(HCoefficients {
        a_coef: (p - 1.0).powi(2) / (4.0 * p * a * a) * c_coef,
        b_coef: (n - p * (n - 2.0)) / (2.0 * p) * c_coef,
        c_coef,
        k_exp: k,
        ab: 2.0 * n / (p * p - 1.0),
        ac: 4.0 * n / (p - 1.0) / top,
    })
}

/// `𝖠, 𝖡, 𝖢` by quadrature (no `σ_d`, no `α²`).
pub fn moment_integrals_quadrature(params: &Parameters) -> Result<[Estimate; 3]> {
    let der = derive(params)?;
    let p = params.p;
    let opts = QuadOptions::tight();
    let n = der.n;
    let a = moment(
        |s| 4.0 / (p - 1.0).powi(2) * (1.0 + s * s).powf(-2.0 * p / (p - 1.0)) * s * s,
        n,
        opts,
    )?;
    let b = moment(|s| (1.0 + s * s).powf(-(p + 1.0) / (p - 1.0)), n, opts)?;
    let c = moment(|s| (1.0 + s * s).powf(-2.0 * p / (p - 1.0)), n, opts)?;
    Ok([a, b, c])
}

/// `(∫ |f(|x|)|^q |x|^{−γ} dx)^{1/q}` for radial `f` of the physical radius.
pub fn weighted_lq_norm<F: Fn(f64) -> f64>(f: F, q: f64, gamma: f64, d: u32) -> Result<f64> {
    let est = integrate_half_line(
        |r: f64| {
            if r == 0.0 {
                0.0
            } else {
                f(r).abs().powf(q) * r.powf(d as f64 - 1.0 - gamma)
            }
        },
        QuadOptions::tight(),
    )?;
    Ok((sphere_volume(d) * est.value).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const P1: Parameters = Parameters { d: 5, beta: 0.0, gamma: 0.0, p: 1.25 };
    const P2: Parameters = Parameters { d: 5, beta: -2.0, gamma: -2.0, p: 1.2 };

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sphere_volumes() {
        assert!(rel(sphere_volume(2), 2.0 * PI) < 1e-15);
        assert!(rel(sphere_volume(3), 4.0 * PI) < 1e-15);
        assert!(rel(sphere_volume(5), 8.0 * PI * PI / 3.0) < 1e-14);
        assert!(rel(sphere_volume(1), 2.0) < 1e-15);
    }

    #[test]
    fn mass_star_p1() {
        let m = mass_star(&P1).unwrap();
        // (8π²/3)·Γ(5/2)Γ(15/2)/(2Γ(10))
        let c = (0.75 * PI.sqrt()) * 1871.254_305_797_788_4 / (2.0 * 362_880.0);
        assert!(rel(m, 8.0 * PI * PI / 3.0 * c) < 1e-13);
        assert!((m - 0.0902).abs() < 5e-4);
        let q = mass_star_quadrature(&P1).unwrap();
        assert!(rel(q.value, m) < 1e-10);
    }

    #[test]
    fn c_m_values() {
        let ms = mass_star(&P1).unwrap();
        assert!(rel(c_m(ms, &P1).unwrap(), 1.0) < 1e-15);
        assert!(rel(c_m(2.0 * ms, &P1).unwrap(), 2f64.powf(-2.0 / 15.0)) < 1e-13);
        assert!(c_m(0.0, &P1).is_err());
        assert!(c_m(-1.0, &P1).is_err());
        // the returned constant reproduces the mass
        let ms2 = mass_star(&P2).unwrap();
        let c2 = c_m(3.0 * ms2, &P2).unwrap();
        let got = barenblatt_mass_quadrature(&P2, c2).unwrap().value;
        assert!(rel(got, 3.0 * ms2) < 1e-6);
    }

    #[test]
    fn profile_change_of_variables() {
        let params = Parameters::new(5, -0.5, 1.0, 1.1);
        let alpha: f64 = 0.25;
        let bw = ProfileSpec::new(ProfileKind::BarenblattWeighted);
        let bs = ProfileSpec::new(ProfileKind::BarenblattStandard);
        let vs = ProfileSpec::new(ProfileKind::VStar);
        let ws = ProfileSpec::new(ProfileKind::WStar);
        for &s in &[0.1f64, 0.7, 1.0, 3.0] {
            let r = s.powf(1.0 / alpha);
            assert!(rel(bs.eval(&params, s), bw.eval(&params, r)) < 1e-13);
            assert!(rel(vs.eval(&params, s), ws.eval(&params, r)) < 1e-13);
            // w★ = 𝔅^{m−1/2}
            let m = 21.0 / 22.0;
            assert!(rel(ws.eval(&params, r), bw.eval(&params, r).powf(m - 0.5)) < 1e-12);
        }
    }

    #[test]
    fn radial_constant_matches_quadrature() {
        for params in [P1, P2, Parameters::new(5, -0.5, 1.0, 1.1)] {
            let a = best_radial_constant(&params).unwrap();
            let b = best_radial_constant_quadrature(&params).unwrap();
            assert!(rel(a.k_star, b.k_star) < 1e-9, "{params:?}: {a:?} vs {b:?}");
        }
        let k = best_radial_constant(&P1).unwrap().k_star;
        assert!((k - 0.640_877_414_623_07).abs() < 1e-10);
    }

    #[test]
    fn h_coefficient_ratios() {
        let h = h_coefficients(&P1).unwrap();
        assert!(rel(h.ab, 160.0 / 9.0) < 1e-14);
        assert!(rel(h.ac, 320.0 / 13.0) < 1e-14);
        let [a, b, c] = moment_integrals_quadrature(&P1).unwrap();
        assert!(rel(a.value / b.value, h.ab) < 1e-10);
        assert!(rel(a.value / c.value, h.ac) < 1e-10);
    }

    #[test]
    fn moment_integral_identities() {
        for params in [P1, P2] {
            let p = params.p;
            let n = derive(&params).unwrap().n;
            let [a, b, c] = moment_integrals_quadrature(&params).unwrap();
            let (a, b, c) = (a.value, b.value, c.value);
            assert!(rel(0.25 * (p - 1.0).powi(2) * a, b - c) < 1e-10);
            assert!(rel(b, c + n / 2.0 * (p - 1.0) / (p + 1.0) * b) < 1e-10);
        }
    }

    #[test]
    fn weighted_norm_of_barenblatt_is_mass() {
        let ms = mass_star(&P2).unwrap();
        let bw = ProfileSpec::new(ProfileKind::BarenblattWeighted);
        let n1 = weighted_lq_norm(|r| bw.eval(&P2, r), 1.0, P2.gamma, 5).unwrap();
        assert!(rel(n1, ms) < 1e-10);
    }
}
