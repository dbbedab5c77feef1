//! The second-variation form around the radial optimizer, in the variable
//! `s = r^α` with measure `σ_d s^{n−1} ds`.
//!
//! `(2/𝖺)Q[g] = ‖D_α g‖² + b∫g²/(1+s²) − c∫g²/(1+s²)²`; for `ℓ ≥ 1` the
//! energy carries `μ_ℓ g²/s²` (spherical harmonic with unit mean square).

use serde::Serialize;

use crate::constants::{h_coefficients, sphere_volume};
use crate::error::{Error, Result};
use crate::params::{derive, Derived, Parameters};
use crate::quad::{integrate_half_line, integrate_pieces, integrate_to_infinity, Estimate, QuadOptions};
use crate::radial::RadialProfile;
use crate::spectral::{kappa_with, spectral_report, thresholds};

pub struct TestFunction {
    pub radial_part: Box<dyn RadialProfile + Sync>,
    pub ell: u32,
}

impl TestFunction {
    pub fn new(radial_part: impl RadialProfile + Sync + 'static, ell: u32) -> Self {
        Self {
            radial_part: Box::new(radial_part),
            ell,
        }
    }
}

/// `g₀,₁ = (1+s²)^{−δ/2} s^η`, `ℓ = 1`.
#[derive(Debug, Clone, Copy)]
pub struct NonradialMode {
    pub delta: f64,
    pub eta: f64,
}

impl RadialProfile for NonradialMode {
    fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.ln_envelope(s).exp()
    }
    fn derivative(&self, s: f64) -> f64 {
        if s == 0.0 {
            return if self.eta == 1.0 { 1.0 } else { 0.0 };
        }
        self.value(s) * self.scaled(s).1
    }
    fn ln_envelope(&self, s: f64) -> f64 {
        self.eta * s.ln() - 0.5 * self.delta * s.mul_add(s, 1.0).ln()
    }
    fn scaled(&self, s: f64) -> (f64, f64) {
        (1.0, self.eta / s - self.delta * s / (1.0 + s * s))
    }
}

pub fn nonradial_mode(params: &Parameters) -> Result<TestFunction> {
    let der = derive(params)?;
    let eta = spectral_report(params)?.eta;
    Ok(TestFunction::new(NonradialMode { delta: der.delta, eta }, 1))
}

/// `p(2+β−γ)/(p−1)² · [d−γ−p(d−2−β)]` and `p(2p−1)(2+β−γ)²/(p−1)²`.
pub fn form_coefficients(params: &Parameters) -> (f64, f64) {
    let Parameters { d, beta, gamma, p } = *params;
    let df = d as f64;
    let w = 2.0 + beta - gamma;
    let q = (p - 1.0).powi(2);
    (
        p * w / q * (df - gamma - p * (df - 2.0 - beta)),
        p * (2.0 * p - 1.0) * w * w / q,
    )
}

/// The same coefficients rebuilt from `𝖠/𝖡`, `𝖠/𝖢` and `θ`.
pub fn form_coefficients_from_ratios(params: &Parameters) -> Result<(f64, f64)> {
    let der = derive(params)?;
    let h = h_coefficients(params)?;
    let (p, th, a2) = (params.p, der.theta, der.alpha * der.alpha);
    Ok((p * (1.0 - th) / th * h.ab * a2, (2.0 * p - 1.0) / th * h.ac * a2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QValue {
    pub value: f64,
    pub tolerance: f64,
    /// `‖D_α g‖²`, `∫g²/(1+s²)`, `∫g²/(1+s²)²`.
    pub terms: [f64; 3],
    /// All values are in units of `e^{ln_scale}`; nonzero only when the
    /// unscaled integrals leave the floating-point range.
    pub ln_scale: f64,
}

/// Where the integrands of a profile live: a common shift of the log of
/// `E(s)² s^{n−1}` and, for sharply peaked envelopes (large `n` and `δ`),
/// break points bracketing the peak.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    shift: f64,
    window: Option<Vec<f64>>,
}

// drop from the peak, in log units, beyond which the integrand is negligible
const PEAK_DROP: f64 = 50.0;

fn layout(prof: &dyn RadialProfile, n: f64) -> Layout {
    let plain = Layout { shift: 0.0, window: None };
    // log of E² s^{n−1} · s in t = ln s
    let lw = |t: f64| 2.0 * prof.ln_envelope(t.exp()) + n * t;
    let (t0, t1, k) = (-8.0 * std::f64::consts::LN_10, 8.0 * std::f64::consts::LN_10, 640);
    let ts: Vec<f64> = (0..=k).map(|i| t0 + (t1 - t0) * i as f64 / k as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| lw(t)).collect();
    let Some(imax) = (0..=k).filter(|&i| vals[i].is_finite()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])) else {
        return plain;
    };
    if imax == 0 || imax == k {
        return plain;
    }
    // golden-section refinement of the peak
    let (mut a, mut b) = (ts[imax - 1], ts[imax + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if lw(c) > lw(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let tp = 0.5 * (a + b);
    let lmax = lw(tp);
    let level = lmax - PEAK_DROP;
    let edge = |mut inner: f64, mut outer: f64| {
        if lw(outer) >= level {
            return None;
        }
        for _ in 0..100 {
            let mid = 0.5 * (inner + outer);
            if lw(mid) >= level {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        Some(outer)
    };
    let shift = if lmax.abs() > 300.0 { lmax } else { 0.0 };
    let (Some(tl), Some(tr)) = (edge(tp, t0), edge(tp, t1)) else {
        return Layout { shift, window: None };
    };
    if tr - tl > 2.0 {
        return Layout { shift, window: None };
    }
    let pieces = 16;
    let window = (0..=pieces)
        .map(|i| (tl + (tr - tl) * i as f64 / pieces as f64).exp())
        .collect::<Vec<_>>();
    Layout {
        shift,
        window: Some(std::iter::once(0.0).chain(window).collect()),
    }
}

// local power law of r·e^{l} between s and 10s, in logs
fn split_slope<F: Fn(f64) -> (f64, f64)>(f: &F, s: f64) -> Option<f64> {
    let (la, ra) = f(s);
    let (lb, rb) = f(10.0 * s);
    let a = la + ra.abs().ln();
    let b = lb + rb.abs().ln();
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return None;
    }
    if !a.is_finite() || !b.is_finite() {
        return Some(if b > a { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    Some((b - a) / std::f64::consts::LN_10)
}

fn check_split<F: Fn(f64) -> (f64, f64)>(f: &F, which: &'static str) -> Result<()> {
    if let Some(k) = split_slope(f, 1e4) {
        if k >= -1.0 - 1e-3 {
            return Err(Error::DivergentTail { which, location: "infinity", exponent: k });
        }
    }
    if let Some(k) = split_slope(f, 1e-7) {
        if k <= -1.0 + 1e-3 {
            return Err(Error::DivergentTail { which, location: "origin", exponent: k });
        }
    }
    Ok(())
}

// σ_d ∫ r(s) e^{l(s) − shift} ds, where f gives (l, r) with l = ln(E² s^{n−1})
fn split_moment<F: Fn(f64) -> (f64, f64)>(
    f: F,
    lay: &Layout,
    which: &'static str,
    sd: f64,
    opts: QuadOptions,
) -> Result<Estimate> {
    check_split(&f, which)?;
    let g = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let (l, r) = f(s);
        if r == 0.0 {
            0.0
        } else {
            r * (l - lay.shift).exp()
        }
    };
    let est = match &lay.window {
        None => integrate_half_line(&g, opts)?,
        Some(breaks) => {
            let head = integrate_pieces(&g, breaks, opts)?;
            let tail_opts = QuadOptions {
                abs_tol: opts.abs_tol.max(opts.rel_tol * head.value.abs()),
                ..opts
            };
            let tail = integrate_to_infinity(&g, *breaks.last().unwrap(), tail_opts)?;
            Estimate {
                value: head.value + tail.value,
                error: head.error + tail.error,
                evaluations: head.evaluations + tail.evaluations,
            }
        }
    };
    if !est.value.is_finite() {
        return Err(Error::NonFinite(which));
    }
    Ok(Estimate {
        value: sd * est.value,
        error: sd * est.error,
        evaluations: est.evaluations,
    })
}

// integrands that integrate to ~0 by cancellation: absolute tolerance
// relative to ∫|F|
fn split_moment_signed<F: Fn(f64) -> (f64, f64)>(f: F, lay: &Layout, which: &'static str, sd: f64) -> Result<Estimate> {
    let mag = split_moment(
        |s| {
            let (l, r) = f(s);
            (l, r.abs())
        },
        lay,
        which,
        1.0,
        QuadOptions::default(),
    )?
    .value;
    let opts = QuadOptions {
        abs_tol: 1e-12 * mag,
        ..QuadOptions::tight()
    };
    split_moment(f, lay, which, sd, opts)
}

fn ln_weight(prof: &dyn RadialProfile, n: f64, s: f64) -> f64 {
    2.0 * prof.ln_envelope(s) + (n - 1.0) * s.ln()
}

fn energy(g: &TestFunction, der: &Derived, d: u32, lay: &Layout) -> Result<Estimate> {
    let mu = g.ell as f64 * (g.ell as f64 + d as f64 - 2.0);
    let a2 = der.alpha * der.alpha;
    let prof = &*g.radial_part;
    split_moment(
        |s| {
            let (v, dv) = prof.scaled(s);
            let ang = if mu == 0.0 { 0.0 } else { mu * v * v / (s * s) };
            (ln_weight(prof, der.n, s), a2 * dv * dv + ang)
        },
        lay,
        "gradient energy",
        sphere_volume(d),
        QuadOptions::tight(),
    )
}

fn potential(g: &TestFunction, der: &Derived, d: u32, lay: &Layout, power: i32, which: &'static str) -> Result<Estimate> {
    let prof = &*g.radial_part;
    split_moment(
        |s| {
            let (v, _) = prof.scaled(s);
            (ln_weight(prof, der.n, s), v * v / (1.0 + s * s).powi(power))
        },
        lay,
        which,
        sphere_volume(d),
        QuadOptions::tight(),
    )
}

/// Combined error of `Σ c_i x_i`: quadrature estimates in quadrature plus a
/// rounding floor.
fn combine(coefs: &[f64], parts: &[Estimate]) -> f64 {
    let q: f64 = coefs
        .iter()
        .zip(parts)
        .map(|(c, e)| (c * e.error).powi(2))
        .sum::<f64>()
        .sqrt();
    let mag: f64 = coefs.iter().zip(parts).map(|(c, e)| (c * e.value).abs()).sum();
    q + 64.0 * f64::EPSILON * mag
}

/// `(2/𝖺)Q[g]`.
pub fn q_eval(g: &TestFunction, params: &Parameters) -> Result<QValue> {
    let der = derive(params)?;
    let (b, c) = form_coefficients(params);
    let lay = layout(&*g.radial_part, der.n);
    let e = energy(g, &der, params.d, &lay)?;
    let i1 = potential(g, &der, params.d, &lay, 1, "first potential")?;
    let i2 = potential(g, &der, params.d, &lay, 2, "second potential")?;
    let coefs = [1.0, b, -c];
    let parts = [e, i1, i2];
    Ok(QValue {
        value: e.value + b * i1.value - c * i2.value,
        tolerance: combine(&coefs, &parts),
        terms: [e.value, i1.value, i2.value],
        ln_scale: lay.shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubstitutionRoute {
    /// `∫|D_α f|²(1+s²)^{−δ} − Λ∫f²(1+s²)^{−δ−1}` with `f = (1+s²)^{δ/2}g`.
    pub hardy_poincare: f64,
    /// `b − κ_Λ`.
    pub remainder_coef: f64,
    pub first_potential: f64,
    pub value: f64,
    pub tolerance: f64,
    pub ln_scale: f64,
}

/// `(2/𝖺)Q[g] = HP(f; Λ) + (b − κ_Λ)∫g²/(1+s²)` for any `Λ`.
pub fn substitution_route(g: &TestFunction, params: &Parameters, lambda: f64) -> Result<SubstitutionRoute> {
    let der = derive(params)?;
    let d = params.d;
    let (b, _) = form_coefficients(params);
    let mu = g.ell as f64 * (g.ell as f64 + d as f64 - 2.0);
    let (a2, delta) = (der.alpha * der.alpha, der.delta);
    let prof = &*g.radial_part;
    let lay = layout(prof, der.n);
    // |D_α f|²(1+s²)^{−δ} = α²(g' + δsg/(1+s²))² + μ g²/s² and
    // f²(1+s²)^{−δ−1} = g²/(1+s²), so only the scaled pair enters
    let hp = split_moment_signed(
        |s| {
            let w = 1.0 + s * s;
            let (v, dv) = prof.scaled(s);
            let df = dv + delta * s * v / w;
            let ang = if mu == 0.0 { 0.0 } else { mu * v * v / (s * s) };
            (ln_weight(prof, der.n, s), a2 * df * df + ang - lambda * v * v / w)
        },
        &lay,
        "Hardy-Poincare form",
        sphere_volume(d),
    )?;
    let i1 = potential(g, &der, d, &lay, 1, "first potential")?;
    let coef = b - kappa_with(params, lambda);
    Ok(SubstitutionRoute {
        hardy_poincare: hp.value,
        remainder_coef: coef,
        first_potential: i1.value,
        value: hp.value + coef * i1.value,
        tolerance: combine(&[1.0, coef], &[hp, i1]),
        ln_scale: lay.shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub q_value: f64,
    pub tolerance: f64,
    pub breaking: bool,
    /// `q_value` and `tolerance` are in units of `e^{ln_scale}`.
    pub ln_scale: f64,
    /// `Λ₀,₁ < Λ★`.
    pub spectral_breaking: bool,
}

impl Certificate {
    pub fn consistent(&self) -> bool {
        self.breaking == self.spectral_breaking
    }
}

fn require_mode(params: &Parameters) -> Result<()> {
    let der = derive(params)?;
    let t = thresholds(params)?;
    if der.delta <= t.delta4 {
        return Err(Error::CertificateUnavailable(format!(
            "delta = {} <= delta4 = {}: f01 = s^eta is not in the energy space",
            der.delta, t.delta4
        )));
    }
    Ok(())
}

pub fn instability_certificate(params: &Parameters) -> Result<Certificate> {
    require_mode(params)?;
    let rep = spectral_report(params)?;
    let q = q_eval(&nonradial_mode(params)?, params)?;
    let l01 = rep.lambda01.ok_or_else(|| Error::CertificateUnavailable("no nonradial eigenvalue".into()))?;
    Ok(Certificate {
        q_value: q.value,
        tolerance: q.tolerance,
        breaking: q.value < -q.tolerance,
        ln_scale: q.ln_scale,
        spectral_breaking: l01 < rep.lambda_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub direct: f64,
    pub substituted: SubstitutionRoute,
    /// `(Λ₀,₁ − Λ★)∫g²/(1+s²)`: the route with `HP = 0` and `b − κ` in closed form.
    pub closed: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub agree: bool,
}

pub const IDENTITY_TOL: f64 = 1e-6;

pub fn spectral_identity_check(params: &Parameters) -> Result<IdentityCheck> {
    require_mode(params)?;
    let rep = spectral_report(params)?;
    let l01 = rep.lambda01.ok_or_else(|| Error::CertificateUnavailable("no nonradial eigenvalue".into()))?;
    let g = nonradial_mode(params)?;
    let direct = q_eval(&g, params)?;
    let sub = substitution_route(&g, params, l01)?;
    let scale = direct.terms[0].abs().max(direct.value.abs());
    let diff = (direct.value - sub.value).abs();
    let rel_diff = diff / scale;
    let tolerance = (direct.tolerance + sub.tolerance) / scale;
    Ok(IdentityCheck {
        direct: direct.value,
        substituted: sub,
        closed: (l01 - rep.lambda_star) * sub.first_potential,
        rel_diff,
        tolerance,
        agree: rel_diff <= IDENTITY_TOL.max(tolerance),
    })
}
