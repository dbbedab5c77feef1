//! Finite volumes for `w_t = −α² s^{1−n} ∂_s(s^{n−1} w ∂_s(w^{m−1} − s²))`.
//!
//! Cell averages `w_i` at centers `s_i`, face fluxes
//! `G = α² s_f^{n−1} w̄_f (ψ_{i+1} − ψ_i)/(s_{i+1} − s_i)` with `ψ = w^{m−1} − s²`
//! and harmonic-mean `w̄_f`; zero flux at `0` and `S`. Every
//! `(C + s_i²)^{1/(m−1)}` is an exact discrete steady state.
//!
//! Functionals carry `σ_d/α` so that they equal the `x`-space quantities of
//! the corresponding radial `v`.

use serde::Serialize;

use crate::constants::sphere_volume;
use crate::error::{Error, Result};
use crate::params::{derive, Parameters};
use crate::quad::{integrate_to_infinity, QuadOptions};
use crate::sl_oracle::sinh_grid;
use crate::tridiag::solve_tridiagonal;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 40;
const DT_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialState {
    pub params: Parameters,
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    /// `∫_cell s^{n−1} ds`.
    pub volumes: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    #[serde(skip)]
    geom: Geometry,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Geometry {
    alpha: f64,
    m: f64,
    n: f64,
    // α² s_f^{n−1}/(s_{i+1} − s_i) for the N−1 interior faces
    face: Vec<f64>,
}

/// Smallest `S` with `∫_S^∞ ℬ s^{n−1} ≤ 1e−10 ∫_0^∞ ℬ s^{n−1}`, `ℬ = (1+s²)^{1/(m−1)}`.
pub fn mass_tail_domain(params: &Parameters, rel_tail: f64) -> Result<f64> {
    let der = derive(params)?;
    let e = 1.0 / (der.m - 1.0);
    let n = der.n;
    let f = |s: f64| if s == 0.0 { 0.0 } else { (1.0 + s * s).powf(e) * s.powf(n - 1.0) };
    let opts = QuadOptions::default();
    let total = integrate_to_infinity(f, 0.0, opts)?.value;
    let tail = |s: f64| -> Result<f64> { Ok(integrate_to_infinity(f, s, opts)?.value / total) };
    let (mut lo, mut hi) = (1.0, 2.0);
    while tail(hi)? > rel_tail {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidArgument("mass tail does not decay".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > rel_tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Stable `(1+x)^m − 1 − m x`.
pub(crate) fn bregman_unit(x: f64, m: f64) -> f64 {
    if x.abs() < 1e-2 {
        let mut term = m * (m - 1.0) / 2.0 * x * x;
        let mut acc = term;
        for k in 3..=12 {
            term *= (m - (k as f64 - 1.0)) / k as f64 * x;
            acc += term;
        }
        acc
    } else {
        (m * x.ln_1p()).exp_m1() - m * x
    }
}

impl RadialState {
    pub fn from_fn(params: &Parameters, cells: usize, domain: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let der = derive(params)?;
        let edges = sinh_grid(cells, domain)?;
        let n = der.n;
        let centers: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        let volumes: Vec<f64> = edges
            .windows(2)
            .map(|e| (e[1].powf(n) - e[0].powf(n)) / n)
            .collect();
        let a2 = der.alpha * der.alpha;
        let face = (0..cells - 1)
            .map(|i| a2 * edges[i + 1].powf(n - 1.0) / (centers[i + 1] - centers[i]))
            .collect();
        let w: Vec<f64> = centers.iter().map(|&s| f(s)).collect();
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "initial value {} at s = {} is not positive",
                w[i], centers[i]
            )));
        }
        Ok(Self {
            params: *params,
            edges,
            centers,
            volumes,
            w,
            t: 0.0,
            geom: Geometry {
                alpha: der.alpha,
                m: der.m,
                n,
                face,
            },
        })
    }

    pub fn m(&self) -> f64 {
        self.geom.m
    }

    pub fn alpha(&self) -> f64 {
        self.geom.alpha
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    fn measure(&self) -> f64 {
        sphere_volume(self.params.d) / self.geom.alpha
    }

    /// `Σ w_i V_i` without the `σ_d/α` factor.
    pub fn raw_mass(&self) -> f64 {
        neumaier(self.w.iter().zip(&self.volumes).map(|(w, v)| w * v))
    }

    /// `∫ v |x|^{−γ} dx` of the corresponding `v`.
    pub fn mass(&self) -> f64 {
        self.measure() * self.raw_mass()
    }

    /// `C` with `Σ V_i (C + s_i²)^{1/(m−1)} = Σ V_i w_i`.
    pub fn matched_barenblatt_constant(&self) -> Result<f64> {
        let target = self.raw_mass();
        let e = 1.0 / (self.geom.m - 1.0);
        let mass_of = |c: f64| {
            neumaier(
                self.centers
                    .iter()
                    .zip(&self.volumes)
                    .map(|(s, v)| (c + s * s).powf(e) * v),
            )
        };
        // mass decreases in C; bracket in ln C then Newton
        let (mut lo, mut hi) = (1e-3f64, 1e3f64);
        while mass_of(lo) < target {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::InvalidArgument("mass too large for the domain".into()));
            }
        }
        while mass_of(hi) > target {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::InvalidArgument("mass too small".into()));
            }
        }
        let mut c = (lo * hi).sqrt();
        for _ in 0..200 {
            let g = mass_of(c) - target;
            if g > 0.0 {
                lo = c;
            } else {
                hi = c;
            }
            let dg = neumaier(
                self.centers
                    .iter()
                    .zip(&self.volumes)
                    .map(|(s, v)| e * (c + s * s).powf(e - 1.0) * v),
            );
            let mut next = c - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - c).abs() <= 4.0 * f64::EPSILON * c {
                return Ok(next);
            }
            c = next;
        }
        Ok(c)
    }

    pub fn barenblatt_values(&self, c: f64) -> Vec<f64> {
        let e = 1.0 / (self.geom.m - 1.0);
        self.centers.iter().map(|s| (c + s * s).powf(e)).collect()
    }

    /// `(σ_d/α)/(m−1) Σ V_i (w^m − ℬ^m − mℬ^{m−1}(w − ℬ))` against the
    /// matched discrete Barenblatt.
    pub fn free_energy(&self) -> Result<f64> {
        let c = self.matched_barenblatt_constant()?;
        Ok(self.free_energy_against(c))
    }

    pub fn free_energy_against(&self, c: f64) -> f64 {
        let m = self.geom.m;
        let b = self.barenblatt_values(c);
        let sum = neumaier(
            self.w
                .iter()
                .zip(&b)
                .zip(&self.volumes)
                .map(|((w, b), v)| v * b.powf(m) * bregman_unit(w / b - 1.0, m)),
        );
        self.measure() * sum / (m - 1.0)
    }

    fn potential(&self) -> Vec<f64> {
        let m = self.geom.m;
        self.w
            .iter()
            .zip(&self.centers)
            .map(|(w, s)| w.powf(m - 1.0) - s * s)
            .collect()
    }

    /// `(σ_d/α) Σ_f α² s_f^{n−1} w̄_f (Δψ)²/Δs`.
    pub fn fisher_information(&self) -> f64 {
        let psi = self.potential();
        let w = &self.w;
        let sum = neumaier((0..w.len() - 1).map(|i| {
            let mob = harmonic(w[i], w[i + 1]);
            let dpsi = psi[i + 1] - psi[i];
            self.geom.face[i] * mob * dpsi * dpsi
        }));
        self.measure() * sum
    }

    /// One backward-Euler step, Newton on `ln w`. Halves `dt` on failure;
    /// returns the step actually taken.
    pub fn step(&mut self, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let mut h = dt;
        loop {
            match self.try_step(h) {
                Ok(w) => {
                    self.w = w;
                    self.t += h;
                    return Ok(h);
                }
                Err(reason) => {
                    h *= 0.5;
                    if h < DT_MIN {
                        return Err(Error::Newton { t: self.t, reason });
                    }
                }
            }
        }
    }

    fn residual(&self, w: &[f64], old: &[f64], dt: f64) -> Vec<f64> {
        let m = self.geom.m;
        let n = w.len();
        let psi: Vec<f64> = w
            .iter()
            .zip(&self.centers)
            .map(|(w, s)| w.powf(m - 1.0) - s * s)
            .collect();
        let mut r: Vec<f64> = (0..n).map(|i| self.volumes[i] * (w[i] - old[i])).collect();
        for f in 0..n - 1 {
            let g = self.geom.face[f] * harmonic(w[f], w[f + 1]) * (psi[f + 1] - psi[f]);
            r[f] += dt * g;
            r[f + 1] -= dt * g;
        }
        r
    }

    fn scaled_norm(&self, r: &[f64], w: &[f64]) -> f64 {
        r.iter()
            .zip(w.iter().zip(&self.volumes))
            .map(|(r, (w, v))| (r / (w * v)).abs())
            .fold(0.0, f64::max)
    }

    fn try_step(&self, dt: f64) -> std::result::Result<Vec<f64>, String> {
        let m = self.geom.m;
        let n = self.w.len();
        let old = &self.w;
        let mut z: Vec<f64> = old.iter().map(|v| v.ln()).collect();
        let mut w = old.clone();
        let mut r = self.residual(&w, old, dt);
        let mut norm = self.scaled_norm(&r, &w);
        let mut converged_at = None;
        for iter in 0..NEWTON_MAX {
            if norm < NEWTON_TOL && converged_at.is_none() {
                converged_at = Some(iter);
            }
            // two polishing iterations after reaching the tolerance
            if let Some(k) = converged_at {
                if iter >= k + 2 || norm < 1e-15 {
                    return Ok(w);
                }
            }
            // Jacobian in z = ln w
            let mut diag: Vec<f64> = (0..n).map(|i| self.volumes[i] * w[i]).collect();
            let mut upper = vec![0.0; n - 1];
            let mut lower = vec![0.0; n - 1];
            for f in 0..n - 1 {
                let (wl, wr) = (w[f], w[f + 1]);
                let c = self.geom.face[f];
                let mob = harmonic(wl, wr);
                let dpsi = (wr.powf(m - 1.0) - (self.centers[f + 1]).powi(2))
                    - (wl.powf(m - 1.0) - (self.centers[f]).powi(2));
                let dmob_l = mob * wr / (wl + wr);
                let dmob_r = mob * wl / (wl + wr);
                let dg_l = c * (dmob_l * dpsi - mob * (m - 1.0) * wl.powf(m - 1.0));
                let dg_r = c * (dmob_r * dpsi + mob * (m - 1.0) * wr.powf(m - 1.0));
                diag[f] += dt * dg_l;
                upper[f] += dt * dg_r;
                lower[f] -= dt * dg_l;
                diag[f + 1] -= dt * dg_r;
            }
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let dz = solve_tridiagonal(&lower, &diag, &upper, &neg).map_err(|e| e.to_string())?;
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let zt: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + lam * b).collect();
                let wt: Vec<f64> = zt.iter().map(|v| v.exp()).collect();
                if wt.iter().all(|v| v.is_finite() && *v > 0.0) {
                    let rt = self.residual(&wt, old, dt);
                    let nt = self.scaled_norm(&rt, &wt);
                    if nt.is_finite() && (nt < norm || nt < 1e-15) {
                        z = zt;
                        w = wt;
                        r = rt;
                        norm = nt;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted {
                if norm < NEWTON_TOL {
                    return Ok(w);
                }
                return Err(format!("line search failed at residual {norm:e}"));
            }
        }
        if norm < NEWTON_TOL {
            Ok(w)
        } else {
            Err(format!("no convergence after {NEWTON_MAX} iterations, residual {norm:e}"))
        }
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Compensated summation.
pub(crate) fn neumaier(it: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Interpolant between the constants of the bracketing Barenblatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape {
    /// `C(s) = C₂ + (C₁ − C₂) e^{−(s/width)²}`.
    Bump { width: f64 },
    /// `C(s) = C₁ + λ(C₂ − C₁)`.
    Uniform { lambda: f64 },
}

impl Default for Shape {
    fn default() -> Self {
        Shape::Bump { width: 1.0 }
    }
}

/// `w = (C(s) + s²)^{1/(m−1)}` with `C(s)` between `C₁` and `C₂`, so that
/// `(C₂+s²)^{1/(m−1)} ≤ w ≤ (C₁+s²)^{1/(m−1)}`.
pub fn init_sandwiched(
    params: &Parameters,
    c1: f64,
    c2: f64,
    shape: Shape,
    cells: usize,
    domain: f64,
) -> Result<RadialState> {
    if !(c1 > 0.0 && c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
        return Err(Error::InvalidArgument(format!("C1, C2 must be positive, got {c1}, {c2}")));
    }
    if c1 > c2 {
        return Err(Error::InvalidArgument(format!("need C1 <= C2, got C1 = {c1} > C2 = {c2}")));
    }
    let der = derive(params)?;
    let e = 1.0 / (der.m - 1.0);
    let cfun = move |s: f64| match shape {
        Shape::Bump { width } => c2 + (c1 - c2) * (-(s / width).powi(2)).exp(),
        Shape::Uniform { lambda } => c1 + lambda.clamp(0.0, 1.0) * (c2 - c1),
    };
    let state = RadialState::from_fn(params, cells, domain, |s| (cfun(s) + s * s).powf(e))?;
    check_sandwich(&state, c1, c2, 0.0)?;
    Ok(state)
}

/// Pointwise check against `(C₂+s²)^{1/(m−1)}` and `(C₁+s²)^{1/(m−1)}`,
/// with relative slack.
pub fn check_sandwich(state: &RadialState, c1: f64, c2: f64, slack: f64) -> Result<()> {
    let e = 1.0 / (state.m() - 1.0);
    for (i, (s, w)) in state.centers.iter().zip(&state.w).enumerate() {
        let lower = (c2 + s * s).powf(e);
        let upper = (c1 + s * s).powf(e);
        if *w < lower * (1.0 - slack) || *w > upper * (1.0 + slack) {
            return Err(Error::SandwichViolated {
                cell: i,
                s: *s,
                value: *w,
                lower,
                upper,
            });
        }
    }
    Ok(())
}
