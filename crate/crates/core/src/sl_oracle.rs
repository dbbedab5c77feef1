//! Piecewise-linear finite elements for the weighted Sturm–Liouville problem
//!
//! `−α²(s^{n−1}(1+s²)^{−δ} f')' + μ_ℓ s^{n−3}(1+s²)^{−δ} f = Λ s^{n−1}(1+s²)^{−δ−1} f`
//!
//! on `(0, S)` with natural conditions at both ends. The pencil `(K, B)` is
//! symmetric tridiagonal; eigenvalues come from Sturm-count bisection,
//! eigenvectors from shift-invert inverse iteration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{derive, Parameters};
use crate::quad::gauss_legendre;
use crate::spectral::{angular_exponent, spectral_report};
use crate::tridiag::{dot, solve_shifted, sturm_count, SymTri};

const BOUNDARY_MASS_LIMIT: f64 = 1e-6;
const BOUNDARY_ZONE: f64 = 0.9;
const GL_ORDER: usize = 8;
const FIRST_CELL_ORDER: usize = 16;

/// `s_i = sinh(iΔτ)`, `Δτ = asinh(S)/N`.
pub fn sinh_grid(cells: usize, domain: f64) -> Result<Vec<f64>> {
    if cells < 2 || !(domain > 0.0) || !domain.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "degenerate grid: {cells} cells on (0, {domain})"
        )));
    }
    let dt = domain.asinh() / cells as f64;
    let mut nodes: Vec<f64> = (0..=cells).map(|i| (i as f64 * dt).sinh()).collect();
    nodes[cells] = domain;
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid not strictly increasing".into()));
    }
    Ok(nodes)
}

#[derive(Debug, Clone)]
pub struct SlProblem {
    pub params: Parameters,
    pub ell: u32,
    pub mu_ell: f64,
    pub nodes: Vec<f64>,
    /// `s^{n−1}(1+s²)^{−δ}` at cell midpoints.
    pub stiffness_weights: Vec<f64>,
    /// `s^{n−1}(1+s²)^{−δ−1}` at cell midpoints.
    pub mass_weights: Vec<f64>,
    pub stiffness: SymTri,
    pub mass: SymTri,
    /// Symmetric diagonal scaling `diag(B)^{−1/2}` used by the solver.
    scaling: Vec<f64>,
}

fn log_weight(s: f64, power: f64, delta: f64) -> f64 {
    power * s.ln() - delta * s.mul_add(s, 1.0).ln()
}

#[derive(Default, Clone, Copy)]
struct ElementSums {
    stiff: f64,
    // potential and mass: ∫ w φ_aφ_a, ∫ w φ_aφ_b, ∫ w φ_bφ_b
    pot: [f64; 3],
    mass: [f64; 3],
}

pub fn assemble(params: &Parameters, ell: u32, cells: usize, domain: f64) -> Result<SlProblem> {
    if cells < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 cells, got {cells}")));
    }
    if !(domain > 10.0) {
        return Err(Error::InvalidArgument(format!("domain must exceed 10, got {domain}")));
    }
    let der = derive(params)?;
    let (n, delta, a2) = (der.n, der.delta, der.alpha * der.alpha);
    let d = params.d as f64;
    let mu = ell as f64 * (ell as f64 + d - 2.0);
    let nodes = sinh_grid(cells, domain)?;

    let (gx, gw) = gauss_legendre(GL_ORDER);
    let (fx, fw) = gauss_legendre(FIRST_CELL_ORDER);
    // first cell: s = h·u^q makes s^{n−3} ds smooth in u
    let q = ((6.0 / (n - 2.0)).ceil() as i32).max(1);

    let mut stiffness = SymTri::zeros(cells + 1);
    let mut mass = SymTri::zeros(cells + 1);
    let mut stiffness_weights = Vec::with_capacity(cells);
    let mut mass_weights = Vec::with_capacity(cells);

    for e in 0..cells {
        let (sa, sb) = (nodes[e], nodes[e + 1]);
        let h = sb - sa;
        let mut acc = ElementSums::default();
        let mut add = |s: f64, wq: f64| {
            let pa = (sb - s) / h;
            let pb = (s - sa) / h;
            let wk = log_weight(s, n - 1.0, delta).exp();
            let wp = log_weight(s, n - 3.0, delta).exp();
            let wb = log_weight(s, n - 1.0, delta + 1.0).exp();
            acc.stiff += wq * wk;
            acc.pot[0] += wq * wp * pa * pa;
            acc.pot[1] += wq * wp * pa * pb;
            acc.pot[2] += wq * wp * pb * pb;
            acc.mass[0] += wq * wb * pa * pa;
            acc.mass[1] += wq * wb * pa * pb;
            acc.mass[2] += wq * wb * pb * pb;
        };
        if e == 0 {
            for (u, w) in fx.iter().zip(&fw) {
                let s = h * u.powi(q);
                let jac = h * q as f64 * u.powi(q - 1);
                add(s, w * jac);
            }
        } else {
            for (t, w) in gx.iter().zip(&gw) {
                add(sa + h * t, w * h);
            }
        }
        let k = a2 * acc.stiff / (h * h);
        stiffness.diag[e] += k + mu * acc.pot[0];
        stiffness.diag[e + 1] += k + mu * acc.pot[2];
        stiffness.off[e] += -k + mu * acc.pot[1];
        mass.diag[e] += acc.mass[0];
        mass.diag[e + 1] += acc.mass[2];
        mass.off[e] += acc.mass[1];

        let mid = 0.5 * (sa + sb);
        stiffness_weights.push(log_weight(mid, n - 1.0, delta).exp());
        mass_weights.push(log_weight(mid, n - 1.0, delta + 1.0).exp());
    }
    if mass.diag.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(
            "mass weight underflows on the grid; reduce the domain".into(),
        ));
    }
    let scaling: Vec<f64> = mass.diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    Ok(SlProblem {
        params: *params,
        ell,
        mu_ell: mu,
        nodes,
        stiffness_weights,
        mass_weights,
        stiffness,
        mass,
        scaling,
    })
}

impl SlProblem {
    fn scaled(&self, m: &SymTri) -> SymTri {
        let c = &self.scaling;
        SymTri {
            diag: m.diag.iter().zip(c).map(|(v, ci)| v * ci * ci).collect(),
            off: m
                .off
                .iter()
                .enumerate()
                .map(|(i, v)| v * c[i] * c[i + 1])
                .collect(),
        }
    }

    /// Eigenvalues of the pencil below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        sturm_count(&self.scaled(&self.stiffness), &self.scaled(&self.mass), sigma)
    }

    /// `K f − Λ B f` for nodal values `f`.
    pub fn residual(&self, f: &[f64], lambda: f64) -> Vec<f64> {
        let kf = self.stiffness.matvec(f);
        let bf = self.mass.matvec(f);
        kf.iter().zip(&bf).map(|(k, b)| k - lambda * b).collect()
    }

    pub fn rayleigh_quotient(&self, f: &[f64]) -> f64 {
        self.stiffness.quad_form(f) / self.mass.quad_form(f)
    }

    pub fn domain(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Share of the `B`-mass of `f` carried by nodes with `s ≥ 0.9S`.
    pub fn boundary_mass_fraction(&self, f: &[f64]) -> f64 {
        let bf = self.mass.matvec(f);
        let total: f64 = dot(f, &bf);
        let cut = BOUNDARY_ZONE * self.domain();
        let outer: f64 = self
            .nodes
            .iter()
            .zip(f.iter().zip(&bf))
            .filter(|(s, _)| **s >= cut)
            .map(|(_, (x, y))| x * y)
            .sum();
        (outer / total).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteEigenpair {
    pub value: f64,
    pub bisection_value: f64,
    #[serde(skip)]
    pub function: Vec<f64>,
    pub ell: u32,
    pub trusted: bool,
    pub boundary_mass: f64,
    pub residual: f64,
}

fn bisect_eigenvalue(k: &SymTri, b: &SymTri, index: usize, scale: f64) -> f64 {
    let mut lo = -1e-6 * scale;
    let mut hi = scale.max(1.0);
    while sturm_count(k, b, hi) <= index {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(k, b, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1e-10 * scale) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The `k` smallest eigenpairs, ascending.
pub fn lowest_eigenpairs(problem: &SlProblem, k: usize) -> Result<Vec<DiscreteEigenpair>> {
    let ks = problem.scaled(&problem.stiffness);
    let bs = problem.scaled(&problem.mass);
    let der = derive(&problem.params)?;
    let report = spectral_report(&problem.params)?;
    let scale = report.lambda_ess.max(1e-3 * der.alpha * der.alpha);
    let size = ks.len();
    let row_norm = |m: &SymTri| {
        (0..size)
            .map(|i| {
                m.diag[i].abs()
                    + if i > 0 { m.off[i - 1].abs() } else { 0.0 }
                    + if i + 1 < size { m.off[i].abs() } else { 0.0 }
            })
            .fold(0.0, f64::max)
    };
    let (knorm, bnorm) = (row_norm(&ks), row_norm(&bs));
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::with_capacity(k);
    for index in 0..k {
        let lambda = bisect_eigenvalue(&ks, &bs, index, scale);
        // deterministic start vector
        let mut y: Vec<f64> = (0..size).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect();
        let mut rq = lambda;
        let mut resid = f64::INFINITY;
        for _ in 0..8 {
            let rhs = bs.matvec(&y);
            y = solve_shifted(&ks, &bs, lambda, &rhs)?;
            for prev in &found {
                let c = dot(prev, &bs.matvec(&y));
                y.iter_mut().zip(prev).for_each(|(a, b)| *a -= c * b);
            }
            let nrm = dot(&y, &bs.matvec(&y)).sqrt();
            y.iter_mut().for_each(|v| *v /= nrm);
            let ky = ks.matvec(&y);
            let by = bs.matvec(&y);
            rq = dot(&y, &ky);
            let r: f64 = ky.iter().zip(&by).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
            let denom = (knorm + rq.abs() * bnorm) * dot(&y, &y).sqrt();
            resid = r / denom;
            if resid < 1e-11 {
                break;
            }
        }
        if !(resid < 1e-8) {
            return Err(Error::EigenNonConvergence { residual: resid });
        }
        let function: Vec<f64> = y.iter().zip(&problem.scaling).map(|(v, c)| v * c).collect();
        let boundary_mass = problem.boundary_mass_fraction(&function);
        let trusted = rq < report.lambda_ess && boundary_mass < BOUNDARY_MASS_LIMIT;
        found.push(y);
        out.push(DiscreteEigenpair {
            value: rq,
            bisection_value: lambda,
            function,
            ell: problem.ell,
            trusted,
            boundary_mass,
            residual: resid,
        });
    }
    Ok(out)
}

/// Domain for a mode growing like `s^a`: the tail of `f² × mass weight`
/// beyond `S` is about `S^{−k}` with `k = 2δ+2−n−2a`; pick `S^{−k} = 1e−12`.
pub fn tail_domain(params: &Parameters, growth: f64) -> Result<f64> {
    let der = derive(params)?;
    let k = 2.0 * der.delta + 2.0 - der.n - 2.0 * growth;
    let mut s = if k > 0.0 { 10f64.powf(12.0 / k) } else { 1e8 };
    s = s.clamp(20.0, 1e8);
    // keep the mass weight above the underflow range
    let decay = 2.0 * der.delta + 3.0 - der.n;
    if decay > 0.0 {
        s = s.min(10f64.powf(280.0 / decay));
    }
    Ok(s.max(20.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementSchedule {
    pub base_cells: usize,
    /// `None`: domain from the tail rule for each mode.
    pub domain: Option<f64>,
    pub tolerance: f64,
}

impl Default for RefinementSchedule {
    fn default() -> Self {
        Self {
            base_cells: 4000,
            domain: None,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCheck {
    pub ell: u32,
    pub closed_form: f64,
    pub domain: f64,
    pub coarse: f64,
    pub fine: f64,
    pub wide: f64,
    pub extrapolated: f64,
    pub rel_error: f64,
    pub converging: bool,
    pub trusted: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub modes: Vec<ModeCheck>,
    pub gap: f64,
    pub kernel_dimension: usize,
    /// Lowest trusted nonzero eigenvalue found for `ℓ = 0, 1, 2`.
    pub lowest_trusted: Vec<(u32, Option<f64>)>,
    pub no_trusted_below_gap: bool,
    pub passed: bool,
}

fn mode_value(params: &Parameters, ell: u32, cells: usize, domain: f64) -> Result<DiscreteEigenpair> {
    let problem = assemble(params, ell, cells, domain)?;
    let index = if ell == 0 { 1 } else { 0 };
    let mut pairs = lowest_eigenpairs(&problem, index + 1)?;
    Ok(pairs.swap_remove(index))
}

fn check_mode(
    params: &Parameters,
    ell: u32,
    closed_form: f64,
    growth: f64,
    schedule: &RefinementSchedule,
) -> Result<ModeCheck> {
    let domain = match schedule.domain {
        Some(s) => s,
        None => tail_domain(params, growth)?,
    };
    let n0 = schedule.base_cells;
    let coarse = mode_value(params, ell, n0, domain)?;
    let fine = mode_value(params, ell, 2 * n0, domain)?;
    // same Δτ on the doubled domain
    let dtau = domain.asinh() / n0 as f64;
    let wide_cells = ((2.0 * domain).asinh() / dtau).round() as usize;
    let wide = mode_value(params, ell, wide_cells, 2.0 * domain)?;
    let extrapolated = fine.value + (fine.value - coarse.value) / 3.0 + (wide.value - coarse.value);
    let err = |v: f64| ((v - closed_form) / closed_form).abs();
    // below this the errors are round-off and carry no ordering
    let floor = 1e-10;
    let converging = err(fine.value) <= err(coarse.value) * (1.0 + 1e-3) + floor
        && err(wide.value) <= err(coarse.value) * (1.0 + 1e-3) + floor;
    let rel_error = err(extrapolated);
    let trusted = coarse.trusted && fine.trusted && wide.trusted;
    Ok(ModeCheck {
        ell,
        closed_form,
        domain,
        coarse: coarse.value,
        fine: fine.value,
        wide: wide.value,
        extrapolated,
        rel_error,
        converging,
        trusted,
        passed: trusted && converging && rel_error <= schedule.tolerance,
    })
}

pub fn verify_closed_form(params: &Parameters, schedule: &RefinementSchedule) -> Result<VerificationReport> {
    let der = derive(params)?;
    let report = spectral_report(params)?;
    let mut modes = Vec::new();
    if let Some(l10) = report.lambda10 {
        if l10 < report.lambda_ess {
            modes.push(check_mode(params, 0, l10, 2.0, schedule)?);
        }
    }
    if let Some(l01) = report.lambda01 {
        if l01 < report.lambda_ess {
            modes.push(check_mode(params, 1, l01, report.eta, schedule)?);
        }
    }

    let tol = 1e-3 * report.gap;
    let mut lowest_trusted = Vec::new();
    let mut no_trusted_below_gap = true;
    let mut kernel_dimension = 0;
    for ell in 0..=2u32 {
        let growth = angular_exponent(der.alpha, der.n, params.d, ell).max(if ell == 0 { 2.0 } else { 0.0 });
        let domain = schedule.domain.unwrap_or(tail_domain(params, growth)?);
        let problem = assemble(params, ell, schedule.base_cells, domain)?;
        if ell == 0 {
            kernel_dimension = problem.count_below(1e-6 * report.gap);
        }
        let below = problem.count_below(report.lambda_ess);
        let skip = if ell == 0 { 1 } else { 0 };
        let want = (below.max(skip + 1)).min(skip + 3);
        let pairs = lowest_eigenpairs(&problem, want)?;
        let lowest = pairs.iter().skip(skip).filter(|p| p.trusted).map(|p| p.value).next();
        if let Some(v) = lowest {
            if v < report.gap - tol {
                no_trusted_below_gap = false;
            }
        }
        lowest_trusted.push((ell, lowest));
    }
    let passed = modes.iter().all(|m| m.passed) && kernel_dimension == 1 && no_trusted_below_gap;
    Ok(VerificationReport {
        modes,
        gap: report.gap,
        kernel_dimension,
        lowest_trusted,
        no_trusted_below_gap,
        passed,
    })
}
