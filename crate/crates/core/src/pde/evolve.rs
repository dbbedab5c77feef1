//! Time stepping, traces and decay-rate fits.

use serde::Serialize;

use super::scheme::{check_sandwich, RadialState};
use crate::error::{Error, Result};
use crate::spectral::spectral_report;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitWindow {
    /// Fit once `𝒻 < upper·𝒻(0)`.
    pub upper: f64,
    /// and while `𝒻 > lower·𝒻(0)`.
    pub lower: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            upper: 1e-3,
            lower: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub dt_initial: f64,
    pub dt_max: f64,
    pub growth: f64,
    pub window: FitWindow,
    /// Stop once `𝒻 < floor·𝒻(0)`.
    pub floor: f64,
    /// Bracketing constants tracked for the comparison principle.
    pub sandwich: Option<(f64, f64)>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_final: 6.0,
            dt_initial: 1e-4,
            dt_max: 2e-3,
            growth: 1.05,
            window: FitWindow::default(),
            floor: 1e-12,
            sandwich: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    /// `ln 𝒻 ≈ intercept − rate·t`.
    pub intercept: f64,
    pub std_error: f64,
    /// Two standard errors.
    pub band: (f64, f64),
    pub points: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub free_energy: Vec<f64>,
    pub fisher: Vec<f64>,
    pub fitted_rate: Option<RateFit>,
    /// `2(1−m)Λ₁,₀`.
    pub predicted_rate: Option<f64>,
    pub barenblatt_constant: f64,
    pub max_mass_drift: f64,
    /// Largest `𝒻_{k+1} − 𝒻_k` relative to `𝒻_k`.
    pub max_entropy_increase: f64,
    /// Largest `𝒻(t)/(𝒻(0)e^{−(2+β−γ)²t}) − 1`.
    pub max_bound_excess: f64,
    /// Largest `(𝒻_{k+1} − 𝒻_k)/Δt + (m/(1−m))ℐ_{k+1}` relative to the dissipation.
    pub max_balance_defect: f64,
    pub sandwich_preserved: Option<bool>,
    /// `𝒻(0)` at round-off level: the datum is a Barenblatt profile and no
    /// rate is defined.
    pub stationary: bool,
    pub steps: usize,
}

/// `𝒻(0)/M` below this is round-off (relative deviations near 1e−12).
pub const STATIONARY_TOL: f64 = 1e-24;

impl SimulationTrace {
    pub const CSV_HEADER: [&'static str; 4] = ["t", "mass", "free_energy", "fisher"];

    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.times.len()).map(|i| [self.times[i], self.mass[i], self.free_energy[i], self.fisher[i]])
    }

    pub fn entropy_monotone(&self, tol: f64) -> bool {
        self.max_entropy_increase <= tol
    }

    pub fn bound_ok(&self) -> bool {
        self.max_bound_excess <= 1e-6
    }

    pub fn relative_gap(&self) -> Option<f64> {
        match (self.fitted_rate, self.predicted_rate) {
            (Some(f), Some(p)) => Some(((f.rate - p) / p).abs()),
            _ => None,
        }
    }
}

/// Least squares of `ln 𝒻` against `t` on the window.
pub fn fit_rate(times: &[f64], free_energy: &[f64], window: FitWindow) -> Result<RateFit> {
    if free_energy.is_empty() || !(free_energy[0] > 0.0) {
        return Err(Error::EmptyFitWindow("initial free energy is zero: stationary data".into()));
    }
    let f0 = free_energy[0];
    let start = free_energy.iter().position(|&f| f < window.upper * f0);
    let Some(start) = start else {
        return Err(Error::EmptyFitWindow(format!(
            "free energy never fell below {:e} of its initial value",
            window.upper
        )));
    };
    let pts: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(&free_energy[start..])
        .take_while(|(_, &f)| f > window.lower * f0)
        .map(|(&t, &f)| (t, f.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::EmptyFitWindow(format!("{} points in the fit window", pts.len())));
    }
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if !(sxx > 0.0) {
        return Err(Error::EmptyFitWindow("fit window has zero time extent".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (ss / (k - 2.0) / sxx).sqrt();
    Ok(RateFit {
        rate: -slope,
        intercept,
        std_error: se,
        band: (-slope - 2.0 * se, -slope + 2.0 * se),
        points: pts.len(),
        t_start: pts[0].0,
        t_end: pts[pts.len() - 1].0,
    })
}

pub fn evolve_and_fit(state: &mut RadialState, opts: &EvolveOptions) -> Result<SimulationTrace> {
    if !(opts.t_final > 0.0 && opts.dt_initial > 0.0 && opts.dt_max >= opts.dt_initial) {
        return Err(Error::InvalidArgument("need t_final > 0 and 0 < dt_initial <= dt_max".into()));
    }
    let params = state.params;
    let der = crate::params::derive(&params)?;
    let report = spectral_report(&params)?;
    let predicted_rate = report.lambda10.map(|l| 2.0 * (1.0 - der.m) * l);
    let w2 = (2.0 + params.beta - params.gamma).powi(2);
    let mm = der.m;

    let c = state.matched_barenblatt_constant()?;
    let m0 = state.raw_mass();
    let mut times = vec![state.t];
    let mut mass = vec![state.mass()];
    let f_init = state.free_energy_against(c);
    let mut free_energy = vec![f_init];
    let mut fisher = vec![state.fisher_information()];
    let t0 = state.t;

    let mut max_drift: f64 = 0.0;
    let mut max_inc = f64::NEG_INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_defect = f64::NEG_INFINITY;
    let mut sandwich = opts.sandwich.map(|_| true);
    let mut dt = opts.dt_initial;
    let mut steps = 0;
    while state.t < opts.t_final - 1e-14 && f_init > 0.0 {
        let h = dt.min(opts.t_final - state.t);
        let taken = state.step(h)?;
        steps += 1;
        let f = state.free_energy_against(c);
        let i = state.fisher_information();
        let prev = *free_energy.last().unwrap();
        max_drift = max_drift.max(((state.raw_mass() - m0) / m0).abs());
        if prev > 0.0 {
            max_inc = max_inc.max((f - prev) / prev);
        }
        max_excess = max_excess.max(f / (f_init * (-w2 * (state.t - t0)).exp()) - 1.0);
        let diss = mm / (1.0 - mm) * i;
        if diss > 0.0 {
            max_defect = max_defect.max(((f - prev) / taken + diss) / diss);
        }
        if let (Some((c1, c2)), Some(ok)) = (opts.sandwich, sandwich.as_mut()) {
            if check_sandwich(state, c1, c2, 1e-12).is_err() {
                *ok = false;
            }
        }
        times.push(state.t);
        mass.push(state.mass());
        free_energy.push(f);
        fisher.push(i);
        if f < opts.floor * f_init {
            break;
        }
        dt = if taken < h { taken } else { (dt * opts.growth).min(opts.dt_max) };
    }
    let stationary = f_init <= STATIONARY_TOL * mass[0];
    let fitted_rate = if stationary {
        None
    } else {
        fit_rate(&times, &free_energy, opts.window).ok()
    };
    Ok(SimulationTrace {
        times,
        mass,
        free_energy,
        fisher,
        fitted_rate,
        predicted_rate,
        barenblatt_constant: c,
        max_mass_drift: max_drift,
        max_entropy_increase: max_inc,
        max_bound_excess: max_excess,
        max_balance_defect: max_defect,
        sandwich_preserved: sandwich,
        stationary,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exponential() {
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 0.01).collect();
        let f: Vec<f64> = t.iter().map(|t| 3.0 * (-6.0 * t).exp()).collect();
        let r = fit_rate(&t, &f, FitWindow::default()).unwrap();
        assert!((r.rate - 6.0).abs() < 1e-10);
        assert!(r.t_start > 1.1 && r.band.0 <= r.rate && r.rate <= r.band.1);
    }

    #[test]
    fn barenblatt_datum_is_stationary() {
        use crate::pde::scheme::{init_sandwiched, Shape};
        let p = crate::Parameters::new(5, 0.0, 0.0, 1.25);
        let mut st = init_sandwiched(&p, 1.0, 1.0, Shape::default(), 400, 6.0).unwrap();
        let opts = EvolveOptions { t_final: 0.05, ..EvolveOptions::default() };
        let tr = evolve_and_fit(&mut st, &opts).unwrap();
        assert!(tr.stationary && tr.fitted_rate.is_none() && tr.relative_gap().is_none());
        assert!(tr.max_mass_drift <= 1e-13);
    }

    #[test]
    fn empty_windows() {
        let t = [0.0, 1.0, 2.0];
        assert!(matches!(fit_rate(&t, &[0.0, 0.0, 0.0], FitWindow::default()), Err(Error::EmptyFitWindow(_))));
        assert!(matches!(fit_rate(&t, &[1.0, 0.9, 0.8], FitWindow::default()), Err(Error::EmptyFitWindow(_))));
    }
}
