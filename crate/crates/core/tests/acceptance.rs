use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cknwfd::constants::{
    best_radial_constant, best_radial_constant_quadrature, mass_star, mass_star_quadrature, weighted_lq_norm,
};
use cknwfd::params::{derive_unchecked, inversion_dual, p_star, theta_of, zeta_of};
use cknwfd::pde::{
    equivalence_check, evolve_and_fit, init_sandwiched, mass_tail_domain, EvolveOptions, PerturbedBarenblatt, Shape,
};
use cknwfd::quadform::{instability_certificate, spectral_identity_check};
use cknwfd::sl_oracle::{verify_closed_form, RefinementSchedule};
use cknwfd::spectral::{beta_fs, nonradial_rate, radial_rate, Linearized};
use cknwfd::{classify_region, derive, spectral_report, validate, Error, Parameters, Region};

const P1: Parameters = Parameters { d: 5, beta: 0.0, gamma: 0.0, p: 1.25 };
const P2: Parameters = Parameters { d: 5, beta: -2.0, gamma: -2.0, p: 1.2 };
const P3: Parameters = Parameters { d: 5, beta: -0.5, gamma: 1.0, p: 1.1 };

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn admissible(p: &Parameters) -> bool {
    validate(p).map(|r| r.admissible).unwrap_or(false)
}

fn random_point(rng: &mut ChaCha8Rng) -> Parameters {
    loop {
        let d: u32 = rng.gen_range(2..=8);
        let df = d as f64;
        let gamma = rng.gen_range(-5.0..df - 0.05);
        let hi = (df - 2.0) / df * gamma;
        let lo = gamma - 2.0;
        if !(hi > lo) {
            continue;
        }
        let beta = lo + (hi - lo) * rng.gen_range(0.01..0.99);
        let ps = p_star(d, beta, gamma);
        let p = 1.0 + (ps - 1.0) * rng.gen_range(0.02..0.98);
        let params = Parameters::new(d, beta, gamma, p);
        if admissible(&params) {
            return params;
        }
    }
}

fn crit1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in 3..=10u32 {
        let ps = d as f64 / (d as f64 - 2.0);
        for k in 1..20 {
            let p = 1.0 + (ps - 1.0) * k as f64 / 20.0;
            let params = Parameters::new(d, 0.0, 0.0, p);
            let rep = spectral_report(&params).unwrap();
            // 2/(1−m) with 1 − m = (p−1)/(2p)
            let anchor = 4.0 * p / (p - 1.0);
            worst = worst.max(rel(rep.gap, anchor));
            worst = worst.max(rel(2.0 * rep.rate, 4.0));
            worst = worst.max(rel(2.0 * rep.gap_rate, 4.0));
            count += 1;
        }
    }
    Outcome {
        pass: worst <= 8.0 * f64::EPSILON,
        detail: format!("{count} (d,p) pairs, worst relative deviation {worst:.1e}"),
    }
}

fn crit2() -> Outcome {
    let pts = [
        (5, 0.0, 0.0, 1.25),
        (5, -2.0, -2.0, 1.2),
        (5, -0.5, 1.0, 1.1),
        (3, -2.0, -2.0, 1.3),
        (4, -1.0, -1.0, 1.1),
        (5, -3.0, -3.0, 1.1),
        (6, -1.5, -2.0, 1.2),
        (3, -1.0, -0.5, 1.3),
        (4, -1.5, -2.0, 1.1),
        (3, -2.0, -1.0, 1.05),
        (4, -0.5, 0.0, 1.2),
        (5, -3.0, -2.0, 1.1),
        (6, -1.5, -1.0, 1.2),
        (3, -0.5, 0.0, 1.3),
        (5, 0.3, 1.0, 1.05),
        (3, -0.5, 1.0, 1.1),
        (4, -0.5, 0.5, 1.2),
        (5, -1.0, 0.0, 1.1),
        (6, 0.0, 1.0, 1.1),
        (5, 0.3, 1.0, 1.3),
        (4, 0.3, 1.5, 1.2),
        (3, 0.0, 0.0, 1.2),
    ];
    let schedule = RefinementSchedule::default();
    let mut regions = [0usize; 4];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (d, b, g, p) in pts {
        let params = Parameters::new(d, b, g, p);
        let region = classify_region(&params).unwrap();
        regions[match region {
            Region::One => 0,
            Region::Two => 1,
            Region::Three => 2,
            Region::Boundary => 3,
        }] += 1;
        match verify_closed_form(&params, &schedule) {
            Ok(rep) => {
                let both = rep.modes.iter().any(|m| m.ell == 0) && rep.modes.iter().any(|m| m.ell == 1);
                for m in &rep.modes {
                    worst = worst.max(m.rel_error);
                }
                if !(rep.passed && both) {
                    failures.push(format!("{params:?}"));
                }
            }
            Err(e) => failures.push(format!("{params:?}: {e}")),
        }
    }
    let spans = regions[0] > 0 && regions[1] > 0 && regions[2] > 0;
    Outcome {
        pass: failures.is_empty() && spans && pts.len() >= 20,
        detail: format!(
            "{} points (regions 1/2/3/boundary: {}/{}/{}/{}), worst extrapolated error {worst:.1e}, failures {:?}",
            pts.len(),
            regions[0],
            regions[1],
            regions[2],
            regions[3],
            failures
        ),
    }
}

fn crit3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut w10, mut w01): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let params = random_point(&mut rng);
        let der = derive(&params).unwrap();
        let lin = Linearized::from_derived(params.d, &der);
        w10 = w10.max(rel((1.0 - der.m) * lin.lambda10_formal(der.delta), radial_rate(&params)));
        w01 = w01.max(rel((1.0 - der.m) * lin.lambda01_formal(der.delta), nonradial_rate(&params)));
    }
    Outcome {
        pass: w10 <= 1e-10 && w01 <= 1e-10,
        detail: format!("1000 random points, worst radial {w10:.1e}, nonradial {w01:.1e}"),
    }
}

fn crit4() -> Outcome {
    let d = 5u32;
    let k = 200usize;
    let gamma_at = |i: usize| -5.0 + 9.9 * (i as f64 + 0.5) / k as f64;
    let beta_at = |j: usize| -7.0 + 10.0 * (j as f64 + 0.5) / k as f64;
    let predicate = |b: f64, g: f64| {
        g < 0.0 && beta_fs(g, d).map(|bf| bf < b).unwrap_or(false) && b < (d as f64 - 2.0) / d as f64 * g
    };
    let pred: Vec<Vec<bool>> = (0..k).map(|i| (0..k).map(|j| predicate(beta_at(j), gamma_at(i))).collect()).collect();
    let in_band = |i: usize, j: usize| {
        let v = pred[i][j];
        (i.saturating_sub(1)..=(i + 1).min(k - 1))
            .any(|a| (j.saturating_sub(1)..=(j + 1).min(k - 1)).any(|b| pred[a][b] != v))
    };
    let (mut evaluated, mut unavailable, mut breaking, mut band_mismatch) = (0, 0, 0, 0);
    let mut outside = Vec::new();
    let mut errors = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let (b, g) = (beta_at(j), gamma_at(i));
            let ps = p_star(d, b, g);
            let params = Parameters::new(d, b, g, 1.0 + (ps - 1.0) / 2.0);
            if !admissible(&params) {
                continue;
            }
            match instability_certificate(&params) {
                Ok(c) => {
                    evaluated += 1;
                    breaking += c.breaking as usize;
                    if c.breaking != pred[i][j] || !c.consistent() {
                        if in_band(i, j) {
                            band_mismatch += 1;
                        } else {
                            outside.push((b, g));
                        }
                    }
                }
                Err(Error::CertificateUnavailable(_)) => unavailable += 1,
                Err(e) => errors.push(format!("({b}, {g}): {e}")),
            }
        }
    }
    Outcome {
        pass: outside.is_empty() && errors.is_empty() && breaking > 0,
        detail: format!(
            "{evaluated} certificates ({breaking} breaking), {unavailable} without admissible mode, \
             mismatches in band {band_mismatch}, outside band {:?}, errors {:?}",
            outside, errors
        ),
    }
}

fn crit5() -> Outcome {
    let mut worst: f64 = 0.0;
    for params in [P1, P2, P3] {
        worst = worst.max(rel(mass_star_quadrature(&params).unwrap().value, mass_star(&params).unwrap()));
        let a = best_radial_constant(&params).unwrap().k_star;
        let b = best_radial_constant_quadrature(&params).unwrap().k_star;
        worst = worst.max(rel(b, a));
    }
    Outcome {
        pass: worst <= 1e-7,
        detail: format!("M and K at P1, P2, P3, worst relative deviation {worst:.1e}"),
    }
}

fn crit6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for params in [P2, P3] {
        let chk = spectral_identity_check(&params).unwrap();
        worst = worst.max(chk.rel_diff);
        ok &= chk.rel_diff <= 1e-6;
    }
    let c = instability_certificate(&P1).unwrap();
    let zero = c.q_value.abs() <= c.tolerance;
    Outcome {
        pass: ok && zero && !c.breaking,
        detail: format!(
            "P2/P3 worst relative difference {worst:.1e}; P1 value {:.2e} within tolerance {:.2e}: {zero}",
            c.q_value, c.tolerance
        ),
    }
}

fn crit7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, params, want) in [("P1", P1, 6.0), ("P2", P2, 17.0 / 3.0)] {
        let t = Instant::now();
        let s = mass_tail_domain(&params, 1e-10).unwrap();
        let mut state = init_sandwiched(&params, 0.8, 1.25, Shape::default(), 2000, s).unwrap();
        let opts = EvolveOptions {
            sandwich: Some((0.8, 1.25)),
            ..EvolveOptions::default()
        };
        let tr = evolve_and_fit(&mut state, &opts).unwrap();
        let rate = tr.fitted_rate.map(|f| f.rate).unwrap_or(f64::NAN);
        let predicted = tr.predicted_rate.unwrap_or(f64::NAN);
        let ok = tr.max_mass_drift <= 1e-9
            && tr.entropy_monotone(0.0)
            && tr.bound_ok()
            && rel(predicted, want) <= 1e-12
            && rel(rate, predicted) <= 0.05
            && tr.sandwich_preserved == Some(true);
        pass &= ok;
        parts.push(format!(
            "{name}: rate {rate:.4} vs {predicted:.4}, drift {:.1e}, max increase {:.1e}, bound excess {:.1e}, {} steps in {:.1?}",
            tr.max_mass_drift,
            tr.max_entropy_increase,
            tr.max_bound_excess,
            tr.steps,
            t.elapsed()
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn crit8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for params in [P1, P2, P3] {
        for _ in 0..5 {
            // |a| bounded away from 0: ℋ is O(a²) over O(1) norms
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let a = sign * rng.gen_range(0.1..0.9);
            let w = rng.gen_range(0.3..3.0);
            let res = PerturbedBarenblatt::normalized(&params, a, w).and_then(|u| equivalence_check(&u, &params));
            match res {
                Ok(chk) => worst = worst.max(chk.relative),
                Err(e) => errors.push(format!("{params:?} a={a} w={w}: {e}")),
            }
        }
    }
    Outcome {
        pass: errors.is_empty() && worst <= 1e-6,
        detail: format!("15 perturbations, worst relative residual {worst:.1e}, errors {errors:?}"),
    }
}

fn crit9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let params = random_point(&mut rng);
        let Parameters { d, beta, gamma, p } = params;
        let (bt, gt) = inversion_dual(beta, gamma, d);
        worst = worst.max(rel(theta_of(d, bt, gt, p), theta_of(d, beta, gamma, p)));
        worst = worst.max(rel(zeta_of(d, bt, gt, p), zeta_of(d, beta, gamma, p)));
        let dual = derive_unchecked(&Parameters::new(d, bt, gt, p));
        worst = worst.max(rel(dual.theta, derive_unchecked(&params).theta));
    }
    let tests: [(&str, fn(f64) -> f64); 3] = [
        ("gaussian", |r| (-r * r).exp()),
        ("algebraic", |r| (1.0 + r * r).powf(-6.0)),
        ("shifted", |r| (1.0 + r) * (-(r - 1.0).powi(2)).exp()),
    ];
    let mut norm_worst: f64 = 0.0;
    for params in [P1, P2, P3] {
        let (_, gt) = inversion_dual(params.beta, params.gamma, params.d);
        let q = 2.0 * params.p;
        for (_, w) in tests {
            let a = weighted_lq_norm(w, q, params.gamma, params.d).unwrap();
            let b = weighted_lq_norm(|r| if r == 0.0 { 0.0 } else { w(1.0 / r) }, q, gt, params.d).unwrap();
            norm_worst = norm_worst.max(rel(b, a));
        }
    }
    Outcome {
        pass: worst <= 1e-12 && norm_worst <= 1e-7,
        detail: format!("theta/zeta worst {worst:.1e} over 1000 points; norm identity worst {norm_worst:.1e}"),
    }
}

fn crit10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut order_ok = true;
    for _ in 0..1000 {
        let params = random_point(&mut rng);
        let der = derive(&params).unwrap();
        let t = Linearized::from_derived(params.d, &der).thresholds();
        order_ok &= t.delta1 < t.delta3 && t.delta3 < t.delta4;
    }
    let mut crossing_worst: f64 = 0.0;
    let mut above_ok = true;
    let mut sampled = 0;
    for d in 3..=8u32 {
        for &nf in &[1.0, 1.5, 2.5] {
            let n = d as f64 * nf;
            let probe = Linearized::new(d, 1.0, n).thresholds();
            let (a1, a2) = (probe.alpha1, probe.alpha2);
            for k in 1..=100 {
                let alpha = a1 + (a2 - a1) * k as f64 / 101.0;
                let lin = Linearized::new(d, alpha, n);
                let Some(d5) = lin.thresholds().delta5 else {
                    order_ok = false;
                    continue;
                };
                crossing_worst = crossing_worst.max(rel(lin.lambda10_formal(d5), lin.lambda01_formal(d5)));
                sampled += 1;
            }
            for k in 1..=20 {
                let alpha = a2 * (1.0 + 0.25 * k as f64);
                let lin = Linearized::new(d, alpha, n);
                let d2 = lin.thresholds().delta2;
                for j in 1..=50 {
                    let delta = d2 * (1.0 + 0.1 * j as f64);
                    above_ok &= lin.lambda10_formal(delta) > lin.lambda01_formal(delta);
                }
            }
        }
    }
    Outcome {
        pass: order_ok && crossing_worst <= 1e-9 && above_ok,
        detail: format!(
            "orderings hold: {order_ok}; crossing at delta5 worst {crossing_worst:.1e} over {sampled} alphas; \
             radial above nonradial beyond alpha2: {above_ok}"
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("unweighted anchor", crit1),
        ("oracle agreement", crit2),
        ("branch identity", crit3),
        ("symmetry-breaking region", crit4),
        ("mass and radial constant", crit5),
        ("quadratic-form consistency", crit6),
        ("PDE properties", crit7),
        ("equivalence identity", crit8),
        ("inversion symmetry", crit9),
        ("threshold table", crit10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {} [{:.2?}] {}",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            t.elapsed(),
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
