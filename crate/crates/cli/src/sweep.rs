//! Grid sweeps over `(β, γ)` at fixed `d`.

use rayon::prelude::*;
use serde::Serialize;

use cknwfd::params::p_star;
use cknwfd::spectral::h_fs;
use cknwfd::{classify_region, spectral_report, validate, Parameters};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub d: u32,
    /// `None`: the midpoint `1 + (p★−1)/2` at each point.
    pub p: Option<f64>,
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    pub resolution: usize,
}

impl SweepSpec {
    pub fn check(&self) -> Result<(), String> {
        if self.resolution < 2 {
            return Err(format!("resolution must be at least 2, got {}", self.resolution));
        }
        for (name, (a, b)) in [("beta", self.beta), ("gamma", self.gamma)] {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(format!("{name} range must be finite and increasing, got [{a}, {b}]"));
            }
        }
        if let Some(p) = self.p {
            if !p.is_finite() {
                return Err("p must be finite".into());
            }
        }
        Ok(())
    }

    pub fn beta_at(&self, j: usize) -> f64 {
        lerp(self.beta, j, self.resolution)
    }

    pub fn gamma_at(&self, i: usize) -> f64 {
        lerp(self.gamma, i, self.resolution)
    }

    pub fn p_at(&self, beta: f64, gamma: f64) -> f64 {
        self.p
            .unwrap_or_else(|| 1.0 + (p_star(self.d, beta, gamma) - 1.0) / 2.0)
    }
}

fn lerp((a, b): (f64, f64), k: usize, n: usize) -> f64 {
    if k + 1 == n {
        b
    } else {
        a + (b - a) * k as f64 / (n - 1) as f64
    }
}

/// One CSV row; `None` fields are written empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub beta: f64,
    pub gamma: f64,
    pub admissible: bool,
    pub region: Option<&'static str>,
    pub h_fs: f64,
    pub lambda10: Option<f64>,
    pub lambda01: Option<f64>,
    pub lambda_ess: Option<f64>,
    pub lambda_star: Option<f64>,
    pub gap: Option<f64>,
    pub rate: Option<f64>,
    pub branch: Option<&'static str>,
}

pub const HEADER: [&str; 12] = [
    "beta",
    "gamma",
    "admissible",
    "region",
    "h_fs",
    "lambda10",
    "lambda01",
    "lambda_ess",
    "lambda_star",
    "gap",
    "rate",
    "branch",
];

pub fn row(params: &Parameters) -> Row {
    let fs = h_fs(params.beta, params.gamma, params.d).value;
    let empty = Row {
        beta: params.beta,
        gamma: params.gamma,
        admissible: false,
        region: None,
        h_fs: fs,
        lambda10: None,
        lambda01: None,
        lambda_ess: None,
        lambda_star: None,
        gap: None,
        rate: None,
        branch: None,
    };
    if !validate(params).map(|r| r.admissible).unwrap_or(false) {
        return empty;
    }
    match (spectral_report(params), classify_region(params)) {
        (Ok(rep), Ok(region)) => Row {
            admissible: true,
            region: Some(region.as_str()),
            lambda10: rep.lambda10,
            lambda01: rep.lambda01,
            lambda_ess: Some(rep.lambda_ess),
            lambda_star: Some(rep.lambda_star),
            gap: Some(rep.gap),
            rate: Some(rep.rate),
            branch: Some(rep.branch.as_str()),
            ..empty
        },
        _ => empty,
    }
}

/// Rows in γ-major order; evaluation order does not affect the output.
pub fn sweep(spec: &SweepSpec) -> Vec<Row> {
    let n = spec.resolution;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let (beta, gamma) = (spec.beta_at(j), spec.gamma_at(i));
            row(&Parameters::new(spec.d, beta, gamma, spec.p_at(beta, gamma)))
        })
        .collect()
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let s = SweepSpec { d: 5, p: None, beta: (-1.0, 1.0), gamma: (-2.0, 0.0), resolution: 3 };
        assert_eq!((s.beta_at(0), s.beta_at(1), s.beta_at(2)), (-1.0, 0.0, 1.0));
        assert_eq!(s.gamma_at(2), 0.0);
        assert!(SweepSpec { resolution: 1, ..s }.check().is_err());
        assert!(SweepSpec { beta: (1.0, -1.0), ..s }.check().is_err());
        assert!(SweepSpec { gamma: (0.0, f64::INFINITY), ..s }.check().is_err());
    }

    #[test]
    fn inadmissible_rows_are_blank() {
        let r = row(&Parameters::new(5, 3.0, 0.0, 1.2));
        assert!(!r.admissible && r.region.is_none() && r.gap.is_none());
        let r = row(&Parameters::new(5, -2.0, -2.0, 1.2));
        assert_eq!((r.region, r.branch), (Some("1"), Some("nonradial")));
    }

    #[test]
    fn csv_header_matches_fields() {
        let rows = vec![row(&Parameters::new(5, -2.0, -2.0, 1.2)), row(&Parameters::new(5, 3.0, 0.0, 1.2))];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEADER.join(","));
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 12));
        assert!(lines[2].starts_with("3.0,0.0,false,,"));
        assert!(!text.contains('\r'));
    }
}
