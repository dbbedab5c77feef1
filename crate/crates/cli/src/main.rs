use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use cknwfd::constants::{best_radial_constant, best_radial_constant_quadrature, mass_star, mass_star_quadrature};
use cknwfd::params::validate;
use cknwfd::pde::{
    equivalence_check, evolve_and_fit, init_sandwiched, mass_tail_domain, EvolveOptions, PerturbedBarenblatt,
    SimulationTrace, Shape,
};
use cknwfd::quadform::{instability_certificate, spectral_identity_check};
use cknwfd::sl_oracle::{verify_closed_form, RefinementSchedule};
use cknwfd::spectral::{h_fs, thresholds};
use cknwfd::{classify_region, derive, spectral_report, Error, Parameters};

mod svg;
mod sweep;

use sweep::{SweepSpec, HEADER};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INADMISSIBLE: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

/// Constants for the M★ and K★ cross-check.
const CONSTANT_TOL: f64 = 1e-7;
const EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "cknwfd", version, about = "Spectral gaps, symmetry breaking and decay rates for weighted fast diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissibility, derived exponents, spectrum, region and thresholds at one point.
    Classify {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Sweep a (beta, gamma) grid at fixed d.
    Map(MapArgs),
    /// Check the closed forms against the eigenvalue solver and the quadratures.
    Verify(VerifyArgs),
    /// Evolve sandwiched radial data and fit the decay rate of the free energy.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct Point {
    #[arg(long)]
    d: u32,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long)]
    p: f64,
}

impl Point {
    fn params(&self) -> Parameters {
        Parameters::new(self.d, self.beta, self.gamma, self.p)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long)]
    d: u32,
    /// Fixed p; without it each point uses the midpoint of (1, p_star).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 200)]
    grid_n: usize,
    #[arg(long, allow_hyphen_values = true)]
    beta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    point: Point,
    /// Cells of the coarse eigenvalue grid.
    #[arg(long, default_value_t = 4000)]
    grid_n: usize,
    /// Truncation radius of the eigenvalue problem; chosen from the tail decay when absent.
    #[arg(long)]
    domain_s: Option<f64>,
    /// Seed for the randomized equivalence test functions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance of the eigenvalue comparison (test hook).
    #[arg(long, hide = true, default_value_t = 1e-4, allow_hyphen_values = true)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    point: Point,
    #[arg(long, default_value_t = 0.8)]
    c1: f64,
    #[arg(long, default_value_t = 1.25)]
    c2: f64,
    #[arg(long, default_value_t = 6.0)]
    t_final: f64,
    #[arg(long, default_value_t = 2000)]
    grid_n: usize,
    /// Outer radius in s; by default the radius holding all but 1e-10 of the mass.
    #[arg(long)]
    domain_s: Option<f64>,
    /// Trace CSV (t, mass, free_energy, fisher).
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// json: summary on stdout; csv: trace on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

enum Failure {
    Inadmissible(String),
    Verification(Value),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Inadmissible(v)) => Failure::Inadmissible(v.join("; ")),
            _ => Failure::Internal(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn print_json(v: &impl Serialize) -> anyhow::Result<()> {
    let out = io::stdout();
    let mut lock = out.lock();
    serde_json::to_writer_pretty(&mut lock, v)?;
    writeln!(lock)?;
    Ok(())
}

fn classify(point: Point, format: Format) -> Outcome {
    let params = point.params();
    let adm = validate(&params)?;
    if !adm.admissible {
        if format == Format::Json {
            print_json(&json!({ "params": params, "admissibility": adm }))?;
        }
        return Err(Failure::Inadmissible(adm.messages().join("; ")));
    }
    match format {
        Format::Json => {
            let fs = h_fs(params.beta, params.gamma, params.d);
            print_json(&json!({
                "params": params,
                "admissibility": adm,
                "derived": derive(&params)?,
                "spectral": spectral_report(&params)?,
                "region": classify_region(&params)?.as_str(),
                "h_fs": fs.value,
                "breaking": fs.breaking,
                "thresholds": thresholds(&params)?,
            }))?;
        }
        Format::Csv => {
            sweep::write_csv(&[sweep::row(&params)], io::stdout().lock()).context("writing csv")?;
        }
    }
    Ok(())
}

fn map(args: &MapArgs) -> Outcome {
    let d = args.d as f64;
    let gamma = (args.gamma_min.unwrap_or(-(d + 1.0)), args.gamma_max.unwrap_or(d));
    let beta = (args.beta_min.unwrap_or(gamma.0 - 2.0), args.beta_max.unwrap_or(d - 2.0));
    let spec = SweepSpec { d: args.d, p: args.p, beta, gamma, resolution: args.grid_n };
    spec.check().map_err(|e| Failure::Internal(anyhow::anyhow!(e)))?;
    let rows = sweep::sweep(&spec);
    let admissible = rows.iter().filter(|r| r.admissible).count();
    if admissible == 0 {
        eprintln!("warning: no admissible points on the grid");
    }
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match args.format {
        Format::Csv => sweep::write_csv(&rows, sink).context("writing csv")?,
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer(&mut sink, &json!({ "columns": HEADER, "rows": rows })).context("writing json")?;
            writeln!(sink).context("writing json")?;
        }
    }
    if let Some(p) = &args.svg_out {
        std::fs::write(p, svg::render(&spec, &rows)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn verify(args: &VerifyArgs) -> Outcome {
    let params = args.point.params();
    derive(&params)?;
    let schedule = RefinementSchedule {
        base_cells: args.grid_n,
        domain: args.domain_s,
        tolerance: args.tolerance,
    };
    let sl = verify_closed_form(&params, &schedule)?;
    let mut passed = sl.passed;

    let (certificate, identity) = match instability_certificate(&params) {
        Ok(c) => {
            passed &= c.consistent();
            let id = spectral_identity_check(&params)?;
            passed &= id.agree;
            (json!(c), json!(id))
        }
        Err(Error::CertificateUnavailable(why)) => (json!({ "unavailable": why }), Value::Null),
        Err(e) => return Err(e.into()),
    };

    let ms = mass_star(&params)?;
    let msq = mass_star_quadrature(&params)?.value;
    let ks = best_radial_constant(&params)?.k_star;
    let ksq = best_radial_constant_quadrature(&params)?.k_star;
    let const_ok = rel(msq, ms) <= CONSTANT_TOL && rel(ksq, ks) <= CONSTANT_TOL;
    passed &= const_ok;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut equivalence = Vec::new();
    for _ in 0..3 {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let a = sign * rng.gen_range(0.1..0.9);
        let w = rng.gen_range(0.3..3.0);
        let chk = equivalence_check(&PerturbedBarenblatt::normalized(&params, a, w)?, &params)?;
        passed &= chk.relative <= EQUIVALENCE_TOL;
        equivalence.push(json!({ "amplitude": a, "width": w, "check": chk }));
    }

    let report = json!({
        "params": params,
        "sl_oracle": sl,
        "certificate": certificate,
        "identity": identity,
        "constants": {
            "mass_star": ms,
            "mass_star_quadrature": msq,
            "k_star": ks,
            "k_star_quadrature": ksq,
            "passed": const_ok,
        },
        "equivalence": equivalence,
        "seed": args.seed,
        "passed": passed,
    });
    if passed {
        print_json(&report)?;
        Ok(())
    } else {
        Err(Failure::Verification(report))
    }
}

fn write_trace<W: Write>(trace: &SimulationTrace, out: W) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SimulationTrace::CSV_HEADER)?;
    for row in trace.rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let params = args.point.params();
    derive(&params)?;
    let domain = match args.domain_s {
        Some(s) => s,
        None => mass_tail_domain(&params, 1e-10)?,
    };
    let mut state = init_sandwiched(&params, args.c1, args.c2, Shape::default(), args.grid_n, domain)?;
    let opts = EvolveOptions {
        t_final: args.t_final,
        sandwich: Some((args.c1, args.c2)),
        ..EvolveOptions::default()
    };
    let trace = evolve_and_fit(&mut state, &opts)?;
    if let Some(p) = &args.trace_out {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_trace(&trace, BufWriter::new(f))?;
    }
    let summary = json!({
        "params": params,
        "c1": args.c1,
        "c2": args.c2,
        "t_final": args.t_final,
        "cells": args.grid_n,
        "domain_s": domain,
        "fitted_rate": trace.fitted_rate.map(|f| f.rate),
        "fit": trace.fitted_rate,
        "predicted_rate": trace.predicted_rate,
        "relative_gap": trace.relative_gap(),
        "bound_ok": trace.bound_ok(),
        "entropy_monotone": trace.entropy_monotone(0.0),
        "stationary": trace.stationary,
        "note": if trace.stationary { Some("initial datum is a Barenblatt profile; no decay rate") } else { None },
        "max_mass_drift": trace.max_mass_drift,
        "max_bound_excess": trace.max_bound_excess,
        "sandwich_preserved": trace.sandwich_preserved,
        "steps": trace.steps,
    });
    match args.format {
        Format::Json => print_json(&summary)?,
        Format::Csv => write_trace(&trace, io::stdout().lock())?,
    }
    Ok(())
}

fn thread_pool() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CKNWFD_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("CKNWFD_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Outcome {
        thread_pool()?;
        match &cli.command {
            Command::Classify { point, format } => classify(*point, *format),
            Command::Map(a) => map(a),
            Command::Verify(a) => verify(a),
            Command::Simulate(a) => simulate(a),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Inadmissible(msg)) => {
            eprintln!("inadmissible parameters: {msg}");
            ExitCode::from(EXIT_INADMISSIBLE)
        }
        Err(Failure::Verification(report)) => {
            let _ = print_json(&report);
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFICATION)
        }
        Err(Failure::Internal(e))
            if e.chain().any(|c| {
                c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
                    || c.downcast_ref::<csv::Error>().is_some_and(|c| {
                        matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe)
                    })
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
