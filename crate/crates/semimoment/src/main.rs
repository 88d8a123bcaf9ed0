//! Command-line front end. Every subcommand reads/writes JSON and uses a
//! stable exit-code contract: 0 all checks passed, 1 a check failed,
//! 2 usage or format error, 3 numeric non-convergence.

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use semimoment::counterexample::{self, SeedSpec};
use semimoment::error::Error;
use semimoment::fiber::theorem1_pipeline;
use semimoment::moment::{check_preorder_positivity, MomentFunctional};
use semimoment::polyring::Polynomial;
use semimoment::semialg::{self, FiberClass, Fixture, SemiAlgebraicSet};
use semimoment::univariate::{AtomicMeasure, MomentVector1D, RANK_TOL};

#[derive(Parser)]
#[command(name = "semimoment", version, about = "Truncated moment problems on semi-algebraic sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check preorder positivity of a moment functional on a set.
    Check {
        /// JSON moment functional file.
        functional: String,
        /// Catalog fixture name or JSON set file.
        set: String,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Reconstruct an atomic measure from univariate moments.
    Quadrature {
        /// JSON moment vector file: {"moments": [m0, ...]}.
        moments: String,
        #[arg(long, default_value_t = RANK_TOL)]
        rank_tol: f64,
    },
    /// Run the base-plus-fibers positivity pipeline on an atomic measure.
    Fiber {
        /// JSON atomic measure file.
        measure: String,
        /// Catalog fixture name or JSON set file.
        set: String,
        /// JSON file with the bounded polynomials (required for set files,
        /// overrides the fixture's own list otherwise).
        #[arg(long)]
        h: Option<String>,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Construct and certify the positive non-moment functional.
    Counterexample {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        t: u32,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 50_000)]
        max_iter: usize,
    },
    /// Print a catalog fixture definition.
    Catalog { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } => 3,
        Error::Infeasible(_) | Error::Verification { .. } => 1,
        Error::Membership(_) => 2,
        _ => 2,
    }
}

fn read_json<T: DeserializeOwned>(path: &str) -> Result<T, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{path}: {e}")))
}

/// Resolve a set argument: a known catalog name, otherwise a JSON file.
fn resolve_set(arg: &str) -> Result<(SemiAlgebraicSet, Option<Fixture>), Error> {
    if semialg::CATALOG_NAMES.contains(&arg) {
        let fx = semialg::catalog(arg)?;
        return Ok((fx.set.clone(), Some(fx)));
    }
    let set: SemiAlgebraicSet = read_json(arg)?;
    Ok((set, None))
}

fn run(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Check {
            functional,
            set,
            level,
            tol,
        } => {
            let l: MomentFunctional = read_json(&functional)?;
            let (set, _) = resolve_set(&set)?;
            let report = check_preorder_positivity(&l, &set, level, tol)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(pass_code(report.pass))
        }
        Command::Quadrature { moments, rank_tol } => {
            let m: MomentVector1D = read_json(&moments)?;
            let mu = m.quadrature_atoms(rank_tol)?;
            let back = mu.moments_1d(m.max_degree())?;
            let out = json!({
                "atoms": mu.points.iter().map(|p| p[0]).collect::<Vec<_>>(),
                "weights": mu.weights,
                "input_moments": m.m,
                "reconstructed_moments": back.m,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fiber {
            measure,
            set,
            h,
            degree,
            tol,
        } => {
            let mu: AtomicMeasure = read_json(&measure)?;
            let (set, fixture) = resolve_set(&set)?;
            let fixture = match (fixture, h) {
                (Some(mut fx), maybe_h) => {
                    if let Some(path) = maybe_h {
                        let polys: Vec<Polynomial> = read_json(&path)?;
                        let ranges = estimate_ranges(&fx, &polys)?;
                        fx.bounded = semialg::BoundedPolySpec::new(polys, ranges)?;
                    }
                    fx
                }
                (None, Some(path)) => {
                    let polys: Vec<Polynomial> = read_json(&path)?;
                    let boxed: Vec<(f64, f64)> = vec![(-1e9, 1e9); polys.len()];
                    Fixture {
                        name: "custom".into(),
                        set: set.clone(),
                        bounded: semialg::BoundedPolySpec::new(polys, boxed)?,
                        sampling_box: vec![(-1.0, 1.0); set.dim],
                        fiber_class: FiberClass::Other,
                        line_axis: None,
                        parametric: None,
                    }
                }
                (None, None) => {
                    return Err(Error::Argument(
                        "--h is required when the set is given as a file".into(),
                    ))
                }
            };
            let report = theorem1_pipeline(&fixture, &mu, degree, tol)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(pass_code(report.pass))
        }
        Command::Counterexample {
            n,
            delta,
            t,
            tol,
            max_iter,
        } => {
            let mut spec = SeedSpec::new(n, delta);
            spec.tol = tol;
            spec.max_iter = max_iter;
            let cert = counterexample::build(&spec, t)?;
            if cert.degenerate {
                eprintln!(
                    "note: L2(x1) = {}, not a counterexample (degenerate delta)",
                    cert.evidence.witness
                );
            }
            println!("{}", serde_json::to_string_pretty(&cert).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog { name } => {
            let fx = semialg::catalog(&name)?;
            let out = json!({
                "name": fx.name,
                "set": fx.set,
                "bounded_polys": fx.bounded.polys,
                "ranges": fx.bounded.ranges,
                "sampling_box": fx.sampling_box,
                "fiber_class": fx.fiber_class,
                "line_axis": fx.line_axis,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn pass_code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// Sampling-based ranges for user-supplied bounded polynomials on a
/// fixture's set.
fn estimate_ranges(fx: &Fixture, polys: &[Polynomial]) -> Result<Vec<(f64, f64)>, Error> {
    polys
        .iter()
        .map(|p| {
            let (lo, hi) = semialg::range_estimate(&fx.set, p, &fx.sampling_box, 2000, 0)?;
            // widen a little: the sample range is an inner estimate
            let pad = 0.05 * (hi - lo).abs().max(1e-6);
            Ok((lo - pad, hi + pad))
        })
        .collect()
}
