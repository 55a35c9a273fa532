//! Command-line surface: `run`, `sweep-delta`, `verify` and `mms`.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, solver), 2 configuration
//! or usage error, 3 degeneracy termination, 4 property failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::assembly::{Discretization, Forcing, PhysicalParams};
use crate::consistency::sweep::{delta_sweep, SweepConfig};
use crate::consistency::{build_reference, check_reference_residuals, ReferenceAmplitudes, ReferenceKind};
use crate::error::{FpsiError, Verdict};
use crate::io::{self, csv, RunConfig};
use crate::regularizer::{convolution_rate_report, rate_test_field};
use crate::scheme::Simulation;
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

/// Residual bound a reference must meet before it is used.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "fpsi", version, about = "Fluid / poroelastic body / plate interaction solver")]
struct Cli {
    /// worker threads for assembly and sweeps (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// seed of the random sample points and fields
    #[arg(long, global = true, default_value_t = 20240607)]
    seed: u64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate, writing the energy ledger and field snapshots
    Run(IoArgs),
    /// Consistency sweep against a manufactured reference
    SweepDelta(IoArgs),
    /// Run the property suite
    Verify(IoArgs),
    /// Residual check of the manufactured references
    Mms(IoArgs),
}

#[derive(clap::Args, Debug)]
struct IoArgs {
    /// flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory (overrides the environment and the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Error(FpsiError),
    Degenerate(String),
    Property(String),
}

impl From<FpsiError> for Failure {
    fn from(e: FpsiError) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start thread pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    let seed = cli.seed;
    let result = pool.install(|| match &cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::SweepDelta(a) => cmd_sweep(a, seed),
        Command::Verify(a) => cmd_verify(a, seed),
        Command::Mms(a) => cmd_mms(a, seed),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Error(e @ FpsiError::Config { .. })) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Err(Failure::Error(FpsiError::Degeneracy { cause, x, y, detail })) => {
            eprintln!("terminated: cause={cause} at ({x}, {y}): {detail}");
            EXIT_DEGENERATE
        }
        Err(Failure::Error(e)) => {
            eprintln!("{e}");
            EXIT_RUNTIME
        }
        Err(Failure::Degenerate(msg)) => {
            eprintln!("{msg}");
            EXIT_DEGENERATE
        }
        Err(Failure::Property(msg)) => {
            eprintln!("{msg}");
            EXIT_PROPERTY
        }
    }
}

fn require_config(a: &IoArgs) -> std::result::Result<RunConfig, FpsiError> {
    let path = a
        .config
        .as_deref()
        .ok_or_else(|| FpsiError::config("--config", "a configuration file is required"))?;
    io::load_config(path)
}

fn out_dir(a: &IoArgs, cfg: &RunConfig) -> std::result::Result<PathBuf, FpsiError> {
    let dir = io::resolve_out_dir(a.out.as_deref(), &cfg.out_dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> std::result::Result<(), FpsiError> {
    let mut w = io::create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_run(a: &IoArgs) -> Outcome {
    let cfg = require_config(a)?;
    let dir = out_dir(a, &cfg)?;
    let disc = Discretization::new(cfg.params, cfg.nx, cfg.ny, cfg.degrees(), cfg.quad_order)?;
    let s0 = cfg.initial_case()?.build(&disc)?;
    let sim = Simulation::new(disc, cfg.scheme_config(), Forcing::default())?;
    let res = sim.run(s0)?;
    std::fs::write(dir.join("run.cfg"), io::serialize_config(&cfg))?;
    write_file(&dir.join("ledger.csv"), |mut w| csv::write_ledger(&mut w, &res.ledger))?;
    if cfg.write_vtk {
        for s in &res.snapshots {
            io::write_snapshot(&dir, &sim.disc, s)?;
        }
    }
    let accepted = res.ledger.rows.iter().filter(|r| r.verdict == Verdict::Ok).count();
    println!(
        "steps {accepted}, t = {}, E0 = {:.6e}, E = {:.6e}, output in {}",
        res.final_state.t,
        res.ledger.e0,
        sim.full_energy(&res.final_state),
        dir.display()
    );
    if res.termination != Verdict::Ok {
        let last_ok = res.ledger.rows.iter().rev().find(|r| r.verdict == Verdict::Ok);
        let (gap, det) = last_ok.map_or((f64::NAN, f64::NAN), |r| (r.min_gap_r, r.min_det));
        let rejected = res.ledger.rows.last().expect("a rejected step is recorded");
        return Err(Failure::Degenerate(format!(
            "terminated: cause={} at t={} (last accepted step: min_gap_R={gap:.6e}, min_det={det:.6e}; rejected: min_gap_R={:.6e}, min_det={:.6e})",
            res.termination, rejected.t, rejected.min_gap_r, rejected.min_det
        )));
    }
    Ok(())
}

fn cmd_sweep(a: &IoArgs, seed: u64) -> Outcome {
    let cfg = require_config(a)?;
    let dir = out_dir(a, &cfg)?;
    let re = build_reference(cfg.reference, cfg.params, cfg.reference_amplitudes)?;
    let res = check_reference_residuals(&re, cfg.residual_points, cfg.t_end, seed);
    if !res.passes(RESIDUAL_TOL) {
        return Err(Failure::Property(format!(
            "reference {} is not eligible: residual {:.3e} > {RESIDUAL_TOL:e}",
            re.kind.as_str(),
            res.max()
        )));
    }
    let (l, r) = (cfg.params.l, cfg.params.r);
    let rates = convolution_rate_report(rate_test_field(l, r), l, r, &cfg.sweep_deltas, cfg.h_aux_factor, 64)?;
    write_file(&dir.join("mollifier_rates.csv"), |mut w| csv::write_rates(&mut w, &rates))?;

    let sw = SweepConfig {
        deltas: cfg.sweep_deltas.clone(),
        nx: cfg.nx,
        ny: cfg.ny,
        dt: cfg.dt,
        t_end: cfg.t_end,
        h_aux_factor: cfg.h_aux_factor,
        quad_order: cfg.quad_order,
        thresholds: cfg.thresholds,
        floor_probe: cfg.floor_probe,
    };
    let rep = delta_sweep(&re, &sw)?;
    write_file(&dir.join("consistency.csv"), |mut w| csv::write_sweep(&mut w, &rep))?;
    write_file(&dir.join("consistency_series.csv"), |mut w| csv::write_sweep_series(&mut w, &rep))?;
    for row in &rep.rows {
        println!(
            "delta {:.4e}  max E {:.6e} at t = {:.3}  bootstrap det {:.4} gap {:.3e}{}  {}",
            row.delta,
            row.max_e,
            row.t_max,
            row.bootstrap_min_det,
            row.bootstrap_grad_gap,
            if row.bootstrap_violated { " (violated)" } else { "" },
            row.termination
        );
    }
    println!("floor estimate {:.6e}", rep.floor_estimate);
    match rep.fitted_order {
        Some(p) => println!("fitted order {p:.3}, monotone {}, Gronwall constant {:.3e}", rep.monotone(), rep.gronwall_constant()),
        None => println!("inconclusive: fewer than two widths clear the floor"),
    }
    println!("output in {}", dir.display());
    Ok(())
}

fn cmd_verify(a: &IoArgs, seed: u64) -> Outcome {
    if a.config.is_some() {
        return Err(FpsiError::config("--config", "verify takes no configuration").into());
    }
    let results = verify::full_suite(seed);
    let mut failed = 0;
    for r in &results {
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    if let Some(dir) = a.out.as_deref() {
        std::fs::create_dir_all(dir)?;
        let rates = convolution_rate_report(rate_test_field(1.0, 1.0), 1.0, 1.0, &verify::RATE_DELTAS, 0.125, 64)?;
        write_file(&dir.join("mollifier_rates.csv"), |mut w| csv::write_rates(&mut w, &rates))?;
    }
    if failed > 0 {
        return Err(Failure::Property(format!("{failed} of {} properties failed", results.len())));
    }
    println!("all {} properties pass", results.len());
    Ok(())
}

fn cmd_mms(a: &IoArgs, seed: u64) -> Outcome {
    let (refs, points, t_end) = match &a.config {
        Some(_) => {
            let cfg = require_config(a)?;
            (vec![(cfg.reference, cfg.params, cfg.reference_amplitudes)], cfg.residual_points, cfg.t_end)
        }
        None => (
            [ReferenceKind::Rest, ReferenceKind::Separable]
                .into_iter()
                .map(|k| (k, PhysicalParams::default(), ReferenceAmplitudes::default()))
                .collect(),
            100,
            1.0,
        ),
    };
    let mut worst: f64 = 0.0;
    for (kind, params, amp) in refs {
        let re = build_reference(kind, params, amp)?;
        let r = check_reference_residuals(&re, points, t_end, seed);
        println!(
            "{} {}: {} points, fluid {:.2e}, divergence {:.2e}, fluid interface {:.2e}, body {:.2e}, pressure {:.2e}, plate {:.2e}, coupling {:.2e}",
            if r.passes(RESIDUAL_TOL) { "PASS" } else { "FAIL" },
            kind.as_str(),
            r.points,
            r.fluid,
            r.divergence,
            r.fluid_interface,
            r.biot,
            r.pressure,
            r.plate,
            r.coupling
        );
        worst = worst.max(r.max());
    }
    if !(worst <= RESIDUAL_TOL) {
        return Err(Failure::Property(format!("largest residual {worst:.3e} exceeds {RESIDUAL_TOL:e}")));
    }
    Ok(())
}
