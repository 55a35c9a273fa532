//! Runs of the scheme against a reference over a list of mollification
//! widths, with a refinement probe for the discretization floor.

use rayon::prelude::*;

use super::metric::{bootstrap_sample, regularized_reference, BootstrapSample, EnergyDifference, EnergyDifferenceTracker, N_TERMS};
use super::reference::ReferenceSolution;
use crate::assembly::Discretization;
use crate::error::{FpsiError, Result, Verdict};
use crate::regularizer::{fit_order, MollifierKernel};
use crate::scheme::{MonitorThresholds, SchemeConfig, Simulation};
use crate::spaces::Degrees;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// strictly decreasing
    pub deltas: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
    pub h_aux_factor: f64,
    pub quad_order: Option<usize>,
    pub thresholds: MonitorThresholds,
    /// run the smallest width again at `(h/2, dt/2)`
    pub floor_probe: bool,
}

/// Result of one run against the reference.
#[derive(Debug, Clone)]
pub struct TrackedRun {
    pub delta: f64,
    pub series: Vec<EnergyDifference>,
    pub bootstrap: Vec<BootstrapSample>,
    pub termination: Verdict,
}

impl TrackedRun {
    /// Sample with the largest total.
    pub fn worst(&self) -> EnergyDifference {
        *self.series.iter().max_by(|a, b| a.total().total_cmp(&b.total())).expect("series starts with the initial level")
    }

    pub fn min_det(&self) -> f64 {
        self.bootstrap.iter().fold(f64::INFINITY, |m, b| m.min(b.min_det))
    }

    pub fn max_grad_gap(&self) -> f64 {
        self.bootstrap.iter().fold(0.0, |m, b| m.max(b.grad_gap))
    }
}

#[derive(Debug, Clone)]
pub struct DeltaRow {
    pub delta: f64,
    pub max_e: f64,
    pub t_max: f64,
    /// breakdown at `t_max`
    pub terms: [f64; N_TERMS],
    pub bootstrap_min_det: f64,
    pub bootstrap_grad_gap: f64,
    /// min det fell below half the reference's, or a norm blew up
    pub bootstrap_violated: bool,
    pub termination: Verdict,
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub rows: Vec<DeltaRow>,
    pub runs: Vec<TrackedRun>,
    /// `|max E(h, dt) - max E(h/2, dt/2)|` at the smallest width, zero without a probe
    pub floor_estimate: f64,
    /// slope of `log(max E - floor)` in `log delta`; `None` when fewer than
    /// two widths clear the floor
    pub fitted_order: Option<f64>,
    /// slope of the largest gradient gap of the regularized maps
    pub grad_gap_order: Option<f64>,
    pub reference_min_det: f64,
}

impl ConsistencyReport {
    pub fn conclusive(&self) -> bool {
        self.fitted_order.is_some()
    }

    /// `max E` strictly decreasing along the (decreasing) widths.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].max_e < w[0].max_e)
    }

    /// Smallest `C` with `E(t) <= C delta^3 e^{C t}` at every recorded sample.
    pub fn gronwall_constant(&self) -> f64 {
        let mut c: f64 = 0.0;
        for run in &self.runs {
            let d3 = run.delta.powi(3);
            for e in &run.series {
                let target = (e.total() - self.floor_estimate).max(0.0) / d3;
                if target > 0.0 {
                    c = c.max(solve_envelope(target, e.t));
                }
            }
        }
        c
    }
}

/// Smallest `c >= 0` with `c e^{c t} >= target`.
fn solve_envelope(target: f64, t: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let f = |c: f64| c * (c * t).exp() - target;
    let (mut lo, mut hi) = (0.0, target.max(1.0));
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// One run from the interpolated reference, recording the metric and the
/// bootstrap witnesses after every step.
pub fn tracked_run(re: &ReferenceSolution, disc: Discretization, cfg: SchemeConfig) -> Result<TrackedRun> {
    let s0 = re.interpolate(&disc, 0.0)?;
    let (dt, delta, factor) = (cfg.dt, cfg.delta, cfg.h_aux_factor);
    let sim = Simulation::new(disc, cfg, re.forcing())?;
    let disc = &sim.disc;
    let mut tracker = EnergyDifferenceTracker::start(disc, re, &s0)?;
    let mut bootstrap = Vec::new();
    let out = sim.run_observed(s0, |v| {
        tracker.push(disc, re, v.state, v.geom, dt)?;
        let reg_ref = regularized_reference(re, v.prev.t, delta, factor)?;
        bootstrap.push(bootstrap_sample(disc, &reg_ref, v.prev.t, v.geom));
        Ok(())
    })?;
    Ok(TrackedRun {
        delta,
        series: tracker.series,
        bootstrap,
        termination: out.termination,
    })
}

pub fn delta_sweep(re: &ReferenceSolution, sw: &SweepConfig) -> Result<ConsistencyReport> {
    if sw.deltas.is_empty() || sw.deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FpsiError::config("deltas", "δ list strictly decreasing"));
    }
    let disc = |nx: usize, ny: usize| Discretization::new(re.params, nx, ny, Degrees::default(), sw.quad_order);
    let cfg = |delta: f64, dt: f64| SchemeConfig {
        dt,
        t_end: sw.t_end,
        delta,
        h_aux_factor: sw.h_aux_factor,
        thresholds: sw.thresholds,
        snapshot_stride: 0,
    };
    let base = disc(sw.nx, sw.ny)?;
    let runs: Vec<TrackedRun> = sw
        .deltas
        .par_iter()
        .map(|&d| tracked_run(re, base.clone(), cfg(d, sw.dt)))
        .collect::<Result<_>>()?;
    let smallest = *sw.deltas.last().expect("non-empty");
    let floor_estimate = if sw.floor_probe {
        let fine = tracked_run(re, disc(2 * sw.nx, 2 * sw.ny)?, cfg(smallest, 0.5 * sw.dt))?;
        (runs.last().expect("non-empty").worst().total() - fine.worst().total()).abs()
    } else {
        0.0
    };

    let ref_min_det = re.min_det_over(sw.t_end, 40, 20);
    let rows: Vec<DeltaRow> = runs
        .iter()
        .map(|r| {
            let w = r.worst();
            let min_det = r.min_det();
            let norms_ok = r.bootstrap.iter().all(|b| b.max_norm_f.is_finite() && b.max_norm_f_inv.is_finite());
            DeltaRow {
                delta: r.delta,
                max_e: w.total(),
                t_max: w.t,
                terms: w.terms,
                bootstrap_min_det: min_det,
                bootstrap_grad_gap: r.max_grad_gap(),
                bootstrap_violated: !(min_det >= 0.5 * ref_min_det) || !norms_ok,
                termination: r.termination,
            }
        })
        .collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.max_e - floor_estimate > 0.0)
        .map(|r| (r.delta, r.max_e - floor_estimate))
        .unzip();
    let fitted_order = if xs.len() >= 2 { fit_order(&xs, &ys) } else { None };
    let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.bootstrap_grad_gap).collect();
    Ok(ConsistencyReport {
        rows,
        runs,
        floor_estimate,
        fitted_order,
        grad_gap_order: fit_order(&ds, &gaps),
        reference_min_det: ref_min_det,
    })
}

/// `||sigma_delta||_{L^2} * delta` measured by a midpoint sum on a grid of
/// `n x n` cells over the support.
pub fn measured_kernel_norm_scaled(delta: f64, n: usize) -> f64 {
    let k = MollifierKernel::new(delta);
    let h = 2.0 * delta / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = [-delta + (i as f64 + 0.5) * h, -delta + (j as f64 + 0.5) * h];
            let v = k.eval(z).0;
            s += v * v * h * h;
        }
    }
    s.sqrt() * delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhysicalParams;
    use crate::consistency::reference::{build_reference, ReferenceAmplitudes, ReferenceKind};

    #[test]
    fn kernel_norm_scales_inversely_with_width() {
        let v: Vec<f64> = [0.2, 0.1, 0.05, 0.025].iter().map(|d| measured_kernel_norm_scaled(*d, 400)).collect();
        for w in &v {
            assert!((w / v[0] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn envelope_solution() {
        let c = solve_envelope(5.0, 0.5);
        assert!((c * (0.5 * c).exp() - 5.0).abs() < 1e-9);
        assert_eq!(solve_envelope(0.0, 1.0), 0.0);
    }

    #[test]
    fn rest_sweep_is_identically_zero() {
        let re = build_reference(ReferenceKind::Rest, PhysicalParams::default(), ReferenceAmplitudes::default()).unwrap();
        let sw = SweepConfig {
            deltas: vec![0.2, 0.1],
            nx: 2,
            ny: 2,
            dt: 0.1,
            t_end: 0.2,
            h_aux_factor: 0.25,
            quad_order: None,
            thresholds: MonitorThresholds::for_radius(1.0),
            floor_probe: true,
        };
        let rep = delta_sweep(&re, &sw).unwrap();
        for r in &rep.rows {
            assert_eq!(r.max_e, 0.0);
            assert_eq!(r.bootstrap_min_det, 1.0);
            assert!(!r.bootstrap_violated);
        }
        assert_eq!(rep.floor_estimate, 0.0);
        assert!(!rep.conclusive());
    }
}
