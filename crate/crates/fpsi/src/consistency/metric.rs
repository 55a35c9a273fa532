//! Energy norm of the difference between a run and a reference, and the
//! geometric witnesses of the regularized body map along the run.

use rayon::prelude::*;

use super::reference::ReferenceSolution;
use crate::assembly::{BiotGeometry, Discretization, PlateVelocitySource};
use crate::error::Result;
use crate::regularizer::{mollify, ExtendedField, RegularizedDisplacement};
use crate::scheme::CoupledState;
use crate::spaces::hermite::PlateEval;
use crate::spaces::lagrange::map_point;
use crate::spaces::Tabulation;
use crate::transforms::{cof2, det2, TransferMaps};
use crate::assembly::interface_points;

pub const N_TERMS: usize = 11;

pub const TERM_NAMES: [&str; N_TERMS] = [
    "fluid_velocity",
    "fluid_strain_integral",
    "plate_velocity",
    "plate_h2",
    "body_velocity",
    "body_strain",
    "body_divergence",
    "body_rate_strain_integral",
    "body_rate_divergence_integral",
    "pore_pressure",
    "pore_gradient_integral",
];

/// Slots that are time integrals; the others are values at the current time.
pub const INTEGRAL_TERMS: [usize; 4] = [1, 7, 8, 10];

/// One sample of the metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDifference {
    pub t: f64,
    pub terms: [f64; N_TERMS],
}

impl EnergyDifference {
    pub fn total(&self) -> f64 {
        self.terms.iter().sum()
    }
}

fn sym_sq(g: &[[f64; 2]; 2]) -> f64 {
    let off = 0.5 * (g[0][1] + g[1][0]);
    g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * off * off
}

fn clamp_eval(disc: &Discretization, coef: &[f64], x: f64) -> PlateEval {
    disc.sp.plate.eval(coef, x.clamp(0.0, disc.params.l)).expect("clamped into the plate")
}

/// Fluid contributions `(velocity, strain)` on the numerical domain.
fn fluid_terms(disc: &Discretization, re: &ReferenceSolution, s: &CoupledState) -> Result<(f64, f64)> {
    let prm = disc.params;
    let sp = &disc.sp;
    let tm = TransferMaps::new(prm.l, prm.r);
    let area = disc.triangle_area();
    let fg = sp.velocity.grid;
    let tv = &disc.tab_velocity;
    let t = s.t;
    let ref_plate = |x: f64| {
        let w = re.plate_sample(t, x).omega;
        PlateEval { v: w[0], dx: w[1], dxx: w[2], dxxx: w[3] }
    };
    let num_plate = |x: f64| clamp_eval(disc, &s.omega, x);
    let per: Vec<Result<(f64, f64)>> = (0..fg.n_triangles())
        .into_par_iter()
        .map(|tri| {
            let kind = Tabulation::kind_index(fg.triangle(tri).2);
            let vn = &sp.velocity.cell_nodes[tri];
            let mut acc = (0.0, 0.0);
            for q in 0..tv.weights.len() {
                let ph = map_point(&fg, tri, tv.points[q]);
                let om = num_plate(ph[0]);
                let jac = 1.0 + om.v / prm.r;
                let gm = tm.fluid_gradient_matrix(&om, ph)?;
                let phys = tm.ale_map(&num_plate, ph)?;
                let (ur, gr) = tm.push_forward_with_gradient(
                    |z| {
                        let f = re.fluid_sample(t, z);
                        (f.u, f.grad_u)
                    },
                    &ref_plate,
                    &num_plate,
                    phys,
                )?;
                let mut u = [0.0; 2];
                let mut gu = [[0.0; 2]; 2];
                for (a, &nd) in vn.iter().enumerate() {
                    let g0 = tv.grads[kind][q][a];
                    let g = [gm[0][0] * g0[0] + gm[0][1] * g0[1], gm[1][1] * g0[1]];
                    for c in 0..2 {
                        let v = s.u[2 * nd + c];
                        u[c] += v * tv.vals[q][a];
                        gu[c][0] += v * g[0];
                        gu[c][1] += v * g[1];
                    }
                }
                let du = [ur[0] - u[0], ur[1] - u[1]];
                let dg = [[gr[0][0] - gu[0][0], gr[0][1] - gu[0][1]], [gr[1][0] - gu[1][0], gr[1][1] - gu[1][1]]];
                let w = tv.weights[q] * area * jac;
                acc.0 += w * (du[0] * du[0] + du[1] * du[1]);
                acc.1 += w * sym_sq(&dg);
            }
            Ok(acc)
        })
        .collect();
    let mut out = (0.0, 0.0);
    for r in per {
        let (a, b) = r?;
        out.0 += a;
        out.1 += b;
    }
    Ok(out)
}

/// Body contributions: velocity, strain, divergence, pressure, rate
/// strain, rate divergence, and (with a geometry) the pore-gradient term.
fn body_terms(disc: &Discretization, re: &ReferenceSolution, s: &CoupledState, geom: Option<&BiotGeometry>) -> [f64; 7] {
    let sp = &disc.sp;
    let area = disc.triangle_area();
    let bg = sp.displacement.grid;
    let td = &disc.tab_displacement;
    let tp = &disc.tab_pressure;
    let t = s.t;
    (0..bg.n_triangles())
        .into_par_iter()
        .map(|tri| {
            let kind = Tabulation::kind_index(bg.triangle(tri).2);
            let dn = &sp.displacement.cell_nodes[tri];
            let pn = &sp.pressure.cell_nodes[tri];
            let mut acc = [0.0; 7];
            for q in 0..td.weights.len() {
                let pt = map_point(&bg, tri, td.points[q]);
                let b = re.body_sample(t, pt);
                let mut xi = b.xi;
                let mut ge = b.grad_eta;
                let mut gx = b.grad_xi;
                for (a, &nd) in dn.iter().enumerate() {
                    let g = td.grads[kind][q][a];
                    for c in 0..2 {
                        xi[c] -= s.xi[2 * nd + c] * td.vals[q][a];
                        for d in 0..2 {
                            ge[c][d] -= s.eta[2 * nd + c] * g[d];
                            gx[c][d] -= s.xi[2 * nd + c] * g[d];
                        }
                    }
                }
                let mut p = b.p;
                let mut gp = b.grad_p;
                for (c, &nd) in pn.iter().enumerate() {
                    p -= s.p[nd] * tp.vals[q][c];
                    let g = tp.grads[kind][q][c];
                    gp[0] -= s.p[nd] * g[0];
                    gp[1] -= s.p[nd] * g[1];
                }
                let w = td.weights[q] * area;
                let de = ge[0][0] + ge[1][1];
                let dx = gx[0][0] + gx[1][1];
                acc[0] += w * (xi[0] * xi[0] + xi[1] * xi[1]);
                acc[1] += w * sym_sq(&ge);
                acc[2] += w * de * de;
                acc[3] += w * p * p;
                acc[4] += w * sym_sq(&gx);
                acc[5] += w * dx * dx;
                if let Some(g) = geom {
                    let fm = g.f[tri * g.n_q + q];
                    let cof = cof2(&fm);
                    let cg = [cof[0][0] * gp[0] + cof[0][1] * gp[1], cof[1][0] * gp[0] + cof[1][1] * gp[1]];
                    acc[6] += w * (cg[0] * cg[0] + cg[1] * cg[1]) / det2(&fm);
                }
            }
            acc
        })
        .reduce(|| [0.0; 7], |a, b| std::array::from_fn(|k| a[k] + b[k]))
}

fn interface_terms(disc: &Discretization, re: &ReferenceSolution, s: &CoupledState) -> (f64, f64) {
    let mut vel = 0.0;
    let mut h2 = 0.0;
    let trace = PlateVelocitySource::Trace(&s.xi);
    for (e, sl, x, w) in interface_points(disc) {
        let r = re.plate_sample(s.t, x);
        let dz = r.zeta - trace.eval(disc, e, sl);
        vel += w * dz * dz;
        let n = disc.sp.plate.eval_local(&s.omega, e, sl);
        let d = [r.omega[0] - n.v, r.omega[1] - n.dx, r.omega[2] - n.dxx];
        h2 += w * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    }
    (vel, h2)
}

/// Values of the pointwise-in-time terms at the level `s`; the integral
/// slots are zero.
pub fn state_terms(disc: &Discretization, re: &ReferenceSolution, s: &CoupledState) -> Result<[f64; N_TERMS]> {
    let (fv, _) = fluid_terms(disc, re, s)?;
    let (pv, h2) = interface_terms(disc, re, s);
    let b = body_terms(disc, re, s, None);
    Ok([fv, 0.0, pv, h2, b[0], b[1], b[2], 0.0, 0.0, b[3], 0.0])
}

/// Integrands of the time-integral terms at the level `s`, with the body
/// geometry `geom` of the step producing it; the other slots are zero.
pub fn rate_terms(disc: &Discretization, re: &ReferenceSolution, s: &CoupledState, geom: &BiotGeometry) -> Result<[f64; N_TERMS]> {
    let (_, fs) = fluid_terms(disc, re, s)?;
    let b = body_terms(disc, re, s, Some(geom));
    let mut out = [0.0; N_TERMS];
    out[1] = fs;
    out[7] = b[4];
    out[8] = b[5];
    out[10] = b[6];
    Ok(out)
}

/// Accumulates the metric along a run: integral slots by the right-endpoint rule.
#[derive(Debug, Clone, Default)]
pub struct EnergyDifferenceTracker {
    integrals: [f64; N_TERMS],
    pub series: Vec<EnergyDifference>,
}

impl EnergyDifferenceTracker {
    pub fn start(disc: &Discretization, re: &ReferenceSolution, s0: &CoupledState) -> Result<Self> {
        let terms = state_terms(disc, re, s0)?;
        Ok(EnergyDifferenceTracker {
            integrals: [0.0; N_TERMS],
            series: vec![EnergyDifference { t: s0.t, terms }],
        })
    }

    pub fn push(&mut self, disc: &Discretization, re: &ReferenceSolution, s: &CoupledState, geom: &BiotGeometry, dt: f64) -> Result<()> {
        let rate = rate_terms(disc, re, s, geom)?;
        for k in INTEGRAL_TERMS {
            self.integrals[k] += dt * rate[k];
        }
        let mut terms = state_terms(disc, re, s)?;
        for k in INTEGRAL_TERMS {
            terms[k] = self.integrals[k];
        }
        self.series.push(EnergyDifference { t: s.t, terms });
        Ok(())
    }

    /// Sample at the largest recorded time not after `t`.
    pub fn at(&self, t: f64) -> Option<&EnergyDifference> {
        self.series.iter().rev().find(|e| e.t <= t + 1e-12)
    }

    /// Sample with the largest total.
    pub fn worst(&self) -> Option<&EnergyDifference> {
        self.series.iter().max_by(|a, b| a.total().total_cmp(&b.total()))
    }
}

/// Geometric witnesses at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSample {
    pub t: f64,
    pub min_det: f64,
    pub max_norm_f: f64,
    pub max_norm_f_inv: f64,
    /// largest `|grad eta_ref^delta - grad eta_num^delta|` over the body quadrature points
    pub grad_gap: f64,
}

/// Regularization of the reference displacement at time `t`.
pub fn regularized_reference(re: &ReferenceSolution, t: f64, delta: f64, factor: f64) -> Result<RegularizedDisplacement> {
    let ext = ExtendedField::sample(|p| re.body_sample(t, p).eta, re.params.l, re.params.r, delta, factor)?;
    mollify(ext, delta)
}

pub fn bootstrap_sample(disc: &Discretization, reg_ref: &RegularizedDisplacement, t: f64, geom: &BiotGeometry) -> BootstrapSample {
    let grid = disc.sp.displacement.grid;
    let nq = geom.n_q;
    let gap = (0..grid.n_triangles() * nq)
        .into_par_iter()
        .map(|k| {
            let p = map_point(&grid, k / nq, disc.rule.points[k % nq]);
            let g = reg_ref.eval(p).1;
            let f = geom.f[k];
            let d = [[1.0 + g[0][0] - f[0][0], g[0][1] - f[0][1]], [g[1][0] - f[1][0], 1.0 + g[1][1] - f[1][1]]];
            d.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .reduce(|| 0.0, f64::max);
    BootstrapSample {
        t,
        min_det: geom.min_det,
        max_norm_f: geom.max_norm_f,
        max_norm_f_inv: geom.max_norm_f_inv,
        grad_gap: gap,
    }
}
