//! Discrete energy and dissipation, integrated with the same quadrature
//! as the assembled systems.

use rayon::prelude::*;

use super::coupled::BiotGeometry;
use super::plate::interface_points;
use super::Discretization;
use crate::spaces::lagrange::map_point;
use crate::spaces::{line_basis, Tabulation};
use crate::transforms::{cof2, det2, TransferMaps};

/// Where the plate velocity in the kinetic energy comes from.
#[derive(Debug, Clone, Copy)]
pub enum PlateVelocitySource<'a> {
    Zero,
    /// Hermite coefficients
    Hermite(&'a [f64]),
    /// transverse trace of a displacement-space vector
    Trace(&'a [f64]),
    /// first minus second
    Difference(&'a PlateVelocitySource<'a>, &'a PlateVelocitySource<'a>),
}

impl PlateVelocitySource<'_> {
    pub(crate) fn eval(&self, disc: &Discretization, e: usize, s: f64) -> f64 {
        let trace = |xi: &[f64]| {
            let k = disc.sp.displacement.degree();
            let bot = disc.sp.displacement.row_nodes(false);
            let mut v = vec![0.0; k + 1];
            let mut d = vec![0.0; k + 1];
            line_basis(k, s, &mut v, &mut d);
            (0..=k).map(|m| xi[2 * bot[k * e + m] + 1] * v[m]).sum::<f64>()
        };
        let herm = |z: &[f64]| disc.sp.plate.eval_local(z, e, s).v;
        match *self {
            PlateVelocitySource::Zero => 0.0,
            PlateVelocitySource::Hermite(z) => herm(z),
            PlateVelocitySource::Trace(xi) => trace(xi),
            PlateVelocitySource::Difference(a, b) => a.eval(disc, e, s) - b.eval(disc, e, s),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyRecord {
    pub fluid_kinetic: f64,
    pub biot_kinetic: f64,
    pub storage: f64,
    pub elastic_shear: f64,
    pub elastic_bulk: f64,
    pub plate_kinetic: f64,
    pub plate_bending: f64,
}

impl EnergyRecord {
    pub fn total(&self) -> f64 {
        self.fluid_kinetic
            + self.biot_kinetic
            + self.storage
            + self.elastic_shear
            + self.elastic_bulk
            + self.plate_kinetic
            + self.plate_bending
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DissipationRecord {
    pub fluid_viscous: f64,
    pub biot_viscous_shear: f64,
    pub biot_viscous_bulk: f64,
    pub permeability: f64,
    pub slip: f64,
}

impl DissipationRecord {
    pub fn total(&self) -> f64 {
        self.fluid_viscous + self.biot_viscous_shear + self.biot_viscous_bulk + self.permeability + self.slip
    }
}

/// Fields entering the energy; any of them may be a difference of levels.
pub struct EnergyFields<'a> {
    pub u: &'a [f64],
    /// plate displacement giving the fluid weight `1 + omega / R`
    pub omega_weight: &'a [f64],
    pub xi: &'a [f64],
    pub p: &'a [f64],
    pub eta: &'a [f64],
    pub zeta: PlateVelocitySource<'a>,
    /// plate displacement for the bending energy
    pub omega: &'a [f64],
}

pub fn compute_discrete_energy(disc: &Discretization, f: &EnergyFields) -> EnergyRecord {
    let prm = disc.params;
    let sp = &disc.sp;
    let area = disc.triangle_area();
    let fg = sp.velocity.grid;
    let tv = &disc.tab_velocity;
    let fluid: f64 = (0..fg.n_triangles())
        .into_par_iter()
        .map(|t| {
            let vn = &sp.velocity.cell_nodes[t];
            let mut s = 0.0;
            for q in 0..tv.weights.len() {
                let p = map_point(&fg, t, tv.points[q]);
                let jac = 1.0 + sp.plate.eval(f.omega_weight, p[0]).unwrap().v / prm.r;
                let mut u = [0.0; 2];
                for (a, &nd) in vn.iter().enumerate() {
                    u[0] += f.u[2 * nd] * tv.vals[q][a];
                    u[1] += f.u[2 * nd + 1] * tv.vals[q][a];
                }
                s += tv.weights[q] * area * 0.5 * jac * (u[0] * u[0] + u[1] * u[1]);
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();

    let bg = sp.displacement.grid;
    let td = &disc.tab_displacement;
    let tp = &disc.tab_pressure;
    let biot: [f64; 4] = (0..bg.n_triangles())
        .into_par_iter()
        .map(|t| {
            let kind = Tabulation::kind_index(bg.triangle(t).2);
            let dn = &sp.displacement.cell_nodes[t];
            let pn = &sp.pressure.cell_nodes[t];
            let mut s = [0.0; 4];
            for q in 0..td.weights.len() {
                let w = td.weights[q] * area;
                let mut xi = [0.0; 2];
                let mut ge = [[0.0; 2]; 2];
                for (a, &nd) in dn.iter().enumerate() {
                    let g = td.grads[kind][q][a];
                    for c in 0..2 {
                        xi[c] += f.xi[2 * nd + c] * td.vals[q][a];
                        ge[c][0] += f.eta[2 * nd + c] * g[0];
                        ge[c][1] += f.eta[2 * nd + c] * g[1];
                    }
                }
                let p: f64 = pn.iter().enumerate().map(|(c, &nd)| f.p[nd] * tp.vals[q][c]).sum();
                let off = 0.5 * (ge[0][1] + ge[1][0]);
                let dd = ge[0][0] * ge[0][0] + ge[1][1] * ge[1][1] + 2.0 * off * off;
                let dv = ge[0][0] + ge[1][1];
                s[0] += w * 0.5 * prm.rho_b * (xi[0] * xi[0] + xi[1] * xi[1]);
                s[1] += w * 0.5 * prm.c0 * p * p;
                s[2] += w * prm.mu_e * dd;
                s[3] += w * 0.5 * prm.lambda_e * dv * dv;
            }
            s
        })
        .collect::<Vec<[f64; 4]>>()
        .iter()
        .fold([0.0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);

    let mut pk = 0.0;
    let mut pb = 0.0;
    for (e, s, _, w) in interface_points(disc) {
        let z = f.zeta.eval(disc, e, s);
        pk += w * 0.5 * prm.rho_p * z * z;
        let wxx = sp.plate.eval_local(f.omega, e, s).dxx;
        pb += w * 0.5 * wxx * wxx;
    }
    EnergyRecord {
        fluid_kinetic: fluid,
        biot_kinetic: biot[0],
        storage: biot[1],
        elastic_shear: biot[2],
        elastic_bulk: biot[3],
        plate_kinetic: pk,
        plate_bending: pb,
    }
}

/// Fields entering the dissipation of one coupled step.
pub struct DissipationFields<'a> {
    pub u: &'a [f64],
    /// plate displacement defining the fluid geometry of the step
    pub omega_n: &'a [f64],
    pub eta_dot: &'a [f64],
    pub p: &'a [f64],
    pub geom: &'a BiotGeometry,
}

pub fn compute_discrete_dissipation(disc: &Discretization, f: &DissipationFields, dt: f64) -> DissipationRecord {
    let prm = disc.params;
    let sp = &disc.sp;
    let area = disc.triangle_area();
    let tm = TransferMaps::new(prm.l, prm.r);
    let fg = sp.velocity.grid;
    let tv = &disc.tab_velocity;
    let fluid: f64 = (0..fg.n_triangles())
        .into_par_iter()
        .map(|t| {
            let kind = Tabulation::kind_index(fg.triangle(t).2);
            let vn = &sp.velocity.cell_nodes[t];
            let mut s = 0.0;
            for q in 0..tv.weights.len() {
                let p = map_point(&fg, t, tv.points[q]);
                let om = sp.plate.eval(f.omega_n, p[0]).unwrap();
                let jac = 1.0 + om.v / prm.r;
                let gm = tm.fluid_gradient_matrix(&om, p).expect("geometry checked before the step");
                let mut gu = [[0.0; 2]; 2];
                for (a, &nd) in vn.iter().enumerate() {
                    let gr = tv.grads[kind][q][a];
                    let g = [gm[0][0] * gr[0] + gm[0][1] * gr[1], gm[1][1] * gr[1]];
                    for c in 0..2 {
                        gu[c][0] += f.u[2 * nd + c] * g[0];
                        gu[c][1] += f.u[2 * nd + c] * g[1];
                    }
                }
                let off = 0.5 * (gu[0][1] + gu[1][0]);
                let dd = gu[0][0] * gu[0][0] + gu[1][1] * gu[1][1] + 2.0 * off * off;
                s += tv.weights[q] * area * 2.0 * prm.nu * jac * dd;
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();

    let bg = sp.displacement.grid;
    let td = &disc.tab_displacement;
    let tp = &disc.tab_pressure;
    let nq = f.geom.n_q;
    let biot: [f64; 3] = (0..bg.n_triangles())
        .into_par_iter()
        .map(|t| {
            let kind = Tabulation::kind_index(bg.triangle(t).2);
            let dn = &sp.displacement.cell_nodes[t];
            let pn = &sp.pressure.cell_nodes[t];
            let mut s = [0.0; 3];
            for q in 0..td.weights.len() {
                let w = td.weights[q] * area;
                let mut ge = [[0.0; 2]; 2];
                for (a, &nd) in dn.iter().enumerate() {
                    let g = td.grads[kind][q][a];
                    for c in 0..2 {
                        ge[c][0] += f.eta_dot[2 * nd + c] * g[0];
                        ge[c][1] += f.eta_dot[2 * nd + c] * g[1];
                    }
                }
                let mut gp = [0.0; 2];
                for (c, &nd) in pn.iter().enumerate() {
                    let g = tp.grads[kind][q][c];
                    gp[0] += f.p[nd] * g[0];
                    gp[1] += f.p[nd] * g[1];
                }
                let fm = f.geom.f[t * nq + q];
                let cof = cof2(&fm);
                let cg = [cof[0][0] * gp[0] + cof[0][1] * gp[1], cof[1][0] * gp[0] + cof[1][1] * gp[1]];
                let off = 0.5 * (ge[0][1] + ge[1][0]);
                let dd = ge[0][0] * ge[0][0] + ge[1][1] * ge[1][1] + 2.0 * off * off;
                let dv = ge[0][0] + ge[1][1];
                s[0] += w * 2.0 * prm.mu_v * dd;
                s[1] += w * prm.lambda_v * dv * dv;
                s[2] += w * prm.kappa * (cg[0] * cg[0] + cg[1] * cg[1]) / det2(&fm);
            }
            s
        })
        .collect::<Vec<[f64; 3]>>()
        .iter()
        .fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);

    let kv = sp.velocity.degree();
    let kd = sp.displacement.degree();
    let vtop = sp.velocity.row_nodes(true);
    let dbot = sp.displacement.row_nodes(false);
    let mut fv = vec![0.0; kv + 1];
    let mut bv = vec![0.0; kd + 1];
    let mut scratch = vec![0.0; kv.max(kd) + 1];
    let mut slip = 0.0;
    for (e, s, _, w) in interface_points(disc) {
        line_basis(kv, s, &mut fv, &mut scratch);
        line_basis(kd, s, &mut bv, &mut scratch);
        let om = sp.plate.eval_local(f.omega_n, e, s);
        let mut u = [0.0; 2];
        for m in 0..=kv {
            u[0] += f.u[2 * vtop[kv * e + m]] * fv[m];
            u[1] += f.u[2 * vtop[kv * e + m] + 1] * fv[m];
        }
        let ey: f64 = (0..=kd).map(|m| f.eta_dot[2 * dbot[kd * e + m] + 1] * bv[m]).sum();
        let jg = (1.0 + om.dx * om.dx).sqrt();
        let rel = ey * om.dx - (u[0] + u[1] * om.dx);
        slip += w * prm.beta / jg * rel * rel;
    }
    DissipationRecord {
        fluid_viscous: dt * fluid,
        biot_viscous_shear: dt * biot[0],
        biot_viscous_bulk: dt * biot[1],
        permeability: dt * biot[2],
        slip: dt * slip,
    }
}

/// `(int |D(eta)|^2, int |grad eta|^2)` over the reference body.
pub fn korn_integrals(disc: &Discretization, eta: &[f64]) -> (f64, f64) {
    let sp = &disc.sp;
    let area = disc.triangle_area();
    let bg = sp.displacement.grid;
    let td = &disc.tab_displacement;
    let mut sym = 0.0;
    let mut full = 0.0;
    for t in 0..bg.n_triangles() {
        let kind = Tabulation::kind_index(bg.triangle(t).2);
        let dn = &sp.displacement.cell_nodes[t];
        for q in 0..td.weights.len() {
            let w = td.weights[q] * area;
            let mut ge = [[0.0; 2]; 2];
            for (a, &nd) in dn.iter().enumerate() {
                let g = td.grads[kind][q][a];
                for c in 0..2 {
                    ge[c][0] += eta[2 * nd + c] * g[0];
                    ge[c][1] += eta[2 * nd + c] * g[1];
                }
            }
            let off = 0.5 * (ge[0][1] + ge[1][0]);
            sym += w * (ge[0][0] * ge[0][0] + ge[1][1] * ge[1][1] + 2.0 * off * off);
            full += w * (ge[0][0] * ge[0][0] + ge[0][1] * ge[0][1] + ge[1][0] * ge[1][0] + ge[1][1] * ge[1][1]);
        }
    }
    (sym, full)
}
