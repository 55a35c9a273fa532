//! Coupled fluid / poroelastic system for one step, in the unknowns
//! (velocity, multiplier, displacement rate, pore pressure). The new
//! displacement is `eta_n + dt * rate`; the new plate velocity is the
//! transverse trace of the rate.

use rayon::prelude::*;

use super::{AssembledSystem, Discretization, Forcing};
use crate::error::{FpsiError, Result, Verdict};
use crate::linalg::CsrMatrix;
use crate::spaces::lagrange::map_point;
use crate::spaces::{line_basis, Tabulation};
use crate::transforms::{cof2, det2, fro, inv2, Mat2, Point, TransferMaps};
use crate::regularizer::RegularizedDisplacement;

/// Offsets of the four unknown blocks.
#[derive(Debug, Clone, Copy)]
pub struct Unknowns {
    pub u0: usize,
    pub m0: usize,
    pub d0: usize,
    pub p0: usize,
    pub n: usize,
}

impl Unknowns {
    pub fn new(disc: &Discretization) -> Self {
        let l = &disc.layout;
        let u0 = 0;
        let m0 = l.velocity.n_free;
        let d0 = m0 + l.multiplier.n_free;
        let p0 = d0 + l.displacement.n_free;
        Unknowns {
            u0,
            m0,
            d0,
            p0,
            n: p0 + l.pressure.n_free,
        }
    }

    /// Full (velocity, multiplier, rate, pressure) vectors from a solution.
    pub fn split(&self, disc: &Discretization, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let l = &disc.layout;
        (
            l.velocity.expand(&x[self.u0..self.m0]),
            l.multiplier.expand(&x[self.m0..self.d0]),
            l.displacement.expand(&x[self.d0..self.p0]),
            l.pressure.expand(&x[self.p0..self.n]),
        )
    }

    pub fn join(&self, disc: &Discretization, u: &[f64], m: &[f64], d: &[f64], p: &[f64]) -> Vec<f64> {
        let l = &disc.layout;
        let mut x = l.velocity.restrict(u);
        x.extend(l.multiplier.restrict(m));
        x.extend(l.displacement.restrict(d));
        x.extend(l.pressure.restrict(p));
        x
    }
}

/// Deformation gradient of the mollified displacement at every
/// quadrature point of the poroelastic mesh.
#[derive(Debug, Clone)]
pub struct BiotGeometry {
    /// `I + grad eta^delta`, indexed `triangle * n_q + q`
    pub f: Vec<Mat2>,
    pub n_q: usize,
    pub min_det: f64,
    pub min_det_point: Point,
    pub max_norm_f: f64,
    pub max_norm_f_inv: f64,
}

pub fn biot_geometry(disc: &Discretization, reg: &RegularizedDisplacement) -> BiotGeometry {
    let grid = disc.sp.displacement.grid;
    let nq = disc.rule.points.len();
    let per: Vec<(Mat2, Point)> = (0..grid.n_triangles() * nq)
        .into_par_iter()
        .map(|k| {
            let p = map_point(&grid, k / nq, disc.rule.points[k % nq]);
            let g = reg.eval(p).1;
            ([[1.0 + g[0][0], g[0][1]], [g[1][0], 1.0 + g[1][1]]], p)
        })
        .collect();
    let mut min_det = f64::INFINITY;
    let mut min_det_point = [0.0; 2];
    let mut max_f: f64 = 0.0;
    let mut max_fi: f64 = 0.0;
    for (f, p) in &per {
        let d = det2(f);
        if d < min_det {
            min_det = d;
            min_det_point = *p;
        }
        max_f = max_f.max(fro(f));
        max_fi = max_fi.max(inv2(f).map_or(f64::INFINITY, |m| fro(&m)));
    }
    BiotGeometry {
        f: per.into_iter().map(|x| x.0).collect(),
        n_q: nq,
        min_det,
        min_det_point,
        max_norm_f: max_f,
        max_norm_f_inv: max_fi,
    }
}

/// Data of the previous level entering the coupled step.
pub struct CoupledInput<'a> {
    pub u_n: &'a [f64],
    pub eta_n: &'a [f64],
    pub xi_n: &'a [f64],
    pub p_n: &'a [f64],
    /// plate displacement defining the fluid geometry
    pub omega_n: &'a [f64],
    /// plate velocity from the plate step (Hermite coefficients)
    pub zeta_half: &'a [f64],
    pub geom: &'a BiotGeometry,
    pub dt: f64,
    pub t_new: f64,
    pub forcing: &'a Forcing,
}

type Trip = Vec<(usize, usize, f64)>;

fn gemv(g: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [g[0][0] * v[0] + g[0][1] * v[1], g[1][0] * v[0] + g[1][1] * v[1]]
}

/// Assembled matrix and the right-hand side split into the part from the
/// previous level and the part from the sources.
pub struct CoupledSystem {
    pub system: AssembledSystem,
    pub load: Vec<f64>,
}

pub fn assemble_fluid_biot_system(disc: &Discretization, inp: &CoupledInput) -> Result<CoupledSystem> {
    let prm = disc.params;
    let unk = Unknowns::new(disc);
    let lay = &disc.layout;
    let sp = &disc.sp;
    let dt = inp.dt;
    let tm = TransferMaps::new(prm.l, prm.r);
    let area = disc.triangle_area();

    if inp.geom.min_det <= 0.0 {
        return Err(FpsiError::degenerate(
            Verdict::LagrangianDegenerate,
            inp.geom.min_det_point,
            format!("det(I + grad eta^delta) = {}", inp.geom.min_det),
        ));
    }

    // fluid cells
    let fgrid = sp.velocity.grid;
    let tv: &Tabulation = &disc.tab_velocity;
    let tmul: &Tabulation = &disc.tab_multiplier;
    let fluid: Vec<Result<(Trip, Vec<(usize, f64)>, Vec<(usize, f64)>)>> = (0..fgrid.n_triangles())
        .into_par_iter()
        .map(|t| {
            let kind = Tabulation::kind_index(fgrid.triangle(t).2);
            let vn = &sp.velocity.cell_nodes[t];
            let mn = &sp.multiplier.cell_nodes[t];
            let nv = vn.len();
            let nm = mn.len();
            let vdof = |a: usize, c: usize| lay.velocity.free_of(2 * vn[a] + c).map(|r| unk.u0 + r);
            let mdof = |c: usize| lay.multiplier.free_of(mn[c]).map(|r| unk.m0 + r);
            let mut trip = Vec::new();
            let mut rhs = Vec::new();
            let mut load = Vec::new();
            let mut g = vec![[0.0; 2]; nv];
            for q in 0..tv.weights.len() {
                let w = tv.weights[q] * area;
                let p = map_point(&fgrid, t, tv.points[q]);
                let om = sp.plate.eval(inp.omega_n, p[0])?;
                let zh = sp.plate.eval(inp.zeta_half, p[0])?.v;
                let jac = 1.0 + om.v / prm.r;
                let gm = tm.fluid_gradient_matrix(&om, p)?;
                let phi = &tv.vals[q];
                for a in 0..nv {
                    g[a] = gemv(&gm, tv.grads[kind][q][a]);
                }
                let mut un = [0.0; 2];
                for a in 0..nv {
                    un[0] += inp.u_n[2 * vn[a]] * phi[a];
                    un[1] += inp.u_n[2 * vn[a] + 1] * phi[a];
                }
                let b = [un[0], un[1] - zh * (prm.r + p[1]) / prm.r];
                let f = match &inp.forcing.fluid {
                    Some(f) => f(inp.t_new, tm.ale_map(&|x: f64| sp.plate.eval(inp.omega_n, x).unwrap(), p)?),
                    None => [0.0; 2],
                };
                for bt in 0..nv {
                    let bg = b[0] * g[bt][0] + b[1] * g[bt][1];
                    for j in 0..2 {
                        let Some(row) = vdof(bt, j) else { continue };
                        rhs.push((row, w * jac / dt * un[j] * phi[bt]));
                        if f[j] != 0.0 {
                            load.push((row, w * jac * f[j] * phi[bt]));
                        }
                        for a in 0..nv {
                            let ag = b[0] * g[a][0] + b[1] * g[a][1];
                            let gg = g[a][0] * g[bt][0] + g[a][1] * g[bt][1];
                            for i in 0..2 {
                                let Some(col) = vdof(a, i) else { continue };
                                let mut v = prm.nu * jac * g[a][j] * g[bt][i];
                                if i == j {
                                    v += (jac / dt + zh / (2.0 * prm.r)) * phi[a] * phi[bt]
                                        + 0.5 * jac * (ag * phi[bt] - bg * phi[a])
                                        + prm.nu * jac * gg;
                                }
                                trip.push((row, col, w * v));
                            }
                        }
                        for c in 0..nm {
                            let Some(col) = mdof(c) else { continue };
                            trip.push((row, col, -w * jac * tmul.vals[q][c] * g[bt][j]));
                        }
                    }
                }
                for c in 0..nm {
                    let Some(row) = mdof(c) else { continue };
                    for a in 0..nv {
                        for i in 0..2 {
                            let Some(col) = vdof(a, i) else { continue };
                            trip.push((row, col, -w * jac * tmul.vals[q][c] * g[a][i]));
                        }
                    }
                }
            }
            Ok((trip, rhs, load))
        })
        .collect();

    // poroelastic cells
    let bgrid = sp.displacement.grid;
    let td = &disc.tab_displacement;
    let tp = &disc.tab_pressure;
    let nq = inp.geom.n_q;
    let biot: Vec<(Trip, Vec<(usize, f64)>, Vec<(usize, f64)>)> = (0..bgrid.n_triangles())
        .into_par_iter()
        .map(|t| {
            let kind = Tabulation::kind_index(bgrid.triangle(t).2);
            let dn = &sp.displacement.cell_nodes[t];
            let pn = &sp.pressure.cell_nodes[t];
            let nd = dn.len();
            let np = pn.len();
            let ddof = |a: usize, c: usize| lay.displacement.free_of(2 * dn[a] + c).map(|r| unk.d0 + r);
            let pdof = |c: usize| lay.pressure.free_of(pn[c]).map(|r| unk.p0 + r);
            let mut trip = Vec::new();
            let mut rhs = Vec::new();
            let mut load = Vec::new();
            for q in 0..td.weights.len() {
                let w = td.weights[q] * area;
                let p = map_point(&bgrid, t, td.points[q]);
                let fm = inp.geom.f[t * nq + q];
                let cof = cof2(&fm);
                let jac = det2(&fm);
                let phi = &td.vals[q];
                let g = &td.grads[kind][q];
                let rv = &tp.vals[q];
                let rg: Vec<[f64; 2]> = tp.grads[kind][q].iter().map(|x| gemv(&cof, *x)).collect();
                let mut xi = [0.0; 2];
                let mut ge = [[0.0; 2]; 2];
                for a in 0..nd {
                    for c in 0..2 {
                        xi[c] += inp.xi_n[2 * dn[a] + c] * phi[a];
                        let e = inp.eta_n[2 * dn[a] + c];
                        ge[c][0] += e * g[a][0];
                        ge[c][1] += e * g[a][1];
                    }
                }
                let de = [[ge[0][0], 0.5 * (ge[0][1] + ge[1][0])], [0.5 * (ge[0][1] + ge[1][0]), ge[1][1]]];
                let dive = ge[0][0] + ge[1][1];
                let mut pn_val = 0.0;
                for c in 0..np {
                    pn_val += inp.p_n[pn[c]] * rv[c];
                }
                let fb = match &inp.forcing.biot {
                    Some(f) => f(inp.t_new, p),
                    None => [0.0; 2],
                };
                let sp_src = match &inp.forcing.pressure {
                    Some(f) => f(inp.t_new, p),
                    None => 0.0,
                };
                for bt in 0..nd {
                    let cg = gemv(&cof, g[bt]);
                    for j in 0..2 {
                        let Some(row) = ddof(bt, j) else { continue };
                        let el = 2.0 * prm.mu_e * (de[j][0] * g[bt][0] + de[j][1] * g[bt][1]) + prm.lambda_e * dive * g[bt][j];
                        rhs.push((row, w * (prm.rho_b / dt * xi[j] * phi[bt] - el)));
                        if fb[j] != 0.0 {
                            load.push((row, w * fb[j] * phi[bt]));
                        }
                        for a in 0..nd {
                            let gg = g[a][0] * g[bt][0] + g[a][1] * g[bt][1];
                            for i in 0..2 {
                                let Some(col) = ddof(a, i) else { continue };
                                let mut v = (dt * prm.mu_e + prm.mu_v) * g[a][j] * g[bt][i]
                                    + (dt * prm.lambda_e + prm.lambda_v) * g[a][i] * g[bt][j];
                                if i == j {
                                    v += prm.rho_b / dt * phi[a] * phi[bt] + (dt * prm.mu_e + prm.mu_v) * gg;
                                }
                                trip.push((row, col, w * v));
                            }
                        }
                        for c in 0..np {
                            let Some(col) = pdof(c) else { continue };
                            trip.push((row, col, -w * prm.alpha * rv[c] * cg[j]));
                        }
                    }
                }
                for c in 0..np {
                    let Some(row) = pdof(c) else { continue };
                    rhs.push((row, w * prm.c0 / dt * pn_val * rv[c]));
                    if sp_src != 0.0 {
                        load.push((row, w * sp_src * rv[c]));
                    }
                    for a in 0..nd {
                        for i in 0..2 {
                            let Some(col) = ddof(a, i) else { continue };
                            trip.push((row, col, -w * prm.alpha * phi[a] * rg[c][i]));
                        }
                    }
                    for d in 0..np {
                        let Some(col) = pdof(d) else { continue };
                        let v = prm.c0 / dt * rv[d] * rv[c] + prm.kappa * (rg[d][0] * rg[c][0] + rg[d][1] * rg[c][1]) / jac;
                        trip.push((row, col, w * v));
                    }
                }
            }
            (trip, rhs, load)
        })
        .collect();

    // interface
    let kv = sp.velocity.degree();
    let kd = sp.displacement.degree();
    let kp = sp.pressure.degree();
    let vtop = sp.velocity.row_nodes(true);
    let dbot = sp.displacement.row_nodes(false);
    let pbot = sp.pressure.row_nodes(false);
    let pl = &sp.plate;
    let iface: Vec<(Trip, Vec<(usize, f64)>, Vec<(usize, f64)>)> = (0..pl.nx)
        .into_par_iter()
        .map(|e| {
            let mut trip = Vec::new();
            let mut rhs = Vec::new();
            let mut load = Vec::new();
            let h = pl.h(e);
            let mut fv = vec![0.0; kv + 1];
            let mut fdv = vec![0.0; kv + 1];
            let mut bv = vec![0.0; kd + 1];
            let mut bdv = vec![0.0; kd + 1];
            let mut pv = vec![0.0; kp + 1];
            let mut pdv = vec![0.0; kp + 1];
            let vdof = |m: usize, c: usize| lay.velocity.free_of(2 * vtop[kv * e + m] + c).map(|r| unk.u0 + r);
            let ddof = |m: usize| lay.displacement.free_of(2 * dbot[kd * e + m] + 1).map(|r| unk.d0 + r);
            let pdof = |m: usize| lay.pressure.free_of(pbot[kp * e + m]).map(|r| unk.p0 + r);
            for (s, wq) in disc.line.points.iter().zip(&disc.line.weights) {
                let w = wq * h;
                let x = pl.nodes[e] + s * h;
                line_basis(kv, *s, &mut fv, &mut fdv);
                line_basis(kd, *s, &mut bv, &mut bdv);
                line_basis(kp, *s, &mut pv, &mut pdv);
                let om = pl.eval_local(inp.omega_n, e, *s);
                let zh = pl.eval_local(inp.zeta_half, e, *s).v;
                let (n, tau) = TransferMaps::normal_tangent(om.dx);
                let jg = (1.0 + om.dx * om.dx).sqrt();
                let bj = prm.beta / jg;
                let mut un = [0.0; 2];
                for m in 0..=kv {
                    un[0] += inp.u_n[2 * vtop[kv * e + m]] * fv[m];
                    un[1] += inp.u_n[2 * vtop[kv * e + m] + 1] * fv[m];
                }
                let gf = match &inp.forcing.fluid_interface {
                    Some(f) => f(inp.t_new, x),
                    None => [0.0; 2],
                };
                // fluid test rows
                for mb in 0..=kv {
                    for j in 0..2 {
                        let Some(row) = vdof(mb, j) else { continue };
                        let vb = fv[mb];
                        if gf[j] != 0.0 {
                            load.push((row, w * gf[j] * vb));
                        }
                        for ma in 0..=kv {
                            for i in 0..2 {
                                let Some(col) = vdof(ma, i) else { continue };
                                let ua = fv[ma];
                                let v = -0.5 * ua * un[i] * vb * n[j] + 0.5 * ua * n[i] * un[j] * vb + bj * ua * tau[i] * vb * tau[j];
                                trip.push((row, col, w * v));
                            }
                        }
                        for ma in 0..=kd {
                            let Some(col) = ddof(ma) else { continue };
                            let v = -0.5 * bv[ma] * un[j] * vb - bj * om.dx * bv[ma] * vb * tau[j];
                            trip.push((row, col, w * v));
                        }
                        for c in 0..=kp {
                            let Some(col) = pdof(c) else { continue };
                            trip.push((row, col, w * pv[c] * vb * n[j]));
                        }
                    }
                }
                // transverse displacement-rate test rows
                for mb in 0..=kd {
                    let Some(row) = ddof(mb) else { continue };
                    let psi = bv[mb];
                    rhs.push((row, w * prm.rho_p / dt * zh * psi));
                    for ma in 0..=kv {
                        for i in 0..2 {
                            let Some(col) = vdof(ma, i) else { continue };
                            let v = 0.5 * fv[ma] * un[i] * psi - bj * fv[ma] * tau[i] * om.dx * psi;
                            trip.push((row, col, w * v));
                        }
                    }
                    for ma in 0..=kd {
                        let Some(col) = ddof(ma) else { continue };
                        let v = (bj * om.dx * om.dx + prm.rho_p / dt) * bv[ma] * psi;
                        trip.push((row, col, w * v));
                    }
                    for c in 0..=kp {
                        let Some(col) = pdof(c) else { continue };
                        trip.push((row, col, -w * pv[c] * psi));
                    }
                }
                // pressure test rows
                for c in 0..=kp {
                    let Some(row) = pdof(c) else { continue };
                    for ma in 0..=kd {
                        let Some(col) = ddof(ma) else { continue };
                        trip.push((row, col, w * (1.0 - prm.alpha) * bv[ma] * pv[c]));
                    }
                    for ma in 0..=kv {
                        for i in 0..2 {
                            let Some(col) = vdof(ma, i) else { continue };
                            trip.push((row, col, -w * fv[ma] * n[i] * pv[c]));
                        }
                    }
                }
            }
            (trip, rhs, load)
        })
        .collect();

    let n = unk.n;
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut load = vec![0.0; n];
    let mut push = |(t, r, l): (Trip, Vec<(usize, f64)>, Vec<(usize, f64)>)| {
        trip.extend(t);
        for (i, v) in r {
            rhs[i] += v;
        }
        for (i, v) in l {
            load[i] += v;
        }
    };
    for f in fluid {
        push(f?);
    }
    for b in biot {
        push(b);
    }
    for i in iface {
        push(i);
    }
    let matrix = CsrMatrix::from_triplets(n, n, trip);
    let min_diag = (unk.u0..unk.m0)
        .chain(unk.d0..unk.n)
        .map(|i| matrix.get(i, i))
        .fold(f64::INFINITY, f64::min);
    for i in 0..n {
        rhs[i] += load[i];
    }
    Ok(CoupledSystem {
        system: AssembledSystem {
            matrix,
            rhs,
            min_dissipative_diag: min_diag,
        },
        load,
    })
}

/// Darcy flux `-kappa grad p` on the mollified configuration at a
/// reference point of the body.
pub fn darcy_velocity(disc: &Discretization, p: &[f64], reg: &RegularizedDisplacement, pt: Point) -> Result<[f64; 2]> {
    let (_, gp) = disc.sp.pressure.eval_scalar(p, pt)?;
    let g = reg.eval(pt).1;
    let phys = TransferMaps::transformed_gradient_biot(&g, gp, pt)?;
    Ok([-disc.params.kappa * phys[0], -disc.params.kappa * phys[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhysicalParams;
    use crate::linalg::symmetric_part_eigenvalues;
    use crate::regularizer::{mollify, ExtendedField};
    use crate::spaces::Degrees;
    use crate::transforms::BiotDisplacementField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    struct Level {
        u: Vec<f64>,
        eta: Vec<f64>,
        xi: Vec<f64>,
        p: Vec<f64>,
        omega: Vec<f64>,
        zeta: Vec<f64>,
    }

    fn zero_level(d: &Discretization) -> Level {
        Level {
            u: vec![0.0; 2 * d.sp.velocity.n_nodes()],
            eta: vec![0.0; 2 * d.sp.displacement.n_nodes()],
            xi: vec![0.0; 2 * d.sp.displacement.n_nodes()],
            p: vec![0.0; d.sp.pressure.n_nodes()],
            omega: vec![0.0; d.sp.plate.n_dofs()],
            zeta: vec![0.0; d.sp.plate.n_dofs()],
        }
    }

    fn geometry(d: &Discretization, eta: &[f64], delta: f64) -> (RegularizedDisplacement, BiotGeometry) {
        let field = BiotDisplacementField {
            space: d.sp.displacement.clone(),
            eta: eta.to_vec(),
            xi: vec![0.0; eta.len()],
        };
        let reg = mollify(ExtendedField::from_fe(&field, None, delta, 0.125).unwrap(), delta).unwrap();
        let g = biot_geometry(d, &reg);
        (reg, g)
    }

    fn assemble(d: &Discretization, lv: &Level, geom: &BiotGeometry, dt: f64) -> CoupledSystem {
        let forcing = Forcing::default();
        let inp = CoupledInput {
            u_n: &lv.u,
            eta_n: &lv.eta,
            xi_n: &lv.xi,
            p_n: &lv.p,
            omega_n: &lv.omega,
            zeta_half: &lv.zeta,
            geom,
            dt,
            t_new: dt,
            forcing: &forcing,
        };
        assemble_fluid_biot_system(d, &inp).unwrap()
    }

    /// A small smooth compatible level: plate bump, matching transverse
    /// displacement and a swirl in the fluid.
    fn smooth_level(d: &Discretization) -> Level {
        let mut lv = zero_level(d);
        let a = 0.05;
        lv.omega = d.sp.plate.interpolate(|x| a * (1.0 - (2.0 * PI * x).cos()) / 2.0, |x| a * PI * (2.0 * PI * x).sin());
        d.layout.plate.clamp(&mut lv.omega);
        lv.eta = d.sp.displacement.interpolate_vector(|p| {
            [0.02 * (PI * p[0]).sin() * (PI * p[1]).sin(), a * (1.0 - (2.0 * PI * p[0]).cos()) / 2.0 * (1.0 - p[1]).powi(2)]
        });
        d.layout.displacement.clamp(&mut lv.eta);
        lv.u = d.sp.velocity.interpolate_vector(|p| {
            let s = (PI * p[0]).sin().powi(2);
            let ds = PI * (2.0 * PI * p[0]).sin();
            [0.2 * s * 2.0 * (p[1] + 1.0), -0.2 * ds * (p[1] + 1.0).powi(2)]
        });
        d.layout.velocity.clamp(&mut lv.u);
        lv
    }

    #[test]
    fn zero_data_zero_solution() {
        let d = Discretization::new(PhysicalParams::default(), 3, 3, Degrees::default(), None).unwrap();
        let lv = zero_level(&d);
        let (_, g) = geometry(&d, &lv.eta, 0.3);
        let cs = assemble(&d, &lv, &g, 0.1);
        let x = cs.system.solve().unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn solvable_without_viscoelastic_damping_or_slip() {
        let prm = PhysicalParams {
            mu_v: 0.0,
            lambda_v: 0.0,
            beta: 0.0,
            ..Default::default()
        };
        let d = Discretization::new(prm, 2, 2, Degrees::default(), None).unwrap();
        let mut lv = smooth_level(&d);
        lv.p = d.sp.pressure.interpolate_scalar(|p| (PI * p[0]).sin() * (PI * p[1]).sin());
        d.layout.pressure.clamp(&mut lv.p);
        let (_, g) = geometry(&d, &lv.eta, 0.3);
        let cs = assemble(&d, &lv, &g, 0.05);
        let x = cs.system.solve().unwrap();
        assert!(cs.system.residual(&x) <= 1e-10);
        assert!(x.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn dissipative_diagonal_blocks_are_positive_semidefinite() {
        let d = Discretization::new(PhysicalParams::default(), 2, 2, Degrees::default(), None).unwrap();
        let lv = smooth_level(&d);
        let (_, g) = geometry(&d, &lv.eta, 0.3);
        let mut base = smooth_level(&d);
        base.u.iter_mut().for_each(|v| *v = 0.0);
        let a = assemble(&d, &base, &g, 0.1).system.matrix.to_dense();
        let unk = Unknowns::new(&d);
        for (lo, hi) in [(unk.u0, unk.m0), (unk.d0, unk.p0), (unk.p0, unk.n)] {
            let block: Vec<Vec<f64>> = (lo..hi).map(|i| a[i][lo..hi].to_vec()).collect();
            let ev = symmetric_part_eigenvalues(&block);
            assert!(ev.iter().all(|v| *v >= -1e-10), "{ev:?}");
        }
    }

    #[test]
    fn convection_is_skew() {
        let d = Discretization::new(PhysicalParams::default(), 3, 3, Degrees::default(), None).unwrap();
        let lv = smooth_level(&d);
        let (_, g) = geometry(&d, &lv.eta, 0.3);
        let mut still = smooth_level(&d);
        still.u.iter_mut().for_each(|v| *v = 0.0);
        let a = assemble(&d, &lv, &g, 0.1).system.matrix;
        let b = assemble(&d, &still, &g, 0.1).system.matrix;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v: Vec<f64> = (0..a.n_rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = a.bilinear(&v, &v) - b.bilinear(&v, &v);
            let nn: f64 = v.iter().map(|x| x * x).sum();
            assert!(q.abs() <= 1e-12 * nn, "{q}");
        }
    }

    #[test]
    fn alpha_terms_cancel_on_smooth_fields() {
        let prm = PhysicalParams {
            alpha: 0.8,
            ..Default::default()
        };
        let zero_alpha = PhysicalParams { alpha: 1e-300, ..prm };
        let mut res = Vec::new();
        for q in [6, 8] {
            let d = Discretization::new(prm, 4, 4, Degrees::default(), Some(q)).unwrap();
            let d0 = Discretization::new(zero_alpha, 4, 4, Degrees::default(), Some(q)).unwrap();
            let lv = smooth_level(&d);
            let (_, g) = geometry(&d, &lv.eta, 0.2);
            let a = assemble(&d, &lv, &g, 0.1).system.matrix;
            let b = assemble(&d0, &lv, &g, 0.1).system.matrix;
            let unk = Unknowns::new(&d);
            let rate = d.sp.displacement.interpolate_vector(|p| {
                [(PI * p[0]).sin() * (PI * p[1]).sin(), (1.0 - (2.0 * PI * p[0]).cos()) * (1.0 - p[1]).powi(2)]
            });
            let pr = d.sp.pressure.interpolate_scalar(|p| (PI * p[0]).sin() * (2.0 * PI * p[1]).sin() + 0.5 * (1.0 - p[1]) * (PI * p[0]).sin());
            let zu = vec![0.0; 2 * d.sp.velocity.n_nodes()];
            let zm = vec![0.0; d.sp.multiplier.n_nodes()];
            let x = unk.join(&d, &zu, &zm, &rate, &pr);
            let mut xd = x.clone();
            xd[unk.p0..].iter_mut().for_each(|v| *v = 0.0);
            let mut xp = x.clone();
            xp[..unk.p0].iter_mut().for_each(|v| *v = 0.0);
            let diff = |u: &[f64], v: &[f64]| a.bilinear(u, v) - b.bilinear(u, v);
            let volume_dp = diff(&xd, &xp);
            let pd = diff(&xp, &xd);
            let total = volume_dp + pd;
            res.push(total.abs() / (volume_dp.abs() + pd.abs()));
        }
        assert!(res[0] <= 1e-6, "{res:?}");
        assert!(res[1] <= res[0], "{res:?}");
    }

    #[test]
    fn darcy_examples() {
        let prm = PhysicalParams {
            kappa: 0.4,
            ..Default::default()
        };
        let d = Discretization::new(prm, 4, 4, Degrees::default(), None).unwrap();
        let zero = zero_level(&d);
        let (reg0, _) = geometry(&d, &zero.eta, 0.2);
        let q = darcy_velocity(&d, &zero.p, &reg0, [0.3, 0.4]).unwrap();
        assert_eq!(q, [0.0, 0.0]);
        let lin = d.sp.pressure.interpolate_scalar(|p| p[1]);
        let q = darcy_velocity(&d, &lin, &reg0, [0.3, 0.4]).unwrap();
        assert!(q[0].abs() < 1e-13 && (q[1] + 0.4).abs() < 1e-13);

        // chain-rule oracle: reference gradient and deformation gradient by differences
        let lv = smooth_level(&d);
        let (reg, _) = geometry(&d, &lv.eta, 0.2);
        let p = d.sp.pressure.interpolate_scalar(|x| (PI * x[0]).sin() * (1.0 - x[1]) * x[1]);
        let pt = [0.37, 0.42];
        let h = 1e-5;
        let pv = |x: Point| d.sp.pressure.eval_scalar(&p, x).unwrap().0;
        let mv = |x: Point| {
            let v = reg.eval(x).0;
            [x[0] + v[0], x[1] + v[1]]
        };
        let gp = [
            (pv([pt[0] + h, pt[1]]) - pv([pt[0] - h, pt[1]])) / (2.0 * h),
            (pv([pt[0], pt[1] + h]) - pv([pt[0], pt[1] - h])) / (2.0 * h),
        ];
        let (xp, xm, yp, ym) = (mv([pt[0] + h, pt[1]]), mv([pt[0] - h, pt[1]]), mv([pt[0], pt[1] + h]), mv([pt[0], pt[1] - h]));
        let f = [
            [(xp[0] - xm[0]) / (2.0 * h), (yp[0] - ym[0]) / (2.0 * h)],
            [(xp[1] - xm[1]) / (2.0 * h), (yp[1] - ym[1]) / (2.0 * h)],
        ];
        let fi = inv2(&f).unwrap();
        let want = [-0.4 * (fi[0][0] * gp[0] + fi[1][0] * gp[1]), -0.4 * (fi[0][1] * gp[0] + fi[1][1] * gp[1])];
        let got = darcy_velocity(&d, &p, &reg, pt).unwrap();
        for c in 0..2 {
            assert!((got[c] - want[c]).abs() <= 1e-5 * want[c].abs().max(1.0), "{got:?} {want:?}");
        }
    }
}
