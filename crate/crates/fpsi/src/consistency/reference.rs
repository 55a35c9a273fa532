//! Closed-form smooth solutions of the coupled problem and the sources
//! that make them exact.
//!
//! The fluid velocity comes from a stream function on the physical domain
//! whose interface value carries exactly the plate's volume flux, so the
//! kinematic and mass-exchange conditions hold with zero Darcy flux. The
//! pore pressure vanishes together with its gradient on the interface.

use std::sync::Arc;

use super::jet::{Jet, Scalar};
use crate::assembly::{Forcing, PhysicalParams};
use crate::error::{FpsiError, Result};
use crate::scheme::{initial_state, CoupledState, InitialFields};
use crate::assembly::Discretization;
use crate::transforms::{cof2, det2, Mat2, Point};

/// Catalog of references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// everything zero
    Rest,
    /// plate `a sin(2 pi x/L) sin^2(pi x/L) cos(sigma t)` with compatible fields
    Separable,
}

impl ReferenceKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rest" => Ok(ReferenceKind::Rest),
            "separable" => Ok(ReferenceKind::Separable),
            _ => Err(FpsiError::config("reference", "one of rest, separable")),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ReferenceKind::Rest => "rest",
            ReferenceKind::Separable => "separable",
        }
    }
}

/// Amplitudes and frequency of the separable reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceAmplitudes {
    /// plate displacement
    pub plate: f64,
    /// angular frequency in time
    pub sigma: f64,
    /// horizontal body displacement
    pub shear: f64,
    /// fluid pressure
    pub fluid_pressure: f64,
    /// pore pressure
    pub pore_pressure: f64,
}

impl Default for ReferenceAmplitudes {
    fn default() -> Self {
        ReferenceAmplitudes {
            plate: 0.1,
            sigma: 2.0,
            shear: 0.05,
            fluid_pressure: 0.1,
            pore_pressure: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub params: PhysicalParams,
    pub amp: ReferenceAmplitudes,
}

/// Everything the discrete metric needs from the fluid at a physical point.
#[derive(Debug, Clone, Copy)]
pub struct FluidSample {
    pub u: [f64; 2],
    pub grad_u: Mat2,
    pub pressure: f64,
}

/// Body fields at a reference point.
#[derive(Debug, Clone, Copy)]
pub struct BodySample {
    pub eta: [f64; 2],
    pub grad_eta: Mat2,
    pub xi: [f64; 2],
    pub grad_xi: Mat2,
    pub p: f64,
    pub grad_p: [f64; 2],
}

/// Plate profile and velocity at a point of the interface.
#[derive(Debug, Clone, Copy)]
pub struct PlateSample {
    pub omega: [f64; 4],
    pub zeta: f64,
}

pub fn build_reference(kind: ReferenceKind, params: PhysicalParams, amp: ReferenceAmplitudes) -> Result<ReferenceSolution> {
    params.validate()?;
    let amp = match kind {
        ReferenceKind::Rest => ReferenceAmplitudes {
            plate: 0.0,
            shear: 0.0,
            fluid_pressure: 0.0,
            pore_pressure: 0.0,
            ..amp
        },
        ReferenceKind::Separable => amp,
    };
    let re = ReferenceSolution { kind, params, amp };
    let peak = (0..=2000)
        .map(|i| re.plate_shape(params.l * i as f64 / 2000.0).abs())
        .fold(0.0f64, f64::max);
    if !(amp.plate.abs() * peak < params.r) {
        return Err(FpsiError::config("ref_plate", "reference must keep |ω| < R on [0,T]"));
    }
    Ok(re)
}

impl ReferenceSolution {
    fn theta<S: Scalar>(&self, x: S) -> S {
        x * (std::f64::consts::PI / self.params.l)
    }

    fn plate_shape(&self, x: f64) -> f64 {
        let th = self.theta(x);
        (2.0 * th).sin() * th.sin().powi(2)
    }

    /// Plate displacement.
    pub fn omega<S: Scalar>(&self, t: S, x: S) -> S {
        let th = self.theta(x);
        let s = th.sin();
        (th * 2.0).sin() * s * s * (t * self.amp.sigma).cos() * self.amp.plate
    }

    /// Minus the running integral of the plate velocity in x.
    fn flux<S: Scalar>(&self, t: S, x: S) -> S {
        let th = self.theta(x);
        let l = self.params.l;
        let prim = ((-(th * 2.0).cos() + 1.0) * 0.25 + ((th * 4.0).cos() - 1.0) * (1.0 / 16.0)) * (l / std::f64::consts::PI);
        prim * (t * self.amp.sigma).sin() * (self.amp.plate * self.amp.sigma)
    }

    /// Stream function of the fluid velocity on the physical domain.
    pub fn stream<S: Scalar>(&self, t: S, x: S, y: S) -> S {
        let r = self.params.r;
        let q = (y + r) / (self.omega(t, x) + r);
        self.flux(t, x) * q * q
    }

    pub fn fluid_pressure<S: Scalar>(&self, t: S, x: S, y: S) -> S {
        let r = self.params.r;
        (t * self.amp.sigma).cos() * self.theta(x).cos() * (y + r) * (self.amp.fluid_pressure / r)
    }

    /// Body displacement on the reference body.
    pub fn displacement<S: Scalar>(&self, t: S, x: S, y: S) -> [S; 2] {
        let r = self.params.r;
        let pr = y * (std::f64::consts::PI / r);
        let d = -(y * (1.0 / r)) + 1.0;
        [
            (t * self.amp.sigma).cos() * self.theta(x).sin() * pr.sin() * self.amp.shear,
            self.omega(t, x) * d * d,
        ]
    }

    pub fn pore_pressure<S: Scalar>(&self, t: S, x: S, y: S) -> S {
        let s = (y * (std::f64::consts::PI / self.params.r)).sin();
        (t * self.amp.sigma).cos() * self.theta(x).sin() * s * s * self.amp.pore_pressure
    }

    fn fluid_jets(&self, t: f64, p: Point) -> ([Jet; 2], Jet) {
        let (jt, jx, jy) = Jet::seeds(t, p[0], p[1]);
        let psi = self.stream(jt, jx, jy);
        ([psi.dy(), -psi.dx()], self.fluid_pressure(jt, jx, jy))
    }

    pub fn fluid_sample(&self, t: f64, p: Point) -> FluidSample {
        let (u, pi) = self.fluid_jets(t, p);
        FluidSample {
            u: [u[0].value(), u[1].value()],
            grad_u: [
                [u[0].partial([0, 1, 0]), u[0].partial([0, 0, 1])],
                [u[1].partial([0, 1, 0]), u[1].partial([0, 0, 1])],
            ],
            pressure: pi.value(),
        }
    }

    pub fn body_sample(&self, t: f64, p: Point) -> BodySample {
        let (jt, jx, jy) = Jet::seeds(t, p[0], p[1]);
        let e = self.displacement(jt, jx, jy);
        let pp = self.pore_pressure(jt, jx, jy);
        let g = |f: &Jet, e0: usize| [f.partial([e0, 1, 0]), f.partial([e0, 0, 1])];
        BodySample {
            eta: [e[0].value(), e[1].value()],
            grad_eta: [g(&e[0], 0), g(&e[1], 0)],
            xi: [e[0].partial([1, 0, 0]), e[1].partial([1, 0, 0])],
            grad_xi: [g(&e[0], 1), g(&e[1], 1)],
            p: pp.value(),
            grad_p: g(&pp, 0),
        }
    }

    pub fn plate_sample(&self, t: f64, x: f64) -> PlateSample {
        let (jt, jx, _) = Jet::seeds(t, x, 0.0);
        let w = self.omega(jt, jx);
        PlateSample {
            omega: [w.value(), w.partial([0, 1, 0]), w.partial([0, 2, 0]), w.partial([0, 3, 0])],
            zeta: w.partial([1, 0, 0]),
        }
    }

    /// Fluid body force at a physical point.
    pub fn fluid_force(&self, t: f64, p: Point) -> [f64; 2] {
        let (u, pi) = self.fluid_jets(t, p);
        let nu = self.params.nu;
        let mut f = [0.0; 2];
        for i in 0..2 {
            let conv = u[0].value() * u[i].partial([0, 1, 0]) + u[1].value() * u[i].partial([0, 0, 1]);
            let lap = u[i].partial([0, 2, 0]) + u[i].partial([0, 0, 2]);
            let gp = if i == 0 { pi.partial([0, 1, 0]) } else { pi.partial([0, 0, 1]) };
            f[i] = u[i].partial([1, 0, 0]) + conv + gp - nu * lap;
        }
        f
    }

    /// Fluid stress at a physical point.
    fn fluid_stress(&self, t: f64, p: Point) -> (Mat2, [f64; 2]) {
        let s = self.fluid_sample(t, p);
        let nu = self.params.nu;
        let g = s.grad_u;
        (
            [
                [-s.pressure + 2.0 * nu * g[0][0], nu * (g[0][1] + g[1][0])],
                [nu * (g[0][1] + g[1][0]), -s.pressure + 2.0 * nu * g[1][1]],
            ],
            s.u,
        )
    }

    /// Traction source on the fluid side of the interface, per reference length.
    pub fn fluid_interface_force(&self, t: f64, x: f64) -> [f64; 2] {
        let pl = self.plate_sample(t, x);
        let (w, wx) = (pl.omega[0], pl.omega[1]);
        let (sig, u) = self.fluid_stress(t, [x, w]);
        let n = [-wx, 1.0];
        let tau = [1.0, wx];
        let jg = (1.0 + wx * wx).sqrt();
        let pb = self.pore_pressure(t, x, 0.0);
        let kin = 0.5 * (u[0] * u[0] + u[1] * u[1]);
        let slip = self.params.beta / jg * (wx * pl.zeta - (u[0] * tau[0] + u[1] * tau[1]));
        let mut g = [0.0; 2];
        for i in 0..2 {
            g[i] = sig[i][0] * n[0] + sig[i][1] * n[1] + (pb - kin) * n[i] - slip * tau[i];
        }
        g
    }

    /// Body jets: displacement, rate, and the total stress including the
    /// pore-pressure part, all as jets.
    fn body_stress_jets(&self, t: f64, p: Point) -> ([Jet; 2], [Jet; 2], Jet, [[Jet; 2]; 2]) {
        let prm = self.params;
        let (jt, jx, jy) = Jet::seeds(t, p[0], p[1]);
        let e = self.displacement(jt, jx, jy);
        let xi = [e[0].dt(), e[1].dt()];
        let pp = self.pore_pressure(jt, jx, jy);
        let grad = |v: &[Jet; 2]| [[v[0].dx(), v[0].dy()], [v[1].dx(), v[1].dy()]];
        let ge = grad(&e);
        let gx = grad(&xi);
        let f = [[ge[0][0] + 1.0, ge[0][1]], [ge[1][0], ge[1][1] + 1.0]];
        let cof = [[f[1][1], -f[1][0]], [-f[0][1], f[0][0]]];
        let dive = ge[0][0] + ge[1][1];
        let divx = gx[0][0] + gx[1][1];
        let mut s = [[Jet::constant(0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut v = (ge[i][j] + ge[j][i]) * prm.mu_e + (gx[i][j] + gx[j][i]) * prm.mu_v - pp * cof[i][j] * prm.alpha;
                if i == j {
                    v = v + dive * prm.lambda_e + divx * prm.lambda_v;
                }
                s[i][j] = v;
            }
        }
        (e, xi, pp, s)
    }

    /// Body force at a reference point.
    pub fn biot_force(&self, t: f64, p: Point) -> [f64; 2] {
        let (e, _, pp, s) = self.body_stress_jets(t, p);
        // the pore-pressure part of the stress differentiates to cof(F) grad p
        // by the Piola identity, which the jets reproduce
        let _ = pp;
        let mut f = [0.0; 2];
        for i in 0..2 {
            let div = s[i][0].dx().value() + s[i][1].dy().value();
            f[i] = self.params.rho_b * e[i].partial([2, 0, 0]) - div;
        }
        f
    }

    /// Pore-pressure source at a reference point.
    pub fn pressure_source(&self, t: f64, p: Point) -> f64 {
        let prm = self.params;
        let (jt, jx, jy) = Jet::seeds(t, p[0], p[1]);
        let e = self.displacement(jt, jx, jy);
        let pp = self.pore_pressure(jt, jx, jy);
        let f = [[e[0].dx() + 1.0, e[0].dy()], [e[1].dx(), e[1].dy() + 1.0]];
        let cof = [[f[1][1], -f[1][0]], [-f[0][1], f[0][0]]];
        let jac = f[0][0] * f[1][1] - f[0][1] * f[1][0];
        let gp = [pp.dx(), pp.dy()];
        let xi = [e[0].dt(), e[1].dt()];
        let gx = [[xi[0].dx(), xi[0].dy()], [xi[1].dx(), xi[1].dy()]];
        // cof^T cof grad p / J
        let cg = [cof[0][0] * gp[0] + cof[0][1] * gp[1], cof[1][0] * gp[0] + cof[1][1] * gp[1]];
        let inv_j = jac.recip();
        let q = [
            (cof[0][0] * cg[0] + cof[1][0] * cg[1]) * inv_j * prm.kappa,
            (cof[0][1] * cg[0] + cof[1][1] * cg[1]) * inv_j * prm.kappa,
        ];
        let mut coupling = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                coupling += cof[i][j].value() * gx[i][j].value();
            }
        }
        prm.c0 * pp.partial([1, 0, 0]) + prm.alpha * coupling - (q[0].dx().value() + q[1].dy().value())
    }

    /// Transverse plate load.
    pub fn plate_force(&self, t: f64, x: f64) -> f64 {
        let prm = self.params;
        let (jt, jx, _) = Jet::seeds(t, x, 0.0);
        let w = self.omega(jt, jx);
        let wx = w.partial([0, 1, 0]);
        let zeta = w.partial([1, 0, 0]);
        let (_, _, pp, s) = self.body_stress_jets(t, [x, 0.0]);
        let u = self.fluid_sample(t, [x, w.value()]).u;
        let jg = (1.0 + wx * wx).sqrt();
        let slip = prm.beta / jg * (wx * zeta - (u[0] + u[1] * wx)) * wx;
        prm.rho_p * w.partial([2, 0, 0]) + w.partial([0, 4, 0]) - s[1][1].value() + 0.5 * (u[0] * u[0] + u[1] * u[1]) - pp.value()
            + slip
    }

    /// All sources as closures for the assembly.
    pub fn forcing(&self) -> Forcing {
        if self.kind == ReferenceKind::Rest {
            return Forcing::default();
        }
        let a = Arc::new(self.clone());
        let (b, c, d, e) = (a.clone(), a.clone(), a.clone(), a.clone());
        Forcing {
            fluid: Some(Arc::new(move |t, p| a.fluid_force(t, p))),
            fluid_interface: Some(Arc::new(move |t, x| b.fluid_interface_force(t, x))),
            biot: Some(Arc::new(move |t, p| c.biot_force(t, p))),
            pressure: Some(Arc::new(move |t, p| d.pressure_source(t, p))),
            plate: Some(Arc::new(move |t, x| e.plate_force(t, x))),
        }
    }

    /// Reference at `t` interpolated into the discrete spaces.
    pub fn interpolate(&self, disc: &Discretization, t: f64) -> Result<CoupledState> {
        let r = self.params.r;
        let om = |x: f64| {
            let s = self.plate_sample(t, x);
            (s.omega[0], s.omega[1])
        };
        let ze = |x: f64| {
            let (jt, jx, _) = Jet::seeds(t, x, 0.0);
            let w = self.omega(jt, jx);
            (w.partial([1, 0, 0]), w.partial([1, 1, 0]))
        };
        let u = |p: Point| {
            let w = self.omega(t, p[0]);
            self.fluid_sample(t, [p[0], p[1] + (1.0 + p[1] / r) * w]).u
        };
        let eta = |p: Point| self.displacement(t, p[0], p[1]);
        let xi = |p: Point| self.body_sample(t, p).xi;
        let pp = |p: Point| self.pore_pressure(t, p[0], p[1]);
        let mut s = initial_state(
            disc,
            &InitialFields {
                omega: &om,
                zeta: &ze,
                u: &u,
                eta: &eta,
                xi: &xi,
                p: &pp,
            },
        )?;
        s.t = t;
        Ok(s)
    }

    /// Minimum of `det(I + grad eta)` of the reference over a sample grid.
    pub fn min_det(&self, t: f64, n: usize) -> f64 {
        let (l, r) = (self.params.l, self.params.r);
        let mut m = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let g = self.body_sample(t, [l * i as f64 / n as f64, r * j as f64 / n as f64]).grad_eta;
                m = m.min(det2(&[[1.0 + g[0][0], g[0][1]], [g[1][0], 1.0 + g[1][1]]]));
            }
        }
        m
    }

    /// [`Self::min_det`] over `nt + 1` equispaced times in `[0, t_end]`.
    pub fn min_det_over(&self, t_end: f64, nt: usize, n: usize) -> f64 {
        (0..=nt).map(|k| self.min_det(t_end * k as f64 / nt.max(1) as f64, n)).fold(f64::INFINITY, f64::min)
    }
}

/// `cof(I + G)` for a displacement gradient `G`.
pub fn cof_of_gradient(g: &Mat2) -> Mat2 {
    cof2(&[[1.0 + g[0][0], g[0][1]], [g[1][0], 1.0 + g[1][1]]])
}
