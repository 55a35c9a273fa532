//! Splitting time loop: a plate step, then a coupled fluid / poroelastic
//! step on the geometry of the previous level, with degeneracy monitors
//! and a per-step energy ledger.

use crate::assembly::coupled::CoupledInput;
use crate::assembly::energy::{DissipationFields, EnergyFields};
use crate::assembly::{
    assemble_fluid_biot_system, assemble_plate_system, biot_geometry, compute_discrete_dissipation, compute_discrete_energy,
    interface_points, plate_load, plate_matrices, BiotGeometry, Discretization, Forcing, PlateMatrices, PlateVelocitySource,
    Unknowns,
};
use crate::error::{FpsiError, Result, Verdict};
use crate::linalg::dot;
use crate::regularizer::{mollify, ExtendedField, RegularizedDisplacement};
use crate::transforms::{BiotDisplacementField, Point};

/// All unknowns at one (full or half) time level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub n: usize,
    pub t: f64,
    pub half: bool,
    pub u: Vec<f64>,
    pub pi: Vec<f64>,
    /// plate displacement (Hermite)
    pub omega: Vec<f64>,
    /// plate velocity of the latest plate step (Hermite)
    pub zeta: Vec<f64>,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
    pub p: Vec<f64>,
}

impl CoupledState {
    pub fn zero(disc: &Discretization) -> Self {
        let sp = &disc.sp;
        CoupledState {
            n: 0,
            t: 0.0,
            half: false,
            u: vec![0.0; 2 * sp.velocity.n_nodes()],
            pi: vec![0.0; sp.multiplier.n_nodes()],
            omega: vec![0.0; sp.plate.n_dofs()],
            zeta: vec![0.0; sp.plate.n_dofs()],
            eta: vec![0.0; 2 * sp.displacement.n_nodes()],
            xi: vec![0.0; 2 * sp.displacement.n_nodes()],
            p: vec![0.0; sp.pressure.n_nodes()],
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.pi, &self.omega, &self.zeta, &self.eta, &self.xi, &self.p]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn biot_field(&self, disc: &Discretization) -> BiotDisplacementField {
        BiotDisplacementField {
            space: disc.sp.displacement.clone(),
            eta: self.eta.clone(),
            xi: self.xi.clone(),
        }
    }
}

/// Closed-form initial fields. Derivatives of the plate fields are needed
/// for the Hermite slope dofs.
pub struct InitialFields<'a> {
    pub omega: &'a dyn Fn(f64) -> (f64, f64),
    pub zeta: &'a dyn Fn(f64) -> (f64, f64),
    pub u: &'a dyn Fn(Point) -> [f64; 2],
    pub eta: &'a dyn Fn(Point) -> [f64; 2],
    pub xi: &'a dyn Fn(Point) -> [f64; 2],
    pub p: &'a dyn Fn(Point) -> f64,
}

/// Interpolate initial fields, enforce the essential conditions and check
/// the compatibility hypotheses.
pub fn initial_state(disc: &Discretization, f: &InitialFields) -> Result<CoupledState> {
    let sp = &disc.sp;
    let lay = &disc.layout;
    let mut s = CoupledState::zero(disc);
    s.omega = sp.plate.interpolate(|x| (f.omega)(x).0, |x| (f.omega)(x).1);
    s.zeta = sp.plate.interpolate(|x| (f.zeta)(x).0, |x| (f.zeta)(x).1);
    for (coef, key) in [(&s.omega, "omega0"), (&s.zeta, "zeta0")] {
        if sp.plate.clamped_dofs().into_iter().any(|d| coef[d].abs() > 1e-10) {
            return Err(FpsiError::config(key, "plate clamped: value and slope zero at x = 0, L"));
        }
    }
    lay.plate.clamp(&mut s.omega);
    lay.plate.clamp(&mut s.zeta);
    s.u = sp.velocity.interpolate_vector(f.u);
    lay.velocity.clamp(&mut s.u);
    s.eta = sp.displacement.interpolate_vector(f.eta);
    s.xi = sp.displacement.interpolate_vector(f.xi);
    s.p = sp.pressure.interpolate_scalar(f.p);
    // compatibility of traces before clamping
    let bot = sp.displacement.row_nodes(false);
    let k = sp.displacement.degree();
    for (i, &x) in sp.plate.nodes.iter().enumerate() {
        let node = bot[k * i];
        let w = (f.omega)(x).0;
        let z = (f.zeta)(x).0;
        if (s.eta[2 * node + 1] - w).abs() > 1e-10 || s.eta[2 * node].abs() > 1e-10 {
            return Err(FpsiError::config("eta0", format!("η₀|Γ = ω₀ e_y violated at x = {x}")));
        }
        if (s.xi[2 * node + 1] - z).abs() > 1e-10 || s.xi[2 * node].abs() > 1e-10 {
            return Err(FpsiError::config("xi0", format!("ξ₀|Γ = ζ₀ e_y violated at x = {x}")));
        }
    }
    lay.displacement.clamp(&mut s.eta);
    lay.displacement.clamp(&mut s.xi);
    lay.pressure.clamp(&mut s.p);
    for (e, sl, _, _) in interface_points(disc) {
        let w = sp.plate.eval_local(&s.omega, e, sl).v;
        if w.abs() >= disc.params.r {
            return Err(FpsiError::config("omega0", "|ω₀| ≤ R₀ < R"));
        }
    }
    Ok(s)
}

/// Cataloged initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCase {
    Zero,
    /// small smooth compatible data of the given size
    Smooth { amplitude: f64 },
    /// plate starting at `depth * R` below the interface, moving down
    PlateDrop { depth: f64, speed: f64 },
    /// poroelastic body compressed towards the interface
    Fold { speed: f64 },
}

impl InitialCase {
    pub fn build(&self, disc: &Discretization) -> Result<CoupledState> {
        let (l, r) = (disc.params.l, disc.params.r);
        let pi = std::f64::consts::PI;
        // clamped bump with unit height
        let bump = move |x: f64| ((1.0 - (2.0 * pi * x / l).cos()) / 2.0, pi / l * (2.0 * pi * x / l).sin());
        let sxy = move |p: Point| (pi * p[0] / l).sin() * (pi * p[1] / r).sin();
        let decay = move |y: f64| (1.0 - y / r).powi(2);
        let zero1 = |_: f64| (0.0, 0.0);
        let zero2 = |_: Point| [0.0, 0.0];
        let zero_s = |_: Point| 0.0;
        match *self {
            InitialCase::Zero => initial_state(
                disc,
                &InitialFields {
                    omega: &zero1,
                    zeta: &zero1,
                    u: &zero2,
                    eta: &zero2,
                    xi: &zero2,
                    p: &zero_s,
                },
            ),
            InitialCase::Smooth { amplitude: a } => {
                let om = move |x: f64| (0.5 * a * bump(x).0, 0.5 * a * bump(x).1);
                let ze = move |x: f64| (a * bump(x).0, a * bump(x).1);
                initial_state(
                    disc,
                    &InitialFields {
                        omega: &om,
                        zeta: &ze,
                        u: &|p| {
                            // stream function sin^2(pi x / L) ((y + R) / R)^2
                            let s = (pi * p[0] / l).sin().powi(2);
                            let ds = pi / l * (2.0 * pi * p[0] / l).sin();
                            let g = ((p[1] + r) / r).powi(2);
                            let dg = 2.0 * (p[1] + r) / (r * r);
                            [a * s * dg, -a * ds * g]
                        },
                        eta: &|p| [0.2 * a * sxy(p), om(p[0]).0 * decay(p[1])],
                        xi: &|p| [0.5 * a * sxy(p), ze(p[0]).0 * decay(p[1])],
                        p: &|p| a * sxy(p),
                    },
                )
            }
            InitialCase::PlateDrop { depth, speed } => {
                let shape = move |x: f64| (-bump(x).0, -bump(x).1);
                let om = move |x: f64| (depth * r * shape(x).0, depth * r * shape(x).1);
                let ze = move |x: f64| (speed * shape(x).0, speed * shape(x).1);
                initial_state(
                    disc,
                    &InitialFields {
                        omega: &om,
                        zeta: &ze,
                        u: &zero2,
                        eta: &|p| [0.0, om(p[0]).0 * (1.0 - p[1] / r)],
                        xi: &|p| [0.0, ze(p[0]).0 * (1.0 - p[1] / r)],
                        p: &zero_s,
                    },
                )
            }
            InitialCase::Fold { speed } => initial_state(
                disc,
                &InitialFields {
                    omega: &zero1,
                    zeta: &zero1,
                    u: &zero2,
                    eta: &zero2,
                    xi: &|p| [0.0, -speed * sxy(p)],
                    p: &zero_s,
                },
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorThresholds {
    /// required `R - |omega|`
    pub margin_r: f64,
    pub margin_det: f64,
    pub norm_cap: f64,
}

impl MonitorThresholds {
    pub fn for_radius(r: f64) -> Self {
        MonitorThresholds {
            margin_r: 0.01 * r,
            margin_det: 1e-3,
            norm_cap: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorReport {
    pub min_gap_r: f64,
    pub min_det: f64,
    pub min_fluid_jacobian: f64,
    pub max_norm_f: f64,
    pub max_norm_f_inv: f64,
    pub verdict: Verdict,
}

/// Minimum of `R - |omega|` over interface quadrature points and nodes.
pub fn plate_gap(disc: &Discretization, omega: &[f64]) -> f64 {
    let pl = &disc.sp.plate;
    let r = disc.params.r;
    let mut g = f64::INFINITY;
    for (e, s, _, _) in interface_points(disc) {
        g = g.min(r - pl.eval_local(omega, e, s).v.abs());
    }
    for i in 0..=pl.nx {
        g = g.min(r - omega[2 * i].abs());
    }
    g
}

fn verdict(th: &MonitorThresholds, gap: f64, geom: Option<&BiotGeometry>) -> Verdict {
    if !(gap >= th.margin_r) {
        return Verdict::PlateTouchesBoundary;
    }
    if let Some(g) = geom {
        if !(g.min_det >= th.margin_det) || !(g.max_norm_f <= th.norm_cap) || !(g.max_norm_f_inv <= th.norm_cap) {
            return Verdict::LagrangianDegenerate;
        }
    }
    Verdict::Ok
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub delta: f64,
    pub h_aux_factor: f64,
    pub thresholds: MonitorThresholds,
    pub snapshot_stride: usize,
}

/// One ledger row.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub n: usize,
    pub t: f64,
    pub e_prev: f64,
    pub e_half: f64,
    pub e_full: f64,
    pub d: f64,
    /// plate-step numerical dissipation
    pub num_diss_1: f64,
    /// coupled-step numerical dissipation
    pub num_diss_2: f64,
    pub work_1: f64,
    pub work_2: f64,
    pub res_eq1: f64,
    pub res_eq2: f64,
    pub min_det: f64,
    pub min_gap_r: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    pub e0: f64,
    pub rows: Vec<LedgerRow>,
}

/// The fixed pieces of a simulation.
pub struct Simulation {
    pub disc: Discretization,
    pub cfg: SchemeConfig,
    pub forcing: Forcing,
    pub plate_mats: PlateMatrices,
}

/// Output of a plate step.
#[derive(Debug, Clone, Copy)]
pub struct PlateStepReport {
    pub e_half: f64,
    pub num_diss: f64,
    pub work: f64,
    pub residual: f64,
}

/// Output of a coupled step.
#[derive(Debug, Clone, Copy)]
pub struct CoupledStepReport {
    pub e_full: f64,
    pub d: f64,
    pub num_diss: f64,
    pub work: f64,
    pub residual: f64,
    pub solver_residual: f64,
}

pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

/// Everything a coupled step produced, for observers.
pub struct StepView<'a> {
    pub prev: &'a CoupledState,
    pub half: &'a CoupledState,
    pub state: &'a CoupledState,
    pub reg: &'a RegularizedDisplacement,
    pub geom: &'a BiotGeometry,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub ledger: EnergyLedger,
    pub monitors: Vec<MonitorReport>,
    pub snapshots: Vec<CoupledState>,
    pub termination: Verdict,
    pub final_state: CoupledState,
}

impl Simulation {
    pub fn new(disc: Discretization, cfg: SchemeConfig, forcing: Forcing) -> Result<Self> {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(FpsiError::config("dt", "Δt > 0"));
        }
        if !(cfg.t_end >= 0.0) {
            return Err(FpsiError::config("T", "T ≥ 0"));
        }
        if !(cfg.delta > 0.0 && cfg.delta < disc.params.l.min(disc.params.r)) {
            return Err(FpsiError::config("delta", "0 < δ < min(L,R)"));
        }
        let plate_mats = plate_matrices(&disc);
        Ok(Simulation {
            disc,
            cfg,
            forcing,
            plate_mats,
        })
    }

    pub fn energy(&self, s: &CoupledState, omega_weight: &[f64], zeta: PlateVelocitySource) -> f64 {
        compute_discrete_energy(
            &self.disc,
            &EnergyFields {
                u: &s.u,
                omega_weight,
                xi: &s.xi,
                p: &s.p,
                eta: &s.eta,
                zeta,
                omega: &s.omega,
            },
        )
        .total()
    }

    /// Energy at a full level: fluid weight and plate velocity from the level itself.
    pub fn full_energy(&self, s: &CoupledState) -> f64 {
        self.energy(s, &s.omega, PlateVelocitySource::Trace(&s.xi))
    }

    pub fn regularize(&self, s: &CoupledState) -> Result<RegularizedDisplacement> {
        let ext = ExtendedField::from_fe(&s.biot_field(&self.disc), None, self.cfg.delta, self.cfg.h_aux_factor)?;
        mollify(ext, self.cfg.delta)
    }

    /// Plate step from the full level `s`; the carried plate velocity is
    /// the transverse trace of the displacement rate.
    pub fn step_plate(&self, s: &CoupledState) -> Result<(CoupledState, PlateStepReport)> {
        self.plate_half_step(s, PlateVelocitySource::Trace(&s.xi))
    }

    /// Plate step of the plate alone: the carried velocity is the previous
    /// Hermite velocity, so repeated calls integrate an isolated plate.
    pub fn step_plate_only(&self, s: &CoupledState) -> Result<(CoupledState, PlateStepReport)> {
        self.plate_half_step(s, PlateVelocitySource::Hermite(&s.zeta))
    }

    fn plate_half_step(&self, s: &CoupledState, carried: PlateVelocitySource) -> Result<(CoupledState, PlateStepReport)> {
        let disc = &self.disc;
        let dt = self.cfg.dt;
        let t_new = s.t + dt;
        let pl = &disc.sp.plate;
        let zeta_n = |x: f64| {
            let (e, sl) = pl.locate(x).unwrap_or((0, 0.0));
            carried.eval(disc, e, sl)
        };
        let sys = assemble_plate_system(disc, &self.plate_mats, &s.omega, zeta_n, dt, t_new, &self.forcing);
        let w = disc.layout.plate.expand(&sys.solve()?);
        let zeta: Vec<f64> = w.iter().zip(&s.omega).map(|(a, b)| (a - b) / dt).collect();
        let mut h = s.clone();
        h.half = true;
        h.t = t_new;
        h.omega = w;
        h.zeta = zeta;

        let e_prev = self.energy(s, &s.omega, carried);
        let e_half = self.energy(&h, &s.omega, PlateVelocitySource::Hermite(&h.zeta));
        let dw: Vec<f64> = h.omega.iter().zip(&s.omega).map(|(a, b)| a - b).collect();
        let zero_u = vec![0.0; s.u.len()];
        let zero_d = vec![0.0; s.eta.len()];
        let zero_p = vec![0.0; s.p.len()];
        let num = compute_discrete_energy(
            disc,
            &EnergyFields {
                u: &zero_u,
                omega_weight: &s.omega,
                xi: &zero_d,
                p: &zero_p,
                eta: &zero_d,
                zeta: PlateVelocitySource::Difference(&PlateVelocitySource::Hermite(&h.zeta), &carried),
                omega: &dw,
            },
        )
        .total();
        let work = match &self.forcing.plate {
            Some(f) => dt * dot(&plate_load(disc, |x| f(t_new, x)), &disc.layout.plate.restrict(&h.zeta)),
            None => 0.0,
        };
        let residual = relative_residual(e_half + num, e_prev + work);
        Ok((
            h,
            PlateStepReport {
                e_half,
                num_diss: num,
                work,
                residual,
            },
        ))
    }

    /// Coupled step from the half level `h`; `prev` is the full level the
    /// plate step started from (its plate displacement is the geometry).
    pub fn step_fluid_biot(
        &self,
        prev: &CoupledState,
        h: &CoupledState,
        reg: &RegularizedDisplacement,
        geom: &BiotGeometry,
    ) -> Result<(CoupledState, CoupledStepReport)> {
        let _ = reg;
        let disc = &self.disc;
        let dt = self.cfg.dt;
        let inp = CoupledInput {
            u_n: &h.u,
            eta_n: &h.eta,
            xi_n: &h.xi,
            p_n: &h.p,
            omega_n: &prev.omega,
            zeta_half: &h.zeta,
            geom,
            dt,
            t_new: h.t,
            forcing: &self.forcing,
        };
        let cs = assemble_fluid_biot_system(disc, &inp)?;
        let x = cs.system.solve()?;
        let solver_residual = cs.system.residual(&x);
        let unk = Unknowns::new(disc);
        let (u, pi, rate, p) = unk.split(disc, &x);
        let mut s = h.clone();
        s.half = false;
        s.n = prev.n + 1;
        s.u = u;
        s.pi = pi;
        s.eta = h.eta.iter().zip(&rate).map(|(a, b)| a + dt * b).collect();
        s.xi = rate;
        s.p = p;
        if !s.is_finite() {
            return Err(FpsiError::Solver("non-finite state after the coupled step".into()));
        }

        let e_half = self.energy(h, &prev.omega, PlateVelocitySource::Hermite(&h.zeta));
        let e_full = self.full_energy(&s);
        let du: Vec<f64> = s.u.iter().zip(&h.u).map(|(a, b)| a - b).collect();
        let dxi: Vec<f64> = s.xi.iter().zip(&h.xi).map(|(a, b)| a - b).collect();
        let dp: Vec<f64> = s.p.iter().zip(&h.p).map(|(a, b)| a - b).collect();
        let deta: Vec<f64> = s.eta.iter().zip(&h.eta).map(|(a, b)| a - b).collect();
        let zero_w = vec![0.0; h.omega.len()];
        let num = compute_discrete_energy(
            disc,
            &EnergyFields {
                u: &du,
                omega_weight: &prev.omega,
                xi: &dxi,
                p: &dp,
                eta: &deta,
                zeta: PlateVelocitySource::Difference(&PlateVelocitySource::Trace(&s.xi), &PlateVelocitySource::Hermite(&h.zeta)),
                omega: &zero_w,
            },
        )
        .total();
        let d = compute_discrete_dissipation(
            disc,
            &DissipationFields {
                u: &s.u,
                omega_n: &prev.omega,
                eta_dot: &s.xi,
                p: &s.p,
                geom,
            },
            dt,
        )
        .total();
        let work = dt * dot(&cs.load, &x);
        let residual = relative_residual(e_full + num + d, e_half + work);
        Ok((
            s,
            CoupledStepReport {
                e_full,
                d,
                num_diss: num,
                work,
                residual,
                solver_residual,
            },
        ))
    }

    pub fn run(&self, init: CoupledState) -> Result<RunResult> {
        self.run_observed(init, |_| Ok(()))
    }

    /// Advance until the final time or a monitor verdict other than ok.
    pub fn run_observed(&self, init: CoupledState, mut observer: impl FnMut(&StepView) -> Result<()>) -> Result<RunResult> {
        let disc = &self.disc;
        let th = self.cfg.thresholds;
        let n_steps = (self.cfg.t_end / self.cfg.dt - 1e-9).ceil().max(0.0) as usize;
        let mut ledger = EnergyLedger {
            e0: self.full_energy(&init),
            rows: Vec::new(),
        };
        let mut monitors = Vec::new();
        let mut snapshots = vec![init.clone()];
        let mut s = init;
        let mut termination = Verdict::Ok;
        let stride = self.cfg.snapshot_stride.max(1);

        // hypotheses on the initial level
        let gap0 = plate_gap(disc, &s.omega);
        if gap0 <= 0.0 {
            return Err(FpsiError::config("omega0", "|ω₀| ≤ R₀ < R"));
        }
        for step in 0..n_steps {
            let reject = |v: Verdict, gap: f64, det: f64, e_half: f64| LedgerRow {
                n: step + 1,
                t: s.t + self.cfg.dt,
                e_prev: f64::NAN,
                e_half,
                e_full: f64::NAN,
                d: f64::NAN,
                num_diss_1: f64::NAN,
                num_diss_2: f64::NAN,
                work_1: f64::NAN,
                work_2: f64::NAN,
                res_eq1: f64::NAN,
                res_eq2: f64::NAN,
                min_det: det,
                min_gap_r: gap,
                verdict: v,
            };
            let reg = self.regularize(&s)?;
            let geom = biot_geometry(disc, &reg);
            let (h, r1) = self.step_plate(&s)?;
            let gap = plate_gap(disc, &h.omega);
            let v = verdict(&th, gap, Some(&geom));
            let mon = MonitorReport {
                min_gap_r: gap,
                min_det: geom.min_det,
                min_fluid_jacobian: 1.0 - (disc.params.r - gap) / disc.params.r,
                max_norm_f: geom.max_norm_f,
                max_norm_f_inv: geom.max_norm_f_inv,
                verdict: v,
            };
            monitors.push(mon);
            if v != Verdict::Ok {
                ledger.rows.push(reject(v, gap, geom.min_det, r1.e_half));
                termination = v;
                break;
            }
            let (next, r2) = match self.step_fluid_biot(&s, &h, &reg, &geom) {
                Ok(x) => x,
                Err(FpsiError::Degeneracy { cause, .. }) => {
                    ledger.rows.push(reject(cause, gap, geom.min_det, r1.e_half));
                    termination = cause;
                    break;
                }
                Err(e) => return Err(e),
            };
            observer(&StepView {
                prev: &s,
                half: &h,
                state: &next,
                reg: &reg,
                geom: &geom,
            })?;
            ledger.rows.push(LedgerRow {
                n: next.n,
                t: next.t,
                e_prev: r1.e_half + r1.num_diss - r1.work,
                e_half: r1.e_half,
                e_full: r2.e_full,
                d: r2.d,
                num_diss_1: r1.num_diss,
                num_diss_2: r2.num_diss,
                work_1: r1.work,
                work_2: r2.work,
                res_eq1: r1.residual,
                res_eq2: r2.residual,
                min_det: geom.min_det,
                min_gap_r: gap,
                verdict: Verdict::Ok,
            });
            s = next;
            if s.n % stride == 0 {
                snapshots.push(s.clone());
            }
        }
        Ok(RunResult {
            ledger,
            monitors,
            snapshots,
            termination,
            final_state: s,
        })
    }
}

/// Per-step pass flags of the global energy bound and the monotone chain.
#[derive(Debug, Clone)]
pub struct EnergyCheck {
    pub bound_ok: Vec<bool>,
    pub monotone_ok: Vec<bool>,
}

impl EnergyCheck {
    pub fn all_pass(&self) -> bool {
        self.bound_ok.iter().chain(&self.monotone_ok).all(|b| *b)
    }
}

/// `E^n + sum D <= E_0 (1 + 1e-8)` and `E^{n+1} <= E^{n+1/2} <= E^n` for
/// every accepted step; `tol` absorbs round-off in the monotone chain.
pub fn check_global_energy_inequality(ledger: &EnergyLedger, e0: f64, tol: f64) -> EnergyCheck {
    let mut bound_ok = Vec::new();
    let mut monotone_ok = Vec::new();
    let mut sum_d = 0.0;
    let mut e_prev = e0;
    for row in ledger.rows.iter().filter(|r| r.verdict == Verdict::Ok) {
        sum_d += row.d;
        bound_ok.push(row.e_full + sum_d <= e0 * (1.0 + 1e-8) + tol);
        monotone_ok.push(row.e_full <= row.e_half + tol && row.e_half <= e_prev + tol);
        e_prev = row.e_full;
    }
    EnergyCheck { bound_ok, monotone_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhysicalParams;
    use crate::spaces::Degrees;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sim(nx: usize, ny: usize, dt: f64, t_end: f64) -> Simulation {
        let disc = Discretization::new(PhysicalParams::default(), nx, ny, Degrees::default(), None).unwrap();
        let cfg = SchemeConfig {
            dt,
            t_end,
            delta: 0.2,
            h_aux_factor: 0.125,
            thresholds: MonitorThresholds::for_radius(1.0),
            snapshot_stride: 1,
        };
        Simulation::new(disc, cfg, Forcing::default()).unwrap()
    }

    #[test]
    fn zero_run_stays_zero() {
        let s = sim(3, 2, 0.25, 1.0);
        let init = InitialCase::Zero.build(&s.disc).unwrap();
        let r = s.run(init.clone()).unwrap();
        assert_eq!(r.termination, Verdict::Ok);
        assert_eq!(r.ledger.rows.len(), 4);
        for row in &r.ledger.rows {
            assert_eq!(row.e_full, 0.0);
            assert_eq!(row.e_half, 0.0);
            assert_eq!(row.res_eq1, 0.0);
            assert_eq!(row.verdict, Verdict::Ok);
        }
        let last = r.final_state;
        assert!(last.u.iter().chain(&last.eta).chain(&last.p).chain(&last.omega).all(|v| *v == 0.0));
        assert!(check_global_energy_inequality(&r.ledger, r.ledger.e0, 0.0).all_pass());
    }

    #[test]
    fn incompatible_initial_trace_is_rejected() {
        let s = sim(3, 2, 0.1, 0.1);
        let w = |x: f64| (0.01 * (1.0 - (2.0 * std::f64::consts::PI * x).cos()), 0.02 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).sin());
        let z = |_: f64| (0.0, 0.0);
        let zero2 = |_: Point| [0.0, 0.0];
        let err = initial_state(
            &s.disc,
            &InitialFields {
                omega: &w,
                zeta: &z,
                u: &zero2,
                eta: &zero2,
                xi: &zero2,
                p: &|_| 0.0,
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("eta0"), "{err}");
    }

    #[test]
    fn plate_alone_conserves_energy_up_to_numerical_dissipation() {
        let s = sim(16, 2, 0.01, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut st = CoupledState::zero(&s.disc);
        for v in st.omega.iter_mut().chain(st.zeta.iter_mut()) {
            *v = rng.gen_range(-0.01..0.01);
        }
        s.disc.layout.plate.clamp(&mut st.omega);
        s.disc.layout.plate.clamp(&mut st.zeta);
        for _ in 0..100 {
            let (h, rep) = s.step_plate_only(&st).unwrap();
            assert!(rep.residual <= 1e-10, "{}", rep.residual);
            assert!(rep.num_diss >= 0.0);
            st = CoupledState { half: false, n: st.n + 1, ..h };
        }
    }

    #[test]
    fn first_plate_step_starts_from_initial_displacement() {
        let s = sim(4, 2, 1e-9, 1e-9);
        let init = InitialCase::Smooth { amplitude: 0.1 }.build(&s.disc).unwrap();
        let (h, _) = s.step_plate(&init).unwrap();
        for (a, b) in h.omega.iter().zip(&init.omega) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(h.u, init.u);
        assert_eq!(h.eta, init.eta);
        assert_eq!(h.p, init.p);
    }

    #[test]
    fn coupled_step_dissipates_and_couples_plate_velocity() {
        let s = sim(4, 4, 0.05, 0.05);
        let init = InitialCase::Smooth { amplitude: 0.1 }.build(&s.disc).unwrap();
        let reg = s.regularize(&init).unwrap();
        let geom = biot_geometry(&s.disc, &reg);
        let (h, r1) = s.step_plate(&init).unwrap();
        let (next, r2) = s.step_fluid_biot(&init, &h, &reg, &geom).unwrap();
        assert!(r1.residual <= 1e-10);
        assert!(r2.residual <= 1e-6, "{}", r2.residual);
        assert!(r2.e_full < r1.e_half);
        assert!(r2.d > 0.0);
        assert_eq!(next.omega, h.omega);
        // transverse interface displacement equals the plate values
        let k = s.disc.sp.displacement.degree();
        let bot = s.disc.sp.displacement.row_nodes(false);
        for i in 0..=s.disc.sp.plate.nx {
            let nd = bot[k * i];
            assert!((next.xi[2 * nd + 1] - (next.eta[2 * nd + 1] - init.eta[2 * nd + 1]) / 0.05).abs() < 1e-10);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let s = sim(4, 4, 0.05, 0.2);
        let init = InitialCase::Smooth { amplitude: 0.1 }.build(&s.disc).unwrap();
        let a = s.run(init.clone()).unwrap();
        let b = s.run(init).unwrap();
        for (x, y) in a.ledger.rows.iter().zip(&b.ledger.rows) {
            assert_eq!(x.e_full.to_bits(), y.e_full.to_bits());
            assert_eq!(x.res_eq2.to_bits(), y.res_eq2.to_bits());
        }
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn verdict_priorities() {
        let th = MonitorThresholds::for_radius(1.0);
        assert_eq!(verdict(&th, 0.5, None), Verdict::Ok);
        assert_eq!(verdict(&th, 0.005, None), Verdict::PlateTouchesBoundary);
        assert_eq!(verdict(&th, f64::NAN, None), Verdict::PlateTouchesBoundary);
    }

    #[test]
    fn fold_terminates_with_degenerate_map() {
        let s = sim(6, 6, 0.01, 0.5);
        let init = InitialCase::Fold { speed: 5.0 }.build(&s.disc).unwrap();
        let r = s.run(init).unwrap();
        assert_eq!(r.termination, Verdict::LagrangianDegenerate);
        let rows = &r.ledger.rows;
        assert_eq!(rows.last().unwrap().verdict, Verdict::LagrangianDegenerate);
        let accepted = rows[rows.len() - 2];
        assert!(accepted.min_det >= s.cfg.thresholds.margin_det);
    }
}
