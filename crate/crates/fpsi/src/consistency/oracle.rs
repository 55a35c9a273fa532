//! Substitution check for a reference: derivatives come from Cauchy
//! integrals of the closed-form fields on small complex polycircles, and
//! each residual is expanded by hand, independently of the jet-based
//! forcing.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reference::ReferenceSolution;

const NODES: usize = 16;
const RADIUS: f64 = 0.05;
const MAX_DEG: usize = 4;

/// Partial derivatives `d[i][j][k]` in (t, x, y) up to total degree four.
#[derive(Debug, Clone)]
pub struct Derivatives {
    d: [[[f64; MAX_DEG + 1]; MAX_DEG + 1]; MAX_DEG + 1],
}

impl Derivatives {
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.d[i][j][k]
    }
    fn v(&self) -> f64 {
        self.d[0][0][0]
    }
    fn t(&self) -> f64 {
        self.d[1][0][0]
    }
    fn x(&self) -> f64 {
        self.d[0][1][0]
    }
    fn y(&self) -> f64 {
        self.d[0][0][1]
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Taylor coefficients of an analytic function at (t, x, y), by the
/// trapezoid rule on the torus of radius `RADIUS` in each variable.
pub fn cauchy_derivatives(f: &dyn Fn(Complex64, Complex64, Complex64) -> Complex64, t: f64, x: f64, y: f64) -> Derivatives {
    let roots: Vec<Complex64> = (0..NODES)
        .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / NODES as f64))
        .collect();
    let mut samples = vec![Complex64::new(0.0, 0.0); NODES * NODES * NODES];
    for a in 0..NODES {
        for b in 0..NODES {
            for c in 0..NODES {
                samples[(a * NODES + b) * NODES + c] = f(
                    Complex64::new(t, 0.0) + roots[a] * RADIUS,
                    Complex64::new(x, 0.0) + roots[b] * RADIUS,
                    Complex64::new(y, 0.0) + roots[c] * RADIUS,
                );
            }
        }
    }
    let mut d = [[[0.0; MAX_DEG + 1]; MAX_DEG + 1]; MAX_DEG + 1];
    let n3 = (NODES * NODES * NODES) as f64;
    for i in 0..=MAX_DEG {
        for j in 0..=MAX_DEG - i {
            for k in 0..=MAX_DEG - i - j {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..NODES {
                    let wa = roots[(a * i) % NODES].conj();
                    for b in 0..NODES {
                        let wab = wa * roots[(b * j) % NODES].conj();
                        for c in 0..NODES {
                            acc += samples[(a * NODES + b) * NODES + c] * wab * roots[(c * k) % NODES].conj();
                        }
                    }
                }
                let coef = acc.re / n3 / RADIUS.powi((i + j + k) as i32);
                d[i][j][k] = coef * factorial(i) * factorial(j) * factorial(k);
            }
        }
    }
    Derivatives { d }
}

/// Largest scaled residual of each equation over the sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualReport {
    pub fluid: f64,
    pub divergence: f64,
    pub fluid_interface: f64,
    pub biot: f64,
    pub pressure: f64,
    pub plate: f64,
    /// kinematic, displacement and velocity continuity, and the walls
    pub coupling: f64,
    pub points: usize,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [self.fluid, self.divergence, self.fluid_interface, self.biot, self.pressure, self.plate, self.coupling]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

fn scaled(res: f64, terms: &[f64]) -> f64 {
    let s = terms.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    res.abs() / s
}

struct FluidLocal {
    u: [f64; 2],
    /// grad_u[i][j] = d u_i / d x_j
    grad_u: [[f64; 2]; 2],
    psi: Derivatives,
    pi: Derivatives,
}

fn fluid_local(re: &ReferenceSolution, t: f64, x: f64, y: f64) -> FluidLocal {
    let psi = cauchy_derivatives(&|a, b, c| re.stream(a, b, c), t, x, y);
    let pi = cauchy_derivatives(&|a, b, c| re.fluid_pressure(a, b, c), t, x, y);
    FluidLocal {
        u: [psi.y(), -psi.x()],
        grad_u: [[psi.at(0, 1, 1), psi.at(0, 0, 2)], [-psi.at(0, 2, 0), -psi.at(0, 1, 1)]],
        psi,
        pi,
    }
}

/// Body displacement components and pore pressure.
struct BodyLocal {
    ex: Derivatives,
    ey: Derivatives,
    p: Derivatives,
}

fn body_local(re: &ReferenceSolution, t: f64, x: f64, y: f64) -> BodyLocal {
    BodyLocal {
        ex: cauchy_derivatives(&|a, b, c| re.displacement(a, b, c)[0], t, x, y),
        ey: cauchy_derivatives(&|a, b, c| re.displacement(a, b, c)[1], t, x, y),
        p: cauchy_derivatives(&|a, b, c| re.pore_pressure(a, b, c), t, x, y),
    }
}

fn fluid_residual(re: &ReferenceSolution, t: f64, x: f64, y: f64) -> (f64, f64) {
    let nu = re.params.nu;
    let fl = fluid_local(re, t, x, y);
    let ps = &fl.psi;
    // u = (psi_y, -psi_x)
    let ut = [ps.at(1, 0, 1), -ps.at(1, 1, 0)];
    let lap = [ps.at(0, 2, 1) + ps.at(0, 0, 3), -(ps.at(0, 3, 0) + ps.at(0, 1, 2))];
    let gp = [fl.pi.x(), fl.pi.y()];
    let f = re.fluid_force(t, [x, y]);
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let conv = fl.u[0] * fl.grad_u[i][0] + fl.u[1] * fl.grad_u[i][1];
        let r = ut[i] + conv + gp[i] - nu * lap[i] - f[i];
        worst = worst.max(scaled(r, &[ut[i], conv, gp[i], nu * lap[i], f[i]]));
    }
    let div = fl.grad_u[0][0] + fl.grad_u[1][1];
    (worst, scaled(div, &[fl.grad_u[0][0], fl.grad_u[1][1]]))
}

fn biot_residual(re: &ReferenceSolution, t: f64, x: f64, y: f64) -> (f64, f64) {
    let prm = re.params;
    let b = body_local(re, t, x, y);
    let (ex, ey, p) = (&b.ex, &b.ey, &b.p);
    // F = I + grad eta; cof(F) = [[d, -c], [-b, a]]
    let (fa, fb, fc, fd) = (1.0 + ex.x(), ex.y(), ey.x(), 1.0 + ey.y());
    let cof = [[fd, -fc], [-fb, fa]];
    let gp = [p.x(), p.y()];

    // divergence of the elastic and viscous stresses:
    // mu lap eta + (mu + lambda) grad div eta
    let lap = |q: &Derivatives, s: usize| q.at(s, 2, 0) + q.at(s, 0, 2);
    let grad_div = |s: usize| [ex.at(s, 2, 0) + ey.at(s, 1, 1), ex.at(s, 1, 1) + ey.at(s, 0, 2)];
    let (gde, gdx) = (grad_div(0), grad_div(1));
    let f = re.biot_force(t, [x, y]);
    let mut worst: f64 = 0.0;
    for (i, q) in [ex, ey].into_iter().enumerate() {
        let inertia = prm.rho_b * q.at(2, 0, 0);
        let el = prm.mu_e * lap(q, 0) + (prm.mu_e + prm.lambda_e) * gde[i];
        let vi = prm.mu_v * lap(q, 1) + (prm.mu_v + prm.lambda_v) * gdx[i];
        // Piola identity: div(p cof F) = cof F grad p
        let pr = prm.alpha * (cof[i][0] * gp[0] + cof[i][1] * gp[1]);
        let r = inertia - el - vi + pr - f[i];
        worst = worst.max(scaled(r, &[inertia, el, vi, pr, f[i]]));
    }

    // pore pressure: c0 p_t + alpha cof : grad xi - div(kappa K grad p),
    // K = cof^T cof / J
    let gxi = [[ex.at(1, 1, 0), ex.at(1, 0, 1)], [ey.at(1, 1, 0), ey.at(1, 0, 1)]];
    let coupling = prm.alpha * (cof[0][0] * gxi[0][0] + cof[0][1] * gxi[0][1] + cof[1][0] * gxi[1][0] + cof[1][1] * gxi[1][1]);
    let jac = fa * fd - fb * fc;
    let m = [[fd * fd + fb * fb, -(fd * fc + fb * fa)], [-(fd * fc + fb * fa), fc * fc + fa * fa]];
    // derivatives of a, b, c, d along x (s = 0) and y (s = 1)
    let dfa = [ex.at(0, 2, 0), ex.at(0, 1, 1)];
    let dfb = [ex.at(0, 1, 1), ex.at(0, 0, 2)];
    let dfc = [ey.at(0, 2, 0), ey.at(0, 1, 1)];
    let dfd = [ey.at(0, 1, 1), ey.at(0, 0, 2)];
    let mut flux_div = 0.0;
    let hess = [[p.at(0, 2, 0), p.at(0, 1, 1)], [p.at(0, 1, 1), p.at(0, 0, 2)]];
    for s in 0..2 {
        let dm = [
            [2.0 * fd * dfd[s] + 2.0 * fb * dfb[s], -(dfd[s] * fc + fd * dfc[s] + dfb[s] * fa + fb * dfa[s])],
            [-(dfd[s] * fc + fd * dfc[s] + dfb[s] * fa + fb * dfa[s]), 2.0 * fc * dfc[s] + 2.0 * fa * dfa[s]],
        ];
        let dj = dfa[s] * fd + fa * dfd[s] - dfb[s] * fc - fb * dfc[s];
        for k in 0..2 {
            let dk = dm[s][k] / jac - m[s][k] * dj / (jac * jac);
            flux_div += dk * gp[k] + m[s][k] / jac * hess[s][k];
        }
    }
    let storage = prm.c0 * p.t();
    let src = re.pressure_source(t, [x, y]);
    let r = storage + coupling - prm.kappa * flux_div - src;
    (worst, scaled(r, &[storage, coupling, prm.kappa * flux_div, src]))
}

fn interface_residual(re: &ReferenceSolution, t: f64, x: f64) -> (f64, f64, f64) {
    let prm = re.params;
    let om = cauchy_derivatives(&|a, b, _c| re.omega(a, b), t, x, 0.0);
    let (w, wx, zeta) = (om.v(), om.x(), om.t());
    let fl = fluid_local(re, t, x, w);
    let b = body_local(re, t, x, 0.0);
    let jg = (1.0 + wx * wx).sqrt();
    let n = [-wx, 1.0];
    let tau = [1.0, wx];
    let u = fl.u;
    let g = fl.grad_u;
    let pi = fl.pi.v();
    let sig = [
        [-pi + 2.0 * prm.nu * g[0][0], prm.nu * (g[0][1] + g[1][0])],
        [prm.nu * (g[0][1] + g[1][0]), -pi + 2.0 * prm.nu * g[1][1]],
    ];
    let kin = 0.5 * (u[0] * u[0] + u[1] * u[1]);
    let pb = b.p.v();
    let ut = u[0] * tau[0] + u[1] * tau[1];
    let slip = prm.beta / jg * (wx * zeta - ut);
    let gf = re.fluid_interface_force(t, x);
    let mut fi: f64 = 0.0;
    for i in 0..2 {
        let traction = sig[i][0] * n[0] + sig[i][1] * n[1];
        let r = traction + (pb - kin) * n[i] - slip * tau[i] - gf[i];
        fi = fi.max(scaled(r, &[traction, pb, kin, slip, gf[i]]));
    }

    // plate: rho_p w_tt + w_xxxx - S_yy + |u|^2/2 - p + slip w'
    let (ex, ey) = (&b.ex, &b.ey);
    let div_e = ex.x() + ey.y();
    let div_x = ex.at(1, 1, 0) + ey.at(1, 0, 1);
    let s_yy = 2.0 * prm.mu_e * ey.y() + prm.lambda_e * div_e + 2.0 * prm.mu_v * ey.at(1, 0, 1) + prm.lambda_v * div_x
        - prm.alpha * pb * (1.0 + ex.x());
    let inertia = prm.rho_p * om.at(2, 0, 0);
    let bend = om.at(0, 4, 0);
    let load = re.plate_force(t, x);
    let r = inertia + bend - s_yy + kin - pb + slip * wx - load;
    let pl = scaled(r, &[inertia, bend, s_yy, kin, pb, slip * wx, load]);

    // kinematic u.n = zeta, eta = w e_y, xi = zeta e_y, no Darcy flux
    let cp = [
        scaled(u[0] * n[0] + u[1] * n[1] - zeta, &[u[0], u[1], zeta]),
        scaled(ex.v(), &[w]),
        scaled(ey.v() - w, &[w]),
        scaled(ex.t(), &[zeta]),
        scaled(ey.t() - zeta, &[zeta]),
        scaled(b.p.y(), &[pb]),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    (fi, pl, cp)
}

fn wall_residual(re: &ReferenceSolution, t: f64, s: f64) -> f64 {
    let (l, r) = (re.params.l, re.params.r);
    let mut worst: f64 = 0.0;
    let mut check = |q: [f64; 2], scale: f64| worst = worst.max(scaled(q[0].abs().max(q[1].abs()), &[scale]));
    // fluid walls: bottom, left, right
    let w0 = re.omega(t, 0.0);
    let wl = re.omega(t, l);
    check(re.fluid_sample(t, [s * l, -r]).u, 1.0);
    check(re.fluid_sample(t, [0.0, -r + s * (r + w0)]).u, 1.0);
    check(re.fluid_sample(t, [l, -r + s * (r + wl)]).u, 1.0);
    // body walls: top, left, right
    for p in [[s * l, r], [0.0, s * r], [l, s * r]] {
        let b = re.body_sample(t, p);
        check(b.eta, 1.0);
        check(b.xi, 1.0);
        check([b.p, 0.0], 1.0);
    }
    worst
}

/// Substitutes the reference into every equation at `points` random
/// space-time samples in `[0, t_end]`.
pub fn check_reference_residuals(re: &ReferenceSolution, points: usize, t_end: f64, seed: u64) -> ResidualReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l, r) = (re.params.l, re.params.r);
    let mut rep = ResidualReport { points, ..Default::default() };
    for _ in 0..points {
        let t = rng.gen::<f64>() * t_end;
        let x = rng.gen::<f64>() * l;
        let w = re.omega(t, x);
        let yf = -r + rng.gen::<f64>() * (r + w);
        let yb = rng.gen::<f64>() * r;
        let (f, d) = fluid_residual(re, t, x, yf);
        let (b, p) = biot_residual(re, t, x, yb);
        let (fi, pl, cp) = interface_residual(re, t, x);
        let wall = wall_residual(re, t, rng.gen());
        rep.fluid = rep.fluid.max(f);
        rep.divergence = rep.divergence.max(d);
        rep.biot = rep.biot.max(b);
        rep.pressure = rep.pressure.max(p);
        rep.fluid_interface = rep.fluid_interface.max(fi);
        rep.plate = rep.plate.max(pl);
        rep.coupling = rep.coupling.max(cp).max(wall);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhysicalParams;
    use crate::consistency::reference::{build_reference, ReferenceAmplitudes, ReferenceKind};

    #[test]
    fn cauchy_coefficients_of_a_polynomial() {
        let f = |t: Complex64, x: Complex64, y: Complex64| t * t * x + y * y * y * y * 0.5 + x * y;
        let d = cauchy_derivatives(&f, 0.3, -0.2, 0.7);
        assert!((d.at(2, 1, 0) - 2.0).abs() < 1e-11);
        assert!((d.at(0, 0, 4) - 12.0).abs() < 1e-9);
        assert!((d.at(0, 1, 1) - 1.0).abs() < 1e-11);
        assert!((d.at(1, 0, 0) - 2.0 * 0.3 * -0.2).abs() < 1e-12);
    }

    #[test]
    fn rest_reference_has_zero_residuals() {
        let re = build_reference(ReferenceKind::Rest, PhysicalParams::default(), ReferenceAmplitudes::default()).unwrap();
        let rep = check_reference_residuals(&re, 10, 1.0, 3);
        assert_eq!(rep.max(), 0.0);
    }

    #[test]
    fn separable_reference_satisfies_the_equations() {
        let re = build_reference(ReferenceKind::Separable, PhysicalParams::default(), ReferenceAmplitudes::default()).unwrap();
        let rep = check_reference_residuals(&re, 20, 1.0, 5);
        assert!(rep.passes(1e-8), "{rep:?}");
    }

    #[test]
    fn wrong_forcing_is_detected() {
        let re = build_reference(ReferenceKind::Separable, PhysicalParams::default(), ReferenceAmplitudes::default()).unwrap();
        let mut other = re.clone();
        other.params.kappa = 1.5;
        // residual fields from one reference against forcing from the other
        let p = [0.4, 0.3];
        let d = (re.pressure_source(0.7, p) - other.pressure_source(0.7, p)).abs();
        assert!(d > 1e-6);
    }
}
