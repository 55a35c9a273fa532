//! Geometric maps between the reference strips and the moving domains:
//! the vertical-stretch ALE map of the fluid, the Lagrangian map of the
//! poroelastic body, their Jacobians and transformed gradients, and the
//! divergence-preserving transfer of velocities between two fluid domains.

use crate::error::{FpsiError, Result, Verdict};
use crate::spaces::{HermiteSpace, LagrangeSpace, PlateEval};

pub type Point = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Anything that can report plate displacement and its x-derivatives.
pub trait PlateProfile {
    fn at(&self, x: f64) -> PlateEval;
}

impl<F: Fn(f64) -> PlateEval> PlateProfile for F {
    fn at(&self, x: f64) -> PlateEval {
        self(x)
    }
}

/// Plate displacement and velocity in the clamped Hermite space.
#[derive(Debug, Clone)]
pub struct PlateField {
    pub space: HermiteSpace,
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl PlateField {
    pub fn zero(space: HermiteSpace) -> Self {
        let n = space.n_dofs();
        PlateField {
            space,
            omega: vec![0.0; n],
            zeta: vec![0.0; n],
        }
    }

    pub fn velocity(&self) -> PlateVelocity<'_> {
        PlateVelocity(self)
    }
}

impl PlateProfile for PlateField {
    fn at(&self, x: f64) -> PlateEval {
        let x = x.clamp(0.0, self.space.length);
        self.space.eval(&self.omega, x).expect("clamped into the plate segment")
    }
}

/// View of a plate field's velocity as a profile.
pub struct PlateVelocity<'a>(&'a PlateField);

impl PlateProfile for PlateVelocity<'_> {
    fn at(&self, x: f64) -> PlateEval {
        let x = x.clamp(0.0, self.0.space.length);
        self.0.space.eval(&self.0.zeta, x).expect("clamped into the plate segment")
    }
}

/// Poroelastic displacement and velocity on the reference body.
#[derive(Debug, Clone)]
pub struct BiotDisplacementField {
    pub space: LagrangeSpace,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
}

impl BiotDisplacementField {
    pub fn displacement_gradient(&self, p: Point) -> Result<Mat2> {
        Ok(self.space.eval_vector(&self.eta, p)?.1)
    }
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Cofactor matrix, `det(F) F^{-T}`.
pub fn cof2(m: &Mat2) -> Mat2 {
    [[m[1][1], -m[1][0]], [-m[0][1], m[0][0]]]
}

pub fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn matvec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Frobenius norm.
pub fn fro(m: &Mat2) -> f64 {
    (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
}

/// Map evaluators for a strip of height `r`.
#[derive(Debug, Clone, Copy)]
pub struct TransferMaps {
    pub l: f64,
    pub r: f64,
}

impl TransferMaps {
    pub fn new(l: f64, r: f64) -> Self {
        TransferMaps { l, r }
    }

    fn check_fluid_ref(&self, p: Point) -> Result<()> {
        let tol = 1e-12 * (self.l + self.r);
        if p[0] < -tol || p[0] > self.l + tol || p[1] < -self.r - tol || p[1] > tol {
            return Err(FpsiError::Domain {
                domain: "reference fluid domain",
                x: p[0],
                y: p[1],
            });
        }
        Ok(())
    }

    fn height(&self, w: &PlateEval, p: Point) -> Result<f64> {
        let h = self.r + w.v;
        if h <= 0.0 {
            return Err(FpsiError::degenerate(
                Verdict::PlateTouchesBoundary,
                p,
                format!("R + omega = {h} <= 0"),
            ));
        }
        Ok(h)
    }

    pub fn ale_map(&self, omega: &impl PlateProfile, p: Point) -> Result<Point> {
        self.check_fluid_ref(p)?;
        let w = omega.at(p[0]).v;
        Ok([p[0], p[1] + (1.0 + p[1] / self.r) * w])
    }

    pub fn ale_inverse(&self, omega: &impl PlateProfile, p: Point) -> Result<Point> {
        let w = omega.at(p[0]);
        let h = self.height(&w, p)?;
        Ok([p[0], -self.r + self.r * (self.r + p[1]) / h])
    }

    /// Analytic differential of the ALE map.
    pub fn ale_differential(&self, omega: &impl PlateProfile, p: Point) -> Mat2 {
        let w = omega.at(p[0]);
        let s = 1.0 + p[1] / self.r;
        [[1.0, 0.0], [s * w.dx, 1.0 + w.v / self.r]]
    }

    pub fn fluid_jacobian(&self, omega: &impl PlateProfile, x: f64) -> f64 {
        1.0 + omega.at(x).v / self.r
    }

    pub fn interface_jacobian(&self, omega: &impl PlateProfile, x: f64) -> f64 {
        let d = omega.at(x).dx;
        (1.0 + d * d).sqrt()
    }

    pub fn biot_jacobian(grad_eta: &Mat2) -> f64 {
        (1.0 + grad_eta[0][0]) * (1.0 + grad_eta[1][1]) - grad_eta[0][1] * grad_eta[1][0]
    }

    /// Matrix `G` with `grad^omega g = G * grad_ref g` at reference point `p`.
    pub fn fluid_gradient_matrix(&self, w: &PlateEval, p: Point) -> Result<Mat2> {
        let h = self.height(w, p)?;
        Ok([[1.0, -(self.r + p[1]) * w.dx / h], [0.0, self.r / h]])
    }

    /// Physical gradient of a scalar given its reference gradient.
    pub fn transformed_gradient_fluid(&self, omega: &impl PlateProfile, grad_ref: [f64; 2], p: Point) -> Result<[f64; 2]> {
        let g = self.fluid_gradient_matrix(&omega.at(p[0]), p)?;
        Ok(matvec(&g, grad_ref))
    }

    /// `grad_ref g . (I + grad eta)^{-1}` for a scalar reference gradient.
    pub fn transformed_gradient_biot(grad_eta: &Mat2, grad_ref: [f64; 2], p: Point) -> Result<[f64; 2]> {
        let f = [[1.0 + grad_eta[0][0], grad_eta[0][1]], [grad_eta[1][0], 1.0 + grad_eta[1][1]]];
        let fi = inv2(&f).ok_or_else(|| FpsiError::degenerate(Verdict::LagrangianDegenerate, p, "I + grad eta is singular"))?;
        Ok([
            grad_ref[0] * fi[0][0] + grad_ref[1] * fi[1][0],
            grad_ref[0] * fi[0][1] + grad_ref[1] * fi[1][1],
        ])
    }

    /// Velocity of the ALE map at reference height `y`.
    pub fn domain_velocity(&self, zeta: f64, y: f64) -> [f64; 2] {
        [0.0, (self.r + y) / self.r * zeta]
    }

    /// Normal `(-omega', 1)` and tangent `(1, omega')`, both of length `J_Gamma`.
    pub fn normal_tangent(omega_dx: f64) -> ([f64; 2], [f64; 2]) {
        ([-omega_dx, 1.0], [1.0, omega_dx])
    }

    fn gamma(&self, src: &PlateEval, dst: &PlateEval, p: Point) -> Result<(f64, f64, f64)> {
        let hd = self.height(dst, p)?;
        let hs = self.r + src.v;
        let g = hs / hd;
        let g1 = (src.dx - g * dst.dx) / hd;
        let g2 = (src.dxx - 2.0 * g1 * dst.dx - g * dst.dxx) / hd;
        Ok((g, g1, g2))
    }

    /// Transfer matrix from the domain of `src` to the domain of `dst`,
    /// evaluated at point `p` of the destination domain.
    pub fn transfer_matrix_k(&self, src: &impl PlateProfile, dst: &impl PlateProfile, p: Point) -> Result<Mat2> {
        let (g, g1, _) = self.gamma(&src.at(p[0]), &dst.at(p[0]), p)?;
        Ok([[g, 0.0], [-(self.r + p[1]) * g1, 1.0]])
    }

    /// Point of the `omega` domain corresponding to `p` in the `omega_d` domain.
    pub fn psi(&self, omega: &impl PlateProfile, omega_d: &impl PlateProfile, p: Point) -> Result<Point> {
        let (g, _, _) = self.gamma(&omega.at(p[0]), &omega_d.at(p[0]), p)?;
        Ok([p[0], g * (self.r + p[1]) - self.r])
    }

    pub fn psi_inverse(&self, omega: &impl PlateProfile, omega_d: &impl PlateProfile, p: Point) -> Result<Point> {
        let (g, _, _) = self.gamma(&omega.at(p[0]), &omega_d.at(p[0]), p)?;
        Ok([p[0], (self.r + p[1]) / g - self.r])
    }

    /// Divergence-free transfer of `u` (on the `omega` domain) to the point
    /// `p` of the `omega_d` domain.
    pub fn push_forward_velocity(
        &self,
        u: impl Fn(Point) -> [f64; 2],
        omega: &impl PlateProfile,
        omega_d: &impl PlateProfile,
        p: Point,
    ) -> Result<[f64; 2]> {
        let k = self.transfer_matrix_k(omega, omega_d, p)?;
        let q = self.psi(omega, omega_d, p)?;
        Ok(matvec(&k, u(q)))
    }

    /// Same as [`Self::push_forward_velocity`] but also returns the physical
    /// gradient, given `u` together with its gradient (row i = component i).
    pub fn push_forward_with_gradient(
        &self,
        u: impl Fn(Point) -> ([f64; 2], Mat2),
        omega: &impl PlateProfile,
        omega_d: &impl PlateProfile,
        p: Point,
    ) -> Result<([f64; 2], Mat2)> {
        let (g, g1, g2) = self.gamma(&omega.at(p[0]), &omega_d.at(p[0]), p)?;
        let s = self.r + p[1];
        let q = [p[0], g * s - self.r];
        let (v, dv) = u(q);
        // d q_y / dx = g1 s, d q_y / dy = g
        let dqx = g1 * s;
        let dux_dx = dv[0][0] + dv[0][1] * dqx;
        let dux_dy = dv[0][1] * g;
        let duy_dx = dv[1][0] + dv[1][1] * dqx;
        let duy_dy = dv[1][1] * g;
        let val = [g * v[0], -s * g1 * v[0] + v[1]];
        let grad = [
            [g1 * v[0] + g * dux_dx, g * dux_dy],
            [-s * g2 * v[0] - s * g1 * dux_dx + duy_dx, -g1 * v[0] - s * g1 * dux_dy + duy_dy],
        ];
        Ok((val, grad))
    }

    /// Inverse transfer: `u_d` on the `omega_d` domain to the point `p` of
    /// the `omega` domain.
    pub fn pull_back_velocity(
        &self,
        u_d: impl Fn(Point) -> [f64; 2],
        omega: &impl PlateProfile,
        omega_d: &impl PlateProfile,
        p: Point,
    ) -> Result<[f64; 2]> {
        let (g, g1, _) = self.gamma(&omega.at(p[0]), &omega_d.at(p[0]), p)?;
        let q = [p[0], (self.r + p[1]) / g - self.r];
        let v = u_d(q);
        Ok([v[0] / g, (self.r + p[1]) * g1 / (g * g) * v[0] + v[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(a: f64) -> impl Fn(f64) -> PlateEval {
        move |x: f64| {
            let k = 2.0 * std::f64::consts::PI;
            PlateEval {
                v: a * (k * x).sin(),
                dx: a * k * (k * x).cos(),
                dxx: -a * k * k * (k * x).sin(),
                dxxx: -a * k * k * k * (k * x).cos(),
            }
        }
    }

    fn constant(c: f64) -> impl Fn(f64) -> PlateEval {
        move |_| PlateEval {
            v: c,
            ..Default::default()
        }
    }

    #[test]
    fn ale_identity_and_bottom() {
        let t = TransferMaps::new(1.0, 1.0);
        assert_eq!(t.ale_map(&constant(0.0), [0.3, -0.2]).unwrap(), [0.3, -0.2]);
        let w = wave(0.2);
        assert_eq!(t.ale_map(&w, [0.4, -1.0]).unwrap(), [0.4, -1.0]);
        let top = t.ale_map(&w, [0.4, 0.0]).unwrap();
        assert_eq!(top[1], w(0.4).v);
        assert!(t.ale_map(&w, [0.4, 0.5]).is_err());
    }

    #[test]
    fn ale_inverse_examples() {
        let t = TransferMaps::new(1.0, 1.0);
        let p = t.ale_inverse(&constant(0.5), [0.2, 0.5]).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-16 && p[1].abs() < 1e-15);
        assert!(matches!(
            t.ale_inverse(&constant(-1.5), [0.2, -0.5]),
            Err(FpsiError::Degeneracy { .. })
        ));
    }

    #[test]
    fn jacobians() {
        let t = TransferMaps::new(1.0, 1.0);
        assert_eq!(t.fluid_jacobian(&constant(0.0), 0.3), 1.0);
        assert_eq!(t.interface_jacobian(&constant(0.0), 0.3), 1.0);
        assert_eq!(TransferMaps::biot_jacobian(&[[0.0; 2]; 2]), 1.0);
        let slope = |_x: f64| PlateEval {
            v: 0.0,
            dx: 0.75,
            ..Default::default()
        };
        assert!((t.interface_jacobian(&slope, 0.5) - 1.25).abs() < 1e-15);
        let w = wave(0.1);
        let p = [0.37, -0.61];
        assert!((det2(&t.ale_differential(&w, p)) - t.fluid_jacobian(&w, p[0])).abs() < 1e-12);
    }

    #[test]
    fn transformed_gradient_examples() {
        let t = TransferMaps::new(1.0, 1.0);
        let g = t.transformed_gradient_fluid(&constant(0.0), [0.3, -0.7], [0.5, -0.5]).unwrap();
        assert_eq!(g, [0.3, -0.7]);
        let g = t.transformed_gradient_fluid(&constant(0.25), [0.0, 1.0], [0.5, -0.5]).unwrap();
        assert!((g[1] - 1.0 / 1.25).abs() < 1e-15);
        let g = TransferMaps::transformed_gradient_biot(&[[1.0, 0.0], [0.0, 0.0]], [2.0, 3.0], [0.0; 2]).unwrap();
        assert_eq!(g, [1.0, 3.0]);
        assert!(TransferMaps::transformed_gradient_biot(&[[-1.0, 0.0], [0.0, 0.0]], [1.0, 1.0], [0.0; 2]).is_err());
    }

    #[test]
    fn domain_velocity_and_normals() {
        let t = TransferMaps::new(2.0, 0.5);
        assert_eq!(t.domain_velocity(0.0, -0.2), [0.0, 0.0]);
        assert_eq!(t.domain_velocity(3.0, -0.5), [0.0, 0.0]);
        assert_eq!(t.domain_velocity(3.0, 0.0), [0.0, 3.0]);
        let (n, tau) = TransferMaps::normal_tangent(1.0);
        assert_eq!(n, [-1.0, 1.0]);
        assert_eq!(n[0] * tau[0] + n[1] * tau[1], 0.0);
        assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn transfer_matrix_properties() {
        let t = TransferMaps::new(1.0, 1.0);
        let w = wave(0.1);
        let k = t.transfer_matrix_k(&w, &w, [0.3, -0.4]).unwrap();
        assert!((k[0][0] - 1.0).abs() < 1e-15 && k[1][0].abs() < 1e-15 && k[0][1] == 0.0 && k[1][1] == 1.0);
        let v = wave(-0.05);
        let p = [0.71, -0.2];
        let k = t.transfer_matrix_k(&w, &v, p).unwrap();
        let want = (1.0 + w(p[0]).v) / (1.0 + v(p[0]).v);
        assert!((det2(&k) - want).abs() < 1e-15);
    }

    #[test]
    fn transfer_round_trip_and_identity() {
        let t = TransferMaps::new(1.0, 1.0);
        let w = wave(0.1);
        let v = wave(-0.07);
        let u = |p: Point| [p[1].sin() * p[0], p[0].cos() + p[1]];
        let p = [0.33, -0.45];
        let same = t.push_forward_velocity(u, &w, &w, p).unwrap();
        assert!((same[0] - u(p)[0]).abs() < 1e-15 && (same[1] - u(p)[1]).abs() < 1e-15);
        let back = t
            .push_forward_velocity(|q| t.pull_back_velocity(u, &w, &v, q).unwrap(), &w, &v, p)
            .unwrap();
        assert!((back[0] - u(p)[0]).abs() < 1e-14 && (back[1] - u(p)[1]).abs() < 1e-14);
    }

    #[test]
    fn push_forward_gradient_matches_fd() {
        let t = TransferMaps::new(1.0, 1.0);
        let w = wave(0.1);
        let v = wave(-0.07);
        let u = |p: Point| ([p[1].sin() * p[0], p[0].cos() + p[1] * p[1]], [[p[1].sin(), p[0] * p[1].cos()], [-p[0].sin(), 2.0 * p[1]]]);
        let p = [0.41, -0.37];
        let (_, g) = t.push_forward_with_gradient(u, &w, &v, p).unwrap();
        let h = 1e-6;
        for c in 0..2 {
            for d in 0..2 {
                let mut a = p;
                let mut b = p;
                a[d] += h;
                b[d] -= h;
                let fa = t.push_forward_velocity(|q| u(q).0, &w, &v, a).unwrap()[c];
                let fb = t.push_forward_velocity(|q| u(q).0, &w, &v, b).unwrap()[c];
                assert!((g[c][d] - (fa - fb) / (2.0 * h)).abs() < 1e-7, "{c}{d}");
            }
        }
    }
    proptest::proptest! {
        #[test]
        fn ale_round_trip_anywhere(a in -0.5..0.5f64, x in 0.0..1.0f64, y in -1.0..0.0f64) {
            let t = TransferMaps::new(1.0, 1.0);
            let w = wave(a);
            let back = t.ale_inverse(&w, t.ale_map(&w, [x, y]).unwrap()).unwrap();
            proptest::prop_assert!((back[0] - x).abs() <= 1e-15 && (back[1] - y).abs() <= 1e-14);
        }

        #[test]
        fn transfer_round_trip_and_determinant(a in -0.4..0.4f64, b in -0.4..0.4f64, x in 0.0..1.0f64, s in 0.0..1.0f64) {
            let t = TransferMaps::new(1.0, 1.0);
            let (w, v) = (wave(a), wave(b));
            let p = [x, -1.0 + s * (1.0 + v(x).v)];
            let u = |q: Point| [q[1].sin() + q[0], q[0] * q[1]];
            let back = t.push_forward_velocity(|q| t.pull_back_velocity(u, &w, &v, q).unwrap(), &w, &v, p).unwrap();
            proptest::prop_assert!((back[0] - u(p)[0]).abs() < 1e-13 && (back[1] - u(p)[1]).abs() < 1e-13);
            let k = t.transfer_matrix_k(&w, &v, p).unwrap();
            let want = (1.0 + w(x).v) / (1.0 + v(x).v);
            proptest::prop_assert!((det2(&k) - want).abs() < 1e-13);
        }
    }
}
