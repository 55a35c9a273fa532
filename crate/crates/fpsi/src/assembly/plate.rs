//! Plate subproblem: `(rho_p M + dt^2 K) w_new = rho_p M w_old + rho_p dt (zeta, .) + dt^2 (f, .)`.

use super::{AssembledSystem, Discretization, Forcing};
use crate::linalg::CsrMatrix;
use crate::spaces::hermite_shape;

/// Mass and bending matrices on the free plate dofs.
#[derive(Debug, Clone)]
pub struct PlateMatrices {
    pub mass: CsrMatrix,
    pub bend: CsrMatrix,
}

/// Quadrature points on the interface: (segment, local coordinate, x, weight).
pub fn interface_points(disc: &Discretization) -> Vec<(usize, f64, f64, f64)> {
    let pl = &disc.sp.plate;
    let mut out = Vec::with_capacity(pl.nx * disc.line.points.len());
    for e in 0..pl.nx {
        let h = pl.h(e);
        for (s, w) in disc.line.points.iter().zip(&disc.line.weights) {
            out.push((e, *s, pl.nodes[e] + s * h, w * h));
        }
    }
    out
}

pub fn plate_matrices(disc: &Discretization) -> PlateMatrices {
    let pl = &disc.sp.plate;
    let map = &disc.layout.plate;
    let mut m = Vec::new();
    let mut k = Vec::new();
    for (e, s, _, w) in interface_points(disc) {
        let sh = hermite_shape(s, pl.h(e));
        let dofs = pl.element_dofs(e);
        for a in 0..4 {
            let Some(ia) = map.free_of(dofs[a]) else { continue };
            for b in 0..4 {
                let Some(ib) = map.free_of(dofs[b]) else { continue };
                m.push((ia, ib, w * sh.v[a] * sh.v[b]));
                k.push((ia, ib, w * sh.d2[a] * sh.d2[b]));
            }
        }
    }
    let n = map.n_free;
    PlateMatrices {
        mass: CsrMatrix::from_triplets(n, n, m),
        bend: CsrMatrix::from_triplets(n, n, k),
    }
}

/// `int g(x) phi_i(x) dx` for every free plate dof.
pub fn plate_load(disc: &Discretization, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let pl = &disc.sp.plate;
    let map = &disc.layout.plate;
    let mut out = vec![0.0; map.n_free];
    for (e, s, x, w) in interface_points(disc) {
        let sh = hermite_shape(s, pl.h(e));
        let gx = g(x);
        for (a, d) in pl.element_dofs(e).into_iter().enumerate() {
            if let Some(i) = map.free_of(d) {
                out[i] += w * gx * sh.v[a];
            }
        }
    }
    out
}

/// System for the free dofs of the plate displacement at the half step.
/// `zeta_n` is the plate velocity carried over from the previous full step.
pub fn assemble_plate_system(
    disc: &Discretization,
    mats: &PlateMatrices,
    omega_prev: &[f64],
    zeta_n: impl Fn(f64) -> f64,
    dt: f64,
    t_new: f64,
    forcing: &Forcing,
) -> AssembledSystem {
    let rho = disc.params.rho_p;
    let n = disc.layout.plate.n_free;
    let mut trip = Vec::new();
    for i in 0..n {
        for k in mats.mass.row_ptr[i]..mats.mass.row_ptr[i + 1] {
            trip.push((i, mats.mass.cols[k], rho * mats.mass.vals[k]));
        }
        for k in mats.bend.row_ptr[i]..mats.bend.row_ptr[i + 1] {
            trip.push((i, mats.bend.cols[k], dt * dt * mats.bend.vals[k]));
        }
    }
    let matrix = CsrMatrix::from_triplets(n, n, trip);
    let w_old = disc.layout.plate.restrict(omega_prev);
    let mw = mats.mass.matvec(&w_old);
    let zl = plate_load(disc, zeta_n);
    let mut rhs: Vec<f64> = (0..n).map(|i| rho * mw[i] + rho * dt * zl[i]).collect();
    if let Some(f) = &forcing.plate {
        let fl = plate_load(disc, |x| f(t_new, x));
        for i in 0..n {
            rhs[i] += dt * dt * fl[i];
        }
    }
    let min_diag = (0..n).map(|i| matrix.get(i, i)).fold(f64::INFINITY, f64::min);
    AssembledSystem {
        matrix,
        rhs,
        min_dissipative_diag: min_diag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhysicalParams;
    use crate::spaces::Degrees;

    fn disc(nx: usize) -> Discretization {
        Discretization::new(PhysicalParams::default(), nx, 2, Degrees::default(), None).unwrap()
    }

    #[test]
    fn zero_data_zero_solution() {
        let d = disc(4);
        let m = plate_matrices(&d);
        let s = assemble_plate_system(&d, &m, &vec![0.0; d.sp.plate.n_dofs()], |_| 0.0, 0.1, 0.1, &Forcing::default());
        assert!(s.solve().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn small_step_limit() {
        let d = disc(6);
        let m = plate_matrices(&d);
        let pl = &d.sp.plate;
        let pi = std::f64::consts::PI;
        let mut w = pl.interpolate(|x| (pi * x).sin().powi(2), |x| pi * (2.0 * pi * x).sin());
        d.layout.plate.clamp(&mut w);
        let z = |x: f64| (pi * x).sin().powi(2) * 0.5;
        let dt = 1e-8;
        let s = assemble_plate_system(&d, &m, &w, z, dt, dt, &Forcing::default());
        let x = d.layout.plate.expand(&s.solve().unwrap());
        // w + dt * (L2 projection of z)
        let zl = plate_load(&d, z);
        let zp = m.mass.solve(&zl).unwrap();
        let want: Vec<f64> = d.layout.plate.restrict(&w).iter().zip(&zp).map(|(a, b)| a + dt * b).collect();
        let got = d.layout.plate.restrict(&x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn matrices_are_symmetric_positive() {
        let d = disc(5);
        let m = plate_matrices(&d);
        let dm = m.mass.to_dense();
        let dk = m.bend.to_dense();
        for i in 0..dm.len() {
            for j in 0..dm.len() {
                assert!((dm[i][j] - dm[j][i]).abs() < 1e-15);
                assert!((dk[i][j] - dk[j][i]).abs() < 1e-9);
            }
        }
        let ev = crate::linalg::symmetric_part_eigenvalues(&dk);
        assert!(ev.iter().all(|v| *v > 0.0));
    }
}
