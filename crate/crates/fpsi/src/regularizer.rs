//! Odd extension of the poroelastic displacement past the edges of the
//! reference body and its convolution with a compactly supported kernel.
//!
//! The extension is sampled at the cell centres of an auxiliary grid whose
//! lines include x = 0, L and y = 0, R, so every reflection maps cell
//! centres onto cell centres. Only the window within `delta` of the body is
//! stored. The convolution is a midpoint sum normalized by the discrete
//! kernel mass, which makes the discrete mass exactly one.

use rayon::prelude::*;

use crate::error::{FpsiError, Result};
use crate::quadrature::QuadratureRule;
use crate::spaces::lagrange::map_point;
use crate::transforms::{BiotDisplacementField, Mat2, PlateField, PlateProfile, Point};

/// `sigma(z) = c (1 - |z|^2)^4` on the unit disc, scaled to radius `delta`.
#[derive(Debug, Clone, Copy)]
pub struct MollifierKernel {
    pub delta: f64,
    pub c: f64,
}

impl MollifierKernel {
    pub fn new(delta: f64) -> Self {
        MollifierKernel {
            delta,
            c: 5.0 / std::f64::consts::PI,
        }
    }

    /// Kernel value and gradient at offset `z`.
    #[inline]
    pub fn eval(&self, z: [f64; 2]) -> (f64, [f64; 2]) {
        let d = self.delta;
        let r2 = (z[0] * z[0] + z[1] * z[1]) / (d * d);
        if r2 >= 1.0 {
            return (0.0, [0.0; 2]);
        }
        let s = 1.0 - r2;
        let s3 = s * s * s;
        let v = self.c * s3 * s / (d * d);
        // d/dz (1 - |z|^2/d^2)^4 = -8 s^3 z / d^2
        let g = -8.0 * self.c * s3 / (d * d * d * d);
        (v, [g * z[0], g * z[1]])
    }

    /// Analytic `L^2` norm of the scaled kernel.
    pub fn l2_norm(&self) -> f64 {
        self.c * (std::f64::consts::PI / 9.0).sqrt() / self.delta
    }
}

/// Odd extension sampled at auxiliary cell centres near the body.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    pub l: f64,
    pub r: f64,
    pub hx: f64,
    pub hy: f64,
    /// first stored cell index in x and y (may be negative)
    pub i0: i64,
    pub j0: i64,
    pub ni: usize,
    pub nj: usize,
    pub values: Vec<[f64; 2]>,
}

/// Extension of `eta` at `p`, with the trace taken from `eta` itself.
pub fn extend_point(eta: &impl Fn(Point) -> [f64; 2], l: f64, r: f64, p: Point) -> [f64; 2] {
    let [x, y] = p;
    if x < 0.0 {
        let v = extend_point(eta, l, r, [-x, y]);
        return [-v[0], -v[1]];
    }
    if x > l {
        let v = extend_point(eta, l, r, [2.0 * l - x, y]);
        return [-v[0], -v[1]];
    }
    if y < 0.0 {
        let w = eta([x, 0.0])[1];
        let v = eta([x, -y]);
        return [-v[0], 2.0 * w - v[1]];
    }
    if y > r {
        let v = eta([x, 2.0 * r - y]);
        return [-v[0], -v[1]];
    }
    eta(p)
}

impl ExtendedField {
    /// Sample the extension of a closed-form or FE field on an auxiliary
    /// grid with spacing at most `delta * factor`.
    pub fn sample(
        eta: impl Fn(Point) -> [f64; 2] + Sync,
        l: f64,
        r: f64,
        delta: f64,
        factor: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < l.min(r)) {
            return Err(FpsiError::config("delta", "0 < δ < min(L,R)"));
        }
        if !(factor > 0.0 && factor <= 0.5) {
            return Err(FpsiError::config("h_aux_factor", "0 < h_aux_factor <= 1/2 (δ >= 2 h_aux)"));
        }
        let mx = (l / (delta * factor)).ceil() as i64;
        let my = (r / (delta * factor)).ceil() as i64;
        let hx = l / mx as f64;
        let hy = r / my as f64;
        let px = (delta / hx).ceil() as i64;
        let py = (delta / hy).ceil() as i64;
        let (i0, j0) = (-px, -py);
        let ni = (mx + 2 * px) as usize;
        let nj = (my + 2 * py) as usize;
        let values = (0..ni * nj)
            .into_par_iter()
            .map(|k| {
                let i = (k % ni) as i64 + i0;
                let j = (k / ni) as i64 + j0;
                extend_point(&eta, l, r, Self::centre(hx, hy, i, j))
            })
            .collect();
        Ok(ExtendedField {
            l,
            r,
            hx,
            hy,
            i0,
            j0,
            ni,
            nj,
            values,
        })
    }

    /// Extension of an FE displacement. The plate, when given, is checked
    /// against the displacement trace at the shared nodes.
    pub fn from_fe(field: &BiotDisplacementField, plate: Option<&PlateField>, delta: f64, factor: f64) -> Result<Self> {
        let sp = &field.space;
        if let Some(pl) = plate {
            for (i, &x) in pl.space.nodes.iter().enumerate() {
                let e = sp.eval_vector(&field.eta, [x, 0.0])?.0;
                let w = pl.at(x).v;
                if (e[1] - w).abs() > 1e-10 || e[0].abs() > 1e-10 {
                    return Err(FpsiError::CouplingViolation(format!(
                        "displacement trace ({}, {}) differs from plate value {w} at node {i}",
                        e[0], e[1]
                    )));
                }
            }
        }
        let l = sp.grid.lx;
        let r = sp.grid.ly;
        Self::sample(
            |p| sp.eval_vector(&field.eta, p).expect("reflected point lies in the body").0,
            l,
            r,
            delta,
            factor,
        )
    }

    #[inline]
    fn centre(hx: f64, hy: f64, i: i64, j: i64) -> Point {
        [(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy]
    }

    pub fn value(&self, i: i64, j: i64) -> [f64; 2] {
        self.values[(j - self.j0) as usize * self.ni + (i - self.i0) as usize]
    }

    /// Cell index range whose centres may lie within `delta` of `p`.
    fn range(&self, p: Point, delta: f64) -> (i64, i64, i64, i64) {
        let ia = ((p[0] - delta) / self.hx - 0.5).floor() as i64;
        let ib = ((p[0] + delta) / self.hx - 0.5).ceil() as i64;
        let ja = ((p[1] - delta) / self.hy - 0.5).floor() as i64;
        let jb = ((p[1] + delta) / self.hy - 0.5).ceil() as i64;
        (
            ia.max(self.i0),
            ib.min(self.i0 + self.ni as i64 - 1),
            ja.max(self.j0),
            jb.min(self.j0 + self.nj as i64 - 1),
        )
    }
}

/// Mollified displacement on the reference body.
#[derive(Debug, Clone)]
pub struct RegularizedDisplacement {
    pub ext: ExtendedField,
    pub kernel: MollifierKernel,
}

pub fn mollify(ext: ExtendedField, delta: f64) -> Result<RegularizedDisplacement> {
    if !(delta > 0.0 && delta < ext.l.min(ext.r)) {
        return Err(FpsiError::config("delta", "0 < δ < min(L,R)"));
    }
    if delta < 2.0 * ext.hx.max(ext.hy) * (1.0 - 1e-12) {
        return Err(FpsiError::config("h_aux_factor", "δ >= 2 h_aux (kernel under-resolved)"));
    }
    let reach = ext.hx * (-ext.i0) as f64;
    if reach < delta * (1.0 - 1e-12) || ext.hy * ((-ext.j0) as f64) < delta * (1.0 - 1e-12) {
        return Err(FpsiError::config("delta", "extension window narrower than δ"));
    }
    Ok(RegularizedDisplacement {
        ext,
        kernel: MollifierKernel::new(delta),
    })
}

impl RegularizedDisplacement {
    /// Value and gradient (row i = component i) at `p` in the body.
    pub fn eval(&self, p: Point) -> ([f64; 2], Mat2) {
        let e = &self.ext;
        let (ia, ib, ja, jb) = e.range(p, self.kernel.delta);
        let mut w = 0.0;
        let mut gw = [0.0; 2];
        let mut s = [0.0; 2];
        let mut gs = [[0.0; 2]; 2];
        for j in ja..=jb {
            let cy = (j as f64 + 0.5) * e.hy;
            for i in ia..=ib {
                let cx = (i as f64 + 0.5) * e.hx;
                let (k, dk) = self.kernel.eval([p[0] - cx, p[1] - cy]);
                if k == 0.0 {
                    continue;
                }
                let v = e.value(i, j);
                w += k;
                gw[0] += dk[0];
                gw[1] += dk[1];
                for c in 0..2 {
                    s[c] += v[c] * k;
                    gs[c][0] += v[c] * dk[0];
                    gs[c][1] += v[c] * dk[1];
                }
            }
        }
        let val = [s[0] / w, s[1] / w];
        let mut grad = [[0.0; 2]; 2];
        for c in 0..2 {
            for d in 0..2 {
                grad[c][d] = (gs[c][d] - val[c] * gw[d]) / w;
            }
        }
        (val, grad)
    }

    /// Discrete kernel mass before normalization at `p`.
    pub fn raw_mass(&self, p: Point) -> f64 {
        let e = &self.ext;
        let (ia, ib, ja, jb) = e.range(p, self.kernel.delta);
        let mut w = 0.0;
        for j in ja..=jb {
            for i in ia..=ib {
                let c = ExtendedField::centre(e.hx, e.hy, i, j);
                w += self.kernel.eval([p[0] - c[0], p[1] - c[1]]).0;
            }
        }
        w * e.hx * e.hy
    }

    pub fn regularized_lagrangian_map(&self, p: Point) -> Point {
        let v = self.eval(p).0;
        [p[0] + v[0], p[1] + v[1]]
    }

    /// Trace value and slope of the transverse component on the interface.
    pub fn trace(&self, x: f64) -> (f64, f64) {
        let (v, g) = self.eval([x, 0.0]);
        (v[1], g[1][0])
    }

    /// `(-d/dx trace, 1)`.
    pub fn regularized_interface_normal(&self, x: f64) -> [f64; 2] {
        [-self.trace(x).1, 1.0]
    }
}

/// One row of the mollifier rate sweep.
#[derive(Debug, Clone, Copy)]
pub struct RateRow {
    pub delta: f64,
    pub h1_error: f64,
    pub grad_max_error: f64,
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// least-squares slopes of log error against log delta (`None` when
    /// an error vanishes)
    pub order_h1: Option<f64>,
    pub order_grad: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// H^1 and max-gradient errors of the mollified closed-form field over the
/// body, measured with a triangle quadrature on an `n x n` split grid.
pub fn convolution_rate_report(
    eta: impl Fn(Point) -> ([f64; 2], Mat2) + Sync,
    l: f64,
    r: f64,
    deltas: &[f64],
    factor: f64,
    n: usize,
) -> Result<RateReport> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FpsiError::config("deltas", "δ list strictly decreasing"));
    }
    let grid = crate::mesh::Grid {
        nx: n,
        ny: n,
        lx: l,
        ly: r,
        y0: 0.0,
    };
    let rule = QuadratureRule::triangle(6);
    let area = grid.hx() * grid.hy() / 2.0;
    let mut rows = Vec::new();
    for &delta in deltas {
        let ext = ExtendedField::sample(|p| eta(p).0, l, r, delta, factor)?;
        let reg = mollify(ext, delta)?;
        let per_cell: Vec<(f64, f64)> = (0..grid.n_triangles())
            .into_par_iter()
            .map(|t| {
                let mut sq = 0.0;
                let mut mx: f64 = 0.0;
                for (lam, w) in rule.points.iter().zip(&rule.weights) {
                    let p = map_point(&grid, t, *lam);
                    let (v, g) = reg.eval(p);
                    let (ve, ge) = eta(p);
                    let mut e = 0.0;
                    for c in 0..2 {
                        e += (v[c] - ve[c]).powi(2);
                        for d in 0..2 {
                            let dg = g[c][d] - ge[c][d];
                            e += dg * dg;
                            mx = mx.max(dg.abs());
                        }
                    }
                    sq += w * area * e;
                }
                (sq, mx)
            })
            .collect();
        let h1 = per_cell.iter().map(|c| c.0).sum::<f64>().sqrt();
        let gm = per_cell.iter().fold(0.0f64, |a, c| a.max(c.1));
        rows.push(RateRow {
            delta,
            h1_error: h1,
            grad_max_error: gm,
        });
    }
    let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.h1_error).collect();
    let gm: Vec<f64> = rows.iter().map(|r| r.grad_max_error).collect();
    Ok(RateReport {
        order_h1: fit_order(&ds, &h1),
        order_grad: fit_order(&ds, &gm),
        rows,
    })
}

/// The smooth test field `(0, sin(pi x / L) sin(pi y / R) y)` with gradient.
pub fn rate_test_field(l: f64, r: f64) -> impl Fn(Point) -> ([f64; 2], Mat2) + Sync {
    use std::f64::consts::PI;
    move |p: Point| {
        let (sx, cx) = (PI * p[0] / l).sin_cos();
        let (sy, cy) = (PI * p[1] / r).sin_cos();
        let v = sx * sy * p[1];
        let dx = PI / l * cx * sy * p[1];
        let dy = sx * (PI / r * cy * p[1] + sy);
        ([0.0, v], [[0.0, 0.0], [dx, dy]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_mass_and_norm() {
        // fine polar quadrature of the unit-radius profile
        let k = MollifierKernel::new(1.0);
        let (rs, rw) = crate::quadrature::gauss_legendre(20);
        let mass: f64 = rs.iter().zip(&rw).map(|(r, w)| w * 2.0 * std::f64::consts::PI * r * k.eval([*r, 0.0]).0).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        let l2: f64 = rs.iter().zip(&rw).map(|(r, w)| w * 2.0 * std::f64::consts::PI * r * k.eval([*r, 0.0]).0.powi(2)).sum();
        assert!((l2.sqrt() - k.l2_norm()).abs() < 1e-12);
        for d in [0.3, 0.05] {
            assert!((MollifierKernel::new(d).l2_norm() * d - k.l2_norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_examples() {
        let (l, r) = (1.0, 1.0);
        let om = |x: f64| (std::f64::consts::PI * x / l).sin();
        let eta = |p: Point| [0.0, om(p[0])];
        let v = extend_point(&eta, l, r, [0.3, -0.4]);
        assert!((v[1] - om(0.3)).abs() < 1e-15 && v[0] == 0.0);
        let eta = |p: Point| [0.0, p[1]];
        let v = extend_point(&eta, l, r, [0.5 * l, 1.5 * r]);
        assert!((v[1] + 0.5 * r).abs() < 1e-15);
        let zero = |_p: Point| [0.0; 2];
        assert_eq!(extend_point(&zero, l, r, [-0.1, 1.05]), [0.0, 0.0]);
    }

    #[test]
    fn reflection_identities() {
        let (l, r) = (1.0, 0.8);
        let eta = |p: Point| [p[0] * (1.0 - p[0]) * p[1].sin(), (p[0] * 3.0).sin() * (r - p[1]) + 0.1];
        let ext = ExtendedField::sample(eta, l, r, 0.2, 0.125).unwrap();
        for (i, j) in [(3, 2), (0, 5), (7, 1)] {
            // item 2 about y = R and item 3 about x = 0
            let my = (r / ext.hy).round() as i64;
            let a = ext.value(i, my - 1 - j);
            let b = ext.value(i, my + j);
            assert!((a[0] + b[0]).abs() < 1e-12 && (a[1] + b[1]).abs() < 1e-12);
            let a = ext.value(i, j + 3);
            let b = ext.value(-1 - i, j + 3);
            assert!((a[0] + b[0]).abs() < 1e-12 && (a[1] + b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_boundary_annihilation() {
        let (l, r) = (1.0, 1.0);
        let reg = mollify(ExtendedField::sample(|_| [0.0; 2], l, r, 0.2, 0.125).unwrap(), 0.2).unwrap();
        assert_eq!(reg.eval([0.4, 0.5]).0, [0.0, 0.0]);
        let eta = |p: Point| [p[0] * p[1] * (1.0 - p[0]) * (1.0 - p[1]), (2.0 * p[0]).sin() * (1.0 - p[1]) * p[0] * (1.0 - p[0])];
        let reg = mollify(ExtendedField::sample(eta, l, r, 0.2, 0.125).unwrap(), 0.2).unwrap();
        for s in [0.0, 0.13, 0.5, 0.77, 1.0] {
            for p in [[0.0, s], [l, s], [s, r]] {
                let v = reg.eval(p).0;
                assert!(v[0].abs() < 1e-10 && v[1].abs() < 1e-10, "{p:?}");
            }
            assert!(reg.eval([s, 0.0]).0[0].abs() < 1e-12);
        }
    }

    #[test]
    fn affine_reproduction() {
        let (l, r) = (2.0, 1.0);
        let a = |p: Point| [0.3 + 0.2 * p[0] - 0.1 * p[1], -0.4 * p[0] + 0.7 * p[1]];
        let ext = ExtendedField::sample(a, l, r, 0.2, 0.125).unwrap();
        let (hx, hy) = (ext.hx, ext.hy);
        let reg = mollify(ext, 0.2).unwrap();
        for p in [[30.0 * hx, 16.0 * hy], [41.5 * hx, 20.5 * hy], [1.0, 0.5]] {
            let (v, g) = reg.eval(p);
            let w = a(p);
            assert!((v[0] - w[0]).abs() < 1e-10 && (v[1] - w[1]).abs() < 1e-10);
            // gradients carry the midpoint-rule error of the first kernel moment
            assert!((g[0][0] - 0.2).abs() < 1e-3 * 0.2 && (g[1][1] - 0.7).abs() < 1e-3 * 0.7);
        }
        let (v, _) = reg.eval([0.7345, 0.4321]);
        let w = a([0.7345, 0.4321]);
        assert!((v[0] - w[0]).abs() < 1e-6 && (v[1] - w[1]).abs() < 1e-6);
    }

    #[test]
    fn raw_mass_close_to_one() {
        let reg = mollify(ExtendedField::sample(|_| [0.0; 2], 1.0, 1.0, 0.25, 0.125).unwrap(), 0.25).unwrap();
        assert!((reg.raw_mass([0.43, 0.61]) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn normal_matches_fd_of_trace() {
        let eta = |p: Point| [0.0, (3.0 * p[0]).sin() * p[0] * (1.0 - p[0]) * (1.0 - p[1])];
        let reg = mollify(ExtendedField::sample(eta, 1.0, 1.0, 0.15, 0.125).unwrap(), 0.15).unwrap();
        let x = 0.37;
        let h = 1e-5;
        let fd = (reg.trace(x + h).0 - reg.trace(x - h).0) / (2.0 * h);
        assert!((reg.regularized_interface_normal(x)[0] + fd).abs() < 1e-6);
        let flat = mollify(ExtendedField::sample(|_| [0.0, 0.0], 1.0, 1.0, 0.15, 0.125).unwrap(), 0.15).unwrap();
        assert_eq!(flat.regularized_interface_normal(0.4), [-0.0, 1.0]);
        assert_eq!(flat.regularized_lagrangian_map([0.2, 0.3]), [0.2, 0.3]);
    }

    #[test]
    fn configuration_errors() {
        assert!(ExtendedField::sample(|_| [0.0; 2], 1.0, 1.0, 1.0, 0.125).is_err());
        assert!(ExtendedField::sample(|_| [0.0; 2], 1.0, 1.0, 0.2, 0.9).is_err());
    }

    #[test]
    fn zero_field_has_no_fit() {
        let rep = convolution_rate_report(|_| ([0.0; 2], [[0.0; 2]; 2]), 1.0, 1.0, &[0.2, 0.1], 0.125, 4).unwrap();
        assert!(rep.order_h1.is_none() && rep.rows.iter().all(|r| r.h1_error == 0.0));
    }
    proptest::proptest! {
        #[test]
        fn extension_is_odd_and_continuous(x in -0.9..1.9f64, y in -0.9..1.9f64, c in -2.0..2.0f64) {
            // admissible: zero on the side walls and the top, no horizontal trace on the interface
            let eta = |p: Point| {
                let w = (std::f64::consts::PI * p[0]).sin() * (1.0 - p[1]);
                [c * w * p[1], w * (1.0 + p[0]) * (p[1] - 0.7).cos()]
            };
            let ext = |p: Point| extend_point(&eta, 1.0, 1.0, p);
            let a = ext([x, y]);
            // odd in x about both vertical walls
            let b = ext([-x, y]);
            proptest::prop_assert!((a[0] + b[0]).abs() < 1e-14 && (a[1] + b[1]).abs() < 1e-14);
            let b = ext([2.0 - x, y]);
            proptest::prop_assert!((a[0] + b[0]).abs() < 1e-14 && (a[1] + b[1]).abs() < 1e-14);
            // continuous across the interface and the top wall inside the strip
            let xi = x.rem_euclid(1.0);
            let (lo, hi) = (ext([xi, -1e-9]), ext([xi, 1e-9]));
            proptest::prop_assert!((lo[0] - hi[0]).abs() < 1e-8 && (lo[1] - hi[1]).abs() < 1e-8);
            let top = ext([xi, 1.0 + 1e-9]);
            proptest::prop_assert!((top[0] + eta([xi, 1.0])[0]).abs() < 1e-8);
        }
    }
}
