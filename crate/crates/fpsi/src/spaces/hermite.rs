//! Cubic Hermite elements on the plate segment. Dofs alternate value and
//! slope per node: `2 * node` is the value, `2 * node + 1` the slope.

use crate::error::{FpsiError, Result};

#[derive(Debug, Clone)]
pub struct HermiteSpace {
    pub nx: usize,
    pub length: f64,
    pub nodes: Vec<f64>,
}

/// Values and first three x-derivatives of the four local shape functions.
#[derive(Debug, Clone, Copy, Default)]
pub struct HermiteShape {
    pub v: [f64; 4],
    pub d1: [f64; 4],
    pub d2: [f64; 4],
    pub d3: [f64; 4],
}

/// Local shapes on an element of width `h` at reference position `t` in [0, 1].
pub fn hermite_shape(t: f64, h: f64) -> HermiteShape {
    let (t2, t3) = (t * t, t * t * t);
    let v = [
        1.0 - 3.0 * t2 + 2.0 * t3,
        h * (t - 2.0 * t2 + t3),
        3.0 * t2 - 2.0 * t3,
        h * (-t2 + t3),
    ];
    let d1 = [
        (-6.0 * t + 6.0 * t2) / h,
        1.0 - 4.0 * t + 3.0 * t2,
        (6.0 * t - 6.0 * t2) / h,
        -2.0 * t + 3.0 * t2,
    ];
    let d2 = [
        (-6.0 + 12.0 * t) / (h * h),
        (-4.0 + 6.0 * t) / h,
        (6.0 - 12.0 * t) / (h * h),
        (-2.0 + 6.0 * t) / h,
    ];
    let d3 = [12.0 / (h * h * h), 6.0 / (h * h), -12.0 / (h * h * h), 6.0 / (h * h)];
    HermiteShape { v, d1, d2, d3 }
}

/// Value and derivatives of a plate field at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlateEval {
    pub v: f64,
    pub dx: f64,
    pub dxx: f64,
    pub dxxx: f64,
}

impl HermiteSpace {
    pub fn new(length: f64, nx: usize) -> Self {
        let nodes = (0..=nx).map(|i| crate::mesh::lattice_coord(0.0, length, nx, i)).collect();
        HermiteSpace { nx, length, nodes }
    }

    pub fn n_dofs(&self) -> usize {
        2 * (self.nx + 1)
    }

    pub fn h(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn element_dofs(&self, e: usize) -> [usize; 4] {
        [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3]
    }

    /// Element index and local coordinate of `x`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let tol = 1e-12 * self.length;
        if !(x >= -tol && x <= self.length + tol) {
            return Err(FpsiError::Domain {
                domain: "plate segment",
                x,
                y: 0.0,
            });
        }
        let e = ((x / self.length * self.nx as f64).floor() as usize).min(self.nx - 1);
        let t = ((x - self.nodes[e]) / self.h(e)).clamp(0.0, 1.0);
        Ok((e, t))
    }

    pub fn eval_local(&self, coef: &[f64], e: usize, t: f64) -> PlateEval {
        let s = hermite_shape(t, self.h(e));
        let d = self.element_dofs(e);
        let mut out = PlateEval::default();
        for k in 0..4 {
            let c = coef[d[k]];
            out.v += c * s.v[k];
            out.dx += c * s.d1[k];
            out.dxx += c * s.d2[k];
            out.dxxx += c * s.d3[k];
        }
        out
    }

    pub fn eval(&self, coef: &[f64], x: f64) -> Result<PlateEval> {
        let (e, t) = self.locate(x)?;
        Ok(self.eval_local(coef, e, t))
    }

    /// Hermite interpolant from a function and its derivative.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut c = vec![0.0; self.n_dofs()];
        for (i, &x) in self.nodes.iter().enumerate() {
            c[2 * i] = f(x);
            c[2 * i + 1] = df(x);
        }
        c
    }

    /// Dofs fixed by clamping (value and slope at both ends).
    pub fn clamped_dofs(&self) -> Vec<usize> {
        vec![0, 1, 2 * self.nx, 2 * self.nx + 1]
    }
}
