//! Equispaced Lagrange elements of arbitrary degree on the split-quad grid.

use crate::error::{FpsiError, Result};
use crate::mesh::{Grid, TriKind};
use crate::quadrature::QuadratureRule;

/// Reference Lagrange element of degree `k` in barycentric form.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    pub degree: usize,
    pub alphas: Vec<[usize; 3]>,
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        let mut alphas = Vec::new();
        for a2 in 0..=degree {
            for a1 in 0..=(degree - a2) {
                alphas.push([degree - a1 - a2, a1, a2]);
            }
        }
        LagrangeElement { degree, alphas }
    }

    pub fn n_local(&self) -> usize {
        self.alphas.len()
    }

    /// Basis values and derivatives with respect to the three barycentrics.
    pub fn eval(&self, lam: [f64; 3], vals: &mut [f64], dlam: &mut [[f64; 3]]) {
        let k = self.degree as f64;
        for (n, a) in self.alphas.iter().enumerate() {
            // factor_m(lam_m) = prod_{s<a_m} (k lam_m - s)/(s+1)
            let mut f = [1.0; 3];
            let mut df = [0.0; 3];
            for m in 0..3 {
                let (mut v, mut d) = (1.0, 0.0);
                for s in 0..a[m] {
                    let c = 1.0 / (s as f64 + 1.0);
                    let g = (k * lam[m] - s as f64) * c;
                    d = d * g + v * k * c;
                    v *= g;
                }
                f[m] = v;
                df[m] = d;
            }
            vals[n] = f[0] * f[1] * f[2];
            dlam[n] = [df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]];
        }
    }

    /// Lattice offset (in units of h/k, relative to the quad's lower-left
    /// corner) of local node `n` in a triangle of the given kind.
    pub fn offset(&self, kind: TriKind, n: usize) -> [usize; 2] {
        let a = self.alphas[n];
        match kind {
            TriKind::Lower => [a[1] + a[2], a[2]],
            TriKind::Upper => [a[1], a[1] + a[2]],
        }
    }
}

/// Gradients of the barycentric coordinates for each triangle kind.
pub fn barycentric_gradients(grid: &Grid, kind: TriKind) -> [[f64; 2]; 3] {
    let (ix, iy) = (1.0 / grid.hx(), 1.0 / grid.hy());
    match kind {
        TriKind::Lower => [[-ix, 0.0], [ix, -iy], [0.0, iy]],
        TriKind::Upper => [[0.0, -iy], [ix, 0.0], [-ix, iy]],
    }
}

/// Physical point of barycentric `lam` in triangle `t`.
pub fn map_point(grid: &Grid, t: usize, lam: [f64; 3]) -> [f64; 2] {
    let (i, j, kind) = grid.triangle(t);
    let (a, b) = match kind {
        TriKind::Lower => (lam[1] + lam[2], lam[2]),
        TriKind::Upper => (lam[1], lam[1] + lam[2]),
    };
    [grid.x(1, i) + a * grid.hx(), grid.y(1, j) + b * grid.hy()]
}

/// Scalar Lagrange space of degree `k` on a grid; vector fields use
/// interleaved components (dof = 2 * node + component).
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    pub grid: Grid,
    pub element: LagrangeElement,
    /// cell -> global node indices in element-local order
    pub cell_nodes: Vec<Vec<usize>>,
}

impl LagrangeSpace {
    pub fn new(grid: Grid, degree: usize) -> Self {
        let element = LagrangeElement::new(degree);
        let row = degree * grid.nx + 1;
        let cell_nodes = (0..grid.n_triangles())
            .map(|t| {
                let (i, j, kind) = grid.triangle(t);
                (0..element.n_local())
                    .map(|n| {
                        let o = element.offset(kind, n);
                        (degree * j + o[1]) * row + degree * i + o[0]
                    })
                    .collect()
            })
            .collect();
        LagrangeSpace {
            grid,
            element,
            cell_nodes,
        }
    }

    pub fn degree(&self) -> usize {
        self.element.degree
    }

    pub fn nodes_per_row(&self) -> usize {
        self.degree() * self.grid.nx + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes_per_row() * (self.degree() * self.grid.ny + 1)
    }

    pub fn node_lattice(&self, node: usize) -> (usize, usize) {
        (node % self.nodes_per_row(), node / self.nodes_per_row())
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        let (a, b) = self.node_lattice(node);
        [self.grid.x(self.degree(), a), self.grid.y(self.degree(), b)]
    }

    /// Nodes on the bottom (`top = false`) or top row, ordered by x.
    pub fn row_nodes(&self, top: bool) -> Vec<usize> {
        let row = self.nodes_per_row();
        let b = if top { self.degree() * self.grid.ny } else { 0 };
        (0..row).map(|a| b * row + a).collect()
    }

    pub fn interpolate_scalar(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|n| f(self.node_coord(n))).collect()
    }

    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n_nodes()];
        for n in 0..self.n_nodes() {
            let v = f(self.node_coord(n));
            out[2 * n] = v[0];
            out[2 * n + 1] = v[1];
        }
        out
    }

    /// Basis values and physical gradients at a point.
    pub fn basis_at(&self, p: [f64; 2]) -> Result<(usize, Vec<f64>, Vec<[f64; 2]>)> {
        let (t, lam) = self.grid.locate(p).ok_or(FpsiError::Domain {
            domain: "finite-element grid",
            x: p[0],
            y: p[1],
        })?;
        let (vals, grads) = self.basis_in_cell(t, lam);
        Ok((t, vals, grads))
    }

    pub fn basis_in_cell(&self, t: usize, lam: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let nl = self.element.n_local();
        let mut vals = vec![0.0; nl];
        let mut dl = vec![[0.0; 3]; nl];
        self.element.eval(lam, &mut vals, &mut dl);
        let gl = barycentric_gradients(&self.grid, self.grid.triangle(t).2);
        let grads = dl
            .iter()
            .map(|d| {
                [
                    d[0] * gl[0][0] + d[1] * gl[1][0] + d[2] * gl[2][0],
                    d[0] * gl[0][1] + d[1] * gl[1][1] + d[2] * gl[2][1],
                ]
            })
            .collect();
        (vals, grads)
    }

    /// Value and gradient of a scalar field.
    pub fn eval_scalar(&self, coef: &[f64], p: [f64; 2]) -> Result<(f64, [f64; 2])> {
        let (t, v, g) = self.basis_at(p)?;
        let mut out = (0.0, [0.0; 2]);
        for (n, &node) in self.cell_nodes[t].iter().enumerate() {
            out.0 += coef[node] * v[n];
            out.1[0] += coef[node] * g[n][0];
            out.1[1] += coef[node] * g[n][1];
        }
        Ok(out)
    }

    /// Value and gradient (row i = component i) of a vector field.
    pub fn eval_vector(&self, coef: &[f64], p: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let (t, v, g) = self.basis_at(p)?;
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for (n, &node) in self.cell_nodes[t].iter().enumerate() {
            for c in 0..2 {
                let a = coef[2 * node + c];
                val[c] += a * v[n];
                grad[c][0] += a * g[n][0];
                grad[c][1] += a * g[n][1];
            }
        }
        Ok((val, grad))
    }
}

/// Basis values and physical gradients of one element at the points of a
/// quadrature rule, per triangle kind.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_local: usize,
    pub weights: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub vals: Vec<Vec<f64>>,
    /// [kind][q][local] physical gradient
    pub grads: [Vec<Vec<[f64; 2]>>; 2],
}

impl Tabulation {
    pub fn new(space: &LagrangeSpace, rule: &QuadratureRule) -> Self {
        let nl = space.element.n_local();
        let mut vals = Vec::with_capacity(rule.points.len());
        let mut dls = Vec::with_capacity(rule.points.len());
        for lam in &rule.points {
            let mut v = vec![0.0; nl];
            let mut d = vec![[0.0; 3]; nl];
            space.element.eval(*lam, &mut v, &mut d);
            vals.push(v);
            dls.push(d);
        }
        let kinds = [TriKind::Lower, TriKind::Upper];
        let grads = kinds.map(|kind| {
            let gl = barycentric_gradients(&space.grid, kind);
            dls.iter()
                .map(|dq| {
                    dq.iter()
                        .map(|d| {
                            [
                                d[0] * gl[0][0] + d[1] * gl[1][0] + d[2] * gl[2][0],
                                d[0] * gl[0][1] + d[1] * gl[1][1] + d[2] * gl[2][1],
                            ]
                        })
                        .collect()
                })
                .collect()
        });
        Tabulation {
            n_local: nl,
            weights: rule.weights.clone(),
            points: rule.points.clone(),
            vals,
            grads,
        }
    }

    pub fn kind_index(kind: TriKind) -> usize {
        match kind {
            TriKind::Lower => 0,
            TriKind::Upper => 1,
        }
    }
}

/// One-dimensional equispaced Lagrange basis of degree `k` on [0, 1]
/// (the trace of the 2D element on a horizontal edge).
pub fn line_basis(k: usize, s: f64, vals: &mut [f64], ders: &mut [f64]) {
    let kf = k as f64;
    for i in 0..=k {
        let (mut v, mut d) = (1.0, 0.0);
        for j in 0..=k {
            if j == i {
                continue;
            }
            let c = kf / (i as f64 - j as f64);
            let g = (s - j as f64 / kf) * c;
            d = d * g + v * c;
            v *= g;
        }
        vals[i] = v;
        ders[i] = d;
    }
}
