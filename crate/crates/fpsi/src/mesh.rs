//! Structured reference meshes for the fluid rectangle, the poroelastic
//! rectangle and the plate segment that separates them.

use crate::error::{FpsiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Fluid,
    Biot,
    Plate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interface,
    FluidLeft,
    FluidRight,
    FluidBottom,
    BiotLeft,
    BiotRight,
    BiotTop,
}

/// Coordinate of lattice line `i` out of `n` on `[origin, origin + length]`.
///
/// Every mesh and every finite-element lattice goes through this one
/// function so shared nodes come out bit-identical.
#[inline]
pub fn lattice_coord(origin: f64, length: f64, n: usize, i: usize) -> f64 {
    if i == n {
        return origin + length;
    }
    origin + length * (i as f64) / (n as f64)
}

/// Uniform rectangle `[0, lx] x [y0, y0 + ly]` cut into `nx * ny` quads,
/// each split along the diagonal from lower-left to upper-right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub y0: f64,
}

/// Which half of a quad a triangle is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriKind {
    /// vertices (i,j), (i+1,j), (i+1,j+1)
    Lower,
    /// vertices (i,j), (i+1,j+1), (i,j+1)
    Upper,
}

impl Grid {
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn x(&self, refine: usize, i: usize) -> f64 {
        lattice_coord(0.0, self.lx, refine * self.nx, i)
    }

    pub fn y(&self, refine: usize, j: usize) -> f64 {
        if self.y0 < 0.0 && j == refine * self.ny {
            // top edge of the fluid rectangle is exactly the interface
            return 0.0;
        }
        lattice_coord(self.y0, self.ly, refine * self.ny, j)
    }

    pub fn n_triangles(&self) -> usize {
        2 * self.nx * self.ny
    }

    /// (quad i, quad j, kind) of triangle `t`.
    pub fn triangle(&self, t: usize) -> (usize, usize, TriKind) {
        let q = t / 2;
        let kind = if t % 2 == 0 { TriKind::Lower } else { TriKind::Upper };
        (q % self.nx, q / self.nx, kind)
    }

    /// Lattice offsets (in quad units) of the three vertices of a triangle kind.
    pub fn corners(kind: TriKind) -> [[usize; 2]; 3] {
        match kind {
            TriKind::Lower => [[0, 0], [1, 0], [1, 1]],
            TriKind::Upper => [[0, 0], [1, 1], [0, 1]],
        }
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= -tol && p[0] <= self.lx + tol && p[1] >= self.y0 - tol && p[1] <= self.y0 + self.ly + tol
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let tol = 1e-12 * (self.lx + self.ly);
        if !self.contains(p, tol) {
            return None;
        }
        let sx = (p[0] / self.hx()).max(0.0);
        let sy = ((p[1] - self.y0) / self.hy()).max(0.0);
        let i = (sx.floor() as usize).min(self.nx - 1);
        let j = (sy.floor() as usize).min(self.ny - 1);
        let a = (sx - i as f64).clamp(0.0, 1.0);
        let b = (sy - j as f64).clamp(0.0, 1.0);
        let q = j * self.nx + i;
        if a >= b {
            // lower: p = v0 + a e1 + b e2 with v1 = (1,0), v2 = (1,1)
            Some((2 * q, [1.0 - a, a - b, b]))
        } else {
            Some((2 * q + 1, [1.0 - b, a, b - a]))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefMesh {
    pub region: Region,
    pub grid: Grid,
    pub vertices: Vec<[f64; 2]>,
    /// Triangles for the 2D regions, segments for the plate.
    pub cells: Vec<Vec<usize>>,
    pub boundary_edges: Vec<([usize; 2], BoundaryTag)>,
}

impl RefMesh {
    /// Vertex indices lying on the interface line, ordered by x.
    pub fn interface_nodes(&self) -> Vec<usize> {
        match self.region {
            Region::Plate => (0..self.vertices.len()).collect(),
            Region::Fluid => {
                let row = self.grid.ny;
                (0..=self.grid.nx).map(|i| row * (self.grid.nx + 1) + i).collect()
            }
            Region::Biot => (0..=self.grid.nx).collect(),
        }
    }
}

fn rect_mesh(region: Region, grid: Grid) -> RefMesh {
    let (nx, ny) = (grid.nx, grid.ny);
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([grid.x(1, i), grid.y(1, j)]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for t in 0..grid.n_triangles() {
        let (i, j, kind) = grid.triangle(t);
        cells.push(
            Grid::corners(kind)
                .iter()
                .map(|c| idx(i + c[0], j + c[1]))
                .collect(),
        );
    }
    let (bottom, top, left, right) = match region {
        Region::Fluid => (
            BoundaryTag::FluidBottom,
            BoundaryTag::Interface,
            BoundaryTag::FluidLeft,
            BoundaryTag::FluidRight,
        ),
        _ => (
            BoundaryTag::Interface,
            BoundaryTag::BiotTop,
            BoundaryTag::BiotLeft,
            BoundaryTag::BiotRight,
        ),
    };
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(([idx(i, 0), idx(i + 1, 0)], bottom));
        boundary_edges.push(([idx(i, ny), idx(i + 1, ny)], top));
    }
    for j in 0..ny {
        boundary_edges.push(([idx(0, j), idx(0, j + 1)], left));
        boundary_edges.push(([idx(nx, j), idx(nx, j + 1)], right));
    }
    RefMesh {
        region,
        grid,
        vertices,
        cells,
        boundary_edges,
    }
}

/// Fluid `(0,L) x (-R,0)`, Biot `(0,L) x (0,R)` and plate `(0,L)` meshes.
pub fn build_reference_meshes(l: f64, r: f64, nx: usize, ny: usize) -> Result<(RefMesh, RefMesh, RefMesh)> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(FpsiError::config("L", "L > 0"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(FpsiError::config("R", "R > 0"));
    }
    if nx < 1 {
        return Err(FpsiError::config("nx", "nx >= 1"));
    }
    if ny < 1 {
        return Err(FpsiError::config("ny", "ny >= 1"));
    }
    let fluid = rect_mesh(Region::Fluid, Grid { nx, ny, lx: l, ly: r, y0: -r });
    let biot = rect_mesh(Region::Biot, Grid { nx, ny, lx: l, ly: r, y0: 0.0 });
    let pgrid = Grid { nx, ny: 1, lx: l, ly: 0.0, y0: 0.0 };
    let plate = RefMesh {
        region: Region::Plate,
        grid: pgrid,
        vertices: (0..=nx).map(|i| [pgrid.x(1, i), 0.0]).collect(),
        cells: (0..nx).map(|i| vec![i, i + 1]).collect(),
        boundary_edges: Vec::new(),
    };
    Ok((fluid, biot, plate))
}

/// For each plate node, the matching fluid-top and Biot-bottom vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceMap {
    pub triples: Vec<(usize, usize, usize)>,
}

pub fn build_interface_map(fluid: &RefMesh, biot: &RefMesh, plate: &RefMesh) -> Result<InterfaceMap> {
    let f = fluid.interface_nodes();
    let b = biot.interface_nodes();
    let p = plate.interface_nodes();
    if f.len() != p.len() || b.len() != p.len() {
        return Err(FpsiError::MeshIncompatible(format!(
            "interface node counts differ: fluid {}, biot {}, plate {}",
            f.len(),
            b.len(),
            p.len()
        )));
    }
    let mut triples = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        let (xf, xb, xp) = (fluid.vertices[f[k]], biot.vertices[b[k]], plate.vertices[p[k]]);
        if xf[0] != xp[0] || xb[0] != xp[0] || xf[1] != 0.0 || xb[1] != 0.0 {
            return Err(FpsiError::MeshIncompatible(format!(
                "interface node {k} not collocated: fluid {:?}, biot {:?}, plate {:?}",
                xf, xb, xp
            )));
        }
        triples.push((p[k], f[k], b[k]));
    }
    Ok(InterfaceMap { triples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_counts() {
        let (f, b, p) = build_reference_meshes(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(f.vertices.len(), 4);
        assert_eq!(b.vertices.len(), 4);
        assert_eq!(p.vertices.len(), 2);
        assert_eq!(p.cells.len(), 1);
    }

    #[test]
    fn two_by_two() {
        let (f, b, p) = build_reference_meshes(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(f.vertices.len(), 9);
        assert_eq!(b.vertices.len(), 9);
        let m = build_interface_map(&f, &b, &p).unwrap();
        assert_eq!(m.triples.len(), 3);
    }

    #[test]
    fn interface_coordinates() {
        let (f, b, p) = build_reference_meshes(2.0, 0.5, 4, 2).unwrap();
        let xs: Vec<f64> = p.vertices.iter().map(|v| v[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        for (k, n) in f.interface_nodes().iter().enumerate() {
            assert_eq!(f.vertices[*n], [xs[k], 0.0]);
        }
        for (k, n) in b.interface_nodes().iter().enumerate() {
            assert_eq!(b.vertices[*n], [xs[k], 0.0]);
        }
    }

    #[test]
    fn mismatched_meshes_rejected() {
        let (f, _, p) = build_reference_meshes(1.0, 1.0, 2, 2).unwrap();
        let (_, b3, _) = build_reference_meshes(1.0, 1.0, 3, 2).unwrap();
        assert!(matches!(build_interface_map(&f, &b3, &p), Err(FpsiError::MeshIncompatible(_))));
    }

    #[test]
    fn endpoints_matched_single_cell() {
        let (f, b, p) = build_reference_meshes(1.0, 1.0, 1, 3).unwrap();
        let m = build_interface_map(&f, &b, &p).unwrap();
        assert_eq!(m.triples.len(), 2);
    }

    #[test]
    fn bad_dimensions() {
        assert!(build_reference_meshes(0.0, 1.0, 1, 1).is_err());
        assert!(build_reference_meshes(1.0, -1.0, 1, 1).is_err());
        assert!(build_reference_meshes(1.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn locate_returns_valid_barycentrics() {
        let (f, _, _) = build_reference_meshes(1.0, 1.0, 3, 2).unwrap();
        for &p in &[[0.1, -0.2], [0.9, -0.95], [0.5, 0.0], [0.0, -1.0], [1.0, 0.0]] {
            let (t, l) = f.grid.locate(p).unwrap();
            let c = &f.cells[t];
            let mut q = [0.0; 2];
            for k in 0..3 {
                assert!(l[k] >= -1e-14);
                q[0] += l[k] * f.vertices[c[k]][0];
                q[1] += l[k] * f.vertices[c[k]][1];
            }
            assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
        }
        assert!(f.grid.locate([0.5, 0.3]).is_none());
    }

    proptest! {
        #[test]
        fn closed_form_counts(l in 0.1f64..10.0, r in 0.1f64..10.0, nx in 1usize..20, ny in 1usize..20) {
            let (f, b, p) = build_reference_meshes(l, r, nx, ny).unwrap();
            prop_assert_eq!(f.vertices.len(), (nx + 1) * (ny + 1));
            prop_assert_eq!(b.cells.len(), 2 * nx * ny);
            prop_assert_eq!(p.cells.len(), nx);
            prop_assert_eq!(f.boundary_edges.len(), 2 * (nx + ny));
            let m = build_interface_map(&f, &b, &p).unwrap();
            prop_assert_eq!(m.triples.len(), nx + 1);
            for w in m.triples.windows(2) {
                prop_assert!(p.vertices[w[0].0][0] < p.vertices[w[1].0][0]);
            }
        }
    }
}
