//! Finite-element spaces for the plate, the fluid velocity/multiplier pair,
//! the poroelastic displacement and the pore pressure, with their essential
//! boundary conditions and the interface coupling layout.

pub mod hermite;
pub mod lagrange;

pub use hermite::{hermite_shape, HermiteShape, HermiteSpace, PlateEval};
pub use lagrange::{line_basis, LagrangeElement, LagrangeSpace, Tabulation};

use crate::error::{FpsiError, Result};
use crate::mesh::{InterfaceMap, RefMesh};

/// Polynomial degrees of the 2D spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degrees {
    pub velocity: usize,
    pub displacement: usize,
    pub pressure: usize,
}

impl Default for Degrees {
    fn default() -> Self {
        Degrees {
            velocity: 2,
            displacement: 2,
            pressure: 1,
        }
    }
}

/// Free/essential split of one space.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub fixed: Vec<bool>,
    /// full dof -> reduced index, `usize::MAX` when fixed
    pub free: Vec<usize>,
    pub n_free: usize,
}

impl DofMap {
    pub fn new(fixed: Vec<bool>) -> Self {
        let mut free = vec![usize::MAX; fixed.len()];
        let mut n = 0;
        for (k, f) in fixed.iter().enumerate() {
            if !f {
                free[k] = n;
                n += 1;
            }
        }
        DofMap { fixed, free, n_free: n }
    }

    pub fn n_full(&self) -> usize {
        self.fixed.len()
    }

    pub fn free_of(&self, dof: usize) -> Option<usize> {
        let r = self.free[dof];
        (r != usize::MAX).then_some(r)
    }

    /// Reduced vector -> full vector with zero essential values.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&r| if r == usize::MAX { 0.0 } else { reduced[r] })
            .collect()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (k, &r) in self.free.iter().enumerate() {
            if r != usize::MAX {
                out[r] = full[k];
            }
        }
        out
    }

    /// Zero out essential entries in place.
    pub fn clamp(&self, full: &mut [f64]) {
        for (v, f) in full.iter_mut().zip(&self.fixed) {
            if *f {
                *v = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionSpaceSet {
    pub plate: HermiteSpace,
    pub velocity: LagrangeSpace,
    pub multiplier: LagrangeSpace,
    pub displacement: LagrangeSpace,
    pub pressure: LagrangeSpace,
}

#[derive(Debug, Clone)]
pub struct DofLayout {
    pub plate: DofMap,
    pub velocity: DofMap,
    pub multiplier: DofMap,
    pub displacement: DofMap,
    pub pressure: DofMap,
    /// (Biot interface y-dof, plate value dof) at shared interior vertices
    pub coupling_pairs: Vec<(usize, usize)>,
}

pub fn build_spaces(
    fluid: &RefMesh,
    biot: &RefMesh,
    plate: &RefMesh,
    map: &InterfaceMap,
    deg: Degrees,
) -> Result<(FunctionSpaceSet, DofLayout)> {
    if deg.velocity < 2 {
        return Err(FpsiError::config("velocity_degree", "velocity_degree >= 2 (inf-sup stable pair)"));
    }
    if deg.displacement < 1 || deg.pressure < 1 {
        return Err(FpsiError::config("displacement_degree", "degrees >= 1"));
    }
    if fluid.grid.nx != biot.grid.nx || plate.cells.len() != fluid.grid.nx || map.triples.len() != fluid.grid.nx + 1 {
        return Err(FpsiError::MeshIncompatible("meshes do not share the interface lattice".into()));
    }
    let sp = FunctionSpaceSet {
        plate: HermiteSpace::new(fluid.grid.lx, fluid.grid.nx),
        velocity: LagrangeSpace::new(fluid.grid, deg.velocity),
        multiplier: LagrangeSpace::new(fluid.grid, deg.velocity - 1),
        displacement: LagrangeSpace::new(biot.grid, deg.displacement),
        pressure: LagrangeSpace::new(biot.grid, deg.pressure),
    };

    let mut pf = vec![false; sp.plate.n_dofs()];
    for d in sp.plate.clamped_dofs() {
        pf[d] = true;
    }

    let edge = |s: &LagrangeSpace, n: usize| {
        let (a, b) = s.node_lattice(n);
        let last_a = s.nodes_per_row() - 1;
        let last_b = s.degree() * s.grid.ny;
        (a == 0 || a == last_a, b == 0, b == last_b)
    };

    let v = &sp.velocity;
    let mut vf = vec![false; 2 * v.n_nodes()];
    for n in 0..v.n_nodes() {
        let (side, bottom, _) = edge(v, n);
        if side || bottom {
            vf[2 * n] = true;
            vf[2 * n + 1] = true;
        }
    }

    let d = &sp.displacement;
    let mut df = vec![false; 2 * d.n_nodes()];
    for n in 0..d.n_nodes() {
        let (side, bottom, top) = edge(d, n);
        if side || top {
            df[2 * n] = true;
            df[2 * n + 1] = true;
        } else if bottom {
            df[2 * n] = true;
        }
    }

    let p = &sp.pressure;
    let mut ppf = vec![false; p.n_nodes()];
    for n in 0..p.n_nodes() {
        let (side, _, top) = edge(p, n);
        ppf[n] = side || top;
    }

    let k = d.degree();
    let bottom = d.row_nodes(false);
    let coupling_pairs = (1..sp.plate.nx).map(|i| (2 * bottom[k * i] + 1, 2 * i)).collect();

    let layout = DofLayout {
        plate: DofMap::new(pf),
        velocity: DofMap::new(vf),
        multiplier: DofMap::new(vec![false; sp.multiplier.n_nodes()]),
        displacement: DofMap::new(df),
        pressure: DofMap::new(ppf),
        coupling_pairs,
    };
    Ok((sp, layout))
}

/// Joint numbering of plate and Biot displacement unknowns in which each
/// Biot interface y-dof at a shared vertex is the plate value dof there.
#[derive(Debug, Clone)]
pub struct ReducedDofMap {
    pub n_reduced: usize,
    pub plate: Vec<Option<usize>>,
    pub displacement: Vec<Option<usize>>,
}

impl ReducedDofMap {
    /// Full plate and Biot vectors from a reduced vector.
    pub fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f = |m: &Vec<Option<usize>>| m.iter().map(|r| r.map_or(0.0, |r| x[r])).collect();
        (f(&self.plate), f(&self.displacement))
    }
}

pub fn apply_coupling_constraint(sp: &FunctionSpaceSet, layout: &DofLayout) -> Result<ReducedDofMap> {
    let mut plate = vec![None; layout.plate.n_full()];
    let mut n = 0;
    for k in 0..layout.plate.n_full() {
        if !layout.plate.fixed[k] {
            plate[k] = Some(n);
            n += 1;
        }
    }
    let mut displacement = vec![None; layout.displacement.n_full()];
    let bottom = sp.displacement.row_nodes(false);
    for &(bd, pd) in &layout.coupling_pairs {
        let node = bd / 2;
        let i = pd / 2;
        let xb = sp.displacement.node_coord(node);
        if xb[1] != 0.0 || xb[0] != sp.plate.nodes[i] || bottom[sp.displacement.degree() * i] != node {
            return Err(FpsiError::MeshIncompatible(format!(
                "Biot dof {bd} at {:?} is not collocated with plate node {i}",
                xb
            )));
        }
        if layout.displacement.fixed[bd] || layout.plate.fixed[pd] {
            return Err(FpsiError::MeshIncompatible(format!("coupling pair ({bd}, {pd}) touches an essential dof")));
        }
        displacement[bd] = plate[pd];
    }
    for k in 0..layout.displacement.n_full() {
        if !layout.displacement.fixed[k] && displacement[k].is_none() {
            displacement[k] = Some(n);
            n += 1;
        }
    }
    Ok(ReducedDofMap {
        n_reduced: n,
        plate,
        displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interface_map, build_reference_meshes};

    fn setup(nx: usize, ny: usize) -> (FunctionSpaceSet, DofLayout) {
        let (f, b, p) = build_reference_meshes(1.0, 1.0, nx, ny).unwrap();
        let m = build_interface_map(&f, &b, &p).unwrap();
        build_spaces(&f, &b, &p, &m, Degrees::default()).unwrap()
    }

    #[test]
    fn plate_dof_counts() {
        let (sp, l) = setup(1, 1);
        assert_eq!(sp.plate.n_dofs(), 4);
        assert_eq!(l.plate.n_free, 0);
        let (sp, l) = setup(2, 2);
        assert_eq!(sp.plate.n_dofs(), 6);
        assert_eq!(l.plate.n_free, 2);
    }

    #[test]
    fn biot_interface_dofs() {
        let (sp, l) = setup(2, 2);
        let bottom = sp.displacement.row_nodes(false);
        let mid = bottom[2];
        assert!(l.displacement.fixed[2 * mid]);
        assert!(!l.displacement.fixed[2 * mid + 1]);
        assert_eq!(l.coupling_pairs, vec![(2 * mid + 1, 2)]);
        // top row fully fixed, sides fixed
        for n in sp.displacement.row_nodes(true) {
            assert!(l.displacement.fixed[2 * n] && l.displacement.fixed[2 * n + 1]);
        }
    }

    #[test]
    fn fluid_and_pressure_conditions() {
        let (sp, l) = setup(3, 2);
        for n in sp.velocity.row_nodes(true) {
            let (a, _) = sp.velocity.node_lattice(n);
            let side = a == 0 || a == sp.velocity.nodes_per_row() - 1;
            assert_eq!(l.velocity.fixed[2 * n], side);
        }
        for n in sp.velocity.row_nodes(false) {
            assert!(l.velocity.fixed[2 * n + 1]);
        }
        for n in sp.pressure.row_nodes(false) {
            let (a, _) = sp.pressure.node_lattice(n);
            assert_eq!(l.pressure.fixed[n], a == 0 || a == sp.pressure.nodes_per_row() - 1);
        }
        assert_eq!(l.multiplier.n_free, sp.multiplier.n_nodes());
    }

    #[test]
    fn coupling_counts_and_zero_plate() {
        let (sp, l) = setup(2, 1);
        let r = apply_coupling_constraint(&sp, &l).unwrap();
        assert_eq!(l.coupling_pairs.len(), 1);
        assert_eq!(r.n_reduced, l.plate.n_free + l.displacement.n_free - 1);
        let mut x = vec![1.0; r.n_reduced];
        for k in 0..l.plate.n_full() {
            if let Some(i) = r.plate[k] {
                x[i] = 0.0;
            }
        }
        let (_, eta) = r.expand(&x);
        for &(bd, _) in &l.coupling_pairs {
            assert_eq!(eta[bd], 0.0);
        }
    }

    #[test]
    fn coupled_vector_agrees_at_nodes() {
        let (sp, l) = setup(5, 2);
        let r = apply_coupling_constraint(&sp, &l).unwrap();
        let x: Vec<f64> = (0..r.n_reduced).map(|k| ((k * 7 + 3) as f64).sin()).collect();
        let (om, eta) = r.expand(&x);
        for i in 1..sp.plate.nx {
            let xi = sp.plate.nodes[i];
            let w = sp.plate.eval(&om, xi).unwrap().v;
            let (e, _) = sp.displacement.eval_vector(&eta, [xi, 0.0]).unwrap();
            assert!((w - e[1]).abs() <= 1e-14);
        }
    }

    #[test]
    fn expand_restrict_roundtrip() {
        let m = DofMap::new(vec![true, false, false, true, false]);
        let r = vec![1.0, 2.0, 3.0];
        assert_eq!(m.restrict(&m.expand(&r)), r);
    }
}
