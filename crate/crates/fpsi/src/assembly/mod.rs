//! Quadrature-based assembly of the plate system, the coupled fluid /
//! poroelastic system, and the discrete energy and dissipation functionals.

pub mod coupled;
pub mod energy;
pub mod plate;

use std::sync::Arc;

use crate::error::{FpsiError, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{build_interface_map, build_reference_meshes, RefMesh};
use crate::quadrature::{LineRule, QuadratureRule};
use crate::spaces::{build_spaces, Degrees, DofLayout, FunctionSpaceSet, Tabulation};
use crate::transforms::Point;

pub use coupled::{assemble_fluid_biot_system, biot_geometry, darcy_velocity, BiotGeometry, CoupledInput, CoupledSystem, Unknowns};
pub use energy::{
    compute_discrete_dissipation, compute_discrete_energy, korn_integrals, DissipationFields, DissipationRecord, EnergyFields, EnergyRecord,
    PlateVelocitySource,
};
pub use plate::{assemble_plate_system, interface_points, plate_load, plate_matrices, PlateMatrices};

/// PDE coefficients and strip geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub rho_b: f64,
    pub mu_e: f64,
    pub lambda_e: f64,
    pub mu_v: f64,
    pub lambda_v: f64,
    pub alpha: f64,
    pub c0: f64,
    pub kappa: f64,
    pub rho_p: f64,
    pub nu: f64,
    pub beta: f64,
    pub l: f64,
    pub r: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            rho_b: 1.0,
            mu_e: 1.0,
            lambda_e: 1.0,
            mu_v: 0.1,
            lambda_v: 0.1,
            alpha: 1.0,
            c0: 1.0,
            kappa: 1.0,
            rho_p: 1.0,
            nu: 1.0,
            beta: 1.0,
            l: 1.0,
            r: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("rho_b", self.rho_b),
            ("mu_e", self.mu_e),
            ("lambda_e", self.lambda_e),
            ("alpha", self.alpha),
            ("rho_p", self.rho_p),
            ("nu", self.nu),
            ("kappa", self.kappa),
            ("L", self.l),
            ("R", self.r),
        ];
        for (k, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FpsiError::config(k, "ρ_b, μ_e, λ_e, α, ρ_p, ν, κ, L, R > 0"));
            }
        }
        for (k, v) in [("mu_v", self.mu_v), ("lambda_v", self.lambda_v)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(FpsiError::config(k, "μ_v, λ_v ≥ 0"));
            }
        }
        for (k, v) in [("beta", self.beta), ("c0", self.c0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(FpsiError::config(k, "β, c₀ ≥ 0"));
            }
        }
        Ok(())
    }
}

pub type VectorSource = Arc<dyn Fn(f64, Point) -> [f64; 2] + Send + Sync>;
pub type ScalarSource = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;
pub type LineSource = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type LineVectorSource = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Right-hand-side sources. All absent in ordinary runs; manufactured
/// solutions supply them.
#[derive(Clone, Default)]
pub struct Forcing {
    /// fluid body force at a physical point
    pub fluid: Option<VectorSource>,
    /// traction on the fluid side of the interface, per reference length
    pub fluid_interface: Option<LineVectorSource>,
    /// poroelastic body force at a reference point
    pub biot: Option<VectorSource>,
    /// pore-pressure source at a reference point
    pub pressure: Option<ScalarSource>,
    /// transverse plate load
    pub plate: Option<LineSource>,
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Forcing")
            .field("fluid", &self.fluid.is_some())
            .field("fluid_interface", &self.fluid_interface.is_some())
            .field("biot", &self.biot.is_some())
            .field("pressure", &self.pressure.is_some())
            .field("plate", &self.plate.is_some())
            .finish()
    }
}

/// Meshes, spaces and quadrature tables shared by every step.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub params: PhysicalParams,
    pub fluid_mesh: RefMesh,
    pub biot_mesh: RefMesh,
    pub plate_mesh: RefMesh,
    pub sp: FunctionSpaceSet,
    pub layout: DofLayout,
    pub quad_order: usize,
    pub rule: QuadratureRule,
    pub line: LineRule,
    pub tab_velocity: Tabulation,
    pub tab_multiplier: Tabulation,
    pub tab_displacement: Tabulation,
    pub tab_pressure: Tabulation,
}

impl Discretization {
    pub fn new(params: PhysicalParams, nx: usize, ny: usize, deg: Degrees, quad_order: Option<usize>) -> Result<Self> {
        params.validate()?;
        let (fluid_mesh, biot_mesh, plate_mesh) = build_reference_meshes(params.l, params.r, nx, ny)?;
        let map = build_interface_map(&fluid_mesh, &biot_mesh, &plate_mesh)?;
        let (sp, layout) = build_spaces(&fluid_mesh, &biot_mesh, &plate_mesh, &map, deg)?;
        let quad_order = quad_order.unwrap_or(2 * deg.velocity.max(deg.displacement) + 2);
        let rule = QuadratureRule::triangle(quad_order);
        // the Hermite mass integrand has degree 6
        let line = LineRule::new(quad_order.max(6));
        Ok(Discretization {
            params,
            tab_velocity: Tabulation::new(&sp.velocity, &rule),
            tab_multiplier: Tabulation::new(&sp.multiplier, &rule),
            tab_displacement: Tabulation::new(&sp.displacement, &rule),
            tab_pressure: Tabulation::new(&sp.pressure, &rule),
            fluid_mesh,
            biot_mesh,
            plate_mesh,
            sp,
            layout,
            quad_order,
            rule,
            line,
        })
    }

    pub fn triangle_area(&self) -> f64 {
        let g = &self.sp.velocity.grid;
        g.hx() * g.hy() / 2.0
    }
}

/// Sparse system with its right-hand side.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// smallest diagonal entry of the symmetric dissipative blocks
    pub min_dissipative_diag: f64,
}

impl AssembledSystem {
    pub fn solve(&self) -> Result<Vec<f64>> {
        self.matrix.solve(&self.rhs)
    }

    /// Max-norm residual `|A x - b|` relative to `max(|b|, 1)`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r = ax.iter().zip(&self.rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let s = self.rhs.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        r / s
    }
}
