//! Legacy ASCII VTK snapshots.

use std::io::Write;

use crate::assembly::Discretization;
use crate::error::Result;
use crate::scheme::CoupledState;
use crate::spaces::LagrangeSpace;
use crate::transforms::{PlateField, TransferMaps};

use super::csv::fmt_real;

/// Triangles of the node lattice of a Lagrange space, split like the mesh.
fn lattice_triangles(sp: &LagrangeSpace) -> Vec<[usize; 3]> {
    let row = sp.nodes_per_row();
    let (nx, ny) = (sp.degree() * sp.grid.nx, sp.degree() * sp.grid.ny);
    let mut out = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = j * row + i;
            out.push([a, a + 1, a + row + 1]);
            out.push([a, a + row + 1, a + row]);
        }
    }
    out
}

fn write_unstructured(w: &mut impl Write, title: &str, pts: &[[f64; 2]], tris: &[[usize; 3]]) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", pts.len())?;
    for p in pts {
        writeln!(w, "{} {} 0", fmt_real(p[0]), fmt_real(p[1]))?;
    }
    writeln!(w, "CELLS {} {}", tris.len(), 4 * tris.len())?;
    for t in tris {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", tris.len())?;
    for _ in tris {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", pts.len())
}

fn write_vectors(w: &mut impl Write, name: &str, v: &[f64]) -> std::io::Result<()> {
    writeln!(w, "VECTORS {name} double")?;
    for c in v.chunks(2) {
        writeln!(w, "{} {} 0", fmt_real(c[0]), fmt_real(c[1]))?;
    }
    Ok(())
}

fn write_scalars(w: &mut impl Write, name: &str, v: impl Iterator<Item = f64>) -> std::io::Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for x in v {
        writeln!(w, "{}", fmt_real(x))?;
    }
    Ok(())
}

fn plate_field(disc: &Discretization, s: &CoupledState) -> PlateField {
    PlateField {
        space: disc.sp.plate.clone(),
        omega: s.omega.clone(),
        zeta: s.zeta.clone(),
    }
}

/// Fluid velocity at the velocity nodes, placed on the deformed domain.
pub fn write_fluid(w: &mut impl Write, disc: &Discretization, s: &CoupledState) -> Result<()> {
    let sp = &disc.sp.velocity;
    let maps = TransferMaps::new(disc.params.l, disc.params.r);
    let plate = plate_field(disc, s);
    let pts = (0..sp.n_nodes())
        .map(|n| maps.ale_map(&plate, sp.node_coord(n)))
        .collect::<Result<Vec<_>>>()?;
    write_unstructured(w, &format!("fluid velocity t={}", fmt_real(s.t)), &pts, &lattice_triangles(sp))?;
    write_vectors(w, "velocity", &s.u)?;
    Ok(())
}

/// Displacement, velocity and pore pressure on the reference body.
pub fn write_body(w: &mut impl Write, disc: &Discretization, s: &CoupledState) -> Result<()> {
    let sp = &disc.sp.displacement;
    let pts: Vec<[f64; 2]> = (0..sp.n_nodes()).map(|n| sp.node_coord(n)).collect();
    write_unstructured(w, &format!("poroelastic body t={}", fmt_real(s.t)), &pts, &lattice_triangles(sp))?;
    write_vectors(w, "displacement", &s.eta)?;
    write_vectors(w, "velocity", &s.xi)?;
    let pressure = pts
        .iter()
        .map(|p| Ok(disc.sp.pressure.eval_scalar(&s.p, *p)?.0))
        .collect::<Result<Vec<f64>>>()?;
    write_scalars(w, "pore_pressure", pressure.into_iter())?;
    Ok(())
}

/// Deformed plate as a polyline through `samples_per_element` points per element.
pub fn write_plate(w: &mut impl Write, disc: &Discretization, s: &CoupledState, samples_per_element: usize) -> Result<()> {
    let pl = &disc.sp.plate;
    let m = samples_per_element.max(1);
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for e in 0..pl.nx {
        for k in 0..m + usize::from(e + 1 == pl.nx) {
            let t = k as f64 / m as f64;
            let x = pl.nodes[e] + t * pl.h(e);
            xs.push([x, pl.eval_local(&s.omega, e, t).v]);
            vals.push(pl.eval_local(&s.zeta, e, t).v);
        }
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "plate t={}", fmt_real(s.t))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", xs.len())?;
    for p in &xs {
        writeln!(w, "{} {} 0", fmt_real(p[0]), fmt_real(p[1]))?;
    }
    writeln!(w, "LINES 1 {}", xs.len() + 1)?;
    let ids: Vec<String> = (0..xs.len()).map(|i| i.to_string()).collect();
    writeln!(w, "{} {}", xs.len(), ids.join(" "))?;
    writeln!(w, "POINT_DATA {}", xs.len())?;
    write_scalars(w, "plate_velocity", vals.into_iter())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhysicalParams;
    use crate::scheme::InitialCase;
    use crate::spaces::Degrees;

    #[test]
    fn snapshot_files_are_consistent() {
        let disc = Discretization::new(PhysicalParams::default(), 2, 2, Degrees::default(), None).unwrap();
        let s = InitialCase::Smooth { amplitude: 0.1 }.build(&disc).unwrap();
        let mut f = Vec::new();
        write_fluid(&mut f, &disc, &s).unwrap();
        let f = String::from_utf8(f).unwrap();
        assert!(f.contains("POINTS 25 double") && f.contains("CELLS 32 128") && f.contains("VECTORS velocity"));
        // top row of the fluid sits on the deformed plate
        let top = f.lines().nth(5 + 20 + 2).unwrap();
        let y: f64 = top.split(' ').nth(1).unwrap().parse().unwrap();
        assert!((y - disc.sp.plate.eval(&s.omega, 0.5).unwrap().v).abs() < 1e-14, "{top}");

        let mut b = Vec::new();
        write_body(&mut b, &disc, &s).unwrap();
        let b = String::from_utf8(b).unwrap();
        assert_eq!(b.lines().filter(|l| l.starts_with("SCALARS") || l.starts_with("VECTORS")).count(), 3);

        let mut p = Vec::new();
        write_plate(&mut p, &disc, &s, 4).unwrap();
        let p = String::from_utf8(p).unwrap();
        assert!(p.contains("POINTS 9 double") && p.contains("LINES 1 10"));
    }
}
