//! Run configuration, CSV tables and VTK snapshots.

pub mod config;
pub mod csv;
pub mod vtk;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use config::{parse_config, serialize_config, RunConfig};

use crate::assembly::Discretization;
use crate::error::Result;
use crate::scheme::CoupledState;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "FPSI_OUT_DIR";

/// `--out` beats the environment, which beats the config file.
pub fn resolve_out_dir(flag: Option<&Path>, configured: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(configured),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| crate::error::FpsiError::config("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Fluid, body and plate files for one snapshot.
pub fn write_snapshot(dir: &Path, disc: &Discretization, s: &CoupledState) -> Result<()> {
    use std::io::Write;
    let tag = format!("{:06}", s.n);
    let mut f = create(&dir.join(format!("fluid_{tag}.vtk")))?;
    vtk::write_fluid(&mut f, disc, s)?;
    f.flush()?;
    let mut b = create(&dir.join(format!("body_{tag}.vtk")))?;
    vtk::write_body(&mut b, disc, s)?;
    b.flush()?;
    let mut p = create(&dir.join(format!("plate_{tag}.vtk")))?;
    vtk::write_plate(&mut p, disc, s, 8)?;
    p.flush()?;
    Ok(())
}
