//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::assembly::PhysicalParams;
use crate::consistency::{ReferenceAmplitudes, ReferenceKind};
use crate::error::{FpsiError, Result};
use crate::scheme::{InitialCase, MonitorThresholds, SchemeConfig};
use crate::spaces::Degrees;

/// Only kernel currently available: `(1 - |z|^2)^4` on the unit disc.
pub const KERNEL_POLY4: &str = "poly4";

pub const REQUIRED_KEYS: [&str; 5] = ["nx", "ny", "dt", "T", "delta"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
    pub delta: f64,
    pub h_aux_factor: f64,
    pub kernel: String,
    /// `None` picks the default for the element degrees
    pub quad_order: Option<usize>,
    pub thresholds: MonitorThresholds,
    /// zero, smooth, plate_drop or fold
    pub initial: String,
    pub initial_amplitude: f64,
    pub initial_depth: f64,
    pub initial_speed: f64,
    pub snapshot_stride: usize,
    pub out_dir: String,
    pub write_vtk: bool,
    pub reference: ReferenceKind,
    pub reference_amplitudes: ReferenceAmplitudes,
    pub sweep_deltas: Vec<f64>,
    pub floor_probe: bool,
    pub residual_points: usize,
}

impl RunConfig {
    /// Defaults for everything except the required keys.
    pub fn with_required(nx: usize, ny: usize, dt: f64, t_end: f64, delta: f64) -> Self {
        let params = PhysicalParams::default();
        RunConfig {
            params,
            nx,
            ny,
            dt,
            t_end,
            delta,
            h_aux_factor: 0.125,
            kernel: KERNEL_POLY4.into(),
            quad_order: None,
            thresholds: MonitorThresholds::for_radius(params.r),
            initial: "smooth".into(),
            initial_amplitude: 0.1,
            initial_depth: 0.0,
            initial_speed: 1.0,
            snapshot_stride: 10,
            out_dir: "fpsi_out".into(),
            write_vtk: true,
            reference: ReferenceKind::Separable,
            reference_amplitudes: ReferenceAmplitudes::default(),
            sweep_deltas: vec![0.2 * params.l.min(params.r), 0.1 * params.l.min(params.r), 0.05 * params.l.min(params.r)],
            floor_probe: true,
            residual_points: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let width = self.params.l.min(self.params.r);
        if self.nx == 0 {
            return Err(FpsiError::config("nx", "nx ≥ 1"));
        }
        if self.ny == 0 {
            return Err(FpsiError::config("ny", "ny ≥ 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FpsiError::config("dt", "Δt > 0"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(FpsiError::config("T", "T > 0"));
        }
        if !(self.delta > 0.0 && self.delta < width) {
            return Err(FpsiError::config("delta", "0 < δ < min(L,R)"));
        }
        if !(self.h_aux_factor > 0.0 && self.h_aux_factor <= 1.0) {
            return Err(FpsiError::config("h_aux_factor", "0 < h_aux_factor ≤ 1"));
        }
        if self.kernel != KERNEL_POLY4 {
            return Err(FpsiError::config("kernel", format!("kernel ∈ {{{KERNEL_POLY4}}}")));
        }
        if self.quad_order == Some(0) {
            return Err(FpsiError::config("quad_order", "quadrature order ≥ 1"));
        }
        let th = &self.thresholds;
        if !(th.margin_r > 0.0 && th.margin_r < self.params.r) {
            return Err(FpsiError::config("margin_R", "0 < margin_R < R"));
        }
        if !(th.margin_det > 0.0 && th.margin_det < 1.0) {
            return Err(FpsiError::config("margin_det", "0 < margin_det < 1"));
        }
        if !(th.norm_cap > 1.0) {
            return Err(FpsiError::config("norm_cap", "norm_cap > 1"));
        }
        self.initial_case()?;
        if self.sweep_deltas.is_empty() || self.sweep_deltas.iter().any(|d| !(*d > 0.0 && *d < width)) {
            return Err(FpsiError::config("sweep_deltas", "every δ in 0 < δ < min(L,R)"));
        }
        if self.sweep_deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(FpsiError::config("sweep_deltas", "δ list strictly decreasing"));
        }
        if self.residual_points == 0 {
            return Err(FpsiError::config("residual_points", "residual_points ≥ 1"));
        }
        let a = &self.reference_amplitudes;
        if !(a.sigma.is_finite() && a.plate.is_finite() && a.shear.is_finite() && a.fluid_pressure.is_finite() && a.pore_pressure.is_finite()) {
            return Err(FpsiError::config("ref_*", "finite reference amplitudes"));
        }
        Ok(())
    }

    pub fn initial_case(&self) -> Result<InitialCase> {
        match self.initial.as_str() {
            "zero" => Ok(InitialCase::Zero),
            "smooth" => Ok(InitialCase::Smooth {
                amplitude: self.initial_amplitude,
            }),
            "plate_drop" => {
                if !(self.initial_depth >= 0.0 && self.initial_depth < 1.0) {
                    return Err(FpsiError::config("initial_depth", "0 ≤ depth < 1 (fraction of R)"));
                }
                Ok(InitialCase::PlateDrop {
                    depth: self.initial_depth,
                    speed: self.initial_speed,
                })
            }
            "fold" => Ok(InitialCase::Fold {
                speed: self.initial_speed,
            }),
            _ => Err(FpsiError::config("initial", "initial ∈ {zero, smooth, plate_drop, fold}")),
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            dt: self.dt,
            t_end: self.t_end,
            delta: self.delta,
            h_aux_factor: self.h_aux_factor,
            thresholds: self.thresholds,
            snapshot_stride: self.snapshot_stride,
        }
    }

    pub fn degrees(&self) -> Degrees {
        Degrees::default()
    }
}

fn take<T: FromStr>(map: &mut BTreeMap<String, String>, key: &str, what: &str) -> Result<Option<T>> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| FpsiError::config(key, format!("{what}, got `{v}`"))),
    }
}

fn take_f64(map: &mut BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    Ok(take(map, key, "a real number")?.unwrap_or(default))
}

fn take_usize(map: &mut BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    Ok(take(map, key, "a non-negative integer")?.unwrap_or(default))
}

fn take_bool(map: &mut BTreeMap<String, String>, key: &str, default: bool) -> Result<bool> {
    Ok(take(map, key, "true or false")?.unwrap_or(default))
}

fn required<T: FromStr>(map: &mut BTreeMap<String, String>, key: &str, what: &str) -> Result<T> {
    take(map, key, what)?.ok_or_else(|| FpsiError::config(key, "required key missing"))
}

/// Parse and validate. Keys are case-sensitive; unknown keys, duplicates
/// and lines without `=` are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FpsiError::config(format!("line {}", i + 1), "expected `key = value`"))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if map.insert(k.clone(), v).is_some() {
            return Err(FpsiError::config(k, "key given twice"));
        }
    }
    let m = &mut map;
    let dp = PhysicalParams::default();
    let params = PhysicalParams {
        rho_b: take_f64(m, "rho_b", dp.rho_b)?,
        mu_e: take_f64(m, "mu_e", dp.mu_e)?,
        lambda_e: take_f64(m, "lambda_e", dp.lambda_e)?,
        mu_v: take_f64(m, "mu_v", dp.mu_v)?,
        lambda_v: take_f64(m, "lambda_v", dp.lambda_v)?,
        alpha: take_f64(m, "alpha", dp.alpha)?,
        c0: take_f64(m, "c0", dp.c0)?,
        kappa: take_f64(m, "kappa", dp.kappa)?,
        rho_p: take_f64(m, "rho_p", dp.rho_p)?,
        nu: take_f64(m, "nu", dp.nu)?,
        beta: take_f64(m, "beta", dp.beta)?,
        l: take_f64(m, "L", dp.l)?,
        r: take_f64(m, "R", dp.r)?,
    };
    let mut c = RunConfig::with_required(
        required(m, "nx", "a positive integer")?,
        required(m, "ny", "a positive integer")?,
        required(m, "dt", "a real number")?,
        required(m, "T", "a real number")?,
        required(m, "delta", "a real number")?,
    );
    let width = params.l.min(params.r);
    let dth = MonitorThresholds::for_radius(params.r);
    c.params = params;
    c.h_aux_factor = take_f64(m, "h_aux_factor", c.h_aux_factor)?;
    c.kernel = m.remove("kernel").unwrap_or(c.kernel);
    c.quad_order = match m.remove("quad_order").as_deref() {
        None | Some("auto") => None,
        Some(v) => Some(v.parse().map_err(|_| FpsiError::config("quad_order", format!("auto or an integer, got `{v}`")))?),
    };
    c.thresholds = MonitorThresholds {
        margin_r: take_f64(m, "margin_R", dth.margin_r)?,
        margin_det: take_f64(m, "margin_det", dth.margin_det)?,
        norm_cap: take_f64(m, "norm_cap", dth.norm_cap)?,
    };
    c.initial = m.remove("initial").unwrap_or(c.initial);
    c.initial_amplitude = take_f64(m, "initial_amplitude", c.initial_amplitude)?;
    c.initial_depth = take_f64(m, "initial_depth", c.initial_depth)?;
    c.initial_speed = take_f64(m, "initial_speed", c.initial_speed)?;
    c.snapshot_stride = take_usize(m, "snapshot_stride", c.snapshot_stride)?;
    c.out_dir = m.remove("out_dir").unwrap_or(c.out_dir);
    c.write_vtk = take_bool(m, "write_vtk", c.write_vtk)?;
    if let Some(v) = m.remove("reference") {
        c.reference = ReferenceKind::parse(&v)?;
    }
    let da = ReferenceAmplitudes::default();
    c.reference_amplitudes = ReferenceAmplitudes {
        plate: take_f64(m, "ref_plate", da.plate)?,
        sigma: take_f64(m, "ref_sigma", da.sigma)?,
        shear: take_f64(m, "ref_shear", da.shear)?,
        fluid_pressure: take_f64(m, "ref_fluid_pressure", da.fluid_pressure)?,
        pore_pressure: take_f64(m, "ref_pore_pressure", da.pore_pressure)?,
    };
    c.sweep_deltas = match m.remove("sweep_deltas") {
        None => vec![0.2 * width, 0.1 * width, 0.05 * width],
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| FpsiError::config("sweep_deltas", format!("comma-separated reals, got `{v}`")))?,
    };
    c.floor_probe = take_bool(m, "floor_probe", c.floor_probe)?;
    c.residual_points = take_usize(m, "residual_points", c.residual_points)?;
    if let Some(k) = map.keys().next() {
        return Err(FpsiError::config(k.clone(), "unknown key"));
    }
    c.validate()?;
    Ok(c)
}

/// Every key, one per line, in a fixed order. Reals use the shortest
/// representation that parses back to the same value.
pub fn serialize_config(c: &RunConfig) -> String {
    let p = &c.params;
    let a = &c.reference_amplitudes;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    for (k, v) in [
        ("rho_b", p.rho_b),
        ("mu_e", p.mu_e),
        ("lambda_e", p.lambda_e),
        ("mu_v", p.mu_v),
        ("lambda_v", p.lambda_v),
        ("alpha", p.alpha),
        ("c0", p.c0),
        ("kappa", p.kappa),
        ("rho_p", p.rho_p),
        ("nu", p.nu),
        ("beta", p.beta),
        ("L", p.l),
        ("R", p.r),
    ] {
        kv(k, v.to_string());
    }
    kv("nx", c.nx.to_string());
    kv("ny", c.ny.to_string());
    kv("dt", c.dt.to_string());
    kv("T", c.t_end.to_string());
    kv("delta", c.delta.to_string());
    kv("h_aux_factor", c.h_aux_factor.to_string());
    kv("kernel", c.kernel.clone());
    kv("quad_order", c.quad_order.map_or("auto".into(), |q| q.to_string()));
    kv("margin_R", c.thresholds.margin_r.to_string());
    kv("margin_det", c.thresholds.margin_det.to_string());
    kv("norm_cap", c.thresholds.norm_cap.to_string());
    kv("initial", c.initial.clone());
    kv("initial_amplitude", c.initial_amplitude.to_string());
    kv("initial_depth", c.initial_depth.to_string());
    kv("initial_speed", c.initial_speed.to_string());
    kv("snapshot_stride", c.snapshot_stride.to_string());
    kv("out_dir", c.out_dir.clone());
    kv("write_vtk", c.write_vtk.to_string());
    kv("reference", c.reference.as_str().into());
    kv("ref_plate", a.plate.to_string());
    kv("ref_sigma", a.sigma.to_string());
    kv("ref_shear", a.shear.to_string());
    kv("ref_fluid_pressure", a.fluid_pressure.to_string());
    kv("ref_pore_pressure", a.pore_pressure.to_string());
    kv("sweep_deltas", c.sweep_deltas.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","));
    kv("floor_probe", c.floor_probe.to_string());
    kv("residual_points", c.residual_points.to_string());
    s
}
