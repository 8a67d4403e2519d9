//! Space-time grid containers for the spin and costate fields, boundary
//! data, cutoffs, rescaling, and file I/O.
//!
//! Storage is time-major: `values[n * space_len + z]`, so spatial
//! convolutions act on contiguous blocks.

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, SpatialGrid};
use crate::potential::{phi_prime, PotentialParams};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Spin field `s(tau, z)` with values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinField {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

/// Costate field `p(tau, z)`; after a backward sweep the terminal slice
/// equals `-g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateField {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

macro_rules! field_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn zeros(geometry: GridGeometry) -> Self {
                let len = geometry.nt * geometry.space.len();
                Self { geometry, values: vec![0.0; len] }
            }

            pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
                if values.len() != geometry.nt * geometry.space.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "field needs {} values, got {}",
                        geometry.nt * geometry.space.len(),
                        values.len()
                    )));
                }
                Ok(Self { geometry, values })
            }

            /// Broadcast a spatial slice over all time nodes.
            pub fn broadcast(geometry: GridGeometry, slice: &[f64]) -> Result<Self> {
                if slice.len() != geometry.space.len() {
                    return Err(Error::ShapeMismatch("broadcast slice length".into()));
                }
                let mut values = Vec::with_capacity(geometry.nt * slice.len());
                for _ in 0..geometry.nt {
                    values.extend_from_slice(slice);
                }
                Ok(Self { geometry, values })
            }

            pub fn from_fn(geometry: GridGeometry, f: impl Fn(f64, [f64; 2]) -> f64) -> Self {
                let nsp = geometry.space.len();
                let mut values = Vec::with_capacity(geometry.nt * nsp);
                for n in 0..geometry.nt {
                    let tau = geometry.time(n);
                    for z in 0..nsp {
                        values.push(f(tau, geometry.space.coords(z)));
                    }
                }
                Self { geometry, values }
            }

            pub fn slice(&self, n: usize) -> &[f64] {
                let nsp = self.geometry.space.len();
                &self.values[n * nsp..(n + 1) * nsp]
            }

            pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
                let nsp = self.geometry.space.len();
                &mut self.values[n * nsp..(n + 1) * nsp]
            }
        }
    };
}

field_impl!(SpinField);
field_impl!(CostateField);

impl SpinField {
    /// All spin values must stay strictly inside `(-1, 1)` for the cost
    /// integrands to be finite.
    pub fn check_open_interval(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| v.abs() >= 1.0 || !v.is_finite()) {
            return Err(Error::Domain(format!("spin field leaves (-1,1): value {v}")));
        }
        Ok(())
    }
}

/// Initial condition and terminal cost data with the admissibility bounds
/// `|s0| <= s_star` and `|g| <= (1/2 beta) Phi'(s_star)` enforced at load.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub s0: Vec<f64>,
    pub g: Vec<f64>,
}

impl BoundaryData {
    pub fn new(s0: Vec<f64>, g: Vec<f64>, grid: SpatialGrid, params: &PotentialParams) -> Result<Self> {
        if s0.len() != grid.len() || g.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "boundary data length {} / {} vs grid {}",
                s0.len(),
                g.len(),
                grid.len()
            )));
        }
        let s_star = params.s_star();
        let slack = 1e-12;
        if let Some(v) = s0.iter().find(|v| v.abs() > s_star + slack) {
            return Err(Error::Parameter(format!(
                "initial data violates |s0| <= s_star = {s_star}: found {v}"
            )));
        }
        let g_bound = phi_prime(s_star) / (2.0 * params.beta);
        if let Some(v) = g.iter().find(|v| v.abs() > g_bound + slack) {
            return Err(Error::Parameter(format!(
                "terminal data violates |g| <= (1/2 beta) Phi'(s_star) = {g_bound}: found {v}"
            )));
        }
        Ok(Self { s0, g })
    }
}

/// Discrete time derivative on the solver's stencil: forward differences
/// at interior nodes, one-sided at the final node. Energies use the same
/// stencil so the discrete decomposition telescopes exactly.
pub fn time_derivative(field: &SpinField) -> Vec<f64> {
    let geom = &field.geometry;
    let nsp = geom.space.len();
    let dt = geom.dt();
    let mut out = vec![0.0; field.values.len()];
    for n in 0..geom.nt {
        let (a, b) = if n + 1 < geom.nt { (n, n + 1) } else { (n - 1, n) };
        let (sa, sb) = (field.slice(a), field.slice(b));
        for z in 0..nsp {
            out[n * nsp + z] = (sb[z] - sa[z]) / dt;
        }
    }
    out
}

/// Clamp the field to `[-s_star, s_star]`; idempotent.
pub fn cutoff(field: &SpinField, s_star: f64) -> SpinField {
    let values = field.values.iter().map(|v| v.clamp(-s_star, s_star)).collect();
    SpinField { geometry: field.geometry, values }
}

/// Rescaled field `R_{(tau, z), r} s(t, x) = s(tau + r t, z + r x)`,
/// resampled by multilinear interpolation onto the same grid shape. The
/// output records the effective scale `lambda / r`; spatial coordinates
/// wrap around the torus, the time window must stay inside `[0, T]`.
pub fn rescale(field: &SpinField, center: (f64, [f64; 2]), r: f64) -> Result<SpinField> {
    let geom = &field.geometry;
    let (tau_c, z_c) = center;
    let t_end = tau_c + r * geom.t_horizon;
    if tau_c < -1e-12 || t_end > geom.t_horizon + 1e-12 {
        return Err(Error::WindowOutOfRange(format!(
            "rescale window [{tau_c}, {t_end}] exceeds [0, {}]",
            geom.t_horizon
        )));
    }
    let out_geom = GridGeometry {
        space: geom.space,
        nt: geom.nt,
        t_horizon: geom.t_horizon,
        lambda: geom.lambda / r,
    };
    let nsp = geom.space.len();
    let mut values = Vec::with_capacity(geom.nt * nsp);
    for n in 0..geom.nt {
        let tau = (tau_c + r * geom.time(n)).clamp(0.0, geom.t_horizon);
        for idx in 0..nsp {
            let x = geom.space.coords(idx);
            let pt = [z_c[0] + r * x[0], z_c[1] + r * x[1]];
            values.push(sample(field, tau, pt));
        }
    }
    Ok(SpinField { geometry: out_geom, values })
}

/// Multilinear sample at macroscopic coordinates; periodic in space,
/// clamped in time.
pub fn sample(field: &SpinField, tau: f64, z: [f64; 2]) -> f64 {
    let geom = &field.geometry;
    let dt = geom.dt();
    let tf = (tau / dt).clamp(0.0, (geom.nt - 1) as f64);
    let n0 = (tf.floor() as usize).min(geom.nt - 2);
    let wt = tf - n0 as f64;
    let a = sample_space(field.slice(n0), geom.space, z);
    let b = sample_space(field.slice(n0 + 1), geom.space, z);
    (1.0 - wt) * a + wt * b
}

fn sample_space(slice: &[f64], grid: SpatialGrid, z: [f64; 2]) -> f64 {
    let nx = grid.nx;
    let lerp1 = |coord: f64| {
        // cell centers at (i + 1/2) dx; fractional cell index
        let u = coord * nx as f64 - 0.5;
        let i0 = u.floor();
        let w = u - i0;
        let i0 = (i0.rem_euclid(nx as f64)) as usize;
        let i1 = (i0 + 1) % nx;
        (i0, i1, w)
    };
    match grid.d {
        1 => {
            let (i0, i1, w) = lerp1(z[0]);
            (1.0 - w) * slice[i0] + w * slice[i1]
        }
        2 => {
            let (i0, i1, wi) = lerp1(z[0]);
            let (j0, j1, wj) = lerp1(z[1]);
            let v00 = slice[i0 * nx + j0];
            let v01 = slice[i0 * nx + j1];
            let v10 = slice[i1 * nx + j0];
            let v11 = slice[i1 * nx + j1];
            (1.0 - wi) * ((1.0 - wj) * v00 + wj * v01) + wi * ((1.0 - wj) * v10 + wj * v11)
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// File formats: flat little-endian f64 binary with a JSON header, and CSV
// for small grids.

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    kind: String,
    d: usize,
    nx: usize,
    nt: usize,
    t_horizon: f64,
    lambda: f64,
    endianness: String,
}

const MAGIC: &[u8; 4] = b"IMFG";

pub fn save_field(path: &Path, geometry: &GridGeometry, values: &[f64], kind: &str) -> Result<()> {
    let header = FieldHeader {
        kind: kind.to_string(),
        d: geometry.space.d,
        nx: geometry.space.nx,
        nt: geometry.nt,
        t_horizon: geometry.t_horizon,
        lambda: geometry.lambda,
        endianness: "little".to_string(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    for v in values {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_field(path: &Path) -> Result<(GridGeometry, Vec<f64>, String)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ShapeMismatch(format!("{path:?} is not a field file")));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let mut header_bytes = vec![0u8; u32::from_le_bytes(len_bytes) as usize];
    file.read_exact(&mut header_bytes)?;
    let header: FieldHeader = serde_json::from_slice(&header_bytes)?;
    if header.endianness != "little" {
        return Err(Error::ShapeMismatch("only little-endian field files supported".into()));
    }
    let geometry = GridGeometry::new(
        SpatialGrid::new(header.d, header.nx)?,
        header.nt,
        header.t_horizon,
        header.lambda,
    )?;
    let n = geometry.nt * geometry.space.len();
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        file.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok((geometry, values, header.kind))
}

pub fn save_spin(path: &Path, field: &SpinField) -> Result<()> {
    save_field(path, &field.geometry, &field.values, "spin")
}

pub fn load_spin(path: &Path) -> Result<SpinField> {
    let (geometry, values, _) = load_field(path)?;
    SpinField::from_values(geometry, values)
}

pub fn save_costate(path: &Path, field: &CostateField) -> Result<()> {
    save_field(path, &field.geometry, &field.values, "costate")
}

pub fn load_costate(path: &Path) -> Result<CostateField> {
    let (geometry, values, _) = load_field(path)?;
    CostateField::from_values(geometry, values)
}

/// Plain-text dump `tau, z..., value`, one row per grid point. Meant for
/// small grids and offline plotting.
pub fn write_field_csv(out: &mut dyn Write, geometry: &GridGeometry, values: &[f64]) -> Result<()> {
    writeln!(out, "# schema: field-v1")?;
    match geometry.space.d {
        1 => writeln!(out, "tau,z,value")?,
        _ => writeln!(out, "tau,z1,z2,value")?,
    }
    let nsp = geometry.space.len();
    for n in 0..geometry.nt {
        let tau = geometry.time(n);
        for z in 0..nsp {
            let c = geometry.space.coords(z);
            match geometry.space.d {
                1 => writeln!(out, "{tau},{},{}", c[0], values[n * nsp + z])?,
                _ => writeln!(out, "{tau},{},{},{}", c[0], c[1], values[n * nsp + z])?,
            }
        }
    }
    Ok(())
}
