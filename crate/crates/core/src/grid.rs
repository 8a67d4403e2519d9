//! Uniform grids on the unit torus and the space-time box.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform cell-centered grid on the unit torus `T^d`, `nx` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub d: usize,
    pub nx: usize,
}

impl SpatialGrid {
    pub fn new(d: usize, nx: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::Parameter(format!("spatial dimension must be 1 or 2, got {d}")));
        }
        if nx < 2 {
            return Err(Error::Parameter(format!("nx must be at least 2, got {nx}")));
        }
        Ok(Self { d, nx })
    }

    pub fn len(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Cell-center coordinate of flat index `idx` (row-major, last axis
    /// contiguous).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let dx = self.dx();
        match self.d {
            1 => [(idx as f64 + 0.5) * dx, 0.0],
            2 => {
                let i = idx / self.nx;
                let j = idx % self.nx;
                [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dx]
            }
            _ => unreachable!(),
        }
    }

    pub fn index2(&self, i: usize, j: usize) -> usize {
        debug_assert_eq!(self.d, 2);
        i * self.nx + j
    }
}

/// Space-time grid: `nt` time nodes over `[0, T]` on top of a spatial torus.
/// The scale parameter `lambda` enters only through the rescaled kernel and
/// the `1/lambda`, `lambda` factors in the energies and dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub space: SpatialGrid,
    pub nt: usize,
    pub t_horizon: f64,
    pub lambda: f64,
}

impl GridGeometry {
    pub fn new(space: SpatialGrid, nt: usize, t_horizon: f64, lambda: f64) -> Result<Self> {
        if nt < 2 {
            return Err(Error::Parameter(format!("nt must be at least 2, got {nt}")));
        }
        if !(t_horizon > 0.0) {
            return Err(Error::Parameter(format!("t_horizon must be positive, got {t_horizon}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { space, nt, t_horizon, lambda })
    }

    pub fn dt(&self) -> f64 {
        self.t_horizon / (self.nt - 1) as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }
}
