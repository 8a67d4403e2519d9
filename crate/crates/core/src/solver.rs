//! Damped forward-backward sweep for the macroscopic optimality system
//!
//! ```text
//!   lambda d_tau s = sinh(beta p) - s cosh(beta p),      s(0) = s0
//!  -lambda d_tau p = -sinh(beta p)/beta + J^lambda * s,  p(T) = -g
//! ```
//!
//! The forward equation is linear in `s` given `p`; an exponential
//! integrator makes the stiff `1/lambda` relaxation unconditionally
//! stable. The backward step treats the `sinh` term implicitly (scalar
//! Newton per grid point, monotone equation) with the spatial coupling
//! held explicit. The outer iteration damps the spin update.

use crate::energy::{cost_decomposed, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::fields::{BoundaryData, CostateField, SpinField};
use crate::grid::GridGeometry;
use crate::kernel::InteractionKernel;
use crate::potential::PotentialParams;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StiffMode {
    ExponentialIntegrator,
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Damping of the outer spin update, in `(0, 1]`.
    pub theta: f64,
    pub max_iters: usize,
    /// Convergence threshold on the relative L1 movement of `s` between
    /// outer iterations.
    pub tol_l1: f64,
    pub stiff_mode: StiffMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_iters: 2000,
            tol_l1: 1e-7,
            stiff_mode: StiffMode::ExponentialIntegrator,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Parameter(format!("theta must be in (0,1], got {}", self.theta)));
        }
        if !(self.tol_l1 > 0.0) {
            return Err(Error::Parameter(format!("tol_l1 must be positive, got {}", self.tol_l1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Last relative L1 movement of the spin iterate.
    pub final_residual: f64,
    pub converged: bool,
    pub energy: EnergyBreakdown,
    /// Discrete defect of both equations for the returned pair.
    pub equation_residual: f64,
    /// Not serialized: wall time varies between runs while the numerical
    /// outputs must be byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Integrate the costate backward from `p(T) = -g` given the spin field.
/// Each step solves `lambda q + dt sinh(beta q)/beta = lambda p_{n+1} +
/// dt (J * s_n)` per grid point by Newton; the left side is strictly
/// increasing in `q`, so the iteration is safe.
pub fn backward_sweep(
    s: &SpinField,
    g: &[f64],
    kernel: &InteractionKernel,
    params: &PotentialParams,
) -> Result<CostateField> {
    let geom = s.geometry;
    let nsp = geom.space.len();
    if g.len() != nsp {
        return Err(Error::ShapeMismatch("terminal data vs grid".into()));
    }
    let dt = geom.dt();
    let lam = geom.lambda;
    let beta = params.beta;
    let mut p = CostateField::zeros(geom);
    for (out, gv) in p.slice_mut(geom.nt - 1).iter_mut().zip(g) {
        *out = -gv;
    }
    for n in (0..geom.nt - 1).rev() {
        let conv = kernel.convolve(s.slice(n))?;
        let nsl = geom.nt; // for error messages
        let (head, tail) = p.values.split_at_mut((n + 1) * nsp);
        let p_next = &tail[..nsp];
        let p_here = &mut head[n * nsp..(n + 1) * nsp];
        for z in 0..nsp {
            let rhs = lam * p_next[z] + dt * conv[z];
            let mut q = p_next[z];
            let mut ok = false;
            for _ in 0..60 {
                let f = lam * q + dt / beta * (beta * q).sinh() - rhs;
                if f.abs() <= 1e-13 * (1.0 + rhs.abs()) {
                    ok = true;
                    break;
                }
                q -= f / (lam + dt * (beta * q).cosh());
            }
            if !ok {
                return Err(Error::NonConvergence(format!(
                    "backward Newton stalled at time step {n}/{nsl}, cell {z}"
                )));
            }
            p_here[z] = q;
        }
    }
    Ok(p)
}

/// Integrate the spin forward from `s(0) = s0` given the costate. The
/// pointwise ODE is linear in `s`; both stiff modes are unconditionally
/// stable and keep `|s| <= max(|s0|, 1)`.
pub fn forward_sweep(
    p: &CostateField,
    s0: &[f64],
    params: &PotentialParams,
    mode: StiffMode,
) -> Result<SpinField> {
    let geom = p.geometry;
    let nsp = geom.space.len();
    if s0.len() != nsp {
        return Err(Error::ShapeMismatch("initial data vs grid".into()));
    }
    let dt = geom.dt();
    let lam = geom.lambda;
    let beta = params.beta;
    let mut s = SpinField::zeros(geom);
    s.slice_mut(0).copy_from_slice(s0);
    for n in 0..geom.nt - 1 {
        let p_here = p.slice(n);
        let (head, tail) = s.values.split_at_mut((n + 1) * nsp);
        let s_here = &head[n * nsp..(n + 1) * nsp];
        let s_next = &mut tail[..nsp];
        match mode {
            StiffMode::ExponentialIntegrator => {
                for z in 0..nsp {
                    let bp = beta * p_here[z];
                    let decay = (-dt * bp.cosh() / lam).exp();
                    s_next[z] = decay * s_here[z] + (1.0 - decay) * bp.tanh();
                }
            }
            StiffMode::SemiImplicit => {
                for z in 0..nsp {
                    let bp = beta * p_here[z];
                    let a = dt / lam;
                    s_next[z] = (s_here[z] + a * bp.sinh()) / (1.0 + a * bp.cosh());
                }
            }
        }
    }
    Ok(s)
}

/// Discrete defect of both equations under the solver stencils, as the
/// max of the two L1 means (per node, in update form). Zero for exact
/// discrete solutions.
pub fn residual(
    s: &SpinField,
    p: &CostateField,
    kernel: &InteractionKernel,
    params: &PotentialParams,
) -> Result<f64> {
    let geom = s.geometry;
    if p.geometry != geom {
        return Err(Error::ShapeMismatch("spin/costate geometry".into()));
    }
    let nsp = geom.space.len();
    let dt = geom.dt();
    let lam = geom.lambda;
    let beta = params.beta;
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for n in 0..geom.nt - 1 {
        let (s_here, s_next) = (s.slice(n), s.slice(n + 1));
        let (p_here, p_next) = (p.slice(n), p.slice(n + 1));
        let conv = kernel.convolve(s_here)?;
        for z in 0..nsp {
            let bp = beta * p_here[z];
            let decay = (-dt * bp.cosh() / lam).exp();
            fwd += (s_next[z] - decay * s_here[z] - (1.0 - decay) * bp.tanh()).abs();
            bwd += ((lam * (p_here[z] - p_next[z]) + dt * (bp.sinh() / beta - conv[z])) / lam).abs();
        }
    }
    let denom = ((geom.nt - 1) * nsp) as f64;
    Ok((fwd / denom).max(bwd / denom))
}

/// Forward-backward iteration with damping: sweep the costate backward
/// for the current spin iterate, the spin forward for that costate, then
/// blend `s <- theta s_new + (1 - theta) s`. Stops when the relative L1
/// movement drops below `tol_l1`.
pub fn solve(
    bdata: &BoundaryData,
    kernel: &InteractionKernel,
    params: &PotentialParams,
    config: &SolverConfig,
    geometry: GridGeometry,
) -> Result<(SpinField, CostateField, SolveReport)> {
    solve_with_progress(bdata, kernel, params, config, geometry, |_, _| {})
}

pub fn solve_with_progress(
    bdata: &BoundaryData,
    kernel: &InteractionKernel,
    params: &PotentialParams,
    config: &SolverConfig,
    geometry: GridGeometry,
    mut on_iter: impl FnMut(usize, f64),
) -> Result<(SpinField, CostateField, SolveReport)> {
    config.validate()?;
    let start = Instant::now();
    let mut s = SpinField::broadcast(geometry, &bdata.s0)?;
    let mut converged = false;
    let mut movement = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let p = backward_sweep(&s, &bdata.g, kernel, params)?;
        let s_new = forward_sweep(&p, &bdata.s0, params, config.stiff_mode)?;
        let mut abs_change = 0.0;
        let mut abs_scale = 0.0;
        for (old, new) in s.values.iter_mut().zip(&s_new.values) {
            let blended = config.theta * new + (1.0 - config.theta) * *old;
            abs_change += (blended - *old).abs();
            abs_scale += old.abs();
            *old = blended;
        }
        let n = s.values.len() as f64;
        movement = (abs_change / n) / (1.0 + abs_scale / n);
        on_iter(iterations, movement);
        if movement <= config.tol_l1 {
            converged = true;
            break;
        }
    }
    let p = backward_sweep(&s, &bdata.g, kernel, params)?;
    let equation_residual = residual(&s, &p, kernel, params)?;
    let energy = cost_decomposed(&s, bdata, kernel, params)?;
    let report = SolveReport {
        iterations,
        final_residual: movement,
        converged,
        energy,
        equation_residual,
        wall_time: start.elapsed(),
    };
    Ok((s, p, report))
}
