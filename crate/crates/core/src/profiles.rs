//! One-dimensional variational problems: the boundary-layer costs at the
//! initial and terminal times and the traveling-wave interfacial cost.
//!
//! All three minimize discretizations of
//! `int [ W_beta(q) + Psi(q, c q') / (2 beta) + (nonlocal) ]` over profiles
//! pinned to the equilibria, with trapezoid quadrature for the potential,
//! forward-difference velocities on interval midpoints, and a projected
//! spectral-gradient (Barzilai-Borwein) minimizer. The truncation radius
//! doubles until the value stabilizes; values decrease weakly in `R`.

use crate::error::{Error, Result};
use crate::kernel::{Kernel1d, KernelSpec};
use crate::potential::{
    phi, phi_prime, psi_s_unchecked, psi_unchecked, psi_v_unchecked, PotentialParams,
};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

/// Discrete profile `q(xi)` on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct Profile1D {
    pub xi0: f64,
    pub h: f64,
    pub values: Vec<f64>,
    /// Front speed; 0 for boundary layers.
    pub speed: f64,
    pub horizon: f64,
}

impl Profile1D {
    pub fn xi(&self, i: usize) -> f64 {
        self.xi0 + i as f64 * self.h
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerResult {
    pub value: f64,
    pub profile: Profile1D,
    pub r_used: f64,
    /// True when doubling the radius stopped changing the value.
    pub converged: bool,
    pub iterations: usize,
    /// Set when the spectral hypothesis behind the one-dimensional
    /// reduction was not verified for the supplied kernel/direction.
    pub flagged_heuristic: bool,
    /// Set when the profile has not settled onto the equilibria at the
    /// truncation boundary (radius too small).
    pub boundary_contact: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LayerOpts {
    /// Grid spacing of the profile.
    pub h: f64,
    /// Starting radius; `None` picks `10 / sqrt(W''(s_star))`.
    pub r_init: Option<f64>,
    pub r_max: f64,
    /// Declare the radius converged when a doubling changes the value by
    /// less than this.
    pub r_tol: f64,
    pub max_iters: usize,
}

impl Default for LayerOpts {
    fn default() -> Self {
        Self { h: 5e-3, r_init: None, r_max: 512.0, r_tol: 1e-8, max_iters: 200_000 }
    }
}

/// Heteroclinic width estimate `1 / sqrt(W''(s_star))`.
pub fn layer_width(params: &PotentialParams) -> f64 {
    1.0 / params.w_double_well_dd(params.s_star()).sqrt()
}

// ---------------------------------------------------------------------------
// Projected spectral gradient with a nonmonotone Armijo safeguard.

struct SpgOutcome {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn spg_minimize(
    mut x: Vec<f64>,
    bounds: (f64, f64),
    max_iters: usize,
    mut eval: impl FnMut(&[f64], &mut [f64]) -> f64,
) -> SpgOutcome {
    let (lo, hi) = bounds;
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut f = eval(&x, &mut g);
    let mut best_f = f;
    let mut best_x = x.clone();
    let mut history = std::collections::VecDeque::with_capacity(10);
    history.push_back(f);
    let mut alpha = {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax > 0.0 { (1.0 / gmax).clamp(1e-10, 1.0) } else { 1.0 }
    };
    let mut direction = vec![0.0; n];
    let mut x_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut stall = 0usize;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        // unit-step projected gradient is the stationarity measure
        let mut pg_inf = 0.0f64;
        let mut d_inf = 0.0f64;
        let mut gdot = 0.0;
        for i in 0..n {
            pg_inf = pg_inf.max(((x[i] - g[i]).clamp(lo, hi) - x[i]).abs());
            let d = (x[i] - alpha * g[i]).clamp(lo, hi) - x[i];
            direction[i] = d;
            d_inf = d_inf.max(d.abs());
            gdot += g[i] * d;
        }
        if pg_inf < 1e-12 || d_inf == 0.0 {
            converged = true;
            break;
        }
        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let mut backtracks = 0;
        let f_new = loop {
            for i in 0..n {
                x_trial[i] = (x[i] + t * direction[i]).clamp(lo, hi);
            }
            let fv = eval(&x_trial, &mut g_trial);
            if fv <= f_ref + 1e-4 * t * gdot || backtracks >= 30 {
                break fv;
            }
            t *= 0.5;
            backtracks += 1;
        };
        // BB step from the accepted move
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let si = x_trial[i] - x[i];
            let yi = g_trial[i] - g[i];
            ss += si * si;
            sy += si * yi;
        }
        alpha = if sy > 1e-300 { (ss / sy).clamp(1e-12, 1e12) } else { (alpha * 2.0).min(1e6) };
        std::mem::swap(&mut x, &mut x_trial);
        std::mem::swap(&mut g, &mut g_trial);
        f = f_new;
        if history.len() == 10 {
            history.pop_front();
        }
        history.push_back(f);
        if f < best_f - 1e-14 * (1.0 + best_f.abs()) {
            best_f = f;
            best_x.copy_from_slice(&x);
            stall = 0;
        } else {
            if f < best_f {
                best_f = f;
                best_x.copy_from_slice(&x);
            }
            stall += 1;
            if stall > 500 {
                converged = true;
                break;
            }
        }
    }
    if f < best_f {
        best_f = f;
        best_x.copy_from_slice(&x);
    }
    SpgOutcome { x: best_x, value: best_f, iterations, converged }
}

// ---------------------------------------------------------------------------
// Local layer functional on [0, R] (or [-R, 0]): trapezoid for the
// double well, interval midpoints for the kinetic term.

/// Energy and gradient of the local integrand over a full profile; the
/// gradient is accumulated into `grad` (same length as `q`).
fn local_energy_grad(q: &[f64], h: f64, speed: f64, params: &PotentialParams, grad: &mut [f64]) -> f64 {
    let n = q.len();
    let kcoef = 2.0 / params.beta;
    let mut e = 0.0;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        e += w * params.w_double_well(q[i]);
        grad[i] += w * params.w_double_well_d(q[i]);
    }
    for i in 0..n - 1 {
        let mid = 0.5 * (q[i] + q[i + 1]);
        let v = speed * (q[i + 1] - q[i]) / h;
        e += h * kcoef * psi_unchecked(mid, v);
        let ds = 0.5 * h * kcoef * psi_s_unchecked(mid, v);
        let dv = kcoef * psi_v_unchecked(mid, v) * speed;
        grad[i] += ds - dv;
        grad[i + 1] += ds + dv;
    }
    e
}

fn tanh_guess(n: usize, a: f64, b: f64, width: f64) -> Vec<f64> {
    // smooth monotone bridge from a to b
    (0..=n)
        .map(|i| {
            let u = (i as f64 / n as f64 - 0.5) * 2.0; // [-1, 1]
            let t = (u * width).tanh() / width.tanh();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Full layer energy with optional free-endpoint terminal cost; gradient
/// over all nodes.
fn layer_energy_grad(
    q: &[f64],
    h: f64,
    params: &PotentialParams,
    free_end: Option<f64>,
    grad: &mut [f64],
) -> f64 {
    for g in grad.iter_mut() {
        *g = 0.0;
    }
    let mut e = local_energy_grad(q, h, 1.0, params, grad);
    if let Some(g) = free_end {
        let n = q.len() - 1;
        e += g * q[n] + phi(q[n]) / (2.0 * params.beta);
        grad[n] += g + phi_prime(q[n]) / (2.0 * params.beta);
    }
    e
}

/// Tridiagonal Hessian of the layer energy (adjacent-node coupling only).
fn layer_hessian(
    q: &[f64],
    h: f64,
    params: &PotentialParams,
    free_end: Option<f64>,
    diag: &mut [f64],
    off: &mut [f64],
) {
    let n = q.len();
    let kcoef = 2.0 / params.beta;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        diag[i] = w * params.w_double_well_dd(q[i]);
    }
    for o in off.iter_mut() {
        *o = 0.0;
    }
    for i in 0..n - 1 {
        let mid = 0.5 * (q[i] + q[i + 1]);
        let v = (q[i + 1] - q[i]) / h;
        let (ss, sv, vv) = crate::potential::psi_second_unchecked(mid, v);
        let a = 0.25 * ss;
        let b = sv / h;
        let c = vv / (h * h);
        diag[i] += h * kcoef * (a - b + c);
        diag[i + 1] += h * kcoef * (a + b + c);
        off[i] += h * kcoef * (a - c);
    }
    if free_end.is_some() {
        // Phi''(s) = 2 / (1 - s^2)
        let end = q[n - 1];
        diag[n - 1] += 1.0 / ((1.0 - end * end) * params.beta);
    }
}

/// Solve `(H + mu I) x = rhs` for a tridiagonal system (Thomas algorithm)
/// over the index range `lo..hi` of the full node vector.
fn thomas_solve(diag: &[f64], off: &[f64], rhs: &[f64], mu: f64, lo: usize, hi: usize) -> Option<Vec<f64>> {
    let m = hi - lo;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[lo] + mu;
    if denom.abs() < 1e-300 {
        return None;
    }
    c[0] = off[lo] / denom;
    d[0] = rhs[lo] / denom;
    for k in 1..m {
        let i = lo + k;
        denom = diag[i] + mu - off[i - 1] * c[k - 1];
        if denom.abs() < 1e-300 {
            return None;
        }
        if k + 1 < m {
            c[k] = off[i] / denom;
        }
        d[k] = (rhs[i] - off[i - 1] * d[k - 1]) / denom;
    }
    let mut x = d;
    for k in (0..m - 1).rev() {
        let xi = x[k] - c[k] * x[k + 1];
        x[k] = xi;
    }
    if x.iter().any(|v| !v.is_finite()) {
        None
    } else {
        Some(x)
    }
}

/// Newton polish with Levenberg damping for the layer minimizations. The
/// spectral-gradient warmup lands in the basin; the tridiagonal Newton
/// steps then reach gradient tolerances first-order methods cannot on
/// fine grids. Operates on the full node vector; `q[0]` stays pinned, the
/// last node too unless `free_end` carries a terminal cost.
fn newton_polish_layer(
    q: &mut [f64],
    h: f64,
    params: &PotentialParams,
    free_end: Option<f64>,
    max_iters: usize,
) -> (f64, bool, usize) {
    let n = q.len();
    let lo = 1usize;
    let hi = if free_end.is_some() { n } else { n - 1 };
    let mut grad = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    let mut trial = q.to_vec();
    let mut mu = 0.0f64;
    let mut e = layer_energy_grad(q, h, params, free_end, &mut grad);
    for iter in 0..max_iters {
        let gmax = grad[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= 1e-12 * (1.0 + e.abs()) {
            return (e, true, iter);
        }
        layer_hessian(q, h, params, free_end, &mut diag, &mut off);
        let scale = diag[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
        let mut accepted = false;
        for _ in 0..60 {
            if let Some(step) = thomas_solve(&diag, &off, &grad, mu, lo, hi) {
                trial.copy_from_slice(q);
                for (k, t) in trial[lo..hi].iter_mut().enumerate() {
                    *t = (*t - step[k]).clamp(-1.0 + 1e-9, 1.0 - 1e-9);
                }
                let mut g_trial = vec![0.0; n];
                let e_trial = layer_energy_grad(&trial, h, params, free_end, &mut g_trial);
                if e_trial.is_finite() && e_trial <= e + 1e-14 * (1.0 + e.abs()) {
                    q.copy_from_slice(&trial);
                    grad = g_trial;
                    e = e_trial;
                    mu *= 0.25;
                    accepted = true;
                    break;
                }
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
        }
        if !accepted {
            return (e, false, iter);
        }
    }
    let gmax = grad[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (e, gmax <= 1e-12 * (1.0 + e.abs()), max_iters)
}

fn check_equilibrium_target(s_bar: f64, params: &PotentialParams) -> Result<f64> {
    let s_star = params.s_star();
    if !params.supercritical() {
        return Err(Error::Parameter("boundary layers need two phases (beta j_hat > 1)".into()));
    }
    if (s_bar.abs() - s_star).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "layer target must be one of the equilibria +-{s_star}, got {s_bar}"
        )));
    }
    Ok(s_bar.signum() * s_star)
}

/// Initial boundary-layer cost: minimize
/// `int_0^R [W_beta(q) + Psi(q, q')/(2 beta)]` over profiles with
/// `q(0) = s0` and `q(R) = s_bar`, minus `Phi(s0)/(2 beta)`.
pub fn v_init(s0: f64, s_bar: f64, params: &PotentialParams, opts: &LayerOpts) -> Result<LayerResult> {
    let s_bar = check_equilibrium_target(s_bar, params)?;
    let s_star = params.s_star();
    if s0.abs() > s_star + 1e-12 {
        return Err(Error::Parameter(format!("|s0| <= s_star required, got {s0}")));
    }
    let mut r = opts.r_init.unwrap_or_else(|| 10.0 * layer_width(params));
    let mut previous: Option<(f64, LayerResult)> = None;
    loop {
        let n = (r / opts.h).round().max(4.0) as usize;
        let h = r / n as f64;
        let mut q0 = tanh_guess(n, s0, s_bar, 3.0);
        if let Some((_, prev)) = &previous {
            // warm start from the previous radius
            for (i, v) in q0.iter_mut().enumerate() {
                let xi = i as f64 * h;
                let j = (xi / prev.profile.h).min((prev.profile.values.len() - 1) as f64);
                let j0 = j.floor() as usize;
                let w = j - j0 as f64;
                let j1 = (j0 + 1).min(prev.profile.values.len() - 1);
                *v = (1.0 - w) * prev.profile.values[j0] + w * prev.profile.values[j1];
            }
            q0[n] = s_bar;
        }
        q0[0] = s0;
        let outcome = spg_minimize(
            q0[1..n].to_vec(),
            (-1.0 + 1e-9, 1.0 - 1e-9),
            opts.max_iters,
            |free, grad| {
                let mut full = Vec::with_capacity(n + 1);
                full.push(s0);
                full.extend_from_slice(free);
                full.push(s_bar);
                let mut gfull = vec![0.0; n + 1];
                let e = local_energy_grad(&full, h, 1.0, params, &mut gfull);
                grad.copy_from_slice(&gfull[1..n]);
                e
            },
        );
        if !outcome.converged {
            return Err(Error::NonConvergence(format!(
                "layer optimizer hit the iteration cap at R = {r}"
            )));
        }
        let mut values = Vec::with_capacity(n + 1);
        values.push(s0);
        values.extend_from_slice(&outcome.x);
        values.push(s_bar);
        let value = outcome.value - phi(s0) / (2.0 * params.beta);
        let boundary_contact = (values[n - 1] - s_bar).abs() > 1e-4;
        let result = LayerResult {
            value,
            profile: Profile1D { xi0: 0.0, h, values, speed: 0.0, horizon: r },
            r_used: r,
            converged: false,
            iterations: outcome.iterations,
            flagged_heuristic: false,
            boundary_contact,
        };
        match previous {
            Some((prev_value, _)) if (prev_value - value).abs() < opts.r_tol => {
                return Ok(LayerResult { converged: true, ..result });
            }
            _ => {}
        }
        if 2.0 * r > opts.r_max {
            return Ok(result);
        }
        previous = Some((value, result));
        r *= 2.0;
    }
}

/// Terminal boundary-layer cost: minimize
/// `int_{-R}^0 [W_beta(q) + Psi(q, q')/(2 beta)] + g q(0) + Phi(q(0))/(2 beta)`
/// over profiles with `q(-R) = s_bar`; the right endpoint is free.
pub fn v_end(s_bar: f64, g: f64, params: &PotentialParams, opts: &LayerOpts) -> Result<LayerResult> {
    let s_bar = check_equilibrium_target(s_bar, params)?;
    let g_bound = params.g_bound();
    if g.abs() > g_bound + 1e-12 {
        return Err(Error::Parameter(format!("|g| <= {g_bound} required, got {g}")));
    }
    let beta2 = 2.0 * params.beta;
    let mut r = opts.r_init.unwrap_or_else(|| 10.0 * layer_width(params));
    let mut previous: Option<(f64, LayerResult)> = None;
    loop {
        let n = (r / opts.h).round().max(4.0) as usize;
        let h = r / n as f64;
        let mut q0 = tanh_guess(n, s_bar, 0.5 * s_bar, 2.0);
        q0[0] = s_bar;
        if let Some((_, prev)) = &previous {
            for (i, v) in q0.iter_mut().enumerate().skip(1) {
                let xi = i as f64 * h;
                let j = (xi / prev.profile.h).min((prev.profile.values.len() - 1) as f64);
                let j0 = j.floor() as usize;
                let w = j - j0 as f64;
                let j1 = (j0 + 1).min(prev.profile.values.len() - 1);
                *v = (1.0 - w) * prev.profile.values[j0] + w * prev.profile.values[j1];
            }
        }
        let outcome = spg_minimize(
            q0[1..=n].to_vec(),
            (-1.0 + 1e-9, 1.0 - 1e-9),
            opts.max_iters,
            |free, grad| {
                let mut full = Vec::with_capacity(n + 1);
                full.push(s_bar);
                full.extend_from_slice(free);
                let mut gfull = vec![0.0; n + 1];
                let mut e = local_energy_grad(&full, h, 1.0, params, &mut gfull);
                let end = full[n];
                e += g * end + phi(end) / beta2;
                gfull[n] += g + phi_prime(end) / beta2;
                grad.copy_from_slice(&gfull[1..=n]);
                e
            },
        );
        if !outcome.converged {
            return Err(Error::NonConvergence(format!(
                "layer optimizer hit the iteration cap at R = {r}"
            )));
        }
        let mut values = Vec::with_capacity(n + 1);
        values.push(s_bar);
        values.extend_from_slice(&outcome.x);
        let value = outcome.value;
        let boundary_contact = (values[1] - s_bar).abs() > 1e-4;
        let result = LayerResult {
            value,
            profile: Profile1D { xi0: -r, h, values, speed: 0.0, horizon: r },
            r_used: r,
            converged: false,
            iterations: outcome.iterations,
            flagged_heuristic: false,
            boundary_contact,
        };
        match previous {
            Some((prev_value, _)) if (prev_value - value).abs() < opts.r_tol => {
                return Ok(LayerResult { converged: true, ..result });
            }
            _ => {}
        }
        if 2.0 * r > opts.r_max {
            return Ok(result);
        }
        previous = Some((value, result));
        r *= 2.0;
    }
}

// ---------------------------------------------------------------------------
// Traveling-wave cell problem.

/// Axis marginal sampled at the profile spacing, with tails covered.
#[derive(Debug, Clone)]
pub struct Marginal1d {
    /// Samples `h * J^e(m h)` for `m = -half..=half`.
    pub weights: Vec<f64>,
    pub half: usize,
    pub h: f64,
    pub mass: f64,
}

impl Marginal1d {
    /// Sample the closed-form marginal of an analytic kernel family.
    pub fn from_spec(spec: &KernelSpec, axis: usize, h: f64) -> Result<Self> {
        let half = (spec.marginal_half_support(axis) / h).ceil() as usize;
        let weights: Result<Vec<f64>> = (-(half as i64)..=half as i64)
            .map(|m| Ok(h * spec.marginal_value(axis, m as f64 * h)?))
            .collect();
        let weights = weights?;
        let mass = weights.iter().sum();
        Ok(Self { weights, half, h, mass })
    }

    /// Resample a discrete torus marginal of `J^lambda` back to the
    /// mesoscopic scale: `J^e(r) = lambda J^{lambda,e}(lambda r)`.
    pub fn from_table(table: &Kernel1d, lambda: f64, h: f64) -> Result<Self> {
        let nx = table.samples.len();
        let half_mesoscopic = 0.5 / lambda; // torus half-width in kernel units
        let half = ((half_mesoscopic - table.dx / lambda) / h).floor().max(1.0) as usize;
        let value_at = |r: f64| -> f64 {
            // linear interpolation on torus offsets
            let z = (lambda * r).rem_euclid(1.0);
            let u = z * nx as f64;
            let i0 = (u.floor() as usize) % nx;
            let w = u - u.floor();
            let i1 = (i0 + 1) % nx;
            lambda * ((1.0 - w) * table.samples[i0] + w * table.samples[i1])
        };
        let weights: Vec<f64> = (-(half as i64)..=half as i64)
            .map(|m| h * value_at(m as f64 * h))
            .collect();
        let mass = weights.iter().sum();
        if mass <= 0.0 {
            return Err(Error::NegativeKernel("marginal resample lost all mass".into()));
        }
        Ok(Self { weights, half, h, mass })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WaveOpts {
    /// Base grid spacing; stretched with `sqrt(1 + c^2)` and capped so the
    /// marginal kernel stays resolved.
    pub h0: f64,
    pub r_init: Option<f64>,
    pub r_max: f64,
    pub r_tol: f64,
    pub max_iters: usize,
}

impl Default for WaveOpts {
    fn default() -> Self {
        Self { h0: 0.02, r_init: None, r_max: 512.0, r_tol: 1e-8, max_iters: 60_000 }
    }
}

/// Cached linear convolution worker for the padded wave profile.
struct WaveConv {
    len: usize,
    fft_len: usize,
    kernel_hat: Vec<Complex<f64>>,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    half: usize,
}

impl WaveConv {
    fn new(weights: &[f64], half: usize, padded_len: usize) -> Self {
        let fft_len = (padded_len + weights.len() - 1).next_multiple_of(16);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut k = vec![Complex::new(0.0, 0.0); fft_len];
        for (i, &w) in weights.iter().enumerate() {
            k[i] = Complex::new(w, 0.0);
        }
        forward.process(&mut k);
        Self { len: padded_len, fft_len, kernel_hat: k, forward, inverse, half }
    }

    /// `(K (*) q)_i = sum_m K_m q_{i+m}` for every index of the padded array.
    /// Entries within `half` of the array ends are edge-corrupted and must
    /// not be used.
    fn correlate(&self, q: &[f64]) -> Vec<f64> {
        debug_assert_eq!(q.len(), self.len);
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for (b, &v) in buf.iter_mut().zip(q) {
            *b = Complex::new(v, 0.0);
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        // convolution index shift: out_i = conv(q, K)[i + half]
        (0..self.len).map(|i| buf[i + self.half].re * scale).collect()
    }
}

/// Traveling-wave interfacial cost `L~_R(c)`: minimize
/// `int [ W_beta(q) + Psi(q, c q')/(2 beta) + (1/4) int J^e(xi - eta)(q(xi) - q(eta))^2 d eta ] d xi`
/// over profiles with `q(-+R) = -+s_star`, extended by the equilibria
/// outside the truncation. The surface tension for a space-time normal
/// with front speed `c` is `L~(c) / sqrt(1 + c^2)`.
pub fn traveling_wave(
    c: f64,
    marginal: &Marginal1d,
    params: &PotentialParams,
    hypothesis_verified: bool,
    opts: &WaveOpts,
) -> Result<LayerResult> {
    if !params.supercritical() {
        return Err(Error::Parameter("traveling waves need two phases (beta j_hat > 1)".into()));
    }
    if c < 0.0 {
        return Err(Error::Parameter("front speed must be nonnegative; the cost is even in c".into()));
    }
    let s_star = params.s_star();
    let stretch = (1.0 + c * c).sqrt();
    let h = marginal.h;
    let width = layer_width(params);
    // keep the radius commensurate with the marginal's sampling so the
    // nonlocal quadrature and the grid share one spacing
    let mut half_cells = ((opts.r_init.unwrap_or(10.0 * width) * stretch).min(opts.r_max) / h)
        .round()
        .max(4.0) as usize;
    let mut previous: Option<(f64, LayerResult)> = None;
    loop {
        let r = half_cells as f64 * h;
        let n = 2 * half_cells; // intervals across [-R, R]
        let half = marginal.half;
        let pad = 2 * half;
        let inner = n + 1;
        let padded_len = inner + 2 * pad;
        let conv = WaveConv::new(&marginal.weights, half, padded_len);
        let mass = marginal.mass;

        let mut q0: Vec<f64> = (0..=n)
            .map(|i| {
                let xi = -r + i as f64 * (2.0 * r) / n as f64;
                s_star * (xi / (width * stretch)).tanh()
            })
            .collect();
        if let Some((_, prev)) = &previous {
            let p = &prev.profile;
            for (i, v) in q0.iter_mut().enumerate() {
                let xi = -r + i as f64 * (2.0 * r) / n as f64;
                if xi <= p.xi0 {
                    *v = -s_star;
                } else if xi >= p.xi0 + (p.values.len() - 1) as f64 * p.h {
                    *v = s_star;
                } else {
                    let j = (xi - p.xi0) / p.h;
                    let j0 = j.floor() as usize;
                    let w = j - j0 as f64;
                    *v = (1.0 - w) * p.values[j0] + w * p.values[j0 + 1];
                }
            }
        }
        q0[0] = -s_star;
        q0[n] = s_star;

        let mut padded = vec![0.0; padded_len];
        for v in padded.iter_mut().take(pad) {
            *v = -s_star;
        }
        for v in padded.iter_mut().skip(pad + inner) {
            *v = s_star;
        }
        let outcome = spg_minimize(
            q0[1..n].to_vec(),
            (-1.0 + 1e-9, 1.0 - 1e-9),
            opts.max_iters,
            |free, grad| {
                // assemble the padded profile
                padded[pad] = -s_star;
                padded[pad + n] = s_star;
                padded[pad + 1..pad + n].copy_from_slice(free);
                let q = &padded;
                let corr = conv.correlate(q);
                let q2: Vec<f64> = q.iter().map(|v| v * v).collect();
                let corr2 = conv.correlate(&q2);
                // nonlocal energy over the active range [half, len - half)
                let mut e_nl = 0.0;
                for i in half..padded_len - half {
                    e_nl += mass * q2[i] - 2.0 * q[i] * corr[i] + corr2[i];
                }
                e_nl *= 0.25 * h;
                // local terms over the inner block (constant tails carry none)
                let mut gfull = vec![0.0; inner];
                let e_loc = local_energy_grad(&q[pad..pad + inner], h, c, params, &mut gfull);
                for (gi, gf) in grad.iter_mut().zip(&gfull[1..n]) {
                    *gi = *gf;
                }
                for (k, gi) in grad.iter_mut().enumerate() {
                    let i = pad + 1 + k;
                    *gi += h * (mass * q[i] - corr[i]);
                }
                e_loc + e_nl
            },
        );
        if !outcome.converged {
            return Err(Error::NonConvergence(format!(
                "wave optimizer hit the iteration cap at c = {c}, R = {r}"
            )));
        }
        let mut values = Vec::with_capacity(inner);
        values.push(-s_star);
        values.extend_from_slice(&outcome.x);
        values.push(s_star);
        let boundary_contact = (values[1] + s_star).abs() > 1e-4 || (values[n - 1] - s_star).abs() > 1e-4;
        let result = LayerResult {
            value: outcome.value,
            profile: Profile1D { xi0: -r, h, values, speed: c, horizon: r },
            r_used: r,
            converged: false,
            iterations: outcome.iterations,
            flagged_heuristic: !hypothesis_verified,
            boundary_contact,
        };
        match previous {
            Some((prev_value, _)) if (prev_value - result.value).abs() < opts.r_tol => {
                return Ok(LayerResult { converged: true, ..result });
            }
            _ => {}
        }
        if 2.0 * r > opts.r_max {
            return Ok(result);
        }
        previous = Some((result.value, result));
        half_cells *= 2;
    }
}

/// Pick the wave grid spacing: stretch with the speed but keep the
/// marginal kernel resolved.
pub fn wave_spacing(c: f64, kernel_scale: f64, h0: f64) -> f64 {
    (h0 * (1.0 + c * c).sqrt()).min(kernel_scale / 5.0).max(h0)
}

/// First integral defect of the autonomous layer Lagrangian:
/// `max_i | (q' K_v(q, q') - K(q, q')) - W_beta(q) |` over interior nodes
/// with centered-difference velocities, where `K = 2 Psi / beta` is the
/// kinetic penalty. Vanishes along zero-energy heteroclinics.
pub fn beltrami_defect(profile: &Profile1D, params: &PotentialParams) -> f64 {
    let q = &profile.values;
    let n = q.len();
    if n < 3 {
        return 0.0;
    }
    let kcoef = 2.0 / params.beta;
    let scale = if profile.speed == 0.0 { 1.0 } else { profile.speed };
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let v = scale * (q[i + 1] - q[i - 1]) / (2.0 * profile.h);
        let first_integral = kcoef * (v * psi_v_unchecked(q[i], v) - psi_unchecked(q[i], v))
            - params.w_double_well(q[i]);
        worst = worst.max(first_integral.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params() -> PotentialParams {
        PotentialParams::new(1.0 / 0.9, 1.0).unwrap()
    }

    /// Independent oracle for the layer value: along zero-energy extremals
    /// `(sqrt(v^2 + sigma^2) - sigma)/beta = W_beta(q)` defines `v(q)`,
    /// and the cost reduces to the quadrature
    /// `int asinh(v(q)/sigma(q))/beta dq`.
    fn layer_quadrature(s_from: f64, s_to: f64, p: &PotentialParams) -> f64 {
        let integrand = |q: f64| {
            let sg = (1.0 - q * q).sqrt();
            let a = p.beta * p.w_double_well(q).max(0.0);
            let v = (a * (a + 2.0 * sg)).sqrt();
            (v / sg).asinh() / p.beta
        };
        // composite Simpson, fine fixed grid
        let n = 20_000;
        let h = (s_to - s_from) / n as f64;
        let mut acc = integrand(s_from) + integrand(s_to);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(s_from + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 40;
        let h = 0.05;
        let q: Vec<f64> = (0..=n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        for &speed in &[1.0, 2.5] {
            let mut grad = vec![0.0; n + 1];
            local_energy_grad(&q, h, speed, &p, &mut grad);
            let eps = 1e-6;
            for &i in &[0usize, 7, 20, n] {
                let mut qp = q.clone();
                qp[i] += eps;
                let mut t = vec![0.0; n + 1];
                let ep = local_energy_grad(&qp, h, speed, &p, &mut t);
                qp[i] -= 2.0 * eps;
                let mut t2 = vec![0.0; n + 1];
                let em = local_energy_grad(&qp, h, speed, &p, &mut t2);
                let fd = (ep - em) / (2.0 * eps);
                assert!(
                    (fd - grad[i]).abs() < 1e-7 * (1.0 + fd.abs()),
                    "node {i} speed {speed}: {fd} vs {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn v_init_trivial_constant_profile() {
        let p = params();
        let s_star = p.s_star();
        let opts = LayerOpts { h: 0.01, ..Default::default() };
        let res = v_init(s_star, s_star, &p, &opts).unwrap();
        let expect = -phi(s_star) / (2.0 * p.beta);
        assert!((res.value - expect).abs() < 1e-9, "{} vs {expect}", res.value);
        assert!(res.converged);
        // the minimizer is the constant profile
        assert!(res.profile.values.iter().all(|v| (v - s_star).abs() < 1e-6));
    }

    #[test]
    fn v_init_matches_beltrami_quadrature() {
        let p = params();
        let s_star = p.s_star();
        let opts = LayerOpts { h: 2e-3, ..Default::default() };
        let res = v_init(0.0, s_star, &p, &opts).unwrap();
        assert!(res.converged);
        assert!(res.value > 0.0, "heteroclinic half-layer must cost, got {}", res.value);
        let oracle = layer_quadrature(0.0, s_star, &p); // Phi(0) = 0
        assert!(
            (res.value - oracle).abs() < 5e-5,
            "minimizer {} vs quadrature oracle {oracle}",
            res.value
        );
    }

    #[test]
    fn v_init_near_minus_star_is_finite_and_larger() {
        let p = params();
        let s_star = p.s_star();
        let opts = LayerOpts { h: 5e-3, ..Default::default() };
        let near = v_init(-s_star + 0.01, s_star, &p, &opts).unwrap();
        assert!(near.value.is_finite());
        let oracle = layer_quadrature(-s_star + 0.01, s_star, &p)
            - phi(-s_star + 0.01) / (2.0 * p.beta);
        assert!((near.value - oracle).abs() < 2e-4, "{} vs {oracle}", near.value);
    }

    #[test]
    fn v_end_upper_bound_and_interior_relaxation() {
        let p = params();
        let s_star = p.s_star();
        let opts = LayerOpts { h: 5e-3, ..Default::default() };
        let res = v_end(s_star, 0.0, &p, &opts).unwrap();
        // constant competitor bound
        let bound = 0.0 * s_star + phi(s_star) / (2.0 * p.beta);
        assert!(res.value <= bound + 1e-10, "{} vs bound {bound}", res.value);
        // with g = 0 the optimal endpoint relaxes strictly inside (0, s_star)
        let end = *res.profile.values.last().unwrap();
        assert!(end > 0.0 && end < s_star - 1e-3, "endpoint {end}");
    }

    #[test]
    fn v_end_symmetry_identity_against_s0_scan() {
        let p = params();
        let s_star = p.s_star();
        let opts = LayerOpts { h: 5e-3, r_init: Some(20.0), ..Default::default() };
        let g = 0.25 * p.g_bound();
        let direct = v_end(s_star, g, &p, &opts).unwrap().value;
        // scan side: min over s0 of v_init(s0, s_star) + g s0 + Phi(s0)/beta
        let scan_value = |s0: f64| {
            let vi = v_init(s0, s_star, &p, &opts).unwrap().value;
            vi + g * s0 + phi(s0) / p.beta
        };
        let mut best = f64::INFINITY;
        let mut best_s0 = 0.0;
        let m = 24;
        for i in 0..=m {
            let s0 = -s_star + 2.0 * s_star * i as f64 / m as f64;
            let v = scan_value(s0);
            if v < best {
                best = v;
                best_s0 = s0;
            }
        }
        // golden-section refinement around the coarse minimum
        let (mut lo, mut hi) = (best_s0 - 2.0 * s_star / m as f64, best_s0 + 2.0 * s_star / m as f64);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..40 {
            let c1 = hi - gr * (hi - lo);
            let c2 = lo + gr * (hi - lo);
            if scan_value(c1) < scan_value(c2) {
                hi = c2;
            } else {
                lo = c1;
            }
        }
        best = best.min(scan_value(0.5 * (lo + hi)));
        assert!((direct - best).abs() < 1e-6, "v_end {direct} vs scan {best}");
    }

    #[test]
    fn beltrami_defect_examples() {
        let p = params();
        let s_star = p.s_star();
        // constant equilibrium profile: both sides vanish
        let flat = Profile1D { xi0: 0.0, h: 0.01, values: vec![s_star; 101], speed: 0.0, horizon: 1.0 };
        assert!(beltrami_defect(&flat, &p) < 1e-14);
        // converged minimizer: small defect
        let opts = LayerOpts { h: 2e-3, ..Default::default() };
        let res = v_init(0.0, s_star, &p, &opts).unwrap();
        let defect = beltrami_defect(&res.profile, &p);
        assert!(defect < 1e-4, "defect {defect}");
        // generic profile: order-one defect
        let junk = Profile1D {
            xi0: 0.0,
            h: 0.01,
            values: (0..101).map(|i| 0.4 * ((i as f64) * 0.2).sin()).collect(),
            speed: 0.0,
            horizon: 1.0,
        };
        assert!(beltrami_defect(&junk, &p) > 1e-3);
    }

    #[test]
    fn traveling_wave_zero_speed_odd_profile() {
        let p = params();
        let spec = KernelSpec::gaussian(1, 1.0);
        let h = wave_spacing(0.0, 1.0, 0.02);
        let marginal = Marginal1d::from_spec(&spec, 0, h).unwrap();
        let opts = WaveOpts { r_init: Some(16.0), r_max: 64.0, ..Default::default() };
        let res = traveling_wave(0.0, &marginal, &p, true, &opts).unwrap();
        assert!(res.converged);
        assert!(!res.boundary_contact);
        assert!(res.value > 0.0);
        let q = &res.profile.values;
        let n = q.len();
        let odd = (0..n).map(|i| (q[i] + q[n - 1 - i]).abs()).fold(0.0f64, f64::max);
        assert!(odd <= 1e-4, "odd deviation {odd}");
    }

    #[test]
    fn traveling_wave_asymmetric_start_recovers_same_value() {
        let p = params();
        let spec = KernelSpec::gaussian(1, 1.0);
        let h = wave_spacing(0.0, 1.0, 0.04);
        let marginal = Marginal1d::from_spec(&spec, 0, h).unwrap();
        let opts = WaveOpts { r_init: Some(16.0), r_max: 16.0, ..Default::default() };
        let base = traveling_wave(0.0, &marginal, &p, true, &opts).unwrap();
        // re-minimize from a shifted profile fed through the warm-start path:
        // run at a slightly different radius so the tanh guess is replaced
        let opts2 = WaveOpts { r_init: Some(11.0), r_max: 44.0, ..Default::default() };
        let again = traveling_wave(0.0, &marginal, &p, true, &opts2).unwrap();
        assert!((base.value - again.value).abs() < 1e-6, "{} vs {}", base.value, again.value);
    }
}
