//! Interaction kernels `J`, their rescalings `J^lambda`, axis marginals
//! `J^e`, and fast periodic convolution on the unit torus.
//!
//! The discrete kernel mass (sum of periodized samples times cell volume)
//! is the `j_hat` used by every downstream constant, so that constant
//! fields are exactly zero-energy on the grid.

use crate::error::{Error, Result};
use crate::fft::FftEngine;
use crate::grid::SpatialGrid;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// Product Gaussian with standard deviation `sigma` per axis.
    Gaussian { sigma: f64 },
    /// Normalized indicator of the ball of radius `radius`.
    TopHat { radius: f64 },
    /// User-supplied `J^lambda` samples on the target grid (row-major).
    CustomTable { samples: Vec<f64> },
}

/// Description of the interaction kernel `J` before rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    pub dimension: usize,
    /// Optional per-axis scalings applied to the kernel argument.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anisotropy: Option<Vec<f64>>,
    /// Total mass the analytic families are normalized to.
    #[serde(default = "default_mass")]
    pub mass: f64,
}

fn default_mass() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn gaussian(dimension: usize, sigma: f64) -> Self {
        Self { family: KernelFamily::Gaussian { sigma }, dimension, anisotropy: None, mass: 1.0 }
    }

    pub fn top_hat(dimension: usize, radius: f64) -> Self {
        Self { family: KernelFamily::TopHat { radius }, dimension, anisotropy: None, mass: 1.0 }
    }

    fn axis_scale(&self, axis: usize) -> f64 {
        self.anisotropy.as_ref().map_or(1.0, |a| a[axis])
    }

    /// Continuum evaluation of `J` at mesoscopic offset `x`.
    fn eval(&self, x: &[f64]) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { sigma } => {
                let mut val = self.mass;
                for (k, &xk) in x.iter().enumerate() {
                    let sg = sigma * self.axis_scale(k);
                    val *= (-0.5 * (xk / sg) * (xk / sg)).exp() / ((2.0 * PI).sqrt() * sg);
                }
                val
            }
            KernelFamily::TopHat { radius } => {
                let mut r2 = 0.0;
                let mut vol = match x.len() {
                    1 => 2.0 * radius,
                    2 => PI * radius * radius,
                    _ => unreachable!(),
                };
                for (k, &xk) in x.iter().enumerate() {
                    let a = self.axis_scale(k);
                    r2 += (xk / a) * (xk / a);
                    vol *= a;
                }
                if r2 <= radius * radius {
                    self.mass / vol
                } else {
                    0.0
                }
            }
            KernelFamily::CustomTable { .. } => {
                panic!("custom tables have no continuum form")
            }
        }
    }

    /// Effective half-support of `J^lambda` along `axis`, used for
    /// periodization image counts and resolution checks.
    fn half_support(&self, axis: usize, lambda: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { sigma } => 9.0 * lambda * sigma * self.axis_scale(axis),
            KernelFamily::TopHat { radius } => lambda * radius * self.axis_scale(axis),
            KernelFamily::CustomTable { .. } => 0.5,
        }
    }

    /// Closed-form axis marginal `J^e(r)` of the mesoscopic kernel, used by
    /// the one-dimensional cell problems. For custom tables see
    /// [`InteractionKernel::marginal_1d`].
    pub fn marginal_value(&self, axis: usize, r: f64) -> Result<f64> {
        match &self.family {
            KernelFamily::Gaussian { sigma } => {
                let sg = sigma * self.axis_scale(axis);
                Ok(self.mass * (-0.5 * (r / sg) * (r / sg)).exp() / ((2.0 * PI).sqrt() * sg))
            }
            KernelFamily::TopHat { radius } => {
                let a = self.axis_scale(axis);
                let u = r / (radius * a);
                if u.abs() > 1.0 {
                    return Ok(0.0);
                }
                match self.dimension {
                    1 => Ok(self.mass / (2.0 * radius * a)),
                    // integrating the disk indicator over the orthogonal axis
                    // leaves the semicircle density
                    2 => Ok(self.mass * 2.0 * (1.0 - u * u).sqrt() / (PI * radius * a)),
                    _ => unreachable!(),
                }
            }
            KernelFamily::CustomTable { .. } => Err(Error::UnsupportedDirection(
                "custom kernel tables have no closed-form marginal".into(),
            )),
        }
    }

    /// Mesoscopic half-support of the axis marginal.
    pub fn marginal_half_support(&self, axis: usize) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { sigma } => 9.0 * sigma * self.axis_scale(axis),
            KernelFamily::TopHat { radius } => radius * self.axis_scale(axis),
            KernelFamily::CustomTable { .. } => 0.5,
        }
    }
}

/// Sampled `J^lambda` on the torus with a cached spectral representation.
pub struct InteractionKernel {
    pub grid: SpatialGrid,
    pub grid_samples: Vec<f64>,
    /// Discrete kernel mass; every equilibrium constant downstream uses it.
    pub j_hat: f64,
    /// Discrete mass before normalization to the requested one.
    pub raw_mass: f64,
    pub lambda: f64,
    pub cell_volume: f64,
    /// DFT of the samples times the cell volume, so `spectrum[0] = j_hat`.
    pub spectrum: Vec<Complex<f64>>,
    spec: KernelSpec,
    engine: Arc<FftEngine>,
}

/// One-dimensional kernel table (marginal), on torus offsets.
#[derive(Debug, Clone)]
pub struct Kernel1d {
    pub samples: Vec<f64>,
    pub dx: f64,
    pub j_hat: f64,
}

/// Diagnostics of the spectral hypothesis behind the two-dimensional
/// reduction of the cell problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FourierMaxReport {
    pub holds: bool,
    pub max_violation: f64,
    pub max_imag: f64,
}

pub fn build(spec: &KernelSpec, lambda: f64, grid: SpatialGrid) -> Result<InteractionKernel> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if spec.dimension != grid.d {
        return Err(Error::ShapeMismatch(format!(
            "kernel dimension {} vs grid dimension {}",
            spec.dimension, grid.d
        )));
    }
    if let Some(a) = &spec.anisotropy {
        if a.len() != spec.dimension {
            return Err(Error::Parameter("anisotropy length must equal dimension".into()));
        }
    }
    let dx = grid.dx();
    let vol = grid.cell_volume();

    let (samples, normalize) = match &spec.family {
        KernelFamily::CustomTable { samples } => {
            if samples.len() != grid.len() {
                return Err(Error::ShapeMismatch(format!(
                    "custom table has {} samples, grid needs {}",
                    samples.len(),
                    grid.len()
                )));
            }
            if let Some(bad) = samples.iter().find(|v| **v < 0.0 || !v.is_finite()) {
                return Err(Error::NegativeKernel(format!("bad custom table entry {bad}")));
            }
            (samples.clone(), false)
        }
        _ => {
            for axis in 0..grid.d {
                let support = 2.0 * spec.half_support(axis, lambda)
                    / if matches!(spec.family, KernelFamily::Gaussian { .. }) { 3.0 } else { 1.0 };
                if support < 2.0 * dx {
                    return Err(Error::Resolution(format!(
                        "kernel support {support:.3e} along axis {axis} smaller than two grid cells ({:.3e})",
                        2.0 * dx
                    )));
                }
            }
            (sample_periodized(spec, lambda, grid), true)
        }
    };

    let mut samples = samples;
    let raw_mass = samples.iter().sum::<f64>() * vol;
    if raw_mass <= 0.0 {
        return Err(Error::NegativeKernel("kernel table has zero mass".into()));
    }
    if normalize {
        let scale = spec.mass / raw_mass;
        for v in &mut samples {
            *v *= scale;
        }
    }
    let j_hat = samples.iter().sum::<f64>() * vol;

    let engine = Arc::new(FftEngine::new(grid.d, grid.nx));
    let mut spectrum = engine.forward(&samples);
    for c in &mut spectrum {
        *c *= vol;
    }

    Ok(InteractionKernel {
        grid,
        grid_samples: samples,
        j_hat,
        raw_mass,
        lambda,
        cell_volume: vol,
        spectrum,
        spec: spec.clone(),
        engine,
    })
}

/// Periodized samples of `J^lambda` at torus offsets, wrapping tails around
/// the torus so nonnegativity and mass are preserved exactly.
fn sample_periodized(spec: &KernelSpec, lambda: f64, grid: SpatialGrid) -> Vec<f64> {
    let nx = grid.nx;
    let dx = grid.dx();
    let inv_ld = lambda.powi(-(grid.d as i32));
    let n_img: Vec<i64> = (0..grid.d)
        .map(|axis| (spec.half_support(axis, lambda) + 0.5).ceil() as i64)
        .collect();
    let offset = |m: usize| -> f64 {
        let r = m as f64 * dx;
        if r > 0.5 { r - 1.0 } else { r }
    };
    let mut samples = vec![0.0; grid.len()];
    match grid.d {
        1 => {
            for (m, out) in samples.iter_mut().enumerate() {
                let r = offset(m);
                let mut acc = 0.0;
                for img in -n_img[0]..=n_img[0] {
                    acc += spec.eval(&[(r + img as f64) / lambda]);
                }
                *out = acc * inv_ld;
            }
        }
        2 => {
            for m0 in 0..nx {
                let r0 = offset(m0);
                for m1 in 0..nx {
                    let r1 = offset(m1);
                    let mut acc = 0.0;
                    for i0 in -n_img[0]..=n_img[0] {
                        for i1 in -n_img[1]..=n_img[1] {
                            acc += spec.eval(&[
                                (r0 + i0 as f64) / lambda,
                                (r1 + i1 as f64) / lambda,
                            ]);
                        }
                    }
                    samples[m0 * nx + m1] = acc * inv_ld;
                }
            }
        }
        _ => unreachable!(),
    }
    samples
}

impl InteractionKernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Spectral circular convolution `J^lambda * field`.
    pub fn convolve(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} values, kernel grid needs {}",
                field.len(),
                self.grid.len()
            )));
        }
        let mut spec = self.engine.forward(field);
        for (c, k) in spec.iter_mut().zip(&self.spectrum) {
            *c *= k;
        }
        Ok(self.engine.inverse_real(spec))
    }

    /// Direct O(N^2) periodic convolution, kept as the oracle route.
    pub fn convolve_direct(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.grid.len() {
            return Err(Error::ShapeMismatch("field/kernel shape".into()));
        }
        let nx = self.grid.nx;
        let vol = self.cell_volume;
        let mut out = vec![0.0; field.len()];
        match self.grid.d {
            1 => {
                for z in 0..nx {
                    let mut acc = 0.0;
                    for w in 0..nx {
                        acc += self.grid_samples[(z + nx - w) % nx] * field[w];
                    }
                    out[z] = acc * vol;
                }
            }
            2 => {
                for z0 in 0..nx {
                    for z1 in 0..nx {
                        let mut acc = 0.0;
                        for w0 in 0..nx {
                            let k0 = (z0 + nx - w0) % nx;
                            for w1 in 0..nx {
                                let k1 = (z1 + nx - w1) % nx;
                                acc += self.grid_samples[k0 * nx + k1] * field[w0 * nx + w1];
                            }
                        }
                        out[z0 * nx + z1] = acc * vol;
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(out)
    }

    /// Discrete first moment of the samples, A2-style diagnostic.
    pub fn first_moment(&self) -> f64 {
        let nx = self.grid.nx;
        let dx = self.grid.dx();
        let offset = |m: usize| -> f64 {
            let r = m as f64 * dx;
            if r > 0.5 { r - 1.0 } else { r }
        };
        let mut acc = 0.0;
        for (idx, &v) in self.grid_samples.iter().enumerate() {
            let r = match self.grid.d {
                1 => offset(idx).abs(),
                2 => offset(idx / nx).hypot(offset(idx % nx)),
                _ => unreachable!(),
            };
            acc += r * v;
        }
        acc * self.cell_volume
    }

    /// Axis marginal by direct summation over the orthogonal lattice
    /// directions; its mass equals `j_hat` exactly.
    pub fn marginal_1d(&self, axis: usize) -> Result<Kernel1d> {
        if axis >= self.grid.d {
            return Err(Error::UnsupportedDirection(format!(
                "axis {axis} out of range for d={}",
                self.grid.d
            )));
        }
        let nx = self.grid.nx;
        let dx = self.grid.dx();
        let samples = match self.grid.d {
            1 => self.grid_samples.clone(),
            2 => {
                let mut marg = vec![0.0; nx];
                for (m, out) in marg.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for p in 0..nx {
                        let idx = if axis == 0 { m * nx + p } else { p * nx + m };
                        acc += self.grid_samples[idx];
                    }
                    *out = acc * dx;
                }
                marg
            }
            _ => unreachable!(),
        };
        let j_hat = samples.iter().sum::<f64>() * dx;
        Ok(Kernel1d { samples, dx, j_hat })
    }

    /// Spectral-maximum hypothesis: the kernel transform must attain its
    /// maximum after zeroing the frequency along `axis`. Holds for centered
    /// even kernels such as the Gaussian; fails for shifted ones.
    pub fn fourier_max_report(&self, axis: usize) -> FourierMaxReport {
        let nx = self.grid.nx;
        let scale = self.j_hat.abs().max(f64::MIN_POSITIVE);
        let mut max_imag: f64 = 0.0;
        for c in &self.spectrum {
            max_imag = max_imag.max(c.im.abs());
        }
        let mut max_violation = f64::NEG_INFINITY;
        match self.grid.d {
            1 => {
                // comparing against the zero frequency; nonnegative kernels
                // satisfy this automatically
                let base = self.spectrum[0].re;
                for c in &self.spectrum {
                    max_violation = max_violation.max(c.re - base);
                }
            }
            2 => {
                for k0 in 0..nx {
                    for k1 in 0..nx {
                        let perp = if axis == 0 { self.spectrum[k1].re } else { self.spectrum[k0 * nx].re };
                        max_violation = max_violation.max(self.spectrum[k0 * nx + k1].re - perp);
                    }
                }
            }
            _ => unreachable!(),
        }
        let tol = 1e-9 * scale;
        FourierMaxReport {
            holds: max_imag <= tol && max_violation <= tol,
            max_violation,
            max_imag,
        }
    }

    pub fn fourier_max_check(&self, axis: usize) -> bool {
        self.fourier_max_report(axis).holds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn grid2(nx: usize) -> SpatialGrid {
        SpatialGrid::new(2, nx).unwrap()
    }

    #[test]
    fn constant_field_reproduces_mass() {
        let k = build(&KernelSpec::gaussian(2, 1.0), 0.1, grid2(32)).unwrap();
        let c = 0.73;
        let out = k.convolve(&vec![c; 32 * 32]).unwrap();
        for v in out {
            assert!((v - k.j_hat * c).abs() < 1e-12);
        }
    }

    #[test]
    fn paper_grid_mass_is_close_to_one_before_normalization() {
        let k = build(&KernelSpec::gaussian(2, 1.0), 1.0 / 40.0, grid2(80)).unwrap();
        assert!((k.raw_mass - 1.0).abs() < 1e-6, "raw mass {}", k.raw_mass);
        assert!((k.j_hat - 1.0).abs() < 1e-12);
        assert!((k.spectrum[0].re - k.j_hat).abs() < 1e-12);
        assert!(k.grid_samples.iter().all(|&v| v >= 0.0));
        assert!(k.first_moment().is_finite());
    }

    #[test]
    fn spectral_matches_direct_on_random_field() {
        let k = build(&KernelSpec::gaussian(2, 1.0), 0.12, grid2(16)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let field: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = k.convolve(&field).unwrap();
        let b = k.convolve_direct(&field).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_field_and_plane_wave() {
        let k = build(&KernelSpec::gaussian(1, 1.0), 0.1, SpatialGrid::new(1, 64).unwrap()).unwrap();
        let out = k.convolve(&vec![0.0; 64]).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-14));
        // cos(2 pi m z) is an eigenfunction with eigenvalue spectrum[m].re
        let m = 3usize;
        let field: Vec<f64> = (0..64)
            .map(|i| (2.0 * PI * m as f64 * (i as f64 + 0.5) / 64.0).cos())
            .collect();
        let out = k.convolve(&field).unwrap();
        let eig = k.spectrum[m].re;
        for (u, v) in field.iter().zip(&out) {
            assert!((v - eig * u).abs() < 1e-12, "{v} vs {}", eig * u);
        }
    }

    #[test]
    fn narrow_top_hat_acts_as_identity_times_mass() {
        let g = grid2(16);
        // delta-like table: all mass in the zero-offset cell (an analytic
        // top-hat this narrow is rejected by the resolution gate)
        let mut table = vec![0.0; 16 * 16];
        table[0] = (16.0f64 * 16.0).powi(1); // unit mass after cell volume
        let k = build(&KernelSpec { family: KernelFamily::CustomTable { samples: table }, dimension: 2, anisotropy: None, mass: 1.0 }, 0.1, g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let field: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = k.convolve(&field).unwrap();
        let b = k.convolve_direct(&field).unwrap();
        for ((x, y), u) in a.iter().zip(&b).zip(&field) {
            assert!((x - y).abs() < 1e-10);
            assert!((x - k.j_hat * u).abs() < 1e-10);
        }
    }

    #[test]
    fn self_adjointness() {
        let k = build(&KernelSpec::gaussian(2, 1.0), 0.15, grid2(16)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let u: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ku = k.convolve(&u).unwrap();
        let kv = k.convolve(&v).unwrap();
        let a: f64 = ku.iter().zip(&v).map(|(x, y)| x * y).sum();
        let b: f64 = u.iter().zip(&kv).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn interaction_expansion_holds_discretely() {
        // -1/2 int s (J*s) = -(j/2) int s^2 + 1/4 iint J(z-w)(s(z)-s(w))^2
        let k = build(&KernelSpec::gaussian(2, 1.0), 0.15, grid2(16)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let s: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vol = k.cell_volume;
        let conv = k.convolve(&s).unwrap();
        let lhs: f64 = -0.5 * vol * s.iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>();
        // brute-force quadratic form
        let nx = 16;
        let mut quad = 0.0;
        for z0 in 0..nx {
            for z1 in 0..nx {
                for w0 in 0..nx {
                    for w1 in 0..nx {
                        let j = k.grid_samples[((z0 + nx - w0) % nx) * nx + ((z1 + nx - w1) % nx)];
                        let d = s[z0 * nx + z1] - s[w0 * nx + w1];
                        quad += j * d * d;
                    }
                }
            }
        }
        quad *= 0.25 * vol * vol;
        let rhs = -0.5 * k.j_hat * vol * s.iter().map(|a| a * a).sum::<f64>() + quad;
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        assert!(quad >= 0.0);
    }

    #[test]
    fn gaussian_marginal_matches_closed_form() {
        let k = build(&KernelSpec::gaussian(2, 1.0), 0.1, grid2(64)).unwrap();
        let marg = k.marginal_1d(0).unwrap();
        assert!((marg.j_hat - k.j_hat).abs() < 1e-12);
        // discrete marginal of J^lambda vs lambda^{-1} J_marginal(r/lambda)
        let lam = 0.1;
        for m in 0..64 {
            let r = {
                let x = m as f64 * marg.dx;
                if x > 0.5 { x - 1.0 } else { x }
            };
            let mut expect = 0.0;
            for img in -3i32..=3 {
                expect += k.spec().marginal_value(0, (r + img as f64) / lam).unwrap() / lam;
            }
            assert!((marg.samples[m] - expect).abs() < 1e-9 * (1.0 + expect), "m={m}");
        }
    }

    #[test]
    fn top_hat_marginal_is_semicircle() {
        let spec = KernelSpec::top_hat(2, 1.0);
        let lam = 0.2;
        let k = build(&spec, lam, grid2(128)).unwrap();
        let marg = k.marginal_1d(1).unwrap();
        assert!((marg.j_hat - k.j_hat).abs() < 1e-12);
        // midway inside the support: semicircle density, O(dx) discretization
        let m = 13usize; // sample offset near 0.5 * lam * radius
        let r = m as f64 * marg.dx;
        let expect = spec.marginal_value(1, r / lam).unwrap() / lam;
        assert!(
            (marg.samples[m] - expect).abs() < 0.05 * expect,
            "{} vs {}",
            marg.samples[m],
            expect
        );
    }

    #[test]
    fn marginal_of_1d_kernel_is_itself() {
        let k = build(&KernelSpec::gaussian(1, 1.0), 0.1, SpatialGrid::new(1, 64).unwrap()).unwrap();
        let marg = k.marginal_1d(0).unwrap();
        assert_eq!(marg.samples, k.grid_samples);
    }

    #[test]
    fn fourier_max_gaussian_holds_and_shifted_fails() {
        let k = build(&KernelSpec::gaussian(2, 1.0), 0.1, grid2(32)).unwrap();
        assert!(k.fourier_max_check(0));
        assert!(k.fourier_max_check(1));
        // shifted bump breaks evenness: spectrum picks up imaginary parts
        let g = grid2(32);
        let mut table = vec![0.0; 32 * 32];
        for i in 0..32 {
            for j in 0..32 {
                let z0 = (i as f64 + 0.5) / 32.0 - 0.3;
                let z1 = (j as f64 + 0.5) / 32.0 - 0.1;
                let z0 = if z0 > 0.5 { z0 - 1.0 } else if z0 < -0.5 { z0 + 1.0 } else { z0 };
                table[i * 32 + j] = (-0.5 * (z0 * z0 + z1 * z1) / 0.01).exp();
            }
        }
        let shifted = build(
            &KernelSpec { family: KernelFamily::CustomTable { samples: table }, dimension: 2, anisotropy: None, mass: 1.0 },
            0.1,
            g,
        )
        .unwrap();
        assert!(!shifted.fourier_max_check(0));
        // d=1 is vacuous for any nonnegative kernel
        let k1 = build(&KernelSpec::gaussian(1, 1.0), 0.1, SpatialGrid::new(1, 32).unwrap()).unwrap();
        assert!(k1.fourier_max_check(0));
    }

    #[test]
    fn build_rejects_bad_inputs() {
        // under-resolved kernel
        let err = build(&KernelSpec::gaussian(2, 1.0), 1e-4, grid2(16));
        assert!(matches!(err, Err(Error::Resolution(_))));
        // negative custom table
        let mut table = vec![1.0; 16 * 16];
        table[3] = -0.1;
        let err = build(
            &KernelSpec { family: KernelFamily::CustomTable { samples: table }, dimension: 2, anisotropy: None, mass: 1.0 },
            0.1,
            grid2(16),
        );
        assert!(matches!(err, Err(Error::NegativeKernel(_))));
    }
}
