//! Minimal d-dimensional FFT on `[nx; d]` grids over rustfft, used for
//! periodic convolution. Plans are cached per engine; scratch buffers are
//! per call so an engine can be shared across threads behind an `Arc`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftEngine {
    d: usize,
    nx: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftEngine {
    pub fn new(d: usize, nx: usize) -> Self {
        assert!(d == 1 || d == 2, "only d in {{1,2}} supported");
        let mut planner = FftPlanner::new();
        Self {
            d,
            nx,
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
        }
    }

    pub fn len(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    /// Forward DFT of a real field (unnormalized, matching the usual
    /// convention where the inverse carries the 1/N factor).
    pub fn forward(&self, real: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(real.len(), self.len());
        let mut data: Vec<Complex<f64>> = real.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse DFT, returning the real part scaled by 1/N.
    pub fn inverse_real(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        assert_eq!(spec.len(), self.len());
        self.transform(&mut spec, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let nx = self.nx;
        match self.d {
            1 => plan.process(data),
            2 => {
                // rows (contiguous), then columns through a gather/scatter
                for row in data.chunks_exact_mut(nx) {
                    plan.process(row);
                }
                let mut col = vec![Complex::new(0.0, 0.0); nx];
                for j in 0..nx {
                    for i in 0..nx {
                        col[i] = data[i * nx + j];
                    }
                    plan.process(&mut col);
                    for i in 0..nx {
                        data[i * nx + j] = col[i];
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}
