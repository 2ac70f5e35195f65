//! Discrete convolution `(φ ∗ u)_i = Σ_m w_m u_{i−m}` on a truncated domain.
//!
//! Outside the grid, `u` is extended by `left_pad` for `x < −L` and by
//! `right_pad` for `x ≥ L`. Two paths compute the same sum: a direct
//! stencil sum, and a zero-padded FFT of the extended array. Wide stencils
//! take the FFT path.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::grid::{Field, Grid};
use crate::kernel::TabulatedKernel;

/// Stencils wider than this many points use the FFT path under [`Method::Auto`].
pub const FFT_STENCIL_THRESHOLD: usize = 129;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvolutionError {
    #[error("kernel radius {radius} does not fit in a domain of half-length {half_length}")]
    StencilOverrun { radius: f64, half_length: f64 },
    #[error("kernel spacing {kernel} differs from grid spacing {grid}")]
    SpacingMismatch { kernel: f64, grid: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Direct,
    Fft,
}

struct FftPlan {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex64>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Reusable convolution operator for one grid and one tabulated kernel.
pub struct Convolver {
    n: usize,
    half: usize,
    /// Weights in reverse order, so each output is a contiguous dot product.
    reversed: Vec<f64>,
    extended: Vec<f64>,
    fft: Option<FftPlan>,
    tail_mass: f64,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("n", &self.n)
            .field("half", &self.half)
            .field("fft", &self.fft.as_ref().map(|p| p.size))
            .finish()
    }
}

fn check_fit(grid: &Grid, kernel: &TabulatedKernel) -> Result<(), ConvolutionError> {
    let (h, k) = (grid.spacing(), kernel.spacing());
    if (h - k).abs() > 1e-12 * h {
        return Err(ConvolutionError::SpacingMismatch { kernel: k, grid: h });
    }
    if kernel.radius() >= grid.half_length() {
        return Err(ConvolutionError::StencilOverrun {
            radius: kernel.radius(),
            half_length: grid.half_length(),
        });
    }
    Ok(())
}

impl Convolver {
    pub fn new(grid: &Grid, kernel: &TabulatedKernel, method: Method) -> Result<Self, ConvolutionError> {
        check_fit(grid, kernel)?;
        let n = grid.n_points();
        let half = kernel.half_width();
        let width = 2 * half + 1;
        let use_fft = match method {
            Method::Auto => width > FFT_STENCIL_THRESHOLD,
            Method::Direct => false,
            Method::Fft => true,
        };
        let fft = use_fft.then(|| {
            // Linear convolution of the extended array (n + 2h) with the stencil (2h + 1).
            let size = (n + 4 * half + 1).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut kernel_spectrum = vec![Complex64::new(0.0, 0.0); size];
            for (slot, &w) in kernel_spectrum.iter_mut().zip(kernel.weights()) {
                *slot = Complex64::new(w, 0.0);
            }
            let scratch_len = forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len());
            let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
            forward.process_with_scratch(&mut kernel_spectrum, &mut scratch);
            FftPlan {
                size,
                forward,
                inverse,
                kernel_spectrum,
                buffer: vec![Complex64::new(0.0, 0.0); size],
                scratch,
            }
        });
        Ok(Self {
            n,
            half,
            reversed: kernel.weights().iter().rev().copied().collect(),
            extended: vec![0.0; n + 2 * half],
            fft,
            tail_mass: kernel.tail_mass(),
        })
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Writes `φ ∗ u` into `out`.
    pub fn apply(&mut self, u: &[f64], left_pad: f64, right_pad: f64, out: &mut [f64]) {
        assert_eq!(u.len(), self.n);
        assert_eq!(out.len(), self.n);
        let h = self.half;
        self.extended[..h].fill(left_pad);
        self.extended[h..h + self.n].copy_from_slice(u);
        self.extended[h + self.n..].fill(right_pad);

        match &mut self.fft {
            None => {
                let width = self.reversed.len();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(&self.reversed, &self.extended[i..i + width]);
                }
            }
            Some(plan) => {
                for (slot, &e) in plan.buffer.iter_mut().zip(&self.extended) {
                    *slot = Complex64::new(e, 0.0);
                }
                plan.buffer[self.extended.len()..].fill(Complex64::new(0.0, 0.0));
                plan.forward.process_with_scratch(&mut plan.buffer, &mut plan.scratch);
                for (b, k) in plan.buffer.iter_mut().zip(&plan.kernel_spectrum) {
                    *b *= k;
                }
                plan.inverse.process_with_scratch(&mut plan.buffer, &mut plan.scratch);
                let scale = 1.0 / plan.size as f64;
                for (i, o) in out.iter_mut().enumerate() {
                    *o = plan.buffer[i + 2 * h].re * scale;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// Reference direct sum, written as the textbook double loop.
pub fn convolve_direct(field: &Field, kernel: &TabulatedKernel, left_pad: f64, right_pad: f64) -> Result<Field, ConvolutionError> {
    check_fit(field.grid(), kernel)?;
    let u = field.values();
    let n = u.len() as isize;
    let h = kernel.half_width() as isize;
    let values = (0..n)
        .map(|i| {
            kernel
                .weights()
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let src = i - (j as isize - h);
                    let v = if src < 0 {
                        left_pad
                    } else if src >= n {
                        right_pad
                    } else {
                        u[src as usize]
                    };
                    w * v
                })
                .sum()
        })
        .collect();
    Ok(Field::new(*field.grid(), values).expect("same grid"))
}

/// `φ ∗ u` with the automatically selected path.
pub fn convolve(field: &Field, kernel: &TabulatedKernel, left_pad: f64, right_pad: f64) -> Result<Field, ConvolutionError> {
    let mut conv = Convolver::new(field.grid(), kernel, Method::Auto)?;
    let mut out = vec![0.0; field.values().len()];
    conv.apply(field.values(), left_pad, right_pad, &mut out);
    Ok(Field::new(*field.grid(), out).expect("same grid"))
}
