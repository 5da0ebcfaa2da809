//! Periodic spectral operators on a square grid: the Beurling transform, the
//! Cauchy transform (inverse of the d-bar derivative on mean-zero data) and the
//! complex derivatives themselves.
//!
//! With `xi = kx + i ky` the complex frequency, `d-bar` acts as `i xi / 2`, `d`
//! as `i conj(xi) / 2` and the Beurling transform as `conj(xi) / xi`. Nyquist
//! wavenumbers are taken as 0, which keeps every multiplier compatible with the
//! reflection `f(z) -> conj(f(conj z))`; modes with `xi = 0` are annihilated.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

const ROW_BLOCK: usize = 32;

pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumber for each FFT index (0 at Nyquist).
    wavenumbers: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let period = 2.0 * grid.half_width();
        let wavenumbers = (0..n)
            .map(|p| {
                let signed = match p.cmp(&(n / 2)) {
                    std::cmp::Ordering::Less => p as f64,
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => p as f64 - n as f64,
                };
                2.0 * PI * signed / period
            })
            .collect();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wavenumbers,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn rows(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        data.par_chunks_mut(n * ROW_BLOCK).for_each(|block| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(block, &mut scratch);
        });
    }

    fn transpose(&self, data: &mut [Complex64]) {
        const TILE: usize = 32;
        let n = self.n;
        for jb in (0..n).step_by(TILE) {
            for ib in (jb..n).step_by(TILE) {
                for j in jb..(jb + TILE).min(n) {
                    let start = if ib == jb { j + 1 } else { ib };
                    for i in start..(ib + TILE).min(n) {
                        data.swap(j * n + i, i * n + j);
                    }
                }
            }
        }
    }

    /// Unnormalized 2D forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.rows(data, &self.forward);
        self.transpose(data);
        self.rows(data, &self.forward);
        self.transpose(data);
    }

    /// Inverse transform including the `1/n^2` normalization, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.rows(data, &self.inverse);
        self.transpose(data);
        self.rows(data, &self.inverse);
        self.transpose(data);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    /// Applies the Fourier multiplier `m(xi)` to `input`. `m` is never called
    /// with `xi = 0`; those modes are zeroed.
    pub fn apply(&self, input: &[Complex64], m: impl Fn(Complex64) -> Complex64 + Sync) -> Vec<Complex64> {
        let n = self.n;
        let mut data = input.to_vec();
        self.forward(&mut data);
        data.par_chunks_mut(n).enumerate().for_each(|(q, row)| {
            for (p, v) in row.iter_mut().enumerate() {
                let xi = Complex64::new(self.wavenumbers[p], self.wavenumbers[q]);
                if xi == Complex64::new(0.0, 0.0) {
                    *v = Complex64::new(0.0, 0.0);
                } else {
                    *v *= m(xi);
                }
            }
        });
        self.inverse(&mut data);
        data
    }

    /// Beurling transform: takes `d-bar g` to `d g`.
    pub fn beurling(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.apply(f, |xi| xi.conj() / xi)
    }

    /// Periodic solution `u` of `d-bar u = f - mean(f)` with zero mean (modes
    /// with `xi = 0` besides the mean are dropped as well).
    pub fn cauchy(&self, f: &[Complex64]) -> Vec<Complex64> {
        let minus_two_i = Complex64::new(0.0, -2.0);
        self.apply(f, |xi| minus_two_i / xi)
    }

    /// Spectral `d = (d/dx - i d/dy) / 2`.
    pub fn d(&self, f: &[Complex64]) -> Vec<Complex64> {
        let half_i = Complex64::new(0.0, 0.5);
        self.apply(f, |xi| half_i * xi.conj())
    }

    /// Spectral `d-bar = (d/dx + i d/dy) / 2`.
    pub fn d_bar(&self, f: &[Complex64]) -> Vec<Complex64> {
        let half_i = Complex64::new(0.0, 0.5);
        self.apply(f, |xi| half_i * xi)
    }
}
