use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{
    cone_of_influence, kernel_half_width, prepare_signal, CwtOptions, ScaleGrid, WaveletSpectrum,
};
use crate::error::{Error, Result};
use crate::wavelet::MotherWavelet;

/// Precomputed kernel spectra for transforming many series of one length.
///
/// The FFT length is the next power of two that holds the series plus the
/// widest kernel, so the circular correlation never wraps into the output.
pub struct CwtPlan {
    n: usize,
    dt: f64,
    wavelet: MotherWavelet,
    grid: ScaleGrid,
    options: CwtOptions,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernels: Vec<Vec<Complex64>>,
}

impl CwtPlan {
    pub fn new(
        n: usize,
        wavelet: &MotherWavelet,
        grid: &ScaleGrid,
        dt: f64,
        options: CwtOptions,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Input("empty scale grid".into()));
        }
        if n < super::MIN_SIGNAL_LEN {
            return Err(Error::Input(format!(
                "series length {n} is below the minimum of {}",
                super::MIN_SIGNAL_LEN
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        let widest = grid
            .scales()
            .iter()
            .map(|&s| kernel_half_width(wavelet, s, dt, n))
            .max()
            .unwrap_or(0);
        let size = (n + widest).next_power_of_two();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);

        let kernels = grid
            .scales()
            .par_iter()
            .map(|&scale| {
                let mut kernel = reversed_kernel(wavelet, scale, dt, n, size);
                forward.process(&mut kernel);
                kernel
            })
            .collect();

        Ok(Self {
            n,
            dt,
            wavelet: *wavelet,
            grid: grid.clone(),
            options,
            forward,
            inverse,
            kernels,
        })
    }

    pub fn fft_len(&self) -> usize {
        self.forward.len()
    }

    pub fn transform(&self, signal: &[f64]) -> Result<WaveletSpectrum> {
        if signal.len() != self.n {
            return Err(Error::Input(format!(
                "plan built for length {} but series has {}",
                self.n,
                signal.len()
            )));
        }
        let x = prepare_signal(signal, self.dt, self.options)?;
        let size = self.fft_len();

        let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        spectrum.resize(size, Complex64::new(0.0, 0.0));
        self.forward.process(&mut spectrum);

        let inv_size = 1.0 / size as f64;
        let rows: Vec<Vec<Complex64>> = self
            .kernels
            .par_iter()
            .map(|kernel| {
                let mut buf: Vec<Complex64> =
                    spectrum.iter().zip(kernel).map(|(a, b)| a * b).collect();
                self.inverse.process(&mut buf);
                buf.truncate(self.n);
                buf.iter_mut().for_each(|c| *c *= inv_size);
                buf
            })
            .collect();

        let mut coefficients = Array2::zeros((self.grid.len(), self.n));
        for (mut dst, row) in coefficients.rows_mut().into_iter().zip(rows) {
            dst.assign(&ndarray::ArrayView1::from(&row[..]));
        }

        Ok(WaveletSpectrum {
            coefficients,
            grid: self.grid.clone(),
            dt: self.dt,
            coi: cone_of_influence(self.n, self.dt, &self.wavelet),
            wavelet: self.wavelet,
        })
    }
}

/// Kernel laid out so that a circular convolution with the padded series
/// yields the correlation `Σ_m x[k+m] · g[m]`, with
/// `g[m] = σ^(-1/2) · dt · conj(ψ(m·dt/σ))`.
fn reversed_kernel(
    w: &MotherWavelet,
    scale: f64,
    dt: f64,
    n: usize,
    size: usize,
) -> Vec<Complex64> {
    let half = kernel_half_width(w, scale, dt, n) as isize;
    let gain = dt / scale.sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); size];
    for m in -half..=half {
        let tap = w.evaluate(m as f64 * dt / scale).conj() * gain;
        out[(-m).rem_euclid(size as isize) as usize] = tap;
    }
    out
}

/// FFT-accelerated transform with default options (mean removed).
pub fn cwt(
    signal: &[f64],
    wavelet: &MotherWavelet,
    grid: &ScaleGrid,
    dt: f64,
) -> Result<WaveletSpectrum> {
    cwt_with(signal, wavelet, grid, dt, CwtOptions::default())
}

pub fn cwt_with(
    signal: &[f64],
    wavelet: &MotherWavelet,
    grid: &ScaleGrid,
    dt: f64,
    options: CwtOptions,
) -> Result<WaveletSpectrum> {
    prepare_signal(signal, dt, options)?;
    CwtPlan::new(signal.len(), wavelet, grid, dt, options)?.transform(signal)
}
