//! Continuous wavelet transform on a dyadic scale grid.
//!
//! For scale `σ` and sample `k` the transform is the Riemann sum
//!
//! ```text
//! W[σ][k] = σ^(-1/2) · Σ_k' conj(ψ((k' - k)·dt / σ)) · x[k'] · dt
//! ```
//!
//! with `ψ` truncated where its envelope drops below
//! [`ENVELOPE_CUTOFF`](crate::wavelet::ENVELOPE_CUTOFF) and samples outside the
//! record taken as zero. [`cwt`] evaluates it per scale as an FFT
//! correlation; [`cwt_direct`] sums it term by term and exists to check the
//! fast path.

mod coi;
mod direct;
mod fft;
mod grid;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

pub use coi::cone_of_influence;
pub use direct::{cwt_direct, cwt_direct_with};
pub use fft::{cwt, cwt_with, CwtPlan};
pub use grid::{ScaleGrid, DEFAULT_VOICES};

use crate::error::{Error, Result};
use crate::wavelet::MotherWavelet;

/// Minimum accepted series length.
pub const MIN_SIGNAL_LEN: usize = 8;

/// Transform options shared by the fast and direct routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CwtOptions {
    /// Subtract the sample mean before transforming. Zero padding turns a
    /// nonzero mean into a step at each edge; removing it keeps that step
    /// out of the spectrum.
    pub demean: bool,
}

impl Default for CwtOptions {
    fn default() -> Self {
        Self { demean: true }
    }
}

/// Complex coefficients, one row per scale and one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpectrum {
    pub coefficients: Array2<Complex64>,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub coi: Vec<f64>,
    pub wavelet: MotherWavelet,
}

impl WaveletSpectrum {
    pub fn len(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when row `j` at column `k` lies inside the cone of influence.
    pub fn in_coi(&self, j: usize, k: usize) -> bool {
        self.grid.scales()[j] <= self.coi[k]
    }

    pub fn coi_mask(&self) -> Array2<bool> {
        coi_mask(&self.grid, &self.coi)
    }

    /// Frequencies of the grid rows, in cycles per unit of `dt`.
    pub fn frequencies(&self) -> Vec<f64> {
        frequencies(&self.wavelet, &self.grid)
    }
}

/// Squared modulus of a [`WaveletSpectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub values: Array2<f64>,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub coi: Vec<f64>,
}

impl PowerSpectrum {
    pub fn new(values: Array2<f64>, grid: ScaleGrid, dt: f64, coi: Vec<f64>) -> Result<Self> {
        if values.nrows() != grid.len() || values.ncols() != coi.len() {
            return Err(Error::Input(format!(
                "power matrix is {}x{} but grid has {} scales and coi {} samples",
                values.nrows(),
                values.ncols(),
                grid.len(),
                coi.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Input("power values must be finite and nonnegative".into()));
        }
        Ok(Self {
            values,
            grid,
            dt,
            coi,
        })
    }

    pub fn in_coi(&self, j: usize, k: usize) -> bool {
        self.grid.scales()[j] <= self.coi[k]
    }

    pub fn coi_mask(&self) -> Array2<bool> {
        coi_mask(&self.grid, &self.coi)
    }
}

/// Elementwise `|W|²`; metadata is carried through unchanged.
pub fn power(spec: &WaveletSpectrum) -> PowerSpectrum {
    PowerSpectrum {
        values: spec.coefficients.mapv(|c| c.norm_sqr()),
        grid: spec.grid.clone(),
        dt: spec.dt,
        coi: spec.coi.clone(),
    }
}

pub(crate) fn coi_mask(grid: &ScaleGrid, coi: &[f64]) -> Array2<bool> {
    Array2::from_shape_fn((grid.len(), coi.len()), |(j, k)| grid.scales()[j] <= coi[k])
}

/// Frequency axis in cycles per time unit. Grid scales are already in time
/// units, i.e. they enter [`MotherWavelet::scale_to_frequency`] as `s / dt`.
pub fn frequencies(w: &MotherWavelet, grid: &ScaleGrid) -> Vec<f64> {
    grid.scales()
        .iter()
        .map(|&s| w.center_frequency() / s)
        .collect()
}

/// Grid scale (time units) probing `frequency` cycles per unit of `dt`.
pub fn scale_for_frequency(w: &MotherWavelet, frequency: f64, dt: f64) -> Result<f64> {
    Ok(w.frequency_to_scale(frequency, dt)? * dt)
}

/// Validates the input and returns the (optionally demeaned) series.
pub(crate) fn prepare_signal(signal: &[f64], dt: f64, options: CwtOptions) -> Result<Vec<f64>> {
    if signal.len() < MIN_SIGNAL_LEN {
        return Err(Error::Input(format!(
            "series length {} is below the minimum of {MIN_SIGNAL_LEN}",
            signal.len()
        )));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite value {} at index {i}", signal[i])));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if !options.demean {
        return Ok(signal.to_vec());
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    Ok(signal.iter().map(|v| v - mean).collect())
}

/// Number of lags on each side kept for `scale`, capped by the record.
pub(crate) fn kernel_half_width(w: &MotherWavelet, scale: f64, dt: f64, n: usize) -> usize {
    let reach = (w.support_radius() * scale / dt).floor();
    (reach as usize).min(n - 1)
}
