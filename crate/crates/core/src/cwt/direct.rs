use ndarray::Array2;
use num_complex::Complex64;

use super::{cone_of_influence, prepare_signal, CwtOptions, ScaleGrid, WaveletSpectrum};
use crate::error::{Error, Result};
use crate::wavelet::MotherWavelet;

/// Reference transform: the same Riemann sum evaluated term by term.
///
/// Quadratic in the series length. Meant for checking [`cwt`](super::cwt),
/// not for production use.
pub fn cwt_direct(
    signal: &[f64],
    wavelet: &MotherWavelet,
    grid: &ScaleGrid,
    dt: f64,
) -> Result<WaveletSpectrum> {
    cwt_direct_with(signal, wavelet, grid, dt, CwtOptions::default())
}

pub fn cwt_direct_with(
    signal: &[f64],
    wavelet: &MotherWavelet,
    grid: &ScaleGrid,
    dt: f64,
    options: CwtOptions,
) -> Result<WaveletSpectrum> {
    if grid.is_empty() {
        return Err(Error::Input("empty scale grid".into()));
    }
    let x = prepare_signal(signal, dt, options)?;
    let n = x.len();
    let radius = wavelet.support_radius();
    let mut coefficients = Array2::zeros((grid.len(), n));

    for (j, &scale) in grid.scales().iter().enumerate() {
        let norm = scale.sqrt().recip();
        // conj(ψ) at every lag whose argument stays inside the support
        let taps: Vec<Complex64> = (0..n)
            .map(|lag| lag as f64 * dt / scale)
            .take_while(|&u| u <= radius)
            .map(|u| wavelet.evaluate(u).conj())
            .collect();
        let neg_taps: Vec<Complex64> = (0..taps.len())
            .map(|lag| wavelet.evaluate(-(lag as f64) * dt / scale).conj())
            .collect();

        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (lag, tap) in taps.iter().enumerate() {
                if let Some(v) = x.get(k + lag) {
                    acc += tap * v;
                }
            }
            for (lag, tap) in neg_taps.iter().enumerate().skip(1) {
                if lag <= k {
                    acc += tap * x[k - lag];
                }
            }
            coefficients[[j, k]] = acc * norm * dt;
        }
    }

    Ok(WaveletSpectrum {
        coefficients,
        grid: grid.clone(),
        dt,
        coi: cone_of_influence(n, dt, wavelet),
        wavelet: *wavelet,
    })
}
