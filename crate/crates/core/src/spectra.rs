//! Cross-wavelet spectrum, smoothing, and squared wavelet coherence.
//!
//! The pointwise ratio `|W_xy|² / (|W_x|²·|W_y|²)` is identically one
//! wherever both powers are nonzero, so coherence is only informative after
//! the numerator and the denominators are averaged over a neighbourhood in
//! time and scale:
//!
//! ```text
//! R² = |S(W_xy)|² / (S(|W_x|²) · S(|W_y|²))
//! ```
//!
//! `S` is a Gaussian in time whose standard deviation equals the scale,
//! followed by a boxcar across `0.6 · voices` neighbouring scales. Both
//! windows are renormalized where they overhang the matrix edges.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cwt::{ScaleGrid, WaveletSpectrum};
use crate::error::{Error, Result};

/// Auto-power below which a smoothed cell is considered empty.
pub const POWER_FLOOR: f64 = 1e-300;

/// Largest rounding overshoot of `R²` above one that is silently clamped.
pub const R2_OVERSHOOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectrum {
    pub values: Array2<Complex64>,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub coi: Vec<f64>,
}

/// Window parameters applied before forming the coherence ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    /// Gaussian in time (std = `time_sigma · scale / dt` samples, cut at
    /// `truncation` standard deviations) then a boxcar of `scale_rows` rows.
    Windowed {
        time_sigma: f64,
        truncation: f64,
        scale_rows: usize,
    },
    /// No averaging. Only useful to show that the raw ratio is trivially one.
    Identity,
}

impl Smoothing {
    /// The default windows for a grid with `voices` scales per octave.
    pub fn standard(voices: u32) -> Self {
        Smoothing::Windowed {
            time_sigma: 1.0,
            truncation: 3.0,
            scale_rows: ((0.6 * voices as f64).round() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMap {
    pub r2: Array2<f64>,
    pub phase: Array2<f64>,
    /// Cells whose smoothed auto-power fell below [`POWER_FLOOR`]; their
    /// `r2` is reported as zero.
    pub flagged: Array2<bool>,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub coi: Vec<f64>,
    pub smoothing: Smoothing,
}

impl CoherenceMap {
    pub fn in_coi(&self, j: usize, k: usize) -> bool {
        self.grid.scales()[j] <= self.coi[k]
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

fn check_compatible(a: &WaveletSpectrum, b: &WaveletSpectrum) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Incompatible {
            field: "grid",
            detail: format!("{} vs {} scales", a.grid.len(), b.grid.len()),
        });
    }
    if a.len() != b.len() {
        return Err(Error::Incompatible {
            field: "length",
            detail: format!("{} vs {} samples", a.len(), b.len()),
        });
    }
    if a.dt != b.dt {
        return Err(Error::Incompatible {
            field: "dt",
            detail: format!("{} vs {}", a.dt, b.dt),
        });
    }
    if a.wavelet != b.wavelet {
        return Err(Error::Incompatible {
            field: "wavelet",
            detail: format!("{} vs {}", a.wavelet, b.wavelet),
        });
    }
    Ok(())
}

/// `W_xy = W_x · conj(W_y)` with the tighter of the two cones.
pub fn cross_wavelet(a: &WaveletSpectrum, b: &WaveletSpectrum) -> Result<CrossSpectrum> {
    check_compatible(a, b)?;
    let mut values = Array2::zeros(a.coefficients.raw_dim());
    Zip::from(&mut values)
        .and(&a.coefficients)
        .and(&b.coefficients)
        .for_each(|v, x, y| *v = x * y.conj());
    Ok(CrossSpectrum {
        values,
        grid: a.grid.clone(),
        dt: a.dt,
        coi: a.coi.iter().zip(&b.coi).map(|(p, q)| p.min(*q)).collect(),
    })
}

/// Argument in `(-π, π]`, zero where the modulus is zero.
fn principal_arg(c: Complex64) -> f64 {
    if c.re == 0.0 && c.im == 0.0 {
        return 0.0;
    }
    let a = c.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

pub fn phase_difference(c: &CrossSpectrum) -> Array2<f64> {
    c.values.mapv(principal_arg)
}

/// Smooths a complex matrix with the standard windows for `grid`.
pub fn smooth(m: &Array2<Complex64>, grid: &ScaleGrid, dt: f64) -> Array2<Complex64> {
    smooth_with(m, grid, dt, Smoothing::standard(grid.voices()))
}

pub fn smooth_real(m: &Array2<f64>, grid: &ScaleGrid, dt: f64) -> Array2<f64> {
    smooth_real_with(m, grid, dt, Smoothing::standard(grid.voices()))
}

pub fn smooth_with(
    m: &Array2<Complex64>,
    grid: &ScaleGrid,
    dt: f64,
    smoothing: Smoothing,
) -> Array2<Complex64> {
    // Real and imaginary parts are smoothed independently by the same weights.
    let re = smooth_real_with(&m.mapv(|c| c.re), grid, dt, smoothing);
    let im = smooth_real_with(&m.mapv(|c| c.im), grid, dt, smoothing);
    let mut out = Array2::zeros(m.raw_dim());
    Zip::from(&mut out)
        .and(&re)
        .and(&im)
        .for_each(|o, &r, &i| *o = Complex64::new(r, i));
    out
}

pub fn smooth_real_with(
    m: &Array2<f64>,
    grid: &ScaleGrid,
    dt: f64,
    smoothing: Smoothing,
) -> Array2<f64> {
    assert_eq!(m.nrows(), grid.len(), "matrix rows must match the scale grid");
    let Smoothing::Windowed {
        time_sigma,
        truncation,
        scale_rows,
    } = smoothing
    else {
        return m.clone();
    };

    let n = m.ncols();
    let inputs: Vec<Vec<f64>> = m.outer_iter().map(|row| row.to_vec()).collect();
    let rows: Vec<Vec<f64>> = inputs
        .par_iter()
        .zip(grid.scales().par_iter())
        .map(|(row, &scale)| {
            let std = time_sigma * scale / dt;
            normalized_convolve(row, &gaussian_half_window(std, truncation, n))
        })
        .collect();

    let nrows = rows.len();
    let below = (scale_rows - 1) / 2;
    let above = scale_rows - 1 - below;
    let mut out = Array2::zeros((nrows, n));
    for j in 0..nrows {
        let lo = j.saturating_sub(below);
        let hi = (j + above + 1).min(nrows);
        let count = (hi - lo) as f64;
        let mut dst = out.row_mut(j);
        for src in &rows[lo..hi] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        dst.mapv_inplace(|v| v / count);
    }
    out
}

/// One side (including the centre tap) of a truncated Gaussian.
fn gaussian_half_window(std: f64, truncation: f64, n: usize) -> Vec<f64> {
    let half = ((truncation * std).floor() as usize).min(n.saturating_sub(1));
    (0..=half)
        .map(|m| {
            let u = m as f64 / std;
            (-0.5 * u * u).exp()
        })
        .collect()
}

/// Symmetric convolution where the window is renormalized to unit mass over
/// the taps that land inside the row.
fn normalized_convolve(row: &[f64], half: &[f64]) -> Vec<f64> {
    let n = row.len();
    let h = half.len() - 1;
    // prefix[i] = Σ_{m < i} half[m]
    let mut prefix = vec![0.0; half.len() + 1];
    for (i, w) in half.iter().enumerate() {
        prefix[i + 1] = prefix[i] + w;
    }
    (0..n)
        .map(|k| {
            let left = k.min(h);
            let right = (n - 1 - k).min(h);
            let mut acc = half[0] * row[k];
            for m in 1..=left {
                acc += half[m] * row[k - m];
            }
            for m in 1..=right {
                acc += half[m] * row[k + m];
            }
            let mass = prefix[left + 1] + prefix[right + 1] - half[0];
            acc / mass
        })
        .collect()
}

/// Squared coherence and phase with the standard smoothing windows.
pub fn coherence(a: &WaveletSpectrum, b: &WaveletSpectrum) -> Result<CoherenceMap> {
    coherence_with(a, b, Smoothing::standard(a.grid.voices()))
}

pub fn coherence_with(
    a: &WaveletSpectrum,
    b: &WaveletSpectrum,
    smoothing: Smoothing,
) -> Result<CoherenceMap> {
    let cross = cross_wavelet(a, b)?;
    let (grid, dt) = (&cross.grid, cross.dt);
    let sxy = smooth_with(&cross.values, grid, dt, smoothing);
    let sxx = smooth_real_with(&a.coefficients.mapv(|c| c.norm_sqr()), grid, dt, smoothing);
    let syy = smooth_real_with(&b.coefficients.mapv(|c| c.norm_sqr()), grid, dt, smoothing);

    let shape = sxy.raw_dim();
    let mut r2 = Array2::zeros(shape);
    let mut flagged = Array2::from_elem(shape, false);
    let mut worst: Option<((usize, usize), f64)> = None;
    for ((idx, &num), (&px, &py)) in sxy.indexed_iter().zip(sxx.iter().zip(syy.iter())) {
        if px < POWER_FLOOR || py < POWER_FLOOR {
            flagged[idx] = true;
            continue;
        }
        let ratio = num.norm_sqr() / (px * py);
        if ratio > 1.0 + R2_OVERSHOOT_TOLERANCE && worst.is_none_or(|(_, w)| ratio > w) {
            worst = Some((idx, ratio));
        }
        r2[idx] = ratio.min(1.0);
    }
    if let Some(((j, k), ratio)) = worst {
        return Err(Error::Numerical(format!(
            "coherence {ratio} exceeds one at scale {j}, sample {k}"
        )));
    }

    Ok(CoherenceMap {
        r2,
        phase: sxy.mapv(principal_arg),
        flagged,
        grid: grid.clone(),
        dt,
        coi: cross.coi,
        smoothing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwt::{cwt, ScaleGrid};
    use crate::wavelet::MotherWavelet;

    fn spectrum(x: &[f64], w: MotherWavelet) -> WaveletSpectrum {
        let grid = ScaleGrid::default_for(x.len(), 1.0).unwrap();
        cwt(x, &w, &grid, 1.0).unwrap()
    }

    fn wiggle(n: usize, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|k| (k as f64 * 0.37 + phase).sin() + 0.3 * (k as f64 * 0.05).cos())
            .collect()
    }

    #[test]
    fn cross_with_self_is_power() {
        let a = spectrum(&wiggle(64, 0.0), MotherWavelet::default());
        let c = cross_wavelet(&a, &a).unwrap();
        for (v, w) in c.values.iter().zip(a.coefficients.iter()) {
            let p = w.norm_sqr();
            assert!((v.re - p).abs() <= 1e-15 * p.max(1e-300));
            assert!(v.im.abs() <= 1e-15 * p);
            assert!(v.re >= 0.0);
        }
        assert!(phase_difference(&c).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn cross_with_negation() {
        let x = wiggle(64, 0.3);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let w = MotherWavelet::complex_morlet(1.5, 1.0).unwrap();
        let a = spectrum(&x, w);
        let b = spectrum(&neg, w);
        let c = cross_wavelet(&a, &b).unwrap();
        let phase = phase_difference(&c);
        for ((v, w), p) in c.values.iter().zip(a.coefficients.iter()).zip(phase.iter()) {
            assert_eq!(v.re, -w.norm_sqr());
            if w.norm() > 0.0 {
                assert_eq!(*p, PI);
            }
        }
    }

    #[test]
    fn mismatched_inputs_are_named() {
        let w = MotherWavelet::default();
        let a = spectrum(&wiggle(64, 0.0), w);
        let grid10 = ScaleGrid::build(64, 1.0, 2.5, 2).unwrap();
        let grid12 = ScaleGrid::build(64, 1.0, 1.2, 2).unwrap();
        assert_eq!((grid10.len(), grid12.len()), (10, 12));
        let b = cwt(&wiggle(64, 1.0), &w, &grid10, 1.0).unwrap();
        let c = cwt(&wiggle(64, 1.0), &w, &grid12, 1.0).unwrap();
        assert!(matches!(cross_wavelet(&b, &c), Err(Error::Incompatible { field: "grid", .. })));

        let other = spectrum(&wiggle(64, 0.0), MotherWavelet::complex_morlet(1.5, 1.0).unwrap());
        assert!(matches!(
            coherence(&a, &other),
            Err(Error::Incompatible { field: "wavelet", .. })
        ));

        let mut shifted = a.clone();
        shifted.dt = 2.0;
        assert!(matches!(cross_wavelet(&a, &shifted), Err(Error::Incompatible { field: "dt", .. })));
    }

    #[test]
    fn principal_arg_range() {
        assert_eq!(principal_arg(Complex64::new(-1.0, -0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(-1.0, 0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(0.0, 0.0)), 0.0);
        assert!((principal_arg(Complex64::new(0.0, -1.0)) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn standard_window_width() {
        assert_eq!(
            Smoothing::standard(12),
            Smoothing::Windowed {
                time_sigma: 1.0,
                truncation: 3.0,
                scale_rows: 7
            }
        );
        assert!(matches!(Smoothing::standard(1), Smoothing::Windowed { scale_rows: 1, .. }));
    }

    #[test]
    fn zero_inputs_are_flagged_not_divided() {
        let w = MotherWavelet::default();
        let a = spectrum(&[0.0; 32], w);
        let m = coherence(&a, &a).unwrap();
        assert_eq!(m.flagged_count(), m.r2.len());
        assert!(m.r2.iter().all(|&v| v == 0.0));
    }
}
