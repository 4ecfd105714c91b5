use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of scales per octave.
pub const DEFAULT_VOICES: u32 = 12;

/// Dyadic scale grid `scales[j] = s0 · 2^(j / voices)`.
///
/// Scales are expressed in the same time unit as the sampling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    s0: f64,
    voices: u32,
    scales: Vec<f64>,
}

impl ScaleGrid {
    /// Builds the largest grid starting at `s0` whose top scale does not
    /// exceed the record length `n · dt`.
    pub fn build(n: usize, dt: f64, s0: f64, voices: u32) -> Result<Self> {
        if n < 8 {
            return Err(Error::Input(format!("series length {n} is below the minimum of 8")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::Domain(format!("s0 must be positive, got {s0}")));
        }
        if voices == 0 {
            return Err(Error::Domain("voices per octave must be at least 1".into()));
        }
        let record = n as f64 * dt;
        if s0 >= record {
            return Err(Error::Domain(format!(
                "s0 = {s0} is not below the record length {record}; the scale grid would be empty"
            )));
        }
        let octaves = (record / s0).log2();
        let mut top = (voices as f64 * octaves + 1e-9).floor() as usize;
        while top > 0 && scale_at(s0, voices, top) > record * (1.0 + 1e-12) {
            top -= 1;
        }
        let scales = (0..=top).map(|j| scale_at(s0, voices, j)).collect();
        Ok(Self { s0, voices, scales })
    }

    /// Grid with `s0 = 2·dt` and twelve voices per octave.
    pub fn default_for(n: usize, dt: f64) -> Result<Self> {
        Self::build(n, dt, 2.0 * dt, DEFAULT_VOICES)
    }

    /// Rebuilds a grid from an explicit scale list, checking that it is dyadic
    /// with the given number of voices.
    pub fn from_scales(scales: Vec<f64>, voices: u32) -> Result<Self> {
        let Some(&s0) = scales.first() else {
            return Err(Error::Input("empty scale list".into()));
        };
        if voices == 0 || !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::Domain("scales must be positive with at least one voice".into()));
        }
        for (j, &s) in scales.iter().enumerate() {
            let expected = scale_at(s0, voices, j);
            if (s - expected).abs() > 1e-9 * expected {
                return Err(Error::Input(format!(
                    "scale {j} = {s} does not follow s0·2^(j/{voices}) = {expected}"
                )));
            }
        }
        Ok(Self { s0, voices, scales })
    }

    /// Infers the voice count from the ratio of the first two scales.
    pub fn infer_voices(scales: &[f64]) -> Option<u32> {
        let [a, b, ..] = scales else { return None };
        let per_step = (b / a).log2();
        if !(per_step.is_finite() && per_step > 0.0) {
            return None;
        }
        let v = (1.0 / per_step).round();
        (v >= 1.0).then_some(v as u32)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn voices(&self) -> u32 {
        self.voices
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Position of `scale` on the grid in units of voices (fractional).
    pub fn voice_position(&self, scale: f64) -> f64 {
        self.voices as f64 * (scale / self.s0).log2()
    }
}

fn scale_at(s0: f64, voices: u32, j: usize) -> f64 {
    s0 * 2f64.powf(j as f64 / voices as f64)
}
