//! Mother wavelets: the Morlet and complex Morlet (Gabor) families.
//!
//! Both are a complex carrier `exp(iωt)` under a Gaussian envelope:
//!
//! * Morlet: `π^(-1/4) · exp(-t²/2) · exp(iωt)`
//! * complex Morlet: `(πδ)^(-1/4) · exp(-t²/δ) · exp(iωt)`
//!
//! The Morlet form carries no admissibility correction term, so its mean is
//! not exactly zero. [`admissibility_diagnostic`] reports the residual.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Envelope level below which the wavelet is treated as zero.
pub const ENVELOPE_CUTOFF: f64 = 1e-12;

/// Conventional Morlet carrier frequency.
pub const MORLET_DEFAULT_OMEGA: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Morlet,
    ComplexMorlet,
}

/// A member of one of the two wavelet families.
///
/// For [`Family::Morlet`] the `delta` field is carried but never read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotherWavelet {
    family: Family,
    omega: f64,
    delta: f64,
}

impl MotherWavelet {
    pub fn morlet(omega: f64) -> Result<Self> {
        check_positive("omega", omega)?;
        Ok(Self {
            family: Family::Morlet,
            omega,
            delta: 0.0,
        })
    }

    pub fn complex_morlet(delta: f64, omega: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        check_positive("omega", omega)?;
        Ok(Self {
            family: Family::ComplexMorlet,
            omega,
            delta,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Bandwidth parameter, `None` for the Morlet family.
    pub fn delta(&self) -> Option<f64> {
        match self.family {
            Family::Morlet => None,
            Family::ComplexMorlet => Some(self.delta),
        }
    }

    /// `ψ(t)` as printed for each family.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        let carrier = Complex64::from_polar(1.0, self.omega * t);
        carrier * (self.norm() * self.envelope(t))
    }

    /// The Gaussian envelope without its normalization constant.
    pub fn envelope(&self, t: f64) -> f64 {
        match self.family {
            Family::Morlet => (-t * t / 2.0).exp(),
            Family::ComplexMorlet => (-t * t / self.delta).exp(),
        }
    }

    fn norm(&self) -> f64 {
        match self.family {
            Family::Morlet => PI.powf(-0.25),
            Family::ComplexMorlet => (PI * self.delta).powf(-0.25),
        }
    }

    /// Half-width of the interval outside of which the envelope is below
    /// [`ENVELOPE_CUTOFF`].
    pub fn support_radius(&self) -> f64 {
        let log_cut = -ENVELOPE_CUTOFF.ln();
        match self.family {
            Family::Morlet => (2.0 * log_cut).sqrt(),
            Family::ComplexMorlet => (self.delta * log_cut).sqrt(),
        }
    }

    /// Time at which the envelope has fallen to `1/e`.
    pub fn e_folding_time(&self) -> f64 {
        match self.family {
            Family::Morlet => SQRT_2,
            Family::ComplexMorlet => self.delta.sqrt(),
        }
    }

    /// Carrier frequency in cycles per unit time.
    pub fn center_frequency(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    /// Frequency probed at `scale` for a series sampled every `dt`.
    pub fn scale_to_frequency(&self, scale: f64, dt: f64) -> Result<f64> {
        check_positive("scale", scale)?;
        check_positive("dt", dt)?;
        Ok(self.center_frequency() / (scale * dt))
    }

    /// Inverse of [`scale_to_frequency`](Self::scale_to_frequency).
    pub fn frequency_to_scale(&self, frequency: f64, dt: f64) -> Result<f64> {
        check_positive("frequency", frequency)?;
        check_positive("dt", dt)?;
        Ok(self.center_frequency() / (frequency * dt))
    }
}

impl Default for MotherWavelet {
    fn default() -> Self {
        Self {
            family: Family::Morlet,
            omega: MORLET_DEFAULT_OMEGA,
            delta: 0.0,
        }
    }
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {value}")))
    }
}

/// Canonical label: `morl` or `cmor{δ}-{ω}`.
impl fmt::Display for MotherWavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Morlet if self.omega == MORLET_DEFAULT_OMEGA => f.write_str("morl"),
            Family::Morlet => write!(f, "morl{}", Decimal(self.omega)),
            Family::ComplexMorlet => {
                write!(f, "cmor{}-{}", Decimal(self.delta), Decimal(self.omega))
            }
        }
    }
}

/// Shortest round-trip decimal, always with a fractional part (`1.0`, not `1`).
struct Decimal(f64);

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{}", self.0);
        if s.contains('.') {
            f.write_str(&s)
        } else {
            write!(f, "{s}.0")
        }
    }
}

impl FromStr for MotherWavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_wavelet_name(s)
    }
}

/// Parses `morl` (ω = 6), `morl{ω}`, or `cmor{δ}-{ω}`.
pub fn parse_wavelet_name(name: &str) -> Result<MotherWavelet> {
    let bad = |token: &str, reason: &'static str| Error::WaveletName {
        name: name.to_string(),
        token: token.to_string(),
        reason,
    };
    let trimmed = name.trim();

    if let Some(rest) = trimmed.strip_prefix("cmor") {
        let (d, w) = rest
            .split_once('-')
            .ok_or_else(|| bad(rest, "expected cmor<delta>-<omega>"))?;
        let delta = parse_decimal(d).map_err(|reason| bad(d, reason))?;
        let omega = parse_decimal(w).map_err(|reason| bad(w, reason))?;
        return Ok(MotherWavelet {
            family: Family::ComplexMorlet,
            omega,
            delta,
        });
    }
    if let Some(rest) = trimmed.strip_prefix("morl") {
        if rest.is_empty() {
            return Ok(MotherWavelet::default());
        }
        let omega = parse_decimal(rest).map_err(|reason| bad(rest, reason))?;
        return Ok(MotherWavelet {
            family: Family::Morlet,
            omega,
            delta: 0.0,
        });
    }
    Err(bad(trimmed, "unknown wavelet family (expected morl or cmor)"))
}

fn parse_decimal(token: &str) -> std::result::Result<f64, &'static str> {
    if token.is_empty() {
        return Err("empty number");
    }
    if !token.chars().all(|c| c.is_ascii_digit() || c == '.') || token.matches('.').count() > 1 {
        return Err("not a decimal literal");
    }
    let value: f64 = token.parse().map_err(|_| "not a decimal literal")?;
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err("must be positive")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// `|∫ψ(t) dt|`
    pub mean_modulus: f64,
    pub admissible: bool,
}

/// Integrates `ψ` by the trapezoid rule over the window where its envelope
/// exceeds [`ENVELOPE_CUTOFF`] and compares the modulus to `tolerance`.
pub fn admissibility_diagnostic(w: &MotherWavelet, tolerance: f64) -> Result<AdmissibilityReport> {
    check_positive("tolerance", tolerance)?;
    let radius = w.support_radius();
    // Fine enough that aliasing of the carrier is far below f64 resolution.
    let step = 1e-3_f64.min(0.05 / w.omega().max(1.0));
    let half = (radius / step).ceil() as i64;
    let sum: Complex64 = (-half..=half)
        .map(|i| {
            let weight = if i.abs() == half { 0.5 } else { 1.0 };
            w.evaluate(i as f64 * step) * weight
        })
        .sum();
    let mean_modulus = (sum * step).norm();
    Ok(AdmissibilityReport {
        mean_modulus,
        admissible: mean_modulus <= tolerance,
    })
}
