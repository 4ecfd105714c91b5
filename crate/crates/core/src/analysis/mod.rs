//! Detectors over a power spectrum: high-power regions at small scales and
//! persistent power-maximizing scales.

mod hotspots;
mod ridges;

pub use hotspots::{detect_hotspots, hotspot_band, HotspotRegion, HotspotReport, DEFAULT_MAX_FREQUENCY, DEFAULT_QUANTILE};
pub use ridges::{detect_ridges, RidgeReport, RidgeRun, DEFAULT_MIN_RUN};

/// Linear-interpolation quantile of sorted data (the R-7 / numpy default).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
