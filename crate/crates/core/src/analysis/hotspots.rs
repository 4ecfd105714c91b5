use serde::Serialize;

use super::quantile_sorted;
use crate::cwt::{scale_for_frequency, PowerSpectrum, ScaleGrid};
use crate::error::{Error, Result};
use crate::wavelet::MotherWavelet;

pub const DEFAULT_QUANTILE: f64 = 0.95;
/// Cycles per time unit; with daily data, one cycle per 8 days.
pub const DEFAULT_MAX_FREQUENCY: f64 = 1.0 / 8.0;

/// Scale ceiling for a frequency floor. When the floor lies above every
/// frequency the grid resolves (low-ω wavelets), the band falls back to the
/// grid's lowest octave and the second value is `true`.
pub fn hotspot_band(w: &MotherWavelet, grid: &ScaleGrid, min_frequency: f64, dt: f64) -> Result<(f64, bool)> {
    let bound = scale_for_frequency(w, min_frequency, dt)?;
    if bound < grid.s0() {
        Ok((2.0 * grid.s0(), true))
    } else {
        Ok((bound, false))
    }
}

/// One maximal 4-connected group of above-threshold cells. Ranges are
/// inclusive index ranges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotspotRegion {
    pub time_range: (usize, usize),
    pub scale_range: (usize, usize),
    pub peak_power: f64,
    /// (scale index, time index) of the peak.
    pub peak_cell: (usize, usize),
    /// Fraction of candidate cells with power ≤ the peak.
    pub quantile_rank: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotspotReport {
    pub quantile: f64,
    pub threshold: f64,
    pub max_scale: f64,
    /// Set when the configured band was empty and the lowest octave was used.
    pub band_widened: bool,
    pub candidate_cells: usize,
    pub passing_cells: usize,
    pub regions: Vec<HotspotRegion>,
}

/// Thresholds in-COI power with `scale <= max_scale` at its `q`-quantile;
/// cells strictly above it are grouped into 4-connected regions, sorted by
/// peak power (ties: earlier time, then smaller scale).
pub fn detect_hotspots(p: &PowerSpectrum, q: f64, max_scale: f64) -> Result<HotspotReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Input(format!("quantile must lie in (0, 1), got {q}")));
    }
    if !(max_scale > 0.0 && max_scale.is_finite()) {
        return Err(Error::Input(format!("max_scale must be positive, got {max_scale}")));
    }
    let (nj, nk) = p.values.dim();
    let rows = p.grid.scales().iter().take_while(|&&s| s <= max_scale).count();

    let candidate = |j: usize, k: usize| j < rows && p.in_coi(j, k);
    let mut values: Vec<f64> = Vec::new();
    for j in 0..rows {
        for k in 0..nk {
            if candidate(j, k) {
                values.push(p.values[[j, k]]);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Input(format!(
            "no cells inside the cone of influence at scales <= {max_scale}"
        )));
    }
    values.sort_by(f64::total_cmp);
    let threshold = quantile_sorted(&values, q);

    let passes = |j: usize, k: usize| candidate(j, k) && p.values[[j, k]] > threshold;
    let mut seen = vec![false; nj * nk];
    let mut regions = Vec::new();
    let mut passing_cells = 0;
    let mut stack = Vec::new();
    for k in 0..nk {
        for j in 0..rows {
            if seen[j * nk + k] || !passes(j, k) {
                continue;
            }
            seen[j * nk + k] = true;
            stack.push((j, k));
            let mut region = HotspotRegion {
                time_range: (k, k),
                scale_range: (j, j),
                peak_power: p.values[[j, k]],
                peak_cell: (j, k),
                quantile_rank: 0.0,
                cells: 0,
            };
            while let Some((cj, ck)) = stack.pop() {
                region.cells += 1;
                region.time_range = (region.time_range.0.min(ck), region.time_range.1.max(ck));
                region.scale_range = (region.scale_range.0.min(cj), region.scale_range.1.max(cj));
                let v = p.values[[cj, ck]];
                if v > region.peak_power || (v == region.peak_power && (ck, cj) < (region.peak_cell.1, region.peak_cell.0)) {
                    region.peak_power = v;
                    region.peak_cell = (cj, ck);
                }
                let neighbours = [
                    (cj.wrapping_sub(1), ck),
                    (cj + 1, ck),
                    (cj, ck.wrapping_sub(1)),
                    (cj, ck + 1),
                ];
                for (nj2, nk2) in neighbours {
                    if nj2 < rows && nk2 < nk && !seen[nj2 * nk + nk2] && passes(nj2, nk2) {
                        seen[nj2 * nk + nk2] = true;
                        stack.push((nj2, nk2));
                    }
                }
            }
            let at_or_below = values.partition_point(|&x| x <= region.peak_power);
            region.quantile_rank = at_or_below as f64 / values.len() as f64;
            passing_cells += region.cells;
            regions.push(region);
        }
    }
    regions.sort_by(|a, b| {
        b.peak_power
            .total_cmp(&a.peak_power)
            .then(a.peak_cell.1.cmp(&b.peak_cell.1))
            .then(a.peak_cell.0.cmp(&b.peak_cell.0))
    });

    Ok(HotspotReport {
        quantile: q,
        threshold,
        max_scale,
        band_widened: false,
        candidate_cells: values.len(),
        passing_cells,
        regions,
    })
}
