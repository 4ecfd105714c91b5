use serde::Serialize;

use super::quantile_sorted;
use crate::cwt::PowerSpectrum;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_RUN: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeRun {
    /// Inclusive time indices.
    pub start: usize,
    pub end: usize,
    /// Median argmax scale index over the run (half-integer for even splits).
    pub median_index: f64,
    pub median_scale: f64,
    /// Interquartile range of the scale indices.
    pub dispersion: f64,
}

impl RidgeRun {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeReport {
    pub min_run: usize,
    /// Per-time argmax scale index; `None` where no scale is inside the cone.
    pub argmax: Vec<Option<usize>>,
    pub runs: Vec<RidgeRun>,
}

/// Per-time argmax over in-COI scales, then greedy left-to-right maximal
/// runs whose every element stays within one voice of the run median.
/// Runs shorter than `min_run` are discarded.
pub fn detect_ridges(p: &PowerSpectrum, min_run: usize) -> Result<RidgeReport> {
    if min_run < 2 {
        return Err(Error::Input(format!("min_run must be at least 2, got {min_run}")));
    }
    let (nj, nk) = p.values.dim();
    let argmax: Vec<Option<usize>> = (0..nk)
        .map(|k| {
            (0..nj)
                .filter(|&j| p.in_coi(j, k))
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if p.values[[b, k]] >= p.values[[j, k]] => Some(b),
                    _ => Some(j),
                })
        })
        .collect();

    let mut runs = Vec::new();
    let mut k = 0;
    while k < nk {
        let Some(first) = argmax[k] else {
            k += 1;
            continue;
        };
        let mut hist = Histogram::new(nj);
        hist.add(first);
        let mut end = k;
        while end + 1 < nk {
            let Some(next) = argmax[end + 1] else { break };
            hist.add(next);
            if hist.within_one_of_median() {
                end += 1;
            } else {
                hist.remove(next);
                break;
            }
        }
        if end - k + 1 >= min_run {
            let mut idx: Vec<f64> = argmax[k..=end].iter().map(|a| a.unwrap() as f64).collect();
            idx.sort_by(f64::total_cmp);
            let median_index = hist.median();
            runs.push(RidgeRun {
                start: k,
                end,
                median_index,
                median_scale: interpolate_scale(p.grid.scales(), median_index),
                dispersion: quantile_sorted(&idx, 0.75) - quantile_sorted(&idx, 0.25),
            });
        }
        k = end + 1;
    }
    Ok(RidgeReport {
        min_run,
        argmax,
        runs,
    })
}

fn interpolate_scale(scales: &[f64], index: f64) -> f64 {
    let lo = index.floor() as usize;
    let hi = (lo + 1).min(scales.len() - 1);
    let t = index - lo as f64;
    // geometric grid: interpolate in log scale
    (scales[lo].ln() * (1.0 - t) + scales[hi].ln() * t).exp()
}

struct Histogram {
    counts: Vec<usize>,
    total: usize,
    lo: usize,
    hi: usize,
}

impl Histogram {
    fn new(bins: usize) -> Self {
        Self {
            counts: vec![0; bins],
            total: 0,
            lo: usize::MAX,
            hi: 0,
        }
    }

    fn add(&mut self, j: usize) {
        self.counts[j] += 1;
        self.total += 1;
        self.lo = self.lo.min(j);
        self.hi = self.hi.max(j);
    }

    fn remove(&mut self, j: usize) {
        self.counts[j] -= 1;
        self.total -= 1;
        while self.lo < self.counts.len() && self.counts[self.lo] == 0 {
            self.lo += 1;
        }
        while self.hi > 0 && self.counts[self.hi] == 0 {
            self.hi -= 1;
        }
    }

    /// Value of the element at sorted position `rank` (0-based).
    fn nth(&self, rank: usize) -> usize {
        let mut seen = 0;
        for j in self.lo..=self.hi {
            seen += self.counts[j];
            if seen > rank {
                return j;
            }
        }
        self.hi
    }

    fn median(&self) -> f64 {
        let a = self.nth((self.total - 1) / 2);
        let b = self.nth(self.total / 2);
        (a + b) as f64 / 2.0
    }

    fn within_one_of_median(&self) -> bool {
        let m = self.median();
        self.lo as f64 >= m - 1.0 && self.hi as f64 <= m + 1.0
    }
}
