//! Price series, log returns, and date alignment.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daily closing prices for one instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    symbol: String,
    timestamps: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Fails unless lengths agree, dates strictly increase, and every price
    /// is finite and positive.
    pub fn new(
        symbol: impl Into<String>,
        timestamps: Vec<NaiveDate>,
        prices: Vec<f64>,
    ) -> Result<Self> {
        let symbol = symbol.into();
        if timestamps.len() != prices.len() {
            return Err(Error::Input(format!(
                "{symbol}: {} dates but {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "{symbol}: dates not strictly increasing at {} -> {}",
                timestamps[i],
                timestamps[i + 1]
            )));
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Input(format!(
                "{symbol}: non-positive price {} on {}",
                prices[i], timestamps[i]
            )));
        }
        Ok(Self {
            symbol,
            timestamps,
            prices,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Keeps only dates in `from..=to`.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> Self {
        let (timestamps, prices) = self
            .timestamps
            .iter()
            .zip(&self.prices)
            .filter(|(d, _)| (from..=to).contains(*d))
            .map(|(d, p)| (*d, *p))
            .unzip();
        Self {
            symbol: self.symbol.clone(),
            timestamps,
            prices,
        }
    }

    fn retain_dates(&self, keep: &HashSet<NaiveDate>) -> Self {
        let (timestamps, prices) = self
            .timestamps
            .iter()
            .zip(&self.prices)
            .filter(|(d, _)| keep.contains(*d))
            .map(|(d, p)| (*d, *p))
            .unzip();
        Self {
            symbol: self.symbol.clone(),
            timestamps,
            prices,
        }
    }
}

/// Log returns stamped with the date of the later of the two closes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    pub symbol: String,
    pub timestamps: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// `ln(p[i+1] / p[i])` between consecutive available closes.
pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::Input(format!(
            "{}: need at least 2 prices for a return, got {}",
            p.symbol,
            p.len()
        )));
    }
    let returns = p.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries {
        symbol: p.symbol.clone(),
        timestamps: p.timestamps[1..].to_vec(),
        returns,
    })
}

/// Restricts both series to the dates they have in common.
pub fn align(a: &PriceSeries, b: &PriceSeries) -> Result<(PriceSeries, PriceSeries)> {
    let in_b: HashSet<NaiveDate> = b.timestamps.iter().copied().collect();
    let common: HashSet<NaiveDate> = a
        .timestamps
        .iter()
        .copied()
        .filter(|d| in_b.contains(d))
        .collect();
    if common.is_empty() {
        return Err(Error::Empty(format!(
            "{} and {} share no dates",
            a.symbol, b.symbol
        )));
    }
    Ok((a.retain_dates(&common), b.retain_dates(&common)))
}
