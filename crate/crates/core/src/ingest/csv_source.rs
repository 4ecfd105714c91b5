//! Price CSVs in the FRED and investing.com export layouts.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecimalStyle {
    Plain,
    /// `1,234.56`
    ThousandsSeparated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrder {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub price_column: String,
    /// chrono format string, e.g. `%Y-%m-%d`
    pub date_format: String,
    pub decimal_style: DecimalStyle,
    pub order: RowOrder,
}

impl CsvSchema {
    /// FRED download: `observation_date,<SERIES>` with `.` or blank for gaps.
    pub fn fred(series_id: &str) -> Self {
        Self {
            date_column: "observation_date".into(),
            price_column: series_id.into(),
            date_format: "%Y-%m-%d".into(),
            decimal_style: DecimalStyle::Plain,
            order: RowOrder::Ascending,
        }
    }

    /// investing.com historical-data export: newest first, `MM/DD/YYYY`,
    /// quoted prices with thousands separators.
    pub fn investing() -> Self {
        Self {
            date_column: "Date".into(),
            price_column: "Price".into(),
            date_format: "%m/%d/%Y".into(),
            decimal_style: DecimalStyle::ThousandsSeparated,
            order: RowOrder::Descending,
        }
    }

    /// The two-column `date,close` layout used by the cache.
    pub fn plain() -> Self {
        Self {
            date_column: "date".into(),
            price_column: "close".into(),
            date_format: "%Y-%m-%d".into(),
            decimal_style: DecimalStyle::Plain,
            order: RowOrder::Ascending,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.date_column == self.price_column {
            return Err(Error::Config(format!(
                "date and price columns are both {:?}",
                self.date_column
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped_missing: usize,
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<PriceSeries> {
    load_csv_with_report(path, schema).map(|(s, _)| s)
}

pub fn load_csv_with_report(path: &Path, schema: &CsvSchema) -> Result<(PriceSeries, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_prices(file, &path.display().to_string(), &symbol, schema)
}

/// Parses CSV text from any reader; `source_name` only labels errors.
pub fn parse_prices<R: Read>(
    reader: R,
    source_name: &str,
    symbol: &str,
    schema: &CsvSchema,
) -> Result<(PriceSeries, LoadReport)> {
    schema.validate()?;
    let parse_err = |row: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        row,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| parse_err(1, format!("unknown column {name:?}")))
    };
    let date_idx = column(&schema.date_column)?;
    let price_idx = column(&schema.price_column)?;

    let mut report = LoadReport::default();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        report.rows_read += 1;

        let raw_date = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, &schema.date_format)
            .map_err(|e| parse_err(line, format!("date {raw_date:?}: {e}")))?;

        let raw_price = record.get(price_idx).unwrap_or("");
        if raw_price.is_empty() || raw_price == "." {
            report.dropped_missing += 1;
            continue;
        }
        let cleaned = match schema.decimal_style {
            DecimalStyle::Plain => raw_price.to_string(),
            DecimalStyle::ThousandsSeparated => raw_price.replace(',', ""),
        };
        let price: f64 = cleaned
            .parse()
            .map_err(|_| parse_err(line, format!("price {raw_price:?} is not a number")))?;
        rows.push((date, price));
    }
    if report.dropped_missing > 0 {
        warn!(
            "{source_name}: dropped {} rows with missing price",
            report.dropped_missing
        );
    }
    if schema.order == RowOrder::Descending {
        rows.reverse();
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("{source_name}: no price rows")));
    }
    let (dates, prices) = rows.into_iter().unzip();
    Ok((PriceSeries::new(symbol, dates, prices)?, report))
}
