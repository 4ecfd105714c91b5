//! On-disk cache of raw price pulls: one `date,close` CSV per
//! (pair, window, source), ending in a `# rows=N` trailer so that truncated
//! files are detected.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::warn;

use super::csv_source::{parse_prices, CsvSchema};
use crate::error::{Error, Result};
use crate::preprocess::PriceSeries;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub pair: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub source: String,
}

impl CacheKey {
    pub fn new(pair: &str, from: NaiveDate, to: NaiveDate, source: &str) -> Self {
        Self {
            pair: pair.to_string(),
            from,
            to,
            source: source.to_string(),
        }
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}_{}.csv",
            sanitize(&self.pair),
            self.from.format("%Y%m%d"),
            self.to.format("%Y%m%d"),
            sanitize(&self.source)
        )
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheLookup {
    Hit(PriceSeries),
    Miss,
    /// Present but unreadable; callers treat it as a miss.
    Corrupt(String),
}

impl CacheLookup {
    pub fn into_hit(self) -> Option<PriceSeries> {
        match self {
            CacheLookup::Hit(s) => Some(s),
            _ => None,
        }
    }
}

/// Serialized cache body. Byte-stable for equal series.
pub fn encode(series: &PriceSeries) -> String {
    let mut out = String::from("date,close\n");
    for (d, p) in series.timestamps().iter().zip(series.prices()) {
        let _ = writeln!(out, "{},{}", d.format("%Y-%m-%d"), p);
    }
    let _ = writeln!(out, "# rows={}", series.len());
    out
}

/// Writes through a temporary file in `dir` and renames it into place.
pub fn cache_put(series: &PriceSeries, key: &CacheKey, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(key.file_name());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(encode(series).as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
    Ok(path)
}

pub fn cache_get(key: &CacheKey, dir: &Path) -> CacheLookup {
    let path = dir.join(key.file_name());
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return CacheLookup::Miss,
        Err(e) => return corrupt(&path, e.to_string()),
    };
    let Some(expected) = trailer_rows(&text) else {
        return corrupt(&path, "missing row-count trailer".into());
    };
    match parse_prices(text.as_bytes(), &path.display().to_string(), &key.pair, &CsvSchema::plain()) {
        Ok((series, report)) if series.len() == expected && report.dropped_missing == 0 => {
            CacheLookup::Hit(series)
        }
        Ok((series, _)) => corrupt(
            &path,
            format!("trailer says {expected} rows, found {}", series.len()),
        ),
        Err(e) => corrupt(&path, e.to_string()),
    }
}

fn trailer_rows(text: &str) -> Option<usize> {
    let last = text.strip_suffix('\n')?.lines().next_back()?;
    last.strip_prefix("# rows=")?.parse().ok()
}

fn corrupt(path: &Path, reason: String) -> CacheLookup {
    warn!("ignoring corrupt cache file {}: {reason}", path.display());
    CacheLookup::Corrupt(reason)
}
