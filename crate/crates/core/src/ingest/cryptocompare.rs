//! Paginated daily history from a CryptoCompare-style `histoday` endpoint.
//!
//! A request with `limit = L` and `toTs = T` returns the `L + 1` daily rows
//! ending at `T`. Pages are walked backwards from the end of the window, each
//! new page ending on the oldest date of the previous one; the shared row is
//! deduplicated with the later-fetched page taking precedence.

use std::collections::BTreeMap;
use std::fmt;
use std::thread;
use std::time::Duration;

use chrono::{DateTime, NaiveDate};
use log::{debug, info, warn};
use serde::Deserialize;

use super::transport::{HttpRequest, HttpResponse, Transport};
use crate::error::{Error, Result};
use crate::preprocess::PriceSeries;

/// Most rows one request may ask for.
pub const PAGE_ROWS: i64 = 2000;

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "WAVESCOPE_API_KEY";

pub const DEFAULT_ENDPOINT: &str = "https://min-api.cryptocompare.com/data/v2/histoday";

/// An API key that never shows up in debug output.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .map(Self)
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(***)")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchSpec {
    pub base_symbol: String,
    pub quote_symbol: String,
    pub from_date: NaiveDate,
    pub to_date: NaiveDate,
    pub endpoint: String,
    pub api_key: Option<ApiKey>,
}

impl FetchSpec {
    pub fn new(
        base_symbol: impl Into<String>,
        quote_symbol: impl Into<String>,
        from_date: NaiveDate,
        to_date: NaiveDate,
    ) -> Result<Self> {
        if from_date > to_date {
            return Err(Error::Input(format!(
                "window starts {from_date} after it ends {to_date}"
            )));
        }
        Ok(Self {
            base_symbol: base_symbol.into(),
            quote_symbol: quote_symbol.into(),
            from_date,
            to_date,
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key: None,
        })
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }

    pub fn with_api_key(mut self, key: Option<ApiKey>) -> Self {
        self.api_key = key;
        self
    }

    /// `BASE/QUOTE`
    pub fn pair(&self) -> String {
        format!("{}/{}", self.base_symbol, self.quote_symbol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each further one.
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub requests: usize,
    pub dropped_nonpositive: usize,
}

pub(crate) fn date_to_epoch(d: NaiveDate) -> i64 {
    d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()
}

fn epoch_to_date(t: i64) -> Option<NaiveDate> {
    DateTime::from_timestamp(t, 0).map(|dt| dt.date_naive())
}

#[derive(Deserialize)]
struct Envelope {
    #[serde(rename = "Response")]
    response: Option<String>,
    #[serde(rename = "Message", default)]
    message: String,
    #[serde(rename = "Data")]
    data: Option<Payload>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Payload {
    Wrapped {
        #[serde(rename = "Data")]
        data: Vec<Row>,
    },
    Bare(Vec<Row>),
}

#[derive(Deserialize)]
struct Row {
    time: i64,
    close: f64,
}

pub fn fetch_daily_history(spec: &FetchSpec, transport: &dyn Transport) -> Result<PriceSeries> {
    fetch_daily_history_with(spec, transport, RetryPolicy::default()).map(|(s, _)| s)
}

pub fn fetch_daily_history_with(
    spec: &FetchSpec,
    transport: &dyn Transport,
    retry: RetryPolicy,
) -> Result<(PriceSeries, FetchReport)> {
    let mut rows: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    let mut report = FetchReport::default();
    let mut cursor = spec.to_date;

    loop {
        let wanted = (cursor - spec.from_date).num_days() + 1;
        // limit + 1 rows come back; the endpoint needs limit >= 1
        let limit = (wanted.min(PAGE_ROWS) - 1).max(1);
        let request = page_request(spec, limit, date_to_epoch(cursor));
        let page = get_with_retry(transport, &request, retry)?;
        report.requests += 1;
        let page = parse_page(&page, &spec.pair())?;
        debug!("{}: page ending {cursor} returned {} rows", spec.pair(), page.len());

        let Some(&(oldest, _)) = page.first() else { break };
        for (date, close) in page {
            rows.insert(date, close);
        }
        if oldest <= spec.from_date || oldest >= cursor {
            break;
        }
        cursor = oldest;
    }

    let rows: BTreeMap<NaiveDate, f64> = rows
        .range(spec.from_date..=spec.to_date)
        .map(|(d, c)| (*d, *c))
        .collect();
    check_contiguous(&rows)?;

    let before = rows.len();
    let (dates, closes): (Vec<_>, Vec<_>) = rows
        .into_iter()
        .filter(|(_, c)| c.is_finite() && *c > 0.0)
        .unzip();
    report.dropped_nonpositive = before - dates.len();
    if report.dropped_nonpositive > 0 {
        warn!(
            "{}: dropped {} rows with non-positive close",
            spec.pair(),
            report.dropped_nonpositive
        );
    }
    if dates.is_empty() {
        return Err(Error::Empty(format!(
            "{}: no positive closes between {} and {}",
            spec.pair(),
            spec.from_date,
            spec.to_date
        )));
    }
    info!(
        "{}: {} closes in {} request(s)",
        spec.pair(),
        dates.len(),
        report.requests
    );
    Ok((PriceSeries::new(spec.pair(), dates, closes)?, report))
}

fn page_request(spec: &FetchSpec, limit: i64, to_ts: i64) -> HttpRequest {
    let mut headers = Vec::new();
    if let Some(key) = &spec.api_key {
        headers.push(("authorization".to_string(), format!("Apikey {}", key.expose())));
    }
    HttpRequest {
        url: spec.endpoint.clone(),
        query: vec![
            ("fsym".into(), spec.base_symbol.clone()),
            ("tsym".into(), spec.quote_symbol.clone()),
            ("limit".into(), limit.to_string()),
            ("toTs".into(), to_ts.to_string()),
        ],
        headers,
    }
}

fn get_with_retry(
    transport: &dyn Transport,
    request: &HttpRequest,
    retry: RetryPolicy,
) -> Result<HttpResponse> {
    let attempts = retry.attempts.max(1);
    let mut backoff = retry.initial_backoff;
    let mut last = String::new();
    for attempt in 1..=attempts {
        match transport.get(request) {
            Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp),
            Ok(resp) => last = format!("HTTP {}: {}", resp.status, truncate(&resp.body)),
            Err(e) => last = e,
        }
        if attempt < attempts {
            warn!("attempt {attempt}/{attempts} failed ({last}); retrying in {backoff:?}");
            if !backoff.is_zero() {
                thread::sleep(backoff);
            }
            backoff *= 2;
        }
    }
    Err(Error::Transport {
        attempts,
        message: last,
    })
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Rows of one page in ascending date order.
fn parse_page(resp: &HttpResponse, pair: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let envelope: Envelope = serde_json::from_str(&resp.body).map_err(|e| Error::Parse {
        source_name: format!("{pair} histoday response"),
        row: 0,
        message: e.to_string(),
    })?;
    if envelope.response.as_deref() == Some("Error") {
        return Err(Error::Transport {
            attempts: 1,
            message: format!("{pair}: endpoint error: {}", envelope.message),
        });
    }
    let rows = match envelope.data {
        Some(Payload::Wrapped { data }) | Some(Payload::Bare(data)) => data,
        None => Vec::new(),
    };
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let date = epoch_to_date(row.time).ok_or_else(|| Error::Parse {
            source_name: format!("{pair} histoday response"),
            row: i + 1,
            message: format!("bad timestamp {}", row.time),
        })?;
        out.push((date, row.close));
    }
    out.sort_by_key(|(d, _)| *d);
    Ok(out)
}

fn check_contiguous(rows: &BTreeMap<NaiveDate, f64>) -> Result<()> {
    let (Some(first), Some(last)) = (rows.keys().next(), rows.keys().next_back()) else {
        return Ok(());
    };
    let missing: Vec<NaiveDate> = first
        .iter_days()
        .take_while(|d| d <= last)
        .filter(|d| !rows.contains_key(d))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Integrity { missing })
    }
}
