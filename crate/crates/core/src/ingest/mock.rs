//! In-process stand-in for a `histoday` endpoint.

use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::{DateTime, Days, NaiveDate};
use serde_json::json;

use super::cryptocompare::{date_to_epoch, PAGE_ROWS};
use super::transport::{HttpRequest, HttpResponse, Transport};

/// What the mock saw for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub fsym: String,
    pub tsym: String,
    pub limit: i64,
    pub to_ts: i64,
    /// Rows this request asked for (`limit + 1`, the endpoint's convention).
    pub requested_rows: i64,
}

/// Serves daily closes from an in-memory table with the real endpoint's
/// paging rules: `limit + 1` rows ending at `toTs`, at most
/// [`PAGE_ROWS`] per request.
pub struct MockHistodayServer {
    closes: BTreeMap<(String, String), BTreeMap<NaiveDate, f64>>,
    page_rows: i64,
    failures_left: Mutex<u32>,
    log: Mutex<Vec<RecordedRequest>>,
    violations: Mutex<Vec<String>>,
}

impl Default for MockHistodayServer {
    fn default() -> Self {
        Self::new()
    }
}

impl MockHistodayServer {
    pub fn new() -> Self {
        Self {
            closes: BTreeMap::new(),
            page_rows: PAGE_ROWS,
            failures_left: Mutex::new(0),
            log: Mutex::new(Vec::new()),
            violations: Mutex::new(Vec::new()),
        }
    }

    /// Adds one close per day for `from..=to`, valued by `price(day_index)`.
    pub fn with_daily(
        mut self,
        fsym: &str,
        tsym: &str,
        from: NaiveDate,
        to: NaiveDate,
        price: impl Fn(usize) -> f64,
    ) -> Self {
        let table = self
            .closes
            .entry((fsym.to_string(), tsym.to_string()))
            .or_default();
        for (i, day) in from.iter_days().take_while(|d| *d <= to).enumerate() {
            table.insert(day, price(i));
        }
        self
    }

    /// Removes the given dates from a pair's table.
    pub fn without_dates(mut self, fsym: &str, tsym: &str, dates: &[NaiveDate]) -> Self {
        if let Some(table) = self.closes.get_mut(&(fsym.to_string(), tsym.to_string())) {
            for d in dates {
                table.remove(d);
            }
        }
        self
    }

    /// The next `count` requests fail with HTTP 503.
    pub fn failing_first(self, count: u32) -> Self {
        *self.failures_left.lock().unwrap() = count;
        self
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.log.lock().unwrap().clone()
    }

    /// Requests that broke the paging contract.
    pub fn violations(&self) -> Vec<String> {
        self.violations.lock().unwrap().clone()
    }

    fn respond(&self, request: &HttpRequest) -> HttpResponse {
        let param = |name: &str| request.query_param(name).unwrap_or_default().to_string();
        let (fsym, tsym) = (param("fsym"), param("tsym"));
        let (Ok(limit), Ok(to_ts)) = (param("limit").parse::<i64>(), param("toTs").parse::<i64>())
        else {
            return error_body(400, "bad limit/toTs");
        };
        let requested_rows = limit + 1;
        self.log.lock().unwrap().push(RecordedRequest {
            fsym: fsym.clone(),
            tsym: tsym.clone(),
            limit,
            to_ts,
            requested_rows,
        });
        if limit < 0 || requested_rows > self.page_rows {
            self.violations
                .lock()
                .unwrap()
                .push(format!("limit {limit} asks for {requested_rows} rows"));
            return error_body(400, "limit exceeds page size");
        }

        {
            let mut left = self.failures_left.lock().unwrap();
            if *left > 0 {
                *left -= 1;
                return HttpResponse {
                    status: 503,
                    body: "service unavailable".into(),
                };
            }
        }

        let Some(last) = DateTime::from_timestamp(to_ts, 0).map(|t| t.date_naive()) else {
            return error_body(400, "bad toTs");
        };
        let first = last - Days::new(limit as u64);
        let rows: Vec<_> = self
            .closes
            .get(&(fsym, tsym))
            .map(|table| {
                table
                    .range(first..=last)
                    .map(|(d, c)| json!({ "time": date_to_epoch(*d), "close": c }))
                    .collect()
            })
            .unwrap_or_default();
        let body = json!({
            "Response": "Success",
            "Message": "",
            "Data": {
                "Aggregated": false,
                "TimeFrom": date_to_epoch(first),
                "TimeTo": to_ts,
                "Data": rows,
            }
        });
        HttpResponse {
            status: 200,
            body: body.to_string(),
        }
    }
}

fn error_body(status: u16, message: &str) -> HttpResponse {
    HttpResponse {
        status,
        body: json!({ "Response": "Error", "Message": message }).to_string(),
    }
}

impl Transport for MockHistodayServer {
    fn get(&self, request: &HttpRequest) -> Result<HttpResponse, String> {
        Ok(self.respond(request))
    }
}
