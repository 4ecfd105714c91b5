//! Market data acquisition: paginated API pulls, CSV exports, and a local
//! cache of raw pulls.

pub mod cache;
pub mod cryptocompare;
pub mod csv_source;
pub mod mock;
pub mod transport;

pub use cache::{cache_get, cache_put, CacheKey, CacheLookup};
pub use cryptocompare::{
    fetch_daily_history, fetch_daily_history_with, ApiKey, FetchReport, FetchSpec, RetryPolicy,
    API_KEY_ENV, DEFAULT_ENDPOINT, PAGE_ROWS,
};
pub use csv_source::{load_csv, load_csv_with_report, CsvSchema, DecimalStyle, LoadReport, RowOrder};
pub use mock::MockHistodayServer;
pub use transport::{HttpRequest, HttpResponse, Transport};
