//! Seven-instrument fixture: three API-served crypto pairs, one FRED-style
//! index and three investing.com-style quotes, all synthetic.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wavescope::ingest::MockHistodayServer;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub const START: (i32, u32, u32) = (2017, 7, 10);
pub const END: (i32, u32, u32) = (2022, 12, 31);

pub fn start() -> NaiveDate {
    date(START.0, START.1, START.2)
}

pub fn end() -> NaiveDate {
    date(END.0, END.1, END.2)
}

/// Geometric random walk starting at `p0`.
pub fn walk(n: usize, p0: f64, vol: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, vol).unwrap();
    let mut p = p0;
    (0..n)
        .map(|_| {
            let out = p;
            p *= f64::exp(step.sample(&mut rng));
            out
        })
        .collect()
}

pub fn crypto_server() -> MockHistodayServer {
    let from = date(2015, 1, 1);
    let n = (end() - from).num_days() as usize + 1;
    let mut server = MockHistodayServer::new();
    for (sym, p0, seed) in [("BTC", 300.0, 11u64), ("ETH", 1.0, 12), ("XRP", 0.006, 13)] {
        let path = walk(n, p0, 0.04, seed);
        server = server.with_daily(sym, "USD", from, end(), move |i| path[i]);
    }
    server
}

fn weekdays(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    from.iter_days()
        .take_while(|d| *d <= to)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

pub fn write_fred(path: &Path, column: &str, seed: u64) {
    let days = weekdays(start(), end());
    let prices = walk(days.len(), 2400.0, 0.01, seed);
    let mut s = format!("observation_date,{column}\n");
    for (i, (d, p)) in days.iter().zip(&prices).enumerate() {
        if i % 50 == 7 {
            // holiday placeholder
            let _ = writeln!(s, "{d},.");
        } else {
            let _ = writeln!(s, "{d},{p:.2}");
        }
    }
    std::fs::write(path, s).unwrap();
}

fn thousands(v: f64, decimals: usize) -> String {
    let text = format!("{v:.decimals$}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    if frac.is_empty() { grouped } else { format!("{grouped}.{frac}") }
}

pub fn write_investing(path: &Path, p0: f64, seed: u64) {
    let days = weekdays(start(), end());
    let prices = walk(days.len(), p0, 0.006, seed);
    let mut s = String::from("\"Date\",\"Price\",\"Open\",\"High\",\"Low\",\"Vol.\",\"Change %\"\n");
    for (d, p) in days.iter().zip(&prices).rev() {
        let _ = writeln!(
            s,
            "\"{}\",\"{}\",\"{}\",\"{}\",\"{}\",\"\",\"0.00%\"",
            d.format("%m/%d/%Y"),
            thousands(*p, 4),
            thousands(*p, 4),
            thousands(p * 1.01, 4),
            thousands(p * 0.99, 4)
        );
    }
    std::fs::write(path, s).unwrap();
}

/// Writes the CSV inputs under `dir/data` and a config whose outputs go to
/// `dir/<out>`; returns the config path.
pub fn seven_instrument_config(dir: &Path, out: &str, extra: &str) -> PathBuf {
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    write_fred(&data.join("SP500.csv"), "SP500", 21);
    write_investing(&data.join("XAU_USD.csv"), 1250.0, 22);
    write_investing(&data.join("JPY_USD.csv"), 0.0089, 23);
    write_investing(&data.join("USD_EUR.csv"), 0.87, 24);
    let text = format!(
        r#"output_dir = "{out}"
cache_dir = "cache"
wavelets = ["morl", "cmor1.5-1.0"]
start = "2017-07-10"
end = "2022-12-31"

[[instrument]]
name = "BTC-USD"
source = {{ kind = "api", fsym = "BTC", tsym = "USD" }}

[[instrument]]
name = "ETH-USD"
source = {{ kind = "api", fsym = "ETH", tsym = "USD" }}

[[instrument]]
name = "XRP-USD"
source = {{ kind = "api", fsym = "XRP", tsym = "USD" }}

[[instrument]]
name = "SP500"
source = {{ kind = "csv", path = "data/SP500.csv", format = "fred", column = "SP500" }}

[[instrument]]
name = "GOLD-USD"
source = {{ kind = "csv", path = "data/XAU_USD.csv", format = "investing" }}

[[instrument]]
name = "JPY-USD"
source = {{ kind = "csv", path = "data/JPY_USD.csv", format = "investing" }}

[[instrument]]
name = "USD-EUR"
source = {{ kind = "csv", path = "data/USD_EUR.csv", format = "investing" }}
{extra}"#
    );
    let path = dir.join(format!("{out}.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

/// Every regular file under `dir`, relative path → bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
