use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Arc, Mutex};

use chrono::NaiveDate;
use wavescope::ingest::{HttpRequest, MockHistodayServer, Transport};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn wavescope(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavescope"))
        .args(args)
        .current_dir(dir)
        .env_remove("WAVESCOPE_API_KEY")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Serves `mock` over plain HTTP on a loopback port; returns the endpoint
/// URL and the authorization headers seen.
fn serve(mock: MockHistodayServer) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/data/v2/histoday", listener.local_addr().unwrap());
    let auth = Arc::new(Mutex::new(Vec::new()));
    let seen = auth.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let target = line.split_whitespace().nth(1).unwrap_or("/").to_string();
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap() == 0 || h.trim().is_empty() {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    if k.eq_ignore_ascii_case("authorization") {
                        seen.lock().unwrap().push(v.trim().to_string());
                    }
                }
            }
            let query = target
                .split_once('?')
                .map(|(_, q)| q)
                .unwrap_or("")
                .split('&')
                .filter_map(|kv| kv.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            let resp = mock
                .get(&HttpRequest {
                    url: target.clone(),
                    query,
                    headers: Vec::new(),
                })
                .unwrap();
            let _ = write!(
                stream,
                "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                resp.status,
                resp.body.len(),
                resp.body
            );
        }
    });
    (url, auth)
}

fn btc_mock() -> MockHistodayServer {
    MockHistodayServer::new().with_daily("BTC", "USD", date(2016, 1, 1), date(2022, 12, 31), |i| {
        1000.0 * (1.0 + 0.3 * (i as f64 / 40.0).sin()) + i as f64
    })
}

/// 600 days of a price whose returns oscillate with a 32-day period plus a
/// burst of fast oscillation in the middle.
fn write_plain(path: &Path) {
    let mut s = String::from("date,close\n");
    let mut p = 100.0f64;
    let d0 = date(2020, 1, 1);
    for i in 0..600 {
        let t = i as f64;
        let mut r = 0.01 * (2.0 * std::f64::consts::PI * t / 32.0).sin();
        if (280..320).contains(&i) {
            r += 0.05 * (2.0 * std::f64::consts::PI * t / 4.0).sin();
        }
        p *= r.exp();
        let _ = writeln!(s, "{},{p}", d0 + chrono::Days::new(i));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&wavescope(&[], dir.path())), 1);
    assert_eq!(code(&wavescope(&["cwt", "--bogus"], dir.path())), 1);
    assert_eq!(code(&wavescope(&["--help"], dir.path())), 0);

    write_plain(&dir.path().join("p.csv"));
    let o = wavescope(&["cwt", "p.csv", "--out", "x.csv", "--wavelet", "mexh"], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let o = wavescope(&["hotspots", "x.csv", "--quantile", "abc"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = wavescope(&["cwt", "missing.csv", "--out", "x.csv"], dir.path());
    assert_eq!(code(&o), 2);
    std::fs::write(dir.path().join("bad.csv"), "date,close\n2020-01-01,abc\n").unwrap();
    let o = wavescope(&["cwt", "bad.csv", "--out", "x.csv"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row"));
}

#[test]
fn numerical_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.csv"),
        "scale,frequency,t0,t1\n2,0.5,1,NaN\n4,0.25,2,3\ncoi,,1,1\n",
    )
    .unwrap();
    let o = wavescope(&["render", "m.csv", "--out", "m.png"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("m.png").exists());
}

#[test]
fn analysis_chain() {
    let dir = tempfile::tempdir().unwrap();
    write_plain(&dir.path().join("p.csv"));
    let run = |args: &[&str]| {
        let o = wavescope(args, dir.path());
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["cwt", "p.csv", "--out", "power.csv", "--voices", "8"]);
    let csv = std::fs::read_to_string(dir.path().join("power.csv")).unwrap();
    assert!(csv.starts_with("scale,frequency,2020-01-02,2020-01-03,"));
    assert!(csv.lines().last().unwrap().starts_with("coi,,"));

    run(&["hotspots", "power.csv", "--quantile", "0.99", "--max-freq", "0.125", "--out", "h.json"]);
    let h: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("h.json")).unwrap()).unwrap();
    let top = &h["regions"][0];
    let (t0, t1) = (top["time_range"][0].as_u64().unwrap(), top["time_range"][1].as_u64().unwrap());
    assert!(t0 < 320 && t1 > 280, "top region {t0}..{t1}");

    let o = run(&["ridges", "power.csv", "--min-run", "16"]);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let runs = r["runs"].as_array().unwrap();
    assert!(!runs.is_empty());
    let long = runs
        .iter()
        .max_by_key(|x| x["end"].as_u64().unwrap() - x["start"].as_u64().unwrap())
        .unwrap();
    let s = long["median_scale"].as_f64().unwrap();
    // Morlet: period ≈ 1.033 × scale
    assert!((s * 1.033 - 32.0).abs() < 32.0 * 0.1, "median scale {s}");

    run(&["render", "power.csv", "--out", "power.png", "--colormap", "gray"]);
    let png = std::fs::read(dir.path().join("power.png")).unwrap();
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");

    run(&["cwt", "p.csv", "--out", "c.csv", "--wavelet", "cmor1.5-1.0", "--complex", "real-imag"]);
    assert!(dir.path().join("c.real.csv").exists() && dir.path().join("c.imag.csv").exists());

    run(&["coherence", "p.csv", "p.csv", "--out", "coh.csv", "--phase", "phase.csv"]);
    let coh = wavescope::export::LabeledMatrix::read(&dir.path().join("coh.csv")).unwrap();
    assert!(coh.values.iter().all(|v| (v - 1.0).abs() < 1e-9 || *v == 0.0));
}

#[test]
fn fetch_over_http_fills_cache() {
    let dir = tempfile::tempdir().unwrap();
    let (url, auth) = serve(btc_mock());
    let o = Command::new(env!("CARGO_BIN_EXE_wavescope"))
        .args([
            "fetch", "--pair", "BTC/USD", "--start", "2017-07-10", "--end", "2022-12-31",
            "--cache-dir", "c", "--out", "btc.csv", "--endpoint", &url,
        ])
        .current_dir(dir.path())
        .env("WAVESCOPE_API_KEY", "sekrit-123")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("2001 closes"));
    let seen = auth.lock().unwrap().clone();
    assert_eq!(seen, ["Apikey sekrit-123", "Apikey sekrit-123"]);

    let cached: Vec<_> = std::fs::read_dir(dir.path().join("c")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(cached.len(), 1);
    let name = cached[0].file_name().unwrap().to_string_lossy().into_owned();
    assert_eq!(name, "BTC-USD_20170710_20221231_cryptocompare.csv");
    let body = std::fs::read_to_string(&cached[0]).unwrap();
    assert!(body.starts_with("date,close\n2017-07-10,"));
    assert!(!body.contains("sekrit"));
    assert_eq!(std::fs::read_to_string(dir.path().join("btc.csv")).unwrap(), body);
}

#[test]
fn fetch_gap_and_dead_endpoint_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (url, _) = serve(btc_mock().without_dates("BTC", "USD", &[date(2020, 3, 12)]));
    let o = wavescope(
        &["fetch", "--pair", "BTC/USD", "--start", "2020-01-01", "--end", "2020-06-01", "--endpoint", &url],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2020-03-12"));

    // nothing listening
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dead = format!("http://127.0.0.1:{port}/x");
    let o = wavescope(
        &["fetch", "--pair", "BTC/USD", "--start", "2020-01-01", "--end", "2020-01-05", "--endpoint", &dead],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (url, _) = serve(btc_mock());
    write_plain(&dir.path().join("p.csv"));
    let cfg = format!(
        r#"output_dir = "ignored"
start = "2020-01-01"
end = "2021-08-20"
wavelets = ["morl"]

[[instrument]]
name = "BTC-USD"
source = {{ kind = "api", fsym = "BTC", tsym = "USD", endpoint = "{url}" }}

[[instrument]]
name = "OSC"
source = {{ kind = "csv", path = "p.csv" }}

[[pair]]
a = "BTC-USD"
b = "OSC"
"#
    );
    std::fs::write(dir.path().join("w.toml"), cfg).unwrap();
    let o = wavescope(&["run", "--config", "w.toml", "--out", "out", "--cache-dir", "cc"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 10);
    assert!(m["failures"].as_array().unwrap().is_empty());
    assert!(dir.path().join("cc").is_dir());
    assert!(!dir.path().join("ignored").exists());

    // an instrument that cannot load makes the run exit non-zero
    let broken = std::fs::read_to_string(dir.path().join("w.toml")).unwrap().replace("p.csv", "nope.csv");
    std::fs::write(dir.path().join("b.toml"), broken).unwrap();
    let o = wavescope(&["run", "--config", "b.toml", "--out", "out2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(dir.path().join("out2/manifest.json").exists());
}
