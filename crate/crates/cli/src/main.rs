mod http;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::Value;
use wavescope::analysis::{detect_hotspots, detect_ridges, DEFAULT_MAX_FREQUENCY, DEFAULT_MIN_RUN, DEFAULT_QUANTILE};
use wavescope::export::{
    coherence_matrix, date_labels, export_complex, power_matrix, write_json_file, ComplexExport,
    LabeledMatrix,
};
use wavescope::ingest::{cache, load_csv, ApiKey, CsvSchema, FetchSpec, RetryPolicy, DEFAULT_ENDPOINT};
use wavescope::pipeline::{fetch_cached, run_pipeline, PipelineConfig, RunContext, DT};
use wavescope::render::{render_heatmap, ColorMap, RenderOptions};
use wavescope::spectra::coherence;
use wavescope::{cwt, log_returns, parse_wavelet_name, power, Error, ErrorKind, MotherWavelet, PriceSeries, ScaleGrid};

use crate::http::UreqTransport;

/// Wavelet time-frequency analysis of daily price series.
#[derive(Parser)]
#[command(name = "wavescope", version)]
struct Cli {
    /// More logging (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download daily closes for a pair into the cache (API key from WAVESCOPE_API_KEY).
    Fetch(FetchArgs),
    /// Wavelet power of a price series' log returns, as a CSV matrix.
    Cwt(CwtArgs),
    /// Wavelet coherence of two price series, as a CSV matrix.
    Coherence(CoherenceArgs),
    /// High-power regions of an exported power matrix, as JSON.
    Hotspots(HotspotArgs),
    /// Persistent power-maximizing scales of an exported power matrix, as JSON.
    Ridges(RidgeArgs),
    /// Heatmap PNG of an exported matrix.
    Render(RenderArgs),
    /// Run a configured batch and write a manifest.
    Run(RunArgs),
}

#[derive(Args)]
struct FetchArgs {
    /// BASE/QUOTE, e.g. BTC/USD
    #[arg(long)]
    pair: String,
    #[arg(long)]
    start: NaiveDate,
    #[arg(long)]
    end: NaiveDate,
    #[arg(long, default_value = "cache")]
    cache_dir: PathBuf,
    /// Also copy the series here (`date,close` CSV).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    endpoint: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Plain,
    Fred,
    Investing,
}

#[derive(Args)]
struct SeriesInput {
    /// Layout of the input price CSV(s).
    #[arg(long, value_enum, default_value = "plain")]
    format: InputFormat,
    /// Price column (FRED series id); defaults per format.
    #[arg(long)]
    column: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "morl")]
    wavelet: String,
    /// Smallest scale in days [default: 2].
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long, default_value_t = 12)]
    voices: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComplexMode {
    Modulus,
    RealImag,
}

#[derive(Args)]
struct CwtArgs {
    input: PathBuf,
    #[command(flatten)]
    series: SeriesInput,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
    /// Write complex coefficients instead of power.
    #[arg(long, value_enum)]
    complex: Option<ComplexMode>,
}

#[derive(Args)]
struct CoherenceArgs {
    a: PathBuf,
    b: PathBuf,
    #[command(flatten)]
    series: SeriesInput,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the phase difference matrix.
    #[arg(long)]
    phase: Option<PathBuf>,
}

#[derive(Args)]
struct HotspotArgs {
    /// Power matrix CSV written by `cwt`.
    matrix: PathBuf,
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    quantile: f64,
    /// Frequency (cycles/day) bounding the band: rows at or above it are searched
    /// [default: 1/8, widened to the lowest octave if the grid cannot reach it].
    #[arg(long)]
    max_freq: Option<f64>,
    /// Report path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RidgeArgs {
    matrix: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_RUN)]
    min_run: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    matrix: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// blue-red or grayscale
    #[arg(long, default_value = "blue-red")]
    colormap: String,
    #[arg(long, default_value = "")]
    title: String,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's cache_dir.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Fetch(a) => fetch(a),
        Command::Cwt(a) => cwt_cmd(a),
        Command::Coherence(a) => coherence_cmd(a),
        Command::Hotspots(a) => hotspots(a),
        Command::Ridges(a) => ridges(a),
        Command::Render(a) => render(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

type CmdResult = Result<u8, Error>;

fn retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        initial_backoff: Duration::from_millis(500),
    }
}

fn fetch(a: FetchArgs) -> CmdResult {
    let Some((base, quote)) = a.pair.split_once('/') else {
        return Err(Error::Config(format!("--pair {:?} must look like BASE/QUOTE", a.pair)));
    };
    let key = ApiKey::from_env();
    if key.is_none() {
        log::warn!("{} is not set; requesting without an API key", wavescope::ingest::API_KEY_ENV);
    }
    let spec = FetchSpec::new(base, quote, a.start, a.end)?
        .with_endpoint(a.endpoint)
        .with_api_key(key.clone());
    let transport = UreqTransport::new();
    let ctx = RunContext {
        transport: &transport,
        api_key: key,
        retry: retry(),
    };
    let series = fetch_cached(&spec, &a.cache_dir, &ctx)?;
    if let Some(out) = &a.out {
        wavescope::export::write_text(out, &cache::encode(&series))?;
    }
    println!(
        "{}: {} closes {} .. {}",
        series.symbol(),
        series.len(),
        series.timestamps()[0],
        series.timestamps()[series.len() - 1]
    );
    Ok(0)
}

fn read_series(path: &Path, input: &SeriesInput) -> Result<PriceSeries, Error> {
    let schema = match input.format {
        InputFormat::Plain => {
            let mut s = CsvSchema::plain();
            if let Some(c) = &input.column {
                s.price_column = c.clone();
            }
            s
        }
        InputFormat::Investing => CsvSchema::investing(),
        InputFormat::Fred => {
            let column = match &input.column {
                Some(c) => c.clone(),
                None => path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .ok_or_else(|| Error::Config("--format fred needs --column".into()))?,
            };
            CsvSchema::fred(&column)
        }
    };
    load_csv(path, &schema)
}

fn grid_and_wavelet(g: &GridArgs, n: usize) -> Result<(MotherWavelet, ScaleGrid), Error> {
    let w = parse_wavelet_name(&g.wavelet)?;
    let grid = ScaleGrid::build(n, DT, g.s0.unwrap_or(2.0 * DT), g.voices)?;
    Ok((w, grid))
}

fn cwt_cmd(a: CwtArgs) -> CmdResult {
    let series = read_series(&a.input, &a.series)?;
    let r = log_returns(&series)?;
    let (w, grid) = grid_and_wavelet(&a.grid, r.len())?;
    let spec = cwt(&r.returns, &w, &grid, DT)?;
    let times = date_labels(&r.timestamps);
    match a.complex {
        None => power_matrix(&power(&spec), &w, times).write(&a.out)?,
        Some(mode) => {
            let mode = match mode {
                ComplexMode::Modulus => ComplexExport::Modulus,
                ComplexMode::RealImag => ComplexExport::RealImag,
            };
            for p in export_complex(&spec, times, mode, &a.out)? {
                info!("wrote {}", p.display());
            }
        }
    }
    Ok(0)
}

fn coherence_cmd(a: CoherenceArgs) -> CmdResult {
    let (pa, pb) = wavescope::align(&read_series(&a.a, &a.series)?, &read_series(&a.b, &a.series)?)?;
    let (ra, rb) = (log_returns(&pa)?, log_returns(&pb)?);
    let (w, grid) = grid_and_wavelet(&a.grid, ra.len())?;
    let c = coherence(&cwt(&ra.returns, &w, &grid, DT)?, &cwt(&rb.returns, &w, &grid, DT)?)?;
    let times = date_labels(&ra.timestamps);
    if let Some(path) = &a.phase {
        let mut m = coherence_matrix(&c, &w, times.clone());
        m.values = c.phase.clone();
        m.write(path)?;
    }
    if c.flagged_count() > 0 {
        log::warn!("{} cells with negligible power reported as r2 = 0", c.flagged_count());
    }
    coherence_matrix(&c, &w, times).write(&a.out)?;
    Ok(0)
}

fn emit_report(value: Value, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => write_json_file(path, &value),
        None => {
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            Ok(())
        }
    }
}

/// Largest scale whose frequency (from the matrix's own column) is at or
/// above `f`.
fn band_from_frequencies(m: &LabeledMatrix, f: f64) -> Option<f64> {
    m.scales
        .iter()
        .zip(&m.frequencies)
        .filter(|(_, &fr)| fr >= f * (1.0 - 1e-12))
        .map(|(&s, _)| s)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
}

fn hotspots(a: HotspotArgs) -> CmdResult {
    let m = LabeledMatrix::read(&a.matrix)?;
    let s0 = m.scales.first().copied().unwrap_or(0.0);
    let (max_scale, widened) = match a.max_freq {
        Some(f) => (
            band_from_frequencies(&m, f)
                .ok_or_else(|| Error::Input(format!("no rows at or above {f} cycles/day")))?,
            false,
        ),
        None => match band_from_frequencies(&m, DEFAULT_MAX_FREQUENCY) {
            Some(s) => (s, false),
            None => (2.0 * s0, true),
        },
    };
    let p = m.into_power(DT)?;
    let mut report = detect_hotspots(&p, a.quantile, max_scale)?;
    report.band_widened = widened;
    emit_report(serde_json::to_value(report).expect("json"), a.out.as_deref())?;
    Ok(0)
}

fn ridges(a: RidgeArgs) -> CmdResult {
    let p = LabeledMatrix::read(&a.matrix)?.into_power(DT)?;
    let report = detect_ridges(&p, a.min_run)?;
    emit_report(serde_json::to_value(report).expect("json"), a.out.as_deref())?;
    Ok(0)
}

fn render(a: RenderArgs) -> CmdResult {
    let colormap: ColorMap = a.colormap.parse()?;
    let m = LabeledMatrix::read(&a.matrix)?;
    let options = RenderOptions {
        colormap,
        title: a.title,
        ..Default::default()
    };
    render_heatmap(&m, &a.out, &options)?;
    Ok(0)
}

fn run(a: RunArgs) -> CmdResult {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    if let Some(cache_dir) = a.cache_dir {
        cfg.cache_dir = cache_dir;
    }
    let transport = UreqTransport::new();
    let ctx = RunContext {
        transport: &transport,
        api_key: ApiKey::from_env(),
        retry: retry(),
    };
    let manifest = run_pipeline(&cfg, &ctx)?;
    println!(
        "{} artifacts, {} failures -> {}",
        manifest.artifacts.len(),
        manifest.failures.len(),
        cfg.output_dir.display()
    );
    for f in &manifest.failures {
        eprintln!("failed: {} ({}): {}", f.subject, f.stage, f.message);
    }
    // partial runs are not silent successes
    let worst = manifest
        .failures
        .iter()
        .map(|f| match f.kind.as_str() {
            "usage" => 1,
            "numerical" => 3,
            _ => 2,
        })
        .max()
        .unwrap_or(0);
    Ok(worst)
}
