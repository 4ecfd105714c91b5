//! Config-driven batch run: fetch or load each instrument, transform it with
//! every configured wavelet, emit heatmaps, matrices and detector reports,
//! then coherence for configured pairs, and finally a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{detect_hotspots, detect_ridges, hotspot_band, DEFAULT_MAX_FREQUENCY, DEFAULT_MIN_RUN, DEFAULT_QUANTILE};
use crate::cwt::{cwt, power, ScaleGrid, DEFAULT_VOICES};
use crate::error::{Error, ErrorKind, Result};
use crate::export::{coherence_matrix, date_labels, power_matrix};
use crate::ingest::{
    cache, cache_get, cache_put, fetch_daily_history_with, load_csv, ApiKey, CacheKey, CacheLookup,
    CsvSchema, FetchSpec, RetryPolicy, Transport, DEFAULT_ENDPOINT,
};
use crate::preprocess::{align, log_returns, PriceSeries};
use crate::render::{render_heatmap, ColorMap, RenderOptions};
use crate::spectra::coherence;
use crate::wavelet::{parse_wavelet_name, MotherWavelet};

/// Daily sampling.
pub const DT: f64 = 1.0;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_wavelets")]
    pub wavelets: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub detectors: DetectorConfig,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default, rename = "instrument")]
    pub instruments: Vec<InstrumentConfig>,
    #[serde(default, rename = "pair")]
    pub pairs: Vec<PairConfig>,
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}

fn default_wavelets() -> Vec<String> {
    vec!["morl".into()]
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Smallest scale in days; defaults to 2·dt.
    pub s0: Option<f64>,
    pub voices: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            s0: None,
            voices: DEFAULT_VOICES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub quantile: f64,
    /// Hotspots are sought at frequencies at or above this (cycles/day).
    pub max_frequency: f64,
    pub min_run: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            quantile: DEFAULT_QUANTILE,
            max_frequency: DEFAULT_MAX_FREQUENCY,
            min_run: DEFAULT_MIN_RUN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    #[serde(default)]
    pub colormap: ColorMap,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub name: String,
    pub source: SourceConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Api {
        fsym: String,
        tsym: String,
        #[serde(default)]
        endpoint: Option<String>,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        format: CsvFormat,
        /// Price column for FRED files (the series id).
        #[serde(default)]
        column: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvFormat {
    #[default]
    Plain,
    Fred,
    Investing,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub a: String,
    pub b: String,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.cache_dir);
        for inst in &mut self.instruments {
            if let SourceConfig::Csv { path, .. } = &mut inst.source {
                fix(path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start > self.end {
            return Err(Error::Config(format!("start {} is after end {}", self.start, self.end)));
        }
        if self.wavelets.is_empty() {
            return Err(Error::Config("no wavelets configured".into()));
        }
        for w in &self.wavelets {
            parse_wavelet_name(w)?;
        }
        let d = &self.detectors;
        if !(d.quantile > 0.0 && d.quantile < 1.0) {
            return Err(Error::Config(format!("quantile {} outside (0, 1)", d.quantile)));
        }
        if !(d.max_frequency > 0.0 && d.max_frequency.is_finite()) {
            return Err(Error::Config("max_frequency must be positive".into()));
        }
        if d.min_run < 2 {
            return Err(Error::Config("min_run must be at least 2".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for inst in &self.instruments {
            if inst.name.is_empty() || !inst.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(Error::Config(format!(
                    "instrument name {:?} must be non-empty ASCII letters, digits, '-', '_' or '.'",
                    inst.name
                )));
            }
            if !names.insert(inst.name.as_str()) {
                return Err(Error::Config(format!("duplicate instrument {:?}", inst.name)));
            }
        }
        for p in &self.pairs {
            for side in [&p.a, &p.b] {
                if !names.contains(side.as_str()) {
                    return Err(Error::Config(format!("pair refers to unknown instrument {side:?}")));
                }
            }
            if p.a == p.b {
                return Err(Error::Config(format!("pair {0}/{0} pairs an instrument with itself", p.a)));
            }
        }
        Ok(())
    }

    /// Fingerprint of everything that determines the outputs (paths excluded).
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.cache_dir = PathBuf::new();
        for inst in &mut c.instruments {
            if let SourceConfig::Csv { path, .. } = &mut inst.source {
                *path = path.file_name().map(PathBuf::from).unwrap_or_default();
            }
        }
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

/// Everything a run needs besides the config.
pub struct RunContext<'a> {
    pub transport: &'a dyn Transport,
    pub api_key: Option<ApiKey>,
    pub retry: RetryPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub subject: String,
    pub wavelet: String,
    pub sha256: String,
    pub input_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InputRecord {
    pub name: String,
    pub source: String,
    pub first_date: String,
    pub last_date: String,
    pub observations: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailureRecord {
    pub subject: String,
    pub stage: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config_sha256: String,
    pub wavelets: Vec<String>,
    pub start: String,
    pub end: String,
    pub inputs: Vec<InputRecord>,
    pub artifacts: Vec<ArtifactRecord>,
    pub failures: Vec<FailureRecord>,
}

impl Manifest {
    pub fn count(&self, kind: &str) -> usize {
        self.artifacts.iter().filter(|a| a.kind == kind).count()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Fetches through the cache: a hit skips the network, a miss (or corrupt
/// entry) fetches and refreshes the cache.
pub fn fetch_cached(
    spec: &FetchSpec,
    cache_dir: &Path,
    ctx: &RunContext<'_>,
) -> Result<PriceSeries> {
    let key = CacheKey::new(&spec.pair(), spec.from_date, spec.to_date, "cryptocompare");
    match cache_get(&key, cache_dir) {
        CacheLookup::Hit(series) => {
            info!("{}: cache hit", spec.pair());
            return Ok(series);
        }
        CacheLookup::Corrupt(reason) => warn!("{}: refetching, cache unusable ({reason})", spec.pair()),
        CacheLookup::Miss => {}
    }
    let (series, _) = fetch_daily_history_with(spec, ctx.transport, ctx.retry)?;
    cache_put(&series, &key, cache_dir)?;
    Ok(series)
}

fn load_instrument(cfg: &PipelineConfig, inst: &InstrumentConfig, ctx: &RunContext<'_>) -> Result<PriceSeries> {
    match &inst.source {
        SourceConfig::Api { fsym, tsym, endpoint } => {
            let spec = FetchSpec::new(fsym, tsym, cfg.start, cfg.end)?
                .with_endpoint(endpoint.clone().unwrap_or_else(|| DEFAULT_ENDPOINT.to_string()))
                .with_api_key(ctx.api_key.clone());
            fetch_cached(&spec, &cfg.cache_dir, ctx)
        }
        SourceConfig::Csv { path, format, column } => {
            let schema = match format {
                CsvFormat::Plain => CsvSchema::plain(),
                CsvFormat::Investing => CsvSchema::investing(),
                CsvFormat::Fred => CsvSchema::fred(column.as_deref().ok_or_else(|| {
                    Error::Config(format!("{}: FRED source needs `column`", inst.name))
                })?),
            };
            let series = load_csv(path, &schema)?.window(cfg.start, cfg.end);
            if series.len() < 2 {
                return Err(Error::Empty(format!(
                    "{}: fewer than two prices between {} and {}",
                    inst.name, cfg.start, cfg.end
                )));
            }
            Ok(series)
        }
    }
}

fn source_label(s: &SourceConfig) -> String {
    match s {
        SourceConfig::Api { fsym, tsym, .. } => format!("api:{fsym}/{tsym}"),
        SourceConfig::Csv { path, .. } => format!(
            "csv:{}",
            path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
        ),
    }
}

fn failure(subject: &str, stage: &str, e: &Error) -> FailureRecord {
    FailureRecord {
        subject: subject.to_string(),
        stage: stage.to_string(),
        kind: match e.kind() {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        }
        .to_string(),
        message: e.to_string(),
    }
}

fn grid_for(cfg: &PipelineConfig, n: usize) -> Result<ScaleGrid> {
    ScaleGrid::build(n, DT, cfg.grid.s0.unwrap_or(2.0 * DT), cfg.grid.voices)
}

/// Writes bytes and records them; the record's path is relative to `out`.
fn emit(
    out: &Path,
    file: &str,
    bytes_writer: impl FnOnce(&Path) -> Result<()>,
    kind: &str,
    subject: &str,
    wavelet: &str,
    input_sha256: &str,
) -> Result<ArtifactRecord> {
    let path = out.join(file);
    bytes_writer(&path)?;
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(ArtifactRecord {
        path: file.to_string(),
        kind: kind.to_string(),
        subject: subject.to_string(),
        wavelet: wavelet.to_string(),
        sha256: sha256_hex(&bytes),
        input_sha256: input_sha256.to_string(),
    })
}

fn write_json<T: Serialize>(value: &T) -> impl FnOnce(&Path) -> Result<()> + '_ {
    move |path| crate::export::write_json_file(path, value)
}

fn analyze_instrument(
    cfg: &PipelineConfig,
    name: &str,
    prices: &PriceSeries,
    input_sha: &str,
    wavelet_name: &str,
) -> Result<Vec<ArtifactRecord>> {
    let w: MotherWavelet = parse_wavelet_name(wavelet_name)?;
    let label = w.to_string();
    let returns = log_returns(prices)?;
    let grid = grid_for(cfg, returns.len())?;
    let p = power(&cwt(&returns.returns, &w, &grid, DT)?);
    let matrix = power_matrix(&p, &w, date_labels(&returns.timestamps));
    let stem = format!("{name}_{label}");
    let out = &cfg.output_dir;
    let options = RenderOptions {
        colormap: cfg.render.colormap,
        title: format!("{name} wavelet power ({label})"),
        ..Default::default()
    };

    let (max_scale, widened) = hotspot_band(&w, &grid, cfg.detectors.max_frequency, DT)?;
    if widened {
        warn!(
            "{name} [{label}]: no scale reaches {} cycles/day; hotspots use the lowest octave",
            cfg.detectors.max_frequency
        );
    }
    let mut hotspots = detect_hotspots(&p, cfg.detectors.quantile, max_scale)?;
    hotspots.band_widened = widened;
    let ridges = detect_ridges(&p, cfg.detectors.min_run)?;

    Ok(vec![
        emit(out, &format!("{stem}_power.png"), |path| render_heatmap(&matrix, path, &options).map(|_| ()), "heatmap", name, &label, input_sha)?,
        emit(out, &format!("{stem}_power.csv"), |path| matrix.write(path), "matrix", name, &label, input_sha)?,
        emit(out, &format!("{stem}_hotspots.json"), write_json(&hotspots), "hotspots", name, &label, input_sha)?,
        emit(out, &format!("{stem}_ridges.json"), write_json(&ridges), "ridges", name, &label, input_sha)?,
    ])
}

fn analyze_pair(
    cfg: &PipelineConfig,
    a: (&str, &PriceSeries),
    b: (&str, &PriceSeries),
    input_sha: &str,
    wavelet_name: &str,
) -> Result<Vec<ArtifactRecord>> {
    let w = parse_wavelet_name(wavelet_name)?;
    let label = w.to_string();
    let (pa, pb) = align(a.1, b.1)?;
    let (ra, rb) = (log_returns(&pa)?, log_returns(&pb)?);
    let grid = grid_for(cfg, ra.len())?;
    let wa = cwt(&ra.returns, &w, &grid, DT)?;
    let wb = cwt(&rb.returns, &w, &grid, DT)?;
    let c = coherence(&wa, &wb)?;
    let matrix = coherence_matrix(&c, &w, date_labels(&ra.timestamps));
    let subject = format!("{}-{}", a.0, b.0);
    let stem = format!("{subject}_{label}");
    let options = RenderOptions {
        colormap: cfg.render.colormap,
        title: format!("{} / {} wavelet coherence ({label})", a.0, b.0),
        ..Default::default()
    };
    let out = &cfg.output_dir;
    Ok(vec![
        emit(out, &format!("{stem}_coherence.png"), |path| render_heatmap(&matrix, path, &options).map(|_| ()), "coherence_heatmap", &subject, &label, input_sha)?,
        emit(out, &format!("{stem}_coherence.csv"), |path| matrix.write(path), "coherence_matrix", &subject, &label, input_sha)?,
    ])
}

/// Runs every configured instrument and pair. Stage failures are recorded in
/// the manifest and do not stop other work; only setup errors (output
/// directory, manifest write) are returned.
pub fn run_pipeline(cfg: &PipelineConfig, ctx: &RunContext<'_>) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;

    let loaded: Vec<(String, Result<(PriceSeries, InputRecord)>)> = cfg
        .instruments
        .par_iter()
        .map(|inst| {
            let r = load_instrument(cfg, inst, ctx).map(|series| {
                let sha = sha256_hex(cache::encode(&series).as_bytes());
                let record = InputRecord {
                    name: inst.name.clone(),
                    source: source_label(&inst.source),
                    first_date: series.timestamps()[0].to_string(),
                    last_date: series.timestamps()[series.len() - 1].to_string(),
                    observations: series.len(),
                    sha256: sha,
                };
                (series, record)
            });
            (inst.name.clone(), r)
        })
        .collect();

    let mut failures = Vec::new();
    let mut inputs = Vec::new();
    let mut series: BTreeMap<String, (PriceSeries, String)> = BTreeMap::new();
    for (name, r) in loaded {
        match r {
            Ok((s, rec)) => {
                series.insert(name, (s, rec.sha256.clone()));
                inputs.push(rec);
            }
            Err(e) => {
                warn!("{name}: {e}");
                failures.push(failure(&name, "fetch", &e));
            }
        }
    }

    let jobs: Vec<(&String, &String)> = cfg
        .instruments
        .iter()
        .filter(|i| series.contains_key(&i.name))
        .flat_map(|i| cfg.wavelets.iter().map(move |w| (&i.name, w)))
        .collect();
    let instrument_results: Vec<_> = jobs
        .par_iter()
        .map(|(name, w)| {
            let (s, sha) = &series[*name];
            (format!("{name} [{w}]"), analyze_instrument(cfg, name, s, sha, w))
        })
        .collect();

    let pair_jobs: Vec<(&PairConfig, &String)> = cfg
        .pairs
        .iter()
        .flat_map(|p| cfg.wavelets.iter().map(move |w| (p, w)))
        .collect();
    let pair_results: Vec<_> = pair_jobs
        .par_iter()
        .map(|(p, w)| {
            let subject = format!("{}-{} [{w}]", p.a, p.b);
            let r = match (series.get(&p.a), series.get(&p.b)) {
                (Some((sa, ha)), Some((sb, hb))) => {
                    let sha = sha256_hex(format!("{ha}{hb}").as_bytes());
                    analyze_pair(cfg, (&p.a, sa), (&p.b, sb), &sha, w)
                }
                _ => Err(Error::Empty("an instrument of this pair failed to load".into())),
            };
            (subject, r)
        })
        .collect();

    let mut artifacts = Vec::new();
    for (subject, r) in instrument_results.into_iter().chain(pair_results) {
        match r {
            Ok(mut recs) => artifacts.append(&mut recs),
            Err(e) => {
                warn!("{subject}: {e}");
                failures.push(failure(&subject, "analysis", &e));
            }
        }
    }
    artifacts.sort();
    inputs.sort();
    failures.sort();

    let manifest = Manifest {
        tool: format!("wavescope {}", env!("CARGO_PKG_VERSION")),
        config_sha256: cfg.fingerprint(),
        wavelets: cfg
            .wavelets
            .iter()
            .map(|w| parse_wavelet_name(w).map(|w| w.to_string()))
            .collect::<Result<_>>()?,
        start: cfg.start.to_string(),
        end: cfg.end.to_string(),
        inputs,
        artifacts,
        failures,
    };
    write_json(&manifest)(&cfg.output_dir.join(MANIFEST_NAME))?;
    info!(
        "wrote {} artifacts, {} failures to {}",
        manifest.artifacts.len(),
        manifest.failures.len(),
        cfg.output_dir.display()
    );
    Ok(manifest)
}
