//! CSV matrices: a header of time labels, one row per scale with its
//! frequency, and a trailing `coi` row. Values are written in shortest
//! round-trip form so re-import is exact.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cwt::{frequencies, PowerSpectrum, ScaleGrid, WaveletSpectrum};
use crate::error::{Error, Result};
use crate::spectra::CoherenceMap;
use crate::wavelet::MotherWavelet;

const COI_ROW: &str = "coi";

/// Column labels: ISO-8601 dates when the series is dated, else sample
/// indices.
pub fn date_labels(dates: &[NaiveDate]) -> Vec<String> {
    dates.iter().map(|d| d.format("%Y-%m-%d").to_string()).collect()
}

pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|k| k.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexExport {
    /// One file of `|z|`.
    #[default]
    Modulus,
    /// `<stem>.real.csv` and `<stem>.imag.csv`.
    RealImag,
}

/// A real matrix with its axes, as written to and read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub values: Array2<f64>,
    pub scales: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub coi: Vec<f64>,
    pub times: Vec<String>,
}

impl LabeledMatrix {
    fn check(&self) -> Result<()> {
        let (nj, nk) = self.values.dim();
        if self.scales.len() != nj || self.frequencies.len() != nj {
            return Err(Error::Input(format!(
                "{nj} rows but {} scales / {} frequencies",
                self.scales.len(),
                self.frequencies.len()
            )));
        }
        if self.coi.len() != nk || self.times.len() != nk {
            return Err(Error::Input(format!(
                "{nk} columns but {} coi values / {} time labels",
                self.coi.len(),
                self.times.len()
            )));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        self.check()?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Input(e.to_string());
        let mut header = vec!["scale".to_string(), "frequency".to_string()];
        header.extend(self.times.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (j, row) in self.values.outer_iter().enumerate() {
            let mut rec = vec![self.scales[j].to_string(), self.frequencies[j].to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let mut rec = vec![COI_ROW.to_string(), String::new()];
        rec.extend(self.coi.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
        let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }

    pub fn from_csv(text: &str, source_name: &str) -> Result<Self> {
        let err = |row: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (i, r) in rdr.records().enumerate() {
            records.push(r.map_err(|e| err(i + 1, e.to_string()))?);
        }
        let Some((header, body)) = records.split_first() else {
            return Err(err(1, "empty file".into()));
        };
        if header.get(0) != Some("scale") || header.get(1) != Some("frequency") {
            return Err(err(1, "header must start with scale,frequency".into()));
        }
        let times: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let nk = times.len();
        let Some((coi_row, rows)) = body.split_last() else {
            return Err(err(2, "missing coi row".into()));
        };
        let num = |row: usize, s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(row, format!("{s:?} is not a number")))
        };

        let mut scales = Vec::with_capacity(rows.len());
        let mut freqs = Vec::with_capacity(rows.len());
        let mut values = Array2::zeros((rows.len(), nk));
        for (j, rec) in rows.iter().enumerate() {
            let line = j + 2;
            if rec.len() != nk + 2 {
                return Err(err(line, format!("expected {} fields, found {}", nk + 2, rec.len())));
            }
            scales.push(num(line, &rec[0])?);
            freqs.push(num(line, &rec[1])?);
            for k in 0..nk {
                values[[j, k]] = num(line, &rec[k + 2])?;
            }
        }
        let line = rows.len() + 2;
        if coi_row.get(0) != Some(COI_ROW) || coi_row.len() != nk + 2 {
            return Err(err(line, "last row must be the coi row".into()));
        }
        let coi = (0..nk)
            .map(|k| num(line, &coi_row[k + 2]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            values,
            scales,
            frequencies: freqs,
            coi,
            times,
        })
    }

    /// Rebuilds the power spectrum; `dt` is not stored in the file.
    pub fn into_power(self, dt: f64) -> Result<PowerSpectrum> {
        let voices = ScaleGrid::infer_voices(&self.scales).unwrap_or(1);
        let grid = ScaleGrid::from_scales(self.scales, voices)?;
        PowerSpectrum::new(self.values, grid, dt, self.coi)
    }
}

pub fn power_matrix(p: &PowerSpectrum, w: &MotherWavelet, times: Vec<String>) -> LabeledMatrix {
    LabeledMatrix {
        values: p.values.clone(),
        scales: p.grid.scales().to_vec(),
        frequencies: frequencies(w, &p.grid),
        coi: p.coi.clone(),
        times,
    }
}

pub fn coherence_matrix(c: &CoherenceMap, w: &MotherWavelet, times: Vec<String>) -> LabeledMatrix {
    LabeledMatrix {
        values: c.r2.clone(),
        scales: c.grid.scales().to_vec(),
        frequencies: frequencies(w, &c.grid),
        coi: c.coi.clone(),
        times,
    }
}

pub fn export_power(p: &PowerSpectrum, w: &MotherWavelet, times: Vec<String>, path: &Path) -> Result<()> {
    power_matrix(p, w, times).write(path)
}

pub fn export_coherence(c: &CoherenceMap, w: &MotherWavelet, times: Vec<String>, path: &Path) -> Result<()> {
    coherence_matrix(c, w, times).write(path)
}

/// Writes complex coefficients; returns the files written.
pub fn export_complex(
    spec: &WaveletSpectrum,
    times: Vec<String>,
    mode: ComplexExport,
    path: &Path,
) -> Result<Vec<PathBuf>> {
    let part = |f: fn(&Complex64) -> f64| LabeledMatrix {
        values: spec.coefficients.map(f),
        scales: spec.grid.scales().to_vec(),
        frequencies: spec.frequencies(),
        coi: spec.coi.clone(),
        times: times.clone(),
    };
    match mode {
        ComplexExport::Modulus => {
            part(|z| z.norm()).write(path)?;
            Ok(vec![path.to_path_buf()])
        }
        ComplexExport::RealImag => {
            let re = path.with_extension("real.csv");
            let im = path.with_extension("imag.csv");
            part(|z| z.re).write(&re)?;
            part(|z| z.im).write(&im)?;
            Ok(vec![re, im])
        }
    }
}

pub fn import_power(path: &Path, dt: f64) -> Result<(PowerSpectrum, Vec<String>)> {
    let m = LabeledMatrix::read(path)?;
    let times = m.times.clone();
    Ok((m.into_power(dt)?, times))
}

/// Atomic text write.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json_file<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Temp file in the target directory, then rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
