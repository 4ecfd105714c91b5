//! Wavelet time-frequency analysis of financial return series.

pub mod analysis;
pub mod cwt;
pub mod error;
pub mod export;
pub mod ingest;
pub mod pipeline;
pub mod preprocess;
pub mod render;
pub mod spectra;
pub mod wavelet;

pub use cwt::{
    cone_of_influence, cwt, cwt_direct, frequencies, power, scale_for_frequency, CwtOptions, CwtPlan, PowerSpectrum, ScaleGrid,
    WaveletSpectrum,
};
pub use error::{Error, ErrorKind, Result};
pub use wavelet::{admissibility_diagnostic, parse_wavelet_name, Family, MotherWavelet};
pub use preprocess::{align, log_returns, PriceSeries, ReturnSeries};
