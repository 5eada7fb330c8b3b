//! Per-frame audio descriptors and their assembly into feature sequences.
//!
//! Spectral statistics use the bin index `k` (not Hz) as abscissa; multiply
//! by `sample_rate / fft_size` to convert. Spectral slope is the ordinary
//! least-squares slope of `S(t, k)` against `k`, and spectral correlation is
//! normalized by the norms of both frames.

mod container;
mod mfcc;
mod spectral;
mod time;
mod wavelet;

use serde::{Deserialize, Serialize};

pub use container::{decode_features, encode_features, read_features, write_features};
pub use mfcc::{deltas, hz_to_mel, mel_to_hz, mfcc, MelFilterbank};
pub use spectral::{spectral_dynamics, spectral_shape};
pub use time::time_features;
pub use wavelet::{wavelet_features, wavelet_feature_names};

use crate::dataset::AudioClip;
use crate::dsp::{self, FrameSpec, Stft, WindowKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A T x d matrix of per-frame features with column names.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub values: Matrix,
    pub names: Vec<String>,
    /// Duration of the source clip in seconds.
    pub duration: f64,
}

impl FeatureSequence {
    pub fn new(values: Matrix, names: Vec<String>, duration: f64) -> Result<Self> {
        if values.cols() != names.len() {
            return Err(Error::Data(format!(
                "{} feature columns but {} names",
                values.cols(),
                names.len()
            )));
        }
        Ok(FeatureSequence {
            values,
            names,
            duration,
        })
    }

    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub(crate) fn from_columns(columns: Vec<(&str, Vec<f64>)>, duration: f64) -> Self {
        let rows = columns.first().map_or(0, |c| c.1.len());
        let mut values = Matrix::zeros(rows, columns.len());
        for (j, (_, col)) in columns.iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                values[(t, j)] = *v;
            }
        }
        FeatureSequence {
            values,
            names: columns.iter().map(|(n, _)| n.to_string()).collect(),
            duration,
        }
    }

    /// Column-wise concatenation of frame-aligned sequences.
    pub fn concat(parts: &[&FeatureSequence]) -> Result<FeatureSequence> {
        let mats: Vec<&Matrix> = parts.iter().map(|p| &p.values).collect();
        let values = Matrix::hstack(&mats)?;
        Ok(FeatureSequence {
            values,
            names: parts.iter().flat_map(|p| p.names.iter().cloned()).collect(),
            duration: parts.first().map_or(0.0, |p| p.duration),
        })
    }
}

/// Feature names of the default time/time-frequency subset.
pub const DEFAULT_TTFF: [&str; 5] = ["energy", "zcr", "decrease", "flatness", "slope"];

/// Every per-frame descriptor that [`assemble_ttff`] can select.
pub const TTFF_FEATURES: [&str; 12] = [
    "energy",
    "zcr",
    "rolloff",
    "centroid",
    "spread",
    "skewness",
    "kurtosis",
    "slope",
    "decrease",
    "flatness",
    "flux",
    "correlation",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub frame: FrameSpecConfig,
    pub fft_size: usize,
    pub mel_bands: usize,
    pub mel_fmin: f64,
    pub mel_fmax: f64,
    pub n_mfcc: usize,
    pub add_deltas: bool,
    pub rolloff_fraction: f64,
    pub ttff_subset: Vec<String>,
    pub log_floor: f64,
    pub wavelet_levels: usize,
}

/// Serializable mirror of [`FrameSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpecConfig {
    pub frame_ms: f64,
    pub overlap: f64,
}

impl From<FrameSpecConfig> for FrameSpec {
    fn from(c: FrameSpecConfig) -> Self {
        FrameSpec {
            frame_ms: c.frame_ms,
            overlap: c.overlap,
        }
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame: FrameSpecConfig {
                frame_ms: 30.0,
                overlap: 0.5,
            },
            fft_size: dsp::DEFAULT_FFT_SIZE,
            mel_bands: 40,
            mel_fmin: 300.0,
            mel_fmax: 10000.0,
            n_mfcc: 13,
            add_deltas: false,
            rolloff_fraction: 0.99,
            ttff_subset: DEFAULT_TTFF.iter().map(|s| s.to_string()).collect(),
            log_floor: 1e-10,
            wavelet_levels: dsp::DEFAULT_LEVELS,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = f64::from(sample_rate) / 2.0;
        if !(self.mel_fmin > 0.0 && self.mel_fmin < self.mel_fmax) {
            return Err(Error::Config(format!(
                "mel band edges {}..{} Hz must satisfy 0 < fmin < fmax",
                self.mel_fmin, self.mel_fmax
            )));
        }
        if self.mel_fmax > nyquist {
            return Err(Error::Config(format!(
                "mel fmax {} Hz above Nyquist {nyquist} Hz",
                self.mel_fmax
            )));
        }
        if !(self.rolloff_fraction > 0.0 && self.rolloff_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "rolloff fraction {} outside (0, 1]",
                self.rolloff_fraction
            )));
        }
        if self.mel_bands == 0 || self.n_mfcc == 0 || self.n_mfcc >= self.mel_bands {
            return Err(Error::Config(format!(
                "need 1 <= n_mfcc < mel_bands, got n_mfcc={} mel_bands={}",
                self.n_mfcc, self.mel_bands
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::Config("log_floor must be positive".into()));
        }
        if let Some(bad) = self.ttff_subset.iter().find(|n| !TTFF_FEATURES.contains(&n.as_str())) {
            return Err(Error::Config(format!("unknown feature name `{bad}`")));
        }
        Ok(())
    }

    /// Names of the MFCC columns this config produces.
    pub fn mfcc_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.n_mfcc).map(|i| format!("mfcc{i}")).collect();
        if self.add_deltas {
            let base = names.clone();
            names.extend(base.iter().map(|n| format!("d_{n}")));
            names.extend(base.iter().map(|n| format!("dd_{n}")));
        }
        names
    }
}

/// Selects `subset` columns, in that order, from frame-aligned sequences.
pub fn assemble_ttff(parts: &[&FeatureSequence], subset: &[String]) -> Result<FeatureSequence> {
    if let Some(first) = parts.first() {
        if let Some(bad) = parts.iter().find(|p| p.frames() != first.frames()) {
            return Err(Error::Data(format!(
                "feature sequences not frame-aligned: {} vs {} frames",
                first.frames(),
                bad.frames()
            )));
        }
    }
    let mut columns = Vec::with_capacity(subset.len());
    for name in subset {
        let (part, j) = parts
            .iter()
            .find_map(|p| p.names.iter().position(|n| n == name).map(|j| (p, j)))
            .ok_or_else(|| Error::Config(format!("unknown feature name `{name}`")))?;
        columns.push((name.as_str(), part.values.column(j)));
    }
    let duration = parts.first().map_or(0.0, |p| p.duration);
    Ok(FeatureSequence::from_columns(columns, duration))
}

/// Named feature pipelines of the benchmark rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Ttff,
    Mfcc,
    MfccTtff,
    Wavelets,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Ttff,
        FeatureKind::Mfcc,
        FeatureKind::MfccTtff,
        FeatureKind::Wavelets,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::Ttff => "TTFF",
            FeatureKind::Mfcc => "MFCC",
            FeatureKind::MfccTtff => "MFCC+TTFF",
            FeatureKind::Wavelets => "Wavelets",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TTFF" | "TFF" => Ok(FeatureKind::Ttff),
            "MFCC" => Ok(FeatureKind::Mfcc),
            "MFCC+TTFF" | "MFCC+TFF" => Ok(FeatureKind::MfccTtff),
            "WAVELETS" | "WAVELET" => Ok(FeatureKind::Wavelets),
            _ => Err(Error::Config(format!("unknown feature pipeline `{s}`"))),
        }
    }
}

/// Computes feature sequences for clips with a fixed configuration.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    cfg: FeatureConfig,
    stft: Stft,
}

impl FeatureExtractor {
    pub fn new(cfg: FeatureConfig) -> Result<Self> {
        let stft = Stft::new(cfg.fft_size)?;
        Ok(FeatureExtractor { cfg, stft })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    fn spectrogram(&self, clip: &AudioClip) -> Result<dsp::Spectrogram> {
        let frames = dsp::frame_signal(&clip.samples, clip.sample_rate, self.cfg.frame.into(), WindowKind::Hamming)?;
        self.stft.magnitudes(&frames)
    }

    fn ttff(&self, clip: &AudioClip, spec: &dsp::Spectrogram) -> Result<FeatureSequence> {
        let rect = dsp::frame_signal(
            &clip.samples,
            clip.sample_rate,
            self.cfg.frame.into(),
            WindowKind::Rectangular,
        )?;
        let time = time_features(&rect, clip)?;
        let shape = spectral_shape(spec, &self.cfg);
        let dynamics = spectral_dynamics(spec);
        assemble_ttff(&[&time, &shape, &dynamics], &self.cfg.ttff_subset)
    }

    pub fn extract(&self, clip: &AudioClip, kind: FeatureKind) -> Result<FeatureSequence> {
        self.cfg.validate(clip.sample_rate)?;
        match kind {
            FeatureKind::Ttff => {
                let spec = self.spectrogram(clip)?;
                self.ttff(clip, &spec)
            }
            FeatureKind::Mfcc => {
                let spec = self.spectrogram(clip)?;
                mfcc(&spec, &self.cfg)
            }
            FeatureKind::MfccTtff => {
                let spec = self.spectrogram(clip)?;
                let m = mfcc(&spec, &self.cfg)?;
                let t = self.ttff(clip, &spec)?;
                FeatureSequence::concat(&[&m, &t])
            }
            FeatureKind::Wavelets => {
                let frames = dsp::frame_signal(
                    &clip.samples,
                    clip.sample_rate,
                    self.cfg.frame.into(),
                    WindowKind::Rectangular,
                )?;
                let rows = frames
                    .frames
                    .iter_rows()
                    .map(|f| dsp::dwt(f, self.cfg.wavelet_levels).map(|wd| wavelet_features(&wd)))
                    .collect::<Result<Vec<_>>>()?;
                FeatureSequence::new(
                    Matrix::from_rows(&rows)?,
                    wavelet_feature_names(self.cfg.wavelet_levels),
                    clip.duration(),
                )
            }
        }
    }
}
