use std::f64::consts::PI;

use super::{FeatureConfig, FeatureSequence};
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

/// Triangular filters with edges equally spaced on the mel scale.
#[derive(Clone, Debug, PartialEq)]
pub struct MelFilterbank {
    /// `weights[b][k]`, dense over spectrum bins.
    weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(bands: usize, fmin: f64, fmax: f64, fft_size: usize, sample_rate: u32) -> Result<Self> {
        let nyquist = f64::from(sample_rate) / 2.0;
        if fmax > nyquist {
            return Err(Error::Config(format!("mel fmax {fmax} Hz above Nyquist {nyquist} Hz")));
        }
        if !(fmin > 0.0 && fmin < fmax) || bands == 0 {
            return Err(Error::Config(format!("invalid mel bank: {bands} bands over {fmin}..{fmax} Hz")));
        }
        let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges: Vec<f64> = (0..bands + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (bands + 1) as f64))
            .collect();
        let bins = fft_size / 2 + 1;
        let bin_hz = f64::from(sample_rate) / fft_size as f64;
        let weights = (0..bands)
            .map(|b| {
                let (left, center, right) = (edges[b], edges[b + 1], edges[b + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f >= left && f <= center {
                            (f - left) / (center - left)
                        } else if f > center && f <= right {
                            (right - f) / (right - center)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(MelFilterbank { weights })
    }

    pub fn bands(&self) -> usize {
        self.weights.len()
    }

    /// Band energies of a power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal DCT-II rows 1..=count (c0 dropped) of a length-`len` input.
fn dct_rows(count: usize, len: usize) -> Vec<Vec<f64>> {
    let scale = (2.0 / len as f64).sqrt();
    (1..=count)
        .map(|j| {
            (0..len)
                .map(|i| scale * (PI * j as f64 * (i as f64 + 0.5) / len as f64).cos())
                .collect()
        })
        .collect()
}

/// Regression deltas over +-2 frames, edges replicated.
pub fn deltas(values: &Matrix) -> Matrix {
    const WIDTH: isize = 2;
    let norm = 2.0 * (1..=WIDTH).map(|n| (n * n) as f64).sum::<f64>();
    let rows = values.rows() as isize;
    let mut out = Matrix::zeros(values.rows(), values.cols());
    for t in 0..rows {
        for n in 1..=WIDTH {
            let ahead = values.row((t + n).min(rows - 1) as usize);
            let behind = values.row((t - n).max(0) as usize);
            for (j, o) in out.row_mut(t as usize).iter_mut().enumerate() {
                *o += n as f64 * (ahead[j] - behind[j]) / norm;
            }
        }
    }
    out
}

/// Cepstra of log mel-band energies of the power spectrum, c0 omitted,
/// optionally followed by first and second deltas.
pub fn mfcc(spec: &Spectrogram, cfg: &FeatureConfig) -> Result<FeatureSequence> {
    let bank = MelFilterbank::new(
        cfg.mel_bands,
        cfg.mel_fmin,
        cfg.mel_fmax,
        spec.fft_size,
        spec.sample_rate,
    )?;
    let dct = dct_rows(cfg.n_mfcc, bank.bands());
    let mut ceps = Matrix::zeros(spec.frames(), cfg.n_mfcc);
    let mut power = vec![0.0; spec.bins()];
    for t in 0..spec.frames() {
        for (p, m) in power.iter_mut().zip(spec.mags.row(t)) {
            *p = m * m;
        }
        let logs: Vec<f64> = bank
            .apply(&power)
            .into_iter()
            .map(|e| e.max(cfg.log_floor).ln())
            .collect();
        for (c, row) in ceps.row_mut(t).iter_mut().zip(&dct) {
            *c = row.iter().zip(&logs).map(|(a, b)| a * b).sum();
        }
    }
    let values = if cfg.add_deltas {
        let d1 = deltas(&ceps);
        let d2 = deltas(&d1);
        Matrix::hstack(&[&ceps, &d1, &d2])?
    } else {
        ceps
    };
    FeatureSequence::new(values, cfg.mfcc_names(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_of_700_hz() {
        let expect = 1127.0 * 2f64.ln();
        assert!((hz_to_mel(700.0) - expect).abs() < 1e-9);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        assert!((mel_to_hz(hz_to_mel(4321.0)) - 4321.0).abs() < 1e-9);
    }

    #[test]
    fn every_band_covers_some_bin() {
        let bank = MelFilterbank::new(40, 300.0, 10000.0, 2048, 48000).unwrap();
        assert_eq!(bank.bands(), 40);
        for w in &bank.weights {
            assert!(w.iter().any(|&v| v > 0.0));
        }
    }

    #[test]
    fn fmax_above_nyquist_is_config_error() {
        let err = MelFilterbank::new(40, 300.0, 10000.0, 512, 16000).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn equal_log_energies_give_zero_cepstrum() {
        // silence floors every band to the same log energy
        let spec = Spectrogram {
            mags: Matrix::zeros(3, 1025),
            fft_size: 2048,
            sample_rate: 48000,
        };
        let f = mfcc(&spec, &FeatureConfig::default()).unwrap();
        assert_eq!(f.dim(), 13);
        assert!(f.values.as_slice().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn deltas_add_two_blocks() {
        let cfg = FeatureConfig {
            add_deltas: true,
            ..FeatureConfig::default()
        };
        let spec = Spectrogram {
            mags: Matrix::from_vec(2, 1025, (0..2050).map(|i| (i % 7) as f64).collect()).unwrap(),
            fft_size: 2048,
            sample_rate: 48000,
        };
        assert_eq!(mfcc(&spec, &cfg).unwrap().dim(), 39);
    }

    #[test]
    fn delta_of_linear_ramp_is_slope_inside() {
        let m = Matrix::from_vec(7, 1, (0..7).map(|t| 3.0 * t as f64).collect()).unwrap();
        let d = deltas(&m);
        for t in 2..5 {
            assert!((d[(t, 0)] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dct_rows_are_orthonormal() {
        let rows = dct_rows(39, 40);
        for a in 0..rows.len() {
            for b in 0..rows.len() {
                let s: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
                assert!((s - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
            // orthogonal to the constant vector
            assert!(rows[a].iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
