use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::FrameSequence;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// FFT size used for 30 ms frames at 48 kHz (1440 samples).
pub const DEFAULT_FFT_SIZE: usize = 2048;

/// Magnitude spectrogram S(t, k), k = 0..=N/2.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub mags: Matrix,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.mags.rows()
    }

    pub fn bins(&self) -> usize {
        self.mags.cols()
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.sample_rate) / self.fft_size as f64
    }
}

/// A planned forward FFT of fixed size, reusable across clips.
#[derive(Clone)]
pub struct Stft {
    fft: Arc<dyn Fft<f64>>,
    size: usize,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("size", &self.size).finish()
    }
}

impl Stft {
    pub fn new(fft_size: usize) -> Result<Self> {
        if fft_size == 0 || !fft_size.is_power_of_two() {
            return Err(Error::Param(format!("fft size {fft_size} is not a power of two")));
        }
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(Stft { fft, size: fft_size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Full complex spectrum of one zero-padded frame.
    pub fn spectrum(&self, frame: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (b, &x) in buf.iter_mut().zip(frame) {
            b.re = x;
        }
        self.fft.process(&mut buf);
        buf
    }

    pub fn magnitudes(&self, frames: &FrameSequence) -> Result<Spectrogram> {
        if frames.frame_len() > self.size {
            return Err(Error::Param(format!(
                "fft size {} smaller than frame length {}",
                self.size,
                frames.frame_len()
            )));
        }
        let bins = self.size / 2 + 1;
        let mut mags = Matrix::zeros(frames.len(), bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for t in 0..frames.len() {
            buf.fill(Complex64::new(0.0, 0.0));
            for (b, &x) in buf.iter_mut().zip(frames.frames.row(t)) {
                b.re = x;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (m, c) in mags.row_mut(t).iter_mut().zip(&buf[..bins]) {
                *m = c.norm();
            }
        }
        Ok(Spectrogram {
            mags,
            fft_size: self.size,
            sample_rate: frames.sample_rate,
        })
    }
}

/// Magnitude STFT of already-windowed frames.
pub fn stft_magnitude(frames: &FrameSequence, fft_size: usize) -> Result<Spectrogram> {
    Stft::new(fft_size)?.magnitudes(frames)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dsp::{frame_signal, FrameSpec, WindowKind};

    fn frames_of(x: &[f64], window: WindowKind) -> FrameSequence {
        frame_signal(x, 48000, FrameSpec::default(), window).unwrap()
    }

    #[test]
    fn zero_frame_gives_zero_row() {
        let s = stft_magnitude(&frames_of(&[0.0; 1440], WindowKind::Hamming), 2048).unwrap();
        assert_eq!(s.bins(), 1025);
        assert!(s.mags.row(0).iter().all(|&m| m == 0.0));
    }

    #[test]
    fn fft_size_must_cover_frame() {
        let fs = frames_of(&[0.0; 1440], WindowKind::Hamming);
        assert!(matches!(stft_magnitude(&fs, 1024), Err(Error::Param(_))));
        assert!(matches!(stft_magnitude(&fs, 3000), Err(Error::Param(_))));
    }

    #[test]
    fn bin_aligned_sinusoid_peaks_at_its_bin() {
        let m = 100;
        let x: Vec<f64> = (0..1440)
            .map(|n| (2.0 * PI * m as f64 * n as f64 / 2048.0).cos())
            .collect();
        let s = stft_magnitude(&frames_of(&x, WindowKind::Rectangular), 2048).unwrap();
        // direct DFT at the bin and neighbours
        let dft = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let ph = -2.0 * PI * (k * n) as f64 / 2048.0;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            (re * re + im * im).sqrt()
        };
        for k in [m - 1, m, m + 1] {
            assert!((s.mags[(0, k)] - dft(k)).abs() < 1e-8);
        }
        let argmax = s
            .mags
            .row(0)
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, m);
    }

    #[test]
    fn trailing_zeros_within_last_frame_do_not_change_output() {
        let x: Vec<f64> = (0..3000).map(|n| ((n * 7 % 13) as f64 - 6.0) / 7.0).collect();
        let mut padded = x.clone();
        // 3000 samples already need a padded tail frame ending at 3600
        padded.extend(std::iter::repeat_n(0.0, 600));
        let a = stft_magnitude(&frames_of(&x, WindowKind::Hamming), 2048).unwrap();
        let b = stft_magnitude(&frames_of(&padded, WindowKind::Hamming), 2048).unwrap();
        assert_eq!(a, b);
    }
}
