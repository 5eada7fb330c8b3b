use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Hamming,
    Rectangular,
}

impl WindowKind {
    /// Window coefficients of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hamming if len == 1 => vec![1.0],
            WindowKind::Hamming => (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Analysis window length and overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSpec {
    pub frame_ms: f64,
    pub overlap: f64,
}

impl Default for FrameSpec {
    /// 30 ms frames with 50% overlap.
    fn default() -> Self {
        FrameSpec {
            frame_ms: 30.0,
            overlap: 0.5,
        }
    }
}

impl FrameSpec {
    /// `(frame length, hop)` in samples at `sample_rate`.
    pub fn lengths(&self, sample_rate: u32) -> Result<(usize, usize)> {
        if !(self.frame_ms > 0.0) {
            return Err(Error::Param(format!("frame_ms={} must be positive", self.frame_ms)));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Param(format!("overlap={} outside [0, 1)", self.overlap)));
        }
        let len = (self.frame_ms * f64::from(sample_rate) / 1000.0).round() as usize;
        if len == 0 {
            return Err(Error::Param("frame shorter than one sample".into()));
        }
        let hop = ((len as f64 * (1.0 - self.overlap)).round() as usize).max(1);
        Ok((len, hop))
    }

    /// Number of frames for `n` samples: every full frame plus one
    /// zero-padded tail frame when samples remain uncovered.
    pub fn frame_count(len: usize, hop: usize, n: usize) -> usize {
        if n <= len {
            1
        } else {
            (n - len).div_ceil(hop) + 1
        }
    }
}

/// Windowed, possibly overlapping frames of a signal (T x L).
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    pub frames: Matrix,
    pub hop: usize,
    pub window: WindowKind,
    pub sample_rate: u32,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn frame_len(&self) -> usize {
        self.frames.cols()
    }
}

/// Cuts `samples` into frames and applies the window.
pub fn frame_signal(
    samples: &[f64],
    sample_rate: u32,
    spec: FrameSpec,
    window: WindowKind,
) -> Result<FrameSequence> {
    if samples.is_empty() {
        return Err(Error::Data("cannot frame an empty signal".into()));
    }
    let (len, hop) = spec.lengths(sample_rate)?;
    let count = FrameSpec::frame_count(len, hop, samples.len());
    let coeffs = window.coefficients(len);
    let mut frames = Matrix::zeros(count, len);
    for t in 0..count {
        let start = t * hop;
        let end = (start + len).min(samples.len());
        let row = frames.row_mut(t);
        for (i, (dst, x)) in row.iter_mut().zip(&samples[start..end]).enumerate() {
            *dst = x * coeffs[i];
        }
    }
    Ok(FrameSequence {
        frames,
        hop,
        window,
        sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_ms_half_overlap_at_48k() {
        assert_eq!(FrameSpec::default().lengths(48000).unwrap(), (1440, 720));
    }

    #[test]
    fn one_second_frame_count_matches_enumeration() {
        let (len, hop) = (1440, 720);
        // enumerate start offsets until a frame reaches the end of the signal
        let n = 48000;
        let mut starts = vec![0usize];
        while starts.last().unwrap() + len < n {
            starts.push(starts.last().unwrap() + hop);
        }
        let full = starts.iter().filter(|&&s| s + len <= n).count();
        assert_eq!(full, 65);
        assert_eq!(starts.len(), 66);
        assert_eq!(FrameSpec::frame_count(len, hop, n), 66);

        let fs = frame_signal(&vec![0.1; n], 48000, FrameSpec::default(), WindowKind::Rectangular).unwrap();
        assert_eq!(fs.len(), 66);
        // the tail frame is zero-padded past sample 48000
        let tail = fs.frames.row(65);
        assert_eq!(tail[48000 - 65 * 720 - 1], 0.1);
        assert_eq!(tail[48000 - 65 * 720], 0.0);
    }

    #[test]
    fn short_signal_gives_single_padded_frame() {
        let fs = frame_signal(&[0.5; 100], 48000, FrameSpec::default(), WindowKind::Rectangular).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs.frames.row(0)[99], 0.5);
        assert_eq!(fs.frames.row(0)[100], 0.0);
    }

    #[test]
    fn exact_fit_adds_no_tail_frame() {
        assert_eq!(FrameSpec::frame_count(1440, 720, 1440 + 720 * 3), 4);
    }

    #[test]
    fn hamming_shape() {
        let w = WindowKind::Hamming.coefficients(5);
        assert!((w[0] - 0.08).abs() < 1e-15);
        assert!((w[2] - 1.0).abs() < 1e-15);
        assert!((w[4] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn framing_errors() {
        assert!(frame_signal(&[], 48000, FrameSpec::default(), WindowKind::Hamming).is_err());
        let bad = FrameSpec { frame_ms: 30.0, overlap: 1.0 };
        assert!(frame_signal(&[0.0; 10], 48000, bad, WindowKind::Hamming).is_err());
        let bad = FrameSpec { frame_ms: 0.0, overlap: 0.5 };
        assert!(frame_signal(&[0.0; 10], 48000, bad, WindowKind::Hamming).is_err());
    }

    #[test]
    fn framing_commutes_with_gain() {
        let x: Vec<f64> = (0..5000).map(|n| (n as f64 * 0.01).sin()).collect();
        let scaled: Vec<f64> = x.iter().map(|v| -0.5 * v).collect();
        let a = frame_signal(&x, 48000, FrameSpec::default(), WindowKind::Hamming).unwrap();
        let b = frame_signal(&scaled, 48000, FrameSpec::default(), WindowKind::Hamming).unwrap();
        for (p, q) in a.frames.as_slice().iter().zip(b.frames.as_slice()) {
            assert!((-0.5 * p - q).abs() < 1e-15);
        }
    }
}
