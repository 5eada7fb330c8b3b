//! Multi-level DWT with the 8-tap Daubechies filter pair.
//!
//! The filter is the one with 8 coefficients and 4 vanishing moments, often
//! named "db4". Signals are extended by half-sample symmetric reflection, so
//! every level keeps `floor((n + 7) / 2)` coefficients and the inverse
//! reconstructs the input exactly.

use crate::error::{Error, Result};

/// Analysis low-pass filter, in convolution order.
pub const DB4_LOWPASS: [f64; 8] = [
    -0.010_597_401_785_069_032,
    0.032_883_011_666_885_2,
    0.030_841_381_835_560_764,
    -0.187_034_811_719_093_08,
    -0.027_983_769_416_859_854,
    0.630_880_767_929_858_9,
    0.714_846_570_552_915_6,
    0.230_377_813_308_896_5,
];

pub const DEFAULT_LEVELS: usize = 8;

const TAPS: usize = DB4_LOWPASS.len();

fn highpass() -> [f64; TAPS] {
    let mut h = [0.0; TAPS];
    for (n, v) in h.iter_mut().enumerate() {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        *v = sign * DB4_LOWPASS[TAPS - 1 - n];
    }
    h
}

/// Index into a half-sample symmetric extension of a length-`n` signal.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Approximation `a_M` and details `d_1..d_M` of an M-level DWT.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletDecomposition {
    pub approx: Vec<f64>,
    /// `details[i]` holds d_{i+1}; d_1 is the finest scale.
    pub details: Vec<Vec<f64>>,
    /// Input length at each level, needed to invert the transform.
    pub input_lengths: Vec<usize>,
}

impl WaveletDecomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }
}

fn analysis_step(x: &[f64], hi: &[f64; TAPS]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let out_len = (n + TAPS - 1) / 2;
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..TAPS {
            let v = x[reflect(2 * k as isize + 1 - j as isize, n)];
            a += DB4_LOWPASS[j] * v;
            d += hi[j] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], n: usize, hi: &[f64; TAPS]) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let lo_k = m.saturating_sub(1).div_ceil(2);
            let hi_k = ((m + TAPS - 2) / 2).min(approx.len() - 1);
            (lo_k..=hi_k)
                .map(|k| {
                    let j = 2 * k + 1 - m;
                    approx[k] * DB4_LOWPASS[j] + detail[k] * hi[j]
                })
                .sum()
        })
        .collect()
}

/// Decomposes `samples` over `levels` stages.
pub fn dwt(samples: &[f64], levels: usize) -> Result<WaveletDecomposition> {
    if levels < 1 {
        return Err(Error::Param("wavelet decomposition needs at least 1 level".into()));
    }
    if levels >= usize::BITS as usize || samples.len() < (1usize << levels) {
        return Err(Error::Param(format!(
            "{} samples too short for a {levels}-level decomposition",
            samples.len()
        )));
    }
    let hi = highpass();
    let mut current = samples.to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut input_lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        input_lengths.push(current.len());
        let (a, d) = analysis_step(&current, &hi);
        details.push(d);
        current = a;
    }
    Ok(WaveletDecomposition {
        approx: current,
        details,
        input_lengths,
    })
}

/// Inverts [`dwt`].
pub fn idwt(wd: &WaveletDecomposition) -> Vec<f64> {
    let hi = highpass();
    let mut current = wd.approx.clone();
    for level in (0..wd.levels()).rev() {
        current = synthesis_step(&current, &wd.details[level], wd.input_lengths[level], &hi);
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn filter_is_orthonormal() {
        let h = DB4_LOWPASS;
        for shift in 0..4 {
            let s: f64 = (0..TAPS - 2 * shift).map(|n| h[n] * h[n + 2 * shift]).sum();
            let expect = if shift == 0 { 1.0 } else { 0.0 };
            assert!((s - expect).abs() < 1e-14, "shift {shift}: {s}");
        }
        assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-14);
        assert!(highpass().iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [256, 257, 1000, 4801] {
            let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let back = idwt(&dwt(&x, 8).unwrap());
            assert_eq!(back.len(), x.len());
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "len {len}: {err}");
        }
    }

    #[test]
    fn constant_signal_has_vanishing_details() {
        let wd = dwt(&[0.3; 3000], 8).unwrap();
        for d in &wd.details {
            assert!(d.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn lengths_halve_per_level() {
        let wd = dwt(&vec![0.0; 48000], 8).unwrap();
        let lens: Vec<usize> = wd.details.iter().map(Vec::len).collect();
        assert_eq!(lens, vec![24003, 12005, 6006, 3006, 1506, 756, 381, 194]);
        assert_eq!(wd.approx.len(), 194);
        assert!((wd.approx.len() as f64 - 48000.0 / 256.0).abs() < 8.0);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(dwt(&[0.0; 512], 0), Err(Error::Param(_))));
        assert!(matches!(dwt(&[0.0; 255], 8), Err(Error::Param(_))));
    }

    proptest! {
        #[test]
        fn transform_is_linear(
            pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64..300)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let sum: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
            let (wx, wy, ws) = (dwt(&x, 4).unwrap(), dwt(&y, 4).unwrap(), dwt(&sum, 4).unwrap());
            for ((a, b), s) in wx.approx.iter().zip(&wy.approx).zip(&ws.approx) {
                prop_assert!((a + b - s).abs() < 1e-10);
            }
            for l in 0..4 {
                for ((a, b), s) in wx.details[l].iter().zip(&wy.details[l]).zip(&ws.details[l]) {
                    prop_assert!((a + b - s).abs() < 1e-10);
                }
            }
        }
    }
}
