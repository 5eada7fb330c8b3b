//! Turning variable-length feature sequences into classifier inputs.

mod kmeans;

pub use kmeans::{kmeans_fit, kmeans_train, Codebook, KMeansFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoolKind {
    Mean,
    MeanStd,
    Bow,
    InterpFlat,
}

/// A fixed-length representation of one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledVector {
    pub values: Vec<f64>,
    pub kind: PoolKind,
}

/// Column means, optionally followed by column population stds.
pub fn pool_mean(seq: &Matrix, with_std: bool) -> Result<PooledVector> {
    if seq.rows() == 0 {
        return Err(Error::Data("cannot pool an empty sequence".into()));
    }
    let t = seq.rows() as f64;
    let mut mean = vec![0.0; seq.cols()];
    for row in seq.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    if !with_std {
        return Ok(PooledVector {
            values: mean,
            kind: PoolKind::Mean,
        });
    }
    let mut var = vec![0.0; seq.cols()];
    for row in seq.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut values = mean;
    values.extend(var.into_iter().map(|s| (s / t).sqrt()));
    Ok(PooledVector {
        values,
        kind: PoolKind::MeanStd,
    })
}

/// Normalized histogram of nearest-centroid occurrences.
pub fn bow_encode(seq: &Matrix, cb: &Codebook) -> Result<PooledVector> {
    if seq.cols() != cb.dim() {
        return Err(Error::Data(format!(
            "{}-dim frames against a {}-dim codebook",
            seq.cols(),
            cb.dim()
        )));
    }
    if seq.rows() == 0 {
        return Err(Error::Data("cannot encode an empty sequence".into()));
    }
    let mut hist = vec![0.0; cb.k()];
    for row in seq.iter_rows() {
        hist[cb.nearest(row).0] += 1.0;
    }
    let t = seq.rows() as f64;
    hist.iter_mut().for_each(|h| *h /= t);
    Ok(PooledVector {
        values: hist,
        kind: PoolKind::Bow,
    })
}

/// Mean of the training sequence lengths, rounded half up, at least 1.
pub fn mean_sequence_length<I: IntoIterator<Item = usize>>(lengths: I) -> Result<usize> {
    let (sum, n) = lengths.into_iter().fold((0usize, 0usize), |(s, n), l| (s + l, n + 1));
    if n == 0 {
        return Err(Error::Data("no training sequences".into()));
    }
    Ok(((2 * sum + n) / (2 * n)).max(1))
}

/// Linearly resamples each column at `target` uniformly spaced points over
/// `[0, T-1]` and flattens the result time-major.
pub fn interpolate(seq: &Matrix, target: usize) -> Result<PooledVector> {
    if seq.rows() == 0 || target == 0 {
        return Err(Error::Data("interpolation needs T >= 1 and a target >= 1".into()));
    }
    let last = (seq.rows() - 1) as f64;
    let mut values = Vec::with_capacity(target * seq.cols());
    for j in 0..target {
        let pos = if target == 1 {
            last / 2.0
        } else {
            j as f64 * last / (target - 1) as f64
        };
        let lo = (pos.floor() as usize).min(seq.rows() - 1);
        let hi = (lo + 1).min(seq.rows() - 1);
        let frac = pos - lo as f64;
        let (a, b) = (seq.row(lo), seq.row(hi));
        values.extend(a.iter().zip(b).map(|(x, y)| x + frac * (y - x)));
    }
    Ok(PooledVector {
        values,
        kind: PoolKind::InterpFlat,
    })
}
