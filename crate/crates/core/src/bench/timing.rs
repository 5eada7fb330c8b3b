use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cell::{BenchCell, PostKind};
use super::cv::fold_seed;
use super::pipeline::{train_model, PostState};
use crate::dataset::{stratify, AudioClip};
use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::matrix::Matrix;

/// Wall-clock figures for one cell. Per-clip values are medians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub cell: String,
    pub feature_ms: f64,
    /// Codebook fit over the training fold (BoW only).
    pub kmeans_ms: f64,
    pub histo_ms: f64,
    pub interp_ms: f64,
    pub train_s: f64,
    pub recognition_ms: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Times feature extraction over every clip, then one training fold
/// (the first of a `folds`-way split) and recognition of its test clips.
/// Everything runs on a single worker thread after a warm-up pass.
pub fn measure_times(cell: &BenchCell, extractor: &FeatureExtractor, clips: &[AudioClip], num_classes: usize, folds: usize, seed: u64) -> Result<Timings> {
    cell.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(format!("cannot build timing thread: {e}")))?;
    pool.install(|| measure_inner(cell, extractor, clips, num_classes, folds, seed))
}

fn measure_inner(cell: &BenchCell, extractor: &FeatureExtractor, clips: &[AudioClip], num_classes: usize, folds: usize, seed: u64) -> Result<Timings> {
    let first = clips.first().ok_or_else(|| Error::Data("no clips to time".into()))?;
    extractor.extract(first, cell.feature)?;
    let mut feature_ms = Vec::with_capacity(clips.len());
    let mut seqs: Vec<Matrix> = Vec::with_capacity(clips.len());
    for c in clips {
        let t = Instant::now();
        let f = extractor.extract(c, cell.feature)?;
        feature_ms.push(ms_since(t));
        seqs.push(f.values);
    }

    let labels: Vec<usize> = clips.iter().map(|c| c.label).collect();
    let assign = stratify(&labels, folds, seed)?;
    let train: Vec<usize> = (0..clips.len()).filter(|&i| assign[i] != 0).collect();
    let test: Vec<usize> = (0..clips.len()).filter(|&i| assign[i] == 0).collect();
    let train_seqs: Vec<&Matrix> = train.iter().map(|&i| &seqs[i]).collect();
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let fit_seed = fold_seed(seed, 0, 0);

    let t = Instant::now();
    let post = PostState::fit(cell, &train_seqs, fit_seed)?;
    let kmeans_ms = if cell.post == PostKind::Bow { ms_since(t) } else { 0.0 };

    post.apply(cell, &seqs[0])?;
    let mut post_ms = Vec::with_capacity(clips.len());
    let mut samples = Vec::with_capacity(clips.len());
    for s in &seqs {
        let t = Instant::now();
        samples.push(post.apply(cell, s)?);
        post_ms.push(ms_since(t));
    }
    let post_median = median(&mut post_ms);
    let (histo_ms, interp_ms) = match cell.post {
        PostKind::Bow => (post_median, 0.0),
        PostKind::Interp => (0.0, post_median),
        _ => (0.0, 0.0),
    };

    let train_samples: Vec<_> = train.iter().map(|&i| samples[i].clone()).collect();
    let t = Instant::now();
    let model = train_model(cell, &train_samples, &y, num_classes, fit_seed)?;
    let train_s = t.elapsed().as_secs_f64();

    model.predict(&samples[test[0]])?;
    let mut recognition = Vec::with_capacity(test.len());
    for &i in &test {
        let t = Instant::now();
        model.predict(&samples[i])?;
        recognition.push(ms_since(t));
    }
    Ok(Timings {
        cell: cell.label(),
        feature_ms: median(&mut feature_ms),
        kmeans_ms,
        histo_ms,
        interp_ms,
        train_s,
        recognition_ms: median(&mut recognition),
    })
}
