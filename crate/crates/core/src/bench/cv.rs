use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell::BenchCell;
use super::pipeline::FittedCell;
use crate::dataset::stratify;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Confusion counts `[truth][prediction]` and percent accuracy.
pub fn confusion_and_accuracy(predictions: &[usize], truths: &[usize], num_classes: usize) -> Result<(Vec<Vec<u64>>, f64)> {
    if predictions.len() != truths.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truths.len()
        )));
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &t) in predictions.iter().zip(truths) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::Data(format!("label {} out of range for {num_classes} classes", p.max(t))));
        }
        counts[t][p] += 1;
    }
    Ok((counts.clone(), accuracy_of(&counts)))
}

fn accuracy_of(counts: &[Vec<u64>]) -> f64 {
    let total: u64 = counts.iter().flatten().sum();
    let hits: u64 = counts.iter().enumerate().map(|(i, r)| r[i]).sum();
    if total == 0 {
        0.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

/// The deterministic part of a benchmark: everything except timings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub cell: String,
    pub config: BenchCell,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub clips: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub run_accuracies: Vec<f64>,
    /// `confusion[truth][prediction]`, summed over all runs.
    pub confusion: Vec<Vec<u64>>,
    /// Mean serialized model size over all fold fits.
    pub model_bytes: f64,
    /// Test-fold sizes, one list per run.
    pub fold_sizes: Vec<Vec<usize>>,
}

/// Seed for the fits of one fold.
pub(crate) fn fold_seed(seed: u64, run: usize, fold: usize) -> u64 {
    seed.wrapping_add(run as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(fold as u64)
}

/// Repeated stratified k-fold cross-validation on precomputed feature
/// sequences. Run `r` shuffles folds with `seed + r`; every fold fits its
/// post-processing and model on the training folds only.
pub fn cross_validate(
    features: &[Matrix],
    labels: &[usize],
    num_classes: usize,
    cell: &BenchCell,
    folds: usize,
    runs: usize,
    seed: u64,
) -> Result<CvResult> {
    cell.validate()?;
    if runs == 0 {
        return Err(Error::Param("need at least one run".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Data("one label per clip required".into()));
    }
    let assignments = (0..runs)
        .map(|r| stratify(labels, folds, seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..runs).flat_map(|r| (0..folds).map(move |f| (r, f))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(r, f)| {
            let assign = &assignments[r];
            let train: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] == f).collect();
            let seqs: Vec<&Matrix> = train.iter().map(|&i| &features[i]).collect();
            let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let fitted = FittedCell::fit(cell, &seqs, &y, num_classes, fold_seed(seed, r, f))?;
            let preds = test
                .iter()
                .map(|&i| fitted.predict(cell, &features[i]).map(|p| (i, p)))
                .collect::<Result<Vec<_>>>()?;
            Ok((r, preds, fitted.model.memory_bytes()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    let mut per_run = vec![vec![vec![0u64; num_classes]; num_classes]; runs];
    let mut bytes = 0.0;
    for (r, preds, b) in &outcomes {
        for &(i, p) in preds {
            confusion[labels[i]][p] += 1;
            per_run[*r][labels[i]][p] += 1;
        }
        bytes += *b as f64;
    }
    let run_accuracies: Vec<f64> = per_run.iter().map(|c| accuracy_of(c)).collect();
    let mean = run_accuracies.iter().sum::<f64>() / runs as f64;
    let std = if runs > 1 {
        (run_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    let fold_sizes = assignments
        .iter()
        .map(|a| (0..folds).map(|f| a.iter().filter(|&&x| x == f).count()).collect())
        .collect();
    Ok(CvResult {
        cell: cell.label(),
        config: cell.clone(),
        folds,
        runs,
        seed,
        clips: labels.len(),
        accuracy_mean: mean,
        accuracy_std: std,
        run_accuracies,
        confusion,
        model_bytes: bytes / outcomes.len() as f64,
        fold_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let (m, a) = confusion_and_accuracy(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(m, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(a, 100.0);
        let (m, _) = confusion_and_accuracy(&[1, 1, 1], &[0, 1, 2], 3).unwrap();
        assert!(m.iter().all(|r| r[0] == 0 && r[2] == 0 && r[1] == 1));
        let (_, a) = confusion_and_accuracy(&[0, 0, 1, 0], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(a, 50.0);
        assert!(confusion_and_accuracy(&[3], &[0], 3).is_err());
        assert!(confusion_and_accuracy(&[0], &[0, 1], 3).is_err());
    }
}
