use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{CovKind, Mixture};
use super::{check_dim, check_labels};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::postproc::kmeans_train;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub m: usize,
    pub cov: CovKind,
    pub max_iters: usize,
    /// Stop once the mean per-frame log-likelihood gain drops below this.
    pub tolerance: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            m: 3,
            cov: CovKind::Diagonal,
            max_iters: 100,
            tolerance: 1e-6,
        }
    }
}

/// Result of an EM run. `loglik[i]` is the total log-likelihood of the
/// parameters after `i` updates; the last entry belongs to `mixture`.
#[derive(Clone, Debug)]
pub struct EmTrace {
    pub mixture: Mixture,
    pub loglik: Vec<f64>,
    pub converged: bool,
}

/// Runs EM from `init` on unweighted frames.
pub fn fit_em(frames: &Matrix, init: Mixture, max_iters: usize, tolerance: f64) -> Result<EmTrace> {
    check_dim(init.dim(), frames.cols())?;
    let ones = vec![1.0; frames.rows()];
    let n = frames.rows().max(1) as f64;
    let mut current = init;
    let mut loglik = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let (next, ll) = current.em_step(frames, &ones)?;
        if let Some(&prev) = loglik.last() {
            if (ll - prev) / n < tolerance {
                loglik.push(ll);
                converged = true;
                break;
            }
        }
        loglik.push(ll);
        current = next;
    }
    if !converged {
        loglik.push(current.loglik(frames));
    }
    Ok(EmTrace {
        mixture: current,
        loglik,
        converged,
    })
}

/// K-means means, data covariance, uniform weights.
pub(crate) fn init_mixture(frames: &Matrix, m: usize, cov: CovKind, seed: u64) -> Result<Mixture> {
    let means = kmeans_train(frames, m, seed, 100)?.centroids;
    Mixture::from_data(frames, &means, cov)
}

/// One mixture per class.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmSet {
    pub classes: Vec<Mixture>,
}

impl GmmSet {
    /// Trains on the pooled frames of each class. A single-row sequence
    /// per item gives the GMM-1 setting.
    pub fn train(sequences: &[Matrix], labels: &[usize], num_classes: usize, params: &GmmParams, seed: u64) -> Result<Self> {
        check_labels(sequences.len(), labels, num_classes)?;
        if params.m == 0 {
            return Err(Error::Param("GMM needs M >= 1".into()));
        }
        let classes = (0..num_classes)
            .into_par_iter()
            .map(|c| {
                let parts: Vec<&Matrix> = sequences.iter().zip(labels).filter(|(_, &l)| l == c).map(|(s, _)| s).collect();
                let frames = Matrix::vstack(parts.iter().copied())?;
                if frames.rows() < params.m {
                    return Err(Error::Data(format!(
                        "class {c} has {} training frames, GMM with M={} needs at least {}",
                        frames.rows(),
                        params.m,
                        params.m
                    )));
                }
                let init = init_mixture(&frames, params.m, params.cov, seed.wrapping_add(c as u64))?;
                Ok(fit_em(&frames, init, params.max_iters, params.tolerance)?.mixture)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GmmSet { classes })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    /// Per-class `sum_t log p(x_t | class)`.
    pub fn loglik(&self, seq: &Matrix) -> Result<Vec<f64>> {
        check_dim(self.dim(), seq.cols())?;
        Ok(self.classes.iter().map(|m| m.loglik(seq)).collect())
    }
}
