//! The five classifier families and the shared decision rule
//! `c* = argmax_c g(x; c)` with ties going to the lowest class id.

mod codec;
mod gaussian;
mod gmm;
mod hmm;
pub mod kernel;
mod knn;
mod qnn;
mod svm;

pub use gaussian::{CovKind, Gaussian, Mixture, COV_FLOOR};
pub use gmm::{fit_em, EmTrace, GmmParams, GmmSet};
pub use hmm::{BaumWelchTrace, Hmm, HmmParams, HmmSet};
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use knn::{KnnStore, KnnVotes};
pub use qnn::{QnnModel, QnnParams};
pub use svm::{smo_solve, BinaryMachine, Scaler, SmoSolution, SvmModel, SvmParams, SvmVotes};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One classifier input: a fixed-length vector or a `T x d` frame sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Vector(Vec<f64>),
    Sequence(Matrix),
}

impl Sample {
    pub fn dim(&self) -> usize {
        match self {
            Sample::Vector(v) => v.len(),
            Sample::Sequence(m) => m.cols(),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Sample::Vector(_) => "vector",
            Sample::Sequence(_) => "sequence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    Knn(KnnStore),
    Qnn(QnnModel),
    Svm(SvmModel),
    Gmm(GmmSet),
    Hmm(HmmSet),
}

impl TrainedModel {
    pub fn name(&self) -> &'static str {
        match self {
            TrainedModel::Knn(_) => "knn",
            TrainedModel::Qnn(_) => "qnn",
            TrainedModel::Svm(_) => "svm",
            TrainedModel::Gmm(_) => "gmm",
            TrainedModel::Hmm(_) => "hmm",
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.num_classes,
            TrainedModel::Qnn(m) => m.num_classes,
            TrainedModel::Svm(m) => m.num_classes,
            TrainedModel::Gmm(m) => m.num_classes(),
            TrainedModel::Hmm(m) => m.num_classes(),
        }
    }

    fn vector<'a>(&self, sample: &'a Sample) -> Result<&'a [f64]> {
        match sample {
            Sample::Vector(v) => Ok(v),
            Sample::Sequence(_) => Err(self.mismatch(sample)),
        }
    }

    fn mismatch(&self, sample: &Sample) -> Error {
        Error::Data(format!("{} model cannot score a {}", self.name(), sample.kind_name()))
    }

    /// Per-class scores `g(x; c)`: votes for kNN and SVM, negated
    /// quantized distance for QNN, log-likelihoods for GMM and HMM.
    pub fn scores(&self, sample: &Sample) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Knn(m) => {
                let v = m.predict(self.vector(sample)?)?;
                Ok(v.votes.into_iter().map(|n| n as f64).collect())
            }
            TrainedModel::Qnn(m) => m.scores(self.vector(sample)?),
            TrainedModel::Svm(m) => {
                let v = m.predict(self.vector(sample)?)?;
                Ok(v.votes.into_iter().map(|n| n as f64).collect())
            }
            TrainedModel::Gmm(m) => match sample {
                Sample::Vector(v) => m.loglik(&Matrix::from_vec(1, v.len(), v.clone())?),
                Sample::Sequence(s) => m.loglik(s),
            },
            TrainedModel::Hmm(m) => match sample {
                Sample::Sequence(s) => m.loglik(s),
                Sample::Vector(_) => Err(self.mismatch(sample)),
            },
        }
    }

    /// The predicted class, applying each family's tie rule.
    pub fn predict(&self, sample: &Sample) -> Result<usize> {
        match self {
            TrainedModel::Knn(m) => Ok(m.predict(self.vector(sample)?)?.class),
            TrainedModel::Svm(m) => Ok(m.predict(self.vector(sample)?)?.class),
            _ => Ok(argmax_lowest(&self.scores(sample)?)),
        }
    }

    /// Canonical `NMDL` serialization.
    pub fn encode(&self) -> Vec<u8> {
        codec::encode(self)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        codec::decode(bytes)
    }

    /// Size of the canonical serialization in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.encode().len()
    }
}

pub fn classify(model: &TrainedModel, sample: &Sample) -> Result<usize> {
    model.predict(sample)
}

/// Index of the largest score; the lowest index wins ties and NaN never wins.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] || (scores[best].is_nan() && !s.is_nan()) {
            best = i;
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Data(format!("expected {expected}-dim input, got {got}")));
    }
    Ok(())
}

pub(crate) fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Splits training vectors by class, erroring on out-of-range labels.
pub(crate) fn check_labels(n: usize, labels: &[usize], num_classes: usize) -> Result<()> {
    if n != labels.len() {
        return Err(Error::Data(format!("{n} training items but {} labels", labels.len())));
    }
    if n == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::Data(format!("label {bad} out of range for {num_classes} classes")));
    }
    Ok(())
}
