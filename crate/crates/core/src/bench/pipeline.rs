//! Fitting post-processing and a model on training clips, and the saved
//! `NPIP` bundle used by the `train` and `predict` commands.

use serde::{Deserialize, Serialize};

use super::cell::{BenchCell, ClassifierKind, PostKind};
use crate::classifiers::{GmmSet, HmmSet, KnnStore, QnnModel, Sample, SvmModel, TrainedModel};
use crate::dataset::AudioClip;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureExtractor};
use crate::matrix::Matrix;
use crate::postproc::{bow_encode, interpolate, kmeans_train, mean_sequence_length, pool_mean, Codebook};

const MAGIC: &[u8; 4] = b"NPIP";
const VERSION: u16 = 1;

/// Whatever the post-processing learned from the training clips.
#[derive(Clone, Debug, PartialEq)]
pub enum PostState {
    Stateless,
    Codebook(Codebook),
    Length(usize),
}

impl PostState {
    pub fn fit(cell: &BenchCell, train: &[&Matrix], seed: u64) -> Result<Self> {
        Ok(match cell.post {
            PostKind::Bow => {
                let frames = Matrix::vstack(train.iter().copied())?;
                PostState::Codebook(kmeans_train(&frames, cell.hyper.bow_k, seed, 100)?)
            }
            PostKind::Interp => PostState::Length(mean_sequence_length(train.iter().map(|m| m.rows()))?),
            _ => PostState::Stateless,
        })
    }

    /// Turns one feature sequence into the classifier input.
    pub fn apply(&self, cell: &BenchCell, seq: &Matrix) -> Result<Sample> {
        let pooled = match (cell.post, self) {
            (PostKind::Sequence, _) => return Ok(Sample::Sequence(seq.clone())),
            (PostKind::Mean, _) => pool_mean(seq, false)?,
            (PostKind::MeanStd, _) => pool_mean(seq, true)?,
            (PostKind::Bow, PostState::Codebook(cb)) => bow_encode(seq, cb)?,
            (PostKind::Interp, PostState::Length(t)) => interpolate(seq, *t)?,
            _ => return Err(Error::Data("post-processing state does not match the cell".into())),
        };
        Ok(Sample::Vector(pooled.values))
    }
}

fn stack(samples: &[Sample]) -> Result<Matrix> {
    let rows = samples
        .iter()
        .map(|s| match s {
            Sample::Vector(v) => Ok(v.as_slice()),
            Sample::Sequence(_) => Err(Error::Data("expected fixed-length vectors".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

fn sequences(samples: &[Sample]) -> Vec<Matrix> {
    samples
        .iter()
        .map(|s| match s {
            Sample::Vector(v) => Matrix::from_vec(1, v.len(), v.clone()).expect("row vector"),
            Sample::Sequence(m) => m.clone(),
        })
        .collect()
}

/// Trains the cell's classifier on prepared samples.
pub fn train_model(cell: &BenchCell, samples: &[Sample], labels: &[usize], num_classes: usize, seed: u64) -> Result<TrainedModel> {
    let h = &cell.hyper;
    Ok(match cell.classifier {
        ClassifierKind::Knn => TrainedModel::Knn(KnnStore::train(&stack(samples)?, labels, num_classes, h.knn_k)?),
        ClassifierKind::Qnn => TrainedModel::Qnn(QnnModel::train(&stack(samples)?, labels, num_classes, &h.qnn, seed)?),
        ClassifierKind::Svm => TrainedModel::Svm(SvmModel::train(&stack(samples)?, labels, num_classes, &h.svm)?),
        ClassifierKind::Gmm1 | ClassifierKind::GmmT => {
            TrainedModel::Gmm(GmmSet::train(&sequences(samples), labels, num_classes, &h.gmm, seed)?)
        }
        ClassifierKind::Hmm => TrainedModel::Hmm(HmmSet::train(&sequences(samples), labels, num_classes, &h.hmm, seed)?),
    })
}

/// Post-processing state and model fitted on the same training clips.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedCell {
    pub post: PostState,
    pub model: TrainedModel,
}

impl FittedCell {
    pub fn fit(cell: &BenchCell, train: &[&Matrix], labels: &[usize], num_classes: usize, seed: u64) -> Result<Self> {
        let post = PostState::fit(cell, train, seed)?;
        let samples = train.iter().map(|s| post.apply(cell, s)).collect::<Result<Vec<_>>>()?;
        let model = train_model(cell, &samples, labels, num_classes, seed)?;
        Ok(FittedCell { post, model })
    }

    pub fn predict(&self, cell: &BenchCell, seq: &Matrix) -> Result<usize> {
        self.model.predict(&self.post.apply(cell, seq)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    cell: BenchCell,
    features: FeatureConfig,
    class_names: Vec<String>,
}

/// A complete trained pipeline from audio to class id.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub cell: BenchCell,
    pub features: FeatureConfig,
    pub class_names: Vec<String>,
    pub fitted: FittedCell,
    extractor: FeatureExtractor,
}

impl Pipeline {
    pub fn train(cell: BenchCell, features: FeatureConfig, clips: &[AudioClip], class_names: Vec<String>, seed: u64) -> Result<Self> {
        cell.validate()?;
        let extractor = FeatureExtractor::new(features.clone())?;
        let seqs = clips
            .iter()
            .map(|c| extractor.extract(c, cell.feature).map(|f| f.values))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix> = seqs.iter().collect();
        let labels: Vec<usize> = clips.iter().map(|c| c.label).collect();
        let fitted = FittedCell::fit(&cell, &refs, &labels, class_names.len(), seed)?;
        Ok(Pipeline {
            cell,
            features,
            class_names,
            fitted,
            extractor,
        })
    }

    pub fn predict(&self, clip: &AudioClip) -> Result<usize> {
        let f = self.extractor.extract(clip, self.cell.feature)?;
        self.fitted.predict(&self.cell, &f.values)
    }

    /// `NPIP`, version, JSON header length and header, post-processing
    /// state, then the `NMDL` model.
    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            cell: self.cell.clone(),
            features: self.features.clone(),
            class_names: self.class_names.clone(),
        })
        .map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        match &self.fitted.post {
            PostState::Stateless => out.push(0),
            PostState::Codebook(cb) => {
                out.push(1);
                out.extend_from_slice(&(cb.k() as u32).to_le_bytes());
                out.extend_from_slice(&(cb.dim() as u32).to_le_bytes());
                cb.centroids.as_slice().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
            }
            PostState::Length(t) => {
                out.push(2);
                out.extend_from_slice(&(*t as u32).to_le_bytes());
            }
        }
        out.extend_from_slice(&self.fitted.model.encode());
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let truncated = || Error::Parse("pipeline file truncated".into());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos.checked_add(n).ok_or_else(truncated)?).ok_or_else(truncated)?;
            pos += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(Error::Format("not a pipeline file".into()));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("pipeline version {version} unsupported")));
        }
        let len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let header: Header = serde_json::from_slice(take(len)?).map_err(|e| Error::Format(e.to_string()))?;
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
        let post = match take(1)?[0] {
            0 => PostState::Stateless,
            1 => {
                let k = u32_at(take(4)?);
                let d = u32_at(take(4)?);
                let n = k.checked_mul(d).and_then(|n| n.checked_mul(8)).ok_or_else(truncated)?;
                let data = take(n)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
                PostState::Codebook(Codebook {
                    centroids: Matrix::from_vec(k, d, data)?,
                    inertia: 0.0,
                })
            }
            2 => PostState::Length(u32_at(take(4)?)),
            t => return Err(Error::Format(format!("unknown post-processing tag {t}"))),
        };
        let model = TrainedModel::decode(&bytes[pos..])?;
        header.cell.validate()?;
        let extractor = FeatureExtractor::new(header.features.clone())?;
        Ok(Pipeline {
            cell: header.cell,
            features: header.features,
            class_names: header.class_names,
            fitted: FittedCell { post, model },
            extractor,
        })
    }
}
