use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{GmmParams, HmmParams, QnnParams, SvmParams};
use crate::error::{Error, Result};
use crate::features::FeatureKind;

/// How a feature sequence is turned into a classifier input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostKind {
    Mean,
    MeanStd,
    Bow,
    Interp,
    /// The raw frame sequence, for GMM-T and HMM.
    Sequence,
}

impl PostKind {
    pub fn suffix(self) -> &'static str {
        match self {
            PostKind::Mean => "+Mean",
            PostKind::MeanStd => "+MeanStd",
            PostKind::Bow => "+BoW",
            PostKind::Interp => "+Interp",
            PostKind::Sequence => "+Seq",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    Knn,
    Qnn,
    Gmm1,
    GmmT,
    Hmm,
    Svm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Knn,
        ClassifierKind::Qnn,
        ClassifierKind::Gmm1,
        ClassifierKind::GmmT,
        ClassifierKind::Hmm,
        ClassifierKind::Svm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Qnn => "qnn",
            ClassifierKind::Gmm1 => "gmm1",
            ClassifierKind::GmmT => "gmmT",
            ClassifierKind::Hmm => "hmm",
            ClassifierKind::Svm => "svm",
        }
    }

    /// GMM-T and HMM score frame sequences; the rest need one vector.
    pub fn takes_sequences(self) -> bool {
        matches!(self, ClassifierKind::GmmT | ClassifierKind::Hmm)
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(ClassifierKind::Knn),
            "qnn" => Ok(ClassifierKind::Qnn),
            "gmm1" | "gmm-1" => Ok(ClassifierKind::Gmm1),
            "gmmt" | "gmm-t" => Ok(ClassifierKind::GmmT),
            "hmm" => Ok(ClassifierKind::Hmm),
            "svm" => Ok(ClassifierKind::Svm),
            _ => Err(Error::Config(format!("unknown classifier `{s}`"))),
        }
    }
}

/// Hyperparameters of every family; each cell only reads its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub knn_k: usize,
    pub qnn: QnnParams,
    pub svm: SvmParams,
    pub gmm: GmmParams,
    pub hmm: HmmParams,
    pub bow_k: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            knn_k: 1,
            qnn: QnnParams::default(),
            svm: SvmParams::default(),
            gmm: GmmParams::default(),
            hmm: HmmParams::default(),
            bow_k: 50,
        }
    }
}

/// One (feature, post-processing, classifier) combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub feature: FeatureKind,
    pub post: PostKind,
    pub classifier: ClassifierKind,
    pub hyper: Hyper,
}

impl BenchCell {
    pub fn new(feature: FeatureKind, post: PostKind, classifier: ClassifierKind) -> Result<Self> {
        let cell = BenchCell {
            feature,
            post,
            classifier,
            hyper: Hyper::default(),
        };
        cell.validate()?;
        Ok(cell)
    }

    /// Rejects the combinations the benchmark leaves empty.
    pub fn validate(&self) -> Result<()> {
        let reason = match (self.post, self.classifier) {
            (PostKind::Sequence, c) if !c.takes_sequences() => {
                Some("needs one fixed-length vector per clip, not a frame sequence")
            }
            (p, c) if p != PostKind::Sequence && c.takes_sequences() => {
                Some("scores frame sequences and cannot use pooled vectors")
            }
            (PostKind::Interp, ClassifierKind::Gmm1) => {
                Some("would fit one Gaussian over a whole interpolated sequence")
            }
            _ if self.feature == FeatureKind::Ttff && self.classifier == ClassifierKind::Hmm => {
                Some("is not part of the benchmark for TTFF features")
            }
            _ => None,
        };
        match reason {
            Some(r) => Err(Error::Config(format!("invalid cell {self}: {} {r}", self.classifier.label()))),
            None => Ok(()),
        }
    }

    /// Name of the cell without hyperparameters, e.g. `MFCC+Interp/knn`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BenchCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let default_post = if self.classifier.takes_sequences() {
            PostKind::Sequence
        } else {
            PostKind::Mean
        };
        let suffix = if self.post == default_post { "" } else { self.post.suffix() };
        write!(f, "{}{}/{}", self.feature.label(), suffix, self.classifier.label())
    }
}

impl FromStr for BenchCell {
    type Err = Error;

    /// Parses `FEATURE[+POST]/CLASSIFIER`. Without a post-processing
    /// suffix, vector classifiers get mean pooling and sequence
    /// classifiers the raw sequence.
    fn from_str(s: &str) -> Result<Self> {
        let (left, right) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Config(format!("cell `{s}` is not FEATURE[+POST]/CLASSIFIER")))?;
        let classifier: ClassifierKind = right.trim().parse()?;
        let left = left.trim();
        let posts = [
            ("+MEANSTD", PostKind::MeanStd),
            ("+MEAN", PostKind::Mean),
            ("+BOW", PostKind::Bow),
            ("+INTERP", PostKind::Interp),
            ("+SEQ", PostKind::Sequence),
        ];
        let upper = left.to_ascii_uppercase();
        let (feature, post) = match posts.iter().find(|(p, _)| upper.ends_with(p)) {
            Some((p, kind)) => (&left[..left.len() - p.len()], *kind),
            None if classifier.takes_sequences() => (left, PostKind::Sequence),
            None => (left, PostKind::Mean),
        };
        BenchCell::new(feature.parse()?, post, classifier)
    }
}
