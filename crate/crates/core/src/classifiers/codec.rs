//! The `NMDL` model container.
//!
//! Layout: `b"NMDL"`, version `u16`, variant tag `u8`, then the variant's
//! fields as little-endian `u32` counts and `f64` values:
//!
//! * kNN (0): k, C, N, d; N*d vectors; N labels
//! * QNN (1): C, N, P, squared flag; per subspace K, width and K*width
//!   centroids; N*P codes; N labels
//! * SVM (2): kernel tag, degree, gamma, coef0, Q, C, d, scaler flag
//!   [d means, d scales]; pool size and pool*d vectors; machine count and
//!   per machine positive, negative, rho, count, indices, coefficients
//! * GMM (3): C, M, d, covariance tag; per class and component the weight,
//!   d means and d variances (diagonal) or d(d+1)/2 lower-triangle entries
//! * HMM (4): C, M, d, covariance tag; per class S, S initial
//!   probabilities, S*S transitions, then S mixtures laid out as for GMM

use super::gaussian::{CovKind, Gaussian, Mixture};
use super::hmm::{Hmm, HmmSet};
use super::kernel::{KernelKind, KernelSpec};
use super::knn::KnnStore;
use super::qnn::QnnModel;
use super::svm::{BinaryMachine, Scaler, SvmModel};
use super::gmm::GmmSet;
use super::TrainedModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::postproc::Codebook;

const MAGIC: &[u8; 4] = b"NMDL";
const VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        v.iter().for_each(|&x| self.f64(x));
    }

    fn mixture(&mut self, m: &Mixture) {
        for (w, g) in m.weights.iter().zip(&m.components) {
            self.f64(*w);
            self.f64s(&g.mean);
            match g.kind {
                CovKind::Diagonal => self.f64s(&g.cov),
                CovKind::Full => {
                    let d = g.dim();
                    for i in 0..d {
                        self.f64s(&g.cov[i * d..i * d + i + 1]);
                    }
                }
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Parse(format!("model truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads `n` values, refusing counts larger than the remaining input.
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n > (self.bytes.len() - self.pos) / 8 {
            return Err(Error::Parse(format!("model truncated at byte {}", self.pos)));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<usize>> {
        if n > (self.bytes.len() - self.pos) / 4 {
            return Err(Error::Parse(format!("model truncated at byte {}", self.pos)));
        }
        (0..n).map(|_| self.u32()).collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
        Matrix::from_vec(rows, cols, self.f64s(n)?)
    }

    fn mixture(&mut self, m: usize, d: usize, kind: CovKind) -> Result<Mixture> {
        let mut weights = Vec::with_capacity(m);
        let mut components = Vec::with_capacity(m);
        for _ in 0..m {
            weights.push(self.f64()?);
            let mean = self.f64s(d)?;
            let cov = match kind {
                CovKind::Diagonal => self.f64s(d)?,
                CovKind::Full => {
                    let mut cov = vec![0.0; d * d];
                    for i in 0..d {
                        for j in 0..=i {
                            let v = self.f64()?;
                            cov[i * d + j] = v;
                            cov[j * d + i] = v;
                        }
                    }
                    cov
                }
            };
            components.push(Gaussian::new(mean, cov, kind)?);
        }
        Mixture::new(weights, components)
    }
}

fn labels_in_range(labels: &[usize], c: usize) -> Result<()> {
    if labels.iter().any(|&l| l >= c) {
        return Err(Error::Format("label out of range".into()));
    }
    Ok(())
}

pub(super) fn encode(model: &TrainedModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&VERSION.to_le_bytes());
    match model {
        TrainedModel::Knn(m) => {
            w.0.push(0);
            w.u32(m.k);
            w.u32(m.num_classes);
            w.u32(m.vectors.rows());
            w.u32(m.vectors.cols());
            w.f64s(m.vectors.as_slice());
            m.labels.iter().for_each(|&l| w.u32(l));
        }
        TrainedModel::Qnn(m) => {
            w.0.push(1);
            w.u32(m.num_classes);
            w.u32(m.labels.len());
            w.u32(m.p());
            w.u32(m.squared as usize);
            for cb in &m.codebooks {
                w.u32(cb.k());
                w.u32(cb.dim());
                w.f64s(cb.centroids.as_slice());
            }
            m.codes.iter().for_each(|&c| w.u32(c as usize));
            m.labels.iter().for_each(|&l| w.u32(l));
        }
        TrainedModel::Svm(m) => {
            w.0.push(2);
            w.u32(m.kernel.kind.tag() as usize);
            w.u32(m.kernel.degree as usize);
            w.f64(m.kernel.gamma);
            w.f64(m.kernel.coef0);
            w.f64(m.box_q);
            w.u32(m.num_classes);
            w.u32(m.dim());
            match &m.scaler {
                Some(s) => {
                    w.u32(1);
                    w.f64s(&s.mean);
                    w.f64s(&s.scale);
                }
                None => w.u32(0),
            }
            w.u32(m.support_vectors.rows());
            w.f64s(m.support_vectors.as_slice());
            w.u32(m.machines.len());
            for b in &m.machines {
                w.u32(b.positive);
                w.u32(b.negative);
                w.f64(b.rho);
                w.u32(b.support.len());
                b.support.iter().for_each(|&s| w.u32(s as usize));
                w.f64s(&b.coef);
            }
        }
        TrainedModel::Gmm(m) => {
            w.0.push(3);
            let first = &m.classes[0];
            w.u32(m.classes.len());
            w.u32(first.len());
            w.u32(first.dim());
            w.u32(first.kind().tag() as usize);
            m.classes.iter().for_each(|c| w.mixture(c));
        }
        TrainedModel::Hmm(m) => {
            w.0.push(4);
            let first = &m.classes[0].states[0];
            w.u32(m.classes.len());
            w.u32(first.len());
            w.u32(first.dim());
            w.u32(first.kind().tag() as usize);
            for h in &m.classes {
                w.u32(h.num_states());
                w.f64s(&h.initial);
                w.f64s(h.transitions.as_slice());
                h.states.iter().for_each(|s| w.mixture(s));
            }
        }
    }
    w.0
}

pub(super) fn decode(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Format("not an NMDL model".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("NMDL version {version} unsupported")));
    }
    let model = match r.u8()? {
        0 => {
            let (k, c, n, d) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
            let vectors = r.matrix(n, d)?;
            let labels = r.u32s(n)?;
            labels_in_range(&labels, c)?;
            TrainedModel::Knn(KnnStore::train(&vectors, &labels, c, k)?)
        }
        1 => {
            let (c, n, p, squared) = (r.u32()?, r.u32()?, r.u32()?, r.u32()? != 0);
            let mut codebooks = Vec::with_capacity(p.min(1 << 16));
            for _ in 0..p {
                let (k, width) = (r.u32()?, r.u32()?);
                codebooks.push(Codebook {
                    centroids: r.matrix(k, width)?,
                    inertia: 0.0,
                });
            }
            let codes = r.u32s(n.checked_mul(p).ok_or_else(|| Error::Format("QNN size overflows".into()))?)?;
            let labels = r.u32s(n)?;
            labels_in_range(&labels, c)?;
            let codes = codes.into_iter().map(|v| v as u32).collect();
            TrainedModel::Qnn(QnnModel::from_parts(codebooks, codes, labels, c, squared)?)
        }
        2 => {
            let kind = KernelKind::from_tag(u8::try_from(r.u32()?).map_err(|_| Error::Format("bad kernel tag".into()))?)?;
            let degree = r.u32()? as u32;
            let kernel = KernelSpec {
                kind,
                degree,
                gamma: r.f64()?,
                coef0: r.f64()?,
            };
            let box_q = r.f64()?;
            let (c, d) = (r.u32()?, r.u32()?);
            let scaler = match r.u32()? {
                0 => None,
                _ => Some(Scaler {
                    mean: r.f64s(d)?,
                    scale: r.f64s(d)?,
                }),
            };
            let pool = r.u32()?;
            let support_vectors = r.matrix(pool, d)?;
            let count = r.u32()?;
            if count > bytes.len() {
                return Err(Error::Parse("machine count exceeds input".into()));
            }
            let mut machines = Vec::with_capacity(count);
            for _ in 0..count {
                let (positive, negative) = (r.u32()?, r.u32()?);
                let rho = r.f64()?;
                let n = r.u32()?;
                let support: Vec<u32> = r.u32s(n)?.into_iter().map(|s| s as u32).collect();
                if positive >= c || negative >= c || support.iter().any(|&s| s as usize >= pool) {
                    return Err(Error::Format("SVM machine refers outside the model".into()));
                }
                machines.push(BinaryMachine {
                    positive,
                    negative,
                    support,
                    coef: r.f64s(n)?,
                    rho,
                });
            }
            TrainedModel::Svm(SvmModel {
                kernel,
                box_q,
                scaler,
                support_vectors,
                machines,
                num_classes: c,
            })
        }
        3 => {
            let (c, m, d, kind) = (r.u32()?, r.u32()?, r.u32()?, CovKind::from_tag(r.u32()? as u32)?);
            let classes = (0..c).map(|_| r.mixture(m, d, kind)).collect::<Result<Vec<_>>>()?;
            if classes.is_empty() {
                return Err(Error::Format("GMM set without classes".into()));
            }
            TrainedModel::Gmm(GmmSet { classes })
        }
        4 => {
            let (c, m, d, kind) = (r.u32()?, r.u32()?, r.u32()?, CovKind::from_tag(r.u32()? as u32)?);
            let mut classes = Vec::new();
            for _ in 0..c {
                let s = r.u32()?;
                let initial = r.f64s(s)?;
                let transitions = r.matrix(s, s)?;
                let states = (0..s).map(|_| r.mixture(m, d, kind)).collect::<Result<Vec<_>>>()?;
                classes.push(Hmm::new(initial, transitions, states)?);
            }
            if classes.is_empty() {
                return Err(Error::Format("HMM set without classes".into()));
            }
            TrainedModel::Hmm(HmmSet { classes })
        }
        tag => return Err(Error::Format(format!("unknown model tag {tag}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after model", bytes.len() - r.pos)));
    }
    Ok(model)
}
