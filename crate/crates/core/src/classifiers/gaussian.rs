//! Gaussian densities and weighted mixtures with a weighted EM step shared
//! by GMM training and the Baum-Welch emission update.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::logsumexp;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Lower bound on variances (diagonal) or covariance eigenvalues (full).
pub const COV_FLOOR: f64 = 1e-6;

/// Components whose total responsibility is below this keep their
/// parameters unchanged.
const MIN_OCCUPANCY: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovKind {
    Diagonal,
    Full,
}

impl CovKind {
    pub(crate) fn tag(self) -> u32 {
        match self {
            CovKind::Diagonal => 0,
            CovKind::Full => 1,
        }
    }

    pub(crate) fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(CovKind::Diagonal),
            1 => Ok(CovKind::Full),
            _ => Err(Error::Format(format!("unknown covariance tag {tag}"))),
        }
    }
}

impl std::str::FromStr for CovKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag" | "diagonal" => Ok(CovKind::Diagonal),
            "full" => Ok(CovKind::Full),
            _ => Err(Error::Config(format!("unknown covariance kind `{s}`"))),
        }
    }
}

/// A multivariate normal density.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    /// Variances for [`CovKind::Diagonal`], the row-major `d x d` matrix
    /// for [`CovKind::Full`].
    pub cov: Vec<f64>,
    pub kind: CovKind,
    log_norm: f64,
    /// Inverse variances, or the row-major lower Cholesky factor.
    factor: Vec<f64>,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>, kind: CovKind) -> Result<Self> {
        let d = mean.len();
        let half_log_2pi = 0.5 * d as f64 * (2.0 * PI).ln();
        match kind {
            CovKind::Diagonal => {
                if cov.len() != d || cov.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::Numeric("diagonal covariance must be positive".into()));
                }
                let log_det: f64 = cov.iter().map(|v| v.ln()).sum();
                let factor = cov.iter().map(|v| 1.0 / v).collect();
                Ok(Gaussian {
                    log_norm: -half_log_2pi - 0.5 * log_det,
                    mean,
                    cov,
                    kind,
                    factor,
                })
            }
            CovKind::Full => {
                if cov.len() != d * d {
                    return Err(Error::Numeric("full covariance has the wrong size".into()));
                }
                let m = DMatrix::from_row_slice(d, d, &cov);
                let chol = m
                    .cholesky()
                    .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?;
                let l = chol.l();
                let log_det: f64 = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
                let mut factor = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..=i {
                        factor[i * d + j] = l[(i, j)];
                    }
                }
                Ok(Gaussian {
                    log_norm: -half_log_2pi - 0.5 * log_det,
                    mean,
                    cov,
                    kind,
                    factor,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let quad = match self.kind {
            CovKind::Diagonal => x
                .iter()
                .zip(&self.mean)
                .zip(&self.factor)
                .map(|((v, m), p)| (v - m) * (v - m) * p)
                .sum::<f64>(),
            CovKind::Full => {
                let mut z = vec![0.0; d];
                let mut quad = 0.0;
                for i in 0..d {
                    let row = &self.factor[i * d..i * d + i];
                    let s: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
                    z[i] = (x[i] - self.mean[i] - s) / self.factor[i * d + i];
                    quad += z[i] * z[i];
                }
                quad
            }
        };
        self.log_norm - 0.5 * quad
    }
}

/// Clamps the eigenvalues of a symmetric matrix from below.
fn clamp_spectrum(cov: Vec<f64>, d: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(d, d, &cov);
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().all(|&l| l >= COV_FLOOR) {
        return cov;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(COV_FLOOR));
    let r = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = 0.5 * (r[(i, j)] + r[(j, i)]);
        }
    }
    out
}

/// Weighted mean and floored covariance of `frames`.
fn moments(frames: &Matrix, weights: &[f64], kind: CovKind) -> (Vec<f64>, Vec<f64>) {
    let d = frames.cols();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (x, w) in frames.iter_rows().zip(weights) {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += w * v);
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let cov = match kind {
        CovKind::Diagonal => {
            let mut var = vec![0.0; d];
            for (x, w) in frames.iter_rows().zip(weights) {
                var.iter_mut()
                    .zip(x.iter().zip(&mean))
                    .for_each(|(s, (v, m))| *s += w * (v - m) * (v - m));
            }
            var.into_iter().map(|s| (s / total).max(COV_FLOOR)).collect()
        }
        CovKind::Full => {
            let mut cov = vec![0.0; d * d];
            let mut diff = vec![0.0; d];
            for (x, w) in frames.iter_rows().zip(weights) {
                diff.iter_mut().zip(x.iter().zip(&mean)).for_each(|(e, (v, m))| *e = v - m);
                for i in 0..d {
                    for j in 0..=i {
                        cov[i * d + j] += w * diff[i] * diff[j];
                    }
                }
            }
            for i in 0..d {
                for j in 0..=i {
                    cov[i * d + j] /= total;
                    cov[j * d + i] = cov[i * d + j];
                }
            }
            clamp_spectrum(cov, d)
        }
    };
    (mean, cov)
}

/// A weighted sum of Gaussians sharing one covariance kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub components: Vec<Gaussian>,
}

impl Mixture {
    pub fn new(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::Numeric("mixture needs one weight per component".into()));
        }
        let d = components[0].dim();
        if components.iter().any(|g| g.dim() != d || g.kind != components[0].kind) {
            return Err(Error::Numeric("mixture components disagree on shape".into()));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("mixture weights must be >= 0 and sum to 1, got {sum}")));
        }
        Ok(Mixture { weights, components })
    }

    /// Means from `means`, every covariance set to the covariance of
    /// `frames`, uniform weights.
    pub fn from_data(frames: &Matrix, means: &Matrix, kind: CovKind) -> Result<Self> {
        let (_, cov) = moments(frames, &vec![1.0; frames.rows()], kind);
        let components = means
            .iter_rows()
            .map(|m| Gaussian::new(m.to_vec(), cov.clone(), kind))
            .collect::<Result<Vec<_>>>()?;
        let m = components.len();
        Mixture::new(vec![1.0 / m as f64; m], components)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn kind(&self) -> CovKind {
        self.components[0].kind
    }

    fn component_terms(&self, x: &[f64], out: &mut [f64]) {
        for ((o, w), g) in out.iter_mut().zip(&self.weights).zip(&self.components) {
            *o = w.ln() + g.log_pdf(x);
        }
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let mut terms = vec![0.0; self.len()];
        self.component_terms(x, &mut terms);
        logsumexp(&terms)
    }

    /// Sum of frame log-densities.
    pub fn loglik(&self, frames: &Matrix) -> f64 {
        let mut terms = vec![0.0; self.len()];
        frames
            .iter_rows()
            .map(|x| {
                self.component_terms(x, &mut terms);
                logsumexp(&terms)
            })
            .sum()
    }

    /// One EM update with per-frame weights (all ones for plain GMM
    /// training, state occupancies inside Baum-Welch). Returns the updated
    /// mixture and the weighted log-likelihood of `self`.
    pub(crate) fn em_step(&self, frames: &Matrix, frame_weights: &[f64]) -> Result<(Mixture, f64)> {
        let m = self.len();
        let mut resp = vec![0.0; frames.rows() * m];
        let mut ll = 0.0;
        for (t, (x, &w)) in frames.iter_rows().zip(frame_weights).enumerate() {
            let r = &mut resp[t * m..(t + 1) * m];
            self.component_terms(x, r);
            let lse = logsumexp(r);
            if w > 0.0 {
                ll += w * lse;
            }
            r.iter_mut().for_each(|v| *v = if w > 0.0 { w * (*v - lse).exp() } else { 0.0 });
        }
        let total: f64 = frame_weights.iter().sum();
        if !(total > 0.0) {
            return Ok((self.clone(), ll));
        }
        let mut weights = Vec::with_capacity(m);
        let mut components = Vec::with_capacity(m);
        let mut column = vec![0.0; frames.rows()];
        for (j, old) in self.components.iter().enumerate() {
            column.iter_mut().enumerate().for_each(|(t, c)| *c = resp[t * m + j]);
            let occupancy: f64 = column.iter().sum();
            weights.push(occupancy / total);
            if occupancy < MIN_OCCUPANCY {
                components.push(old.clone());
                continue;
            }
            let (mean, cov) = moments(frames, &column, old.kind);
            components.push(Gaussian::new(mean, cov, old.kind)?);
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok((Mixture { weights, components }, ll))
    }
}
