use serde::{Deserialize, Serialize};

use super::{argmax_lowest, check_dim, check_labels};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::postproc::{kmeans_train, Codebook};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnnParams {
    /// Number of subspaces, clamped to the input dimension.
    pub p: usize,
    /// Centroids per subspace.
    pub k: usize,
    /// Score with the sum of squared subspace distances instead of the
    /// square root of the sum of distances.
    pub squared: bool,
    pub max_iters: usize,
}

impl Default for QnnParams {
    fn default() -> Self {
        QnnParams {
            p: 4,
            k: 16,
            squared: false,
            max_iters: 100,
        }
    }
}

/// Quantized nearest neighbour: every training vector is kept as `P`
/// centroid ids, one per contiguous subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct QnnModel {
    pub codebooks: Vec<Codebook>,
    /// `N x P` centroid ids, row-major.
    pub codes: Vec<u32>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub squared: bool,
    /// Centroid-to-centroid distances per subspace (derived).
    tables: Vec<Matrix>,
}

/// Contiguous blocks of `dim / p` columns, the remainder going to the last.
pub fn subspace_bounds(dim: usize, p: usize) -> Vec<(usize, usize)> {
    let width = dim / p;
    (0..p)
        .map(|i| (i * width, if i + 1 == p { dim } else { (i + 1) * width }))
        .collect()
}

fn columns(x: &Matrix, (a, b): (usize, usize)) -> Matrix {
    let data = x.iter_rows().flat_map(|r| r[a..b].iter().copied()).collect();
    Matrix::from_vec(x.rows(), b - a, data).expect("block shape")
}

impl QnnModel {
    pub fn train(x: &Matrix, labels: &[usize], num_classes: usize, params: &QnnParams, seed: u64) -> Result<Self> {
        check_labels(x.rows(), labels, num_classes)?;
        if params.p == 0 || params.k == 0 {
            return Err(Error::Param("QNN needs P >= 1 and K >= 1".into()));
        }
        if params.k > x.rows() {
            return Err(Error::Data(format!("QNN with K={} needs at least {} training vectors, got {}", params.k, params.k, x.rows())));
        }
        let p = params.p.min(x.cols()).max(1);
        let codebooks = subspace_bounds(x.cols(), p)
            .into_iter()
            .enumerate()
            .map(|(i, b)| kmeans_train(&columns(x, b), params.k, seed.wrapping_add(i as u64), params.max_iters))
            .collect::<Result<Vec<_>>>()?;
        let mut model = QnnModel {
            codebooks,
            codes: Vec::new(),
            labels: labels.to_vec(),
            num_classes,
            squared: params.squared,
            tables: Vec::new(),
        };
        model.codes = x.iter_rows().flat_map(|r| model.quantize(r)).collect();
        model.build_tables();
        Ok(model)
    }

    /// Rebuilds a model from stored parts; tables are derived here.
    pub fn from_parts(codebooks: Vec<Codebook>, codes: Vec<u32>, labels: Vec<usize>, num_classes: usize, squared: bool) -> Result<Self> {
        if codebooks.is_empty() || codes.len() != labels.len() * codebooks.len() {
            return Err(Error::Format("inconsistent QNN codes".into()));
        }
        let p = codebooks.len();
        if codes.iter().enumerate().any(|(i, &c)| c as usize >= codebooks[i % p].k()) {
            return Err(Error::Format("QNN code out of range".into()));
        }
        let mut model = QnnModel {
            codebooks,
            codes,
            labels,
            num_classes,
            squared,
            tables: Vec::new(),
        };
        model.build_tables();
        Ok(model)
    }

    fn build_tables(&mut self) {
        self.tables = self
            .codebooks
            .iter()
            .map(|cb| {
                let k = cb.k();
                let mut t = Matrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        t[(i, j)] = squared_distance(cb.centroids.row(i), cb.centroids.row(j)).sqrt();
                    }
                }
                t
            })
            .collect();
    }

    pub fn p(&self) -> usize {
        self.codebooks.len()
    }

    pub fn dim(&self) -> usize {
        self.codebooks.iter().map(Codebook::dim).sum()
    }

    fn quantize(&self, x: &[f64]) -> Vec<u32> {
        let mut start = 0;
        self.codebooks
            .iter()
            .map(|cb| {
                let id = cb.nearest(&x[start..start + cb.dim()]).0 as u32;
                start += cb.dim();
                id
            })
            .collect()
    }

    /// `g(x; c) = -sqrt(min_n sum_p ||Q_p(x_p) - Q_p(x_{n,p})||)` over the
    /// training vectors of class `c`; `-inf` for classes without any.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let q = self.quantize(x);
        let p = self.p();
        let mut best = vec![f64::INFINITY; self.num_classes];
        for (n, codes) in self.codes.chunks(p).enumerate() {
            let d: f64 = codes
                .iter()
                .zip(&q)
                .zip(&self.tables)
                .map(|((&a, &b), t)| {
                    let v = t[(b as usize, a as usize)];
                    if self.squared {
                        v * v
                    } else {
                        v
                    }
                })
                .sum();
            let c = self.labels[n];
            if d < best[c] {
                best[c] = d;
            }
        }
        Ok(best
            .into_iter()
            .map(|d| if self.squared { -d } else { -d.sqrt() })
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.scores(x)?))
    }
}
