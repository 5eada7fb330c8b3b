//! One-versus-one soft-margin SVMs trained with SMO.
//!
//! Each binary machine solves the dual
//! `min 1/2 a^T Q a - e^T a` s.t. `y^T a = 0`, `0 <= a_i <= box_q`,
//! with `Q_ij = y_i y_j K(x_i, x_j)`, picking the maximal violating pair
//! at every step until the violation drops below the KKT tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::{argmax_lowest, check_dim};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Curvature used when a pair has non-positive curvature (indefinite kernels).
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    /// `None` means `1 / dim`.
    pub gamma: Option<f64>,
    /// Box constraint on the dual variables (misclassification penalty).
    pub box_q: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    /// Z-score the inputs with training statistics before the kernel.
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: KernelSpec::rbf(1.0),
            gamma: None,
            box_q: 10.0,
            tolerance: 1e-3,
            max_iters: 1_000_000,
            standardize: true,
        }
    }
}

/// Solution of one binary dual problem.
#[derive(Clone, Debug)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the binary soft-margin dual for a precomputed Gram matrix.
pub fn smo_solve(gram: &Matrix, y: &[f64], box_q: f64, tolerance: f64, max_iters: usize) -> SmoSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= box_q;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if in_up && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * gram[(i, j)];
        if y[i] != y[j] {
            let mut quad = gram[(i, i)] + gram[(j, j)] + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = MIN_CURVATURE;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > box_q {
                    alpha[i] = box_q;
                    alpha[j] = box_q - diff;
                }
            } else if alpha[j] > box_q {
                alpha[j] = box_q;
                alpha[i] = box_q + diff;
            }
        } else {
            let mut quad = gram[(i, i)] + gram[(j, j)] - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = MIN_CURVATURE;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > box_q {
                if alpha[i] > box_q {
                    alpha[i] = box_q;
                    alpha[j] = sum - box_q;
                }
                if alpha[j] > box_q {
                    alpha[j] = box_q;
                    alpha[i] = sum - box_q;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * gram[(t, i)] * d_i + y[j] * gram[(t, j)] * d_j);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

/// Per-dimension z-scoring fitted on training data.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            var.iter_mut()
                .zip(r.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m) / n);
        }
        let scale = var
            .into_iter()
            .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
            .collect();
        Scaler { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Binary machine `h(x) = sum_i coef_i K(sv_i, x) - rho` for classes
/// `(positive, negative)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMachine {
    pub positive: usize,
    pub negative: usize,
    /// Indices into [`SvmModel::support_vectors`].
    pub support: Vec<u32>,
    /// `alpha_i * y_i` for each support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
}

/// C(C-1)/2 binary machines sharing one pool of support vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub box_q: f64,
    pub scaler: Option<Scaler>,
    pub support_vectors: Matrix,
    pub machines: Vec<BinaryMachine>,
    pub num_classes: usize,
}

/// Votes of a 1v1 prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmVotes {
    pub class: usize,
    pub votes: Vec<usize>,
    /// Summed `|h|` of the duels each class won.
    pub margins: Vec<f64>,
}

impl SvmModel {
    pub fn train(x: &Matrix, labels: &[usize], num_classes: usize, params: &SvmParams) -> Result<Self> {
        if x.rows() != labels.len() || x.rows() == 0 {
            return Err(Error::Data("SVM needs as many labels as training vectors".into()));
        }
        let present: Vec<usize> = (0..num_classes).filter(|c| labels.contains(c)).collect();
        if present.len() < 2 {
            return Err(Error::Data("SVM needs at least two classes".into()));
        }
        if !(params.box_q > 0.0) {
            return Err(Error::Param(format!("box constraint Q={} must be positive", params.box_q)));
        }
        let mut kernel = params.kernel;
        if let Some(g) = params.gamma {
            kernel.gamma = g;
        } else {
            kernel.gamma = 1.0 / x.cols().max(1) as f64;
        }
        kernel.validate()?;
        let scaler = params.standardize.then(|| Scaler::fit(x));
        let inputs = match &scaler {
            Some(s) => {
                let rows: Vec<Vec<f64>> = x.iter_rows().map(|r| s.apply(r)).collect();
                Matrix::from_rows(&rows)?
            }
            None => x.clone(),
        };
        for r in inputs.iter_rows() {
            kernel.check_input(r)?;
        }

        let pairs: Vec<(usize, usize)> = present
            .iter()
            .enumerate()
            .flat_map(|(a, &c)| present[a + 1..].iter().map(move |&d| (c, d)))
            .collect();
        let solved = pairs
            .par_iter()
            .map(|&(c, d)| {
                let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c || labels[i] == d).collect();
                let y: Vec<f64> = members.iter().map(|&i| if labels[i] == c { 1.0 } else { -1.0 }).collect();
                let mut gram = Matrix::zeros(members.len(), members.len());
                for (a, &i) in members.iter().enumerate() {
                    for (b, &j) in members.iter().enumerate().skip(a) {
                        let k = kernel.eval(inputs.row(i), inputs.row(j));
                        gram[(a, b)] = k;
                        gram[(b, a)] = k;
                    }
                }
                if !gram.is_finite() {
                    return Err(Error::Numeric(format!("non-finite kernel values for class pair ({c}, {d})")));
                }
                let sol = smo_solve(&gram, &y, params.box_q, params.tolerance, params.max_iters);
                if !sol.converged {
                    log::warn!("SMO for class pair ({c}, {d}) stopped after {} iterations", sol.iterations);
                }
                Ok((c, d, members, y, sol))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut in_pool = vec![false; x.rows()];
        for (_, _, members, _, sol) in &solved {
            for (a, &i) in members.iter().enumerate() {
                if sol.alpha[a] > 0.0 {
                    in_pool[i] = true;
                }
            }
        }
        let mut slot = vec![u32::MAX; x.rows()];
        let mut pool_rows = Vec::new();
        for i in (0..x.rows()).filter(|&i| in_pool[i]) {
            slot[i] = pool_rows.len() as u32;
            pool_rows.push(inputs.row(i));
        }
        let support_vectors = if pool_rows.is_empty() {
            Matrix::zeros(0, x.cols())
        } else {
            Matrix::from_rows(&pool_rows)?
        };
        let machines = solved
            .into_iter()
            .map(|(c, d, members, y, sol)| {
                let (support, coef) = members
                    .iter()
                    .enumerate()
                    .filter(|(a, _)| sol.alpha[*a] > 0.0)
                    .map(|(a, &i)| (slot[i], sol.alpha[a] * y[a]))
                    .unzip();
                BinaryMachine {
                    positive: c,
                    negative: d,
                    support,
                    coef,
                    rho: sol.rho,
                }
            })
            .collect();
        Ok(SvmModel {
            kernel,
            box_q: params.box_q,
            scaler,
            support_vectors,
            machines,
            num_classes,
        })
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.cols()
    }

    fn prepared(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let v = match &self.scaler {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        };
        self.kernel.check_input(&v)?;
        Ok(v)
    }

    /// Decision values `h_{c,d}(x)` of every machine, in machine order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.prepared(x)?;
        let k: Vec<f64> = self
            .support_vectors
            .iter_rows()
            .map(|sv| self.kernel.eval(sv, &v))
            .collect();
        Ok(self
            .machines
            .iter()
            .map(|m| {
                m.support
                    .iter()
                    .zip(&m.coef)
                    .map(|(&s, c)| c * k[s as usize])
                    .sum::<f64>()
                    - m.rho
            })
            .collect())
    }

    /// Vote counting; `h > 0` votes for the positive class, anything else
    /// for the negative one. Ties go to the larger summed margin, then to
    /// the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<SvmVotes> {
        let h = self.decision_values(x)?;
        let mut votes = vec![0usize; self.num_classes];
        let mut margins = vec![0.0; self.num_classes];
        for (m, &v) in self.machines.iter().zip(&h) {
            let winner = if v > 0.0 { m.positive } else { m.negative };
            votes[winner] += 1;
            margins[winner] += v.abs();
        }
        let top = *votes.iter().max().unwrap_or(&0);
        let scores: Vec<f64> = (0..self.num_classes)
            .map(|c| if votes[c] == top { margins[c] } else { f64::NEG_INFINITY })
            .collect();
        Ok(SvmVotes {
            class: argmax_lowest(&scores),
            votes,
            margins,
        })
    }

    /// Largest KKT violation of one machine on its own training data
    /// (`x` and `labels` as passed to [`SvmModel::train`]).
    pub fn kkt_violation(&self, machine: usize, x: &Matrix, labels: &[usize]) -> Result<f64> {
        let m = &self.machines[machine];
        let mut alpha_of = std::collections::HashMap::new();
        for (&s, &c) in m.support.iter().zip(&m.coef) {
            alpha_of.insert(s, c.abs());
        }
        let mut worst: f64 = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            if l != m.positive && l != m.negative {
                continue;
            }
            let y = if l == m.positive { 1.0 } else { -1.0 };
            let v = self.prepared(x.row(i))?;
            let slot = self
                .support_vectors
                .iter_rows()
                .position(|sv| sv == v.as_slice())
                .map(|p| p as u32);
            let alpha = slot.and_then(|s| alpha_of.get(&s).copied()).unwrap_or(0.0);
            let k: f64 = m
                .support
                .iter()
                .zip(&m.coef)
                .map(|(&s, c)| c * self.kernel.eval(self.support_vectors.row(s as usize), &v))
                .sum();
            let margin = y * (k - m.rho);
            let violation = if alpha <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if alpha >= self.box_q {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(violation);
        }
        Ok(worst)
    }
}
