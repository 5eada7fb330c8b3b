//! Left-to-right HMMs with Gaussian-mixture emissions, trained per class
//! by Baum-Welch in the log domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{CovKind, Mixture};
use super::gmm::init_mixture;
use super::{check_dim, check_labels, logsumexp};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pub s: usize,
    /// Gaussians per state.
    pub m: usize,
    pub cov: CovKind,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for HmmParams {
    fn default() -> Self {
        HmmParams {
            s: 4,
            m: 1,
            cov: CovKind::Diagonal,
            max_iters: 30,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hmm {
    pub initial: Vec<f64>,
    /// `S x S`, rows sum to one.
    pub transitions: Matrix,
    pub states: Vec<Mixture>,
}

/// Baum-Welch run; `loglik[i]` is the total log-likelihood after `i`
/// re-estimations.
#[derive(Clone, Debug)]
pub struct BaumWelchTrace {
    pub hmm: Hmm,
    pub loglik: Vec<f64>,
    pub converged: bool,
}

fn ln(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl Hmm {
    pub fn new(initial: Vec<f64>, transitions: Matrix, states: Vec<Mixture>) -> Result<Self> {
        let s = states.len();
        if s == 0 || initial.len() != s || transitions.rows() != s || transitions.cols() != s {
            return Err(Error::Numeric("HMM shapes disagree".into()));
        }
        let rows_ok = transitions
            .iter_rows()
            .all(|r| r.iter().all(|&a| a >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        if !rows_ok || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric("HMM probabilities must be rows summing to one".into()));
        }
        if states.iter().any(|m| m.dim() != states[0].dim()) {
            return Err(Error::Numeric("HMM emission dimensions disagree".into()));
        }
        Ok(Hmm {
            initial,
            transitions,
            states,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// True when every row only self-loops or advances by one.
    pub fn is_left_to_right(&self) -> bool {
        let s = self.num_states();
        (0..s).all(|i| (0..s).all(|j| j == i || j == i + 1 || self.transitions[(i, j)] == 0.0))
    }

    fn log_emissions(&self, seq: &Matrix) -> Matrix {
        let s = self.num_states();
        let mut b = Matrix::zeros(seq.rows(), s);
        for (t, x) in seq.iter_rows().enumerate() {
            for (j, m) in self.states.iter().enumerate() {
                b[(t, j)] = m.log_pdf(x);
            }
        }
        b
    }

    fn log_transitions(&self) -> Matrix {
        let s = self.num_states();
        Matrix::from_vec(s, s, self.transitions.as_slice().iter().map(|&a| ln(a)).collect()).expect("square")
    }

    fn forward(&self, logb: &Matrix, loga: &Matrix) -> (Matrix, f64) {
        let (t_len, s) = (logb.rows(), logb.cols());
        let mut alpha = Matrix::zeros(t_len, s);
        for j in 0..s {
            alpha[(0, j)] = ln(self.initial[j]) + logb[(0, j)];
        }
        let mut terms = vec![0.0; s];
        for t in 1..t_len {
            for j in 0..s {
                for i in 0..s {
                    terms[i] = alpha[(t - 1, i)] + loga[(i, j)];
                }
                alpha[(t, j)] = logsumexp(&terms) + logb[(t, j)];
            }
        }
        let total = logsumexp(alpha.row(t_len - 1));
        (alpha, total)
    }

    fn backward(&self, logb: &Matrix, loga: &Matrix) -> Matrix {
        let (t_len, s) = (logb.rows(), logb.cols());
        let mut beta = Matrix::zeros(t_len, s);
        let mut terms = vec![0.0; s];
        for t in (0..t_len.saturating_sub(1)).rev() {
            for i in 0..s {
                for j in 0..s {
                    terms[j] = loga[(i, j)] + logb[(t + 1, j)] + beta[(t + 1, j)];
                }
                beta[(t, i)] = logsumexp(&terms);
            }
        }
        beta
    }

    /// `log p(seq | model)` by the forward recursion.
    pub fn loglik(&self, seq: &Matrix) -> Result<f64> {
        check_dim(self.dim(), seq.cols())?;
        if seq.rows() == 0 {
            return Err(Error::Data("cannot score an empty sequence".into()));
        }
        Ok(self.forward(&self.log_emissions(seq), &self.log_transitions()).1)
    }

    /// Uniform segmentation of every sequence into `s` chunks; emissions
    /// are fitted to each chunk, transitions counted from the segmentation.
    pub fn init_uniform(seqs: &[&Matrix], s: usize, m: usize, cov: CovKind, seed: u64) -> Result<Self> {
        let min_len = seqs.iter().map(|q| q.rows()).min().unwrap_or(0);
        if s == 0 || min_len < s {
            return Err(Error::Data(format!("{s} states need sequences of at least {s} frames")));
        }
        let mut counts = Matrix::zeros(s, s);
        let mut chunks: Vec<Vec<&[f64]>> = vec![Vec::new(); s];
        for q in seqs {
            let t_len = q.rows();
            let state = |t: usize| t * s / t_len;
            for t in 0..t_len {
                chunks[state(t)].push(q.row(t));
                if t + 1 < t_len {
                    counts[(state(t), state(t + 1))] += 1.0;
                }
            }
        }
        let mut transitions = Matrix::zeros(s, s);
        for i in 0..s {
            let total: f64 = counts.row(i).iter().sum();
            if total > 0.0 {
                for j in 0..s {
                    transitions[(i, j)] = counts[(i, j)] / total;
                }
            } else if i + 1 < s {
                transitions[(i, i)] = 0.5;
                transitions[(i, i + 1)] = 0.5;
            } else {
                transitions[(i, i)] = 1.0;
            }
        }
        let states = chunks
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                let frames = Matrix::from_rows(rows)?;
                if frames.rows() < m {
                    return Err(Error::Data(format!(
                        "state {j} has {} frames for {m} Gaussians",
                        frames.rows()
                    )));
                }
                init_mixture(&frames, m, cov, seed.wrapping_add(j as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut initial = vec![0.0; s];
        initial[0] = 1.0;
        Hmm::new(initial, transitions, states)
    }

    /// One Baum-Welch re-estimation. Returns the updated model and the
    /// total log-likelihood of `self`. The initial distribution stays fixed.
    pub fn baum_welch_step(&self, seqs: &[&Matrix]) -> Result<(Hmm, f64)> {
        let s = self.num_states();
        let loga = self.log_transitions();
        let mut total_ll = 0.0;
        let mut xi = Matrix::zeros(s, s);
        let mut from = vec![0.0; s];
        let mut occupancy: Vec<Vec<f64>> = vec![Vec::new(); s];
        for q in seqs {
            let logb = self.log_emissions(q);
            let (alpha, ll) = self.forward(&logb, &loga);
            if !ll.is_finite() {
                return Err(Error::Numeric("sequence has zero likelihood under the HMM".into()));
            }
            let beta = self.backward(&logb, &loga);
            total_ll += ll;
            for t in 0..q.rows() {
                for j in 0..s {
                    let g = (alpha[(t, j)] + beta[(t, j)] - ll).exp();
                    occupancy[j].push(g);
                    if t + 1 < q.rows() {
                        from[j] += g;
                        for k in 0..s {
                            if loga[(j, k)] > f64::NEG_INFINITY {
                                xi[(j, k)] += (alpha[(t, j)] + loga[(j, k)] + logb[(t + 1, k)] + beta[(t + 1, k)] - ll).exp();
                            }
                        }
                    }
                }
            }
        }
        let mut transitions = self.transitions.clone();
        for i in 0..s {
            let row_total: f64 = xi.row(i).iter().sum();
            if from[i] > 1e-10 && row_total > 0.0 {
                for j in 0..s {
                    transitions[(i, j)] = xi[(i, j)] / row_total;
                }
            }
        }
        let frames = Matrix::vstack(seqs.iter().copied())?;
        let states = self
            .states
            .iter()
            .zip(&occupancy)
            .map(|(m, w)| m.em_step(&frames, w).map(|(next, _)| next))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            Hmm {
                initial: self.initial.clone(),
                transitions,
                states,
            },
            total_ll,
        ))
    }

    pub fn fit(seqs: &[&Matrix], init: Hmm, max_iters: usize, tolerance: f64) -> Result<BaumWelchTrace> {
        let frames: usize = seqs.iter().map(|q| q.rows()).sum();
        let n = frames.max(1) as f64;
        let mut current = init;
        let mut loglik: Vec<f64> = Vec::new();
        let mut converged = false;
        for _ in 0..max_iters {
            let (next, ll) = current.baum_welch_step(seqs)?;
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
            let last = seqs.iter().map(|q| current.loglik(q)).sum::<Result<f64>>()?;
            loglik.push(last);
        }
        Ok(BaumWelchTrace {
            hmm: current,
            loglik,
            converged,
        })
    }
}

/// One left-to-right HMM per class.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmSet {
    pub classes: Vec<Hmm>,
}

impl HmmSet {
    pub fn train(sequences: &[Matrix], labels: &[usize], num_classes: usize, params: &HmmParams, seed: u64) -> Result<Self> {
        check_labels(sequences.len(), labels, num_classes)?;
        if params.s == 0 || params.m == 0 {
            return Err(Error::Param("HMM needs S >= 1 and M >= 1".into()));
        }
        let classes = (0..num_classes)
            .into_par_iter()
            .map(|c| {
                let seqs: Vec<&Matrix> = sequences.iter().zip(labels).filter(|(_, &l)| l == c).map(|(s, _)| s).collect();
                let min_len = seqs.iter().map(|q| q.rows()).min().ok_or_else(|| {
                    Error::Data(format!("class {c} has no training sequences"))
                })?;
                let s = if min_len < params.s {
                    log::warn!("class {c}: shortest sequence has {min_len} frames, using {min_len} states instead of {}", params.s);
                    min_len
                } else {
                    params.s
                };
                let init = Hmm::init_uniform(&seqs, s, params.m, params.cov, seed.wrapping_add(c as u64))?;
                Ok(Hmm::fit(&seqs, init, params.max_iters, params.tolerance)?.hmm)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HmmSet { classes })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn loglik(&self, seq: &Matrix) -> Result<Vec<f64>> {
        self.classes.iter().map(|h| h.loglik(seq)).collect()
    }
}
