use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// K centroids learned by Lloyd's algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub centroids: Matrix,
    /// Sum of squared distances of the training points to their centroid.
    pub inertia: f64,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    /// Index of the nearest centroid and its squared distance; ties go to
    /// the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.iter_rows().enumerate() {
            let d = squared_distance(x, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }
}

/// A trained codebook plus the inertia after every assignment step.
#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub codebook: Codebook,
    pub inertia_history: Vec<f64>,
}

const PARALLEL_MIN_POINTS: usize = 4096;

fn assign(points: &Matrix, cb: &Codebook) -> (Vec<usize>, Vec<f64>) {
    let nearest = |i: usize| cb.nearest(points.row(i));
    let pairs: Vec<(usize, f64)> = if points.rows() >= PARALLEL_MIN_POINTS {
        (0..points.rows()).into_par_iter().map(nearest).collect()
    } else {
        (0..points.rows()).map(nearest).collect()
    };
    pairs.into_iter().unzip()
}

/// Recomputes centroids as cluster means; empty clusters are moved onto the
/// point farthest from its own (updated) centroid.
fn update(points: &Matrix, labels: &[usize], cb: &mut Codebook) {
    let (k, dim) = (cb.k(), cb.dim());
    let mut sums = Matrix::zeros(k, dim);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums.row_mut(l).iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            let n = counts[j] as f64;
            for (c, s) in cb.centroids.row_mut(j).iter_mut().zip(sums.row(j)) {
                *c = s / n;
            }
        }
    }
    if counts.iter().all(|&c| c > 0) {
        return;
    }
    let mut dist: Vec<f64> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_distance(points.row(i), cb.centroids.row(l)))
        .collect();
    for j in (0..k).filter(|&j| counts[j] == 0) {
        let far = dist
            .iter()
            .enumerate()
            .fold(0, |best, (i, &d)| if d > dist[best] { i } else { best });
        cb.centroids.row_mut(j).copy_from_slice(points.row(far));
        dist[far] = -1.0;
    }
}

/// Lloyd's K-means seeded with `k` distinct training points.
///
/// Stops when assignments no longer change or after `max_iters` updates.
pub fn kmeans_fit(points: &Matrix, k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::Param("K-means needs K >= 1".into()));
    }
    if points.rows() < k {
        return Err(Error::Data(format!(
            "K-means with K={k} needs at least {k} points, got {}",
            points.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, points.rows(), k);
    let rows: Vec<&[f64]> = picks.iter().map(|i| points.row(i)).collect();
    let mut cb = Codebook {
        centroids: Matrix::from_rows(&rows)?,
        inertia: 0.0,
    };
    let (mut labels, dist) = assign(points, &cb);
    let mut history = vec![dist.iter().sum::<f64>()];
    for _ in 0..max_iters {
        update(points, &labels, &mut cb);
        let (next, dist) = assign(points, &cb);
        history.push(dist.iter().sum());
        if next == labels {
            break;
        }
        labels = next;
    }
    cb.inertia = *history.last().unwrap();
    Ok(KMeansFit {
        codebook: cb,
        inertia_history: history,
    })
}

pub fn kmeans_train(points: &Matrix, k: usize, seed: u64, max_iters: usize) -> Result<Codebook> {
    kmeans_fit(points, k, seed, max_iters).map(|f| f.codebook)
}
