use super::{argmax_lowest, check_dim, check_labels};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// k-NN keeps the whole training set.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnStore {
    pub k: usize,
    pub vectors: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnVotes {
    pub class: usize,
    pub votes: Vec<usize>,
}

impl KnnStore {
    pub fn train(vectors: &Matrix, labels: &[usize], num_classes: usize, k: usize) -> Result<Self> {
        check_labels(vectors.rows(), labels, num_classes)?;
        if k == 0 || k > vectors.rows() {
            return Err(Error::Param(format!("k={k} must be in 1..={}", vectors.rows())));
        }
        Ok(KnnStore {
            k,
            vectors: vectors.clone(),
            labels: labels.to_vec(),
            num_classes,
        })
    }

    /// Euclidean k-NN vote. Among classes tied on votes, the one owning the
    /// nearest neighbour wins.
    pub fn predict(&self, x: &[f64]) -> Result<KnnVotes> {
        check_dim(self.vectors.cols(), x.len())?;
        let mut order: Vec<(f64, usize)> = self
            .vectors
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, x), i))
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < order.len() {
            order.select_nth_unstable_by(self.k - 1, by_distance);
            order.truncate(self.k);
        }
        order.sort_by(by_distance);
        let mut votes = vec![0usize; self.num_classes];
        for &(_, i) in &order {
            votes[self.labels[i]] += 1;
        }
        let top = *votes.iter().max().unwrap();
        let class = order
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|&c| votes[c] == top)
            .unwrap_or_else(|| argmax_lowest(&votes.iter().map(|&v| v as f64).collect::<Vec<_>>()));
        Ok(KnnVotes { class, votes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(points: &[[f64; 2]], labels: &[usize], k: usize) -> KnnStore {
        KnnStore::train(&Matrix::from_rows(points).unwrap(), labels, 2, k).unwrap()
    }

    #[test]
    fn exact_match_with_k1() {
        let s = store(&[[0.0, 0.0], [5.0, 5.0]], &[0, 1], 1);
        assert_eq!(s.predict(&[5.0, 5.0]).unwrap().class, 1);
    }

    #[test]
    fn majority_of_three() {
        let s = store(&[[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [9.0, 9.0]], &[0, 0, 1, 1], 3);
        let v = s.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(v.class, 0);
        assert_eq!(v.votes, vec![2, 1]);
    }

    #[test]
    fn vote_tie_goes_to_nearest() {
        let s = store(&[[0.0, 0.0], [1.0, 0.0]], &[1, 0], 2);
        assert_eq!(s.predict(&[0.2, 0.0]).unwrap().class, 1);
        assert_eq!(s.predict(&[0.8, 0.0]).unwrap().class, 0);
    }

    #[test]
    fn rejects_bad_k_and_dims() {
        let x = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(KnnStore::train(&x, &[0], 2, 2).is_err());
        assert!(KnnStore::train(&x, &[0], 2, 0).is_err());
        let s = KnnStore::train(&x, &[0], 2, 1).unwrap();
        assert!(s.predict(&[1.0]).is_err());
    }
}
