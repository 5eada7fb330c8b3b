use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soundbench::classifiers::{
    argmax_lowest, CovKind, KernelKind, GmmParams, GmmSet, HmmParams, HmmSet, KernelSpec, KnnStore, QnnModel, QnnParams, Sample,
    SvmModel, SvmParams, TrainedModel,
};
use soundbench::Matrix;

fn blobs(rng: &mut ChaCha8Rng, classes: usize, per_class: usize, dim: usize) -> (Matrix, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        for _ in 0..per_class {
            rows.push((0..dim).map(|j| if j % classes == c { 4.0 } else { 0.0 } + rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
            labels.push(c);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

fn sequences(rng: &mut ChaCha8Rng, classes: usize, per_class: usize, dim: usize) -> (Vec<Matrix>, Vec<usize>) {
    let mut seqs = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        for _ in 0..per_class {
            let t = rng.gen_range(8..20);
            let data = (0..t * dim).map(|i| (c as f64 + 1.0) * ((i / dim) as f64 / t as f64) + rng.gen_range(-0.3..0.3)).collect();
            seqs.push(Matrix::from_vec(t, dim, data).unwrap());
            labels.push(c);
        }
    }
    (seqs, labels)
}

fn assert_round_trip(model: &TrainedModel, probes: &[Sample]) {
    let bytes = model.encode();
    assert_eq!(bytes.len(), model.memory_bytes());
    let back = TrainedModel::decode(&bytes).unwrap();
    assert_eq!(back.encode(), bytes, "{} re-encodes differently", model.name());
    for p in probes {
        let (a, b) = (model.scores(p).unwrap(), back.scores(p).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{} scores drift", model.name());
    }
}

#[test]
fn every_model_kind_survives_the_codec() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (x, y) = blobs(&mut rng, 3, 15, 6);
    let probes: Vec<Sample> = (0..10).map(|i| Sample::Vector(x.row(i * 4).to_vec())).collect();
    let knn = TrainedModel::Knn(KnnStore::train(&x, &y, 3, 3).unwrap());
    let qnn = TrainedModel::Qnn(QnnModel::train(&x, &y, 3, &QnnParams { p: 3, k: 8, ..QnnParams::default() }, 2).unwrap());
    let svm = TrainedModel::Svm(SvmModel::train(&x, &y, 3, &SvmParams::default()).unwrap());
    let poly = SvmParams { kernel: KernelSpec { kind: KernelKind::Polynomial, gamma: 0.5, coef0: 1.0, degree: 3 }, gamma: Some(0.5), standardize: false, ..SvmParams::default() };
    let poly = TrainedModel::Svm(SvmModel::train(&x, &y, 3, &poly).unwrap());
    for m in [&knn, &qnn, &svm, &poly] {
        assert_round_trip(m, &probes);
    }

    let (seqs, labels) = sequences(&mut rng, 3, 6, 4);
    let probes: Vec<Sample> = seqs.iter().step_by(3).cloned().map(Sample::Sequence).collect();
    for cov in [CovKind::Diagonal, CovKind::Full] {
        let gmm = GmmSet::train(&seqs, &labels, 3, &GmmParams { m: 2, cov, ..GmmParams::default() }, 1).unwrap();
        assert_round_trip(&TrainedModel::Gmm(gmm), &probes);
        let hmm = HmmSet::train(&seqs, &labels, 3, &HmmParams { s: 3, m: 2, cov, ..HmmParams::default() }, 1).unwrap();
        assert_round_trip(&TrainedModel::Hmm(hmm), &probes);
    }
}

#[test]
fn diagonal_gmm_size_follows_its_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (seqs, labels) = sequences(&mut rng, 4, 3, 5);
    for m in 1..=3 {
        let gmm = GmmSet::train(&seqs, &labels, 4, &GmmParams { m, ..GmmParams::default() }, 0).unwrap();
        assert_eq!(TrainedModel::Gmm(gmm).memory_bytes(), 23 + 4 * m * (2 * 5 + 1) * 8);
    }
}

#[test]
fn corrupted_models_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (x, y) = blobs(&mut rng, 2, 5, 3);
    let bytes = TrainedModel::Knn(KnnStore::train(&x, &y, 2, 1).unwrap()).encode();
    assert!(TrainedModel::decode(&bytes[..bytes.len() - 1]).is_err());
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(TrainedModel::decode(&longer).is_err());
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(TrainedModel::decode(&magic).is_err());
}

#[test]
fn mismatched_sample_kinds_are_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (x, y) = blobs(&mut rng, 2, 5, 3);
    let knn = TrainedModel::Knn(KnnStore::train(&x, &y, 2, 1).unwrap());
    assert!(knn.predict(&Sample::Sequence(x.clone())).is_err());
    assert!(knn.predict(&Sample::Vector(vec![0.0; 4])).is_err());
    let (seqs, labels) = sequences(&mut rng, 2, 3, 3);
    let hmm = TrainedModel::Hmm(HmmSet::train(&seqs, &labels, 2, &HmmParams { s: 2, ..HmmParams::default() }, 0).unwrap());
    assert!(hmm.predict(&Sample::Vector(vec![0.0; 3])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn argmax_ignores_positive_affine_maps(
        scores in prop::collection::vec(-1e3f64..1e3, 1..12),
        scale in 1e-3f64..1e3,
        shift in -1e3f64..1e3,
    ) {
        let mapped: Vec<f64> = scores.iter().map(|s| s * scale + shift).collect();
        let a = argmax_lowest(&scores);
        let b = argmax_lowest(&mapped);
        // rounding may merge near-ties, never reorder them
        prop_assert!(a == b || (scores[a] - scores[b]).abs() <= 1e-9 * scores[a].abs().max(1.0));
    }

    #[test]
    fn argmax_breaks_ties_to_the_lowest_index(n in 1usize..10, at in 0usize..10) {
        let mut scores = vec![0.0; n];
        let at = at % n;
        scores[at] = 1.0;
        scores[n - 1] = 1.0;
        prop_assert_eq!(argmax_lowest(&scores), at.min(n - 1));
    }

    #[test]
    fn one_nn_recalls_its_training_set(seed in 0u64..1000, n in 2usize..40, dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_vec(n, dim, (0..n * dim).map(|_| rng.gen_range(-10.0..10.0)).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let knn = KnnStore::train(&x, &labels, 3, 1).unwrap();
        for i in 0..n {
            prop_assert_eq!(knn.predict(x.row(i)).unwrap().class, labels[i]);
        }
    }

    #[test]
    fn exhaustive_qnn_matches_one_nn(seed in 0u64..1000, n in 2usize..30, dim in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_vec(n, dim, (0..n * dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let knn = KnnStore::train(&x, &labels, 4, 1).unwrap();
        let qnn = QnnModel::train(&x, &labels, 4, &QnnParams { p: 1, k: n, ..QnnParams::default() }, seed).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-6.0..6.0)).collect();
            prop_assert_eq!(knn.predict(&q).unwrap().class, qnn.predict(&q).unwrap());
        }
    }

    #[test]
    fn knn_votes_sum_to_k(seed in 0u64..1000, k in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = blobs(&mut rng, 3, 4, 3);
        let knn = KnnStore::train(&x, &y, 3, k).unwrap();
        let votes = knn.predict(&[0.5, 0.5, 0.5]).unwrap();
        prop_assert_eq!(votes.votes.iter().sum::<usize>(), k.min(12));
        prop_assert!(votes.votes[votes.class] == *votes.votes.iter().max().unwrap());
    }

    #[test]
    fn svm_training_is_deterministic(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = blobs(&mut rng, 3, 6, 3);
        let svm = SvmModel::train(&x, &y, 3, &SvmParams::default()).unwrap();
        // training twice gives the same machine
        let again = SvmModel::train(&x, &y, 3, &SvmParams::default()).unwrap();
        prop_assert_eq!(&svm, &again);
        let hits = (0..x.rows()).filter(|&i| svm.predict(x.row(i)).unwrap().class == y[i]).count();
        prop_assert!(hits * 10 >= x.rows() * 9);
    }
}
