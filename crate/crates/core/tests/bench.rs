use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use soundbench::bench::synth::synth_dataset;
use soundbench::bench::{
    cross_validate, extract_all, measure_times, median, run_bench, BenchCell, BenchConfig, BenchOptions, FittedCell,
};
use soundbench::dataset::{stratify, AudioClip, Dataset};
use soundbench::features::{FeatureConfig, FeatureExtractor};
use soundbench::Matrix;

fn extractor() -> FeatureExtractor {
    FeatureExtractor::new(FeatureConfig::default()).unwrap()
}

fn features(data: &Dataset, cell: &BenchCell) -> Vec<Matrix> {
    extract_all(&extractor(), data, cell.feature).unwrap()
}

fn tones(per_class: usize) -> Dataset {
    let freqs = [300.0, 1200.0, 3500.0, 8000.0];
    let mut clips = Vec::new();
    for (c, f) in freqs.iter().enumerate() {
        for i in 0..per_class {
            let n = 9600 + 480 * i;
            let phase = i as f64 * 0.37;
            let samples = (0..n)
                .map(|t| 0.5 * (2.0 * std::f64::consts::PI * f * t as f64 / 48000.0 + phase).sin())
                .collect();
            clips.push(AudioClip::new(samples, 48000, c, format!("tone{c}_{i}")).unwrap());
        }
    }
    Dataset { clips, class_names: freqs.iter().map(|f| format!("{f}Hz")).collect() }
}

#[test]
fn separable_tones_are_classified_perfectly() {
    let data = tones(10);
    let cell: BenchCell = "MFCC+Interp/knn".parse().unwrap();
    let r = cross_validate(&features(&data, &cell), &data.labels(), 4, &cell, 5, 4, 1).unwrap();
    assert_eq!(r.accuracy_mean, 100.0);
    assert_eq!(r.accuracy_std, 0.0);
}

#[test]
fn confusion_rows_count_each_clip_once_per_run() {
    let data = synth_dataset(7, 3).unwrap();
    for cell in ["MFCC/knn", "MFCC+BoW/svm", "MFCC/gmmT"] {
        let mut cell: BenchCell = cell.parse().unwrap();
        cell.hyper.bow_k = 8;
        let r = cross_validate(&features(&data, &cell), &data.labels(), 4, &cell, 3, 3, 5).unwrap();
        for row in &r.confusion {
            assert_eq!(row.iter().sum::<u64>(), 7 * 3, "{}", cell);
        }
        assert_eq!(r.run_accuracies.len(), 3);
        for sizes in &r.fold_sizes {
            assert_eq!(sizes.iter().sum::<usize>(), 28);
        }
    }
}

#[test]
fn folds_are_balanced_and_stratified() {
    // one clip per class and two folds: classes alternate between folds
    let labels: Vec<usize> = (0..6).collect();
    let f = stratify(&labels, 2, 9).unwrap();
    assert_eq!(f.iter().filter(|&&x| x == 0).count(), 3);
    assert_eq!(f.iter().filter(|&&x| x == 1).count(), 3);

    let labels: Vec<usize> = (0..97).map(|i| i % 5).collect();
    for seed in 0..5 {
        let f = stratify(&labels, 10, seed).unwrap();
        let sizes: Vec<usize> = (0..10).map(|k| f.iter().filter(|&&x| x == k).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..5 {
            let per_fold: Vec<usize> = (0..10).map(|k| (0..97).filter(|&i| labels[i] == c && f[i] == k).count()).collect();
            assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
        }
    }
    assert!(stratify(&labels, 1, 0).is_err());
}

#[test]
fn shuffled_labels_score_near_chance() {
    let data = synth_dataset(30, 11).unwrap();
    let cell: BenchCell = "MFCC/knn".parse().unwrap();
    let mut labels = data.labels();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
    let r = cross_validate(&features(&data, &cell), &labels, 4, &cell, 10, 5, 2).unwrap();
    let n = labels.len() as f64;
    let sigma = 100.0 * (0.25 * 0.75 / n).sqrt();
    assert!((r.accuracy_mean - 25.0).abs() <= 3.0 * sigma, "{} vs chance 25 +- {}", r.accuracy_mean, 3.0 * sigma);
}

#[test]
fn test_clips_do_not_reach_the_fitted_state() {
    let data = synth_dataset(8, 6).unwrap();
    let labels = data.labels();
    let assign = stratify(&labels, 4, 0).unwrap();
    let train: Vec<usize> = (0..labels.len()).filter(|&i| assign[i] != 0).collect();
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    for cell in ["MFCC+Interp/svm", "MFCC+BoW/knn", "MFCC/hmm"] {
        let mut cell: BenchCell = cell.parse().unwrap();
        cell.hyper.bow_k = 6;
        let clean = features(&data, &cell);
        // scramble every held-out clip: longer, shifted, scaled
        let mut dirty = clean.clone();
        for i in (0..labels.len()).filter(|&i| assign[i] == 0) {
            let m = &clean[i];
            let data = (0..2 * m.rows() * m.cols()).map(|k| 50.0 + k as f64).collect();
            dirty[i] = Matrix::from_vec(2 * m.rows(), m.cols(), data).unwrap();
        }
        let fit = |feats: &[Matrix]| {
            let seqs: Vec<&Matrix> = train.iter().map(|&i| &feats[i]).collect();
            let fitted = FittedCell::fit(&cell, &seqs, &y, 4, 3).unwrap();
            (fitted.post, fitted.model.encode())
        };
        assert_eq!(fit(&clean), fit(&dirty), "{cell}");
    }
}

#[test]
fn bench_report_is_reproducible_and_picks_the_best_cell() {
    let data = synth_dataset(6, 8).unwrap();
    let cfg = BenchConfig::parse("cell = MFCC/knn, MFCC+Interp/qnn\nknn.k = 1, 5\nqnn.k = 4\n").unwrap();
    let opts = BenchOptions { folds: 3, runs: 2, seed: 4, timings: false };
    let a = run_bench(&data, &cfg, &opts).unwrap();
    let b = run_bench(&data, &cfg, &opts).unwrap();
    assert_eq!(a.results_json(), b.results_json());
    assert_eq!(a.results.len(), 3);
    assert!(a.timings.is_empty());
    assert_eq!(a.best.len(), 2);
    let knn = &a.best[0];
    let top = a.results.iter().filter(|r| r.cell == knn.cell).map(|r| r.accuracy_mean).fold(f64::MIN, f64::max);
    assert_eq!(knn.accuracy_mean, top);
    assert!(a.find("MFCC/knn").is_some());
}

#[test]
fn different_seeds_give_different_splits() {
    let data = synth_dataset(5, 2).unwrap();
    let labels = data.labels();
    assert_ne!(stratify(&labels, 5, 0).unwrap(), stratify(&labels, 5, 1).unwrap());
}

#[test]
fn combined_features_cost_at_least_their_parts() {
    let data = synth_dataset(10, 12).unwrap();
    let ex = extractor();
    let time = |cell: &str| measure_times(&cell.parse().unwrap(), &ex, &data.clips, 4, 5, 0).unwrap();
    let mut combined = Vec::new();
    let mut mfcc = Vec::new();
    let mut ttff = Vec::new();
    for _ in 0..3 {
        combined.push(time("MFCC+TTFF/knn").feature_ms);
        mfcc.push(time("MFCC/knn").feature_ms);
        ttff.push(time("TTFF/knn").feature_ms);
    }
    let (c, m, t) = (median(&mut combined), median(&mut mfcc), median(&mut ttff));
    // 10% allowance for timer noise on a shared machine
    assert!(c >= 0.9 * m.max(t), "MFCC+TTFF {c} ms, MFCC {m} ms, TTFF {t} ms");
    assert!(m > 0.0 && t > 0.0);
}

#[test]
fn timing_fields_match_the_cell() {
    let data = synth_dataset(6, 1).unwrap();
    let ex = extractor();
    let mut bow: BenchCell = "MFCC+BoW/knn".parse().unwrap();
    bow.hyper.bow_k = 4;
    let t = measure_times(&bow, &ex, &data.clips, 4, 3, 0).unwrap();
    assert!(t.kmeans_ms > 0.0 && t.histo_ms > 0.0 && t.interp_ms == 0.0);
    let t = measure_times(&"MFCC+Interp/knn".parse().unwrap(), &ex, &data.clips, 4, 3, 0).unwrap();
    assert!(t.kmeans_ms == 0.0 && t.interp_ms > 0.0 && t.recognition_ms > 0.0 && t.train_s > 0.0);
}
