use super::{FeatureConfig, FeatureSequence};
use crate::dsp::Spectrogram;

/// Shape statistics of one magnitude frame, in column order of
/// [`SHAPE_NAMES`]. An all-zero frame yields all zeros.
fn shape_of(s: &[f64], rolloff_fraction: f64, log_floor: f64) -> [f64; 8] {
    let bins = s.len();
    let total: f64 = s.iter().sum();
    if total <= 0.0 {
        return [0.0; 8];
    }
    let kf = |k: usize| k as f64;

    let energy: f64 = s.iter().map(|v| v * v).sum();
    let target = rolloff_fraction * energy;
    let mut cum = 0.0;
    let mut rolloff = bins - 1;
    for (k, v) in s.iter().enumerate() {
        cum += v * v;
        if cum >= target {
            rolloff = k;
            break;
        }
    }

    let centroid = s.iter().enumerate().map(|(k, v)| kf(k) * v).sum::<f64>() / total;
    let central = |p: i32| {
        s.iter()
            .enumerate()
            .map(|(k, v)| (kf(k) - centroid).powi(p) * v)
            .sum::<f64>()
            / total
    };
    let spread = central(2).max(0.0).sqrt();
    let (skewness, kurtosis) = if spread > log_floor {
        (central(3) / spread.powi(3), central(4) / spread.powi(4))
    } else {
        (0.0, 0.0)
    };

    let n = bins as f64;
    let sum_k: f64 = (0..bins).map(kf).sum();
    let sum_kk: f64 = (0..bins).map(|k| kf(k) * kf(k)).sum();
    let sum_ks: f64 = s.iter().enumerate().map(|(k, v)| kf(k) * v).sum();
    let slope = (n * sum_ks - sum_k * total) / (n * sum_kk - sum_k * sum_k);

    let tail: f64 = s[1..].iter().sum();
    let decrease = if tail > 0.0 {
        s[1..]
            .iter()
            .enumerate()
            .map(|(i, v)| (v - s[0]) / (i + 1) as f64)
            .sum::<f64>()
            / tail
    } else {
        0.0
    };

    let log_mean = s.iter().map(|v| v.max(log_floor).ln()).sum::<f64>() / n;
    let flatness = log_mean.exp() / (total / n);

    [
        rolloff as f64,
        centroid,
        spread,
        skewness,
        kurtosis,
        slope,
        decrease,
        flatness,
    ]
}

pub(crate) const SHAPE_NAMES: [&str; 8] = [
    "rolloff", "centroid", "spread", "skewness", "kurtosis", "slope", "decrease", "flatness",
];

/// Roll-off bin, spectral moments, slope, decrease and flatness per frame.
pub fn spectral_shape(spec: &Spectrogram, cfg: &FeatureConfig) -> FeatureSequence {
    let mut columns: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(spec.frames())).collect();
    for row in spec.mags.iter_rows() {
        let stats = shape_of(row, cfg.rolloff_fraction, cfg.log_floor);
        for (c, v) in columns.iter_mut().zip(stats) {
            c.push(v);
        }
    }
    FeatureSequence::from_columns(SHAPE_NAMES.iter().copied().zip(columns).collect(), 0.0)
}

/// Spectral flux and correlation between consecutive frames. The first
/// frame gets flux 0 and correlation 1; a pair involving a silent frame
/// gets 0 for both.
pub fn spectral_dynamics(spec: &Spectrogram) -> FeatureSequence {
    let frames = spec.frames();
    let norms: Vec<f64> = spec
        .mags
        .iter_rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut flux = vec![0.0; frames];
    let mut corr = vec![0.0; frames];
    if frames > 0 {
        corr[0] = 1.0;
    }
    for t in 1..frames {
        let denom = norms[t] * norms[t - 1];
        if denom > 0.0 {
            let (cur, prev) = (spec.mags.row(t), spec.mags.row(t - 1));
            let diff: f64 = cur.iter().zip(prev).map(|(a, b)| (a - b) * (a - b)).sum();
            let prod: f64 = cur.iter().zip(prev).map(|(a, b)| a * b).sum();
            flux[t] = diff / denom;
            corr[t] = prod / denom;
        }
    }
    FeatureSequence::from_columns(vec![("flux", flux), ("correlation", corr)], 0.0)
}
