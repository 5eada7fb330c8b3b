use crate::dsp::WaveletDecomposition;

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `[mean(a_M), std(a_M), mean(d_1), std(d_1), .., mean(d_M), std(d_M)]`
/// with population standard deviations.
pub fn wavelet_features(wd: &WaveletDecomposition) -> Vec<f64> {
    std::iter::once(&wd.approx)
        .chain(&wd.details)
        .flat_map(|c| {
            let (m, s) = mean_std(c);
            [m, s]
        })
        .collect()
}

pub fn wavelet_feature_names(levels: usize) -> Vec<String> {
    let mut names = vec![format!("a{levels}_mean"), format!("a{levels}_std")];
    for i in 1..=levels {
        names.push(format!("d{i}_mean"));
        names.push(format!("d{i}_std"));
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::dwt;

    #[test]
    fn eight_levels_give_eighteen_values() {
        let wd = dwt(&vec![0.0; 4800], 8).unwrap();
        let v = wavelet_features(&wd);
        assert_eq!(v.len(), 18);
        assert!(v.iter().all(|&x| x == 0.0));
        assert_eq!(wavelet_feature_names(8).len(), 18);
    }

    #[test]
    fn constant_coefficients_have_zero_std() {
        let wd = WaveletDecomposition {
            approx: vec![2.0; 5],
            details: vec![vec![1.0, 3.0], vec![-4.0; 3]],
            input_lengths: vec![8, 4],
        };
        assert_eq!(wavelet_features(&wd), vec![2.0, 0.0, 2.0, 1.0, -4.0, 0.0]);
    }
}
