use super::FeatureSequence;
use crate::dataset::AudioClip;
use crate::dsp::{FrameSequence, WindowKind};
use crate::error::{Error, Result};

fn rms(frame: &[f64]) -> f64 {
    (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Sign changes between consecutive samples; zero counts as positive.
fn zero_crossings(frame: &[f64]) -> usize {
    frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count()
}

/// Per-frame RMS energy and zero-crossing count over rectangular frames.
/// The clip duration travels in [`FeatureSequence::duration`].
pub fn time_features(frames: &FrameSequence, clip: &AudioClip) -> Result<FeatureSequence> {
    if frames.window != WindowKind::Rectangular {
        return Err(Error::Param("time features need rectangular frames".into()));
    }
    let rows = frames.frames.iter_rows();
    let (energy, zcr): (Vec<f64>, Vec<f64>) = rows
        .map(|f| (rms(f), zero_crossings(f) as f64))
        .unzip();
    Ok(FeatureSequence::from_columns(
        vec![("energy", energy), ("zcr", zcr)],
        clip.duration(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{frame_signal, FrameSpec};

    fn run(samples: Vec<f64>) -> FeatureSequence {
        let clip = AudioClip::new(samples, 48000, 0, "x").unwrap();
        let fs = frame_signal(&clip.samples, 48000, FrameSpec::default(), WindowKind::Rectangular).unwrap();
        time_features(&fs, &clip).unwrap()
    }

    #[test]
    fn constant_frame_energy() {
        let f = run(vec![0.5; 1440]);
        assert_eq!(f.values[(0, 0)], 0.5);
        assert_eq!(f.values[(0, 1)], 0.0);
    }

    #[test]
    fn alternating_frame_crosses_everywhere() {
        let f = run((0..1440).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect());
        assert_eq!(f.values[(0, 1)], 1439.0);
        assert_eq!(f.values[(0, 0)], 1.0);
    }

    #[test]
    fn duration_in_seconds() {
        assert_eq!(run(vec![0.0; 24000]).duration, 0.5);
    }

    #[test]
    fn hamming_frames_rejected() {
        let clip = AudioClip::new(vec![0.0; 2000], 48000, 0, "x").unwrap();
        let fs = frame_signal(&clip.samples, 48000, FrameSpec::default(), WindowKind::Hamming).unwrap();
        assert!(time_features(&fs, &clip).is_err());
    }
}
