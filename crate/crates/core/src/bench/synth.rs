//! A small synthetic corpus of four sound classes for tests and demos.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{write_wav, AudioClip, Dataset};
use crate::error::{Error, Result};

pub const SYNTH_RATE: u32 = 48000;
pub const SYNTH_CLASSES: [&str; 4] = ["tone", "noise", "chirp", "click"];

fn tone(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let f0 = 300.0 * 10f64.powf(rng.gen_range(0.0..1.0));
    let tau = rng.gen_range(0.1..0.6);
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let env = (-t / tau).exp() * (1.0 - (-t / 0.005).exp());
            env * ((2.0 * PI * f0 * t).sin() + 0.3 * (4.0 * PI * f0 * t).sin())
        })
        .collect()
}

fn lowpass_noise(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let cutoff = rng.gen_range(500.0..3000.0);
    let a = (-2.0 * PI * cutoff / rate).exp();
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            y = a * y + (1.0 - a) * rng.gen_range(-1.0..1.0);
            4.0 * y
        })
        .collect()
}

fn chirp(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let f_start = rng.gen_range(300.0..1000.0);
    let f_end = rng.gen_range(2500.0..6000.0);
    let duration = n as f64 / rate;
    let k = (f_end - f_start) / duration;
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            (2.0 * PI * (f_start * t + 0.5 * k * t * t)).sin()
        })
        .collect()
}

fn clicks(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let period = (rate / rng.gen_range(15.0..40.0)) as usize;
    let resonance = rng.gen_range(1500.0..5000.0);
    let decay = rng.gen_range(0.001..0.004);
    let offset = rng.gen_range(0..period);
    (0..n)
        .map(|i| {
            let since = (i + period - offset % period) % period;
            let t = since as f64 / rate;
            (-t / decay).exp() * (2.0 * PI * resonance * t).sin()
        })
        .collect()
}

/// One clip of class `class` (index into [`SYNTH_CLASSES`]): random gain,
/// random length in 0.1..1.0 s and a faint white background.
pub fn synth_clip(class: usize, rng: &mut ChaCha8Rng, clip_id: impl Into<String>) -> Result<AudioClip> {
    let rate = f64::from(SYNTH_RATE);
    let n = (rng.gen_range(0.1..1.0) * rate) as usize;
    let raw = match class {
        0 => tone(rng, n, rate),
        1 => lowpass_noise(rng, n, rate),
        2 => chirp(rng, n, rate),
        3 => clicks(rng, n, rate),
        _ => return Err(Error::Param(format!("synthetic class {class} does not exist"))),
    };
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let gain = rng.gen_range(0.05..0.8) / peak;
    let samples = raw
        .into_iter()
        .map(|v| (gain * v + 0.002 * rng.gen_range(-1.0..1.0)).clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(samples, SYNTH_RATE, class, clip_id)
}

/// `per_class` clips of each class, in class-major order.
pub fn synth_dataset(per_class: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clips = Vec::with_capacity(per_class * SYNTH_CLASSES.len());
    for (c, name) in SYNTH_CLASSES.iter().enumerate() {
        for i in 0..per_class {
            clips.push(synth_clip(c, &mut rng, format!("{name}_{i:03}"))?);
        }
    }
    Ok(Dataset {
        clips,
        class_names: SYNTH_CLASSES.iter().map(|s| s.to_string()).collect(),
    })
}

/// Writes the synthetic dataset as WAV files plus `manifest.csv` under
/// `dir` and returns the manifest path.
pub fn write_synth(dir: impl AsRef<Path>, per_class: usize, seed: u64) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data = synth_dataset(per_class, seed)?;
    let manifest = dir.join("manifest.csv");
    let mut out = std::fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut text = String::from("path,class,scenario\n");
    for clip in &data.clips {
        let name = format!("{}.wav", clip.clip_id);
        write_wav(dir.join(&name), &clip.samples, clip.sample_rate)?;
        text.push_str(&format!("{name},{},synthetic\n", data.class_names[clip.label]));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}
