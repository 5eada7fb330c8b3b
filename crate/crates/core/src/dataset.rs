//! Clip loading, dataset manifests, SNR measurement and stratified folds.
//!
//! Class ids are zero-based indices into [`DatasetManifest::class_names`],
//! assigned in order of first appearance in the manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Divisor mapping 16-bit PCM onto `[-1, 1)`.
const PCM_SCALE: f64 = 32768.0;

/// A mono, segmented sound with its class label.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub label: usize,
    pub clip_id: String,
}

impl AudioClip {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: u32,
        label: usize,
        clip_id: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("audio clip has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Param("sample rate must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !(s.abs() <= 1.0)) {
            return Err(Error::Data(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
            label,
            clip_id: clip_id.into(),
        })
    }

    /// Length in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Mean squared sample value.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Parses a RIFF/WAVE byte buffer holding mono 16-bit PCM.
pub fn parse_wav(bytes: &[u8]) -> Result<(Vec<f64>, u32)> {
    if bytes.len() < 12 {
        return Err(Error::Parse("truncated RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Parse("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(Error::Parse("truncated fmt chunk".into()));
                }
                let audio_format = read_u16(bytes, body);
                let channels = read_u16(bytes, body + 2);
                let rate = read_u32(bytes, body + 4);
                let bits = read_u16(bytes, body + 14);
                if audio_format != 1 {
                    return Err(Error::Format(format!("audio_format={audio_format} unsupported")));
                }
                if channels != 1 {
                    return Err(Error::Format(format!("channels={channels} unsupported")));
                }
                if bits != 16 {
                    return Err(Error::Format(format!("bits_per_sample={bits} unsupported")));
                }
                if rate == 0 {
                    return Err(Error::Format("sample_rate=0 unsupported".into()));
                }
                format = Some((audio_format, channels, rate, bits));
            }
            b"data" => {
                let (_, _, rate, _) =
                    format.ok_or_else(|| Error::Parse("data chunk before fmt chunk".into()))?;
                if body + size > bytes.len() || size % 2 != 0 {
                    return Err(Error::Parse(format!(
                        "data chunk declares {size} bytes, {} available",
                        bytes.len().saturating_sub(body)
                    )));
                }
                let samples = bytes[body..body + size]
                    .chunks_exact(2)
                    .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])) / PCM_SCALE)
                    .collect();
                return Ok((samples, rate));
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Err(Error::Parse(if format.is_none() {
        "missing fmt chunk".into()
    } else {
        "missing data chunk".into()
    }))
}

/// Loads a mono 16-bit PCM WAV file. The label is left at 0.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (samples, rate) =
        parse_wav(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
    AudioClip::new(samples, rate, 0, path.to_string_lossy())
}

/// Encodes samples as mono 16-bit PCM WAV bytes.
pub fn encode_wav(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        let q = (s * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_wav(samples, sample_rate)).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub class_id: usize,
    pub scenario: String,
}

/// The list of clips of a dataset with their classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

#[derive(serde::Deserialize)]
struct ManifestRow {
    path: String,
    class: String,
    scenario: String,
}

impl DatasetManifest {
    /// Builds a manifest from `(path, class, scenario)` triples.
    pub fn from_rows<I, P>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, String, String)>,
        P: Into<PathBuf>,
    {
        let mut class_names: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (path, class, scenario) in rows {
            let path = path.into();
            if !seen.insert(path.clone()) {
                return Err(Error::Data(format!("duplicate clip path {}", path.display())));
            }
            let class_id = match class_names.iter().position(|c| *c == class) {
                Some(i) => i,
                None => {
                    class_names.push(class);
                    class_names.len() - 1
                }
            };
            entries.push(ManifestEntry {
                path,
                class_id,
                scenario,
            });
        }
        if class_names.len() < 2 {
            return Err(Error::Data(format!(
                "C >= 2 required, manifest has {} class(es)",
                class_names.len()
            )));
        }
        Ok(DatasetManifest {
            entries,
            class_names,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.class_id).collect()
    }

    pub fn clip_ids(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.path.to_string_lossy().into_owned())
            .collect()
    }
}

/// Reads a `path,class,scenario` CSV manifest. Relative paths are resolved
/// against the manifest's directory and must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "class", "scenario"] {
        return Err(Error::Parse(format!(
            "{}: header must be `path,class,scenario`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for (line, rec) in reader.deserialize::<ManifestRow>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{} row {}: {e}", path.display(), line + 2)))?;
        let clip_path = base.join(&rec.path);
        if !clip_path.is_file() {
            missing.push(clip_path.display().to_string());
        }
        rows.push((clip_path, rec.class, rec.scenario));
    }
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "manifest references missing files: {}",
            missing.join(", ")
        )));
    }
    DatasetManifest::from_rows(rows)
}

/// Clips plus class names, ready for benchmarking.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub clips: Vec<AudioClip>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.clips.iter().map(|c| c.label).collect()
    }

    /// Loads every clip of a manifest in parallel.
    pub fn load(manifest: &DatasetManifest) -> Result<Self> {
        let clips = manifest
            .entries
            .par_iter()
            .map(|e| {
                let mut clip = load_wav(&e.path)?;
                clip.label = e.class_id;
                Ok(clip)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            clips,
            class_names: manifest.class_names.clone(),
        })
    }
}

/// Signal-to-noise ratio of a clip against a noise-only reference, in dB.
///
/// Plain ratio of mean powers; the noise power is not subtracted from the
/// clip power.
pub fn compute_snr(clip: &AudioClip, noise: &AudioClip) -> Result<f64> {
    if clip.sample_rate != noise.sample_rate {
        return Err(Error::Param(format!(
            "noise reference sampled at {} Hz, clip at {} Hz",
            noise.sample_rate, clip.sample_rate
        )));
    }
    let noise_power = noise.power();
    if noise_power <= 0.0 {
        return Err(Error::Data("noise reference silent".into()));
    }
    Ok(10.0 * (clip.power() / noise_power).log10())
}

/// Fold membership for every clip of a manifest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of_clip: BTreeMap<String, usize>,
    pub k: usize,
    pub seed: u64,
}

/// Per-class shuffled round-robin fold indices for `labels`.
///
/// The round-robin pointer carries over from one class to the next so that
/// total fold sizes stay balanced as well.
pub fn stratify(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Param(format!("fold count k={k}, need k >= 2")));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

pub fn stratified_folds(manifest: &DatasetManifest, k: usize, seed: u64) -> Result<FoldAssignment> {
    let folds = stratify(&manifest.labels(), k, seed)?;
    Ok(FoldAssignment {
        fold_of_clip: manifest.clip_ids().into_iter().zip(folds).collect(),
        k,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wav_with_format(format: u16, channels: u16, bits: u16) -> Vec<u8> {
        let mut b = encode_wav(&[0.0; 4], 48000);
        b[20..22].copy_from_slice(&format.to_le_bytes());
        b[22..24].copy_from_slice(&channels.to_le_bytes());
        b[34..36].copy_from_slice(&bits.to_le_bytes());
        b
    }

    #[test]
    fn zero_file_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.wav");
        write_wav(&p, &vec![0.0; 24000], 48000).unwrap();
        let clip = load_wav(&p).unwrap();
        assert_eq!(clip.samples.len(), 24000);
        assert!(clip.samples.iter().all(|&s| s == 0.0));
        assert_eq!(clip.sample_rate, 48000);
    }

    #[test]
    fn quantization_extremes() {
        let mut bytes = encode_wav(&[0.0, 0.0], 48000);
        bytes[44..46].copy_from_slice(&(-32768i16).to_le_bytes());
        bytes[46..48].copy_from_slice(&32767i16.to_le_bytes());
        let (s, _) = parse_wav(&bytes).unwrap();
        assert_eq!(s[0], -1.0);
        assert_eq!(s[1], 32767.0 / 32768.0);
    }

    #[test]
    fn unsupported_encodings_name_the_field() {
        let err = parse_wav(&wav_with_format(1, 2, 16)).unwrap_err();
        assert!(matches!(&err, Error::Format(m) if m == "channels=2 unsupported"), "{err}");
        let err = parse_wav(&wav_with_format(3, 1, 16)).unwrap_err();
        assert!(err.to_string().contains("audio_format=3"));
        let err = parse_wav(&wav_with_format(1, 1, 24)).unwrap_err();
        assert!(err.to_string().contains("bits_per_sample=24"));
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let bytes = encode_wav(&[0.1; 100], 48000);
        let err = parse_wav(&bytes[..100]).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(matches!(parse_wav(&bytes[..10]).unwrap_err(), Error::Parse(_)));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = encode_wav(&[0.5, -0.25], 16000);
        let mut bytes = plain[..36].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]);
        bytes.extend_from_slice(&plain[36..]);
        let (s, rate) = parse_wav(&bytes).unwrap();
        assert_eq!(rate, 16000);
        assert_eq!(s, vec![0.5, -0.25]);
    }

    fn touch_manifest(dir: &Path, rows: &[(&str, &str)]) -> PathBuf {
        let mut text = String::from("path,class,scenario\n");
        for (p, c) in rows {
            fs::write(dir.join(p), b"").unwrap();
            text.push_str(&format!("{p},{c},office\n"));
        }
        let m = dir.join("manifest.csv");
        fs::write(&m, text).unwrap();
        m
    }

    #[test]
    fn manifest_with_many_classes() {
        let dir = tempfile::tempdir().unwrap();
        let names: Vec<(String, String)> = (0..852)
            .map(|i| (format!("clip{i}.wav"), format!("class{}", i % 42)))
            .collect();
        let rows: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let m = load_manifest(touch_manifest(dir.path(), &rows)).unwrap();
        assert_eq!(m.entries.len(), 852);
        assert_eq!(m.num_classes(), 42);
    }

    #[test]
    fn manifest_class_ids_follow_first_appearance() {
        let dir = tempfile::tempdir().unwrap();
        let m = load_manifest(touch_manifest(dir.path(), &[("a.wav", "Zip"), ("b.wav", "Door")])).unwrap();
        assert_eq!(m.class_names, vec!["Zip", "Door"]);
        assert_eq!(m.labels(), vec![0, 1]);
        assert_eq!(m.entries[1].path, dir.path().join("b.wav"));
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_manifest(touch_manifest(dir.path(), &[("a.wav", "Zip")])).unwrap_err();
        assert!(err.to_string().contains("C >= 2 required"));

        let m = dir.path().join("dup.csv");
        fs::write(&m, "path,class,scenario\na.wav,x,s\na.wav,y,s\n").unwrap();
        assert!(load_manifest(&m).unwrap_err().to_string().contains("duplicate"));

        let m = dir.path().join("missing.csv");
        fs::write(&m, "path,class,scenario\nnope.wav,x,s\na.wav,y,s\n").unwrap();
        let err = load_manifest(&m).unwrap_err().to_string();
        assert!(err.contains("nope.wav"), "{err}");
    }

    fn tone(gain: f64) -> AudioClip {
        let s = (0..4800).map(|n| gain * (n as f64 * 0.05).sin()).collect();
        AudioClip::new(s, 48000, 0, "t").unwrap()
    }

    #[test]
    fn snr_log_identities() {
        let noise = tone(0.01);
        assert!(compute_snr(&tone(0.01), &noise).unwrap().abs() < 1e-12);
        // power ratio 10 -> amplitude ratio sqrt(10)
        let ten = compute_snr(&tone(0.01 * 10f64.sqrt()), &noise).unwrap();
        assert!((ten - 10.0).abs() < 1e-9);
        let twenty = compute_snr(&tone(0.1), &noise).unwrap();
        assert!((twenty - 20.0).abs() < 1e-9);
    }

    #[test]
    fn snr_rejects_silent_noise() {
        let silent = AudioClip::new(vec![0.0; 10], 48000, 0, "n").unwrap();
        let err = compute_snr(&tone(0.5), &silent).unwrap_err();
        assert!(err.to_string().contains("noise reference silent"));
    }

    fn manifest_with_counts(counts: &[usize]) -> DatasetManifest {
        let rows = counts.iter().enumerate().flat_map(|(c, &n)| {
            (0..n).map(move |i| (format!("c{c}_{i}.wav"), format!("class{c}"), "s".to_string()))
        });
        DatasetManifest::from_rows(rows).unwrap()
    }

    #[test]
    fn twenty_per_class_gives_two_per_fold() {
        let m = manifest_with_counts(&[20, 20, 20]);
        let f = stratified_folds(&m, 10, 7).unwrap();
        for class in 0..3 {
            let mut per_fold = [0usize; 10];
            for e in m.entries.iter().filter(|e| e.class_id == class) {
                per_fold[f.fold_of_clip[&*e.path.to_string_lossy()]] += 1;
            }
            assert_eq!(per_fold, [2; 10]);
        }
    }

    #[test]
    fn small_class_spreads_one_per_fold() {
        let m = manifest_with_counts(&[7, 20]);
        let folds = stratify(&m.labels(), 10, 3).unwrap();
        let mut per_fold = [0usize; 10];
        for (i, e) in m.entries.iter().enumerate() {
            if e.class_id == 0 {
                per_fold[folds[i]] += 1;
            }
        }
        assert!(per_fold.iter().all(|&n| n <= 1));
        assert_eq!(per_fold.iter().sum::<usize>(), 7);
    }

    #[test]
    fn folds_are_deterministic_and_need_k_at_least_two() {
        let m = manifest_with_counts(&[9, 13]);
        assert_eq!(stratified_folds(&m, 4, 11).unwrap(), stratified_folds(&m, 4, 11).unwrap());
        assert!(matches!(stratified_folds(&m, 1, 0), Err(Error::Param(_))));
    }

    proptest! {
        #[test]
        fn pcm_round_trip_is_bit_exact(raw in proptest::collection::vec(any::<i16>(), 1..200)) {
            let samples: Vec<f64> = raw.iter().map(|&q| f64::from(q) / 32768.0).collect();
            let (back, rate) = parse_wav(&encode_wav(&samples, 48000)).unwrap();
            prop_assert_eq!(rate, 48000);
            prop_assert_eq!(back, samples);
        }

        #[test]
        fn folds_partition_and_balance(
            counts in proptest::collection::vec(1usize..30, 2..6),
            k in 2usize..11,
            seed in any::<u64>(),
        ) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
            let folds = stratify(&labels, k, seed).unwrap();
            prop_assert_eq!(folds.len(), labels.len());
            for c in 0..counts.len() {
                let mut sizes = vec![0usize; k];
                for (i, &l) in labels.iter().enumerate() {
                    if l == c { sizes[folds[i]] += 1; }
                }
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
        }

        #[test]
        fn snr_of_self_is_zero(raw in proptest::collection::vec(-1.0f64..1.0, 1..100)) {
            prop_assume!(raw.iter().any(|&s| s != 0.0));
            let clip = AudioClip::new(raw, 48000, 0, "x").unwrap();
            prop_assert!(compute_snr(&clip, &clip).unwrap().abs() < 1e-12);
        }
    }
}
