use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use soundbench::bench::{run_bench, synth, BenchCell, BenchConfig, BenchOptions, Pipeline};
use soundbench::dataset::{compute_snr, load_manifest, load_wav, Dataset};
use soundbench::features::{write_features, FeatureConfig, FeatureExtractor, FeatureKind};
use soundbench::{Error, Result};

#[derive(Parser)]
#[command(name = "soundbench", version, about = "Short-sound classification benchmark")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one NARD feature file per clip.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// TTFF, MFCC, MFCC+TTFF or Wavelets.
        #[arg(long)]
        feature: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate the cells of a config file.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cells: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Skip the timing section.
        #[arg(long)]
        no_timings: bool,
    },
    /// Per-clip SNR against a noise-only recording.
    Snr {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        noise: PathBuf,
    },
    /// Train one cell on a whole manifest and save the pipeline.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Cell such as `MFCC+Interp/knn`.
        #[arg(long)]
        cell: String,
        /// Config file whose first value of each key sets hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify WAV files with a saved pipeline.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
    },
    /// Write the synthetic four-class corpus with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_dataset(manifest: &Path) -> Result<Dataset> {
    Dataset::load(&load_manifest(manifest)?)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract { manifest, feature, out } => {
            let kind: FeatureKind = feature.parse()?;
            let data = load_dataset(&manifest)?;
            let extractor = FeatureExtractor::new(FeatureConfig::default())?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Data(format!("cannot create {}: {e}", out.display())))?;
            data.clips.par_iter().try_for_each(|clip| {
                let f = extractor.extract(clip, kind)?;
                let stem = Path::new(&clip.clip_id).file_stem().unwrap_or_default().to_string_lossy().into_owned();
                write_features(out.join(format!("{stem}.nard")), &f.values)
            })?;
            log::info!("wrote {} feature files to {}", data.clips.len(), out.display());
        }
        Command::Bench { manifest, cells, folds, runs, seed, out, no_timings } => {
            let cfg = BenchConfig::load(&cells)?;
            let data = load_dataset(&manifest)?;
            let opts = BenchOptions { folds, runs, seed, timings: !no_timings };
            let report = run_bench(&data, &cfg, &opts)?;
            write(&out, report.to_json().as_bytes())?;
            for b in &report.best {
                let r = &report.results[b.result];
                println!("{:<28} {:6.2} % +- {:5.2}", b.cell, r.accuracy_mean, r.accuracy_std);
            }
        }
        Command::Snr { manifest, noise } => {
            let data = load_dataset(&manifest)?;
            let noise = load_wav(&noise)?;
            let mut total = 0.0;
            for clip in &data.clips {
                let snr = compute_snr(clip, &noise)?;
                total += snr;
                println!("{}\t{snr:.2}", clip.clip_id);
            }
            println!("mean\t{:.2}", total / data.clips.len().max(1) as f64);
        }
        Command::Train { manifest, cell, config, seed, out } => {
            let mut cell: BenchCell = cell.parse()?;
            let mut features = FeatureConfig::default();
            if let Some(path) = config {
                let cfg = BenchConfig::load(&path)?;
                for (key, values) in &cfg.sweep {
                    soundbench::bench::apply_key(&mut cell, key, &values[0])?;
                }
                features = cfg.features;
            }
            let data = load_dataset(&manifest)?;
            let pipeline = Pipeline::train(cell, features, &data.clips, data.class_names.clone(), seed)?;
            let bytes = pipeline.encode()?;
            write(&out, &bytes)?;
            println!("{} trained on {} clips, model {} bytes", pipeline.cell, data.clips.len(), pipeline.fitted.model.memory_bytes());
        }
        Command::Predict { model, wavs } => {
            let bytes = std::fs::read(&model).map_err(|e| Error::Data(format!("cannot read {}: {e}", model.display())))?;
            let pipeline = Pipeline::decode(&bytes)?;
            for wav in &wavs {
                let clip = load_wav(wav)?;
                let c = pipeline.predict(&clip)?;
                println!("{}\t{}", wav.display(), pipeline.class_names[c]);
            }
        }
        Command::Synth { out, per_class, seed } => {
            let manifest = synth::write_synth(&out, per_class, seed)?;
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
