use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::BenchConfig;
use super::cv::{cross_validate, CvResult};
use super::timing::{measure_times, Timings};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureKind};
use crate::matrix::Matrix;

/// Highest mean accuracy among the sweep of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub cell: String,
    /// Index into [`BenchReport::results`].
    pub result: usize,
    pub accuracy_mean: f64,
}

/// A full benchmark. `results` and `best` depend only on the data, the
/// configuration and the seed; `timings` holds wall-clock figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub results: Vec<CvResult>,
    pub best: Vec<BestCell>,
    pub timings: Vec<Timings>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchOptions {
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub timings: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            folds: 10,
            runs: 10,
            seed: 0,
            timings: true,
        }
    }
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing section.
    pub fn results_json(&self) -> String {
        #[derive(Serialize)]
        struct Deterministic<'a> {
            results: &'a [CvResult],
            best: &'a [BestCell],
        }
        serde_json::to_string_pretty(&Deterministic {
            results: &self.results,
            best: &self.best,
        })
        .expect("report serializes")
    }

    pub fn find(&self, cell: &str) -> Option<&CvResult> {
        self.best.iter().find(|b| b.cell == cell).map(|b| &self.results[b.result])
    }
}

/// Features of every clip for one pipeline, in dataset order.
pub fn extract_all(extractor: &FeatureExtractor, dataset: &Dataset, kind: FeatureKind) -> Result<Vec<Matrix>> {
    dataset
        .clips
        .par_iter()
        .map(|c| extractor.extract(c, kind).map(|f| f.values))
        .collect()
}

pub fn run_bench(dataset: &Dataset, cfg: &BenchConfig, opts: &BenchOptions) -> Result<BenchReport> {
    let cells = cfg.expand()?;
    if dataset.clips.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let extractor = FeatureExtractor::new(cfg.features.clone())?;
    let labels = dataset.labels();
    let num_classes = dataset.num_classes();
    let mut cache: BTreeMap<&'static str, Vec<Matrix>> = BTreeMap::new();
    let mut results = Vec::with_capacity(cells.len());
    for cell in &cells {
        let key = cell.feature.label();
        if !cache.contains_key(key) {
            log::info!("extracting {key} features for {} clips", dataset.clips.len());
            cache.insert(key, extract_all(&extractor, dataset, cell.feature)?);
        }
        log::info!("cross-validating {cell}");
        results.push(cross_validate(&cache[key], &labels, num_classes, cell, opts.folds, opts.runs, opts.seed)?);
    }

    let mut best: Vec<BestCell> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match best.iter_mut().find(|b| b.cell == r.cell) {
            Some(b) if r.accuracy_mean > b.accuracy_mean => {
                b.result = i;
                b.accuracy_mean = r.accuracy_mean;
            }
            Some(_) => {}
            None => best.push(BestCell {
                cell: r.cell.clone(),
                result: i,
                accuracy_mean: r.accuracy_mean,
            }),
        }
    }

    let timings = if opts.timings {
        cells
            .iter()
            .map(|c| measure_times(c, &extractor, &dataset.clips, num_classes, opts.folds, opts.seed))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(BenchReport { results, best, timings })
}
