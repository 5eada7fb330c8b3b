//! Benchmark configuration files.
//!
//! One `key = value` per line, `#` starts a comment. `cell` lines (repeatable,
//! comma-separated) name cells as `FEATURE[+POST]/CLASSIFIER`. Classifier
//! keys take a comma-separated list of values; every combination is run for
//! each cell that uses the key, and the best combination per cell is
//! reported. Keys:
//!
//! ```text
//! knn.k            qnn.p  qnn.k  qnn.squared
//! svm.kernel       svm.q  svm.gamma (number or auto)  svm.coef0
//! svm.degree       svm.standardize
//! gmm.m  gmm.cov (diag|full)  gmm.iters
//! hmm.s  hmm.m  hmm.cov  hmm.iters
//! bow.k
//! feature.n_mfcc  feature.mel_bands  feature.deltas
//! feature.ttff     (space-separated feature names)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::cell::{BenchCell, ClassifierKind, PostKind};
use crate::classifiers::KernelKind;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub cells: Vec<BenchCell>,
    pub sweep: BTreeMap<String, Vec<String>>,
    pub features: FeatureConfig,
}

const SWEEP_KEYS: &[&str] = &[
    "knn.k",
    "qnn.p",
    "qnn.k",
    "qnn.squared",
    "svm.kernel",
    "svm.q",
    "svm.gamma",
    "svm.coef0",
    "svm.degree",
    "svm.standardize",
    "gmm.m",
    "gmm.cov",
    "gmm.iters",
    "hmm.s",
    "hmm.m",
    "hmm.cov",
    "hmm.iters",
    "bow.k",
];

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

/// Sets one hyperparameter on a cell.
pub fn apply_key(cell: &mut BenchCell, key: &str, value: &str) -> Result<()> {
    let h = &mut cell.hyper;
    match key {
        "knn.k" => h.knn_k = num(key, value)?,
        "qnn.p" => h.qnn.p = num(key, value)?,
        "qnn.k" => h.qnn.k = num(key, value)?,
        "qnn.squared" => h.qnn.squared = flag(key, value)?,
        "svm.kernel" => {
            h.svm.kernel.kind = value.parse::<KernelKind>()?;
            if h.svm.kernel.kind == KernelKind::Chi2 {
                h.svm.standardize = false;
            }
        }
        "svm.q" => h.svm.box_q = num(key, value)?,
        "svm.gamma" => h.svm.gamma = if value == "auto" { None } else { Some(num(key, value)?) },
        "svm.coef0" => h.svm.kernel.coef0 = num(key, value)?,
        "svm.degree" => h.svm.kernel.degree = num(key, value)?,
        "svm.standardize" => h.svm.standardize = flag(key, value)?,
        "gmm.m" => h.gmm.m = num(key, value)?,
        "gmm.cov" => h.gmm.cov = value.parse()?,
        "gmm.iters" => h.gmm.max_iters = num(key, value)?,
        "hmm.s" => h.hmm.s = num(key, value)?,
        "hmm.m" => h.hmm.m = num(key, value)?,
        "hmm.cov" => h.hmm.cov = value.parse()?,
        "hmm.iters" => h.hmm.max_iters = num(key, value)?,
        "bow.k" => h.bow_k = num(key, value)?,
        _ => return Err(Error::Config(format!("unknown key `{key}`"))),
    }
    Ok(())
}

fn uses_key(cell: &BenchCell, key: &str) -> bool {
    let prefix = key.split('.').next().unwrap_or("");
    match prefix {
        "knn" => cell.classifier == ClassifierKind::Knn,
        "qnn" => cell.classifier == ClassifierKind::Qnn,
        "svm" => cell.classifier == ClassifierKind::Svm,
        "gmm" => matches!(cell.classifier, ClassifierKind::Gmm1 | ClassifierKind::GmmT),
        "hmm" => cell.classifier == ClassifierKind::Hmm,
        "bow" => cell.post == PostKind::Bow,
        _ => false,
    }
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        let mut sweep = BTreeMap::new();
        let mut features = FeatureConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::Config(format!("line {}: {}", n + 1, e.to_string().trim_start_matches("config error: ")));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "cell" | "cells" => {
                    for c in value.split(',') {
                        cells.push(c.parse::<BenchCell>().map_err(at)?);
                    }
                }
                "feature.n_mfcc" => features.n_mfcc = num(key, value).map_err(at)?,
                "feature.mel_bands" => features.mel_bands = num(key, value).map_err(at)?,
                "feature.deltas" => features.add_deltas = flag(key, value).map_err(at)?,
                "feature.ttff" => features.ttff_subset = value.split_whitespace().map(str::to_string).collect(),
                _ if SWEEP_KEYS.contains(&key) => {
                    let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
                    let mut probe = BenchCell::new(crate::features::FeatureKind::Mfcc, PostKind::Mean, ClassifierKind::Knn)?;
                    for v in &values {
                        apply_key(&mut probe, key, v).map_err(at)?;
                    }
                    sweep.insert(key.to_string(), values);
                }
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", n + 1))),
            }
        }
        Ok(BenchConfig { cells, sweep, features })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every cell with every combination of the sweep values it uses, in
    /// a fixed order.
    pub fn expand(&self) -> Result<Vec<BenchCell>> {
        if self.cells.is_empty() {
            return Err(Error::Config("no `cell` lines".into()));
        }
        let mut out = Vec::new();
        for cell in &self.cells {
            let keys: Vec<(&String, &Vec<String>)> = self.sweep.iter().filter(|(k, _)| uses_key(cell, k)).collect();
            let mut combos: Vec<BenchCell> = vec![cell.clone()];
            for (key, values) in keys {
                let mut next = Vec::with_capacity(combos.len() * values.len());
                for c in &combos {
                    for v in values {
                        let mut c = c.clone();
                        apply_key(&mut c, key, v)?;
                        next.push(c);
                    }
                }
                combos = next;
            }
            out.extend(combos);
        }
        Ok(out)
    }
}
