//! Repeated stratified cross-validation over (feature, post-processing,
//! classifier) cells, with timing and model-size statistics.

mod cell;
mod config;
mod cv;
mod pipeline;
mod report;
pub mod synth;
mod timing;

pub use cell::{BenchCell, ClassifierKind, Hyper, PostKind};
pub use config::{apply_key, BenchConfig};
pub use cv::{confusion_and_accuracy, cross_validate, CvResult};
pub use pipeline::{train_model, FittedCell, Pipeline, PostState};
pub use report::{extract_all, run_bench, BenchOptions, BenchReport, BestCell};
pub use timing::{measure_times, median, Timings};
