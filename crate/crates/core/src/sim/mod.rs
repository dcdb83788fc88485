//! Desk-scale cross pseudo supervision on synthetic segmentation data.
//!
//! Two per-pixel linear softmax models with different initializations are trained on a
//! small labeled pool and supervise each other on the unlabeled pool through boosted pseudo
//! labels. The run is single-threaded and fully determined by the dataset seed.

mod data;
mod model;
mod train;

pub use data::{render_blobs, Blob, DatasetParams, FeatureMap, SynthDataset, CHANNELS, FEATURES};
pub use model::{Gradient, LinearModel, Target};
pub use train::{
    ablate, evaluate, mean_by_arm, rows_to_csv, train_cps, train_supervised, validation_set,
    AblationRow, EvalPoint, SimConfig, TrainedPair, CSV_HEADER,
};
