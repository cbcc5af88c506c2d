//! Robust linear regression under oblivious response corruption.
//!
//! The main estimator is [`adacrr_fit`], which alternates an adaptive
//! randomized hard-thresholding step ([`adaht_select`]) with a refit on the
//! retained points. Baselines ([`ols_fit`], [`torrent_fit`], [`huber_fit`]),
//! a synthetic data generator and an experiment harness are included.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adacrr;
pub mod adaht;
pub mod baselines;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod rng;

pub use adacrr::{adacrr_fit, heavy_fit, mean_estimate_symmetrized, AdaCrrConfig, D0Source, FitResult, StepSize, UpdateRule};
pub use adaht::{adaht_select, ScheduleMode, ScheduleSpec, SelectionResult};
pub use baselines::{huber_fit, ols_fit, torrent_fit, HuberConfig, TorrentConfig};
pub use datagen::{gen_dataset, CorruptionScheme, CorruptionSpec, Dataset, GroundTruth, NoiseSpec, SigmaSpec};
pub use error::{Error, Result};
pub use numerics::{DenseMatrix, DenseVector};
