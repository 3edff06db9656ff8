//! Gradient boosted regression trees over histogram-binned features.
//!
//! The crate covers four training modes sharing one tree builder:
//!
//! * [`lp_boost`] — stagewise `L_p` regression for any `p >= 1`, second-order
//!   split gains when `p >= 2` and first-order gains otherwise, with a
//!   conservative loss-threshold early stop.
//! * [`logit_boost`] — binary and multi-class classification with the
//!   multinomial logistic loss, either Robust LogitBoost (second-order gains
//!   built from hessian group sums) or MART (first-order gains).
//! * [`abc_boost`] — adaptive base class boosting: each iteration rewrites the
//!   logistic derivatives against a base class chosen by searching the
//!   `s` worst classes every `g + 1` iterations after a `w`-iteration warm-up.
//! * [`binning`] — the fixed-length adaptive quantizer that turns every
//!   feature column into small consecutive integers before any tree is grown.
//!
//! Everything here is deterministic and single-threaded; the same inputs
//! produce bit-identical models. The crate is `no_std`-compatible (with
//! `alloc`) when built with `--no-default-features --features libm`; file
//! formats, dataset loaders, and the command-line tools live in the companion
//! `abcboost-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("abcboost-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod abc_boost;
pub mod binning;
pub mod error;
pub mod logit_boost;
pub mod lp_boost;
mod math;
pub mod rng;
pub mod tree;

pub use binning::{BinnedDataset, BinnerConfig, FeatureBinMap};
pub use error::{CoreError, Result};
pub use tree::{GainMode, RegressionTree};

/// Per-iteration training summary handed to observers; log emission and
/// timing live with the caller.
#[derive(Debug, Clone)]
pub struct TrainProgress {
    /// 1-based boosting iteration.
    pub iteration: usize,
    /// Training loss after this iteration (mean `L_p` loss for regression,
    /// summed negative log-likelihood for classification).
    pub loss: f64,
    /// Misclassified training rows, classification only.
    pub train_errors: Option<usize>,
    /// Committed base class, adaptive-base-class iterations only.
    pub base_class: Option<usize>,
}
