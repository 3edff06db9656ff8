//! IO companion for `abcboost-core`: CSV and libsvm loaders, the model file
//! format, train/test log emission, and the `abcboost_train` /
//! `abcboost_predict` command-line entry points.

pub mod dataset;
pub mod error;
pub mod logfmt;
pub mod model_file;
pub mod predict;
pub mod train;

pub use error::CliError;
