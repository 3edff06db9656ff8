//! Stagewise `L_p` regression boosting.
//!
//! Minimizes `(1/n) Σ |y_i - F_i|^p` for `p >= 1` with shrunken regression
//! trees. For `p >= 2` trees are grown with the second-order gain and Newton
//! terminal values; for `1 <= p < 2` only first derivatives are used and
//! terminal values divide by `p * |node|`. Training stops early once the
//! loss drops below `eps^{p/2}` times the mean `|y|^p` of the targets.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::binning::{self, BinnedDataset, BinnerConfig, FeatureBinMap};
use crate::error::{CoreError, Result};
use crate::math;
use crate::tree::{self, GainMode, RegressionTree, WorkingSet, HESS_GUARD};
use crate::TrainProgress;

/// The `L_p` loss and its early-stop tolerance.
#[derive(Debug, Clone)]
pub struct LpLossSpec {
    pub p: f64,
    pub epsilon: f64,
}

impl Default for LpLossSpec {
    fn default() -> Self {
        Self {
            p: 2.0,
            epsilon: 1e-5,
        }
    }
}

impl LpLossSpec {
    pub fn with_p(p: f64) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.p.is_finite() || self.p < 1.0 {
            return Err(CoreError::InvalidConfig(format!(
                "lp power must be >= 1, got {}",
                self.p
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Training knobs for regression boosting.
#[derive(Debug, Clone)]
pub struct LpConfig {
    /// Terminal nodes per tree.
    pub j: usize,
    /// Shrinkage applied to every leaf contribution.
    pub shrinkage: f64,
    /// Maximum boosting iterations.
    pub iterations: usize,
    pub loss: LpLossSpec,
    pub binner: BinnerConfig,
}

impl LpConfig {
    fn validate(&self) -> Result<()> {
        if self.j < 2 {
            return Err(CoreError::InvalidConfig(format!(
                "J must be >= 2, got {}",
                self.j
            )));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "shrinkage must be in (0, 1], got {}",
                self.shrinkage
            )));
        }
        if self.iterations < 1 {
            return Err(CoreError::InvalidConfig("iterations must be >= 1".into()));
        }
        self.loss.validate()
    }
}

/// First and second derivative of `|y - F|^p` with respect to `F`.
///
/// For `1 <= p < 2` the returned second derivative is the sentinel `1.0`
/// (first-order mode). The gradient at `y = F` is defined as `0`.
pub fn lp_derivatives(y: f64, f: f64, p: f64) -> (f64, f64) {
    let d = y - f;
    let grad = if d == 0.0 {
        0.0
    } else {
        -p * math::powf(math::abs(d), p - 1.0) * if d > 0.0 { 1.0 } else { -1.0 }
    };
    let hess = if p >= 2.0 {
        p * (p - 1.0) * math::powf(math::abs(d), p - 2.0)
    } else {
        1.0
    };
    (grad, hess)
}

/// An ordered ensemble of shrunken regression trees plus the bin maps needed
/// to quantize unseen rows.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    trees: Vec<RegressionTree>,
    shrinkage: f64,
    j: usize,
    p: f64,
    maps: Vec<FeatureBinMap>,
}

impl RegressionModel {
    pub fn from_parts(
        trees: Vec<RegressionTree>,
        shrinkage: f64,
        j: usize,
        p: f64,
        maps: Vec<FeatureBinMap>,
    ) -> Self {
        Self {
            trees,
            shrinkage,
            j,
            p,
            maps,
        }
    }

    pub fn n_iterations(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.maps.len()
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn maps(&self) -> &[FeatureBinMap] {
        &self.maps
    }

    /// Quantize a raw feature row through the stored bin maps.
    pub fn bin_row(&self, raw: &[f64], out: &mut Vec<u32>) -> Result<()> {
        binning::bin_row(&self.maps, raw, out)
    }

    /// Add iteration `m` (0-based) of the ensemble onto a running score.
    pub fn apply_iteration(&self, m: usize, row_bins: &[u32], score: &mut f64) {
        *score += self.shrinkage * self.trees[m].predict_row(row_bins);
    }

    /// Predict one raw row using the first `at_iteration` trees.
    pub fn predict_row_at(&self, raw: &[f64], at_iteration: usize) -> Result<f64> {
        let mut bins = Vec::with_capacity(raw.len());
        self.bin_row(raw, &mut bins)?;
        let mut score = 0.0;
        for m in 0..at_iteration.min(self.trees.len()) {
            self.apply_iteration(m, &bins, &mut score);
        }
        Ok(score)
    }

    /// Predict one raw row with the full ensemble.
    pub fn predict_row(&self, raw: &[f64]) -> Result<f64> {
        self.predict_row_at(raw, self.trees.len())
    }
}

fn leaf_values_second_order(
    grown: &tree::GrownTree,
    grad: &[f64],
    hess: &[f64],
    clip: f64,
) -> Vec<f64> {
    grown
        .leaf_rows()
        .iter()
        .map(|rows| {
            let num: f64 = rows.iter().map(|&r| -grad[r as usize]).sum();
            let den: f64 = rows.iter().map(|&r| hess[r as usize]).sum();
            if den <= HESS_GUARD {
                0.0
            } else {
                (num / den).clamp(-clip, clip)
            }
        })
        .collect()
}

fn leaf_values_first_order(grown: &tree::GrownTree, grad: &[f64], p: f64, clip: f64) -> Vec<f64> {
    grown
        .leaf_rows()
        .iter()
        .map(|rows| {
            let num: f64 = rows.iter().map(|&r| -grad[r as usize]).sum();
            (num / (p * rows.len() as f64)).clamp(-clip, clip)
        })
        .collect()
}

/// Train an `L_p` regression model. `columns` is feature-major; `targets`
/// has one value per row. `observer` sees one record per finished iteration.
pub fn train_with_observer(
    columns: &[Vec<f64>],
    targets: &[f64],
    config: &LpConfig,
    observer: &mut dyn FnMut(&TrainProgress),
) -> Result<RegressionModel> {
    config.validate()?;
    let n = targets.len();
    if n < 2 {
        return Err(CoreError::EmptyData(
            "regression needs at least two rows".into(),
        ));
    }
    if columns.is_empty() || columns[0].len() != n {
        return Err(CoreError::EmptyData(format!(
            "feature columns must be non-empty and match {n} target rows"
        )));
    }
    for (row, &y) in targets.iter().enumerate() {
        if !y.is_finite() {
            return Err(CoreError::NonFinite {
                feature: usize::MAX,
                row,
            });
        }
    }

    let p = config.loss.p;
    let binned: BinnedDataset = binning::fit_dataset(columns, &config.binner)?;
    let mode = if p >= 2.0 {
        GainMode::SecondOrder
    } else {
        GainMode::FirstOrder
    };

    // Terminal values are capped relative to the target spread; degenerate
    // constant targets keep the unclipped exact fit.
    let y_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let clip = if y_max > y_min {
        tree::LEAF_CLIP * (y_max - y_min)
    } else {
        f64::INFINITY
    };

    // Conservative stop threshold: eps^{p/2} * mean |y|^p.
    let mean_target_power: f64 = targets
        .iter()
        .map(|&y| math::powf(math::abs(y), p))
        .sum::<f64>()
        / n as f64;
    let stop_threshold = math::powf(config.loss.epsilon, p / 2.0) * mean_target_power;

    let all_rows: Vec<u32> = (0..n as u32).collect();
    let mut scores = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::new();

    for m in 1..=config.iterations {
        for i in 0..n {
            let (g, h) = lp_derivatives(targets[i], scores[i], p);
            grad[i] = g;
            hess[i] = h;
        }
        let work = WorkingSet {
            grad: &grad,
            hess: &hess,
        };
        let grown = tree::grow(&binned, all_rows.clone(), &work, config.j, mode);
        let values = match mode {
            GainMode::SecondOrder => leaf_values_second_order(&grown, &grad, &hess, clip),
            GainMode::FirstOrder => leaf_values_first_order(&grown, &grad, p, clip),
        };
        for (rows, &beta) in grown.leaf_rows().iter().zip(&values) {
            let step = config.shrinkage * beta;
            for &r in rows {
                scores[r as usize] += step;
            }
        }
        trees.push(grown.finish(&values));

        let loss: f64 = targets
            .iter()
            .zip(&scores)
            .map(|(&y, &f)| math::powf(math::abs(y - f), p))
            .sum::<f64>()
            / n as f64;
        observer(&TrainProgress {
            iteration: m,
            loss,
            train_errors: None,
            base_class: None,
        });
        if loss < stop_threshold {
            break;
        }
    }

    Ok(RegressionModel {
        trees,
        shrinkage: config.shrinkage,
        j: config.j,
        p,
        maps: binned.into_maps(),
    })
}

/// [`train_with_observer`] without progress reporting.
pub fn train(columns: &[Vec<f64>], targets: &[f64], config: &LpConfig) -> Result<RegressionModel> {
    train_with_observer(columns, targets, config, &mut |_| {})
}
