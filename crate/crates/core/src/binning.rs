//! Fixed-length adaptive feature binning.
//!
//! Every feature column is quantized independently into at most
//! `max_bin + 1` consecutive integers before training. Starting from a tiny
//! bin length, values are assigned to bins in sorted order, opening a new bin
//! whenever the current value exceeds the first value of the current bin by
//! more than the bin length; if that would need more than `max_bin + 1` bins,
//! the bin length doubles and the pass restarts. The scheme only spends bins
//! where there is data, so ordered categorical and binary columns pass
//! through unchanged.
//!
//! Bin edges are persisted as midpoints between the neighbouring training
//! values of adjacent bins so unseen values can be mapped at prediction time;
//! out-of-range values clamp to the extreme bins.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// Parameters for fitting bin maps.
#[derive(Debug, Clone)]
pub struct BinnerConfig {
    /// Maximum bin index; a fitted feature uses at most `max_bin + 1` bins.
    pub max_bin: u32,
    /// Starting bin length for the doubling pass.
    pub initial_bin_len: f64,
}

impl Default for BinnerConfig {
    fn default() -> Self {
        Self {
            max_bin: 1000,
            initial_bin_len: 1e-10,
        }
    }
}

impl BinnerConfig {
    pub fn with_max_bin(max_bin: u32) -> Self {
        Self {
            max_bin,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_bin < 1 {
            return Err(CoreError::InvalidConfig(format!(
                "max_bin must be >= 1, got {}",
                self.max_bin
            )));
        }
        if !self.initial_bin_len.is_finite() || self.initial_bin_len <= 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "initial_bin_len must be a positive finite number, got {}",
                self.initial_bin_len
            )));
        }
        Ok(())
    }
}

/// Fitted quantization for one feature.
///
/// `boundaries[b]` is the upper edge of bin `b`; a value `x` lands in the
/// first bin whose edge is `>= x` (ties go to the lower bin), clamping to
/// `0` below and `n_bins - 1` above.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBinMap {
    boundaries: Vec<f64>,
    n_bins: u32,
    final_bin_len: f64,
}

impl FeatureBinMap {
    pub fn n_bins(&self) -> u32 {
        self.n_bins
    }

    /// Bin length in effect after the doubling pass terminated.
    pub fn final_bin_len(&self) -> f64 {
        self.final_bin_len
    }

    /// Upper edges, one per bin except the last.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Reassemble a map from persisted parts (model deserialization).
    pub fn from_parts(boundaries: Vec<f64>, final_bin_len: f64) -> Result<Self> {
        if !boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::InvalidConfig(
                "bin boundaries must be strictly increasing".into(),
            ));
        }
        let n_bins = boundaries.len() as u32 + 1;
        Ok(Self {
            boundaries,
            n_bins,
            final_bin_len,
        })
    }
}

/// Integer-quantized feature columns plus the per-feature bin maps.
#[derive(Debug, Clone)]
pub struct BinnedDataset {
    columns: Vec<Vec<u32>>,
    maps: Vec<FeatureBinMap>,
    n: usize,
}

impl BinnedDataset {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Bin index of `row` in feature `feature`.
    #[inline]
    pub fn bin(&self, row: usize, feature: usize) -> u32 {
        self.columns[feature][row]
    }

    #[inline]
    pub fn column(&self, feature: usize) -> &[u32] {
        &self.columns[feature]
    }

    pub fn map(&self, feature: usize) -> &FeatureBinMap {
        &self.maps[feature]
    }

    pub fn maps(&self) -> &[FeatureBinMap] {
        &self.maps
    }

    pub fn into_maps(self) -> Vec<FeatureBinMap> {
        self.maps
    }
}

/// Fit bin assignments for one column: sort, assign fixed-length bins from
/// the smallest value up, and double the bin length whenever the budget of
/// `max_bin + 1` bins is exceeded.
///
/// Returns the per-value assignments in the original (unsorted) order along
/// with the terminal bin length.
fn doubling_pass(values: &[f64], config: &BinnerConfig) -> (Vec<u32>, Vec<usize>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut bin_len = config.initial_bin_len;
    let mut sorted_bins = vec![0u32; n];
    loop {
        let mut cur_bin = 0u32;
        let mut anchor = 0usize;
        let mut overflow = false;
        for i in 0..n {
            if values[order[i]] - values[order[anchor]] > bin_len {
                cur_bin += 1;
                anchor = i;
                if cur_bin > config.max_bin {
                    bin_len *= 2.0;
                    overflow = true;
                    break;
                }
            }
            sorted_bins[i] = cur_bin;
        }
        if !overflow {
            break;
        }
    }
    (sorted_bins, order, bin_len)
}

fn check_finite(values: &[f64], feature: usize) -> Result<()> {
    for (row, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(CoreError::NonFinite { feature, row });
        }
    }
    Ok(())
}

fn fit_feature_indexed(
    values: &[f64],
    config: &BinnerConfig,
    feature: usize,
) -> Result<(FeatureBinMap, Vec<u32>)> {
    config.validate()?;
    if values.is_empty() {
        return Err(CoreError::EmptyData("feature column has no values".into()));
    }
    check_finite(values, feature)?;

    let (sorted_bins, order, final_bin_len) = doubling_pass(values, config);
    let n_bins = *sorted_bins.last().unwrap() + 1;

    // Upper edge of bin b: midpoint between the largest training value in b
    // and the smallest in b + 1. If rounding pushes the midpoint onto the
    // next bin's smallest value, fall back to the largest value of b so that
    // every training value stays on its fitted side (ties map low).
    let mut boundaries = Vec::with_capacity(n_bins as usize - 1);
    for i in 1..values.len() {
        if sorted_bins[i] != sorted_bins[i - 1] {
            let hi = values[order[i - 1]];
            let lo_next = values[order[i]];
            let mid = (hi + lo_next) / 2.0;
            boundaries.push(if mid >= lo_next { hi } else { mid });
        }
    }
    debug_assert_eq!(boundaries.len() as u32, n_bins - 1);

    let mut assignments = vec![0u32; values.len()];
    for (i, &orig) in order.iter().enumerate() {
        assignments[orig] = sorted_bins[i];
    }

    let map = FeatureBinMap {
        boundaries,
        n_bins,
        final_bin_len,
    };
    Ok((map, assignments))
}

/// Fit the bin map for a single feature column.
pub fn fit_feature(values: &[f64], config: &BinnerConfig) -> Result<FeatureBinMap> {
    fit_feature_indexed(values, config, 0).map(|(map, _)| map)
}

/// Map a value through a fitted bin map, clamping out-of-range values to the
/// extreme bins. A value exactly on a boundary goes to the lower bin.
pub fn bin_value(x: f64, map: &FeatureBinMap) -> Result<u32> {
    if !x.is_finite() {
        return Err(CoreError::NonFinite { feature: 0, row: 0 });
    }
    Ok(map.boundaries.partition_point(|&edge| edge < x) as u32)
}

/// Bin one raw feature row through a set of per-feature maps.
pub fn bin_row(maps: &[FeatureBinMap], row: &[f64], out: &mut Vec<u32>) -> Result<()> {
    if row.len() != maps.len() {
        return Err(CoreError::DimensionMismatch {
            expected: maps.len(),
            got: row.len(),
        });
    }
    out.clear();
    for (f, (&x, map)) in row.iter().zip(maps).enumerate() {
        match bin_value(x, map) {
            Ok(b) => out.push(b),
            Err(CoreError::NonFinite { row: r, .. }) => {
                return Err(CoreError::NonFinite { feature: f, row: r })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Fit every feature column independently. `columns` is column-major
/// (feature-major) and must be rectangular; labels are not part of it.
pub fn fit_dataset(columns: &[Vec<f64>], config: &BinnerConfig) -> Result<BinnedDataset> {
    if columns.is_empty() {
        return Err(CoreError::EmptyData(
            "dataset has no feature columns".into(),
        ));
    }
    let n = columns[0].len();
    if n == 0 {
        return Err(CoreError::EmptyData("dataset has no rows".into()));
    }
    let mut maps = Vec::with_capacity(columns.len());
    let mut binned = Vec::with_capacity(columns.len());
    for (f, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(CoreError::EmptyData(format!(
                "feature {f} has {} rows, expected {n}",
                col.len()
            )));
        }
        let (map, assignments) = fit_feature_indexed(col, config, f)?;
        maps.push(map);
        binned.push(assignments);
    }
    Ok(BinnedDataset {
        columns: binned,
        maps,
        n,
    })
}
