//! Multi-class and binary classification with the multinomial logistic loss.
//!
//! Robust LogitBoost grows trees on the residuals `r - p` with weights
//! `p(1 - p)` and the second-order gain; MART differs only in the split
//! criterion, which uses first derivatives and child counts. Terminal values
//! are the Newton step scaled by `(K - 1) / K` in both cases. For binary
//! problems a single tree per iteration is built for class 1 and class 0 is
//! closed by the sum-to-zero constraint.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::binning::{self, BinnedDataset, BinnerConfig, FeatureBinMap};
use crate::error::{CoreError, Result};
use crate::math;
use crate::tree::{self, GainMode, RegressionTree, WorkingSet, HESS_GUARD};
use crate::TrainProgress;

/// Split criterion family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostKind {
    RobustLogit,
    Mart,
}

/// Probability clamp used when evaluating logs for loss reporting; never
/// applied inside derivatives.
pub const PROB_CLAMP: f64 = 1e-15;

/// Training knobs for classification boosting.
#[derive(Debug, Clone)]
pub struct LogitConfig {
    pub j: usize,
    pub shrinkage: f64,
    pub iterations: usize,
    pub kind: BoostKind,
    pub binner: BinnerConfig,
}

impl LogitConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        validate_common(self.j, self.shrinkage, self.iterations)
    }
}

pub(crate) fn validate_common(j: usize, shrinkage: f64, iterations: usize) -> Result<()> {
    if j < 2 {
        return Err(CoreError::InvalidConfig(format!("J must be >= 2, got {j}")));
    }
    if !(shrinkage > 0.0 && shrinkage <= 1.0) {
        return Err(CoreError::InvalidConfig(format!(
            "shrinkage must be in (0, 1], got {shrinkage}"
        )));
    }
    if iterations < 1 {
        return Err(CoreError::InvalidConfig("iterations must be >= 1".into()));
    }
    Ok(())
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Overflow-safe softmax: shifts by the row maximum before exponentiating.
pub fn softmax_into(scores: &[f64], out: &mut [f64]) {
    debug_assert_eq!(scores.len(), out.len());
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        let e = math::exp(s - max);
        *o = e;
        total += e;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Scores, probabilities, and one-hot labels for every training row.
#[derive(Debug, Clone)]
pub struct ClassState {
    n: usize,
    k: usize,
    labels: Vec<u32>,
    scores: Vec<f64>,
    probs: Vec<f64>,
}

impl ClassState {
    /// Start at `F = 0`, `p = 1/K`. Labels must cover `0..k` completely.
    pub fn new(labels: &[u32], k: usize) -> Result<Self> {
        if k < 2 {
            return Err(CoreError::InvalidLabels(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        if labels.is_empty() {
            return Err(CoreError::EmptyData("no labels".into()));
        }
        let mut present = vec![false; k];
        for &y in labels {
            if (y as usize) >= k {
                return Err(CoreError::InvalidLabels(format!(
                    "label {y} out of range for {k} classes"
                )));
            }
            present[y as usize] = true;
        }
        if let Some(missing) = present.iter().position(|&p| !p) {
            return Err(CoreError::InvalidLabels(format!(
                "class {missing} absent from training labels"
            )));
        }
        let n = labels.len();
        Ok(Self {
            n,
            k,
            labels: labels.to_vec(),
            scores: vec![0.0; n * k],
            probs: vec![1.0 / k as f64; n * k],
        })
    }

    /// Build a state from explicit scores (row-major `n x k`); probabilities
    /// are refreshed from them.
    pub fn from_scores(labels: &[u32], k: usize, scores: Vec<f64>) -> Result<Self> {
        let mut state = Self::new(labels, k)?;
        if scores.len() != state.n * k {
            return Err(CoreError::DimensionMismatch {
                expected: state.n * k,
                got: scores.len(),
            });
        }
        state.scores = scores;
        state.refresh_probs();
        Ok(state)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    #[inline]
    pub fn score(&self, i: usize, class: usize) -> f64 {
        self.scores[i * self.k + class]
    }

    #[inline]
    pub fn prob(&self, i: usize, class: usize) -> f64 {
        self.probs[i * self.k + class]
    }

    /// One-hot indicator `r_{i,class}`.
    #[inline]
    pub fn indicator(&self, i: usize, class: usize) -> f64 {
        if self.labels[i] as usize == class {
            1.0
        } else {
            0.0
        }
    }

    pub(crate) fn scores_mut(&mut self) -> &mut [f64] {
        &mut self.scores
    }

    pub(crate) fn scores_vec(&self) -> &[f64] {
        &self.scores
    }

    pub(crate) fn set_scores(&mut self, scores: Vec<f64>) {
        debug_assert_eq!(scores.len(), self.n * self.k);
        self.scores = scores;
    }

    /// Recompute every probability row from the scores.
    pub fn refresh_probs(&mut self) {
        for i in 0..self.n {
            let row = &self.scores[i * self.k..(i + 1) * self.k];
            softmax_into(row, &mut self.probs[i * self.k..(i + 1) * self.k]);
        }
    }

    /// Summed negative log-likelihood with probabilities clamped for the log.
    pub fn loss(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let p = self.prob(i, self.labels[i] as usize);
            total -= math::ln(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP));
        }
        total
    }

    /// Rows whose score argmax disagrees with the label.
    pub fn errors(&self) -> usize {
        (0..self.n)
            .filter(|&i| {
                argmax(&self.scores[i * self.k..(i + 1) * self.k]) != self.labels[i] as usize
            })
            .count()
    }
}

/// First and second derivative of the logistic loss in `F_{i,k}`.
pub fn logit_derivatives(state: &ClassState, i: usize, k: usize) -> (f64, f64) {
    let p = state.prob(i, k);
    let grad = -(state.indicator(i, k) - p);
    let hess = p * (1.0 - p);
    (grad, hess)
}

/// Trees committed in one boosting iteration: `(class, tree)` pairs in
/// ascending class order. When `base_class` is set, that class's score is
/// closed to the negated sum of the others after the trees are applied
/// (binary classification and adaptive-base-class iterations).
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSet {
    pub base_class: Option<u32>,
    pub trees: Vec<(u32, RegressionTree)>,
}

/// Which trainer produced a model; adaptive variants carry their search
/// schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    RobustLogit,
    Mart,
    AbcRobustLogit {
        search: usize,
        gap: usize,
        warmup: usize,
    },
    AbcMart {
        search: usize,
        gap: usize,
        warmup: usize,
    },
}

impl ModelKind {
    pub fn base_kind(&self) -> BoostKind {
        match self {
            ModelKind::RobustLogit | ModelKind::AbcRobustLogit { .. } => BoostKind::RobustLogit,
            ModelKind::Mart | ModelKind::AbcMart { .. } => BoostKind::Mart,
        }
    }
}

/// Per-iteration, per-class trees plus everything needed to score raw rows.
#[derive(Debug, Clone)]
pub struct ClassificationModel {
    kind: ModelKind,
    k: usize,
    j: usize,
    shrinkage: f64,
    maps: Vec<FeatureBinMap>,
    iterations: Vec<TreeSet>,
}

impl ClassificationModel {
    pub fn from_parts(
        kind: ModelKind,
        k: usize,
        j: usize,
        shrinkage: f64,
        maps: Vec<FeatureBinMap>,
        iterations: Vec<TreeSet>,
    ) -> Self {
        Self {
            kind,
            k,
            j,
            shrinkage,
            maps,
            iterations,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn n_features(&self) -> usize {
        self.maps.len()
    }

    pub fn n_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn maps(&self) -> &[FeatureBinMap] {
        &self.maps
    }

    pub fn iteration_sets(&self) -> &[TreeSet] {
        &self.iterations
    }

    /// Committed base class per iteration; `None` for plain iterations.
    pub fn base_schedule(&self) -> impl Iterator<Item = Option<u32>> + '_ {
        self.iterations.iter().map(|s| s.base_class)
    }

    pub fn bin_row(&self, raw: &[f64], out: &mut Vec<u32>) -> Result<()> {
        binning::bin_row(&self.maps, raw, out)
    }

    /// Add iteration `m` (0-based) onto a running score row of length `K`,
    /// applying the sum-to-zero closure when the iteration has a base class.
    pub fn apply_iteration(&self, m: usize, row_bins: &[u32], scores: &mut [f64]) {
        let set = &self.iterations[m];
        for (class, tree) in &set.trees {
            scores[*class as usize] += self.shrinkage * tree.predict_row(row_bins);
        }
        if let Some(b) = set.base_class {
            let b = b as usize;
            let mut sum = 0.0;
            for (k, &s) in scores.iter().enumerate() {
                if k != b {
                    sum += s;
                }
            }
            scores[b] = -sum;
        }
    }

    /// Score a raw row with the first `at_iteration` iterations.
    pub fn score_row_at(&self, raw: &[f64], at_iteration: usize) -> Result<Vec<f64>> {
        let mut bins = Vec::with_capacity(raw.len());
        self.bin_row(raw, &mut bins)?;
        let mut scores = vec![0.0; self.k];
        for m in 0..at_iteration.min(self.iterations.len()) {
            self.apply_iteration(m, &bins, &mut scores);
        }
        Ok(scores)
    }

    pub fn score_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.score_row_at(raw, self.iterations.len())
    }

    /// Predicted class index and class probabilities for a raw row.
    pub fn predict_row(&self, raw: &[f64]) -> Result<(usize, Vec<f64>)> {
        let scores = self.score_row(raw)?;
        let mut probs = vec![0.0; self.k];
        softmax_into(&scores, &mut probs);
        Ok((argmax(&scores), probs))
    }
}

/// Leaf value `(K-1)/K * Σ (r - p) / Σ p(1 - p)` over the leaf's rows,
/// evaluated from the state's current probabilities and clipped to
/// [`tree::LEAF_CLIP`].
fn newton_leaf_values(grown: &tree::GrownTree, state: &ClassState, class: usize) -> Vec<f64> {
    let k = state.n_classes() as f64;
    let factor = (k - 1.0) / k;
    grown
        .leaf_rows()
        .iter()
        .map(|rows| {
            let mut num = 0.0;
            let mut den = 0.0;
            for &r in rows {
                let i = r as usize;
                let p = state.prob(i, class);
                num += state.indicator(i, class) - p;
                den += p * (1.0 - p);
            }
            if den <= HESS_GUARD {
                0.0
            } else {
                (factor * num / den).clamp(-tree::LEAF_CLIP, tree::LEAF_CLIP)
            }
        })
        .collect()
}

/// One Robust LogitBoost / MART iteration: grow the per-class trees from the
/// current probability snapshot, then apply score updates in class order and
/// refresh the probabilities.
pub(crate) fn plain_iteration(
    state: &mut ClassState,
    binned: &BinnedDataset,
    all_rows: &[u32],
    j: usize,
    shrinkage: f64,
    kind: BoostKind,
) -> TreeSet {
    let n = state.n_rows();
    let k = state.n_classes();
    let classes: Vec<usize> = if k == 2 { vec![1] } else { (0..k).collect() };

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let ones = vec![1.0; n];
    let mut pending: Vec<(u32, Vec<f64>, tree::GrownTree)> = Vec::with_capacity(classes.len());

    for &class in &classes {
        for i in 0..n {
            let (g, h) = logit_derivatives(state, i, class);
            grad[i] = g;
            hess[i] = h;
        }
        let (work, mode) = match kind {
            BoostKind::RobustLogit => (
                WorkingSet {
                    grad: &grad,
                    hess: &hess,
                },
                GainMode::SecondOrder,
            ),
            BoostKind::Mart => (
                WorkingSet {
                    grad: &grad,
                    hess: &ones,
                },
                GainMode::FirstOrder,
            ),
        };
        let grown = tree::grow(binned, all_rows.to_vec(), &work, j, mode);
        let values = newton_leaf_values(&grown, state, class);
        pending.push((class as u32, values, grown));
    }

    let mut trees = Vec::with_capacity(pending.len());
    for (class, values, grown) in pending {
        for (rows, &beta) in grown.leaf_rows().iter().zip(&values) {
            let step = shrinkage * beta;
            for &r in rows {
                state.scores_mut()[r as usize * k + class as usize] += step;
            }
        }
        trees.push((class, grown.finish(&values)));
    }

    let base_class = if k == 2 {
        for i in 0..n {
            state.scores_mut()[i * 2] = -state.score(i, 1);
        }
        Some(0)
    } else {
        None
    };
    state.refresh_probs();
    TreeSet { base_class, trees }
}

fn infer_classes(labels: &[u32]) -> usize {
    labels.iter().map(|&y| y as usize + 1).max().unwrap_or(0)
}

/// Train a Robust LogitBoost or MART classifier. Labels must be `0..K-1`
/// with every class present.
pub fn train_with_observer(
    columns: &[Vec<f64>],
    labels: &[u32],
    config: &LogitConfig,
    observer: &mut dyn FnMut(&TrainProgress),
) -> Result<ClassificationModel> {
    config.validate()?;
    let k = infer_classes(labels);
    let mut state = ClassState::new(labels, k)?;
    if columns.is_empty() || columns[0].len() != labels.len() {
        return Err(CoreError::EmptyData(format!(
            "feature columns must be non-empty and match {} label rows",
            labels.len()
        )));
    }
    let binned = binning::fit_dataset(columns, &config.binner)?;
    let all_rows: Vec<u32> = (0..labels.len() as u32).collect();

    let mut iterations = Vec::with_capacity(config.iterations);
    for m in 1..=config.iterations {
        let set = plain_iteration(
            &mut state,
            &binned,
            &all_rows,
            config.j,
            config.shrinkage,
            config.kind,
        );
        iterations.push(set);
        observer(&TrainProgress {
            iteration: m,
            loss: state.loss(),
            train_errors: Some(state.errors()),
            base_class: None,
        });
    }

    let kind = match config.kind {
        BoostKind::RobustLogit => ModelKind::RobustLogit,
        BoostKind::Mart => ModelKind::Mart,
    };
    Ok(ClassificationModel {
        kind,
        k,
        j: config.j,
        shrinkage: config.shrinkage,
        maps: binned.into_maps(),
        iterations,
    })
}

pub fn train(
    columns: &[Vec<f64>],
    labels: &[u32],
    config: &LogitConfig,
) -> Result<ClassificationModel> {
    train_with_observer(columns, labels, config, &mut |_| {})
}
