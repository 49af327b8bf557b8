//! Training-set minimization by stepwise stratified dropout.
//!
//! Each step removes a seeded uniform fraction of every class, refits,
//! and re-evaluates against a fixed test set. The loop stops one step
//! before accuracy first falls below the threshold; the last passing set
//! wins. No global minimality is claimed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::features::{LabeledSample, TrafficClass};
use crate::knn::KnnModel;

pub const DEFAULT_THRESHOLD: f64 = 0.95;
pub const DEFAULT_STEP_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    /// The smallest training set found whose accuracy stayed at or above
    /// the threshold (the full set when `met_threshold` is false).
    pub reduced_train: Vec<LabeledSample>,
    /// (train size, accuracy) per accepted step, strictly decreasing in
    /// size; the final entry corresponds to `reduced_train`.
    pub size_curve: Vec<(usize, f64)>,
    pub final_accuracy: f64,
    pub met_threshold: bool,
}

/// Shrink `train` while the fixed `test` accuracy stays at or above
/// `threshold`.
///
/// An optional `signaling_filter` drops windows before the loop starts
/// (e.g. windows known to carry only signaling traffic); a sample is kept
/// when the predicate returns false.
pub fn minimize(
    train: &[LabeledSample],
    test: &[LabeledSample],
    threshold: f64,
    step_fraction: f64,
    seed: u64,
    k: usize,
    signaling_filter: Option<&dyn Fn(&LabeledSample) -> bool>,
) -> Result<MinimizeResult> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let mut current: Vec<LabeledSample> = match signaling_filter {
        Some(filter) => train.iter().filter(|s| !filter(s)).cloned().collect(),
        None => train.to_vec(),
    };
    if current.is_empty() {
        return Err(Error::EmptyTrain);
    }

    let accuracy_of = |set: &[LabeledSample]| -> Result<f64> {
        let model = KnnModel::fit(set, k)?;
        Ok(evaluate(&model, test)?.overall_accuracy)
    };

    let initial_accuracy = accuracy_of(&current)?;
    let mut size_curve = vec![(current.len(), initial_accuracy)];
    if initial_accuracy < threshold {
        return Ok(MinimizeResult {
            reduced_train: current,
            size_curve,
            final_accuracy: initial_accuracy,
            met_threshold: false,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut final_accuracy = initial_accuracy;
    // Runs until every class sits at the k-sample floor or a step dips
    // below the threshold; the failing step is discarded (no backtracking
    // beyond that single rollback).
    while let Some(candidate) = dropout_step(&current, step_fraction, k, &mut rng) {
        let accuracy = accuracy_of(&candidate)?;
        if accuracy < threshold {
            break;
        }
        final_accuracy = accuracy;
        size_curve.push((candidate.len(), accuracy));
        current = candidate;
    }

    Ok(MinimizeResult {
        reduced_train: current,
        size_curve,
        final_accuracy,
        met_threshold: true,
    })
}

/// Remove a seeded uniform `step_fraction` of each class, never dropping
/// a class below `k` samples. Returns `None` once no class can shrink.
fn dropout_step(
    current: &[LabeledSample],
    step_fraction: f64,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<LabeledSample>> {
    let mut by_class: BTreeMap<TrafficClass, Vec<usize>> = BTreeMap::new();
    for (i, s) in current.iter().enumerate() {
        by_class.entry(s.label).or_default().push(i);
    }

    let mut keep = vec![true; current.len()];
    let mut removed_any = false;
    for idxs in by_class.values_mut() {
        let n = idxs.len();
        if n <= k {
            continue;
        }
        let step = ((step_fraction * n as f64).floor() as usize).max(1);
        let remove = step.min(n - k);
        idxs.shuffle(rng);
        for &i in &idxs[..remove] {
            keep[i] = false;
        }
        removed_any = true;
    }
    if !removed_any {
        return None;
    }
    Some(
        current
            .iter()
            .zip(&keep)
            .filter(|(_, keep)| **keep)
            .map(|(s, _)| s.clone())
            .collect(),
    )
}

pub const SIZE_CURVE_CSV_HEADER: &str = "train_size,accuracy";

pub fn size_curve_to_csv(result: &MinimizeResult) -> String {
    let mut out = String::from(SIZE_CURVE_CSV_HEADER);
    out.push('\n');
    for (size, accuracy) in &result.size_curve {
        out.push_str(&format!("{size},{accuracy}\n"));
    }
    out
}
