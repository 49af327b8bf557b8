//! Permutation feature importance over a fitted model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::features::{FeatureVector, LabeledSample, FEATURE_COUNT, FEATURE_NAMES};
use crate::knn::KnnModel;
use crate::seeds;

pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// Mean accuracy drop per feature, negatives clamped to zero.
    pub raw_drops: [f64; FEATURE_COUNT],
    /// Clamped drops normalized to fractions summing to 1.0. When no
    /// feature produces any drop the mass is spread uniformly.
    pub relative_importance: [f64; FEATURE_COUNT],
    pub repeats: usize,
}

/// Measure each feature's importance by shuffling its column across the
/// test set and recording the accuracy drop against the unshuffled
/// baseline, averaged over `repeats` seeded permutations per feature.
///
/// The per-(feature, repeat) RNG streams derive deterministically from
/// the master seed, so features can be evaluated in any order (or in
/// parallel) without changing the result.
pub fn permutation_importance(
    model: &KnnModel,
    test: &[LabeledSample],
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let repeats = repeats.max(1);
    let baseline = evaluate(model, test)?.overall_accuracy;

    let mut raw_drops = [0.0; FEATURE_COUNT];
    for feature in 0..FEATURE_COUNT {
        let mut drop_sum = 0.0;
        for repeat in 0..repeats {
            let tag = format!("importance/{}/{}", FEATURE_NAMES[feature], repeat);
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &tag));

            let mut column: Vec<f64> =
                test.iter().map(|s| s.features.to_array()[feature]).collect();
            column.shuffle(&mut rng);

            let mut correct = 0usize;
            for (s, shuffled_value) in test.iter().zip(&column) {
                let mut values = s.features.to_array();
                values[feature] = *shuffled_value;
                let predicted = model.predict(&FeatureVector::from_array(values)).label;
                if predicted == s.label {
                    correct += 1;
                }
            }
            drop_sum += baseline - correct as f64 / test.len() as f64;
        }
        raw_drops[feature] = (drop_sum / repeats as f64).max(0.0);
    }

    let total: f64 = raw_drops.iter().sum();
    let relative_importance = if total > 0.0 {
        raw_drops.map(|d| d / total)
    } else {
        [1.0 / FEATURE_COUNT as f64; FEATURE_COUNT]
    };

    Ok(ImportanceReport {
        raw_drops,
        relative_importance,
        repeats,
    })
}

pub const IMPORTANCE_CSV_HEADER: &str = "feature,raw_drop,relative_importance";

pub fn importance_to_csv(report: &ImportanceReport) -> String {
    let mut out = String::from(IMPORTANCE_CSV_HEADER);
    out.push('\n');
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            name, report.raw_drops[i], report.relative_importance[i]
        ));
    }
    out
}
