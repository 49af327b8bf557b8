//! From-scratch K-Nearest-Neighbors over the six-feature vectors.
//!
//! The model is an exhaustive linear scan over the stored training matrix:
//! after training-set minimization the matrix holds on the order of two
//! thousand rows, where brute force comfortably beats any spatial index
//! while staying exactly deterministic. Every tie in the pipeline has a
//! pinned deterministic break: equal distances prefer the lower row index,
//! equal vote counts prefer the smaller summed neighbor distance, and any
//! remaining tie falls back to class declaration order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::{
    apply_normalizer, fit_normalizer, FeatureVector, LabeledSample, Normalizer, TrafficClass,
    FEATURE_COUNT,
};

pub const DEFAULT_K: usize = 5;

const MAGIC: &[u8; 4] = b"KNN1";
const HEADER_LEN: usize = 4 + 4 + 4 + 1;
const NORMALIZER_LEN: usize = 2 * FEATURE_COUNT * 8;
const ROW_LEN: usize = FEATURE_COUNT * 8;

/// A fitted KNN model: normalized training matrix, labels, and the
/// normalizer itself. Immutable after [`fit`](KnnModel::fit); concurrent
/// predictions on a shared model are safe.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    rows: Vec<[f64; FEATURE_COUNT]>,
    labels: Vec<TrafficClass>,
    normalizer: Normalizer,
    normalize: bool,
}

/// Outcome of one classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: TrafficClass,
    /// Vote count per class among the k neighbors; counts sum to k.
    pub neighbor_votes: BTreeMap<TrafficClass, usize>,
    pub mean_neighbor_distance: f64,
}

impl KnnModel {
    /// Fit a model with min-max normalization (the default pipeline).
    pub fn fit(samples: &[LabeledSample], k: usize) -> Result<Self> {
        Self::fit_with(samples, k, true)
    }

    /// Fit a model, optionally skipping feature normalization so raw
    /// feature scales feed the distance directly.
    pub fn fit_with(samples: &[LabeledSample], k: usize, normalize: bool) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::InvalidK(k));
        }
        if samples.len() < k {
            return Err(Error::TooFewSamples {
                have: samples.len(),
                need: k,
            });
        }
        let first = samples[0].label;
        if samples.iter().all(|s| s.label == first) {
            return Err(Error::SingleClass);
        }

        let vectors: Vec<FeatureVector> = samples.iter().map(|s| s.features).collect();
        let normalizer = fit_normalizer(&vectors)?;
        let rows = vectors
            .iter()
            .map(|v| {
                if normalize {
                    apply_normalizer(&normalizer, v).to_array()
                } else {
                    v.to_array()
                }
            })
            .collect();
        Ok(KnnModel {
            k,
            rows,
            labels: samples.iter().map(|s| s.label).collect(),
            normalizer,
            normalize,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_normalizing(&self) -> bool {
        self.normalize
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Classify one feature vector.
    ///
    /// The query is normalized with the model's stored bounds, Euclidean
    /// distances to all rows are computed, and the k nearest rows vote.
    pub fn predict(&self, v: &FeatureVector) -> Prediction {
        let query = self.project(v);

        // Best-k selection: `best` stays sorted ascending by
        // (distance, row index), so ties on distance keep the lower index.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (idx, row) in self.rows.iter().enumerate() {
            let d = euclidean(&query, row);
            if best.len() == self.k {
                let worst = best[self.k - 1];
                if (d, idx) >= (worst.0, worst.1) {
                    continue;
                }
                best.pop();
            }
            let pos = best.partition_point(|&(bd, bi)| (bd, bi) < (d, idx));
            best.insert(pos, (d, idx));
        }

        self.vote(&best)
    }

    fn project(&self, v: &FeatureVector) -> [f64; FEATURE_COUNT] {
        if self.normalize {
            apply_normalizer(&self.normalizer, v).to_array()
        } else {
            v.to_array()
        }
    }

    fn vote(&self, neighbors: &[(f64, usize)]) -> Prediction {
        let mut neighbor_votes: BTreeMap<TrafficClass, usize> = BTreeMap::new();
        let mut summed: BTreeMap<TrafficClass, f64> = BTreeMap::new();
        let mut total = 0.0;
        for &(d, idx) in neighbors {
            let label = self.labels[idx];
            *neighbor_votes.entry(label).or_insert(0) += 1;
            *summed.entry(label).or_insert(0.0) += d;
            total += d;
        }

        // Majority vote; ties prefer the class with the smaller summed
        // neighbor distance, then class declaration order. Iterating in
        // declaration order and requiring a strict improvement gives the
        // final fallback for free.
        let mut label = TrafficClass::SwitchTrigger;
        let mut best: Option<(usize, f64)> = None;
        for class in TrafficClass::ALL {
            let Some(&count) = neighbor_votes.get(&class) else {
                continue;
            };
            let sum = summed[&class];
            let better = match best {
                None => true,
                Some((bc, bs)) => count > bc || (count == bc && sum < bs),
            };
            if better {
                best = Some((count, sum));
                label = class;
            }
        }

        Prediction {
            label,
            neighbor_votes,
            mean_neighbor_distance: total / neighbors.len() as f64,
        }
    }

    /// Encode the model as a little-endian binary blob.
    ///
    /// Layout: magic `KNN1`, k (u32), row count (u32), normalize flag
    /// (u8), normalizer mins then maxs (6 f64 each), the row-major f64
    /// matrix, then one label byte per row.
    pub fn serialize(&self) -> Vec<u8> {
        let n = self.rows.len();
        let mut out = Vec::with_capacity(HEADER_LEN + NORMALIZER_LEN + n * (ROW_LEN + 1));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.push(u8::from(self.normalize));
        for x in self.normalizer.mins.iter().chain(&self.normalizer.maxs) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for row in &self.rows {
            for x in row {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend(self.labels.iter().map(|l| l.index() as u8));
        out
    }

    /// Decode a model previously produced by [`serialize`](Self::serialize).
    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN + NORMALIZER_LEN {
            return Err(Error::LengthMismatch {
                expected: HEADER_LEN + NORMALIZER_LEN,
                actual: bytes.len(),
            });
        }
        let k = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let normalize = match bytes[12] {
            0 => false,
            1 => true,
            b => return Err(Error::InvalidLabelByte(b)),
        };
        let expected = HEADER_LEN + NORMALIZER_LEN + n * (ROW_LEN + 1);
        if bytes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: bytes.len(),
            });
        }
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::InvalidK(k));
        }
        if n < k {
            return Err(Error::TooFewSamples { have: n, need: k });
        }

        let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let mut mins = [0.0; FEATURE_COUNT];
        let mut maxs = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            mins[i] = f64_at(HEADER_LEN + i * 8);
            maxs[i] = f64_at(HEADER_LEN + (FEATURE_COUNT + i) * 8);
        }
        let matrix_start = HEADER_LEN + NORMALIZER_LEN;
        let mut rows = Vec::with_capacity(n);
        for r in 0..n {
            let mut row = [0.0; FEATURE_COUNT];
            for (i, x) in row.iter_mut().enumerate() {
                *x = f64_at(matrix_start + r * ROW_LEN + i * 8);
            }
            rows.push(row);
        }
        let labels_start = matrix_start + n * ROW_LEN;
        let mut labels = Vec::with_capacity(n);
        for &b in &bytes[labels_start..labels_start + n] {
            let label = TrafficClass::from_index(usize::from(b))
                .ok_or(Error::InvalidLabelByte(b))?;
            labels.push(label);
        }

        Ok(KnnModel {
            k,
            rows,
            labels,
            normalizer: Normalizer { mins, maxs },
            normalize,
        })
    }
}

fn euclidean(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    let mut sum = 0.0;
    for i in 0..FEATURE_COUNT {
        let d = a[i] - b[i];
        sum += d * d;
    }
    sum.sqrt()
}
