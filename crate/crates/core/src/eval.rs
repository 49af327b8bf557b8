//! Dataset splitting and balancing, accuracy reporting, the polling
//! interval sweep, and inference latency measurement.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{
    extract, fit_normalizer, apply_normalizer, FeatureVector, LabeledSample, TrafficClass,
    FEATURE_COUNT,
};
use crate::flow::{bucket_direct, PollingConfig};
use crate::knn::KnnModel;
use crate::trace::Trace;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Per-class and overall accuracy plus the full confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Accuracy per class, for classes present in the test set.
    pub per_class_accuracy: BTreeMap<TrafficClass, f64>,
    pub overall_accuracy: f64,
    /// `confusion[actual][predicted]` counts, indexed by class order.
    pub confusion: [[u64; 4]; 4],
    /// Test sample count per class.
    pub class_counts: BTreeMap<TrafficClass, usize>,
}

/// Downsample every class to the smallest class size, then split each
/// class `train_fraction`/rest. Both steps are driven by the seed and are
/// deterministic; classes are processed in declaration order.
pub fn split_balance(
    samples: &[LabeledSample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>)> {
    let mut by_class: BTreeMap<TrafficClass, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_class.entry(s.label).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::SingleClass);
    }
    for (class, idxs) in &by_class {
        if idxs.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: *class,
                have: idxs.len(),
                need: 2,
            });
        }
    }
    let min_size = by_class.values().map(Vec::len).min().unwrap();
    let train_per_class = (train_fraction * min_size as f64).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for idxs in by_class.values_mut() {
        // One shuffle covers both steps: the first `min_size` indices are
        // the uniform downsample, split at `train_per_class`.
        idxs.shuffle(&mut rng);
        for (pos, &i) in idxs[..min_size].iter().enumerate() {
            if pos < train_per_class {
                train.push(samples[i].clone());
            } else {
                test.push(samples[i].clone());
            }
        }
    }
    Ok((train, test))
}

/// Score a model against a labeled test set.
pub fn evaluate(model: &KnnModel, test: &[LabeledSample]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut confusion = [[0u64; 4]; 4];
    let mut class_counts: BTreeMap<TrafficClass, usize> = BTreeMap::new();
    for s in test {
        let predicted = model.predict(&s.features).label;
        confusion[s.label.index()][predicted.index()] += 1;
        *class_counts.entry(s.label).or_insert(0) += 1;
    }
    let mut per_class_accuracy = BTreeMap::new();
    for (class, count) in &class_counts {
        let correct = confusion[class.index()][class.index()];
        per_class_accuracy.insert(*class, correct as f64 / *count as f64);
    }
    let correct_total: u64 = (0..4).map(|i| confusion[i][i]).sum();
    Ok(EvalReport {
        per_class_accuracy,
        overall_accuracy: correct_total as f64 / test.len() as f64,
        confusion,
        class_counts,
    })
}

/// One sweep entry: the evaluation report plus the per-feature standard
/// deviation of normalized features at that interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalEval {
    pub report: EvalReport,
    /// Std-dev of each normalized feature, computed within each class and
    /// averaged across classes (normalizer fitted on all samples at this
    /// interval).
    pub feature_stddev: [f64; FEATURE_COUNT],
}

/// Sweep results keyed by polling interval in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub entries: BTreeMap<u32, IntervalEval>,
}

/// Bucket both traces at `interval`, extract and label samples, then
/// balance, split, fit, and evaluate. Devices in the benign trace take
/// their label from `benign_labels`; every attack-trace device is DDoS.
/// Window 0 is anchored at the earliest timestamp across both traces.
pub fn evaluate_interval(
    benign: &Trace,
    attack: &Trace,
    benign_labels: &BTreeMap<String, TrafficClass>,
    interval: u32,
    seed: u64,
    k: usize,
) -> Result<IntervalEval> {
    let samples = label_windows(benign, attack, benign_labels, interval)?;
    for class in TrafficClass::ALL {
        if !samples.iter().any(|s| s.label == class) {
            return Err(Error::InsufficientWindows { interval });
        }
    }
    let feature_stddev = per_class_mean_stddev(&samples)?;
    let (train, test) =
        split_balance(&samples, DEFAULT_TRAIN_FRACTION, seed).map_err(|e| match e {
            Error::ClassTooSmall { .. } | Error::SingleClass => {
                Error::InsufficientWindows { interval }
            }
            other => other,
        })?;
    let model = KnnModel::fit(&train, k).map_err(|e| match e {
        Error::TooFewSamples { .. } | Error::SingleClass => {
            Error::InsufficientWindows { interval }
        }
        other => other,
    })?;
    let report = evaluate(&model, &test)?;
    Ok(IntervalEval {
        report,
        feature_stddev,
    })
}

/// Bucket, extract, and label the windows of a benign/attack trace pair
/// without evaluating. Shared by the sweep and the feature export path.
pub fn label_windows(
    benign: &Trace,
    attack: &Trace,
    benign_labels: &BTreeMap<String, TrafficClass>,
    interval: u32,
) -> Result<Vec<LabeledSample>> {
    let origin = benign
        .records
        .iter()
        .chain(&attack.records)
        .map(|r| r.timestamp_us)
        .min()
        .ok_or(Error::InsufficientWindows { interval })?;
    let cfg = PollingConfig::new(interval, origin)?;

    let mut samples = Vec::new();
    for stat in bucket_direct(benign, cfg) {
        let label = benign_labels
            .get(&stat.device)
            .copied()
            .ok_or_else(|| Error::UnlabeledDevice {
                device: stat.device.clone(),
            })?;
        samples.push(LabeledSample {
            features: extract(&stat)?,
            label,
            device: stat.device,
            window_index: stat.window_index,
        });
    }
    for stat in bucket_direct(attack, cfg) {
        samples.push(LabeledSample {
            features: extract(&stat)?,
            label: TrafficClass::Ddos,
            device: stat.device,
            window_index: stat.window_index,
        });
    }
    Ok(samples)
}

fn per_class_mean_stddev(samples: &[LabeledSample]) -> Result<[f64; FEATURE_COUNT]> {
    let vectors: Vec<FeatureVector> = samples.iter().map(|s| s.features).collect();
    let normalizer = fit_normalizer(&vectors)?;

    let mut by_class: BTreeMap<TrafficClass, Vec<[f64; FEATURE_COUNT]>> = BTreeMap::new();
    for s in samples {
        by_class
            .entry(s.label)
            .or_default()
            .push(apply_normalizer(&normalizer, &s.features).to_array());
    }

    let mut acc = [0.0; FEATURE_COUNT];
    for rows in by_class.values() {
        let n = rows.len() as f64;
        for i in 0..FEATURE_COUNT {
            let mean = rows.iter().map(|r| r[i]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / n;
            acc[i] += var.sqrt();
        }
    }
    let classes = by_class.len() as f64;
    for x in &mut acc {
        *x /= classes;
    }
    Ok(acc)
}

/// Run [`evaluate_interval`] for each interval.
pub fn sweep_intervals(
    benign: &Trace,
    attack: &Trace,
    benign_labels: &BTreeMap<String, TrafficClass>,
    intervals: &[u32],
    seed: u64,
    k: usize,
) -> Result<SweepResult> {
    let mut entries = BTreeMap::new();
    for &interval in intervals {
        let entry = evaluate_interval(benign, attack, benign_labels, interval, seed, k)?;
        entries.insert(interval, entry);
    }
    Ok(SweepResult { entries })
}

pub const SWEEP_CSV_HEADER: &str = "interval,overall_acc,acc_switch,acc_camera,acc_hub,acc_ddos,\
                                    std_icmp,std_tcp,std_udp,std_count,std_size,std_div";

/// Export sweep results as CSV.
pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for (interval, entry) in &result.entries {
        out.push_str(&interval.to_string());
        out.push_str(&format!(",{}", entry.report.overall_accuracy));
        for class in TrafficClass::ALL {
            match entry.report.per_class_accuracy.get(&class) {
                Some(acc) => out.push_str(&format!(",{acc}")),
                None => out.push(','),
            }
        }
        for std in entry.feature_stddev {
            out.push_str(&format!(",{std}"));
        }
        out.push('\n');
    }
    out
}

pub const REPORT_CSV_HEADER: &str = "class,test_count,correct,accuracy";

/// Export an evaluation report as CSV (per-class rows plus an overall row).
pub fn report_to_csv(report: &EvalReport) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for (class, count) in &report.class_counts {
        let correct = report.confusion[class.index()][class.index()];
        out.push_str(&format!(
            "{},{},{},{}\n",
            class, count, correct, report.per_class_accuracy[class]
        ));
    }
    let total: usize = report.class_counts.values().sum();
    let correct: u64 = (0..4).map(|i| report.confusion[i][i]).sum();
    out.push_str(&format!(
        "overall,{},{},{}\n",
        total, correct, report.overall_accuracy
    ));
    out
}

/// Render a report as a human-readable table with the confusion matrix.
pub fn report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>10} {:>10} {:>10}\n",
        "class", "samples", "correct", "accuracy"
    ));
    for (class, count) in &report.class_counts {
        let correct = report.confusion[class.index()][class.index()];
        out.push_str(&format!(
            "{:<16} {:>10} {:>10} {:>9.1}%\n",
            class.to_string(),
            count,
            correct,
            100.0 * report.per_class_accuracy[class]
        ));
    }
    let total: usize = report.class_counts.values().sum();
    out.push_str(&format!(
        "{:<16} {:>10} {:>21.1}%\n\n",
        "overall",
        total,
        100.0 * report.overall_accuracy
    ));
    out.push_str("confusion matrix (rows = actual, columns = predicted):\n");
    out.push_str(&format!("{:<16}", ""));
    for class in TrafficClass::ALL {
        out.push_str(&format!(" {:>14}", class.to_string()));
    }
    out.push('\n');
    for actual in TrafficClass::ALL {
        out.push_str(&format!("{:<16}", actual.to_string()));
        for predicted in TrafficClass::ALL {
            out.push_str(&format!(
                " {:>14}",
                report.confusion[actual.index()][predicted.index()]
            ));
        }
        out.push('\n');
    }
    out
}

/// Wall-clock per-prediction latency over `trials` single predictions,
/// cycling through `queries`. The first five predictions are warm-up and
/// are not measured. Returns (mean_ms, p95_ms). Runs single-threaded.
pub fn benchmark_latency(
    model: &KnnModel,
    queries: &[FeatureVector],
    trials: usize,
) -> (f64, f64) {
    assert!(!queries.is_empty(), "need at least one query");
    let mut cycle = queries.iter().cycle();
    for _ in 0..5 {
        std::hint::black_box(model.predict(cycle.next().unwrap()));
    }
    let mut latencies_ms: Vec<f64> = Vec::with_capacity(trials);
    for _ in 0..trials {
        let q = cycle.next().unwrap();
        let start = Instant::now();
        std::hint::black_box(model.predict(q));
        latencies_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let mean = latencies_ms.iter().sum::<f64>() / latencies_ms.len() as f64;
    let mut sorted = latencies_ms;
    sorted.sort_by(f64::total_cmp);
    let p95_idx = ((sorted.len() as f64 * 0.95).ceil() as usize).saturating_sub(1);
    (mean, sorted[p95_idx])
}
