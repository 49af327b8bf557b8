//! Shared fixtures for the pipeline benchmarks: a paper-scale KNN model
//! (1820 rows) and a mixed benign/flood trace, both seeded and built once.

use std::net::Ipv4Addr;

use flowguard_core::eval::{label_windows, split_balance};
use flowguard_core::features::{FeatureVector, LabeledSample, TrafficClass};
use flowguard_core::knn::KnnModel;
use flowguard_core::seeds;
use flowguard_core::synth::{
    default_profiles, generate_attack, generate_benign, AttackSpec, FloodKind,
};
use flowguard_core::trace::Trace;

pub const MODEL_ROWS_PER_CLASS: usize = 455;

/// A labeled benign+flood trace pair long enough to fill a 1820-row model.
pub fn corpus() -> (Trace, Trace, std::collections::BTreeMap<String, TrafficClass>) {
    let profiles = default_profiles();
    let mut benign = Vec::new();
    let mut labels = std::collections::BTreeMap::new();
    for (category, profile) in &profiles {
        for d in 0..2 {
            let id = format!("{category}-{d}");
            benign.push(generate_benign(profile, &id, 9600, seeds::derive(9, &id)));
            labels.insert(id, *category);
        }
    }
    let mut attack = Vec::new();
    for kind in FloodKind::ALL {
        for v in 0..2u8 {
            let id = format!("attacker-{kind:?}-{v}");
            let mut spec = AttackSpec::new(kind, Ipv4Addr::new(10, 0, v + 1, 9));
            spec.rate_pps = 30.0;
            spec.duration_secs = 3600;
            attack.push(generate_attack(&spec, &id, seeds::derive(9, &id)));
        }
    }
    (Trace::merged(benign), Trace::merged(attack), labels)
}

/// A fitted 1820-row model plus held-out query vectors.
pub fn paper_scale_model() -> (KnnModel, Vec<FeatureVector>) {
    let (benign, attack, labels) = corpus();
    let samples = label_windows(&benign, &attack, &labels, 24).expect("windows");
    let (train, test) = split_balance(&samples, 0.75, 3).expect("split");

    let mut per_class = std::collections::BTreeMap::new();
    let mut rows: Vec<LabeledSample> = Vec::new();
    for s in &train {
        let n = per_class.entry(s.label).or_insert(0usize);
        if *n < MODEL_ROWS_PER_CLASS {
            rows.push(s.clone());
            *n += 1;
        }
    }
    assert_eq!(rows.len(), 4 * MODEL_ROWS_PER_CLASS);
    let model = KnnModel::fit(&rows, 5).expect("fit");
    let queries = test.iter().take(256).map(|s| s.features).collect();
    (model, queries)
}
