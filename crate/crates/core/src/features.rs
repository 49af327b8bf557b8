//! The six stateless flow features and train-time min-max normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::NonCumulativeStat;

/// Number of features in a [`FeatureVector`].
pub const FEATURE_COUNT: usize = 6;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "icmp_pct",
    "tcp_pct",
    "udp_pct",
    "packet_count",
    "mean_packet_size",
    "ip_diversity",
];

/// Traffic classes. The declaration order doubles as the deterministic
/// tie-break order for KNN votes.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum TrafficClass {
    SwitchTrigger,
    Camera,
    Hub,
    Ddos,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 4] = [
        TrafficClass::SwitchTrigger,
        TrafficClass::Camera,
        TrafficClass::Hub,
        TrafficClass::Ddos,
    ];

    pub fn index(self) -> usize {
        match self {
            TrafficClass::SwitchTrigger => 0,
            TrafficClass::Camera => 1,
            TrafficClass::Hub => 2,
            TrafficClass::Ddos => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn is_benign(self) -> bool {
        self != TrafficClass::Ddos
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrafficClass::SwitchTrigger => "switch_trigger",
            TrafficClass::Camera => "camera",
            TrafficClass::Hub => "hub",
            TrafficClass::Ddos => "ddos",
        };
        f.write_str(s)
    }
}

impl FromStr for TrafficClass {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "switch_trigger" => Ok(TrafficClass::SwitchTrigger),
            "camera" => Ok(TrafficClass::Camera),
            "hub" => Ok(TrafficClass::Hub),
            "ddos" => Ok(TrafficClass::Ddos),
            _ => Err(()),
        }
    }
}

/// The six stateless features for one (device, window).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Percentage of ICMP packets, 0..=100.
    pub icmp_pct: f64,
    /// Percentage of TCP packets, 0..=100.
    pub tcp_pct: f64,
    /// Percentage of UDP packets, 0..=100.
    pub udp_pct: f64,
    /// Packets in the window.
    pub packet_count: f64,
    /// Mean on-wire frame length in bytes.
    pub mean_packet_size: f64,
    /// Unique destination IPs divided by packet count, in (0, 1].
    pub ip_diversity: f64,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; FEATURE_COUNT] {
        [
            self.icmp_pct,
            self.tcp_pct,
            self.udp_pct,
            self.packet_count,
            self.mean_packet_size,
            self.ip_diversity,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            icmp_pct: a[0],
            tcp_pct: a[1],
            udp_pct: a[2],
            packet_count: a[3],
            mean_packet_size: a[4],
            ip_diversity: a[5],
        }
    }
}

/// A feature vector with its class label and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: TrafficClass,
    pub device: String,
    pub window_index: u64,
}

/// Compute the six features from one non-cumulative statistic.
pub fn extract(stat: &NonCumulativeStat) -> Result<FeatureVector> {
    if stat.packets == 0 {
        return Err(Error::EmptyWindow);
    }
    let packets = stat.packets as f64;
    Ok(FeatureVector {
        icmp_pct: 100.0 * stat.icmp as f64 / packets,
        tcp_pct: 100.0 * stat.tcp as f64 / packets,
        udp_pct: 100.0 * stat.udp as f64 / packets,
        packet_count: packets,
        mean_packet_size: stat.bytes as f64 / packets,
        ip_diversity: stat.unique_dst_ips() as f64 / packets,
    })
}

/// Per-feature min/max bounds fitted on training data. Applying the
/// normalizer maps training values into [0, 1]; out-of-range test values
/// are clamped, and degenerate features (max == min) map to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub mins: [f64; FEATURE_COUNT],
    pub maxs: [f64; FEATURE_COUNT],
}

/// Fit per-feature min/max bounds over a sample set.
pub fn fit_normalizer(samples: &[FeatureVector]) -> Result<Normalizer> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut mins = samples[0].to_array();
    let mut maxs = mins;
    for v in &samples[1..] {
        for (i, x) in v.to_array().iter().enumerate() {
            mins[i] = mins[i].min(*x);
            maxs[i] = maxs[i].max(*x);
        }
    }
    Ok(Normalizer { mins, maxs })
}

/// Apply fitted bounds to a feature vector.
pub fn apply_normalizer(n: &Normalizer, v: &FeatureVector) -> FeatureVector {
    let raw = v.to_array();
    let mut out = [0.0; FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        let range = n.maxs[i] - n.mins[i];
        if range > 0.0 {
            out[i] = ((raw[i] - n.mins[i]) / range).clamp(0.0, 1.0);
        }
    }
    FeatureVector::from_array(out)
}

pub const DATASET_CSV_HEADER: &str =
    "device,window_index,icmp_pct,tcp_pct,udp_pct,packet_count,mean_packet_size,ip_diversity,label";

/// Serialize labeled samples as the feature dataset CSV.
pub fn write_dataset(samples: &[LabeledSample]) -> String {
    let mut out = String::from(DATASET_CSV_HEADER);
    out.push('\n');
    for s in samples {
        let f = &s.features;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.device,
            s.window_index,
            f.icmp_pct,
            f.tcp_pct,
            f.udp_pct,
            f.packet_count,
            f.mean_packet_size,
            f.ip_diversity,
            s.label
        ));
    }
    out
}

/// Parse the feature dataset CSV.
pub fn read_dataset(text: &str) -> Result<Vec<LabeledSample>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == DATASET_CSV_HEADER => {}
        _ => {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("expected header `{DATASET_CSV_HEADER}`"),
            })
        }
    }
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedRow {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(bad(format!("expected 9 fields, got {}", fields.len())));
        }
        let window_index: u64 = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad window_index `{}`", fields[1])))?;
        let mut values = [0.0; FEATURE_COUNT];
        for (i, v) in values.iter_mut().enumerate() {
            *v = fields[2 + i]
                .parse()
                .map_err(|_| bad(format!("bad {} `{}`", FEATURE_NAMES[i], fields[2 + i])))?;
        }
        let label: TrafficClass = fields[8]
            .parse()
            .map_err(|_| bad(format!("unknown label `{}`", fields[8])))?;
        samples.push(LabeledSample {
            features: FeatureVector::from_array(values),
            label,
            device: fields[0].to_string(),
            window_index,
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;
    use std::net::Ipv4Addr;

    fn stat(
        packets: u64,
        (icmp, tcp, udp, other): (u64, u64, u64, u64),
        bytes: u64,
        dst_counts: &[(Ipv4Addr, u64)],
    ) -> NonCumulativeStat {
        NonCumulativeStat {
            device: "dev-a".to_string(),
            window_index: 0,
            packets,
            bytes,
            icmp,
            tcp,
            udp,
            other,
            dst_ip_counts: BTreeMap::from_iter(dst_counts.iter().copied()),
        }
    }

    #[test]
    fn extract_hand_computed_window() {
        // 4 packets: 3 TCP + 1 UDP, 360 bytes total, two destinations
        // hit twice each. Expected values computed by hand per-packet:
        // tcp 3/4 = 75%, udp 1/4 = 25%, mean size 360/4 = 90,
        // diversity 2 unique / 4 packets = 0.5.
        let a = Ipv4Addr::new(8, 8, 8, 8);
        let b = Ipv4Addr::new(1, 1, 1, 1);
        let v = extract(&stat(4, (0, 3, 1, 0), 360, &[(a, 2), (b, 2)])).unwrap();
        assert_eq!(v.icmp_pct, 0.0);
        assert_eq!(v.tcp_pct, 75.0);
        assert_eq!(v.udp_pct, 25.0);
        assert_eq!(v.packet_count, 4.0);
        assert_eq!(v.mean_packet_size, 90.0);
        assert_eq!(v.ip_diversity, 0.5);
    }

    #[test]
    fn all_udp_single_destination() {
        let dst = Ipv4Addr::new(8, 8, 8, 8);
        for n in [1u64, 10, 250] {
            let v = extract(&stat(n, (0, 0, n, 0), n * 100, &[(dst, n)])).unwrap();
            assert_eq!(v.udp_pct, 100.0);
            assert_eq!(v.ip_diversity, 1.0 / n as f64);
        }
    }

    #[test]
    fn flood_window_sits_below_attack_diversity_bound() {
        // 1000 same-size packets to one victim: diversity 0.001 < 0.002.
        let victim = Ipv4Addr::new(10, 0, 0, 9);
        let v = extract(&stat(1000, (0, 0, 1000, 0), 64_000, &[(victim, 1000)])).unwrap();
        assert_eq!(v.ip_diversity, 0.001);
        assert!(v.ip_diversity < 0.002);
    }

    #[test]
    fn extract_rejects_empty_window() {
        assert!(matches!(
            extract(&stat(0, (0, 0, 0, 0), 0, &[])),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn normalizer_degenerate_single_sample_maps_to_zero() {
        let v = FeatureVector::from_array([1.0, 2.0, 3.0, 4.0, 5.0, 0.5]);
        let n = fit_normalizer(&[v]).unwrap();
        assert_eq!(apply_normalizer(&n, &v).to_array(), [0.0; FEATURE_COUNT]);
    }

    #[test]
    fn normalizer_midpoint_maps_to_half() {
        let lo = FeatureVector::from_array([0.0, 10.0, 2.0, 4.0, 100.0, 0.2]);
        let hi = FeatureVector::from_array([0.0, 20.0, 4.0, 8.0, 200.0, 0.4]);
        let mid = FeatureVector::from_array([0.0, 15.0, 3.0, 6.0, 150.0, 0.3]);
        let n = fit_normalizer(&[lo, hi]).unwrap();
        let out = apply_normalizer(&n, &mid).to_array();
        assert_eq!(out[0], 0.0); // degenerate feature
        for x in &out[1..] {
            assert!((x - 0.5).abs() < 1e-12);
        }
        assert_eq!(apply_normalizer(&n, &lo).to_array()[1..], [0.0; 5]);
        assert_eq!(apply_normalizer(&n, &hi).to_array()[1..], [1.0; 5]);
    }

    #[test]
    fn normalizer_clamps_out_of_range() {
        let lo = FeatureVector::from_array([0.0, 0.0, 0.0, 1.0, 100.0, 0.1]);
        let hi = FeatureVector::from_array([10.0, 10.0, 10.0, 9.0, 300.0, 0.9]);
        let n = fit_normalizer(&[lo, hi]).unwrap();
        let above = FeatureVector::from_array([20.0, 20.0, 20.0, 100.0, 900.0, 1.0]);
        assert_eq!(apply_normalizer(&n, &above).to_array(), [1.0; FEATURE_COUNT]);
        let below = FeatureVector::from_array([-1.0, -1.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(apply_normalizer(&n, &below).to_array(), [0.0; FEATURE_COUNT]);
    }

    #[test]
    fn empty_fit_rejected() {
        assert!(matches!(fit_normalizer(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn dataset_round_trip() {
        let samples = vec![
            LabeledSample {
                features: FeatureVector::from_array([0.0, 75.0, 25.0, 4.0, 90.0, 0.5]),
                label: TrafficClass::Camera,
                device: "cam-0".to_string(),
                window_index: 3,
            },
            LabeledSample {
                features: FeatureVector::from_array([100.0, 0.0, 0.0, 2400.0, 64.0, 1.0 / 2400.0]),
                label: TrafficClass::Ddos,
                device: "attacker-0".to_string(),
                window_index: 11,
            },
        ];
        let parsed = read_dataset(&write_dataset(&samples)).unwrap();
        assert_eq!(parsed, samples);
    }

    #[test]
    fn dataset_rejects_unknown_label() {
        let text = format!("{DATASET_CSV_HEADER}\nd,0,0,0,0,1,60,1,printer\n");
        assert!(matches!(
            read_dataset(&text),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    fn arb_vector() -> impl Strategy<Value = FeatureVector> {
        prop::array::uniform6(-1e6f64..1e6).prop_map(FeatureVector::from_array)
    }

    proptest! {
        #[test]
        fn normalized_training_samples_land_in_unit_cube(
            vecs in prop::collection::vec(arb_vector(), 1..50)
        ) {
            let n = fit_normalizer(&vecs).unwrap();
            for v in &vecs {
                for x in apply_normalizer(&n, v).to_array() {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
        }
    }
}
