//! End-to-end calibration of the synthetic traffic generator: generated
//! traces are bucketed at the 24 s reference interval and the extracted
//! features must hit the per-category window aggregates the profiles
//! target.

use std::net::Ipv4Addr;

use flowguard_core::features::{extract, FeatureVector};
use flowguard_core::flow::{bucket_direct, PollingConfig};
use flowguard_core::synth::{
    default_profiles, generate_attack, generate_benign, AttackSpec, FloodKind,
};
use flowguard_core::trace::Trace;
use flowguard_core::TrafficClass;

const DURATION_SECS: u32 = 7200;

fn window_features(trace: &Trace) -> Vec<FeatureVector> {
    let cfg = PollingConfig::new(24, 0).unwrap();
    bucket_direct(trace, cfg)
        .iter()
        .map(|s| extract(s).unwrap())
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn benign_windows(category: TrafficClass, seed: u64) -> Vec<FeatureVector> {
    let profiles = default_profiles();
    let trace = generate_benign(
        &profiles[&category],
        &format!("{category}-cal"),
        DURATION_SECS,
        seed,
    );
    let windows = window_features(&trace);
    assert!(
        windows.len() >= 100,
        "{category}: need >= 100 windows, got {}",
        windows.len()
    );
    windows
}

#[test]
fn switch_trigger_udp_share_and_count() {
    let windows = benign_windows(TrafficClass::SwitchTrigger, 11);
    let udp = mean(windows.iter().map(|w| w.udp_pct));
    assert!(
        (udp - 99.57).abs() <= 2.0,
        "switch mean udp_pct {udp} not within 99.57 +/- 2"
    );
    let count = mean(windows.iter().map(|w| w.packet_count));
    assert!(
        (16.0..=24.0).contains(&count),
        "switch mean packet count {count} not within 20 +/- 20%"
    );
}

#[test]
fn camera_count_tcp_dominance_and_sizes() {
    let windows = benign_windows(TrafficClass::Camera, 12);
    let count = mean(windows.iter().map(|w| w.packet_count));
    assert!(
        (5.5..=8.3).contains(&count),
        "camera mean packet count {count} not within 6.9 +/- 20%"
    );
    let tcp = mean(windows.iter().map(|w| w.tcp_pct));
    assert!((tcp - 85.0).abs() <= 2.0, "camera mean tcp_pct {tcp}");
    let udp = mean(windows.iter().map(|w| w.udp_pct));
    assert!(tcp > udp, "camera TCP share must dominate UDP");

    // Cameras ship the largest frames of the three categories.
    let camera_size = mean(windows.iter().map(|w| w.mean_packet_size));
    let hub_size = mean(
        benign_windows(TrafficClass::Hub, 13)
            .iter()
            .map(|w| w.mean_packet_size),
    );
    let switch_size = mean(
        benign_windows(TrafficClass::SwitchTrigger, 14)
            .iter()
            .map(|w| w.mean_packet_size),
    );
    assert!(camera_size > hub_size && hub_size > switch_size);
}

#[test]
fn hub_count_mix_and_diversity() {
    let windows = benign_windows(TrafficClass::Hub, 15);
    let count = mean(windows.iter().map(|w| w.packet_count));
    assert!(
        (3.84..=5.76).contains(&count),
        "hub mean packet count {count} not within 4.8 +/- 20%"
    );
    let udp = mean(windows.iter().map(|w| w.udp_pct));
    assert!((udp - 68.0).abs() <= 2.0, "hub mean udp_pct {udp}");
    let diversity = mean(windows.iter().map(|w| w.ip_diversity));
    assert!(
        (0.5..=0.7).contains(&diversity),
        "hub mean ip diversity {diversity} not within 0.6 +/- 0.1"
    );
}

#[test]
fn camera_tcp_share_is_highest_of_all_categories() {
    let tcp_of = |c| mean(benign_windows(c, 16).iter().map(|w: &FeatureVector| w.tcp_pct));
    let camera = tcp_of(TrafficClass::Camera);
    assert!(camera > tcp_of(TrafficClass::Hub));
    assert!(camera > tcp_of(TrafficClass::SwitchTrigger));
}

#[test]
fn flood_windows_meet_attack_signature() {
    let victim = Ipv4Addr::new(192, 168, 1, 50);
    let benign_min_size: f64 = TrafficClass::ALL[..3]
        .iter()
        .flat_map(|c| benign_windows(*c, 17))
        .map(|w| w.mean_packet_size)
        .fold(f64::INFINITY, f64::min);

    for (i, kind) in FloodKind::ALL.into_iter().enumerate() {
        let spec = AttackSpec::new(kind, victim);
        let trace = generate_attack(&spec, "attacker-cal", 20 + i as u64);
        let windows = window_features(&trace);
        assert_eq!(windows.len(), 25, "600 s of flood at 24 s = 25 windows");
        for w in &windows {
            assert!(
                w.ip_diversity < 0.002,
                "{kind:?} window diversity {} breaches the 0.002 bound",
                w.ip_diversity
            );
            assert!(w.packet_count >= 500.0);
            assert!(
                w.mean_packet_size < benign_min_size,
                "{kind:?} window size {} not below benign minimum {benign_min_size}",
                w.mean_packet_size
            );
        }
        match kind {
            FloodKind::Icmp => assert!(windows.iter().all(|w| w.icmp_pct == 100.0)),
            FloodKind::Udp => assert!(windows.iter().all(|w| w.udp_pct == 100.0)),
            FloodKind::TcpSyn => {
                assert!(windows.iter().all(|w| w.tcp_pct == 100.0));
                assert!(trace.records.iter().all(|r| r.tcp_syn));
            }
        }
    }
}
