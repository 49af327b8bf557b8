//! Deterministic, seeded generation of benign per-category traffic and
//! ICMP/TCP-SYN/UDP flood traffic.
//!
//! Profiles are calibrated so that bucketing at the 24 s reference
//! interval reproduces the per-category window aggregates the feature
//! set keys on: protocol mix, packets per window, packet size, and
//! destination-IP diversity. Benign traffic is an on/off burst process
//! with exponential inter-arrival times inside bursts; packet sizes are
//! normal draws with a per-profile floor.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::error::{Error, Result};
use crate::features::TrafficClass;
use crate::trace::{PacketRecord, Protocol, Trace};

/// Polling interval the per-window profile targets refer to.
pub const REFERENCE_INTERVAL_SECS: f64 = 24.0;

/// Fractions of ICMP/TCP/UDP/other packets; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolMix {
    pub icmp: f64,
    pub tcp: f64,
    pub udp: f64,
    pub other: f64,
}

impl ProtocolMix {
    fn sum(&self) -> f64 {
        self.icmp + self.tcp + self.udp + self.other
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Protocol {
        let x: f64 = rng.random();
        if x < self.icmp {
            Protocol::Icmp
        } else if x < self.icmp + self.tcp {
            Protocol::Tcp
        } else if x < self.icmp + self.tcp + self.udp {
            Protocol::Udp
        } else {
            Protocol::Other
        }
    }
}

/// Behavioral profile of one benign device category.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub category: TrafficClass,
    pub protocol_mix: ProtocolMix,
    /// Target mean packets per window at the reference interval.
    pub packets_per_window_mean: f64,
    /// Dispersion: mean packets per arrival event. 1.0 is a plain
    /// Poisson process; larger values emit back-to-back clumps.
    pub packet_clump_mean: f64,
    pub mean_packet_size: f64,
    pub packet_size_std: f64,
    pub min_packet_size: u32,
    /// Number of distinct destination peers.
    pub peer_pool_size: usize,
    /// Geometric decay of peer pick weight; 1.0 is uniform.
    pub peer_concentration: f64,
    /// Mean on/off burst durations in seconds; `burst_off_secs == 0`
    /// disables the off phase entirely.
    pub burst_on_secs: f64,
    pub burst_off_secs: f64,
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidProfile(what.to_string()))
            }
        };
        check(self.category.is_benign(), "category must be benign")?;
        check(
            (self.protocol_mix.sum() - 1.0).abs() < 1e-9,
            "protocol mix must sum to 1",
        )?;
        check(
            self.protocol_mix.icmp >= 0.0
                && self.protocol_mix.tcp >= 0.0
                && self.protocol_mix.udp >= 0.0
                && self.protocol_mix.other >= 0.0,
            "protocol fractions must be non-negative",
        )?;
        check(
            self.packets_per_window_mean > 0.0,
            "packets_per_window_mean must be positive",
        )?;
        check(self.packet_clump_mean >= 1.0, "packet_clump_mean must be >= 1")?;
        check(self.mean_packet_size > 0.0, "mean_packet_size must be positive")?;
        check(self.packet_size_std >= 0.0, "packet_size_std must be non-negative")?;
        check(self.peer_pool_size >= 1, "peer_pool_size must be >= 1")?;
        check(
            self.peer_concentration > 0.0 && self.peer_concentration <= 1.0,
            "peer_concentration must be in (0, 1]",
        )?;
        check(self.burst_on_secs > 0.0, "burst_on_secs must be positive")?;
        check(self.burst_off_secs >= 0.0, "burst_off_secs must be non-negative")?;
        Ok(())
    }

    /// Copy of the profile with bursting disabled (a stationary Poisson
    /// arrival process), for stability experiments.
    pub fn stationary(&self) -> Self {
        DeviceProfile {
            packet_clump_mean: 1.0,
            burst_on_secs: 1.0,
            burst_off_secs: 0.0,
            ..self.clone()
        }
    }
}

/// Built-in profiles for the three benign categories.
///
/// Switches/triggers are almost pure UDP (99.57%) in short dense bursts
/// with high per-window counts. Cameras are TCP-dominant with large
/// frames, about 6.9 packets per window, and one or two peers. Hubs mix
/// UDP and TCP, idle the most (about 4.8 packets per window), and spread
/// traffic across enough peers to average a destination diversity near
/// 0.6.
pub fn default_profiles() -> BTreeMap<TrafficClass, DeviceProfile> {
    let mut profiles = BTreeMap::new();
    profiles.insert(
        TrafficClass::SwitchTrigger,
        DeviceProfile {
            category: TrafficClass::SwitchTrigger,
            protocol_mix: ProtocolMix {
                icmp: 0.0,
                tcp: 0.0030,
                udp: 0.9957,
                other: 0.0013,
            },
            packets_per_window_mean: 20.0,
            packet_clump_mean: 6.0,
            mean_packet_size: 150.0,
            packet_size_std: 40.0,
            min_packet_size: 80,
            peer_pool_size: 3,
            peer_concentration: 0.6,
            burst_on_secs: 8.0,
            burst_off_secs: 4.0,
        },
    );
    profiles.insert(
        TrafficClass::Camera,
        DeviceProfile {
            category: TrafficClass::Camera,
            protocol_mix: ProtocolMix {
                icmp: 0.0,
                tcp: 0.85,
                udp: 0.10,
                other: 0.05,
            },
            packets_per_window_mean: 6.9,
            packet_clump_mean: 1.0,
            mean_packet_size: 900.0,
            packet_size_std: 200.0,
            min_packet_size: 200,
            peer_pool_size: 2,
            peer_concentration: 0.5,
            burst_on_secs: 1.0,
            burst_off_secs: 0.0,
        },
    );
    profiles.insert(
        TrafficClass::Hub,
        DeviceProfile {
            category: TrafficClass::Hub,
            protocol_mix: ProtocolMix {
                icmp: 0.01,
                tcp: 0.27,
                udp: 0.68,
                other: 0.04,
            },
            packets_per_window_mean: 4.8,
            packet_clump_mean: 1.0,
            mean_packet_size: 200.0,
            packet_size_std: 60.0,
            min_packet_size: 90,
            peer_pool_size: 4,
            peer_concentration: 1.0,
            burst_on_secs: 1.0,
            burst_off_secs: 0.0,
        },
    );
    profiles
}

/// Flood protocols, mirroring the hping3 attack kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodKind {
    Icmp,
    TcpSyn,
    Udp,
}

impl FloodKind {
    pub const ALL: [FloodKind; 3] = [FloodKind::Icmp, FloodKind::TcpSyn, FloodKind::Udp];

    fn protocol(self) -> Protocol {
        match self {
            FloodKind::Icmp => Protocol::Icmp,
            FloodKind::TcpSyn => Protocol::Tcp,
            FloodKind::Udp => Protocol::Udp,
        }
    }
}

/// A volumetric flood description.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: FloodKind,
    pub victim_ip: Ipv4Addr,
    /// Packets per second. Must keep a reference window at 500+ packets
    /// so the destination diversity of every flood window stays under
    /// the 0.002 attack signature bound.
    pub rate_pps: f64,
    pub duration_secs: u32,
    pub spoof_sources: bool,
    pub packet_size: u32,
}

/// Minimum packets a full reference window must hold.
pub const MIN_FLOOD_WINDOW_PACKETS: u64 = 500;

impl AttackSpec {
    pub fn new(kind: FloodKind, victim_ip: Ipv4Addr) -> Self {
        AttackSpec {
            kind,
            victim_ip,
            rate_pps: 100.0,
            duration_secs: 600,
            spoof_sources: true,
            packet_size: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let per_window = self.rate_pps * REFERENCE_INTERVAL_SECS;
        if per_window < MIN_FLOOD_WINDOW_PACKETS as f64 {
            return Err(Error::AttackRateTooLow {
                rate: self.rate_pps,
                min: MIN_FLOOD_WINDOW_PACKETS,
            });
        }
        Ok(())
    }
}

/// Generate one benign device's trace covering `duration_secs`, starting
/// at timestamp 0.
pub fn generate_benign(
    profile: &DeviceProfile,
    device_id: &str,
    duration_secs: u32,
    seed: u64,
) -> Trace {
    profile
        .validate()
        .unwrap_or_else(|e| panic!("invalid device profile: {e}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let src_ip = Ipv4Addr::new(192, 168, rng.random_range(0..4), rng.random_range(2..250));
    let peers: Vec<Ipv4Addr> = (0..profile.peer_pool_size)
        .map(|_| random_public_ip(&mut rng))
        .collect();
    // Peer pick weights decay geometrically with the concentration knob.
    let mut weights: Vec<f64> = (0..peers.len())
        .map(|i| profile.peer_concentration.powi(i as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let duty = if profile.burst_off_secs > 0.0 {
        profile.burst_on_secs / (profile.burst_on_secs + profile.burst_off_secs)
    } else {
        1.0
    };
    let avg_event_rate =
        profile.packets_per_window_mean / REFERENCE_INTERVAL_SECS / profile.packet_clump_mean;
    let on_event_rate = avg_event_rate / duty;
    let gap_dist = Exp::new(on_event_rate).expect("positive rate");

    let duration = f64::from(duration_secs);
    let size_dist = Normal::new(profile.mean_packet_size, profile.packet_size_std.max(1e-9))
        .expect("valid size distribution");

    let mut records = Vec::new();
    let mut t = 0.0f64;
    let mut on_left = sample_exp(&mut rng, profile.burst_on_secs);
    while t < duration {
        let gap = gap_dist.sample(&mut rng);
        if profile.burst_off_secs > 0.0 {
            // Spend any exhausted on-time plus one off-phase before the
            // next event lands.
            let mut remaining_gap = gap;
            while remaining_gap > on_left {
                remaining_gap -= on_left;
                t += on_left;
                t += sample_exp(&mut rng, profile.burst_off_secs);
                on_left = sample_exp(&mut rng, profile.burst_on_secs);
            }
            on_left -= remaining_gap;
            t += remaining_gap;
        } else {
            t += gap;
        }
        if t >= duration {
            break;
        }

        let clump = clump_size(&mut rng, profile.packet_clump_mean);
        for c in 0..clump {
            let ts = t + c as f64 * 1e-3;
            if ts >= duration {
                break;
            }
            records.push(PacketRecord {
                timestamp_us: (ts * 1e6) as i64,
                device: device_id.to_string(),
                src_ip,
                dst_ip: peers[pick_weighted(&mut rng, &weights)],
                protocol: profile.protocol_mix.sample(&mut rng),
                size: draw_size(&mut rng, &size_dist, profile.min_packet_size),
                tcp_syn: false,
            });
        }
    }
    Trace::new(records, format!("synth benign {}", profile.category))
}

/// Generate a flood trace starting at timestamp 0.
pub fn generate_attack(spec: &AttackSpec, attacker_id: &str, seed: u64) -> Trace {
    spec.validate()
        .unwrap_or_else(|e| panic!("invalid attack spec: {e}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let source_pool: Vec<Ipv4Addr> = if spec.spoof_sources {
        (0..256).map(|_| random_public_ip(&mut rng)).collect()
    } else {
        vec![random_public_ip(&mut rng)]
    };
    let gap_dist = Exp::new(spec.rate_pps).expect("positive rate");
    let size_dist = Normal::new(f64::from(spec.packet_size), 2.0).expect("valid size");
    let protocol = spec.kind.protocol();
    let duration = f64::from(spec.duration_secs);

    let mut records = Vec::new();
    let mut t = 0.0f64;
    loop {
        t += gap_dist.sample(&mut rng);
        if t >= duration {
            break;
        }
        let src_ip = source_pool[rng.random_range(0..source_pool.len())];
        records.push(PacketRecord {
            timestamp_us: (t * 1e6) as i64,
            device: attacker_id.to_string(),
            src_ip,
            dst_ip: spec.victim_ip,
            protocol,
            size: draw_size(&mut rng, &size_dist, 60),
            tcp_syn: spec.kind == FloodKind::TcpSyn,
        });
    }
    Trace::new(records, format!("synth flood {:?}", spec.kind))
}

fn sample_exp(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    Exp::new(1.0 / mean).expect("positive mean").sample(rng)
}

fn clump_size(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 1.0 {
        return 1;
    }
    let extra = Poisson::new(mean - 1.0).expect("positive mean").sample(rng);
    1 + extra as u64
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn draw_size(rng: &mut ChaCha8Rng, dist: &Normal<f64>, floor: u32) -> u32 {
    (dist.sample(rng).round().max(0.0) as u32).max(floor)
}

fn random_public_ip(rng: &mut ChaCha8Rng) -> Ipv4Addr {
    // First octet restricted to a plausible unicast range.
    Ipv4Addr::new(
        rng.random_range(11..200),
        rng.random_range(0..=255),
        rng.random_range(0..=255),
        rng.random_range(1..=254),
    )
}
