//! Polling-interval bucketing of traces into non-cumulative statistics.
//!
//! The unit of observation downstream is one [`NonCumulativeStat`]: the
//! per-device delta of flow counters over one polling interval. Two routes
//! produce it. [`bucket_direct`] assigns each packet straight to its
//! window. [`poll_and_subtract`] emulates what the controller actually
//! does against a switch that only reports cumulative counters: snapshot
//! at every poll boundary and subtract the previous snapshot. The two
//! must agree exactly; that equivalence is this module's central
//! invariant and is enforced by tests.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use crate::error::{Error, Result};
use crate::trace::{Protocol, Trace};

/// Polling configuration: window length in seconds and the timestamp at
/// which window 0 starts. Windows are right-exclusive
/// `[origin + k*T, origin + (k+1)*T)`; packets before the origin are not
/// observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PollingConfig {
    interval_secs: u32,
    origin_us: i64,
}

impl PollingConfig {
    pub const MIN_INTERVAL_SECS: u32 = 1;
    pub const MAX_INTERVAL_SECS: u32 = 120;

    pub fn new(interval_secs: u32, origin_us: i64) -> Result<Self> {
        if !(Self::MIN_INTERVAL_SECS..=Self::MAX_INTERVAL_SECS).contains(&interval_secs) {
            return Err(Error::InvalidInterval(interval_secs));
        }
        Ok(PollingConfig {
            interval_secs,
            origin_us,
        })
    }

    pub fn interval_secs(&self) -> u32 {
        self.interval_secs
    }

    pub fn origin_us(&self) -> i64 {
        self.origin_us
    }

    pub fn interval_us(&self) -> i64 {
        i64::from(self.interval_secs) * 1_000_000
    }

    /// Window index for a timestamp, or `None` for pre-origin packets.
    pub fn window_of(&self, timestamp_us: i64) -> Option<u64> {
        if timestamp_us < self.origin_us {
            return None;
        }
        Some(((timestamp_us - self.origin_us) / self.interval_us()) as u64)
    }
}

/// Monotone per-device counters since trace start, as a switch would
/// report them on each poll.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CumulativeCounters {
    pub packets_total: u64,
    pub bytes_total: u64,
    pub icmp: u64,
    pub tcp: u64,
    pub udp: u64,
    pub other: u64,
    pub dst_ip_counts: BTreeMap<Ipv4Addr, u64>,
}

impl CumulativeCounters {
    pub fn observe(&mut self, protocol: Protocol, size: u32, dst_ip: Ipv4Addr) {
        self.packets_total += 1;
        self.bytes_total += u64::from(size);
        match protocol {
            Protocol::Icmp => self.icmp += 1,
            Protocol::Tcp => self.tcp += 1,
            Protocol::Udp => self.udp += 1,
            Protocol::Other => self.other += 1,
        }
        *self.dst_ip_counts.entry(dst_ip).or_insert(0) += 1;
    }

    /// Difference of two cumulative snapshots (`self` minus `earlier`).
    fn delta_since(&self, earlier: &CumulativeCounters) -> CumulativeCounters {
        let mut dst_ip_counts = BTreeMap::new();
        for (ip, count) in &self.dst_ip_counts {
            let before = earlier.dst_ip_counts.get(ip).copied().unwrap_or(0);
            if *count > before {
                dst_ip_counts.insert(*ip, count - before);
            }
        }
        CumulativeCounters {
            packets_total: self.packets_total - earlier.packets_total,
            bytes_total: self.bytes_total - earlier.bytes_total,
            icmp: self.icmp - earlier.icmp,
            tcp: self.tcp - earlier.tcp,
            udp: self.udp - earlier.udp,
            other: self.other - earlier.other,
            dst_ip_counts,
        }
    }
}

/// One device's flow-counter delta over one polling window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonCumulativeStat {
    pub device: String,
    pub window_index: u64,
    pub packets: u64,
    pub bytes: u64,
    pub icmp: u64,
    pub tcp: u64,
    pub udp: u64,
    pub other: u64,
    /// Destination-IP multiset observed in this window.
    pub dst_ip_counts: BTreeMap<Ipv4Addr, u64>,
}

impl NonCumulativeStat {
    pub fn unique_dst_ips(&self) -> u64 {
        self.dst_ip_counts.len() as u64
    }
}

/// Assign each packet directly to its window and aggregate per
/// (device, window). Pre-origin packets are excluded; empty windows
/// produce no stat. Output is sorted by (device, window_index).
pub fn bucket_direct(trace: &Trace, cfg: PollingConfig) -> Vec<NonCumulativeStat> {
    let mut buckets: BTreeMap<(&str, u64), NonCumulativeStat> = BTreeMap::new();
    for r in &trace.records {
        let Some(window_index) = cfg.window_of(r.timestamp_us) else {
            continue;
        };
        let stat = buckets
            .entry((r.device.as_str(), window_index))
            .or_insert_with(|| NonCumulativeStat {
                device: r.device.clone(),
                window_index,
                packets: 0,
                bytes: 0,
                icmp: 0,
                tcp: 0,
                udp: 0,
                other: 0,
                dst_ip_counts: BTreeMap::new(),
            });
        stat.packets += 1;
        stat.bytes += u64::from(r.size);
        match r.protocol {
            Protocol::Icmp => stat.icmp += 1,
            Protocol::Tcp => stat.tcp += 1,
            Protocol::Udp => stat.udp += 1,
            Protocol::Other => stat.other += 1,
        }
        *stat.dst_ip_counts.entry(r.dst_ip).or_insert(0) += 1;
    }
    buckets.into_values().collect()
}

/// Emulate the controller's poll-and-subtract loop against cumulative
/// switch counters.
///
/// The poll at the origin establishes the baseline snapshot (absorbing any
/// pre-origin traffic); each later poll at `origin + k*T` emits, per
/// device, the difference from the previous snapshot as the stat for
/// window `k-1`. Zero-delta windows are suppressed. The result is
/// element-wise identical to [`bucket_direct`].
pub fn poll_and_subtract(trace: &Trace, cfg: PollingConfig) -> Vec<NonCumulativeStat> {
    let Some(last_window) = trace
        .records
        .iter()
        .filter_map(|r| cfg.window_of(r.timestamp_us))
        .max()
    else {
        return Vec::new();
    };

    let mut cumulative: BTreeMap<&str, CumulativeCounters> = BTreeMap::new();
    let mut previous_poll: BTreeMap<&str, CumulativeCounters> = BTreeMap::new();
    let mut stats = Vec::new();
    let mut next = trace.records.iter().peekable();

    // Poll k covers window k-1; poll 0 is the baseline.
    for poll in 0..=last_window + 1 {
        let poll_time = cfg.origin_us() + poll as i64 * cfg.interval_us();
        while let Some(r) = next.peek() {
            if r.timestamp_us >= poll_time {
                break;
            }
            cumulative
                .entry(r.device.as_str())
                .or_default()
                .observe(r.protocol, r.size, r.dst_ip);
            next.next();
        }
        if poll == 0 {
            previous_poll = cumulative.clone();
            continue;
        }
        for (device, counters) in &cumulative {
            let baseline = previous_poll.entry(device).or_default();
            let delta = counters.delta_since(baseline);
            if delta.packets_total == 0 {
                continue;
            }
            stats.push(NonCumulativeStat {
                device: (*device).to_string(),
                window_index: poll - 1,
                packets: delta.packets_total,
                bytes: delta.bytes_total,
                icmp: delta.icmp,
                tcp: delta.tcp,
                udp: delta.udp,
                other: delta.other,
                dst_ip_counts: delta.dst_ip_counts,
            });
        }
        previous_poll = cumulative.clone();
    }

    stats.sort_by(|a, b| (&a.device, a.window_index).cmp(&(&b.device, b.window_index)));
    stats
}

pub const STATS_CSV_HEADER: &str =
    "device,window_index,packets,bytes,icmp,tcp,udp,other,unique_dst_ips";

/// Export stats as CSV.
pub fn stats_to_csv(stats: &[NonCumulativeStat]) -> String {
    let mut out = String::from(STATS_CSV_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.device,
            s.window_index,
            s.packets,
            s.bytes,
            s.icmp,
            s.tcp,
            s.udp,
            s.other,
            s.unique_dst_ips()
        ));
    }
    out
}
