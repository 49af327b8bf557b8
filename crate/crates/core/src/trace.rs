//! Packet trace ingestion and the canonical CSV interchange format.
//!
//! Two inputs are supported: classic pcap files (Ethernet link type only)
//! and a canonical CSV packet-record format. CSV is the interchange format
//! for the rest of the pipeline; pcap is an ingestion adapter. Round-trips
//! through [`write_csv`]/[`read_csv`] are field-exact.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use crate::error::{Error, Result};

/// IP protocol of a packet, collapsed to the three protocols the feature
/// set distinguishes plus a residual bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Icmp,
    Tcp,
    Udp,
    Other,
}

impl Protocol {
    /// Map an IPv4 protocol number onto the taxonomy.
    pub fn from_ip_number(num: u8) -> Self {
        match num {
            1 => Protocol::Icmp,
            6 => Protocol::Tcp,
            17 => Protocol::Udp,
            _ => Protocol::Other,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Protocol::Icmp => "ICMP",
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Other => "OTHER",
        };
        f.write_str(s)
    }
}

impl FromStr for Protocol {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.to_ascii_uppercase().as_str() {
            "ICMP" => Ok(Protocol::Icmp),
            "TCP" => Ok(Protocol::Tcp),
            "UDP" => Ok(Protocol::Udp),
            "OTHER" => Ok(Protocol::Other),
            _ => Err(()),
        }
    }
}

/// One captured or synthesized packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    /// Microseconds since the Unix epoch (or since trace start for
    /// synthetic traffic).
    pub timestamp_us: i64,
    /// Opaque device identifier the packet is attributed to.
    pub device: String,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub protocol: Protocol,
    /// Original on-wire frame length in bytes.
    pub size: u32,
    /// True only for TCP packets with the SYN flag set.
    pub tcp_syn: bool,
}

/// An ordered sequence of packet records.
///
/// Records are kept sorted by timestamp; the sort is stable, so records
/// with equal timestamps keep their input order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub records: Vec<PacketRecord>,
    pub source_note: String,
}

impl Trace {
    pub fn new(mut records: Vec<PacketRecord>, source_note: impl Into<String>) -> Self {
        records.sort_by_key(|r| r.timestamp_us);
        Trace {
            records,
            source_note: source_note.into(),
        }
    }

    /// Merge traces into one, re-sorting by timestamp (stable).
    pub fn merged<I: IntoIterator<Item = Trace>>(traces: I) -> Self {
        let mut records = Vec::new();
        for t in traces {
            records.extend(t.records);
        }
        Trace::new(records, "merged")
    }

    /// Copy of the trace with every timestamp shifted by `delta_us`.
    pub fn shifted(&self, delta_us: i64) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| PacketRecord {
                timestamp_us: r.timestamp_us + delta_us,
                ..r.clone()
            })
            .collect();
        Trace {
            records,
            source_note: self.source_note.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// How pcap frames are attributed to a device.
///
/// The default is the source MAC: a flood spoofs source IPs freely, while
/// the switch port/MAC stays fixed, so MAC attribution survives spoofing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttributionRule {
    #[default]
    SourceMac,
    SourceIp,
}

const PCAP_MAGIC_LE: u32 = 0xa1b2_c3d4;
const PCAP_MAGIC_BE: u32 = 0xd4c3_b2a1;
const GLOBAL_HEADER_LEN: usize = 24;
const PACKET_HEADER_LEN: usize = 16;
const ETHERTYPE_IPV4: u16 = 0x0800;
const LINKTYPE_ETHERNET: u32 = 1;

fn read_u32(bytes: &[u8], off: usize, big_endian: bool) -> u32 {
    let b: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
    if big_endian {
        u32::from_be_bytes(b)
    } else {
        u32::from_le_bytes(b)
    }
}

/// Parse a classic pcap byte stream into a trace.
///
/// Only the classic format (microsecond timestamps) with Ethernet link
/// type is accepted; every frame becomes one record. Frames that are not
/// Ethernet/IPv4 are emitted with protocol `OTHER` and zeroed addresses.
/// A truncated trailing packet ends parsing cleanly at the last complete
/// record.
pub fn read_pcap(bytes: &[u8], attribution: AttributionRule) -> Result<Trace> {
    if bytes.len() < 4 {
        return Err(Error::BadMagic);
    }
    let magic = u32::from_le_bytes(bytes[..4].try_into().unwrap());
    let big_endian = match magic {
        PCAP_MAGIC_LE => false,
        PCAP_MAGIC_BE => true,
        _ => return Err(Error::BadMagic),
    };
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(Error::Truncated);
    }
    let network = read_u32(bytes, 20, big_endian);
    if network != LINKTYPE_ETHERNET {
        return Err(Error::UnsupportedLinkType(network));
    }

    let mut records = Vec::new();
    let mut off = GLOBAL_HEADER_LEN;
    while off + PACKET_HEADER_LEN <= bytes.len() {
        let ts_sec = read_u32(bytes, off, big_endian);
        let ts_usec = read_u32(bytes, off + 4, big_endian);
        let incl_len = read_u32(bytes, off + 8, big_endian) as usize;
        let orig_len = read_u32(bytes, off + 12, big_endian);
        let data_start = off + PACKET_HEADER_LEN;
        // Truncated packet data: stop at the last complete record.
        if incl_len > bytes.len() - data_start {
            break;
        }
        let frame = &bytes[data_start..data_start + incl_len];
        let timestamp_us = i64::from(ts_sec) * 1_000_000 + i64::from(ts_usec);
        records.push(parse_frame(frame, timestamp_us, orig_len, attribution));
        off = data_start + incl_len;
    }
    Ok(Trace::new(records, "pcap"))
}

fn parse_frame(
    frame: &[u8],
    timestamp_us: i64,
    orig_len: u32,
    attribution: AttributionRule,
) -> PacketRecord {
    let src_mac = if frame.len() >= 12 {
        format!(
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            frame[6], frame[7], frame[8], frame[9], frame[10], frame[11]
        )
    } else {
        "00:00:00:00:00:00".to_string()
    };

    let mut protocol = Protocol::Other;
    let mut src_ip = Ipv4Addr::UNSPECIFIED;
    let mut dst_ip = Ipv4Addr::UNSPECIFIED;
    let mut tcp_syn = false;

    let is_ipv4 = frame.len() >= 34
        && u16::from_be_bytes([frame[12], frame[13]]) == ETHERTYPE_IPV4
        && frame[14] >> 4 == 4
        && frame[14] & 0x0f >= 5;
    if is_ipv4 {
        let ip = &frame[14..];
        protocol = Protocol::from_ip_number(ip[9]);
        src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
        dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
        if protocol == Protocol::Tcp {
            let ihl = usize::from(ip[0] & 0x0f) * 4;
            // TCP flags byte sits at offset 13 of the TCP header.
            if let Some(flags) = ip.get(ihl + 13) {
                tcp_syn = flags & 0x02 != 0;
            }
        }
    }

    let device = match attribution {
        AttributionRule::SourceMac => src_mac,
        AttributionRule::SourceIp => src_ip.to_string(),
    };

    PacketRecord {
        timestamp_us,
        device,
        src_ip,
        dst_ip,
        protocol,
        size: orig_len,
        tcp_syn,
    }
}

pub const CSV_HEADER: &str = "timestamp_us,device,src_ip,dst_ip,protocol,size,tcp_syn";

/// Parse the canonical CSV packet format. Rows are re-sorted by timestamp.
pub fn read_csv(text: &str) -> Result<Trace> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }

    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        records.push(parse_csv_row(line, line_no)?);
    }
    Ok(Trace::new(records, "csv"))
}

fn parse_csv_row(line: &str, line_no: usize) -> Result<PacketRecord> {
    let bad = |reason: String| Error::MalformedRow {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 7 {
        return Err(bad(format!("expected 7 fields, got {}", fields.len())));
    }
    let timestamp_us: i64 = fields[0]
        .parse()
        .map_err(|_| bad(format!("bad timestamp `{}`", fields[0])))?;
    let src_ip: Ipv4Addr = fields[2]
        .parse()
        .map_err(|_| bad(format!("bad src_ip `{}`", fields[2])))?;
    let dst_ip: Ipv4Addr = fields[3]
        .parse()
        .map_err(|_| bad(format!("bad dst_ip `{}`", fields[3])))?;
    let protocol: Protocol = fields[4]
        .parse()
        .map_err(|_| bad(format!("unknown protocol `{}`", fields[4])))?;
    let size: u32 = fields[5]
        .parse()
        .map_err(|_| bad(format!("bad size `{}`", fields[5])))?;
    let tcp_syn = match fields[6].to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => return Err(bad(format!("bad tcp_syn `{other}`"))),
    };
    if tcp_syn && protocol != Protocol::Tcp {
        return Err(bad("tcp_syn set on a non-TCP packet".to_string()));
    }
    Ok(PacketRecord {
        timestamp_us,
        device: fields[1].to_string(),
        src_ip,
        dst_ip,
        protocol,
        size,
        tcp_syn,
    })
}

/// Serialize a trace to the canonical CSV format (UTF-8, LF endings).
pub fn write_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(32 + trace.records.len() * 48);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.timestamp_us, r.device, r.src_ip, r.dst_ip, r.protocol, r.size, r.tcp_syn
        ));
    }
    out
}
