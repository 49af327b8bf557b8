//! Discrete-event simulation of the two-phase quarantine controller.
//!
//! Every device joins the unverified VLAN. Phase I classifies it each
//! polling interval: enough consecutive benign labels promote it to the
//! verified VLAN; a DDoS label flags it into phase II. Phase II either
//! confirms the attack (the device is removed, terminally) or returns the
//! device to phase I on a benign label. Verified devices keep being
//! classified but are only logged, never demoted.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{extract, TrafficClass};
use crate::flow::{bucket_direct, PollingConfig};
use crate::knn::KnnModel;
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vlan {
    Unverified,
    Verified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PhaseI,
    PhaseII,
    Removed,
}

/// Controller parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerConfig {
    pub polling_interval_secs: u32,
    /// Consecutive benign classifications required for promotion.
    pub promote_after: u32,
    /// Consecutive phase-II DDoS classifications required for removal.
    pub confirm_attack_after: u32,
    /// Deadline (seconds) a flood must be removed within; recorded for
    /// reporting, not used to drive the state machine.
    pub detection_deadline_secs: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            polling_interval_secs: 24,
            promote_after: 3,
            confirm_attack_after: 1,
            detection_deadline_secs: 120,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(what.to_string()))
            }
        };
        check(
            (1..=120).contains(&self.polling_interval_secs),
            "polling interval must be in 1..=120 s",
        )?;
        check(self.promote_after >= 1, "promote_after must be >= 1")?;
        check(
            self.confirm_attack_after >= 1,
            "confirm_attack_after must be >= 1",
        )?;
        check(
            self.detection_deadline_secs >= self.polling_interval_secs,
            "detection deadline must be at least one polling interval",
        )?;
        Ok(())
    }
}

/// Per-device controller state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceState {
    pub device: String,
    pub vlan: Vlan,
    pub phase: Phase,
    /// Ring of recent labels; capacity is the larger of the two
    /// confirmation windows.
    pub history: VecDeque<TrafficClass>,
    /// Window index at which the device was first flagged.
    pub flagged_at: Option<u64>,
}

impl DeviceState {
    pub fn new(device: impl Into<String>) -> Self {
        DeviceState {
            device: device.into(),
            vlan: Vlan::Unverified,
            phase: Phase::PhaseI,
            history: VecDeque::new(),
            flagged_at: None,
        }
    }

    fn push_history(&mut self, label: TrafficClass, cap: usize) {
        if self.history.len() == cap {
            self.history.pop_front();
        }
        self.history.push_back(label);
    }

    fn trailing(&self, pred: impl Fn(TrafficClass) -> bool) -> usize {
        self.history.iter().rev().take_while(|l| pred(**l)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEventKind {
    Joined,
    Classified,
    Promoted,
    Flagged,
    Removed,
}

/// One log entry. Serialized as JSON-lines:
/// `{"t": seconds, "device": id, "event": kind, "label": optional}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub t: u64,
    pub device: String,
    pub event: SimEventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<TrafficClass>,
}

/// Apply one classification outcome for the window `window_index` to a
/// device's state. Returns the new state plus any transition events,
/// stamped at the window's closing poll.
pub fn step(
    mut state: DeviceState,
    label: TrafficClass,
    window_index: u64,
    cfg: &ControllerConfig,
) -> Result<(DeviceState, Vec<SimEvent>)> {
    if state.phase == Phase::Removed {
        return Err(Error::DeviceRemoved {
            device: state.device,
        });
    }
    let now = (window_index + 1) * u64::from(cfg.polling_interval_secs);
    let cap = cfg.promote_after.max(cfg.confirm_attack_after) as usize;
    let mut events = Vec::new();

    if state.vlan == Vlan::Verified {
        // Verified devices are classified for the log only.
        return Ok((state, events));
    }

    match (state.phase, label.is_benign()) {
        (Phase::PhaseI, true) => {
            state.push_history(label, cap);
            if state.trailing(TrafficClass::is_benign) >= cfg.promote_after as usize {
                state.vlan = Vlan::Verified;
                events.push(SimEvent {
                    t: now,
                    device: state.device.clone(),
                    event: SimEventKind::Promoted,
                    label: None,
                });
            }
        }
        (Phase::PhaseI, false) => {
            state.phase = Phase::PhaseII;
            state.history.clear();
            state.flagged_at.get_or_insert(window_index);
            events.push(SimEvent {
                t: now,
                device: state.device.clone(),
                event: SimEventKind::Flagged,
                label: None,
            });
        }
        (Phase::PhaseII, false) => {
            state.push_history(label, cap);
            let streak = state.trailing(|l| l == TrafficClass::Ddos);
            if streak >= cfg.confirm_attack_after as usize {
                state.phase = Phase::Removed;
                events.push(SimEvent {
                    t: now,
                    device: state.device.clone(),
                    event: SimEventKind::Removed,
                    label: None,
                });
            }
        }
        (Phase::PhaseII, true) => {
            state.phase = Phase::PhaseI;
            state.history.clear();
            state.push_history(label, cap);
        }
        (Phase::Removed, _) => unreachable!("checked above"),
    }

    Ok((state, events))
}

/// Drive the controller over simulated time.
///
/// Time starts at 0 and advances one polling interval per tick until
/// `duration_secs`. Each tick buckets the interval's packets per device,
/// extracts features, classifies, and applies [`step`]. Devices without
/// packets in a tick are skipped; removed devices generate no further
/// events.
pub fn run_simulation(
    traces: &BTreeMap<String, Trace>,
    model: &KnnModel,
    cfg: &ControllerConfig,
    duration_secs: u64,
) -> Result<Vec<SimEvent>> {
    cfg.validate()?;
    let polling = PollingConfig::new(cfg.polling_interval_secs, 0)?;
    let interval = u64::from(cfg.polling_interval_secs);
    let ticks = duration_secs / interval;

    // Pre-bucket every trace; lookups are per (device, window).
    let mut stats = BTreeMap::new();
    for (device, trace) in traces {
        for stat in bucket_direct(trace, polling) {
            stats.insert((device.clone(), stat.window_index), stat);
        }
    }

    let mut states: BTreeMap<&String, DeviceState> = BTreeMap::new();
    let mut events = Vec::new();
    for tick in 0..ticks {
        for device in traces.keys() {
            let Some(stat) = stats.get(&(device.clone(), tick)) else {
                continue;
            };
            if states.get(device).is_some_and(|s| s.phase == Phase::Removed) {
                continue;
            }
            let state = states
                .entry(device)
                .or_insert_with(|| {
                    events.push(SimEvent {
                        t: tick * interval,
                        device: device.clone(),
                        event: SimEventKind::Joined,
                        label: None,
                    });
                    DeviceState::new(device.clone())
                })
                .clone();

            let label = model.predict(&extract(stat)?).label;
            events.push(SimEvent {
                t: (tick + 1) * interval,
                device: device.clone(),
                event: SimEventKind::Classified,
                label: Some(label),
            });
            let (next, transitions) = step(state, label, tick, cfg)?;
            events.extend(transitions);
            states.insert(device, next);
        }
    }
    Ok(events)
}

/// Per-device rollup of a simulation log.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceOutcome {
    pub device: String,
    pub joined_at: u64,
    pub classifications: usize,
    pub promoted_at: Option<u64>,
    pub first_flagged_at: Option<u64>,
    pub removed_at: Option<u64>,
}

pub fn summarize(events: &[SimEvent]) -> Vec<DeviceOutcome> {
    let mut outcomes: BTreeMap<&str, DeviceOutcome> = BTreeMap::new();
    for e in events {
        let o = outcomes
            .entry(e.device.as_str())
            .or_insert_with(|| DeviceOutcome {
                device: e.device.clone(),
                joined_at: e.t,
                classifications: 0,
                promoted_at: None,
                first_flagged_at: None,
                removed_at: None,
            });
        match e.event {
            SimEventKind::Joined => o.joined_at = e.t,
            SimEventKind::Classified => o.classifications += 1,
            SimEventKind::Promoted => o.promoted_at = Some(e.t),
            SimEventKind::Flagged => {
                o.first_flagged_at.get_or_insert(e.t);
            }
            SimEventKind::Removed => o.removed_at = Some(e.t),
        }
    }
    outcomes.into_values().collect()
}

/// Serialize events as JSON-lines.
pub fn events_to_jsonl(events: &[SimEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ControllerConfig {
        ControllerConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.promote_after = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.detection_deadline_secs = 10;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.polling_interval_secs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn three_benign_labels_promote() {
        let mut state = DeviceState::new("cam-0");
        for (window, expect_promotion) in [(0, false), (1, false), (2, true)] {
            let (next, events) = step(state, TrafficClass::Camera, window, &cfg()).unwrap();
            state = next;
            if expect_promotion {
                assert_eq!(events.len(), 1);
                assert_eq!(events[0].event, SimEventKind::Promoted);
                assert_eq!(events[0].t, 72); // end of window 2 at 24 s polling
                assert_eq!(state.vlan, Vlan::Verified);
            } else {
                assert!(events.is_empty());
                assert_eq!(state.vlan, Vlan::Unverified);
            }
        }
    }

    #[test]
    fn mixed_benign_categories_still_promote() {
        let mut state = DeviceState::new("dev");
        let labels = [TrafficClass::Camera, TrafficClass::Hub, TrafficClass::SwitchTrigger];
        let mut promoted = false;
        for (w, label) in labels.into_iter().enumerate() {
            let (next, events) = step(state, label, w as u64, &cfg()).unwrap();
            state = next;
            promoted |= events.iter().any(|e| e.event == SimEventKind::Promoted);
        }
        assert!(promoted);
    }

    #[test]
    fn ddos_flags_then_confirms_removal() {
        let state = DeviceState::new("attacker");
        let (state, events) = step(state, TrafficClass::Ddos, 0, &cfg()).unwrap();
        assert_eq!(events[0].event, SimEventKind::Flagged);
        assert_eq!(state.phase, Phase::PhaseII);
        assert_eq!(state.flagged_at, Some(0));

        let (state, events) = step(state, TrafficClass::Ddos, 1, &cfg()).unwrap();
        assert_eq!(events[0].event, SimEventKind::Removed);
        assert_eq!(state.phase, Phase::Removed);

        // Removed is terminal.
        assert!(matches!(
            step(state, TrafficClass::Camera, 2, &cfg()),
            Err(Error::DeviceRemoved { .. })
        ));
    }

    #[test]
    fn benign_label_in_phase_two_returns_to_phase_one() {
        let state = DeviceState::new("dev");
        let (state, _) = step(state, TrafficClass::Ddos, 0, &cfg()).unwrap();
        let (state, events) = step(state, TrafficClass::Hub, 1, &cfg()).unwrap();
        assert!(events.is_empty());
        assert_eq!(state.phase, Phase::PhaseI);
        assert_eq!(state.history.len(), 1);

        // Two more benign windows complete the promotion streak.
        let (state, _) = step(state, TrafficClass::Hub, 2, &cfg()).unwrap();
        let (state, events) = step(state, TrafficClass::Hub, 3, &cfg()).unwrap();
        assert_eq!(events[0].event, SimEventKind::Promoted);
        assert_eq!(state.vlan, Vlan::Verified);
    }

    #[test]
    fn ddos_interrupts_promotion_progress() {
        let state = DeviceState::new("dev");
        let (state, _) = step(state, TrafficClass::Camera, 0, &cfg()).unwrap();
        let (state, _) = step(state, TrafficClass::Camera, 1, &cfg()).unwrap();
        let (state, events) = step(state, TrafficClass::Ddos, 2, &cfg()).unwrap();
        assert_eq!(events[0].event, SimEventKind::Flagged);
        assert!(state.history.is_empty());
    }

    #[test]
    fn verified_devices_are_logged_only() {
        let mut state = DeviceState::new("dev");
        for w in 0..3 {
            (state, _) = step(state, TrafficClass::Camera, w, &cfg()).unwrap();
        }
        assert_eq!(state.vlan, Vlan::Verified);
        let (state, events) = step(state, TrafficClass::Ddos, 3, &cfg()).unwrap();
        assert!(events.is_empty());
        assert_eq!(state.phase, Phase::PhaseI);
        assert_eq!(state.vlan, Vlan::Verified);
    }

    #[test]
    fn empty_traces_produce_empty_log() {
        use crate::features::{FeatureVector, LabeledSample, FEATURE_COUNT};
        let samples: Vec<LabeledSample> = (0..8)
            .map(|i| LabeledSample {
                features: FeatureVector::from_array([i as f64; FEATURE_COUNT]),
                label: TrafficClass::from_index(i % 4).unwrap(),
                device: "d".to_string(),
                window_index: 0,
            })
            .collect();
        let model = KnnModel::fit(&samples, 1).unwrap();
        let events = run_simulation(&BTreeMap::new(), &model, &cfg(), 240).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn jsonl_shape_is_stable() {
        let events = vec![
            SimEvent {
                t: 24,
                device: "cam-0".to_string(),
                event: SimEventKind::Classified,
                label: Some(TrafficClass::Camera),
            },
            SimEvent {
                t: 48,
                device: "cam-0".to_string(),
                event: SimEventKind::Promoted,
                label: None,
            },
        ];
        assert_eq!(
            events_to_jsonl(&events),
            "{\"t\":24,\"device\":\"cam-0\",\"event\":\"classified\",\"label\":\"camera\"}\n\
             {\"t\":48,\"device\":\"cam-0\",\"event\":\"promoted\"}\n"
        );
    }
}
