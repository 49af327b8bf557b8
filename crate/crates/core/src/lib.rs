//! Flow-level traffic analysis for smart-home networks: stateless flow
//! features over non-cumulative polling windows, KNN classification of
//! IoT device categories and DDoS floods, training-set minimization, and
//! a simulated two-phase VLAN quarantine control loop.

pub mod error;
pub mod eval;
pub mod features;
pub mod flow;
pub mod importance;
pub mod knn;
pub mod minimize;
pub mod seeds;
pub mod sim;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use eval::{EvalReport, IntervalEval, SweepResult};
pub use features::{FeatureVector, LabeledSample, Normalizer, TrafficClass, FEATURE_COUNT};
pub use flow::{CumulativeCounters, NonCumulativeStat, PollingConfig};
pub use knn::{KnnModel, Prediction};
pub use minimize::MinimizeResult;
pub use importance::ImportanceReport;
pub use sim::{ControllerConfig, DeviceState, SimEvent, SimEventKind};
pub use synth::{AttackSpec, DeviceProfile, FloodKind, ProtocolMix};
pub use trace::{AttributionRule, PacketRecord, Protocol, Trace};
