//! Multi-cell massive MIMO uplink with heterogeneous channel aging:
//! scenario generation, channel simulation, closed-form rate bounds,
//! copilot grouping and training-schedule optimisation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod grouping;
pub mod harness;
pub mod kv;
pub mod netgen;
pub mod ratebound;
pub mod scheduler;

pub use channel::{simulate_ergodic_rate, ErgodicRates, LinkSimConfig, SymbolModel, UserRateEstimate};
pub use error::{Error, Result};
pub use harness::{ExperimentKind, ExperimentReport, ExperimentSpec};
pub use grouping::{group_scenario, ClusterModel, CopilotGroup, CopilotGroups};
pub use netgen::{generate_scenario, Scenario, ScenarioConfig};
pub use ratebound::{RateBoundInputs, RateSummary};
pub use scheduler::{ApproxConfig, ScheduleVector, SchedulingInstance};
