//! Deterministic discrete-event simulation of hierarchical software-update
//! distribution.
//!
//! Two protocols are modelled over the same server tree: a conventional pull
//! design in which every node polls its parent on a fixed schedule whether or
//! not anything is new, and a push design in which the origin signals
//! registered nodes when updates are published and nodes download only on
//! signal. Each node accrues idle/transmit/receive phase time, and per-node
//! energy is `P_idle * (t_total - t_tx - t_rx) + P_tx * t_tx + P_rx * t_rx`.
//!
//! The crate is organised around the run pipeline:
//!
//! * [`topology`] — the distribution tree (origin, update servers, clients)
//!   and its structural limits.
//! * [`catalog`] — published updates, metadata vs. payload, client
//!   inventories and the approval gate.
//! * [`protocol`] — the pull and push state machines, message kinds and
//!   sizes, transfer timing.
//! * [`energy`] — phase-time ledgers and the energy equation.
//! * [`simulator`] — the event queue, scenario configuration, `run`, and
//!   pull-vs-push comparison.
//! * [`cli`] — argument parsing, scenario files, CSV export.

// validations use the negated form `!(x >= 0.0)` on purpose: it also
// rejects NaN, which `x < 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod energy;
pub mod protocol;
pub mod simulator;
pub mod topology;

pub use catalog::{ApprovalPolicy, Catalog, ClientInventory, UpdateArtifact, UpdateId};
pub use energy::{ActivityLedger, PowerProfile};
pub use protocol::{Message, MessageKind, PollSchedule, ProtocolMode};
pub use simulator::{
    compare, run, scenario_daily, scenario_weekly, ComparisonReport, RunResult, ScenarioConfig,
};
pub use topology::{NodeId, NodeKind, Topology};
