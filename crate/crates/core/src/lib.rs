//! Scheduling and sizing of distributed energy resources on a radial
//! distribution feeder: natural-gas DGs, PV, batteries and a hydrogen
//! electrolyzer / tank / fuel-cell chain.
//!
//! The pipeline is [`network`] (feeder and LinDistFlow rows) → [`optimizer`]
//! (case assembly on top of the [`lp`] solver) → [`metrics`] (reports), with
//! [`runner`] driving whole studies from a manifest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod error;
pub mod lp;
pub mod metrics;
pub mod network;
pub mod optimizer;
pub mod profiles;
pub mod runner;

pub use assets::{AssetSpecs, BatteryKind, BatterySpec, DgSpec, FinParams, H2Spec, PvSpec};
pub use error::Error;
pub use lp::{Problem, Sense, Solution, Status, VarHandle};
pub use metrics::{CaseReport, H2CostBreakdown};
pub use network::{Network, VoltageProfile};
pub use optimizer::{CaseConfig, CaseId, CaseOutcome, NetworkMode, ScheduleResult, SizingResult};
pub use profiles::ProfileSet;
