//! Joint operation and sizing for the ten case studies.

mod build;
mod fixed_point;
mod run;
mod schedule;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{AssetSpecs, BatteryKind};
use crate::lp::{LpError, Status};
use crate::network::NetworkError;
use crate::profiles::HORIZON_HOURS;

pub use build::{build_problem, copperplate_tag, BuiltProblem, VarMap};
pub use fixed_point::{run_case_5b, update_lcoe, FixedPointRun, FixedPointStep};
pub use run::{run_case, CaseOutcome, CostBreakdown};
pub use schedule::{
    check_invariants, BatterySeries, DgSeries, H2Series, PvSeries, ScheduleResult, SizingResult, BALANCE_TOL_MW,
};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("case {case}: solver returned {status} ({} bytes of LP dump attached)", dump.len())]
    Solve { case: CaseId, status: Status, dump: String },
    #[error("case {case}: invariant violated: {msg}")]
    Invariant { case: CaseId, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "1")]
    C1,
    #[serde(rename = "2")]
    C2,
    #[serde(rename = "3")]
    C3,
    #[serde(rename = "4")]
    C4,
    #[serde(rename = "5a")]
    C5a,
    #[serde(rename = "5b")]
    C5b,
    #[serde(rename = "6a")]
    C6a,
    #[serde(rename = "6b")]
    C6b,
    #[serde(rename = "7a")]
    C7a,
    #[serde(rename = "7b")]
    C7b,
}

impl CaseId {
    pub const ALL: [CaseId; 10] = [
        CaseId::C1,
        CaseId::C2,
        CaseId::C3,
        CaseId::C4,
        CaseId::C5a,
        CaseId::C5b,
        CaseId::C6a,
        CaseId::C6b,
        CaseId::C7a,
        CaseId::C7b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::C1 => "1",
            CaseId::C2 => "2",
            CaseId::C3 => "3",
            CaseId::C4 => "4",
            CaseId::C5a => "5a",
            CaseId::C5b => "5b",
            CaseId::C6a => "6a",
            CaseId::C6b => "6b",
            CaseId::C7a => "7a",
            CaseId::C7b => "7b",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("case").unwrap_or(&key).trim_start_matches(['_', '-', ' ']);
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or_else(|| format!("unknown case `{s}` (expected one of 1, 2, 3, 4, 5a, 5b, 6a, 6b, 7a, 7b)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CommitmentMode {
    /// Continuous on-fraction in [0, 1]; keeps the problem an LP.
    #[default]
    Relaxed,
    /// Binary commitment solved by branch-and-bound.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkMode {
    /// LinDistFlow flows, voltage band and one balance row per bus and hour.
    Full,
    /// One balance row per hour; voltages are recomputed after the solve.
    #[default]
    Copperplate,
}

impl FromStr for NetworkMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(NetworkMode::Full),
            "copperplate" | "copper-plate" => Ok(NetworkMode::Copperplate),
            other => Err(format!("unknown network mode `{other}` (expected full or copperplate)")),
        }
    }
}

impl fmt::Display for NetworkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkMode::Full => "full",
            NetworkMode::Copperplate => "copperplate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    pub dgs: bool,
    pub pv: bool,
    pub battery: Option<BatteryKind>,
    pub h2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case_id: CaseId,
    pub roster: Roster,
    pub pv_penetration: f64,
    pub tank_init_frac: f64,
    pub tank_final_frac: f64,
    /// $/MWh of curtailed PV
    pub curtail_penalty: f64,
    pub commitment_mode: CommitmentMode,
    pub network_mode: NetworkMode,
    pub import_price: f64,
    pub import_limit_mw: f64,
    pub horizon: usize,
    /// Charge every fossil source (DGs and upper-grid import) at the LCOE price cap.
    pub fossil_priced_out: bool,
    /// Re-solve with LCOEs updated from actual capacity factors until they settle.
    pub update_lcoes: bool,
    pub max_lcoe_iterations: usize,
    pub cf_tolerance: f64,
    pub gap_tol: f64,
}

/// Curtailment penalty used by the penalized case, $/MWh. Kept below the PV
/// LCOE so dispatched PV never carries a negative price.
pub const DEFAULT_CURTAIL_PENALTY: f64 = 10.0;

impl CaseConfig {
    /// Roster and parameter defaults of a case.
    pub fn for_case(case_id: CaseId) -> CaseConfig {
        use CaseId::*;
        let battery = match case_id {
            C3 | C6a | C6b => Some(BatteryKind::LiIon),
            C4 | C7a | C7b => Some(BatteryKind::Flow),
            _ => None,
        };
        let h2 = matches!(case_id, C5a | C5b | C6a | C6b | C7a | C7b);
        let frac = if case_id == C7b { 0.5 } else { 0.1 };
        CaseConfig {
            case_id,
            roster: Roster { dgs: true, pv: case_id != C1, battery, h2 },
            pv_penetration: if matches!(case_id, C7a | C7b) { 1.5 } else { 1.2 },
            tank_init_frac: frac,
            tank_final_frac: frac,
            curtail_penalty: if case_id == C6b { DEFAULT_CURTAIL_PENALTY } else { 0.0 },
            commitment_mode: CommitmentMode::Relaxed,
            network_mode: NetworkMode::Copperplate,
            import_price: 100.0,
            import_limit_mw: 5.0,
            horizon: HORIZON_HOURS,
            fossil_priced_out: matches!(case_id, C7a | C7b),
            update_lcoes: case_id == C5b,
            max_lcoe_iterations: 10,
            cf_tolerance: 0.01,
            gap_tol: crate::lp::DEFAULT_GAP_TOL,
        }
    }

    pub fn with_network_mode(mut self, mode: NetworkMode) -> Self {
        self.network_mode = mode;
        self
    }

    pub fn with_horizon(mut self, hours: usize) -> Self {
        self.horizon = hours;
        self
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.pv_penetration >= 0.0) {
            return Err("PV penetration must be non-negative".into());
        }
        for (name, v) in [("tank_init_frac", self.tank_init_frac), ("tank_final_frac", self.tank_final_frac)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.curtail_penalty >= 0.0) || !(self.import_price >= 0.0) || !(self.import_limit_mw >= 0.0) {
            return Err("penalty, import price and import limit must be non-negative".into());
        }
        if self.horizon == 0 {
            return Err("horizon must be at least one hour".into());
        }
        if !(self.gap_tol >= 0.0) || !(self.cf_tolerance > 0.0) || self.max_lcoe_iterations == 0 {
            return Err("gap tolerance, CF tolerance and iteration cap must be positive".into());
        }
        Ok(())
    }

    /// Price of upper-grid energy, $/MWh.
    pub fn effective_import_price(&self, specs: &AssetSpecs) -> f64 {
        if self.fossil_priced_out {
            specs.lcoe_cap
        } else {
            self.import_price
        }
    }

    /// LCOE charged per DG before any capacity-factor update.
    pub fn base_dg_lcoe(&self, specs: &AssetSpecs) -> Vec<f64> {
        specs.dgs.iter().map(|d| if self.fossil_priced_out { specs.lcoe_cap } else { d.lcoe }).collect()
    }
}
