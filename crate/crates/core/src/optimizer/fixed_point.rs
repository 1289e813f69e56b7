//! LCOE re-pricing from actual capacity factors.

use log::info;
use serde::{Deserialize, Serialize};

use crate::assets::{AssetSpecs, DgSpec};
use crate::network::Network;
use crate::profiles::ProfileSet;

use super::run::{solve_case, CaseOutcome};
use super::schedule::{ScheduleResult, SizingResult};
use super::{CaseConfig, OptimizerError};

/// Capacity factor below which a DG is charged the price cap.
pub const MIN_CF: f64 = 0.001;

/// LCOE at an actual capacity factor: `nrel_cf / actual_cf * lcoe`, capped at
/// `cap`. Factors below 0.1 % (including zero) return the cap.
pub fn update_lcoe(spec: &DgSpec, actual_cf: f64, cap: f64) -> f64 {
    if !(actual_cf >= MIN_CF) {
        return cap;
    }
    (spec.nrel_cf / actual_cf * spec.lcoe).min(cap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointStep {
    pub iteration: usize,
    /// LCOE charged in this solve
    pub dg_lcoe: Vec<f64>,
    /// resulting capacity factors, fractions
    pub capacity_factor: Vec<f64>,
    pub objective: f64,
    pub schedule: ScheduleResult,
    pub sizing: SizingResult,
}

#[derive(Debug, Clone)]
pub struct FixedPointRun {
    pub history: Vec<FixedPointStep>,
    pub converged: bool,
    pub last: CaseOutcome,
}

impl FixedPointRun {
    pub fn into_outcome(self) -> CaseOutcome {
        let mut out = self.last;
        out.lcoe_history = self.history;
        out.converged = self.converged;
        out
    }
}

fn capacity_factors(s: &ScheduleResult) -> Vec<f64> {
    s.dgs
        .iter()
        .map(|d| {
            let e: f64 = d.output.iter().sum();
            if d.capacity_mw > 0.0 && s.hours > 0 {
                e / (d.capacity_mw * s.hours as f64)
            } else {
                0.0
            }
        })
        .collect()
}

/// Solve, re-price every DG from its capacity factor, and re-solve (re-sizing
/// storage each time) until no capacity factor moves by `cfg.cf_tolerance`
/// or the iteration cap is reached.
pub fn run_case_5b(
    cfg: &CaseConfig,
    net: &Network,
    specs: &AssetSpecs,
    profiles: &ProfileSet,
) -> Result<FixedPointRun, OptimizerError> {
    let mut lcoe = cfg.base_dg_lcoe(specs);
    let mut history: Vec<FixedPointStep> = Vec::new();
    let mut prev_cf: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut last = None;
    for iteration in 1..=cfg.max_lcoe_iterations {
        let outcome = solve_case(cfg, net, specs, profiles, Some(&lcoe))?;
        let cf = capacity_factors(&outcome.schedule);
        info!("case {} iteration {iteration}: capacity factors {:?}", cfg.case_id, cf);
        history.push(FixedPointStep {
            iteration,
            dg_lcoe: lcoe.clone(),
            capacity_factor: cf.clone(),
            objective: outcome.costs.total,
            schedule: outcome.schedule.clone(),
            sizing: outcome.sizing.clone(),
        });
        let change = prev_cf
            .as_ref()
            .map(|p| p.iter().zip(&cf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        last = Some(outcome);
        if change.is_some_and(|c| c < cfg.cf_tolerance) {
            converged = true;
            break;
        }
        lcoe = specs.dgs.iter().zip(&cf).map(|(d, &c)| update_lcoe(d, c, specs.lcoe_cap)).collect();
        prev_cf = Some(cf);
    }
    let last = last.expect("at least one iteration");
    Ok(FixedPointRun { history, converged, last })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dg(lcoe: f64, cf: f64) -> DgSpec {
        DgSpec::new("g", 1, 1.0, lcoe, cf, 0.0)
    }

    #[test]
    fn identity_and_scaling() {
        let d = dg(36.0, 0.88);
        assert_eq!(update_lcoe(&d, 0.88, 11_400.0), 36.0);
        assert!((update_lcoe(&d, 0.44, 11_400.0) - 72.0).abs() < 1e-12);
        assert_eq!(update_lcoe(&d, 0.0, 11_400.0), 11_400.0);
        assert_eq!(update_lcoe(&dg(95.0, 0.12), 0.0009, 11_400.0), 11_400.0);
    }
}
