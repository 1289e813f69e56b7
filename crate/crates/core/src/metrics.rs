//! Case analyses: green share, capacity factors, prices, curtailment and the
//! hydrogen cost model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::Network;
use crate::optimizer::{CaseId, CaseOutcome, CostBreakdown, ScheduleResult, SizingResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("total load energy is zero")]
    ZeroLoad,
    #[error("fit needs at least two distinct {0} values")]
    Degenerate(&'static str),
    #[error("DLMP series covers {got} buses, network has {expected}")]
    Shape { got: usize, expected: usize },
}

/// Fraction of customer load served by PV, directly or through storage, in percent.
///
/// Storage charging is served by PV first. Each storage device keeps a pooled
/// ledger of how much of its content is green; discharges carry the pool's
/// current share. The initial share is taken equal to the final one (found
/// by fixed-point iteration), so a cyclic schedule is attributed consistently.
pub fn green_fraction(s: &ScheduleResult) -> Result<f64, MetricsError> {
    let (green, _) = green_and_fossil(s)?;
    Ok(green)
}

/// Green and fossil shares of load in percent; they sum to 100.
pub fn green_and_fossil(s: &ScheduleResult) -> Result<(f64, f64), MetricsError> {
    let total: f64 = s.load.iter().sum();
    if !(total > 0.0) {
        return Err(MetricsError::ZeroLoad);
    }
    if (0..s.hours).all(|t| s.pv_dispatched(t) <= 0.0) {
        return Ok((0.0, 100.0));
    }
    let mut shares = [1.0f64, 1.0];
    let mut result = (0.0, 0.0);
    for _ in 0..200 {
        let (green, fossil, end) = attribute(s, shares);
        result = (green, fossil);
        let moved = (end[0] - shares[0]).abs().max((end[1] - shares[1]).abs());
        shares = end;
        if moved < 1e-12 {
            break;
        }
    }
    let f = (100.0 * result.1 / total).clamp(0.0, 100.0);
    Ok((100.0 - f, f))
}

/// One pass of the provenance ledger; returns green and fossil energy to load
/// and the pools' green shares at the end of the horizon.
///
/// The pools track their fossil part, so a horizon without any fossil supply
/// attributes exactly zero fossil energy.
fn attribute(s: &ScheduleResult, start: [f64; 2]) -> (f64, f64, [f64; 2]) {
    // pool contents in stored units (MWh of SOC, kg of H2) and their fossil parts
    let mut content = [0.0f64; 2];
    let mut fossil_content = [0.0f64; 2];
    if let Some(b) = &s.battery {
        content[0] = b.soc[0];
    }
    if let Some(h) = &s.h2 {
        content[1] = h.tank_mass[0];
    }
    let start_fossil = [1.0 - start[0], 1.0 - start[1]];
    for k in 0..2 {
        fossil_content[k] = start_fossil[k] * content[k];
    }
    let share = |c: f64, f: f64, fallback: f64| if c > 1e-12 { (f / c).clamp(0.0, 1.0) } else { fallback };

    let mut green_load = 0.0;
    let mut fossil_load = 0.0;
    for t in 0..s.hours {
        let pv = s.pv_dispatched(t);
        let fossil_direct = s.dg_total(t) + s.import[t];
        let ch = s.battery_charge(t);
        let ez = s.electrolyzer_draw(t);
        let charging = ch + ez;

        // PV serves charging first
        let from_pv = charging.min(pv);
        let rest_green = pv - from_pv;

        // discharges carry the pool share before this hour's intake
        let f_b = share(content[0], fossil_content[0], start_fossil[0]);
        let f_h = share(content[1], fossil_content[1], start_fossil[1]);
        let dis = s.battery_discharge(t);
        let fc = s.fuel_cell(t);
        let other_green = rest_green + (1.0 - f_b) * dis + (1.0 - f_h) * fc;
        let other_fossil = fossil_direct + f_b * dis + f_h * fc;
        let other = other_green + other_fossil;
        let remaining_charge = charging - from_pv;
        let fossil_frac = if other > 0.0 { other_fossil / other } else { 0.0 };
        let green_frac = if other > 0.0 { other_green / other } else { 0.0 };
        let charge_fossil_share = if charging > 0.0 { remaining_charge * fossil_frac / charging } else { 0.0 };
        green_load += (other_green - remaining_charge * green_frac).max(0.0);
        fossil_load += (other_fossil - remaining_charge * fossil_frac).max(0.0);

        if let Some(b) = &s.battery {
            let out = dis / b.eta;
            let inflow = b.eta * ch;
            fossil_content[0] = (fossil_content[0] - f_b * out).max(0.0) + charge_fossil_share * inflow;
            content[0] = b.soc[t + 1];
        }
        if let Some(h) = &s.h2 {
            let out = h.kg_per_mwh_out * fc;
            let inflow = h.kg_per_mwh_in * h.electrolyzer[t];
            fossil_content[1] = (fossil_content[1] - f_h * out).max(0.0) + charge_fossil_share * inflow;
            content[1] = h.tank_mass[t + 1];
        }
    }
    let end = [
        1.0 - share(content[0], fossil_content[0], start_fossil[0]),
        1.0 - share(content[1], fossil_content[1], start_fossil[1]),
    ];
    (green_load, fossil_load, end)
}

/// Energy dispatched over capacity times horizon, in percent.
pub fn capacity_factor(output: &[f64], capacity_mw: f64) -> f64 {
    if output.is_empty() || capacity_mw <= 0.0 {
        return 0.0;
    }
    let e: f64 = output.iter().sum();
    (100.0 * e / (capacity_mw * output.len() as f64)).clamp(0.0, 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlmpStats {
    /// `[hour][bus index]`, $/MWh
    pub per_bus_hour: Vec<Vec<f64>>,
    /// load-weighted over all bus-hours
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// duals come from an LP with commitment binaries fixed
    pub restricted: bool,
}

/// Nodal prices of a solved case with their load-weighted mean.
pub fn dlmp_stats(outcome: &CaseOutcome, net: &Network) -> Result<DlmpStats, MetricsError> {
    let nb = net.buses().len();
    if let Some(row) = outcome.dlmp.iter().find(|r| r.len() != nb) {
        return Err(MetricsError::Shape { got: row.len(), expected: nb });
    }
    let s = &outcome.schedule;
    let mut weighted = 0.0;
    let mut weight = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, prices) in outcome.dlmp.iter().enumerate() {
        for (i, &price) in prices.iter().enumerate() {
            let load = net.buses()[i].p_load_kw * if s.load.is_empty() { 0.0 } else { s.load[t] };
            weighted += price * load;
            weight += load;
            lo = lo.min(price);
            hi = hi.max(price);
        }
    }
    let mean = if weight > 0.0 { weighted / weight } else { 0.0 };
    Ok(DlmpStats {
        per_bus_hour: outcome.dlmp.clone(),
        mean,
        min: lo,
        max: hi,
        restricted: outcome.mip.as_ref().is_some_and(|m| m.restricted_duals),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curtailment {
    pub available_mwh: f64,
    pub dispatched_mwh: f64,
    pub curtailed_mwh: f64,
    pub curtailed_pct: f64,
}

pub fn curtailment_stats(s: &ScheduleResult) -> Curtailment {
    let available: f64 = (0..s.hours).map(|t| s.pv_available(t)).sum();
    let dispatched: f64 = (0..s.hours).map(|t| s.pv_dispatched(t)).sum();
    let curtailed: f64 = (0..s.hours).map(|t| s.pv_curtailed(t)).sum();
    let pct = if available > 0.0 { 100.0 * curtailed / available } else { 0.0 };
    Curtailment { available_mwh: available, dispatched_mwh: dispatched, curtailed_mwh: curtailed, curtailed_pct: pct }
}

/// Per-case aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case_id: CaseId,
    pub seed: Option<u64>,
    pub network_mode: String,
    pub hours: usize,
    pub load_mwh: f64,
    pub green_fraction_pct: f64,
    pub fossil_fraction_pct: f64,
    pub capacity_factor_pct: Vec<(String, f64)>,
    pub dg_lcoe: Vec<(String, f64)>,
    pub import_mwh: f64,
    pub dlmp_mean: f64,
    pub dlmp_min: f64,
    pub dlmp_max: f64,
    pub dlmp_restricted: bool,
    pub dlmp_hourly_mean: Vec<f64>,
    pub curtailment: Curtailment,
    pub costs: CostBreakdown,
    pub sizing: SizingResult,
    pub voltage_min_per_bus: Vec<f64>,
    pub voltage_max_per_bus: Vec<f64>,
    pub voltages_from_solver: bool,
    pub simultaneous_storage_hours: Vec<usize>,
    pub lcoe_iterations: usize,
    pub converged: bool,
}

impl CaseReport {
    pub fn build(outcome: &CaseOutcome, net: &Network, seed: Option<u64>) -> Result<CaseReport, MetricsError> {
        let s = &outcome.schedule;
        let (green, fossil) = green_and_fossil(s)?;
        let dl = dlmp_stats(outcome, net)?;
        let nb = net.buses().len();
        let mut vmin = vec![f64::INFINITY; nb];
        let mut vmax = vec![f64::NEG_INFINITY; nb];
        for row in &s.voltages {
            for (i, &v) in row.iter().enumerate() {
                vmin[i] = vmin[i].min(v);
                vmax[i] = vmax[i].max(v);
            }
        }
        let hourly_mean = dl
            .per_bus_hour
            .iter()
            .map(|row| {
                let w: f64 = net.buses().iter().map(|b| b.p_load_kw).sum();
                if w > 0.0 {
                    row.iter().zip(net.buses()).map(|(p, b)| p * b.p_load_kw).sum::<f64>() / w
                } else {
                    row.iter().sum::<f64>() / row.len().max(1) as f64
                }
            })
            .collect();
        Ok(CaseReport {
            case_id: outcome.config.case_id,
            seed,
            network_mode: outcome.config.network_mode.to_string(),
            hours: s.hours,
            load_mwh: s.load.iter().sum(),
            green_fraction_pct: green,
            fossil_fraction_pct: fossil,
            capacity_factor_pct: s.dgs.iter().map(|d| (d.name.clone(), capacity_factor(&d.output, d.capacity_mw))).collect(),
            dg_lcoe: s.dgs.iter().map(|d| d.name.clone()).zip(outcome.dg_lcoe.iter().copied()).collect(),
            import_mwh: s.import.iter().sum(),
            dlmp_mean: dl.mean,
            dlmp_min: dl.min,
            dlmp_max: dl.max,
            dlmp_restricted: dl.restricted,
            dlmp_hourly_mean: hourly_mean,
            curtailment: curtailment_stats(s),
            costs: outcome.costs.clone(),
            sizing: outcome.sizing.clone(),
            voltage_min_per_bus: vmin,
            voltage_max_per_bus: vmax,
            voltages_from_solver: s.voltages_from_solver,
            simultaneous_storage_hours: s.simultaneous_hours(),
            lcoe_iterations: outcome.lcoe_history.len(),
            converged: outcome.converged,
        })
    }
}

/// Hydrogen production cost in $/kg with its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2CostBreakdown {
    pub energy_component: f64,
    pub capex_component: f64,
    pub storage_component: f64,
    pub total: f64,
    pub ez_capex: f64,
    pub comp_capex: f64,
    pub pv_lcoe: f64,
    pub e_spec: f64,
    pub capex_rate: f64,
}

impl H2CostBreakdown {
    /// Cost out of the electrolyzer (or compressor) before storage.
    pub fn production(&self) -> f64 {
        self.energy_component + self.capex_component
    }
}

/// Fitted electricity use per kg, kWh/kg.
pub const DEFAULT_E_SPEC: f64 = 57.5;
/// Fitted CAPEX-to-cost slope, $/kg per $/kW.
pub const DEFAULT_CAPEX_RATE: f64 = 0.0033;
pub const DEFAULT_STORAGE_COST: f64 = 0.02;

/// Affine cost model: energy `e_spec/1000 * pv_lcoe`, CAPEX `(ez + comp) * capex_rate`, plus storage.
pub fn h2_cost(ez_capex: f64, comp_capex: f64, pv_lcoe: f64, e_spec: f64, capex_rate: f64, storage: f64) -> H2CostBreakdown {
    let energy = e_spec / 1000.0 * pv_lcoe;
    let capex = (ez_capex + comp_capex) * capex_rate;
    H2CostBreakdown {
        energy_component: energy,
        capex_component: capex,
        storage_component: storage,
        total: energy + capex + storage,
        ez_capex,
        comp_capex,
        pv_lcoe,
        e_spec,
        capex_rate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2Fit {
    pub e_spec: f64,
    pub capex_rate: f64,
    /// largest absolute residual over all fitted points, $/kg
    pub max_residual: f64,
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn ls_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fits the affine cost model.
///
/// `capex_points` are (electrolyzer CAPEX $/kW, production cost $/kg) at a
/// fixed PV LCOE; `lcoe_points` are (PV LCOE $/MWh, production cost $/kg) at a
/// fixed CAPEX. The residual is taken over both sets, each predicted from its
/// own intercept.
pub fn fit_h2_params(capex_points: &[(f64, f64)], lcoe_points: &[(f64, f64)]) -> Result<H2Fit, MetricsError> {
    let (capex_rate, c0) = ls_line(capex_points).ok_or(MetricsError::Degenerate("CAPEX"))?;
    let (slope, l0) = ls_line(lcoe_points).ok_or(MetricsError::Degenerate("PV LCOE"))?;
    let max_residual = capex_points
        .iter()
        .map(|&(x, y)| (c0 + capex_rate * x - y).abs())
        .chain(lcoe_points.iter().map(|&(x, y)| (l0 + slope * x - y).abs()))
        .fold(0.0, f64::max);
    Ok(H2Fit { e_spec: slope * 1000.0, capex_rate, max_residual })
}
