use serde::{Deserialize, Serialize};

use crate::assets::BatteryKind;

/// Largest hourly power-balance residual accepted in a schedule, MW.
pub const BALANCE_TOL_MW: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgSeries {
    pub name: String,
    pub bus: usize,
    pub capacity_mw: f64,
    pub ramp_mw_per_h: f64,
    pub output: Vec<f64>,
    /// on-fraction (relaxed) or 0/1 (exact)
    pub commitment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvSeries {
    pub bus: usize,
    pub available: Vec<f64>,
    pub dispatched: Vec<f64>,
    pub curtailed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySeries {
    pub kind: BatteryKind,
    pub bus: usize,
    /// one-way efficiency
    pub eta: f64,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// state of charge at the start of every hour plus the end of the horizon, MWh
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Series {
    pub bus: usize,
    pub kg_per_mwh_in: f64,
    pub kg_per_mwh_out: f64,
    /// grid draw per MW of electrolyzer power (above 1 when compression draws power)
    pub electrolyzer_load_factor: f64,
    pub init_frac: f64,
    pub final_frac: f64,
    pub electrolyzer: Vec<f64>,
    pub fuel_cell: Vec<f64>,
    /// tank content at the start of every hour plus the end of the horizon, kg
    pub tank_mass: Vec<f64>,
}

impl H2Series {
    pub fn electrolyzer_draw(&self, t: usize) -> f64 {
        self.electrolyzer[t] * self.electrolyzer_load_factor
    }
}

/// Hourly dispatch of one case. Power in MW, energy in MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub hours: usize,
    pub load: Vec<f64>,
    pub import: Vec<f64>,
    pub dgs: Vec<DgSeries>,
    pub pv: Vec<PvSeries>,
    pub battery: Option<BatterySeries>,
    pub h2: Option<H2Series>,
    pub bus_ids: Vec<usize>,
    /// net real injection `[hour][bus index]`, generation minus consumption
    pub bus_injection_p: Vec<Vec<f64>>,
    pub bus_injection_q: Vec<Vec<f64>>,
    /// voltage magnitude `[hour][bus index]`, p.u.
    pub voltages: Vec<Vec<f64>>,
    /// true when voltages are the solver's own variables, false for a post-solve sweep
    pub voltages_from_solver: bool,
}

impl ScheduleResult {
    pub fn pv_available(&self, t: usize) -> f64 {
        self.pv.iter().map(|p| p.available[t]).sum()
    }

    pub fn pv_dispatched(&self, t: usize) -> f64 {
        self.pv.iter().map(|p| p.dispatched[t]).sum()
    }

    pub fn pv_curtailed(&self, t: usize) -> f64 {
        self.pv.iter().map(|p| p.curtailed[t]).sum()
    }

    pub fn dg_total(&self, t: usize) -> f64 {
        self.dgs.iter().map(|d| d.output[t]).sum()
    }

    pub fn battery_charge(&self, t: usize) -> f64 {
        self.battery.as_ref().map_or(0.0, |b| b.charge[t])
    }

    pub fn battery_discharge(&self, t: usize) -> f64 {
        self.battery.as_ref().map_or(0.0, |b| b.discharge[t])
    }

    pub fn electrolyzer_draw(&self, t: usize) -> f64 {
        self.h2.as_ref().map_or(0.0, |h| h.electrolyzer_draw(t))
    }

    pub fn fuel_cell(&self, t: usize) -> f64 {
        self.h2.as_ref().map_or(0.0, |h| h.fuel_cell[t])
    }

    /// Generation plus discharge plus import minus load and storage charging.
    pub fn balance_residual(&self, t: usize) -> f64 {
        let supply = self.dg_total(t) + self.pv_dispatched(t) + self.battery_discharge(t) + self.fuel_cell(t) + self.import[t];
        let demand = self.load[t] + self.battery_charge(t) + self.electrolyzer_draw(t);
        supply - demand
    }

    /// Hours where a storage device both charges and discharges above 1e-6 MW.
    pub fn simultaneous_hours(&self) -> Vec<usize> {
        (0..self.hours)
            .filter(|&t| {
                let b = self.battery.as_ref().is_some_and(|b| b.charge[t] > 1e-6 && b.discharge[t] > 1e-6);
                let h = self.h2.as_ref().is_some_and(|h| h.electrolyzer[t] > 1e-6 && h.fuel_cell[t] > 1e-6);
                b || h
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub battery_power_mw: f64,
    pub battery_energy_mwh: f64,
    pub battery_duration_h: f64,
    pub electrolyzer_mw: f64,
    pub tank_kg: f64,
    pub fuel_cell_mw: f64,
}

/// Checks every schedule invariant and returns the violations found.
///
/// Covered: series lengths, hourly power balance, PV split, DG capacity and
/// ramp limits, storage dynamics and bounds, tank boundary levels and the
/// battery duration identity.
pub fn check_invariants(s: &ScheduleResult, sizing: &SizingResult) -> Vec<String> {
    let mut out = Vec::new();
    let n = s.hours;
    let len_ok = |v: usize| v == n;
    if !len_ok(s.load.len()) || !len_ok(s.import.len()) {
        out.push("load/import series length differs from horizon".to_string());
        return out;
    }
    for d in &s.dgs {
        if !len_ok(d.output.len()) || !len_ok(d.commitment.len()) {
            out.push(format!("{}: series length", d.name));
            return out;
        }
    }
    for p in &s.pv {
        if !len_ok(p.available.len()) || !len_ok(p.dispatched.len()) || !len_ok(p.curtailed.len()) {
            out.push(format!("PV {}: series length", p.bus));
            return out;
        }
    }
    if let Some(b) = &s.battery {
        if !len_ok(b.charge.len()) || !len_ok(b.discharge.len()) || b.soc.len() != n + 1 {
            out.push("battery series length".to_string());
            return out;
        }
    }
    if let Some(h) = &s.h2 {
        if !len_ok(h.electrolyzer.len()) || !len_ok(h.fuel_cell.len()) || h.tank_mass.len() != n + 1 {
            out.push("hydrogen series length".to_string());
            return out;
        }
    }
    if s.bus_injection_p.len() != n || s.bus_injection_q.len() != n {
        out.push("bus injection series length".to_string());
    }

    let rel = |scale: f64| BALANCE_TOL_MW * (1.0 + scale);
    for t in 0..n {
        let r = s.balance_residual(t);
        if r.abs() > BALANCE_TOL_MW {
            out.push(format!("hour {t}: power balance residual {r:e} MW"));
        }
        if s.import[t] < -BALANCE_TOL_MW {
            out.push(format!("hour {t}: negative import"));
        }
        for p in &s.pv {
            let split = p.dispatched[t] + p.curtailed[t] - p.available[t];
            if split.abs() > BALANCE_TOL_MW || p.dispatched[t] < -BALANCE_TOL_MW || p.curtailed[t] < -BALANCE_TOL_MW {
                out.push(format!("hour {t}: PV {} split residual {split:e}", p.bus));
            }
        }
        for d in &s.dgs {
            let p = d.output[t];
            if p < -BALANCE_TOL_MW || p > d.capacity_mw + rel(d.capacity_mw) {
                out.push(format!("hour {t}: {} output {p} outside [0, {}]", d.name, d.capacity_mw));
            }
            if t > 0 && (p - d.output[t - 1]).abs() > d.ramp_mw_per_h + rel(d.ramp_mw_per_h) {
                out.push(format!("hour {t}: {} ramps by {}", d.name, p - d.output[t - 1]));
            }
        }
    }
    if let Some(b) = &s.battery {
        let e = sizing.battery_energy_mwh;
        if e != sizing.battery_duration_h * sizing.battery_power_mw {
            out.push("battery energy rating differs from duration x power".to_string());
        }
        for t in 0..n {
            let next = b.soc[t] + b.eta * b.charge[t] - b.discharge[t] / b.eta;
            if (next - b.soc[t + 1]).abs() > rel(e) {
                out.push(format!("hour {t}: battery state of charge does not follow its dynamics"));
            }
            if b.soc[t] < -rel(e) || b.soc[t] > e + rel(e) {
                out.push(format!("hour {t}: battery state of charge {} outside [0, {e}]", b.soc[t]));
            }
            let p = sizing.battery_power_mw;
            if b.charge[t] > p + rel(p) || b.discharge[t] > p + rel(p) {
                out.push(format!("hour {t}: battery power above rating"));
            }
        }
    }
    if let Some(h) = &s.h2 {
        let m = sizing.tank_kg;
        let tol = 1e-6 * (1.0 + m);
        if (h.tank_mass[0] - h.init_frac * m).abs() > tol {
            out.push(format!("initial tank level {} differs from {} x {m}", h.tank_mass[0], h.init_frac));
        }
        if (h.tank_mass[n] - h.final_frac * m).abs() > tol {
            out.push(format!("final tank level {} differs from {} x {m}", h.tank_mass[n], h.final_frac));
        }
        for t in 0..n {
            let next = h.tank_mass[t] + h.kg_per_mwh_in * h.electrolyzer[t] - h.kg_per_mwh_out * h.fuel_cell[t];
            if (next - h.tank_mass[t + 1]).abs() > tol {
                out.push(format!("hour {t}: tank mass does not follow its dynamics"));
            }
            if h.tank_mass[t + 1] < -tol || h.tank_mass[t + 1] > m + tol {
                out.push(format!("hour {t}: tank mass outside [0, {m}]"));
            }
            if h.electrolyzer[t] > sizing.electrolyzer_mw + rel(sizing.electrolyzer_mw)
                || h.fuel_cell[t] > sizing.fuel_cell_mw + rel(sizing.fuel_cell_mw)
            {
                out.push(format!("hour {t}: hydrogen power above rating"));
            }
        }
    }
    for (name, v) in [
        ("battery power", sizing.battery_power_mw),
        ("electrolyzer", sizing.electrolyzer_mw),
        ("tank", sizing.tank_kg),
        ("fuel cell", sizing.fuel_cell_mw),
    ] {
        if v < 0.0 {
            out.push(format!("{name} size is negative"));
        }
    }
    out
}
