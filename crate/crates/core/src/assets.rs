//! Asset parameters, storage dynamics and capital annualization.
//!
//! Units: power in MW, energy in MWh, hydrogen in kg, CAPEX in $/kW or $/kg.

use serde::{Deserialize, Serialize};

/// Two weeks as a fraction of a year.
pub const TWO_WEEKS: f64 = 14.0 / 365.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgSpec {
    pub name: String,
    pub bus: usize,
    pub capacity_mw: f64,
    /// $/MWh at the reference capacity factor
    pub lcoe: f64,
    /// reference capacity factor, fraction
    pub nrel_cf: f64,
    pub ramp_mw_per_h: f64,
    /// $/h while committed
    pub no_load_cost: f64,
    pub min_output_mw: f64,
}

impl DgSpec {
    /// A unit with the default ramp (25 % of capacity per hour) and no minimum output.
    pub fn new(name: &str, bus: usize, capacity_mw: f64, lcoe: f64, nrel_cf: f64, no_load_cost: f64) -> Self {
        DgSpec {
            name: name.to_string(),
            bus,
            capacity_mw,
            lcoe,
            nrel_cf,
            ramp_mw_per_h: 0.25 * capacity_mw,
            no_load_cost,
            min_output_mw: 0.0,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.nrel_cf > 0.0 && self.nrel_cf <= 1.0) {
            return Err(format!("{}: reference capacity factor must lie in (0, 1]", self.name));
        }
        if !(self.ramp_mw_per_h > 0.0) {
            return Err(format!("{}: ramp must be positive", self.name));
        }
        if !(self.capacity_mw >= 0.0) || self.min_output_mw < 0.0 || self.min_output_mw > self.capacity_mw {
            return Err(format!("{}: need 0 <= min_output <= capacity", self.name));
        }
        if !(self.lcoe >= 0.0) || !(self.no_load_cost >= 0.0) {
            return Err(format!("{}: costs must be non-negative", self.name));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvSpec {
    pub buses: Vec<usize>,
    pub lcoe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatteryKind {
    LiIon,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub bus: usize,
    pub duration_h: f64,
    pub rte: f64,
    pub capex_per_kw: f64,
    pub lifetime_yr: f64,
}

impl BatterySpec {
    /// Charge and discharge efficiency, each `sqrt(rte)`.
    pub fn one_way_efficiency(&self) -> f64 {
        self.rte.sqrt()
    }

    pub fn energy_rating(&self, power_rating_mw: f64) -> f64 {
        self.duration_h * power_rating_mw
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.rte > 0.0 && self.rte <= 1.0) {
            return Err("battery round-trip efficiency must lie in (0, 1]".into());
        }
        if !(self.duration_h > 0.0) || !(self.capex_per_kw >= 0.0) || !(self.lifetime_yr >= 1.0) {
            return Err("battery duration, capex and lifetime must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Spec {
    pub bus: usize,
    pub eta_ez: f64,
    pub eta_fc: f64,
    /// electrolyzer input per kg produced, kWh/kg
    pub e_spec: f64,
    pub ez_capex: f64,
    pub comp_capex: f64,
    pub tank_capex: f64,
    pub fc_capex: f64,
    pub init_frac: f64,
    pub final_frac: f64,
    /// $/kg produced
    pub storage_cost: f64,
    /// compression energy, kWh/kg; 0 at the 40 bar electrolyzer outlet
    pub compression_kwh_per_kg: f64,
    pub ez_lifetime_yr: f64,
    pub fc_lifetime_yr: f64,
    pub tank_lifetime_yr: f64,
    pub comp_lifetime_yr: f64,
}

impl H2Spec {
    /// Round-trip efficiency of electrolysis followed by the fuel cell.
    pub fn rte(&self) -> f64 {
        self.eta_ez * self.eta_fc
    }

    /// kg produced per MWh of electrolyzer input.
    pub fn kg_per_mwh_in(&self) -> f64 {
        1000.0 / self.e_spec
    }

    /// kg consumed per MWh of fuel-cell output.
    pub fn kg_per_mwh_out(&self) -> f64 {
        1000.0 / (self.e_spec * self.rte())
    }

    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [("eta_ez", self.eta_ez), ("eta_fc", self.eta_fc)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} must lie in (0, 1]"));
            }
        }
        for (name, v) in [("init_frac", self.init_frac), ("final_frac", self.final_frac)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.e_spec > 0.0) {
            return Err("e_spec must be positive".into());
        }
        let costs = [self.ez_capex, self.comp_capex, self.tank_capex, self.fc_capex, self.storage_cost];
        if costs.iter().any(|c| !(*c >= 0.0)) || !(self.compression_kwh_per_kg >= 0.0) {
            return Err("hydrogen costs must be non-negative".into());
        }
        let lives = [self.ez_lifetime_yr, self.fc_lifetime_yr, self.tank_lifetime_yr, self.comp_lifetime_yr];
        if lives.iter().any(|l| !(*l >= 1.0)) {
            return Err("hydrogen lifetimes must be at least one year".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinParams {
    pub interest: f64,
    pub horizon_fraction: f64,
}

impl Default for FinParams {
    fn default() -> Self {
        FinParams { interest: 0.07, horizon_fraction: TWO_WEEKS }
    }
}

impl FinParams {
    /// Horizon charge per unit of capacity for an asset with the given life.
    pub fn unit_charge(&self, capex: f64, lifetime_yr: f64) -> f64 {
        horizon_capex(1.0, capex, crf(self.interest, lifetime_yr), self.horizon_fraction)
    }
}

/// Capital recovery factor `i (1+i)^n / ((1+i)^n - 1)`; tends to `1/n` as `i -> 0`.
pub fn crf(interest: f64, lifetime_yr: f64) -> f64 {
    if interest.abs() < 1e-12 {
        return 1.0 / lifetime_yr;
    }
    let g = (1.0 + interest).powf(lifetime_yr);
    interest * g / (g - 1.0)
}

/// Capital charge attributed to the study horizon.
pub fn horizon_capex(capacity: f64, capex: f64, crf: f64, horizon_fraction: f64) -> f64 {
    capacity * capex * crf * horizon_fraction
}

/// State of charge after one step.
pub fn soc_transition(soc: f64, charge: f64, discharge: f64, spec: &BatterySpec, dt: f64) -> f64 {
    let eta = spec.one_way_efficiency();
    soc + eta * charge * dt - discharge * dt / eta
}

/// Tank mass after one step.
pub fn tank_transition(mass: f64, p_ez: f64, p_fc: f64, spec: &H2Spec, dt: f64) -> f64 {
    mass + spec.kg_per_mwh_in() * p_ez * dt - spec.kg_per_mwh_out() * p_fc * dt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssetSpecs {
    pub dgs: Vec<DgSpec>,
    pub pv: PvSpec,
    pub li_ion: BatterySpec,
    pub flow: BatterySpec,
    pub h2: H2Spec,
    pub fin: FinParams,
    /// LCOE assigned to a DG whose actual capacity factor is (nearly) zero
    pub lcoe_cap: f64,
}

impl Default for AssetSpecs {
    fn default() -> Self {
        AssetSpecs {
            dgs: vec![
                DgSpec::new("DG8", 8, 0.8, 36.0, 0.88, 2.0),
                DgSpec::new("DG13", 13, 2.4, 95.0, 0.12, 5.0),
                DgSpec::new("DG30", 30, 1.0, 98.0, 0.12, 3.0),
            ],
            pv: PvSpec { buses: vec![10, 18, 19, 25, 28, 33], lcoe: 12.0 },
            li_ion: BatterySpec { bus: 6, duration_h: 4.0, rte: 0.81, capex_per_kw: 613.0, lifetime_yr: 15.0 },
            flow: BatterySpec { bus: 6, duration_h: 10.0, rte: 0.67, capex_per_kw: 1370.0, lifetime_yr: 15.0 },
            h2: H2Spec {
                bus: 19,
                eta_ez: 0.60,
                eta_fc: 0.70,
                e_spec: 57.5,
                ez_capex: 100.0,
                comp_capex: 148.0,
                tank_capex: 240.0,
                fc_capex: 500.0,
                init_frac: 0.10,
                final_frac: 0.10,
                storage_cost: 0.02,
                compression_kwh_per_kg: 0.0,
                ez_lifetime_yr: 10.0,
                fc_lifetime_yr: 10.0,
                tank_lifetime_yr: 20.0,
                comp_lifetime_yr: 20.0,
            },
            fin: FinParams::default(),
            lcoe_cap: 11_400.0,
        }
    }
}

impl AssetSpecs {
    pub fn battery(&self, kind: BatteryKind) -> &BatterySpec {
        match kind {
            BatteryKind::LiIon => &self.li_ion,
            BatteryKind::Flow => &self.flow,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        for dg in &self.dgs {
            dg.check()?;
        }
        self.li_ion.check()?;
        self.flow.check()?;
        self.h2.check()?;
        if !(self.fin.interest > 0.0) || !(self.fin.horizon_fraction > 0.0) {
            return Err("interest and horizon fraction must be positive".into());
        }
        if !(self.pv.lcoe >= 0.0) || !(self.lcoe_cap > 0.0) {
            return Err("PV LCOE and price cap must be non-negative".into());
        }
        Ok(())
    }
}
