use crate::assets::AssetSpecs;
use crate::lp::{Problem, RowId, Sense, VarHandle};
use crate::network::{build_lindistflow, FlowModel, NodalInjections, Network};
use crate::profiles::{ProfileSet, HORIZON_HOURS};

use super::{CaseConfig, CommitmentMode, NetworkMode, OptimizerError};

/// Reactive capability of DG and PV inverters per MW of rating (power factor 0.9).
pub const REACTIVE_RATIO: f64 = 0.484_322_104_837_8;

pub fn copperplate_tag(hour: usize) -> String {
    format!("p_balance:all:{hour}")
}

#[derive(Debug, Clone)]
pub struct BatteryVars {
    pub power: VarHandle,
    pub charge: Vec<VarHandle>,
    pub discharge: Vec<VarHandle>,
    /// state at the start of each hour; hour `T` wraps to hour 0
    pub soc: Vec<VarHandle>,
}

#[derive(Debug, Clone)]
pub struct H2Vars {
    pub electrolyzer_cap: VarHandle,
    pub fuel_cell_cap: VarHandle,
    pub tank: VarHandle,
    pub electrolyzer: Vec<VarHandle>,
    pub fuel_cell: Vec<VarHandle>,
    /// `T + 1` levels
    pub mass: Vec<VarHandle>,
}

/// Handles of every decision variable, indexed `[unit][hour]` unless noted.
#[derive(Debug, Clone)]
pub struct VarMap {
    pub hours: usize,
    pub dg_output: Vec<Vec<VarHandle>>,
    pub dg_commit: Vec<Vec<VarHandle>>,
    pub pv: Vec<Vec<VarHandle>>,
    pub pv_available: Vec<Vec<f64>>,
    pub pv_bus: Vec<usize>,
    pub import: Vec<VarHandle>,
    pub battery: Option<BatteryVars>,
    pub h2: Option<H2Vars>,
    /// nodal real-power balance row `[hour][bus index]`; copperplate repeats one row per hour
    pub balance: Vec<Vec<RowId>>,
    pub flow: Option<FlowModel>,
    /// `[hour][bus index]`, MW and Mvar
    pub load_p: Vec<Vec<f64>>,
    pub load_q: Vec<Vec<f64>>,
    /// objective terms that price capacity
    pub capital_vars: Vec<(VarHandle, f64)>,
    pub electrolyzer_load_factor: f64,
    pub dg_reactive: Vec<Vec<VarHandle>>,
    pub pv_reactive: Vec<Vec<VarHandle>>,
    pub import_reactive: Vec<VarHandle>,
}

#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub problem: Problem,
    pub vars: VarMap,
    pub dg_lcoe: Vec<f64>,
}

fn bus_index(net: &Network, bus: usize, what: &str) -> Result<usize, OptimizerError> {
    net.index_of(bus).ok_or_else(|| OptimizerError::Config(format!("{what} sits at bus {bus}, which is not in the network")))
}

/// Assembles the operation and sizing LP (or MILP in exact commitment mode).
///
/// `dg_lcoe` gives the energy price charged per DG; `None` uses the case
/// defaults from [`CaseConfig::base_dg_lcoe`].
pub fn build_problem(
    cfg: &CaseConfig,
    net: &Network,
    specs: &AssetSpecs,
    profiles: &ProfileSet,
    dg_lcoe: Option<&[f64]>,
) -> Result<BuiltProblem, OptimizerError> {
    cfg.check().map_err(OptimizerError::Config)?;
    specs.check().map_err(OptimizerError::Config)?;
    profiles.check().map_err(OptimizerError::Config)?;
    let hours = cfg.horizon;
    if profiles.hours() < hours {
        return Err(OptimizerError::Config(format!(
            "profiles cover {} hours, the case needs {hours}",
            profiles.hours()
        )));
    }
    let dg_lcoe: Vec<f64> = match dg_lcoe {
        Some(l) if l.len() == specs.dgs.len() => l.to_vec(),
        Some(l) => {
            return Err(OptimizerError::Config(format!("{} LCOEs given for {} DGs", l.len(), specs.dgs.len())));
        }
        None => cfg.base_dg_lcoe(specs),
    };
    let full = cfg.network_mode == NetworkMode::Full;
    let nb = net.buses().len();
    let horizon_fraction = specs.fin.horizon_fraction * hours as f64 / HORIZON_HOURS as f64;
    let charge = |capex: f64, life: f64| {
        1000.0 * crate::assets::horizon_capex(1.0, capex, crate::assets::crf(specs.fin.interest, life), horizon_fraction)
    };

    let mut p = Problem::new();
    let mut inj = NodalInjections::new(hours, nb);
    let mut load_p = vec![vec![0.0; nb]; hours];
    let mut load_q = vec![vec![0.0; nb]; hours];
    for t in 0..hours {
        let f = profiles.load_factor[t];
        for (i, b) in net.buses().iter().enumerate() {
            load_p[t][i] = f * b.p_load_kw / 1000.0;
            load_q[t][i] = f * b.q_load_kvar / 1000.0;
        }
    }
    // load scale follows the profile's base, so a custom feeder keeps its energy
    let base = net.total_load_kw() / 1000.0;
    if base > 0.0 && (base - profiles.base_load_mw).abs() > 1e-9 * base {
        let k = profiles.base_load_mw / base;
        load_p.iter_mut().chain(load_q.iter_mut()).flatten().for_each(|v| *v *= k);
    }
    inj.p_load = load_p.clone();
    inj.q_load = load_q.clone();

    let slack = net.slack_index();
    let mut capital_vars = Vec::new();

    // grid import at the substation
    let import_price = cfg.effective_import_price(specs);
    let mut import = Vec::with_capacity(hours);
    let mut import_reactive = Vec::new();
    for t in 0..hours {
        let v = p.add_var(format!("import[{t}]"), 0.0, cfg.import_limit_mw)?;
        p.add_cost(v, import_price);
        inj.p_terms[t][slack].push((v, 1.0));
        import.push(v);
        if full {
            let q = p.add_var(format!("import_q[{t}]"), f64::NEG_INFINITY, f64::INFINITY)?;
            inj.q_terms[t][slack].push((q, 1.0));
            import_reactive.push(q);
        }
    }

    // DGs
    let mut dg_output = Vec::new();
    let mut dg_commit = Vec::new();
    let mut dg_reactive = Vec::new();
    if cfg.roster.dgs {
        for (g, d) in specs.dgs.iter().enumerate() {
            let bi = bus_index(net, d.bus, &d.name)?;
            let mut out = Vec::with_capacity(hours);
            let mut on = Vec::with_capacity(hours);
            let mut qs = Vec::new();
            for t in 0..hours {
                let x = p.add_var(format!("{}[{t}]", d.name), 0.0, d.capacity_mw)?;
                p.add_cost(x, dg_lcoe[g]);
                let u = match cfg.commitment_mode {
                    CommitmentMode::Relaxed => p.add_var(format!("{}_on[{t}]", d.name), 0.0, 1.0)?,
                    CommitmentMode::Exact => p.add_binary(format!("{}_on[{t}]", d.name)),
                };
                p.add_cost(u, d.no_load_cost);
                p.add_constraint(vec![(x, 1.0), (u, -d.capacity_mw)], Sense::Le, 0.0, "")?;
                if d.min_output_mw > 0.0 {
                    p.add_constraint(vec![(x, 1.0), (u, -d.min_output_mw)], Sense::Ge, 0.0, "")?;
                }
                if t > 0 {
                    let prev = out[t - 1];
                    p.add_constraint(vec![(x, 1.0), (prev, -1.0)], Sense::Le, d.ramp_mw_per_h, "")?;
                    p.add_constraint(vec![(x, 1.0), (prev, -1.0)], Sense::Ge, -d.ramp_mw_per_h, "")?;
                }
                inj.p_terms[t][bi].push((x, 1.0));
                if full {
                    let lim = REACTIVE_RATIO * d.capacity_mw;
                    let q = p.add_var(format!("{}_q[{t}]", d.name), -lim, lim)?;
                    inj.q_terms[t][bi].push((q, 1.0));
                    qs.push(q);
                }
                out.push(x);
                on.push(u);
            }
            dg_output.push(out);
            dg_commit.push(on);
            dg_reactive.push(qs);
        }
    }

    // PV units share the installed capacity equally
    let mut pv = Vec::new();
    let mut pv_available = Vec::new();
    let mut pv_bus = Vec::new();
    let mut pv_reactive = Vec::new();
    if cfg.roster.pv && !specs.pv.buses.is_empty() {
        let units = specs.pv.buses.len() as f64;
        let unit_cap = profiles.pv_capacity_mw(cfg.pv_penetration) / units;
        for &bus in &specs.pv.buses {
            let bi = bus_index(net, bus, "PV")?;
            let mut vars = Vec::with_capacity(hours);
            let mut avail = Vec::with_capacity(hours);
            let mut qs = Vec::new();
            for t in 0..hours {
                let a = profiles.pv_available_mw(t, cfg.pv_penetration) / units;
                let x = p.add_var(format!("pv{bus}[{t}]"), 0.0, a)?;
                p.add_cost(x, specs.pv.lcoe - cfg.curtail_penalty);
                p.add_objective_offset(cfg.curtail_penalty * a);
                inj.p_terms[t][bi].push((x, 1.0));
                if full {
                    let lim = REACTIVE_RATIO * unit_cap;
                    let q = p.add_var(format!("pv{bus}_q[{t}]"), -lim, lim)?;
                    inj.q_terms[t][bi].push((q, 1.0));
                    qs.push(q);
                }
                vars.push(x);
                avail.push(a);
            }
            pv.push(vars);
            pv_available.push(avail);
            pv_bus.push(bus);
            pv_reactive.push(qs);
        }
    }

    // battery
    let battery = match cfg.roster.battery {
        None => None,
        Some(kind) => {
            let b = specs.battery(kind);
            let bi = bus_index(net, b.bus, "battery")?;
            let eta = b.one_way_efficiency();
            let power = p.add_var("battery_power", 0.0, f64::INFINITY)?;
            let c = charge(b.capex_per_kw, b.lifetime_yr);
            p.add_cost(power, c);
            capital_vars.push((power, c));
            let mut ch = Vec::with_capacity(hours);
            let mut dis = Vec::with_capacity(hours);
            let mut soc = Vec::with_capacity(hours);
            for t in 0..hours {
                let c = p.add_var(format!("charge[{t}]"), 0.0, f64::INFINITY)?;
                let d = p.add_var(format!("discharge[{t}]"), 0.0, f64::INFINITY)?;
                let s = p.add_var(format!("soc[{t}]"), 0.0, f64::INFINITY)?;
                p.add_constraint(vec![(c, 1.0), (power, -1.0)], Sense::Le, 0.0, "")?;
                p.add_constraint(vec![(d, 1.0), (power, -1.0)], Sense::Le, 0.0, "")?;
                p.add_constraint(vec![(s, 1.0), (power, -b.duration_h)], Sense::Le, 0.0, "")?;
                inj.p_terms[t][bi].push((d, 1.0));
                inj.p_terms[t][bi].push((c, -1.0));
                ch.push(c);
                dis.push(d);
                soc.push(s);
            }
            for t in 0..hours {
                let next = soc[(t + 1) % hours];
                let mut row = vec![(soc[t], -1.0), (ch[t], -eta), (dis[t], 1.0 / eta)];
                if next == soc[t] {
                    row.remove(0);
                } else {
                    row.push((next, 1.0));
                }
                p.add_constraint(row, Sense::Eq, 0.0, "")?;
            }
            Some(BatteryVars { power, charge: ch, discharge: dis, soc })
        }
    };

    // hydrogen chain
    let ez_factor = 1.0 + specs.h2.compression_kwh_per_kg / specs.h2.e_spec;
    let h2 = if cfg.roster.h2 {
        let h = &specs.h2;
        let bi = bus_index(net, h.bus, "hydrogen system")?;
        let ez_cap = p.add_var("electrolyzer_cap", 0.0, f64::INFINITY)?;
        let fc_cap = p.add_var("fuel_cell_cap", 0.0, f64::INFINITY)?;
        let tank = p.add_var("tank_cap", 0.0, f64::INFINITY)?;
        let c_ez = charge(h.ez_capex, h.ez_lifetime_yr) + charge(h.comp_capex, h.comp_lifetime_yr);
        let c_fc = charge(h.fc_capex, h.fc_lifetime_yr);
        let c_tank = charge(h.tank_capex, h.tank_lifetime_yr) / 1000.0;
        for (v, c) in [(ez_cap, c_ez), (fc_cap, c_fc), (tank, c_tank)] {
            p.add_cost(v, c);
            capital_vars.push((v, c));
        }
        let kin = h.kg_per_mwh_in();
        let kout = h.kg_per_mwh_out();
        let mut ez = Vec::with_capacity(hours);
        let mut fc = Vec::with_capacity(hours);
        let mut mass = Vec::with_capacity(hours + 1);
        for t in 0..=hours {
            mass.push(p.add_var(format!("tank[{t}]"), 0.0, f64::INFINITY)?);
        }
        p.add_constraint(vec![(mass[0], 1.0), (tank, -cfg.tank_init_frac)], Sense::Eq, 0.0, "tank_initial")?;
        p.add_constraint(vec![(mass[hours], 1.0), (tank, -cfg.tank_final_frac)], Sense::Eq, 0.0, "tank_final")?;
        for t in 0..hours {
            let e = p.add_var(format!("electrolyzer[{t}]"), 0.0, f64::INFINITY)?;
            let f = p.add_var(format!("fuel_cell[{t}]"), 0.0, f64::INFINITY)?;
            p.add_cost(e, h.storage_cost * kin);
            p.add_constraint(vec![(e, 1.0), (ez_cap, -1.0)], Sense::Le, 0.0, "")?;
            p.add_constraint(vec![(f, 1.0), (fc_cap, -1.0)], Sense::Le, 0.0, "")?;
            if t + 1 < hours {
                p.add_constraint(vec![(mass[t + 1], 1.0), (tank, -1.0)], Sense::Le, 0.0, "")?;
            }
            p.add_constraint(
                vec![(mass[t + 1], 1.0), (mass[t], -1.0), (e, -kin), (f, kout)],
                Sense::Eq,
                0.0,
                "",
            )?;
            inj.p_terms[t][bi].push((f, 1.0));
            inj.p_terms[t][bi].push((e, -ez_factor));
            ez.push(e);
            fc.push(f);
        }
        Some(H2Vars { electrolyzer_cap: ez_cap, fuel_cell_cap: fc_cap, tank, electrolyzer: ez, fuel_cell: fc, mass })
    } else {
        None
    };

    // power balance
    let (balance, flow) = if full {
        let model = build_lindistflow(net, &mut p, &inj)?;
        (model.p_balance.clone(), Some(model))
    } else {
        let mut rows = Vec::with_capacity(hours);
        for t in 0..hours {
            let mut coeffs: Vec<(VarHandle, f64)> = Vec::new();
            for bus_terms in &inj.p_terms[t] {
                crate::network::merge_terms(&mut coeffs, bus_terms);
            }
            let demand: f64 = load_p[t].iter().sum();
            let row = p.add_constraint(coeffs, Sense::Eq, demand, copperplate_tag(t))?;
            rows.push(vec![row; nb]);
        }
        (rows, None)
    };

    Ok(BuiltProblem {
        problem: p,
        vars: VarMap {
            hours,
            dg_output,
            dg_commit,
            pv,
            pv_available,
            pv_bus,
            import,
            battery,
            h2,
            balance,
            flow,
            load_p,
            load_q,
            capital_vars,
            electrolyzer_load_factor: ez_factor,
            dg_reactive,
            pv_reactive,
            import_reactive,
        },
        dg_lcoe,
    })
}
