use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::assets::AssetSpecs;
use crate::lp::{solve_lp, solve_milp, write_lp, MilpOptions, MipInfo, Solution};
use crate::network::{forward_sweep, profile_from_squared, Network};
use crate::profiles::ProfileSet;

use super::build::{build_problem, BuiltProblem};
use super::fixed_point::FixedPointStep;
use super::schedule::{check_invariants, BatterySeries, DgSeries, H2Series, PvSeries, ScheduleResult, SizingResult};
use super::{CaseConfig, CommitmentMode, NetworkMode, OptimizerError};

/// Solver voltages and the forward sweep must agree this closely, p.u.
pub const VOLTAGE_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub capital: f64,
    pub operation: f64,
}

/// Everything a solved case produces.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub config: CaseConfig,
    pub schedule: ScheduleResult,
    pub sizing: SizingResult,
    pub solution: Solution,
    pub costs: CostBreakdown,
    /// nodal marginal price `[hour][bus index]`, $/MWh
    pub dlmp: Vec<Vec<f64>>,
    /// LCOE charged per DG in the final solve
    pub dg_lcoe: Vec<f64>,
    pub mip: Option<MipInfo>,
    /// LCOE fixed-point history (only for runs with LCOE updates)
    pub lcoe_history: Vec<FixedPointStep>,
    pub converged: bool,
}

/// Builds, solves, unpacks and checks one case. Cases with LCOE updates
/// enabled run the full fixed-point iteration.
pub fn run_case(cfg: &CaseConfig, net: &Network, specs: &AssetSpecs, profiles: &ProfileSet) -> Result<CaseOutcome, OptimizerError> {
    if cfg.update_lcoes {
        return super::fixed_point::run_case_5b(cfg, net, specs, profiles).map(|r| r.into_outcome());
    }
    solve_case(cfg, net, specs, profiles, None)
}

/// One solve with the given DG LCOEs.
pub(crate) fn solve_case(
    cfg: &CaseConfig,
    net: &Network,
    specs: &AssetSpecs,
    profiles: &ProfileSet,
    dg_lcoe: Option<&[f64]>,
) -> Result<CaseOutcome, OptimizerError> {
    let built = build_problem(cfg, net, specs, profiles, dg_lcoe)?;
    debug!(
        "case {}: {} variables, {} rows",
        cfg.case_id,
        built.problem.num_vars(),
        built.problem.num_rows()
    );
    let solution = match cfg.commitment_mode {
        CommitmentMode::Relaxed => solve_lp(&built.problem)?,
        CommitmentMode::Exact => {
            let opts = MilpOptions { gap_tol: cfg.gap_tol, ..MilpOptions::default() };
            solve_milp(&built.problem, &opts)
        }
    };
    if !solution.is_optimal() {
        return Err(OptimizerError::Solve {
            case: cfg.case_id,
            status: solution.status,
            dump: write_lp(&built.problem),
        });
    }
    info!(
        "case {}: objective {:.2} after {} simplex iterations",
        cfg.case_id, solution.objective_value, solution.iterations
    );
    let outcome = unpack(cfg, net, specs, &built, solution)?;
    let violations = check_invariants(&outcome.schedule, &outcome.sizing);
    if let Some(first) = violations.first() {
        return Err(OptimizerError::Invariant {
            case: cfg.case_id,
            msg: format!("{first} ({} violations)", violations.len()),
        });
    }
    Ok(outcome)
}

fn unpack(
    cfg: &CaseConfig,
    net: &Network,
    specs: &AssetSpecs,
    built: &BuiltProblem,
    solution: Solution,
) -> Result<CaseOutcome, OptimizerError> {
    let v = &built.vars;
    let hours = v.hours;
    let nb = net.buses().len();
    let x = |h| solution.value(h);
    let series = |hs: &[crate::lp::VarHandle]| hs.iter().map(|&h| x(h)).collect::<Vec<f64>>();
    let nonneg = |hs: &[crate::lp::VarHandle]| hs.iter().map(|&h| x(h).max(0.0)).collect::<Vec<f64>>();

    let dgs: Vec<DgSeries> = specs
        .dgs
        .iter()
        .zip(v.dg_output.iter().zip(&v.dg_commit))
        .map(|(d, (out, on))| DgSeries {
            name: d.name.clone(),
            bus: d.bus,
            capacity_mw: d.capacity_mw,
            ramp_mw_per_h: d.ramp_mw_per_h,
            output: nonneg(out),
            commitment: nonneg(on),
        })
        .collect();
    let pv: Vec<PvSeries> = v
        .pv
        .iter()
        .zip(&v.pv_available)
        .zip(&v.pv_bus)
        .map(|((vars, avail), &bus)| {
            let dispatched: Vec<f64> = vars.iter().zip(avail).map(|(&h, &a)| x(h).clamp(0.0, a)).collect();
            let curtailed = dispatched.iter().zip(avail).map(|(d, a)| a - d).collect();
            PvSeries { bus, available: avail.clone(), dispatched, curtailed }
        })
        .collect();

    let mut sizing = SizingResult::default();
    let battery = v.battery.as_ref().map(|b| {
        let kind = cfg.roster.battery.expect("battery vars imply a battery roster");
        let spec = specs.battery(kind);
        sizing.battery_power_mw = x(b.power).max(0.0);
        sizing.battery_duration_h = spec.duration_h;
        sizing.battery_energy_mwh = spec.energy_rating(sizing.battery_power_mw);
        let mut soc = nonneg(&b.soc);
        soc.push(soc[0]);
        BatterySeries {
            kind,
            bus: spec.bus,
            eta: spec.one_way_efficiency(),
            charge: nonneg(&b.charge),
            discharge: nonneg(&b.discharge),
            soc,
        }
    });
    let h2 = v.h2.as_ref().map(|h| {
        sizing.electrolyzer_mw = x(h.electrolyzer_cap).max(0.0);
        sizing.fuel_cell_mw = x(h.fuel_cell_cap).max(0.0);
        sizing.tank_kg = x(h.tank).max(0.0);
        H2Series {
            bus: specs.h2.bus,
            kg_per_mwh_in: specs.h2.kg_per_mwh_in(),
            kg_per_mwh_out: specs.h2.kg_per_mwh_out(),
            electrolyzer_load_factor: v.electrolyzer_load_factor,
            init_frac: cfg.tank_init_frac,
            final_frac: cfg.tank_final_frac,
            electrolyzer: nonneg(&h.electrolyzer),
            fuel_cell: nonneg(&h.fuel_cell),
            tank_mass: nonneg(&h.mass),
        }
    });

    let load: Vec<f64> = (0..hours).map(|t| v.load_p[t].iter().sum()).collect();
    let import = nonneg(&v.import);

    // nodal injections; the slack absorbs whatever the rest of the feeder needs
    let mut inj_p = vec![vec![0.0; nb]; hours];
    let mut inj_q = vec![vec![0.0; nb]; hours];
    let idx = |bus: usize| net.index_of(bus).expect("assets were placed on existing buses");
    let slack = net.slack_index();
    for t in 0..hours {
        for i in 0..nb {
            inj_p[t][i] -= v.load_p[t][i];
            inj_q[t][i] -= v.load_q[t][i];
        }
        for d in &dgs {
            inj_p[t][idx(d.bus)] += d.output[t];
        }
        for p in &pv {
            inj_p[t][idx(p.bus)] += p.dispatched[t];
        }
        if let Some(b) = &battery {
            inj_p[t][idx(b.bus)] += b.discharge[t] - b.charge[t];
        }
        if let Some(h) = &h2 {
            inj_p[t][idx(h.bus)] += h.fuel_cell[t] - h.electrolyzer_draw(t);
        }
        if cfg.network_mode == NetworkMode::Full {
            for (g, qs) in v.dg_reactive.iter().enumerate() {
                inj_q[t][idx(dgs[g].bus)] += x(qs[t]);
            }
            for (k, qs) in v.pv_reactive.iter().enumerate() {
                inj_q[t][idx(pv[k].bus)] += x(qs[t]);
            }
        }
        let others_p: f64 = (0..nb).filter(|&i| i != slack).map(|i| inj_p[t][i]).sum();
        let others_q: f64 = (0..nb).filter(|&i| i != slack).map(|i| inj_q[t][i]).sum();
        inj_p[t][slack] = -others_p;
        inj_q[t][slack] = -others_q;
    }

    let swept = forward_sweep(net, &inj_p, &inj_q)?;
    let (voltages, from_solver) = match &v.flow {
        Some(model) => {
            let w: Vec<Vec<f64>> = model.v_sq.iter().map(|row| series(row)).collect();
            for t in 0..hours {
                for i in 0..nb {
                    let diff = (w[t][i].max(0.0).sqrt() - swept[t][i].max(0.0).sqrt()).abs();
                    if diff > VOLTAGE_MATCH_TOL {
                        return Err(OptimizerError::Invariant {
                            case: cfg.case_id,
                            msg: format!("hour {t} bus {}: solver voltage differs from sweep by {diff:e}", net.buses()[i].id),
                        });
                    }
                }
            }
            let prof = profile_from_squared(&w);
            if !prof.within(net.v_min, net.v_max, VOLTAGE_MATCH_TOL) {
                return Err(OptimizerError::Invariant {
                    case: cfg.case_id,
                    msg: format!("voltages span [{}, {}] outside the band", prof.min(), prof.max()),
                });
            }
            (prof.magnitude, true)
        }
        None => (profile_from_squared(&swept).magnitude, false),
    };

    let dlmp: Vec<Vec<f64>> = v.balance.iter().map(|rows| rows.iter().map(|&r| solution.dual(r)).collect()).collect();
    let capital: f64 = v.capital_vars.iter().map(|&(h, c)| c * x(h)).sum();
    let total = solution.objective_value;
    let schedule = ScheduleResult {
        hours,
        load,
        import,
        dgs,
        pv,
        battery,
        h2,
        bus_ids: net.buses().iter().map(|b| b.id).collect(),
        bus_injection_p: inj_p,
        bus_injection_q: inj_q,
        voltages,
        voltages_from_solver: from_solver,
    };
    let mip = solution.mip.clone();
    Ok(CaseOutcome {
        config: cfg.clone(),
        schedule,
        sizing,
        solution,
        costs: CostBreakdown { total, capital, operation: total - capital },
        dlmp,
        dg_lcoe: built.dg_lcoe.clone(),
        mip,
        lcoe_history: Vec::new(),
        converged: true,
    })
}
