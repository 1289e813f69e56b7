//! One check per acceptance criterion. Each returns a short detail line on
//! success and the first failure otherwise.

use std::collections::HashMap;
use std::fs;
use std::time::Instant;

use h2grid::assets::{soc_transition, tank_transition};
use h2grid::lp::solve_lp;
use h2grid::metrics::{fit_h2_params, green_fraction, h2_cost};
use h2grid::optimizer::{build_problem, run_case, update_lcoe, CaseOutcome, BALANCE_TOL_MW};
use h2grid::profiles::gen_profiles;
use h2grid::runner::{self, Compressor, H2SweepParams, RunManifest};
use h2grid::{AssetSpecs, BatteryKind, CaseConfig, CaseId, DgSpec, Network, NetworkMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub type Check = Result<String, String>;

/// $/kg, every reproduced table cell
pub const H2_TABLE_TOL: f64 = 0.01;
pub const ROUND_TRIP_TOL: f64 = 1e-6;
pub const LP_OBJ_TOL: f64 = 1e-6;
pub const DUALITY_GAP_TOL: f64 = 1e-6;
pub const VOLTAGE_MATCH_TOL: f64 = 1e-6;
/// p.u. slack on the voltage band, same as the solver's feasibility tolerance
pub const BAND_TOL: f64 = 1e-7;
pub const FD_REL_TOL: f64 = 0.01;
pub const FD_STEP_MW: f64 = 0.001;
pub const PRICE_EXACT_TOL: f64 = 1e-9;
pub const CF_TOL: f64 = 0.01;
pub const SWEEP_SECONDS: f64 = 600.0;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn h2_tables() -> Check {
    let capex_pts: Vec<(f64, f64)> = CAPEX_TABLE.iter().map(|&(c, p, _)| (c, p)).collect();
    let lcoe_pts: Vec<(f64, f64)> = LCOE_GRID.iter().copied().zip(LOW_PRESSURE_ROW).collect();
    let fit = fit_h2_params(&capex_pts, &lcoe_pts).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut note = |got: f64, want: f64, what: String| -> Result<(), String> {
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= H2_TABLE_TOL, || format!("{what}: model {got:.4}, table {want:.2}"))
    };
    for &(capex, production, total) in &CAPEX_TABLE {
        let c = h2_cost(capex, 0.0, 12.0, fit.e_spec, fit.capex_rate, TABLE_STORAGE);
        note(c.production(), production, format!("CAPEX {capex} production"))?;
        note(c.storage_component, TABLE_STORAGE, format!("CAPEX {capex} storage"))?;
        note(c.total, total, format!("CAPEX {capex} total"))?;
    }
    let params = H2SweepParams { e_spec: fit.e_spec, capex_rate: fit.capex_rate, storage_cost: 0.0, comp_capex: 148.0, target: 1.0 };
    let cells = runner::sweep_h2(&[100.0], &LCOE_GRID, Compressor::Both, &params).map_err(|e| e.to_string())?;
    for cell in &cells {
        let k = LCOE_GRID.iter().position(|&l| l == cell.cost.pv_lcoe).expect("grid value");
        let (want, row) = if cell.compressor { (MODERATE_PRESSURE_ROW[k], "350 bar") } else { (LOW_PRESSURE_ROW[k], "40 bar") };
        note(cell.cost.total, want, format!("{row} at PV LCOE {}", cell.cost.pv_lcoe))?;
    }
    Ok(format!(
        "e_spec {:.3} kWh/kg, capex rate {:.7}; 36 cells, max error ${worst:.4}/kg",
        fit.e_spec, fit.capex_rate
    ))
}

pub fn round_trips() -> Check {
    let specs = AssetSpecs::default();
    let h2 = &specs.h2;
    // electrolyze 1 MWh, store, then burn the whole tank
    let stored = tank_transition(0.0, 1.0, 0.0, h2, 1.0);
    let out_per_in = stored / h2.kg_per_mwh_out();
    let in_per_out = 1.0 / out_per_in;
    let expect = 1.0 / (0.60 * 0.70);
    ensure((in_per_out - expect).abs() <= ROUND_TRIP_TOL, || format!("H2 chain needs {in_per_out} MWh per MWh, expected {expect}"))?;
    ensure(format!("{in_per_out:.3}") == "2.381", || format!("H2 chain {in_per_out:.6} does not round to 2.381"))?;
    let empty = tank_transition(stored, 0.0, out_per_in, h2, 1.0);
    ensure(empty.abs() <= 1e-12, || format!("tank not empty after full discharge: {empty}"))?;
    let mut got = Vec::new();
    for (kind, want) in [(BatteryKind::LiIon, 0.81), (BatteryKind::Flow, 0.67)] {
        let spec = specs.battery(kind);
        let soc = soc_transition(0.0, 1.0, 0.0, spec, 1.0);
        // the discharge that drains the stored energy
        let out = soc * spec.one_way_efficiency();
        let left = soc_transition(soc, 0.0, out, spec, 1.0);
        ensure((out - want).abs() <= 1e-12 && left.abs() <= 1e-12, || format!("{kind:?} returns {out}, expected {want}"))?;
        got.push(out);
    }
    Ok(format!("H2 {in_per_out:.6} MWh in per MWh out; Li-ion {:.4}, flow {:.4}", got[0], got[1]))
}

pub fn lcoe_update() -> Check {
    let cap = AssetSpecs::default().lcoe_cap;
    let mut checked = 0;
    for (lcoe, nrel) in [(36.0, 0.88), (95.0, 0.12), (98.0, 0.12), (30.0, 0.5), (32.0, 0.9)] {
        let d = DgSpec::new("g", 8, 1.0, lcoe, nrel, 0.0);
        for cf in [0.9, 0.5, 0.24, 0.12, 0.06, 0.03, 0.01, 0.004] {
            let base = update_lcoe(&d, cf, cap);
            let halved = update_lcoe(&d, cf / 2.0, cap);
            let doubled = update_lcoe(&d, cf * 2.0, cap);
            if 2.0 * base < cap && cf / 2.0 >= 0.001 {
                ensure(halved == 2.0 * base, || format!("CF halved from {cf}: {halved} != 2 x {base}"))?;
            }
            if base < cap {
                ensure(doubled == base / 2.0, || format!("CF doubled from {cf}: {doubled} != {base} / 2"))?;
            }
            ensure(base == (nrel / cf * lcoe).min(cap), || format!("LCOE at CF {cf}"))?;
            checked += 1;
        }
        for cf in [0.0, 1e-6, 0.0005, 0.000999] {
            ensure(update_lcoe(&d, cf, cap) == cap, || format!("CF {cf} should be capped"))?;
        }
        ensure(update_lcoe(&d, nrel, cap) == lcoe, || "reference CF must return the base LCOE".into())?;
    }
    Ok(format!("{checked} CF points exact; below 0.1% capped at ${cap}/MWh"))
}

pub fn lp_oracle() -> Check {
    let start = Instant::now();
    let mut worst_obj = 0.0f64;
    let mut worst_gap = 0.0f64;
    for seed in 0..200 {
        let lp = random_lp(seed, true);
        let want = vertex_enumeration(&lp).ok_or_else(|| format!("seed {seed}: oracle found no vertex"))?;
        let p = lp.to_problem();
        let s = solve_lp(&p).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(s.is_optimal(), || format!("seed {seed}: status {}", s.status))?;
        let err = (s.objective_value - want).abs();
        let gap = (s.objective_value - s.dual_objective(&p)).abs();
        worst_obj = worst_obj.max(err);
        worst_gap = worst_gap.max(gap);
        ensure(err <= LP_OBJ_TOL, || format!("seed {seed}: objective {} vs vertex {want}", s.objective_value))?;
        ensure(gap <= DUALITY_GAP_TOL, || format!("seed {seed}: duality gap {gap:e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("200 LPs, max objective error {worst_obj:.1e}, max gap {worst_gap:.1e}, {secs:.2} s"))
}

/// The ten-case copperplate sweep at the default seed.
pub fn case_sweep() -> Result<(HashMap<CaseId, CaseOutcome>, f64), String> {
    let net = Network::ieee33();
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(runner::DEFAULT_SEED, 1.2);
    let start = Instant::now();
    let mut out = HashMap::new();
    for id in CaseId::ALL {
        let cfg = CaseConfig::for_case(id);
        let o = run_case(&cfg, &net, &specs, &profiles).map_err(|e| format!("case {id}: {e}"))?;
        out.insert(id, o);
    }
    Ok((out, start.elapsed().as_secs_f64()))
}

pub fn case_properties(cases: &HashMap<CaseId, CaseOutcome>, secs: f64) -> Check {
    use CaseId::*;
    let get = |id: CaseId| &cases[&id];
    let green = |id: CaseId| green_fraction(&get(id).schedule).map_err(|e| e.to_string());
    let obj = |id: CaseId| get(id).costs.total;
    let curtailed = |id: CaseId| -> f64 {
        let s = &get(id).schedule;
        (0..s.hours).map(|t| s.pv_curtailed(t)).sum()
    };

    let load: f64 = get(C1).schedule.load.iter().sum();
    ensure((load - 925.0).abs() < 1e-6, || format!("load energy {load} MWh"))?;
    // (a)
    let g1 = green(C1)?;
    ensure(g1 == 0.0, || format!("(a) case 1 green {g1}"))?;
    // (b)
    ensure(obj(C3) <= obj(C2), || format!("(b) case 3 {} > case 2 {}", obj(C3), obj(C2)))?;
    ensure(obj(C4) <= obj(C2), || format!("(b) case 4 {} > case 2 {}", obj(C4), obj(C2)))?;
    // (c)
    for id in [C3, C4, C5a, C5b, C6a, C6b] {
        ensure(get(id).config.pv_penetration == 1.2, || format!("(c) case {id} not at 120%"))?;
        ensure(curtailed(C2) >= curtailed(id), || format!("(c) case {id} curtails {} > case 2 {}", curtailed(id), curtailed(C2)))?;
    }
    // (d)
    let (g7a, g7b) = (green(C7a)?, green(C7b)?);
    ensure(get(C7b).config.tank_init_frac == 0.5 && get(C7b).config.tank_final_frac == 0.5, || "(d) 7b tank fractions".into())?;
    ensure(g7b >= 99.0, || format!("(d) case 7b green {g7b}"))?;
    ensure(g7b >= g7a, || format!("(d) case 7b green {g7b} < 7a {g7a}"))?;
    // (e)
    for (id, dur) in [(C3, 4.0), (C6a, 4.0), (C6b, 4.0), (C4, 10.0), (C7a, 10.0), (C7b, 10.0)] {
        let z = &get(id).sizing;
        ensure(z.battery_energy_mwh == dur * z.battery_power_mw, || {
            format!("(e) case {id}: E {} != {dur} x P {}", z.battery_energy_mwh, z.battery_power_mw)
        })?;
    }
    // (f)
    let mut worst = 0.0f64;
    for id in CaseId::ALL {
        let s = &get(id).schedule;
        for t in 0..s.hours {
            let supply = s.import[t] + s.dg_total(t) + s.pv_dispatched(t) + s.battery_discharge(t) + s.fuel_cell(t);
            let demand = s.load[t] + s.battery_charge(t) + s.electrolyzer_draw(t);
            worst = worst.max((supply - demand).abs());
            ensure((supply - demand).abs() <= BALANCE_TOL_MW, || format!("(f) case {id} hour {t}: imbalance {}", supply - demand))?;
        }
        if let Some(h) = &s.h2 {
            let m = get(id).sizing.tank_kg;
            let tol = 1e-6 * (1.0 + m);
            let (first, last) = (h.tank_mass[0], h.tank_mass[s.hours]);
            ensure((first - h.init_frac * m).abs() <= tol, || format!("(f) case {id}: initial tank {first} vs {}", h.init_frac * m))?;
            ensure((last - h.final_frac * m).abs() <= tol, || format!("(f) case {id}: final tank {last} vs {}", h.final_frac * m))?;
        }
    }
    ensure(secs < SWEEP_SECONDS, || format!("sweep took {secs:.0} s"))?;
    Ok(format!(
        "green 1={g1:.1}% 7a={g7a:.2}% 7b={g7b:.2}%; obj 2/3/4 = {:.0}/{:.0}/{:.0}; curtailed case 2 {:.1} MWh; max imbalance {worst:.1e} MW; sweep {secs:.1} s",
        obj(C2),
        obj(C3),
        obj(C4),
        curtailed(C2)
    ))
}

/// Squared voltages by summing drops along each bus's path from the slack,
/// computed from the raw line list.
pub fn path_sum_voltages(net: &Network, p_inj: &[f64], q_inj: &[f64]) -> Vec<f64> {
    let ids: Vec<usize> = net.buses().iter().map(|b| b.id).collect();
    let pos = |id: usize| ids.iter().position(|&b| b == id).unwrap();
    let slack = net.slack_id();
    // parent line of every bus, by walking outwards from the slack
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut frontier = vec![slack];
    let mut seen = vec![slack];
    while let Some(b) = frontier.pop() {
        for (l, line) in net.lines().iter().enumerate() {
            let other = if line.from_bus == b { line.to_bus } else if line.to_bus == b { line.from_bus } else { continue };
            if !seen.contains(&other) {
                seen.push(other);
                parent.insert(other, l);
                frontier.push(other);
            }
        }
    }
    let up = |mut b: usize| -> Vec<usize> {
        let mut path = Vec::new();
        while let Some(&l) = parent.get(&b) {
            path.push(l);
            let line = &net.lines()[l];
            b = if line.to_bus == b { line.from_bus } else { line.to_bus };
        }
        path
    };
    let paths: Vec<Vec<usize>> = ids.iter().map(|&b| up(b)).collect();
    let z = net.v_base_kv * net.v_base_kv / net.s_base_mva;
    let mut w = vec![1.0; ids.len()];
    for (i, path) in paths.iter().enumerate() {
        for &l in path {
            // flow on line l: withdrawals of every bus whose path uses l
            let (mut p, mut q) = (0.0, 0.0);
            for (k, other) in paths.iter().enumerate() {
                if other.contains(&l) {
                    p -= p_inj[k];
                    q -= q_inj[k];
                }
            }
            let line = &net.lines()[l];
            w[i] -= 2.0 * (line.r_ohm / z * p + line.x_ohm / z * q) / net.s_base_mva;
        }
    }
    debug_assert_eq!(pos(slack), net.slack_index());
    w
}

pub fn network_suite() -> Check {
    let net = Network::ieee33();
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(runner::DEFAULT_SEED, 1.2);
    let (mut lo, mut hi, mut worst) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut runs = Vec::new();
    for id in [CaseId::C1, CaseId::C2, CaseId::C3, CaseId::C7a] {
        let cfg = CaseConfig::for_case(id).with_network_mode(NetworkMode::Full).with_horizon(72);
        let o = run_case(&cfg, &net, &specs, &profiles).map_err(|e| format!("case {id}: {e}"))?;
        let s = &o.schedule;
        ensure(s.voltages_from_solver && s.hours == 72, || format!("case {id}: not a 72 h solver profile"))?;
        for t in 0..s.hours {
            let w = path_sum_voltages(&net, &s.bus_injection_p[t], &s.bus_injection_q[t]);
            for (i, &v) in s.voltages[t].iter().enumerate() {
                lo = lo.min(v);
                hi = hi.max(v);
                ensure((0.95 - BAND_TOL..=1.05 + BAND_TOL).contains(&v), || format!("case {id} hour {t} bus {}: {v} p.u.", s.bus_ids[i]))?;
                let diff = (w[i].sqrt() - v).abs();
                worst = worst.max(diff);
                ensure(diff <= VOLTAGE_MATCH_TOL, || format!("case {id} hour {t} bus {}: recomputed differs by {diff:e}", s.bus_ids[i]))?;
            }
        }
        runs.push(id.to_string());
    }
    Ok(format!("cases {} at 72 h: V in [{lo:.4}, {hi:.4}] p.u., max recompute error {worst:.1e}", runs.join("/")))
}

/// Hours where exactly one source is strictly between its bounds, with that source's price.
fn marginal_hours(o: &CaseOutcome, import_price: f64, import_limit: f64) -> Vec<(usize, f64)> {
    let s = &o.schedule;
    let inside = |v: f64, cap: f64| v > 1e-7 && v < cap - 1e-7;
    (0..s.hours)
        .filter_map(|t| {
            let mut marginal: Vec<f64> = s.dgs.iter().zip(&o.dg_lcoe).filter(|(d, _)| inside(d.output[t], d.capacity_mw)).map(|(_, &c)| c).collect();
            if inside(s.import[t], import_limit) {
                marginal.push(import_price);
            }
            (marginal.len() == 1).then(|| (t, marginal[0]))
        })
        .collect()
}

/// Hourly prices of the DG-only feeder for the given DG table.
fn price_check(dgs: &[(&str, usize, f64, f64, f64)], expect: f64) -> Result<usize, String> {
    let net = Network::ieee33();
    let specs = toy_specs(dgs);
    let cfg = dg_only(CaseId::C1, 72, 100.0);
    let o = run_case(&cfg, &net, &specs, &gen_profiles(runner::DEFAULT_SEED, 1.2)).map_err(|e| e.to_string())?;
    let hours = marginal_hours(&o, cfg.import_price, cfg.import_limit_mw);
    ensure(hours.len() == o.schedule.hours, || format!("only {} of {} hours have a single marginal source", hours.len(), o.schedule.hours))?;
    for (t, want) in hours {
        ensure(want == expect, || format!("hour {t}: marginal source costs {want}, expected {expect}"))?;
        for (i, &p) in o.dlmp[t].iter().enumerate() {
            ensure((p - want).abs() <= PRICE_EXACT_TOL, || format!("hour {t} bus {i}: price {p}, marginal {want}"))?;
        }
    }
    Ok(o.schedule.hours)
}

/// Finite-difference price checks on a voltage-congested full-network instance.
pub fn fd_instance(seed: u64, id: CaseId) -> Result<(usize, usize, f64), String> {
    let net = Network::ieee33().with_voltage_band(0.985, 1.01);
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(seed, 1.2);
    let cfg = CaseConfig::for_case(id).with_network_mode(NetworkMode::Full).with_horizon(24);
    let built = build_problem(&cfg, &net, &specs, &profiles, None).map_err(|e| e.to_string())?;
    let base = solve_lp(&built.problem).map_err(|e| e.to_string())?;
    ensure(base.is_optimal(), || format!("seed {seed} case {id}: {}", base.status))?;
    let price = |t: usize, i: usize| base.dual(built.vars.balance[t][i]);
    let nb = net.buses().len();
    let mut picks: Vec<(usize, usize)> = Vec::new();
    let mut congested = 0;
    for t in 0..24 {
        let row: Vec<f64> = (0..nb).map(|i| price(t, i)).collect();
        let hi = (0..nb).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        let lo = (0..nb).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        if row[hi] - row[lo] > 1e-6 {
            congested += 1;
            picks.push((t, hi));
            picks.push((t, lo));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..6 {
        picks.push((rng.gen_range(0..24), rng.gen_range(0..nb)));
    }
    let mut worst = 0.0f64;
    for &(t, i) in &picks {
        let row = built.vars.balance[t][i];
        let mut p = built.problem.clone();
        p.set_rhs(row, p.row(row).rhs + FD_STEP_MW);
        let s = solve_lp(&p).map_err(|e| e.to_string())?;
        ensure(s.is_optimal(), || format!("perturbed solve at hour {t}: {}", s.status))?;
        let fd = (s.objective_value - base.objective_value) / FD_STEP_MW;
        let d = price(t, i);
        let rel = (fd - d).abs() / d.abs().max(1e-9);
        worst = worst.max(rel);
        ensure(rel <= FD_REL_TOL, || format!("seed {seed} case {id} hour {t} bus {}: FD {fd:.4} vs DLMP {d:.4}", net.buses()[i].id))?;
    }
    Ok((picks.len(), congested, worst))
}

pub const FD_INSTANCES: [(u64, CaseId); 3] = [(1, CaseId::C7a), (2, CaseId::C2), (3, CaseId::C3)];

pub fn dlmp_checks() -> Check {
    // DG8 big enough to be marginal in every hour
    let big8 = [("DG8", 8, 6.0, 36.0, 0.88), ("DG13", 13, 2.4, 95.0, 0.12), ("DG30", 30, 1.0, 98.0, 0.12)];
    let n1 = price_check(&big8, 36.0)?;
    // small DGs leave the substation import marginal
    let small = [("DG8", 8, 0.3, 36.0, 0.88), ("DG13", 13, 0.2, 95.0, 0.12), ("DG30", 30, 0.1, 98.0, 0.12)];
    let n2 = price_check(&small, 100.0)?;
    let mut pairs = 0;
    let mut congested = 0;
    let mut worst = 0.0f64;
    for (seed, id) in FD_INSTANCES {
        let (n, c, w) = fd_instance(seed, id)?;
        pairs += n;
        congested += c;
        worst = worst.max(w);
    }
    ensure(congested > 0, || "no congested hour among the finite-difference instances".into())?;
    Ok(format!(
        "{n1} h at $36, {n2} h at $100 import; {pairs} FD probes on 3 instances ({congested} congested hours), max rel error {worst:.1e}"
    ))
}

pub fn fixed_point() -> Check {
    let (cfg, specs, profiles) = fixed_point_toy();
    let net = Network::ieee33();
    let cap = specs.lcoe_cap;
    let o = run_case(&cfg, &net, &specs, &profiles).map_err(|e| e.to_string())?;
    let h = &o.lcoe_history;
    // hand iterates: A fills 1 MW at $30 and B the remaining 0.5 MW at $32;
    // then B costs 0.9/0.5 x 32 = 57.6 > $50 import and drops to zero
    let expect: [([f64; 2], [f64; 2]); 3] = [([30.0, 32.0], [1.0, 0.5]), ([15.0, 57.6], [1.0, 0.0]), ([15.0, cap], [1.0, 0.0])];
    ensure(h.len() == 3, || format!("{} iterations, expected 3", h.len()))?;
    for (k, (lcoe, cf)) in expect.iter().enumerate() {
        for g in 0..2 {
            ensure((h[k].dg_lcoe[g] - lcoe[g]).abs() <= 1e-9, || format!("iteration {}: LCOE {:?}", k + 1, h[k].dg_lcoe))?;
            ensure((h[k].capacity_factor[g] - cf[g]).abs() <= 1e-9, || format!("iteration {}: CF {:?}", k + 1, h[k].capacity_factor))?;
        }
    }
    let change = h[2].capacity_factor.iter().zip(&h[1].capacity_factor).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(o.converged && change < CF_TOL && h.len() <= 10, || "did not converge".into())?;
    Ok(format!("LCOE (30,32) -> (15,57.6) -> (15,{cap}); converged after {} solves, CF change {change:.0e}", h.len()))
}

pub fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut dirs = Vec::new();
    for (name, workers) in [("first", 0), ("second", 3)] {
        let m = RunManifest {
            out_dir: tmp.path().join(name),
            workers,
            base_dir: tmp.path().to_path_buf(),
            ..RunManifest::default()
        };
        runner::run(&m).map_err(|e| e.to_string())?;
        dirs.push(m.out_path());
    }
    let listing = |d: &std::path::Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let mut v = Vec::new();
        for e in fs::read_dir(d).map_err(|e| e.to_string())? {
            let e = e.map_err(|e| e.to_string())?;
            v.push((e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).map_err(|e| e.to_string())?));
        }
        v.sort();
        Ok(v)
    };
    let (a, b) = (listing(&dirs[0])?, listing(&dirs[1])?);
    ensure(a.len() == b.len(), || format!("{} vs {} files", a.len(), b.len()))?;
    for (x, y) in a.iter().zip(&b) {
        ensure(x == y, || format!("{} differs", x.0))?;
    }
    let bytes: usize = a.iter().map(|f| f.1.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical across two full runs", a.len()))
}
