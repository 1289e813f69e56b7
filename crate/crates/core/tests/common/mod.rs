#![allow(dead_code)]

use h2grid::lp::{Problem, Sense};
use h2grid::optimizer::{CaseConfig, CaseId, NetworkMode, Roster};
use h2grid::{AssetSpecs, DgSpec, ProfileSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Electrolyzer CAPEX sweep at PV LCOE 12: (CAPEX $/kW, production $/kg, total $/kg).
pub const CAPEX_TABLE: [(f64, f64, f64); 8] = [
    (50.0, 0.85, 0.87),
    (75.0, 0.94, 0.96),
    (100.0, 1.02, 1.04),
    (125.0, 1.10, 1.12),
    (150.0, 1.19, 1.21),
    (175.0, 1.27, 1.29),
    (200.0, 1.35, 1.37),
    (250.0, 1.51, 1.53),
];
pub const TABLE_STORAGE: f64 = 0.02;
pub const LCOE_GRID: [f64; 6] = [8.0, 9.0, 10.0, 11.0, 12.0, 13.0];
/// Production cost at electrolyzer CAPEX 100, 40 bar.
pub const LOW_PRESSURE_ROW: [f64; 6] = [0.79, 0.85, 0.90, 0.96, 1.02, 1.08];
/// Production cost with electrolyzer plus compressor CAPEX 248, 350 bar.
pub const MODERATE_PRESSURE_ROW: [f64; 6] = [1.28, 1.34, 1.40, 1.46, 1.51, 1.56];

/// Dense copy of a small LP, used by the enumeration oracle.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DenseLp {
    pub fn to_problem(&self) -> Problem {
        let mut p = Problem::new();
        let vars: Vec<_> = (0..self.c.len())
            .map(|j| p.add_var(format!("x{j}"), self.lower[j], self.upper[j]).unwrap())
            .collect();
        for (j, &c) in self.c.iter().enumerate() {
            p.add_cost(vars[j], c);
        }
        for (i, (a, sense, b)) in self.rows.iter().enumerate() {
            let coeffs = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (vars[j], *v)).collect();
            p.add_constraint(coeffs, *sense, *b, format!("r{i}")).unwrap();
        }
        p
    }

    fn feasible(&self, x: &[f64], tol: f64) -> bool {
        for j in 0..x.len() {
            if x[j] < self.lower[j] - tol || x[j] > self.upper[j] + tol {
                return false;
            }
        }
        self.rows.iter().all(|(a, sense, b)| {
            let lhs: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            match sense {
                Sense::Le => lhs <= b + tol,
                Sense::Ge => lhs >= b - tol,
                Sense::Eq => (lhs - b).abs() <= tol,
            }
        })
    }
}

/// Solves `m x = r` by Gaussian elimination; `None` when (nearly) singular.
fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-9 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Minimum objective over all basic feasible points of a bounded LP, or
/// `None` if no vertex is feasible.
pub fn vertex_enumeration(lp: &DenseLp) -> Option<f64> {
    let n = lp.c.len();
    // every hyperplane that can be active at a vertex
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let m: Vec<Vec<f64>> = pick.iter().map(|&k| planes[k].0.clone()).collect();
        let r: Vec<f64> = pick.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_dense(m, r) {
            if lp.feasible(&x, 1e-7) {
                let obj: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // next n-combination of the planes
        let total = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Bounded random LP with at most 6 variables and 8 rows. With `feasible`,
/// the right-hand sides are built around an interior point.
pub fn random_lp(seed: u64, feasible: bool) -> DenseLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=8);
    let lower: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.7) { 0.0 } else { -(rng.gen_range(1..5) as f64) }).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(1..10) as f64).collect();
    let x0: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| rng.gen_range(*l..*u)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-10..=10) as f64).collect();
    let mut rows = Vec::new();
    let mut eqs = 0;
    while rows.len() < m {
        let a: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-5..=5) as f64 }).collect();
        if a.iter().all(|v| *v == 0.0) {
            continue;
        }
        let lhs: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let pick = rng.gen_range(0..3);
        let sense = if pick == 2 && eqs + 1 < n { Sense::Eq } else if pick == 0 { Sense::Le } else { Sense::Ge };
        if sense == Sense::Eq {
            eqs += 1;
        }
        let slack = rng.gen_range(0.0..3.0);
        let b = if feasible {
            match sense {
                Sense::Le => lhs + slack,
                Sense::Ge => lhs - slack,
                Sense::Eq => lhs,
            }
        } else {
            rng.gen_range(-20.0..20.0)
        };
        rows.push((a, sense, b));
    }
    DenseLp { c, rows, lower, upper }
}

/// Specs for a two-DG toy feeder with no commitment costs and loose ramps.
pub fn toy_specs(dgs: &[(&str, usize, f64, f64, f64)]) -> AssetSpecs {
    let mut specs = AssetSpecs::default();
    specs.dgs = dgs
        .iter()
        .map(|&(name, bus, cap, lcoe, cf)| {
            let mut d = DgSpec::new(name, bus, cap, lcoe, cf, 0.0);
            d.ramp_mw_per_h = cap;
            d
        })
        .collect();
    specs
}

/// Flat load profile totalling `load_mw` every hour, no sun.
pub fn flat_profiles(load_mw: f64, hours: usize) -> ProfileSet {
    ProfileSet { seed: None, load_factor: vec![1.0; hours], pv_factor: vec![0.0; hours], base_load_mw: load_mw }
}

/// DG-only copperplate configuration.
pub fn dg_only(case_id: CaseId, hours: usize, import_price: f64) -> CaseConfig {
    let mut cfg = CaseConfig::for_case(case_id).with_horizon(hours).with_network_mode(NetworkMode::Copperplate);
    cfg.roster = Roster { dgs: true, pv: false, battery: None, h2: false };
    cfg.import_price = import_price;
    cfg.fossil_priced_out = false;
    cfg
}

/// The fixed-point toy: two 1 MW units serving 1.5 MW for four hours, import at $50.
pub fn fixed_point_toy() -> (CaseConfig, AssetSpecs, ProfileSet) {
    let specs = toy_specs(&[("A", 8, 1.0, 30.0, 0.5), ("B", 13, 1.0, 32.0, 0.9)]);
    let mut cfg = dg_only(CaseId::C5b, 4, 50.0);
    cfg.update_lcoes = true;
    (cfg, specs, flat_profiles(1.5, 4))
}
pub mod criteria;
