//! Instance generators shared by the benchmarks.

use h2grid::lp::{Problem, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random feasible transportation-style LP: `supplies` sources, `sinks` sinks.
pub fn transport_lp(seed: u64, supplies: usize, sinks: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Problem::new();
    let demand: Vec<f64> = (0..sinks).map(|_| rng.gen_range(1.0..10.0)).collect();
    let total: f64 = demand.iter().sum();
    let cap: Vec<f64> = (0..supplies).map(|_| 1.5 * total / supplies as f64 * rng.gen_range(0.8..1.2)).collect();
    let mut x = vec![Vec::with_capacity(sinks); supplies];
    for (i, xi) in x.iter_mut().enumerate() {
        for j in 0..sinks {
            let v = p.add_var(format!("x{i}_{j}"), 0.0, f64::INFINITY).expect("valid bounds");
            p.add_cost(v, rng.gen_range(1.0..20.0));
            xi.push(v);
        }
    }
    for (i, xi) in x.iter().enumerate() {
        p.add_constraint(xi.iter().map(|&v| (v, 1.0)).collect(), Sense::Le, cap[i], format!("cap{i}")).expect("row");
    }
    for (j, d) in demand.iter().enumerate() {
        p.add_constraint(x.iter().map(|xi| (xi[j], 1.0)).collect(), Sense::Ge, *d, format!("dem{j}")).expect("row");
    }
    p
}
