mod common;

use h2grid::metrics::green_fraction;
use h2grid::optimizer::{check_invariants, run_case, CaseOutcome};
use h2grid::profiles::gen_profiles;
use h2grid::{AssetSpecs, CaseConfig, CaseId, Network};
use proptest::prelude::*;
use std::collections::HashMap;

const HOURS: usize = 72;

fn sweep(seed: u64) -> HashMap<CaseId, CaseOutcome> {
    let net = Network::ieee33();
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(seed, 1.2);
    CaseId::ALL
        .iter()
        .map(|&id| (id, run_case(&CaseConfig::for_case(id).with_horizon(HOURS), &net, &specs, &profiles).unwrap()))
        .collect()
}

fn duration(id: CaseId) -> Option<f64> {
    use CaseId::*;
    match id {
        C3 | C6a | C6b => Some(4.0),
        C4 | C7a | C7b => Some(10.0),
        _ => None,
    }
}

#[test]
fn every_case_solves_and_passes_its_invariants() {
    for (id, o) in sweep(7) {
        let v = check_invariants(&o.schedule, &o.sizing);
        assert!(v.is_empty(), "case {id}: {v:?}");
        assert_eq!(o.schedule.hours, HOURS);
        if let Some(d) = duration(id) {
            assert_eq!(o.sizing.battery_energy_mwh, d * o.sizing.battery_power_mw, "case {id}");
        } else {
            assert_eq!(o.sizing.battery_power_mw, 0.0, "case {id}");
        }
    }
}

#[test]
fn repeated_solves_are_identical() {
    let net = Network::ieee33();
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(3, 1.2);
    for id in [CaseId::C5b, CaseId::C6b, CaseId::C7b] {
        let cfg = CaseConfig::for_case(id).with_horizon(48);
        let a = run_case(&cfg, &net, &specs, &profiles).unwrap();
        let b = run_case(&cfg, &net, &specs, &profiles).unwrap();
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.costs, b.costs);
        assert_eq!(a.dlmp, b.dlmp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn structural_orderings_hold_for_any_profile(seed in 100u64..10_000) {
        use CaseId::*;
        let c = sweep(seed);
        prop_assert_eq!(green_fraction(&c[&C1].schedule).unwrap(), 0.0);
        // storage is optional, so adding it can only help
        prop_assert!(c[&C3].costs.total <= c[&C2].costs.total + 1e-6);
        prop_assert!(c[&C4].costs.total <= c[&C2].costs.total + 1e-6);
        for id in [C7a, C7b] {
            let h = c[&id].schedule.h2.as_ref().unwrap();
            let m = c[&id].sizing.tank_kg;
            prop_assert!((h.tank_mass[0] - h.init_frac * m).abs() <= 1e-6 * (1.0 + m));
            prop_assert!((h.tank_mass[HOURS] - h.final_frac * m).abs() <= 1e-6 * (1.0 + m));
        }
        for (id, o) in &c {
            let s = &o.schedule;
            for t in 0..s.hours {
                prop_assert!(s.balance_residual(t).abs() <= 1e-6, "case {} hour {}", id, t);
            }
        }
    }
}
