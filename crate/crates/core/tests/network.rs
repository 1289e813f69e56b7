mod common;

use common::criteria::{path_sum_voltages, BAND_TOL, VOLTAGE_MATCH_TOL};
use h2grid::network::{forward_sweep, parse_network, verify_voltages, write_network};
use h2grid::optimizer::{run_case, OptimizerError};
use h2grid::profiles::gen_profiles;
use h2grid::{AssetSpecs, CaseConfig, CaseId, Error, Network, NetworkMode};
use proptest::prelude::*;

fn full(id: CaseId, hours: usize) -> CaseConfig {
    CaseConfig::for_case(id).with_network_mode(NetworkMode::Full).with_horizon(hours)
}

#[test]
fn storage_cases_keep_voltages_in_band() {
    let net = Network::ieee33();
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(11, 1.2);
    for id in [CaseId::C4, CaseId::C6b] {
        let o = run_case(&full(id, 48), &net, &specs, &profiles).unwrap();
        let s = &o.schedule;
        assert!(s.voltages_from_solver);
        let swept = verify_voltages(&net, s).unwrap();
        for t in 0..s.hours {
            let w = path_sum_voltages(&net, &s.bus_injection_p[t], &s.bus_injection_q[t]);
            for i in 0..s.bus_ids.len() {
                let v = s.voltages[t][i];
                assert!((0.95 - BAND_TOL..=1.05 + BAND_TOL).contains(&v), "case {id} hour {t}: {v}");
                assert!((w[i].sqrt() - v).abs() <= VOLTAGE_MATCH_TOL);
                assert!((swept.magnitude[t][i] - v).abs() <= VOLTAGE_MATCH_TOL);
            }
        }
    }
}

#[test]
fn copperplate_reports_swept_voltages() {
    let net = Network::ieee33();
    let o = run_case(&CaseConfig::for_case(CaseId::C2).with_horizon(24), &net, &AssetSpecs::default(), &gen_profiles(5, 1.2)).unwrap();
    let s = &o.schedule;
    assert!(!s.voltages_from_solver);
    for t in 0..s.hours {
        let w = path_sum_voltages(&net, &s.bus_injection_p[t], &s.bus_injection_q[t]);
        for i in 0..s.bus_ids.len() {
            assert!((w[i].sqrt() - s.voltages[t][i]).abs() <= VOLTAGE_MATCH_TOL);
        }
    }
}

#[test]
fn impossible_band_is_a_solve_failure() {
    let net = Network::ieee33().with_voltage_band(0.999, 1.0);
    let err = run_case(&full(CaseId::C1, 6), &net, &AssetSpecs::default(), &gen_profiles(1, 1.2)).unwrap_err();
    assert!(matches!(err, OptimizerError::Solve { .. }), "{err}");
    let dump = match &err {
        OptimizerError::Solve { dump, .. } => dump.clone(),
        _ => unreachable!(),
    };
    assert!(dump.starts_with("\\ generated by h2grid") && dump.contains(" voltage_"));
    assert!(Error::from(err).is_solve_failure());
}

#[test]
fn feeder_file_round_trip_gives_identical_results() {
    let net = Network::ieee33();
    let reparsed = parse_network(&write_network(&net)).unwrap();
    let specs = AssetSpecs::default();
    let profiles = gen_profiles(2, 1.2);
    let cfg = full(CaseId::C2, 12);
    let a = run_case(&cfg, &net, &specs, &profiles).unwrap();
    let b = run_case(&cfg, &reparsed, &specs, &profiles).unwrap();
    assert_eq!(a.costs, b.costs);
    assert_eq!(a.schedule, b.schedule);
}

/// Injections at every bus: loads only, generation only at the slack.
fn load_only(net: &Network, loads: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = net.buses().len();
    let slack = net.slack_index();
    let mut p: Vec<f64> = (0..n).map(|i| if i == slack { 0.0 } else { -loads[i % loads.len()] }).collect();
    let mut q: Vec<f64> = p.iter().map(|v| 0.5 * v).collect();
    p[slack] = -p.iter().sum::<f64>();
    q[slack] = -q.iter().sum::<f64>();
    (p, q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voltage_never_rises_away_from_slack_under_pure_load(loads in prop::collection::vec(0.0f64..0.3, 33)) {
        let net = Network::ieee33();
        let (p, q) = load_only(&net, &loads);
        let w = forward_sweep(&net, std::slice::from_ref(&p), std::slice::from_ref(&q)).unwrap().remove(0);
        let oracle = path_sum_voltages(&net, &p, &q);
        for i in 0..w.len() {
            prop_assert!((w[i] - oracle[i]).abs() < 1e-12);
            if let Some(l) = net.parent_line(i) {
                let parent = net.line_ends(l).0;
                prop_assert!(w[i] <= w[parent] + 1e-15);
            }
        }
    }

    #[test]
    fn more_load_means_lower_voltage(loads in prop::collection::vec(0.0f64..0.2, 33), extra in 0.001f64..0.5, bus in 1usize..33) {
        let net = Network::ieee33();
        let (p, q) = load_only(&net, &loads);
        let base = forward_sweep(&net, std::slice::from_ref(&p), std::slice::from_ref(&q)).unwrap().remove(0);
        let mut p2 = p.clone();
        let i = net.index_of(bus + 1).unwrap();
        p2[i] -= extra;
        p2[net.slack_index()] += extra;
        let more = forward_sweep(&net, &[p2], &[q]).unwrap().remove(0);
        for k in 0..base.len() {
            prop_assert!(more[k] <= base[k] + 1e-15);
        }
        prop_assert!(more[i] < base[i]);
    }

    #[test]
    fn sweep_is_linear_in_injections(loads in prop::collection::vec(0.0f64..0.3, 33), k in 0.0f64..3.0) {
        let net = Network::ieee33();
        let (p, q) = load_only(&net, &loads);
        let w1 = forward_sweep(&net, std::slice::from_ref(&p), std::slice::from_ref(&q)).unwrap().remove(0);
        let pk: Vec<f64> = p.iter().map(|v| v * k).collect();
        let qk: Vec<f64> = q.iter().map(|v| v * k).collect();
        let wk = forward_sweep(&net, &[pk], &[qk]).unwrap().remove(0);
        for i in 0..w1.len() {
            prop_assert!(((1.0 - wk[i]) - k * (1.0 - w1[i])).abs() < 1e-12);
        }
    }
}
