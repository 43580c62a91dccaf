//! Cross-formulation integration checks: every geometric route must land on
//! the same Newtonian configuration dynamics as a directly integrated
//! second-order twin, and the per-system invariant suites must pass on
//! their own trajectories.

mod common;

use std::collections::BTreeMap;

use curlforge::catalog::{build_system, catalog_entry, list_catalog, Potential};
use curlforge::diagnostics::{energy_series, invariant_report};
use curlforge::integrate::Trajectory;
use curlforge::state::PhaseState;

const DT: f64 = 1e-3;

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn config_samples(traj: &Trajectory, n: usize) -> Vec<Vec<f64>> {
    traj.states().iter().map(|s| s.q()[..n].to_vec()).collect()
}

#[test]
fn contact_flow_reduces_to_the_damped_pair() {
    let gamma = 0.2;
    let sys = build_system(
        "contact_radial",
        &params(&[("gamma", gamma)]),
        Some(Potential::Quadratic),
    )
    .unwrap();
    let q0 = [1.0, 0.2];
    let v0 = [0.1, -0.05];
    let x0 = sys.state_from_config(&q0, &v0, Some(0.0)).unwrap();
    let traj = sys.integrate(&x0, 0.0, 10.0, DT).unwrap();
    let twin = common::newton_twin(
        |q, v, _| {
            let xi = 0.5 * (q[0] * q[0] - q[1] * q[1]);
            vec![-gamma * v[0] - q[0] * xi, -gamma * v[1] - q[1] * xi]
        },
        &q0,
        &v0,
        10.0,
        DT,
    );
    let gap = common::max_config_gap(&config_samples(&traj, 2), &twin);
    assert!(gap <= 1e-7, "contact vs newton twin gap {gap}");
}

#[test]
fn gyro_dissipative_flow_matches_its_newton_form() {
    let (a, b, s, c) = (1.0, 1.0, 0.5, 0.1);
    let sys = build_system(
        "gyro_dissipative_km",
        &params(&[("a", a), ("b", b), ("s", s), ("c", c)]),
        None,
    )
    .unwrap();
    let q0 = [1.0, 0.3];
    let v0 = [-0.1, 0.2];
    let x0 = sys.state_from_config(&q0, &v0, None).unwrap();
    let traj = sys.integrate(&x0, 0.0, 5.0, DT).unwrap();
    // x'' + s y' - c x' + b x + a y = 0, y'' - s x' - c y' + b y - a x = 0.
    let twin = common::newton_twin(
        |q, v, _| {
            vec![
                -b * q[0] - a * q[1] - s * v[1] + c * v[0],
                a * q[0] - b * q[1] + s * v[0] + c * v[1],
            ]
        },
        &q0,
        &v0,
        5.0,
        DT,
    );
    let gap = common::max_config_gap(&config_samples(&traj, 2), &twin);
    assert!(gap <= 1e-8, "gyro-dissipative vs newton twin gap {gap}");
}

#[test]
fn gyro_curl_flow_matches_its_newton_form() {
    let s = 0.5;
    let sys = build_system("gyro_curl", &params(&[("s", s)]), Some(Potential::Quadratic)).unwrap();
    let q0 = [0.8, 0.2];
    let v0 = [0.1, -0.1];
    let x0 = sys.state_from_config(&q0, &v0, None).unwrap();
    let traj = sys.integrate(&x0, 0.0, 5.0, DT).unwrap();
    // x'' + s y' + x U' = 0, y'' - s x' + y U' = 0.
    let twin = common::newton_twin(
        |q, v, _| {
            let du = 0.5 * (q[0] * q[0] - q[1] * q[1]);
            vec![-s * v[1] - q[0] * du, s * v[0] - q[1] * du]
        },
        &q0,
        &v0,
        5.0,
        DT,
    );
    let gap = common::max_config_gap(&config_samples(&traj, 2), &twin);
    assert!(gap <= 1e-8, "gyro curl vs newton twin gap {gap}");
}

#[test]
fn contact_km_reduces_to_the_damped_positional_coupling() {
    let (a, b, gamma) = (1.0, 1.0, 0.2);
    let sys = build_system(
        "contact_km",
        &params(&[("a", a), ("b", b), ("gamma", gamma)]),
        None,
    )
    .unwrap();
    let q0 = [1.0, 0.3];
    let v0 = [-0.1, 0.2];
    let x0 = sys.state_from_config(&q0, &v0, Some(0.0)).unwrap();
    let traj = sys.integrate(&x0, 0.0, 10.0, DT).unwrap();
    // x'' + gamma x' + b x + a y = 0, y'' + gamma y' + b y - a x = 0.
    let twin = common::newton_twin(
        |q, v, _| {
            vec![
                -gamma * v[0] - b * q[0] - a * q[1],
                -gamma * v[1] - b * q[1] + a * q[0],
            ]
        },
        &q0,
        &v0,
        10.0,
        DT,
    );
    let gap = common::max_config_gap(&config_samples(&traj, 2), &twin);
    assert!(gap <= 1e-7, "contact km vs newton twin gap {gap}");
}

#[test]
fn contact_energy_rate_integrates_to_the_energy_change() {
    let sys = catalog_entry("contact_radial")
        .unwrap()
        .build_with_defaults(&BTreeMap::new(), None)
        .unwrap();
    let curlforge::catalog::FormulationBackend::Contact { system } = sys.backend() else {
        unreachable!()
    };
    let x0 = sys.state_from_config(&[1.0, 0.2], &[0.1, -0.05], Some(0.0)).unwrap();
    let traj = sys.integrate(&x0, 0.0, 5.0, DT).unwrap();
    let h = energy_series(&sys, &traj).unwrap();
    let rates: Vec<f64> = traj
        .states()
        .iter()
        .zip(traj.times())
        .map(|(state, &t)| curlforge::contact::contact_energy_rate(system, state, t).unwrap())
        .collect();
    let mut integral = 0.0;
    for k in 1..rates.len() {
        integral += 0.5 * DT * (rates[k] + rates[k - 1]);
    }
    let change = h.last().unwrap() - h[0];
    assert!(
        (integral - change).abs() <= 1e-5 * change.abs().max(1e-12),
        "trapezoid {integral} vs change {change}"
    );
}

#[test]
fn kapitsa_decoupled_returns_after_one_period() {
    let sys = build_system("kapitsa", &params(&[("a", 0.0), ("b", 1.0)]), None).unwrap();
    let x0 = PhaseState::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
    let traj = sys.integrate(&x0, 0.0, std::f64::consts::TAU, DT).unwrap();
    let end = traj.last();
    assert!((end.q()[0] - 1.0).abs() <= 1e-9, "x(2pi) = {}", end.q()[0]);
}

#[test]
fn rk4_is_fourth_order_on_the_radial_system() {
    let sys = build_system("radial_curl", &BTreeMap::new(), Some(Potential::Quadratic)).unwrap();
    let x0 = sys.state_from_config(&[1.0, 0.3], &[-0.1, 0.2], None).unwrap();
    let reference = sys.integrate(&x0, 0.0, 1.0, 1e-5).unwrap();
    let endpoint = reference.last().to_flat();
    let error = |dt: f64| {
        let traj = sys.integrate(&x0, 0.0, 1.0, dt).unwrap();
        traj.last()
            .to_flat()
            .iter()
            .zip(&endpoint)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max)
    };
    let ratio = error(4e-2) / error(2e-2);
    assert!((13.0..=19.0).contains(&ratio), "convergence ratio {ratio}");
}

/// Per-entry initial data and horizon keeping every default system finite.
/// The gyroscopic coupling steers radial orbits into the repulsive region
/// eventually, so the gyro entry runs on a shorter window.
fn report_run(name: &str) -> (Vec<f64>, Vec<f64>, f64) {
    match name {
        "radial_curl" => (vec![1.0, 0.3], vec![-0.1, 0.2], 10.0),
        "azimuthal_curl" => (vec![0.5, 0.2], vec![0.05, -0.05], 10.0),
        "galley_bateman" => (vec![1.0], vec![0.0], 10.0),
        "gyro_curl" => (vec![0.8, 0.2], vec![0.1, -0.1], 5.0),
        _ => (vec![1.0, 0.2], vec![0.1, -0.05], 10.0),
    }
}

#[test]
fn invariant_reports_pass_for_every_entry() {
    for entry in list_catalog() {
        let sys = entry.build_with_defaults(&BTreeMap::new(), None).unwrap();
        let (q0, v0, t_final) = report_run(entry.name);
        let x0 = sys.state_from_config(&q0, &v0, Some(0.0)).unwrap();
        let traj = sys
            .integrate(&x0, 0.0, t_final, DT)
            .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
        let report = invariant_report(&sys, &traj).unwrap();
        assert!(
            report.all_pass(),
            "{} report failed: {report:?}",
            entry.name
        );
        assert_eq!(report.verdict, "pass");
    }
}
