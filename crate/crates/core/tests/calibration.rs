//! Targets fed to the circuit calibration are recovered by the extraction
//! layer, which never sees the targets themselves.

use cqed_array::crossval::{oracle_fit_g, OracleSettings};
use cqed_array::netoracle::{
    calibrate_chain, network_eigenfrequencies, BaseCircuit, CalibrationTargets, GammaExtraction,
};
use cqed_array::Frequency;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn working_point_round_trips_within_five_percent() {
    let (omega, gamma, g, q) = (5.642e9, 25e6, 110e6, 6.368e9);
    let targets = CalibrationTargets::new(Frequency::from_hz(omega), Frequency::from_hz(gamma))
        .with_qubit(Frequency::from_hz(g), Frequency::from_hz(q), 8e-9);
    let d = calibrate_chain(&targets, &BaseCircuit::default()).unwrap();

    let bare = network_eigenfrequencies(&d.network(1, &[], &[]).unwrap()).unwrap();
    assert_eq!(bare.len(), 1);
    assert!(rel(bare[0].hz(), omega) < 0.05);

    let gamma_x = d.extract_gamma(GammaExtraction::Unloaded).unwrap();
    assert!(rel(gamma_x.hz(), gamma) < 0.05, "γ {gamma_x}");

    let modes = d.single_qubit_modes(8e-9).unwrap();
    let q_x = modes.last().unwrap();
    assert!(rel(q_x.hz(), q) < 0.05, "q {q_x}");

    let lj: Vec<f64> = (0..=160).map(|k| 6e-9 + 0.05e-9 * k as f64).collect();
    let (_, fit) = oracle_fit_g(&d, &lj, &OracleSettings::default()).unwrap();
    assert!(rel(fit.g.hz(), g) < 0.05, "g {}", fit.g);
    assert!(rel(fit.omega.hz(), omega) < 0.05);
}

#[test]
fn loading_shifts_gamma_by_a_few_percent() {
    let targets = CalibrationTargets::new(Frequency::from_ghz(5.642), Frequency::from_mhz(25.0))
        .with_qubit(Frequency::from_mhz(110.0), Frequency::from_ghz(6.368), 8e-9);
    let d = calibrate_chain(&targets, &BaseCircuit::default()).unwrap();
    let empty = d.extract_gamma(GammaExtraction::Unloaded).unwrap().hz();
    let loaded = d.extract_gamma(GammaExtraction::Loaded).unwrap().hz();
    assert!(rel(empty, 25e6) < 1e-6);
    assert!(loaded < empty && rel(loaded, empty) < 0.1);
}
