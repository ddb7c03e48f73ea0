//! Maps mode-level targets (ω, γ, g, q) onto circuit element values.
//!
//! Every tank is sized so its node sees the same total capacitance
//! `C_total`: the shunt capacitor is reduced by the coupling capacitors on
//! the node and, on a host tank, by the series load of the qubit branch
//! `C_load = C_g·C_q/(C_g + C_q)` with `C_q = c_J + C_a`. Tanks without a
//! qubit keep that load as part of their shunt, so a uniform chain stays
//! mirror-symmetric whichever tanks host qubits.

use super::{
    build_cavity_circuit, network_eigenfrequencies, ChainSpec, CircuitNetwork, NetOracleError,
    PortSpec, QubitSpec, TankSpec,
};
use crate::modechain::gamma_from_two_modes;
use crate::numeric::{golden_min, secant_solve};
use crate::units::Frequency;

const MAX_ITERATIONS: usize = 80;

/// Mode-level quantities the circuit must reproduce.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationTargets {
    pub omega: Frequency,
    pub gamma: Frequency,
    /// Qubit-cavity coupling. Requires `q`.
    pub g: Option<Frequency>,
    /// Qubit frequency at `lj_reference`. Requires `g`.
    pub q: Option<Frequency>,
    /// Junction inductance at which the qubit sits at `q`, H.
    pub lj_reference: f64,
}

impl CalibrationTargets {
    pub fn new(omega: Frequency, gamma: Frequency) -> Self {
        CalibrationTargets {
            omega,
            gamma,
            g: None,
            q: None,
            lj_reference: 8e-9,
        }
    }

    pub fn with_qubit(mut self, g: Frequency, q: Frequency, lj_reference: f64) -> Self {
        self.g = Some(g);
        self.q = Some(q);
        self.lj_reference = lj_reference;
        self
    }
}

/// Fixed capacitances the calibration builds around.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseCircuit {
    /// Total node capacitance of every tank, F.
    pub total_capacitance: f64,
    /// Junction self-capacitance, F.
    pub junction_capacitance: f64,
}

impl Default for BaseCircuit {
    fn default() -> Self {
        BaseCircuit {
            total_capacitance: 400e-15,
            junction_capacitance: 10e-15,
        }
    }
}

/// What the calibrated circuit actually produces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationReport {
    pub omega: Frequency,
    pub gamma: Frequency,
    pub g: Option<Frequency>,
    pub q: Option<Frequency>,
    /// `C_c` from `γ ≈ ω·C_c/(2C)` before refinement, F.
    pub first_order_cc: f64,
    pub iterations: usize,
}

/// How γ is read off a calibrated two-cavity circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaExtraction {
    /// Two empty tanks.
    Unloaded,
    /// Both tanks host a qubit at the reference junction inductance; γ comes
    /// from the two cavity-like modes.
    Loaded,
}

/// Element values produced by [`calibrate_chain`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainDesign {
    pub omega: Frequency,
    pub inductance: f64,
    pub total_capacitance: f64,
    pub cc: f64,
    pub cj: f64,
    pub cg: f64,
    pub ca: f64,
    pub lj_reference: f64,
    pub report: CalibrationReport,
}

impl ChainDesign {
    fn uncalibrated(omega: Frequency, base: &BaseCircuit, lj_reference: f64) -> Self {
        let c = base.total_capacitance;
        ChainDesign {
            omega,
            inductance: 1.0 / (omega.angular().powi(2) * c),
            total_capacitance: c,
            cc: 0.0,
            cj: base.junction_capacitance,
            cg: 0.0,
            ca: 0.0,
            lj_reference,
            report: CalibrationReport {
                omega,
                gamma: Frequency::ZERO,
                g: None,
                q: None,
                first_order_cc: 0.0,
                iterations: 0,
            },
        }
    }

    /// Series load of a qubit branch on its host tank, F.
    pub fn load_capacitance(&self) -> f64 {
        let cq = self.cj + self.ca;
        if self.cg > 0.0 {
            self.cg * cq / (self.cg + cq)
        } else {
            0.0
        }
    }

    /// Capacitance of the decoupled qubit node, `c_J + C_a + C_g`.
    pub fn qubit_capacitance(&self) -> f64 {
        self.cj + self.ca + self.cg
    }

    pub fn qubit_spec(&self, host: usize, lj: f64) -> QubitSpec {
        QubitSpec {
            host,
            lj,
            cj: self.cj,
            cg: self.cg,
            ca: self.ca,
        }
    }

    /// Chain of `n` tanks with qubits `(host, L_J)` and measurement ports.
    pub fn chain_spec(&self, n: usize, qubits: &[(usize, f64)], ports: &[PortSpec]) -> ChainSpec {
        let load = self.load_capacitance();
        let tanks = (0..n)
            .map(|i| {
                let neighbours = usize::from(i > 0) + usize::from(i + 1 < n);
                let hosted = qubits.iter().any(|&(h, _)| h == i);
                let shunt = self.total_capacitance
                    - neighbours as f64 * self.cc
                    - if hosted { load } else { 0.0 };
                TankSpec {
                    inductance: self.inductance,
                    capacitance: shunt,
                }
            })
            .collect();
        ChainSpec {
            tanks,
            couplings: vec![self.cc; n.saturating_sub(1)],
            qubits: qubits
                .iter()
                .map(|&(h, lj)| self.qubit_spec(h, lj))
                .collect(),
            ports: ports.to_vec(),
        }
    }

    pub fn network(
        &self,
        n: usize,
        qubits: &[(usize, f64)],
        ports: &[PortSpec],
    ) -> Result<CircuitNetwork, NetOracleError> {
        build_cavity_circuit(&self.chain_spec(n, qubits, ports))
    }

    /// Network eigenfrequencies of one cavity hosting one qubit at `lj`.
    pub fn single_qubit_modes(&self, lj: f64) -> Result<Vec<Frequency>, NetOracleError> {
        network_eigenfrequencies(&self.network(1, &[(0, lj)], &[])?)
    }

    pub fn extract_gamma(&self, mode: GammaExtraction) -> Result<Frequency, NetOracleError> {
        let modes = match mode {
            GammaExtraction::Unloaded => network_eigenfrequencies(&self.network(2, &[], &[])?)?,
            GammaExtraction::Loaded => {
                let lj = self.lj_reference;
                let mut f =
                    network_eigenfrequencies(&self.network(2, &[(0, lj), (1, lj)], &[])?)?;
                f.sort_by(|a, b| {
                    (*a - self.omega)
                        .abs()
                        .hz()
                        .total_cmp(&(*b - self.omega).abs().hz())
                });
                f.truncate(2);
                f.sort_by(|a, b| a.hz().total_cmp(&b.hz()));
                f
            }
        };
        if modes.len() < 2 {
            return Err(NetOracleError::Target(
                "two-cavity circuit has fewer than two modes".into(),
            ));
        }
        let (gamma, _) = gamma_from_two_modes(modes[0], modes[1])
            .map_err(|e| NetOracleError::Target(e.to_string()))?;
        Ok(gamma)
    }

    /// Half the minimum splitting of one cavity and one qubit as `L_J` is
    /// swept, with the junction inductance where it occurs.
    pub fn qubit_cavity_coupling(&self) -> Result<(Frequency, f64), NetOracleError> {
        let l_res = 1.0 / (self.omega.angular().powi(2) * self.qubit_capacitance());
        let mut failure = None;
        let (lj, gap) = golden_min(
            |lj| match self.single_qubit_modes(lj) {
                Ok(f) if f.len() == 2 => (f[1] - f[0]).hz(),
                Ok(_) => f64::INFINITY,
                Err(e) => {
                    failure = Some(e);
                    f64::INFINITY
                }
            },
            0.6 * l_res,
            1.6 * l_res,
            1e-10 * l_res,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((Frequency::from_hz(0.5 * gap), lj))
    }

    /// The qubit-like mode of one cavity plus qubit at `lj`: the upper mode
    /// when the qubit sits above the cavity, the lower one otherwise.
    fn qubit_branch(&self, lj: f64, above: bool) -> Result<Frequency, NetOracleError> {
        let f = self.single_qubit_modes(lj)?;
        Ok(if above { f[f.len() - 1] } else { f[0] })
    }
}

/// Chooses element values that reproduce the targets: `C_c` from the
/// empty two-cavity splitting, then `C_g` and `C_a` jointly so the
/// single-cavity avoided crossing has half-gap `g` and the qubit branch sits
/// at `q` for the reference junction inductance.
pub fn calibrate_chain(
    targets: &CalibrationTargets,
    base: &BaseCircuit,
) -> Result<ChainDesign, NetOracleError> {
    let omega = targets.omega;
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if !positive(omega.hz()) {
        return Err(NetOracleError::Target(format!(
            "ω must be positive, got {omega}"
        )));
    }
    if !(targets.gamma.hz() >= 0.0 && targets.gamma < omega * 0.1) {
        return Err(NetOracleError::Target(format!(
            "γ must satisfy 0 ≤ γ ≪ ω, got {}",
            targets.gamma
        )));
    }
    if !positive(base.total_capacitance) || !positive(base.junction_capacitance) {
        return Err(NetOracleError::Target(
            "base capacitances must be positive".into(),
        ));
    }
    let mut design = ChainDesign::uncalibrated(omega, base, targets.lj_reference);
    let mut iterations = 0;

    let first_order = 2.0 * targets.gamma.hz() / omega.hz() * base.total_capacitance;
    design.report.first_order_cc = first_order;
    if targets.gamma.hz() > 0.0 {
        let gamma = targets.gamma.hz();
        let mut err = None;
        let out = secant_solve(
            |cc| {
                iterations += 1;
                let d = ChainDesign { cc, ..design };
                match d.extract_gamma(GammaExtraction::Unloaded) {
                    Ok(g) => g.hz() - gamma,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                }
            },
            first_order,
            1.01 * first_order,
            (1e-3 * first_order, 0.45 * base.total_capacitance),
            1e-14,
            1e-9 * gamma,
            MAX_ITERATIONS,
        );
        if let Some(e) = err {
            return Err(e);
        }
        if !out.converged {
            return Err(NetOracleError::Calibration {
                stage: "coupling capacitance",
                residual: out.residual,
                iterations,
            });
        }
        design.cc = out.x;
    }

    match (targets.g, targets.q) {
        (None, None) => {}
        (Some(g), Some(q)) => {
            calibrate_qubit(&mut design, g, q, &mut iterations)?;
        }
        _ => {
            return Err(NetOracleError::Target(
                "g and q must be given together".into(),
            ))
        }
    }

    design.report.omega = network_eigenfrequencies(&design.network(1, &[], &[])?)?[0];
    design.report.gamma = if design.cc > 0.0 {
        design.extract_gamma(GammaExtraction::Unloaded)?
    } else {
        Frequency::ZERO
    };
    if targets.g.is_some() {
        let above = targets.q.expect("paired with g") > omega;
        design.report.g = Some(design.qubit_cavity_coupling()?.0);
        design.report.q = Some(design.qubit_branch(design.lj_reference, above)?);
    }
    design.report.iterations = iterations;
    Ok(design)
}

fn calibrate_qubit(
    design: &mut ChainDesign,
    g: Frequency,
    q: Frequency,
    iterations: &mut usize,
) -> Result<(), NetOracleError> {
    let omega = design.omega;
    let lj = design.lj_reference;
    if !(g.hz() > 0.0 && g < omega * 0.1) {
        return Err(NetOracleError::Target(format!(
            "g must satisfy 0 < g ≪ ω, got {g}"
        )));
    }
    if !(lj > 0.0 && lj.is_finite()) {
        return Err(NetOracleError::Target(format!(
            "reference L_J must be positive, got {lj}"
        )));
    }
    if !((q - omega).abs() > g) {
        return Err(NetOracleError::Target(format!(
            "q = {q} must be detuned from ω = {omega} by more than g"
        )));
    }
    let above = q > omega;
    let cj = design.cj;
    let ct = design.total_capacitance;

    // C_a at which the bare qubit would sit on the cavity; the qubit branch
    // must stay on its own side of it.
    let solve_ca = |d: &ChainDesign, count: &mut usize| -> Result<f64, NetOracleError> {
        let crossing = 1.0 / (omega.angular().powi(2) * lj) - cj - d.cg;
        let margin = 0.05 * crossing.abs().max(1e-15);
        let range = if above {
            (1e-18, crossing - margin)
        } else {
            (crossing + margin, 20.0 * ct)
        };
        if !(range.0 < range.1) {
            return Err(NetOracleError::Target(format!(
                "no antenna capacitance puts the qubit at {q} with L_J = {lj:e} H"
            )));
        }
        let bare = 1.0 / (q.angular().powi(2) * lj) - cj - d.cg;
        let x0 = bare.clamp(range.0, range.1);
        let mut err = None;
        let out = secant_solve(
            |ca| {
                *count += 1;
                match (ChainDesign { ca, ..*d }).qubit_branch(lj, above) {
                    Ok(f) => (f - q).hz(),
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                }
            },
            x0,
            (x0 * 1.01).clamp(range.0, range.1),
            range,
            1e-14,
            1e-9 * q.hz(),
            MAX_ITERATIONS,
        );
        if let Some(e) = err {
            return Err(e);
        }
        if !out.converged {
            return Err(NetOracleError::Calibration {
                stage: "antenna capacitance",
                residual: out.residual,
                iterations: *count,
            });
        }
        Ok(out.x)
    };

    let c_sigma = 1.0 / (q.angular().powi(2) * lj);
    let cg0 = 2.0 * g.hz() / omega.hz() * (ct * c_sigma).sqrt();
    let mut err = None;
    let mut inner = 0usize;
    let out = secant_solve(
        |cg| {
            let mut d = ChainDesign { cg, ..*design };
            let res = solve_ca(&d, &mut inner).and_then(|ca| {
                d.ca = ca;
                d.qubit_cavity_coupling()
            });
            match res {
                Ok((half_gap, _)) => (half_gap - g).hz(),
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            }
        },
        cg0,
        1.02 * cg0,
        (1e-3 * cg0, 0.25 * ct),
        1e-14,
        1e-7 * g.hz(),
        MAX_ITERATIONS,
    );
    *iterations += inner;
    if let Some(e) = err {
        return Err(e);
    }
    if !out.converged {
        return Err(NetOracleError::Calibration {
            stage: "qubit coupling capacitance",
            residual: out.residual,
            iterations: *iterations,
        });
    }
    design.cg = out.x;
    design.ca = solve_ca(design, iterations)?;
    Ok(())
}
