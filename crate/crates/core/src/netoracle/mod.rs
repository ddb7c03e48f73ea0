//! Lumped-element surrogate for the electromagnetic simulations.
//!
//! A [`CircuitNetwork`] is a set of nodes (ground is implicit and has index
//! zero) joined by capacitors, inductors and resistors, plus named ports.
//! Port terminations are kept separate from the element list: they are
//! stamped when a driving-point spectrum looks into a different port, and
//! removed when they act as the reference impedance of a scattering
//! calculation.

mod calibrate;
mod chain;
mod spectrum;

pub use calibrate::{
    calibrate_chain, BaseCircuit, CalibrationReport, CalibrationTargets, ChainDesign,
    GammaExtraction,
};
pub use chain::{build_cavity_circuit, ChainSpec, PortSpec, QubitSpec, TankSpec};
pub use spectrum::{
    port_admittance_spectrum, port_impedance_spectrum, transmission_spectrum, FrequencyResponse,
    PortResponse, SpectrumTrace, SweepGrid, TraceKind, REFERENCE_IMPEDANCE,
};

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::units::{Frequency, TWO_PI};

#[derive(Debug, Error)]
pub enum NetOracleError {
    #[error("{kind:?} value must be positive and finite, got {value}")]
    InvalidElement { kind: ElementKind, value: f64 },
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("element connects node {0} to itself")]
    SelfLoop(usize),
    #[error("node {0} has no path to ground")]
    Unreachable(usize),
    #[error("qubit host cavity {host} out of range for a {tanks}-cavity chain")]
    HostOutOfRange { host: usize, tanks: usize },
    #[error("port {0} is not a valid qubit lumped port: {1}")]
    QubitPort(String, String),
    #[error("duplicate port name {0}")]
    DuplicatePort(String),
    #[error("no port named {0}")]
    UnknownPort(String),
    #[error("port {0} has no resistive termination")]
    Unterminated(String),
    #[error("bad sweep grid: {0}")]
    Grid(String),
    #[error("capacitance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("nodal matrix is singular at {0}")]
    Singular(Frequency),
    #[error("calibration of {stage} did not converge after {iterations} iterations (residual {residual:e})")]
    Calibration {
        stage: &'static str,
        residual: f64,
        iterations: usize,
    },
    #[error("invalid calibration target: {0}")]
    Target(String),
    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace csv: {0}")]
    TraceFormat(String),
}

/// Index of a circuit node. `NodeId::GROUND` is the reference node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const GROUND: NodeId = NodeId(0);

    pub fn is_ground(self) -> bool {
        self.0 == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Capacitor,
    Inductor,
    Resistor,
}

/// A two-terminal element. Values are in F, H or Ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub value: f64,
    pub a: NodeId,
    pub b: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortRole {
    /// Lumped port across a qubit junction branch.
    QubitLp,
    Drive,
    Readout,
}

/// A named port between `node` and ground.
#[derive(Clone, Debug, PartialEq)]
pub struct Port {
    pub name: String,
    pub node: NodeId,
    pub role: PortRole,
    /// Resistive termination in Ω, if the port is loaded.
    pub termination: Option<f64>,
}

/// Incrementally assembles a [`CircuitNetwork`].
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    labels: Vec<String>,
    elements: Vec<Element>,
    ports: Vec<Port>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> NodeId {
        self.labels.push(label.into());
        NodeId(self.labels.len())
    }

    pub fn element(&mut self, kind: ElementKind, value: f64, a: NodeId, b: NodeId) -> &mut Self {
        self.elements.push(Element { kind, value, a, b });
        self
    }

    pub fn capacitor(&mut self, value: f64, a: NodeId, b: NodeId) -> &mut Self {
        self.element(ElementKind::Capacitor, value, a, b)
    }

    pub fn inductor(&mut self, value: f64, a: NodeId, b: NodeId) -> &mut Self {
        self.element(ElementKind::Inductor, value, a, b)
    }

    pub fn resistor(&mut self, value: f64, a: NodeId, b: NodeId) -> &mut Self {
        self.element(ElementKind::Resistor, value, a, b)
    }

    pub fn port(
        &mut self,
        name: impl Into<String>,
        node: NodeId,
        role: PortRole,
        termination: Option<f64>,
    ) -> &mut Self {
        self.ports.push(Port {
            name: name.into(),
            node,
            role,
            termination,
        });
        self
    }

    pub fn build(self) -> Result<CircuitNetwork, NetOracleError> {
        CircuitNetwork::new(self.labels, self.elements, self.ports)
    }
}

/// A validated lumped network with its capacitance, inverse-inductance and
/// conductance matrices cached.
#[derive(Clone, Debug)]
pub struct CircuitNetwork {
    labels: Vec<String>,
    elements: Vec<Element>,
    ports: Vec<Port>,
    capacitance: DMatrix<f64>,
    inverse_inductance: DMatrix<f64>,
    conductance: DMatrix<f64>,
}

fn stamp(m: &mut DMatrix<f64>, a: NodeId, b: NodeId, y: f64) {
    match (a.is_ground(), b.is_ground()) {
        (false, false) => {
            let (i, j) = (a.0 - 1, b.0 - 1);
            m[(i, i)] += y;
            m[(j, j)] += y;
            m[(i, j)] -= y;
            m[(j, i)] -= y;
        }
        (false, true) => m[(a.0 - 1, a.0 - 1)] += y,
        (true, false) => m[(b.0 - 1, b.0 - 1)] += y,
        (true, true) => {}
    }
}

impl CircuitNetwork {
    fn new(
        labels: Vec<String>,
        elements: Vec<Element>,
        ports: Vec<Port>,
    ) -> Result<Self, NetOracleError> {
        let n = labels.len();
        let check_node = |id: NodeId| {
            if id.0 > n {
                Err(NetOracleError::UnknownNode(id.0))
            } else {
                Ok(())
            }
        };
        for e in &elements {
            if !(e.value > 0.0 && e.value.is_finite()) {
                return Err(NetOracleError::InvalidElement {
                    kind: e.kind,
                    value: e.value,
                });
            }
            check_node(e.a)?;
            check_node(e.b)?;
            if e.a == e.b {
                return Err(NetOracleError::SelfLoop(e.a.0));
            }
        }
        for (i, p) in ports.iter().enumerate() {
            check_node(p.node)?;
            if p.node.is_ground() {
                return Err(NetOracleError::UnknownNode(0));
            }
            if ports[..i].iter().any(|q| q.name == p.name) {
                return Err(NetOracleError::DuplicatePort(p.name.clone()));
            }
            if let Some(r) = p.termination {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(NetOracleError::InvalidElement {
                        kind: ElementKind::Resistor,
                        value: r,
                    });
                }
            }
            if p.role == PortRole::QubitLp {
                let grounded = |k: ElementKind| {
                    elements.iter().any(|e| {
                        e.kind == k
                            && ((e.a == p.node && e.b.is_ground())
                                || (e.b == p.node && e.a.is_ground()))
                    })
                };
                if !grounded(ElementKind::Inductor) || !grounded(ElementKind::Capacitor) {
                    return Err(NetOracleError::QubitPort(
                        p.name.clone(),
                        "node needs a junction inductor and capacitor to ground".into(),
                    ));
                }
            }
        }

        // Union-find over element connections to verify every node reaches ground.
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &elements {
            let (ra, rb) = (find(&mut parent, e.a.0), find(&mut parent, e.b.0));
            parent[ra] = rb;
        }
        let g = find(&mut parent, 0);
        if let Some(k) = (1..=n).find(|&k| find(&mut parent, k) != g) {
            return Err(NetOracleError::Unreachable(k));
        }

        let mut capacitance = DMatrix::zeros(n, n);
        let mut inverse_inductance = DMatrix::zeros(n, n);
        let mut conductance = DMatrix::zeros(n, n);
        for e in &elements {
            match e.kind {
                ElementKind::Capacitor => stamp(&mut capacitance, e.a, e.b, e.value),
                ElementKind::Inductor => stamp(&mut inverse_inductance, e.a, e.b, 1.0 / e.value),
                ElementKind::Resistor => stamp(&mut conductance, e.a, e.b, 1.0 / e.value),
            }
        }
        Ok(CircuitNetwork {
            labels,
            elements,
            ports,
            capacitance,
            inverse_inductance,
            conductance,
        })
    }

    /// Number of non-ground nodes.
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn node_label(&self, id: NodeId) -> Option<&str> {
        id.0.checked_sub(1)
            .and_then(|i| self.labels.get(i))
            .map(String::as_str)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn port(&self, name: &str) -> Result<&Port, NetOracleError> {
        self.ports
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| NetOracleError::UnknownPort(name.into()))
    }

    pub(crate) fn port_index(&self, name: &str) -> Result<usize, NetOracleError> {
        self.ports
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| NetOracleError::UnknownPort(name.into()))
    }

    /// Node capacitance matrix (F).
    pub fn capacitance_matrix(&self) -> &DMatrix<f64> {
        &self.capacitance
    }

    /// Node inverse-inductance matrix (1/H).
    pub fn inverse_inductance_matrix(&self) -> &DMatrix<f64> {
        &self.inverse_inductance
    }

    /// True when the network has no resistors and no port terminations.
    pub fn is_lossless(&self) -> bool {
        self.elements
            .iter()
            .all(|e| e.kind != ElementKind::Resistor)
            && self.ports.iter().all(|p| p.termination.is_none())
    }

    /// Whether any loss remains once the terminations of `excluded` ports
    /// are removed.
    pub(crate) fn lossless_excluding(&self, excluded: &[usize]) -> bool {
        self.elements
            .iter()
            .all(|e| e.kind != ElementKind::Resistor)
            && self
                .ports
                .iter()
                .enumerate()
                .all(|(i, p)| p.termination.is_none() || excluded.contains(&i))
    }

    /// Real conductance matrix with the terminations of every port not in
    /// `excluded` stamped to ground.
    pub(crate) fn loss_matrix(&self, excluded: &[usize]) -> DMatrix<f64> {
        let mut g = self.conductance.clone();
        for (i, p) in self.ports.iter().enumerate() {
            if let (Some(r), false) = (p.termination, excluded.contains(&i)) {
                stamp(&mut g, p.node, NodeId::GROUND, 1.0 / r);
            }
        }
        g
    }

    /// Real susceptance matrix `ωC − Γ/ω`.
    pub(crate) fn susceptance(&self, f: f64) -> DMatrix<f64> {
        let w = TWO_PI * f;
        &self.capacitance * w - &self.inverse_inductance * (1.0 / w)
    }
}

/// Complex node-admittance matrix at `f`, with every port termination
/// stamped as a resistor to ground.
pub fn nodal_matrix(net: &CircuitNetwork, f: Frequency) -> DMatrix<Complex64> {
    let b = net.susceptance(f.hz());
    let g = net.loss_matrix(&[]);
    DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
        Complex64::new(g[(i, j)], b[(i, j)])
    })
}

/// Resonance frequencies of the lossless network from `Γv = (2πf)²Cv`,
/// ascending. Resistors and terminations are ignored; zero modes from
/// purely capacitive nodes are dropped.
pub fn network_eigenfrequencies(net: &CircuitNetwork) -> Result<Vec<Frequency>, NetOracleError> {
    let chol = Cholesky::new(net.capacitance.clone()).ok_or(NetOracleError::NotPositiveDefinite)?;
    let l = chol.l();
    let n = l.nrows();
    // A = L⁻¹ Γ L⁻ᵀ, built column by column with triangular solves.
    let x = l
        .solve_lower_triangular(&net.inverse_inductance)
        .ok_or(NetOracleError::NotPositiveDefinite)?;
    let a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(NetOracleError::NotPositiveDefinite)?;
    let a = (&a + a.transpose()) * 0.5;
    let ev = SymmetricEigen::new(a).eigenvalues;
    let scale = ev.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut out: Vec<Frequency> = ev
        .iter()
        .filter(|&&v| v > 1e-9 * scale)
        .map(|&v| Frequency::from_angular(v.sqrt()))
        .collect();
    out.sort_by(|p, q| p.hz().total_cmp(&q.hz()));
    debug_assert!(out.len() <= n);
    Ok(out)
}
