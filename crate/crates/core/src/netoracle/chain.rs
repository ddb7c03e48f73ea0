//! Cavity chains as coupled parallel-LC tanks.

use super::{CircuitNetwork, NetOracleError, NetworkBuilder, NodeId, PortRole};

/// One cavity: a parallel LC tank to ground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TankSpec {
    pub inductance: f64,
    pub capacitance: f64,
}

/// A qubit junction branch (`L_J ∥ c_J ∥ C_a` to ground) joined to a host
/// tank through `C_g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitSpec {
    /// Zero-based host tank.
    pub host: usize,
    pub lj: f64,
    pub cj: f64,
    pub cg: f64,
    pub ca: f64,
}

/// A measurement port: `C_p` from a tank to a port node, terminated in a
/// resistor to ground.
#[derive(Clone, Debug, PartialEq)]
pub struct PortSpec {
    pub name: String,
    pub tank: usize,
    pub role: PortRole,
    pub cp: f64,
    pub resistance: f64,
}

/// Element values of a chain of `tanks.len()` cavities.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ChainSpec {
    pub tanks: Vec<TankSpec>,
    /// Coupling capacitance between tank `i` and `i + 1`. Zero means the
    /// tanks are not connected.
    pub couplings: Vec<f64>,
    pub qubits: Vec<QubitSpec>,
    pub ports: Vec<PortSpec>,
}

/// Builds the network for `spec`. Tank `i` is node `i + 1`, qubit `k` is
/// node `N + k + 1` with lumped port `LP{k+1}`, and measurement port nodes
/// follow.
pub fn build_cavity_circuit(spec: &ChainSpec) -> Result<CircuitNetwork, NetOracleError> {
    let n = spec.tanks.len();
    if n == 0 {
        return Err(NetOracleError::Target(
            "a chain needs at least one cavity".into(),
        ));
    }
    if spec.couplings.len() + 1 != n {
        return Err(NetOracleError::Target(format!(
            "{} cavities need {} coupling capacitors, got {}",
            n,
            n - 1,
            spec.couplings.len()
        )));
    }
    let mut b = NetworkBuilder::new();
    let tanks: Vec<NodeId> = (0..n)
        .map(|i| b.add_node(format!("cavity{}", i + 1)))
        .collect();
    for (t, node) in spec.tanks.iter().zip(&tanks) {
        b.inductor(t.inductance, *node, NodeId::GROUND).capacitor(
            t.capacitance,
            *node,
            NodeId::GROUND,
        );
    }
    for (i, &cc) in spec.couplings.iter().enumerate() {
        if cc < 0.0 || !cc.is_finite() {
            return Err(NetOracleError::InvalidElement {
                kind: super::ElementKind::Capacitor,
                value: cc,
            });
        }
        if cc > 0.0 {
            b.capacitor(cc, tanks[i], tanks[i + 1]);
        }
    }
    for (k, q) in spec.qubits.iter().enumerate() {
        let host = *tanks.get(q.host).ok_or(NetOracleError::HostOutOfRange {
            host: q.host,
            tanks: n,
        })?;
        let node = b.add_node(format!("qubit{}", k + 1));
        b.inductor(q.lj, node, NodeId::GROUND)
            .capacitor(q.cj, node, NodeId::GROUND)
            .capacitor(q.cg, node, host);
        if q.ca > 0.0 {
            b.capacitor(q.ca, node, NodeId::GROUND);
        }
        b.port(format!("LP{}", k + 1), node, PortRole::QubitLp, None);
    }
    for p in &spec.ports {
        let tank = *tanks.get(p.tank).ok_or(NetOracleError::HostOutOfRange {
            host: p.tank,
            tanks: n,
        })?;
        let node = b.add_node(format!("port_{}", p.name));
        b.capacitor(p.cp, tank, node)
            .port(p.name.clone(), node, p.role, Some(p.resistance));
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netoracle::network_eigenfrequencies;
    use crate::units::TWO_PI;

    #[test]
    fn single_cavity_is_one_node() {
        let spec = ChainSpec {
            tanks: vec![TankSpec {
                inductance: 2e-9,
                capacitance: 400e-15,
            }],
            ..Default::default()
        };
        let net = build_cavity_circuit(&spec).unwrap();
        assert_eq!(net.node_count(), 1);
        assert!(net.is_lossless());
    }

    #[test]
    fn two_tank_modes_match_nodal_closed_form() {
        // Symmetric mode leaves C_c uncharged; antisymmetric mode sees 2·C_c.
        let (l, c, cc) = (2e-9, 396e-15, 4e-15);
        let spec = ChainSpec {
            tanks: vec![
                TankSpec {
                    inductance: l,
                    capacitance: c
                };
                2
            ],
            couplings: vec![cc],
            ..Default::default()
        };
        let f = network_eigenfrequencies(&build_cavity_circuit(&spec).unwrap()).unwrap();
        let lo = 1.0 / (TWO_PI * (l * (c + 2.0 * cc)).sqrt());
        let hi = 1.0 / (TWO_PI * (l * c).sqrt());
        assert!((f[0].hz() / lo - 1.0).abs() < 1e-13);
        assert!((f[1].hz() / hi - 1.0).abs() < 1e-13);
        // Split about the tank frequency of the loaded node capacitance c + c_c,
        // symmetric to first order in c_c/c.
        let centre = 1.0 / (TWO_PI * (l * (c + cc)).sqrt());
        let asym = (0.5 * (f[0].hz() + f[1].hz()) - centre).abs();
        assert!(asym < cc / c * (f[1].hz() - f[0].hz()));
    }

    #[test]
    fn host_out_of_range() {
        let spec = ChainSpec {
            tanks: vec![TankSpec {
                inductance: 2e-9,
                capacitance: 400e-15,
            }],
            qubits: vec![QubitSpec {
                host: 1,
                lj: 8e-9,
                cj: 10e-15,
                cg: 5e-15,
                ca: 60e-15,
            }],
            ..Default::default()
        };
        assert!(matches!(
            build_cavity_circuit(&spec),
            Err(NetOracleError::HostOutOfRange { host: 1, tanks: 1 })
        ));
    }
}
