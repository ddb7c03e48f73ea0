//! Frequency sweeps of port impedance, admittance and transmission.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{CircuitNetwork, NetOracleError};
use crate::units::Frequency;

/// Reference impedance of scattering parameters, Ω.
pub const REFERENCE_IMPEDANCE: f64 = 50.0;

/// |ImZ| above which a sign-flipping impedance sample is flagged as a pole.
const POLE_IMPEDANCE_OHM: f64 = 1e6;

/// Uniform frequency grid `start, start + step, …` up to `stop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepGrid {
    start: Frequency,
    stop: Frequency,
    step: Frequency,
}

impl SweepGrid {
    pub fn new(start: Frequency, stop: Frequency, step: Frequency) -> Result<Self, NetOracleError> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(NetOracleError::Grid("grid bounds must be finite".into()));
        }
        if !(start < stop) {
            return Err(NetOracleError::Grid(format!(
                "start {start} must be below stop {stop}"
            )));
        }
        if !(step.hz() > 0.0) {
            return Err(NetOracleError::Grid(format!(
                "step must be positive, got {step}"
            )));
        }
        let g = SweepGrid { start, stop, step };
        if g.len() < 3 {
            return Err(NetOracleError::Grid(format!(
                "grid has {} points, need at least 3",
                g.len()
            )));
        }
        Ok(g)
    }

    pub fn start(&self) -> Frequency {
        self.start
    }

    pub fn stop(&self) -> Frequency {
        self.stop
    }

    pub fn step(&self) -> Frequency {
        self.step
    }

    pub fn len(&self) -> usize {
        let span = (self.stop - self.start) / self.step;
        (span * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> Frequency {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> Vec<Frequency> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, f: Frequency) -> bool {
        f >= self.start && f <= self.point(self.len() - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Admittance,
    Impedance,
    Scattering,
}

/// Something that can re-evaluate a trace between grid points. `None`
/// marks a frequency where the response is singular.
pub trait FrequencyResponse: Send + Sync {
    fn evaluate(&self, f: Frequency) -> Option<Complex64>;
}

/// One port response of a [`CircuitNetwork`].
#[derive(Clone, Debug)]
pub struct PortResponse {
    net: Arc<CircuitNetwork>,
    kind: TraceKind,
    port_in: usize,
    port_out: usize,
}

impl PortResponse {
    fn impedance_params(
        &self,
        f: f64,
        ports: &[usize],
        excluded: &[usize],
    ) -> Option<DMatrix<Complex64>> {
        let n = self.net.node_count();
        let b = self.net.susceptance(f);
        let nodes: Vec<usize> = ports
            .iter()
            .map(|&p| self.net.ports()[p].node.0 - 1)
            .collect();
        let mut rhs = DMatrix::zeros(n, nodes.len());
        for (k, &i) in nodes.iter().enumerate() {
            rhs[(i, k)] = 1.0;
        }
        let pick = |x: &DMatrix<Complex64>| {
            DMatrix::from_fn(nodes.len(), nodes.len(), |r, c| x[(nodes[r], c)])
        };
        if self.net.lossless_excluding(excluded) {
            // Y = iB, so Z = −i B⁻¹ and the real solve keeps Re Z exactly zero.
            let x = b.lu().solve(&rhs)?;
            let z = x.map(|v| Complex64::new(0.0, -v));
            Some(pick(&z))
        } else {
            let g = self.net.loss_matrix(excluded);
            let y = DMatrix::from_fn(n, n, |i, j| Complex64::new(g[(i, j)], b[(i, j)]));
            let x = y.lu().solve(&rhs.map(|v| Complex64::new(v, 0.0)))?;
            Some(pick(&x))
        }
    }
}

impl FrequencyResponse for PortResponse {
    fn evaluate(&self, f: Frequency) -> Option<Complex64> {
        match self.kind {
            TraceKind::Impedance => self
                .impedance_params(f.hz(), &[self.port_in], &[self.port_in])
                .map(|z| z[(0, 0)]),
            TraceKind::Admittance => Some(
                self.impedance_params(f.hz(), &[self.port_in], &[self.port_in])
                    .map_or(Complex64::new(0.0, 0.0), |z| 1.0 / z[(0, 0)]),
            ),
            TraceKind::Scattering => {
                // Impedance parameters of the fully terminated network give
                // S_ji = 2 Z_ji / √(R_i R_j) and S_ii = 2 Z_ii / R_i − 1.
                let ports = [self.port_in, self.port_out];
                let z = self.impedance_params(f.hz(), &ports, &[])?;
                let r_in = self.net.ports()[self.port_in].termination?;
                if self.port_in == self.port_out {
                    Some(z[(0, 0)] * (2.0 / r_in) - 1.0)
                } else {
                    let r_out = self.net.ports()[self.port_out].termination?;
                    Some(z[(1, 0)] * (2.0 / (r_in * r_out).sqrt()))
                }
            }
        }
    }
}

/// A sampled spectrum on a [`SweepGrid`].
///
/// Admittance samples are in S, impedance samples in Ω and scattering samples
/// are dimensionless complex amplitudes. A trace produced from a network
/// keeps a handle to it so extraction code can refine between grid points.
#[derive(Clone)]
pub struct SpectrumTrace {
    kind: TraceKind,
    ports: Vec<String>,
    grid: SweepGrid,
    samples: Vec<Complex64>,
    poles: Vec<bool>,
    lossless: bool,
    source: Option<Arc<dyn FrequencyResponse>>,
}

impl fmt::Debug for SpectrumTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectrumTrace")
            .field("kind", &self.kind)
            .field("ports", &self.ports)
            .field("grid", &self.grid)
            .field("samples", &self.samples.len())
            .field("lossless", &self.lossless)
            .field("has_source", &self.source.is_some())
            .finish()
    }
}

impl SpectrumTrace {
    /// Wraps externally produced samples. The lossless flag is inferred from
    /// the samples and impedance poles are flagged from the sign-flip rule.
    pub fn from_samples(
        kind: TraceKind,
        ports: Vec<String>,
        grid: SweepGrid,
        samples: Vec<Complex64>,
    ) -> Result<Self, NetOracleError> {
        if samples.len() != grid.len() {
            return Err(NetOracleError::Grid(format!(
                "{} samples for a {}-point grid",
                samples.len(),
                grid.len()
            )));
        }
        let lossless = samples
            .iter()
            .all(|z| !z.im.is_finite() || z.re.abs() <= 1e-12 * z.im.abs());
        let poles = flag_poles(kind, &samples, &vec![false; samples.len()]);
        Ok(SpectrumTrace {
            kind,
            ports,
            grid,
            samples,
            poles,
            lossless,
            source: None,
        })
    }

    pub fn with_source(mut self, source: Arc<dyn FrequencyResponse>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn ports(&self) -> &[String] {
        &self.ports
    }

    pub fn grid(&self) -> &SweepGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn frequencies(&self) -> Vec<Frequency> {
        self.grid.points()
    }

    /// Per-sample pole flags.
    pub fn pole_flags(&self) -> &[bool] {
        &self.poles
    }

    pub fn is_lossless(&self) -> bool {
        self.lossless
    }

    pub fn source(&self) -> Option<&Arc<dyn FrequencyResponse>> {
        self.source.as_ref()
    }

    /// Imaginary parts of the samples.
    pub fn imag(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.im).collect()
    }

    /// `20·log10|s|` of each sample.
    pub fn magnitude_db(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|z| 20.0 * z.norm().log10())
            .collect()
    }

    /// Re-evaluates the response at `f` through the attached source.
    pub fn evaluate(&self, f: Frequency) -> Option<Complex64> {
        self.source.as_ref().and_then(|s| s.evaluate(f))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), NetOracleError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["frequency_hz", "re", "im"])?;
        for (f, z) in self.grid.points().iter().zip(&self.samples) {
            out.write_record([
                format!("{:?}", f.hz()),
                format!("{:?}", z.re),
                format!("{:?}", z.im),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a trace written by [`SpectrumTrace::write_csv`]. The grid is
    /// rebuilt from the frequency column, which must be uniform.
    pub fn read_csv<R: Read>(r: R, kind: TraceKind) -> Result<Self, NetOracleError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["frequency_hz", "re", "im"] {
            return Err(NetOracleError::TraceFormat(format!(
                "expected columns frequency_hz,re,im; got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut freqs = Vec::new();
        let mut samples = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, NetOracleError> {
                rec[i].trim().parse::<f64>().map_err(|e| {
                    NetOracleError::TraceFormat(format!(
                        "row {}: column {}: {e}",
                        line + 2,
                        &headers[i]
                    ))
                })
            };
            freqs.push(num(0)?);
            samples.push(Complex64::new(num(1)?, num(2)?));
        }
        if freqs.len() < 3 {
            return Err(NetOracleError::Grid(format!(
                "trace has {} rows, need at least 3",
                freqs.len()
            )));
        }
        let step = freqs[1] - freqs[0];
        for (i, &f) in freqs.iter().enumerate() {
            if (f - (freqs[0] + i as f64 * step)).abs() > 1e-6 * step.abs() {
                return Err(NetOracleError::TraceFormat(format!(
                    "frequency column is not uniform at row {}",
                    i + 2
                )));
            }
        }
        let grid = SweepGrid::new(
            Frequency::from_hz(freqs[0]),
            Frequency::from_hz(*freqs.last().expect("non-empty")),
            Frequency::from_hz(step),
        )?;
        SpectrumTrace::from_samples(kind, Vec::new(), grid, samples)
    }
}

fn flag_poles(kind: TraceKind, samples: &[Complex64], singular: &[bool]) -> Vec<bool> {
    let n = samples.len();
    (0..n)
        .map(|i| {
            if singular[i] || !samples[i].im.is_finite() {
                return true;
            }
            if kind != TraceKind::Impedance || i == 0 || i + 1 == n {
                return false;
            }
            samples[i].im.abs() > POLE_IMPEDANCE_OHM
                && samples[i - 1].im.signum() != samples[i + 1].im.signum()
        })
        .collect()
}

fn sweep(
    net: &CircuitNetwork,
    kind: TraceKind,
    port_in: &str,
    port_out: &str,
    grid: &SweepGrid,
) -> Result<SpectrumTrace, NetOracleError> {
    let (pi, po) = (net.port_index(port_in)?, net.port_index(port_out)?);
    let source = PortResponse {
        net: Arc::new(net.clone()),
        kind,
        port_in: pi,
        port_out: po,
    };
    let evaluated: Vec<Option<Complex64>> = grid
        .points()
        .par_iter()
        .map(|&f| source.evaluate(f))
        .collect();
    let singular: Vec<bool> = evaluated.iter().map(Option::is_none).collect();
    let samples: Vec<Complex64> = evaluated
        .into_iter()
        .map(|s| s.unwrap_or(Complex64::new(0.0, f64::INFINITY)))
        .collect();
    let poles = flag_poles(kind, &samples, &singular);
    let excluded: Vec<usize> = if kind == TraceKind::Scattering {
        Vec::new()
    } else {
        vec![pi]
    };
    let lossless = kind != TraceKind::Scattering && net.lossless_excluding(&excluded);
    let ports = if pi == po {
        vec![port_in.to_string()]
    } else {
        vec![port_in.to_string(), port_out.to_string()]
    };
    Ok(SpectrumTrace {
        kind,
        ports,
        grid: *grid,
        samples,
        poles,
        lossless,
        source: Some(Arc::new(source)),
    })
}

/// Driving-point impedance at `port`, with every other port terminated.
pub fn port_impedance_spectrum(
    net: &CircuitNetwork,
    port: &str,
    grid: &SweepGrid,
) -> Result<SpectrumTrace, NetOracleError> {
    sweep(net, TraceKind::Impedance, port, port, grid)
}

/// Driving-point admittance `Y = 1/Z` at `port`.
pub fn port_admittance_spectrum(
    net: &CircuitNetwork,
    port: &str,
    grid: &SweepGrid,
) -> Result<SpectrumTrace, NetOracleError> {
    sweep(net, TraceKind::Admittance, port, port, grid)
}

/// Scattering coefficient `S(out, in)` referenced to each port's
/// termination, with all ports terminated.
pub fn transmission_spectrum(
    net: &CircuitNetwork,
    port_in: &str,
    port_out: &str,
    grid: &SweepGrid,
) -> Result<SpectrumTrace, NetOracleError> {
    for name in [port_in, port_out] {
        if net.port(name)?.termination.is_none() {
            return Err(NetOracleError::Unterminated(name.to_string()));
        }
    }
    sweep(net, TraceKind::Scattering, port_in, port_out, grid)
}
