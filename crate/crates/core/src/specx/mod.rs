//! Extraction of resonances, avoided crossings, couplings and Kerr
//! coefficients from spectra.

mod bbq;
mod crossing;
mod fit;

pub use bbq::{
    bbq_kerr, bbq_mode_capacitance, bbq_mode_capacitance_with_step, coupling_from_cross_kerr,
    cross_kerr, csigma_ec_ej, ChargeParameters, KerrConvention, KerrReport, ModeKerr,
};
pub use crossing::{assemble_branches, min_gap, AvoidedCrossing, BranchWindow, MinGap, Side};
pub use fit::{fit_two_level, CSigma, TwoLevelFit};

use thiserror::Error;

use crate::netoracle::{SpectrumTrace, TraceKind};
use crate::numeric::{bisect, golden_min, parabola_vertex};
use crate::units::Frequency;

/// Default refinement tolerance for zeros, poles and peaks, Hz.
pub const REFINE_TOLERANCE_HZ: f64 = 1e3;

/// Default peak prominence for transmission traces, dB.
pub const PEAK_PROMINENCE_DB: f64 = 3.0;

#[derive(Debug, Error)]
pub enum SpecxError {
    #[error("expected a {expected:?} trace, got {found:?}")]
    WrongKind {
        expected: TraceKind,
        found: TraceKind,
    },
    #[error("grid: {0}")]
    Grid(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{count} resonances inside the branch window at {points} sweep points")]
    AmbiguousWindow { count: usize, points: usize },
    #[error("{0} lies outside the trace grid")]
    Range(Frequency),
    #[error("two-level fit did not converge after {} iterations (last RMS {:.3e} Hz)", .rms_trace.len(), .rms_trace.last().copied().unwrap_or(f64::NAN))]
    FitDivergence { rms_trace: Vec<f64> },
    #[error("Kerr coefficients χ_q = {chi_q:e} Hz and χ_r = {chi_r:e} Hz have opposite signs")]
    InconsistentSign { chi_q: f64, chi_r: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResonanceKind {
    YZero,
    ZPole,
    SPeak,
}

impl ResonanceKind {
    pub fn label(self) -> &'static str {
        match self {
            ResonanceKind::YZero => "y_zero",
            ResonanceKind::ZPole => "z_pole",
            ResonanceKind::SPeak => "s_peak",
        }
    }
}

/// Resonance frequencies in ascending order with their origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceSet {
    frequencies: Vec<Frequency>,
    kinds: Vec<ResonanceKind>,
    tolerance: f64,
}

impl ResonanceSet {
    pub fn new(
        mut entries: Vec<(Frequency, ResonanceKind)>,
        tolerance_hz: f64,
    ) -> Result<Self, SpecxError> {
        if !(tolerance_hz > 0.0) {
            return Err(SpecxError::InvalidInput(format!(
                "tolerance must be positive, got {tolerance_hz}"
            )));
        }
        entries.sort_by(|a, b| a.0.hz().total_cmp(&b.0.hz()));
        let (frequencies, kinds) = entries.into_iter().unzip();
        Ok(ResonanceSet {
            frequencies,
            kinds,
            tolerance: tolerance_hz,
        })
    }

    /// A set of identical kind from ascending frequencies.
    pub fn uniform(
        frequencies: Vec<Frequency>,
        kind: ResonanceKind,
        tolerance_hz: f64,
    ) -> Result<Self, SpecxError> {
        Self::new(
            frequencies.into_iter().map(|f| (f, kind)).collect(),
            tolerance_hz,
        )
    }

    pub fn frequencies(&self) -> &[Frequency] {
        &self.frequencies
    }

    pub fn kinds(&self) -> &[ResonanceKind] {
        &self.kinds
    }

    pub fn tolerance_hz(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), SpecxError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["frequency_hz", "kind"])?;
        for (f, k) in self.frequencies.iter().zip(&self.kinds) {
            out.write_record([format!("{:?}", f.hz()), k.label().to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn expect_kind(trace: &SpectrumTrace, expected: TraceKind) -> Result<(), SpecxError> {
    if trace.kind() != expected {
        return Err(SpecxError::WrongKind {
            expected,
            found: trace.kind(),
        });
    }
    if trace.samples().len() < 2 {
        return Err(SpecxError::Grid("trace needs at least two points".into()));
    }
    Ok(())
}

/// A sign change between consecutive non-zero samples, or a sample that is
/// itself exactly zero.
enum Crossing {
    Bracket(usize, usize),
    Exact(usize),
}

fn sign_changes(values: &[f64], rising: bool) -> Vec<Crossing> {
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            last = None;
            continue;
        }
        if v == 0.0 {
            continue;
        }
        if let Some(i) = last {
            let (a, b) = (values[i], v);
            let hit = if rising {
                a < 0.0 && b > 0.0
            } else {
                a > 0.0 && b < 0.0
            };
            if hit {
                out.push(if k > i + 1 {
                    Crossing::Exact(i + 1)
                } else {
                    Crossing::Bracket(i, k)
                });
            }
        }
        last = Some(k);
    }
    out
}

fn interpolate_root(f0: f64, y0: f64, f1: f64, y1: f64) -> f64 {
    f0 + (f1 - f0) * y0 / (y0 - y1)
}

/// Zeros of Im Y with positive slope, refined to [`REFINE_TOLERANCE_HZ`].
pub fn find_imy_zeros(trace: &SpectrumTrace) -> Result<ResonanceSet, SpecxError> {
    find_imy_zeros_with(trace, REFINE_TOLERANCE_HZ)
}

/// [`find_imy_zeros`] with an explicit bisection tolerance. Traces without
/// a source are refined by linear interpolation between grid samples.
pub fn find_imy_zeros_with(
    trace: &SpectrumTrace,
    tolerance_hz: f64,
) -> Result<ResonanceSet, SpecxError> {
    expect_kind(trace, TraceKind::Admittance)?;
    let f = trace.frequencies();
    let y = trace.imag();
    let zeros = sign_changes(&y, true)
        .into_iter()
        .map(|c| match c {
            Crossing::Exact(k) => f[k],
            Crossing::Bracket(i, j) => match trace.source() {
                Some(src) => Frequency::from_hz(bisect(
                    |x| src.evaluate(Frequency::from_hz(x)).map_or(0.0, |v| v.im),
                    f[i].hz(),
                    f[j].hz(),
                    tolerance_hz,
                )),
                None => Frequency::from_hz(interpolate_root(f[i].hz(), y[i], f[j].hz(), y[j])),
            },
        })
        .collect();
    ResonanceSet::uniform(zeros, ResonanceKind::YZero, tolerance_hz)
}

/// Poles of Im Z, refined to [`REFINE_TOLERANCE_HZ`].
pub fn find_imz_poles(trace: &SpectrumTrace) -> Result<ResonanceSet, SpecxError> {
    find_imz_poles_with(trace, REFINE_TOLERANCE_HZ)
}

/// A pole is a `+ → −` flip of Im Z whose outer neighbours rise toward it,
/// or a sample flagged singular. Refinement bisects on the sign of `1/Im Z`.
pub fn find_imz_poles_with(
    trace: &SpectrumTrace,
    tolerance_hz: f64,
) -> Result<ResonanceSet, SpecxError> {
    expect_kind(trace, TraceKind::Impedance)?;
    let f = trace.frequencies();
    let x = trace.imag();
    let n = x.len();
    let mut poles: Vec<Frequency> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(k, _)| f[k])
        .collect();
    for c in sign_changes(&x, false) {
        let pole = match c {
            Crossing::Exact(k) => f[k],
            Crossing::Bracket(i, j) => {
                let rises_in = i == 0 || !x[i - 1].is_finite() || x[i - 1] < x[i];
                let rises_out = j + 1 == n || !x[j + 1].is_finite() || x[j + 1] > x[j];
                let flagged = trace.pole_flags()[i] || trace.pole_flags()[j];
                if !(flagged || (rises_in && rises_out)) {
                    continue;
                }
                match trace.source() {
                    Some(src) => Frequency::from_hz(bisect(
                        |v| {
                            src.evaluate(Frequency::from_hz(v))
                                .map_or(0.0, |z| 1.0 / z.im)
                        },
                        f[i].hz(),
                        f[j].hz(),
                        tolerance_hz,
                    )),
                    None => Frequency::from_hz(interpolate_root(
                        f[i].hz(),
                        1.0 / x[i],
                        f[j].hz(),
                        1.0 / x[j],
                    )),
                }
            }
        };
        poles.push(pole);
    }
    ResonanceSet::uniform(poles, ResonanceKind::ZPole, tolerance_hz)
}

/// Local maxima of `|S|` in dB whose topographic prominence is at least
/// [`PEAK_PROMINENCE_DB`].
pub fn find_transmission_peaks(trace: &SpectrumTrace) -> Result<ResonanceSet, SpecxError> {
    find_transmission_peaks_with(trace, PEAK_PROMINENCE_DB)
}

pub fn find_transmission_peaks_with(
    trace: &SpectrumTrace,
    prominence_db: f64,
) -> Result<ResonanceSet, SpecxError> {
    expect_kind(trace, TraceKind::Scattering)?;
    let f = trace.frequencies();
    let db = trace.magnitude_db();
    let n = db.len();
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(db[i] > db[i - 1] && db[i] >= db[i + 1]) {
            continue;
        }
        let mut left_min = db[i];
        for k in (0..i).rev() {
            if db[k] > db[i] {
                break;
            }
            left_min = left_min.min(db[k]);
        }
        let mut right_min = db[i];
        for &v in &db[i + 1..] {
            if v > db[i] {
                break;
            }
            right_min = right_min.min(v);
        }
        if db[i] - left_min.max(right_min) < prominence_db {
            continue;
        }
        let (a, b) = (f[i - 1].hz(), f[i + 1].hz());
        let refined = match trace.source() {
            Some(src) => {
                let (x, _) = golden_min(
                    |x| {
                        src.evaluate(Frequency::from_hz(x))
                            .map_or(f64::INFINITY, |s| -s.norm())
                    },
                    a,
                    b,
                    REFINE_TOLERANCE_HZ,
                );
                x
            }
            None => parabola_vertex((a, -db[i - 1]), (f[i].hz(), -db[i]), (b, -db[i + 1]))
                .map_or(f[i].hz(), |(x, _)| x.clamp(a, b)),
        };
        peaks.push(Frequency::from_hz(refined));
    }
    ResonanceSet::uniform(peaks, ResonanceKind::SPeak, REFINE_TOLERANCE_HZ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netoracle::{
        port_admittance_spectrum, port_impedance_spectrum, NetworkBuilder, NodeId, PortRole,
        SweepGrid,
    };
    use crate::units::TWO_PI;
    use num_complex::Complex64;

    fn tank(l: f64, c: f64) -> crate::netoracle::CircuitNetwork {
        let mut b = NetworkBuilder::new();
        let n = b.add_node("t");
        b.inductor(l, n, NodeId::GROUND)
            .capacitor(c, n, NodeId::GROUND)
            .port("P", n, PortRole::QubitLp, None);
        b.build().unwrap()
    }

    fn grid(lo: f64, hi: f64, step: f64) -> SweepGrid {
        SweepGrid::new(
            Frequency::from_ghz(lo),
            Frequency::from_ghz(hi),
            Frequency::from_mhz(step),
        )
        .unwrap()
    }

    #[test]
    fn tank_zero_and_pole() {
        let (l, c): (f64, f64) = (2e-9, 400e-15);
        let f0 = 1.0 / (TWO_PI * (l * c).sqrt());
        let net = tank(l, c);
        let g = grid(5.0, 7.0, 1.0);
        let zeros = find_imy_zeros(&port_admittance_spectrum(&net, "P", &g).unwrap()).unwrap();
        let poles = find_imz_poles(&port_impedance_spectrum(&net, "P", &g).unwrap()).unwrap();
        assert_eq!(zeros.len(), 1);
        assert_eq!(poles.len(), 1);
        assert!((zeros.frequencies()[0].hz() - f0).abs() <= REFINE_TOLERANCE_HZ);
        assert!((poles.frequencies()[0].hz() - f0).abs() <= REFINE_TOLERANCE_HZ);
    }

    #[test]
    fn sourceless_trace_uses_interpolation() {
        let g = grid(1.0, 1.01, 1.0);
        let samples: Vec<Complex64> = g
            .points()
            .iter()
            .map(|f| Complex64::new(0.0, f.hz() - 1.0045e9))
            .collect();
        let t = SpectrumTrace::from_samples(TraceKind::Admittance, vec![], g, samples).unwrap();
        let z = find_imy_zeros(&t).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z.frequencies()[0].hz() - 1.0045e9).abs() < 1e-3);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let net = tank(2e-9, 400e-15);
        let t = port_admittance_spectrum(&net, "P", &grid(5.0, 6.0, 10.0)).unwrap();
        assert!(matches!(
            find_imz_poles(&t),
            Err(SpecxError::WrongKind { .. })
        ));
        assert!(matches!(
            find_transmission_peaks(&t),
            Err(SpecxError::WrongKind { .. })
        ));
    }

    #[test]
    fn flat_trace_has_no_peaks() {
        let g = grid(5.0, 6.0, 10.0);
        let t = SpectrumTrace::from_samples(
            TraceKind::Scattering,
            vec![],
            g,
            vec![Complex64::new(0.1, 0.0); g.len()],
        )
        .unwrap();
        assert!(find_transmission_peaks(&t).unwrap().is_empty());
    }
}
