//! Runs the circuit oracle through the extraction layer to reproduce
//! mode-level quantities: g from an L_J sweep, Kerr coefficients, γ from
//! transmission, the exchange coupling J12 and the dark-state pattern.

use rayon::prelude::*;
use thiserror::Error;

use crate::modechain::{gamma_from_two_modes, Configuration, ModeChainError};
use crate::netoracle::{
    network_eigenfrequencies, port_admittance_spectrum, port_impedance_spectrum,
    transmission_spectrum, ChainDesign, NetOracleError, PortRole, PortSpec, SweepGrid,
    REFERENCE_IMPEDANCE,
};
use crate::numeric::golden_min;
use crate::specx::{
    assemble_branches, bbq_kerr, csigma_ec_ej, find_imy_zeros_with, find_imz_poles_with,
    find_transmission_peaks, fit_two_level, min_gap, AvoidedCrossing, BranchWindow, CSigma,
    KerrConvention, KerrReport, ResonanceSet, Side, SpecxError, TwoLevelFit,
};
use crate::units::{Frequency, TWO_PI};

#[derive(Debug, Error)]
pub enum CrossValError {
    #[error(transparent)]
    Net(#[from] NetOracleError),
    #[error(transparent)]
    Specx(#[from] SpecxError),
    #[error(transparent)]
    ModeChain(#[from] ModeChainError),
    #[error("{0}")]
    Pipeline(String),
}

/// Sweep resolution of the oracle pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSettings {
    /// Frequency grid step of every trace.
    pub freq_step: Frequency,
    /// Extra band on either side of the modes of interest.
    pub margin: Frequency,
    /// Zero and pole refinement tolerance, Hz.
    pub tolerance_hz: f64,
    /// Junction-inductance step of single-qubit sweeps, H.
    pub lj_step: f64,
    /// Coarse L_J2 step of the J12 sweep, H.
    pub lj2_step: f64,
    /// Half-width of the L_J2 sweep relative to L_J1.
    pub lj2_span: f64,
    /// Number of successive zooms around the minimum gap.
    pub zoom_levels: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            freq_step: Frequency::from_mhz(1.0),
            margin: Frequency::from_mhz(300.0),
            tolerance_hz: 1e3,
            lj_step: 0.05e-9,
            lj2_step: 0.01e-9,
            lj2_span: 0.12,
            zoom_levels: 8,
        }
    }
}

/// Junction inductance that puts a qubit of capacitance `c_sigma` at `q`.
pub fn lj_for_frequency(c_sigma: f64, q: Frequency) -> f64 {
    1.0 / (q.angular().powi(2) * c_sigma)
}

/// Bare qubit frequency `1/(2π√(c_Σ L_J))`.
pub fn qubit_frequency(c_sigma: f64, lj: f64) -> Frequency {
    Frequency::from_hz(1.0 / (TWO_PI * (c_sigma * lj).sqrt()))
}

/// `c_Σ` implied by the calibrated qubit frequency at the reference L_J.
pub fn nominal_c_sigma(design: &ChainDesign) -> Result<f64, CrossValError> {
    let q = design
        .report
        .q
        .ok_or_else(|| CrossValError::Pipeline("design has no calibrated qubit".into()))?;
    Ok(csigma_ec_ej(q, design.lj_reference)?.c_sigma)
}

fn grid(
    lo: Frequency,
    hi: Frequency,
    settings: &OracleSettings,
) -> Result<SweepGrid, CrossValError> {
    let step = settings.freq_step.hz();
    let lo = Frequency::from_hz((lo.hz() / step).floor() * step);
    Ok(SweepGrid::new(lo, hi, settings.freq_step)?)
}

/// Admittance zeros at the qubit port of one cavity plus qubit, per L_J,
/// assembled into two branches.
pub fn single_qubit_crossing(
    design: &ChainDesign,
    lj_values: &[f64],
    settings: &OracleSettings,
) -> Result<AvoidedCrossing, CrossValError> {
    let c_sigma = design.qubit_capacitance();
    let (lmin, lmax) = lj_values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    let lo = design.omega.min(qubit_frequency(c_sigma, lmax)) - settings.margin;
    let hi = design.omega.max(qubit_frequency(c_sigma, lmin)) + settings.margin;
    let grid = grid(lo, hi, settings)?;
    let sweep = lj_values
        .par_iter()
        .map(|&lj| -> Result<(f64, ResonanceSet), CrossValError> {
            let net = design.network(1, &[(0, lj)], &[])?;
            let y = port_admittance_spectrum(&net, "LP1", &grid)?;
            Ok((lj, find_imy_zeros_with(&y, settings.tolerance_hz)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_branches(
        &sweep,
        BranchWindow::Band {
            lo: grid.start(),
            hi: grid.stop(),
        },
    )?)
}

/// Two-level fit of the single-qubit crossing with `c_Σ` supplied.
pub fn oracle_fit_g(
    design: &ChainDesign,
    lj_values: &[f64],
    settings: &OracleSettings,
) -> Result<(AvoidedCrossing, TwoLevelFit), CrossValError> {
    let ac = single_qubit_crossing(design, lj_values, settings)?;
    let fit = fit_two_level(&ac, None, CSigma::Supplied(nominal_c_sigma(design)?))?;
    Ok((ac, fit))
}

/// Black-box Kerr analysis of one cavity plus qubit at junction inductance
/// `lj`, from the admittance across the junction.
pub fn oracle_bbq(
    design: &ChainDesign,
    lj: f64,
    convention: KerrConvention,
    settings: &OracleSettings,
) -> Result<KerrReport, CrossValError> {
    let net = design.network(1, &[(0, lj)], &[])?;
    let modes = network_eigenfrequencies(&net)?;
    if modes.len() != 2 {
        return Err(CrossValError::Pipeline(format!(
            "expected 2 modes, found {}",
            modes.len()
        )));
    }
    let grid = grid(
        modes[0] - settings.margin,
        modes[1] + settings.margin,
        settings,
    )?;
    let y = port_admittance_spectrum(&net, "LP1", &grid)?;
    let zeros = find_imy_zeros_with(&y, settings.tolerance_hz.min(1.0))?;
    let [a, b] = zeros.frequencies()[..] else {
        return Err(CrossValError::Pipeline(format!(
            "expected 2 admittance zeros, found {}",
            zeros.len()
        )));
    };
    // The qubit-like zero is the one further from the bare cavity.
    let (f_q, f_r) = if (b - design.omega).abs() > (a - design.omega).abs() {
        (b, a)
    } else {
        (a, b)
    };
    Ok(bbq_kerr(&y, f_q, f_r, lj, convention)?)
}

/// γ from the two transmission peaks of a weakly port-loaded two-cavity
/// chain.
pub fn transmission_gamma(
    design: &ChainDesign,
    settings: &OracleSettings,
) -> Result<Frequency, CrossValError> {
    let cp = design.total_capacitance / 400.0;
    let ports = [
        PortSpec {
            name: "drive".into(),
            tank: 0,
            role: PortRole::Drive,
            cp,
            resistance: REFERENCE_IMPEDANCE,
        },
        PortSpec {
            name: "readout".into(),
            tank: 1,
            role: PortRole::Readout,
            cp,
            resistance: REFERENCE_IMPEDANCE,
        },
    ];
    let net = design.network(2, &[], &ports)?;
    let modes = network_eigenfrequencies(&net)?;
    let lo = modes[0] - settings.margin;
    let hi = modes[modes.len() - 1] + settings.margin;
    let s = transmission_spectrum(&net, "drive", "readout", &grid(lo, hi, settings)?)?;
    let peaks = find_transmission_peaks(&s)?;
    let [a, b] = peaks.frequencies()[..] else {
        return Err(CrossValError::Pipeline(format!(
            "expected 2 transmission peaks, found {}",
            peaks.len()
        )));
    };
    Ok(gamma_from_two_modes(a, b)?.0)
}

/// One point of the oracle J12 curve.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleJ12Point {
    pub lj1: f64,
    /// Bare Q1 frequency from `c_Σ` and `L_J1`.
    pub q1_nominal: Frequency,
    /// `q1_nominal − ω`.
    pub delta: Frequency,
    pub j12: Frequency,
    pub lj2_at_min: f64,
    pub side: Side,
    /// Q1 weight of the top and bottom modes of the chain without Q2.
    pub weights: (f64, f64),
    /// Half-gaps of the top and bottom pairs where resolved.
    pub upper: Option<Frequency>,
    pub lower: Option<Frequency>,
    /// Branches of the selected pair over the coarse L_J2 sweep.
    pub crossing: AvoidedCrossing,
}

struct PoleSweep<'a> {
    design: &'a ChainDesign,
    configuration: Configuration,
    lj1: f64,
    grid: SweepGrid,
    tolerance_hz: f64,
    /// Lower edge of the upper band and upper edge of the lower band.
    edges: (Frequency, Frequency),
}

impl PoleSweep<'_> {
    /// Im Z poles at the Q1 port for each L_J2.
    fn poles(&self, lj2_values: &[f64]) -> Result<Vec<(f64, ResonanceSet)>, CrossValError> {
        let h2 = self.configuration.second_host();
        lj2_values
            .par_iter()
            .map(|&lj2| {
                let net = self.design.network(3, &[(0, self.lj1), (h2, lj2)], &[])?;
                let z = port_impedance_spectrum(&net, "LP1", &self.grid)?;
                Ok((lj2, find_imz_poles_with(&z, self.tolerance_hz)?))
            })
            .collect()
    }

    fn window(&self, side: Side) -> BranchWindow {
        match side {
            Side::Upper => BranchWindow::Band {
                lo: self.edges.0,
                hi: self.grid.stop(),
            },
            Side::Lower => BranchWindow::Band {
                lo: self.grid.start(),
                hi: self.edges.1,
            },
        }
    }

    /// Coarse scan of L_J2 followed by repeated zooms around the minimum
    /// gap of the pair on `side`.
    fn crossing(
        &self,
        side: Side,
        coarse: &[(f64, ResonanceSet)],
        zoom_levels: usize,
    ) -> Result<(f64, f64, AvoidedCrossing), CrossValError> {
        let window = self.window(side);
        let ac = assemble_branches(coarse, window)?;
        let mut mg = min_gap(&ac)?;
        let mut step = coarse[1].0 - coarse[0].0;
        for _ in 0..zoom_levels {
            step /= 4.0;
            let pts: Vec<f64> = (-4..=4).map(|i| mg.location + i as f64 * step).collect();
            let zoomed = assemble_branches(&self.poles(&pts)?, window)?;
            let next = min_gap(&zoomed)?;
            if next.half_gap <= mg.half_gap {
                mg = next;
            }
        }
        Ok((mg.half_gap.hz(), mg.location, ac))
    }
}

/// A band takes part in the J12 pick when its Q1 weight is at least this
/// fraction of the larger of the two.
pub const SIDE_WEIGHT_RATIO: f64 = 0.5;

/// Modes of the chain with Q1 alone and the Q1 weight of each. A mode's
/// weight is the sensitivity of its frequency to `L_J1` relative to that of
/// the bare qubit.
fn q1_chain(design: &ChainDesign, lj1: f64) -> Result<(Vec<Frequency>, Vec<f64>), CrossValError> {
    let rel = 1e-6;
    let modes = |l: f64| -> Result<Vec<Frequency>, CrossValError> {
        Ok(network_eigenfrequencies(&design.network(
            3,
            &[(0, l)],
            &[],
        )?)?)
    };
    let (lo, mid, hi) = (
        modes(lj1 * (1.0 - rel))?,
        modes(lj1)?,
        modes(lj1 * (1.0 + rel))?,
    );
    if mid.len() != 4 || lo.len() != 4 || hi.len() != 4 {
        return Err(CrossValError::Pipeline(format!(
            "expected 4 modes without Q2, found {}",
            mid.len()
        )));
    }
    // Relative frequency change of a bare LC qubit over the same step.
    let bare = (1.0 - rel).sqrt().recip() - (1.0 + rel).sqrt().recip();
    let weights = (0..4)
        .map(|k| ((lo[k] - hi[k]).hz() / mid[k].hz() / bare).max(0.0))
        .collect();
    Ok((mid, weights))
}

/// J12 on the circuit oracle for Q1 at `lj1`. Q2 is swept by its junction
/// inductance and poles of Im Z at the Q1 port give the modes. Adding Q2
/// splits the top or the bottom mode of the Q1-only chain into a pair. A
/// side is eligible when that mode's Q1 weight reaches
/// [`SIDE_WEIGHT_RATIO`] of the larger one, and J12 is the smallest minimum
/// half-gap among eligible sides.
pub fn oracle_j12_point(
    design: &ChainDesign,
    configuration: Configuration,
    lj1: f64,
    settings: &OracleSettings,
) -> Result<OracleJ12Point, CrossValError> {
    let c_sigma = nominal_c_sigma(design)?;
    let q1 = qubit_frequency(c_sigma, lj1);
    let lo = design.omega.min(q1) - settings.margin;
    let hi = design.omega.max(q1) + settings.margin;
    let (m, w) = q1_chain(design, lj1)?;
    let edges = (
        Frequency::from_hz(0.5 * (m[2] + m[3]).hz()),
        Frequency::from_hz(0.5 * (m[0] + m[1]).hz()),
    );
    let sweep = PoleSweep {
        design,
        configuration,
        lj1,
        grid: grid(lo, hi, settings)?,
        tolerance_hz: settings.tolerance_hz,
        edges,
    };
    let (a, b) = (
        lj1 * (1.0 - settings.lj2_span),
        lj1 * (1.0 + settings.lj2_span),
    );
    let n = ((b - a) / settings.lj2_step).ceil() as usize;
    let coarse: Vec<f64> = (0..=n).map(|i| a + i as f64 * settings.lj2_step).collect();
    let coarse = sweep.poles(&coarse)?;
    let delta = q1 - design.omega;
    let (w_upper, w_lower) = (w[3], w[0]);
    let upper = sweep.crossing(Side::Upper, &coarse, settings.zoom_levels);
    let lower = sweep.crossing(Side::Lower, &coarse, settings.zoom_levels);
    let upper_j = upper.as_ref().ok().map(|u| Frequency::from_hz(u.0));
    let lower_j = lower.as_ref().ok().map(|l| Frequency::from_hz(l.0));
    let wmax = w_upper.max(w_lower);
    let eligible = |w: f64, r: Result<(f64, f64, AvoidedCrossing), CrossValError>| {
        if w >= SIDE_WEIGHT_RATIO * wmax {
            r
        } else {
            Err(CrossValError::Pipeline(format!(
                "Q1 weight {w:.3} is below {SIDE_WEIGHT_RATIO} of {wmax:.3}"
            )))
        }
    };
    let (side, (j, lj2, crossing)) = match (eligible(w_upper, upper), eligible(w_lower, lower)) {
        (Ok(u), Ok(l)) => {
            if u.0 <= l.0 {
                (Side::Upper, u)
            } else {
                (Side::Lower, l)
            }
        }
        (Ok(u), Err(_)) => (Side::Upper, u),
        (Err(_), Ok(l)) => (Side::Lower, l),
        (Err(e), Err(f)) => return Err(if w_upper >= w_lower { e } else { f }),
    };
    Ok(OracleJ12Point {
        lj1,
        q1_nominal: q1,
        delta,
        j12: Frequency::from_hz(j),
        lj2_at_min: lj2,
        side,
        weights: (w_upper, w_lower),
        upper: upper_j,
        lower: lower_j,
        crossing,
    })
}

/// Oracle J12 at nominal detunings `Δ = q1 − ω`, in input order. Each
/// point fails on its own when no qubit-pair crossing is resolved.
pub fn oracle_j12_curve(
    design: &ChainDesign,
    configuration: Configuration,
    detunings: &[Frequency],
    settings: &OracleSettings,
) -> Result<Vec<Result<OracleJ12Point, CrossValError>>, CrossValError> {
    let c_sigma = nominal_c_sigma(design)?;
    Ok(detunings
        .par_iter()
        .map(|&d| {
            oracle_j12_point(
                design,
                configuration,
                lj_for_frequency(c_sigma, design.omega + d),
                settings,
            )
        })
        .collect())
}

/// Maximum oracle J12 over nominal detunings in `[lo, hi]`: grid scan at
/// `step`, then golden-section refinement in Δ.
pub fn oracle_j12_maximum(
    design: &ChainDesign,
    configuration: Configuration,
    (lo, hi): (Frequency, Frequency),
    step: Frequency,
    settings: &OracleSettings,
) -> Result<OracleJ12Point, CrossValError> {
    if !(hi > lo && step.hz() > 0.0) {
        return Err(CrossValError::Pipeline(format!(
            "bad detuning range [{lo}, {hi}] step {step}"
        )));
    }
    let c_sigma = nominal_c_sigma(design)?;
    let at = |d: f64| {
        oracle_j12_point(
            design,
            configuration,
            lj_for_frequency(c_sigma, design.omega + Frequency::from_hz(d)),
            settings,
        )
    };
    let n = ((hi - lo).hz() / step.hz()).floor() as usize;
    let deltas: Vec<f64> = (0..=n).map(|i| lo.hz() + i as f64 * step.hz()).collect();
    let points: Vec<Option<OracleJ12Point>> = deltas.par_iter().map(|&d| at(d).ok()).collect();
    let (ibest, best) = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.as_ref().map(|p| (i, p)))
        .max_by(|a, b| a.1.j12.hz().total_cmp(&b.1.j12.hz()))
        .ok_or_else(|| CrossValError::Pipeline("no detuning produced an oracle crossing".into()))?;
    let a = deltas[ibest.saturating_sub(1)];
    let b = deltas[(ibest + 1).min(deltas.len() - 1)];
    let (d_star, neg) = golden_min(
        |d| at(d).map_or(0.0, |p| -p.j12.hz()),
        a,
        b,
        step.hz() * 1e-3,
    );
    if -neg > best.j12.hz() {
        at(d_star)
    } else {
        Ok(best.clone())
    }
}

/// Outcome of sweeping a single qubit hosted by the middle cavity of a
/// symmetric three-cavity chain.
#[derive(Clone, Debug, PartialEq)]
pub struct DarkStateReport {
    /// Half of the minimum separation between consecutive eigenfrequencies
    /// (lowest pair, middle pair, highest pair) over the sweep. When the
    /// qubit coupling exceeds the mode spacing the outer minima sit at the
    /// sweep edges rather than at a crossing.
    pub half_gaps: [Frequency; 3],
    /// Junction inductance at each minimum, H.
    pub locations: [f64; 3],
    /// Eigenfrequencies at the probe inductance.
    pub modes: Vec<Frequency>,
    /// Admittance zeros at the qubit port at the probe inductance.
    pub zeros: Vec<Frequency>,
    /// Modes with no admittance zero within one grid step.
    pub missing: Vec<Frequency>,
    /// Normal modes of the three-cavity chain without the qubit.
    pub cavity_modes: [Frequency; 3],
    /// Junction inductance at which the bare qubit meets each cavity mode.
    pub resonant_lj: [f64; 3],
    /// Distance from each cavity mode to the nearest eigenfrequency of the
    /// loaded chain at its resonant inductance. A mode the qubit couples to
    /// is repelled; a dark mode keeps an eigenfrequency on top of it.
    pub repulsion: [Frequency; 3],
}

/// Sweeps the junction inductance of a qubit in cavity 2 across all three
/// chain modes. Each mode's crossing is located on the coarse grid and
/// refined by golden-section search on the eigenfrequency gap.
pub fn dark_state_scan(
    design: &ChainDesign,
    lj_values: &[f64],
    probe_lj: f64,
    settings: &OracleSettings,
) -> Result<DarkStateReport, CrossValError> {
    if lj_values.len() < 3 {
        return Err(CrossValError::Pipeline(
            "dark-state scan needs at least three L_J values".into(),
        ));
    }
    let modes_at = |lj: f64| -> Result<Vec<Frequency>, CrossValError> {
        let f = network_eigenfrequencies(&design.network(3, &[(1, lj)], &[])?)?;
        if f.len() != 4 {
            return Err(CrossValError::Pipeline(format!(
                "expected 4 modes, found {}",
                f.len()
            )));
        }
        Ok(f)
    };
    let spectra = lj_values
        .par_iter()
        .map(|&l| modes_at(l))
        .collect::<Result<Vec<_>, _>>()?;
    let mut half_gaps = [Frequency::ZERO; 3];
    let mut locations = [0.0; 3];
    for k in 0..3 {
        let gaps: Vec<f64> = spectra.iter().map(|f| (f[k + 1] - f[k]).hz()).collect();
        let i = (0..gaps.len())
            .min_by(|&a, &b| gaps[a].total_cmp(&gaps[b]))
            .expect("non-empty");
        let a = lj_values[i.saturating_sub(1)];
        let b = lj_values[(i + 1).min(lj_values.len() - 1)];
        let (x, gap) = golden_min(
            |l| modes_at(l).map_or(f64::INFINITY, |f| (f[k + 1] - f[k]).hz()),
            a.min(b),
            a.max(b),
            1e-22,
        );
        half_gaps[k] = Frequency::from_hz(0.5 * gap);
        locations[k] = x;
    }

    let net = design.network(3, &[(1, probe_lj)], &[])?;
    let modes = network_eigenfrequencies(&net)?;
    let grid = grid(
        modes[0] - settings.margin,
        modes[modes.len() - 1] + settings.margin,
        settings,
    )?;
    let zeros = find_imy_zeros_with(
        &port_admittance_spectrum(&net, "LP1", &grid)?,
        settings.tolerance_hz,
    )?;
    let missing = modes
        .iter()
        .copied()
        .filter(|m| {
            zeros
                .frequencies()
                .iter()
                .all(|z| (*z - *m).abs() > settings.freq_step)
        })
        .collect();
    let bare = network_eigenfrequencies(&design.network(3, &[], &[])?)?;
    let [w1, w2, w3] = bare[..] else {
        return Err(CrossValError::Pipeline(format!(
            "expected 3 cavity modes, found {}",
            bare.len()
        )));
    };
    let cavity_modes = [w1, w2, w3];
    let c_sigma = nominal_c_sigma(design)?;
    let resonant_lj = cavity_modes.map(|w| lj_for_frequency(c_sigma, w));
    let mut repulsion = [Frequency::ZERO; 3];
    for k in 0..3 {
        let w = cavity_modes[k];
        repulsion[k] = modes_at(resonant_lj[k])?
            .into_iter()
            .map(|f| (f - w).abs())
            .fold(Frequency::from_hz(f64::INFINITY), Frequency::min);
    }
    Ok(DarkStateReport {
        half_gaps,
        locations,
        modes,
        zeros: zeros.frequencies().to_vec(),
        missing,
        cavity_modes,
        resonant_lj,
        repulsion,
    })
}
