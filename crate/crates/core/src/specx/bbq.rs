//! Black-box quantization from the slope of Im Y at its zeros.

use std::fmt::Write as _;

use super::SpecxError;
use crate::netoracle::{SpectrumTrace, TraceKind};
use crate::units::{Frequency, ELEMENTARY_CHARGE, PLANCK, REDUCED_FLUX_QUANTUM, TWO_PI};

/// Relative differencing step for `dImY/dω`.
const DEFAULT_RELATIVE_STEP: f64 = 1e-5;

/// How the cross-Kerr coefficient is inverted for the coupling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KerrConvention {
    /// `χ_qr = −E_C·g²/Δ²`.
    LiteralB4,
    /// `χ_qr = −2·E_C·g²/Δ²`.
    #[default]
    FactorTwo,
}

impl KerrConvention {
    pub fn label(self) -> &'static str {
        match self {
            KerrConvention::LiteralB4 => "literal-b4",
            KerrConvention::FactorTwo => "factor-2",
        }
    }

    fn factor(self) -> f64 {
        match self {
            KerrConvention::LiteralB4 => 1.0,
            KerrConvention::FactorTwo => 2.0,
        }
    }
}

/// `c_Σ` (F), `E_C` and `E_J` (Hz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeParameters {
    pub c_sigma: f64,
    pub e_c: Frequency,
    pub e_j: Frequency,
}

/// Charging and Josephson energies of an LC qubit with frequency `q` and
/// junction inductance `lj`.
pub fn csigma_ec_ej(q: Frequency, lj: f64) -> Result<ChargeParameters, SpecxError> {
    if !(q.hz() > 0.0 && lj > 0.0) {
        return Err(SpecxError::InvalidInput(format!(
            "q and L_J must be positive, got {q} and {lj:e} H"
        )));
    }
    let c_sigma = 1.0 / (q.angular().powi(2) * lj);
    Ok(ChargeParameters {
        c_sigma,
        e_c: Frequency::from_hz(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c_sigma * PLANCK)),
        e_j: Frequency::from_hz(REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / (lj * PLANCK)),
    })
}

/// `c_p = ½·dImY/dω` at the zero `f_p`.
pub fn bbq_mode_capacitance(trace: &SpectrumTrace, f_p: Frequency) -> Result<f64, SpecxError> {
    bbq_mode_capacitance_with_step(trace, f_p, DEFAULT_RELATIVE_STEP)
}

/// [`bbq_mode_capacitance`] with the angular differencing step given
/// relative to `ω_p`. With a source attached the derivative is a central
/// difference with one Richardson extrapolation; otherwise the two grid
/// samples bracketing `f_p` are differenced.
pub fn bbq_mode_capacitance_with_step(
    trace: &SpectrumTrace,
    f_p: Frequency,
    relative_step: f64,
) -> Result<f64, SpecxError> {
    if trace.kind() != TraceKind::Admittance {
        return Err(SpecxError::WrongKind {
            expected: TraceKind::Admittance,
            found: trace.kind(),
        });
    }
    if !trace.grid().contains(f_p) {
        return Err(SpecxError::Range(f_p));
    }
    let slope = match trace.source() {
        Some(src) => {
            let w = f_p.angular();
            let im = |x: f64| {
                src.evaluate(Frequency::from_angular(x))
                    .map(|v| v.im)
                    .ok_or(SpecxError::InvalidInput(format!(
                        "admittance singular near {f_p}"
                    )))
            };
            let central =
                |h: f64| -> Result<f64, SpecxError> { Ok((im(w + h)? - im(w - h)?) / (2.0 * h)) };
            let h = relative_step * w;
            let (d1, d2) = (central(h)?, central(0.5 * h)?);
            (4.0 * d2 - d1) / 3.0
        }
        None => {
            let g = trace.grid();
            let i = (((f_p - g.start()) / g.step()).floor() as usize).min(g.len() - 2);
            let y = trace.imag();
            (y[i + 1] - y[i]) / (TWO_PI * (g.point(i + 1) - g.point(i)).hz())
        }
    };
    let c = 0.5 * slope;
    if !(c > 0.0) {
        return Err(SpecxError::InvalidInput(format!(
            "non-positive mode capacitance {c:e} F at {f_p}"
        )));
    }
    Ok(c)
}

/// `χ_qr = −2√(χ_q χ_r)` for two self-Kerr coefficients of equal sign.
pub fn cross_kerr(chi_q: Frequency, chi_r: Frequency) -> Result<Frequency, SpecxError> {
    let prod = chi_q.hz() * chi_r.hz();
    if prod < 0.0 {
        return Err(SpecxError::InconsistentSign {
            chi_q: chi_q.hz(),
            chi_r: chi_r.hz(),
        });
    }
    Ok(Frequency::from_hz(-2.0 * prod.sqrt()))
}

/// Inverts the cross-Kerr relation of `convention` for `g`.
pub fn coupling_from_cross_kerr(
    chi_qr: Frequency,
    delta_qr: Frequency,
    e_c: Frequency,
    convention: KerrConvention,
) -> Result<Frequency, SpecxError> {
    if !(e_c.hz() > 0.0) {
        return Err(SpecxError::InvalidInput(format!(
            "E_C must be positive, got {e_c}"
        )));
    }
    if chi_qr.hz() > 0.0 {
        return Err(SpecxError::InvalidInput(format!(
            "χ_qr must be negative, got {chi_qr}"
        )));
    }
    Ok(delta_qr.abs() * (-chi_qr.hz() / (convention.factor() * e_c.hz())).sqrt())
}

/// Per-mode black-box quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeKerr {
    pub frequency: Frequency,
    /// Mode capacitance, F.
    pub capacitance: f64,
    /// Mode inductance, H.
    pub inductance: f64,
    pub chi: Frequency,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrReport {
    pub qubit: ModeKerr,
    pub resonator: ModeKerr,
    pub chi_qr: Frequency,
    pub delta_qr: Frequency,
    pub g: Frequency,
    pub charge: ChargeParameters,
    pub convention: KerrConvention,
}

impl KerrReport {
    /// `key=value` lines with SI values.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (tag, m) in [("q", &self.qubit), ("r", &self.resonator)] {
            let _ = writeln!(s, "f_{tag}_hz={:?}", m.frequency.hz());
            let _ = writeln!(s, "c_{tag}_f={:?}", m.capacitance);
            let _ = writeln!(s, "l_{tag}_h={:?}", m.inductance);
            let _ = writeln!(s, "chi_{tag}_hz={:?}", m.chi.hz());
        }
        let _ = writeln!(s, "chi_qr_hz={:?}", self.chi_qr.hz());
        let _ = writeln!(s, "delta_qr_hz={:?}", self.delta_qr.hz());
        let _ = writeln!(s, "g_hz={:?}", self.g.hz());
        let _ = writeln!(s, "c_sigma_f={:?}", self.charge.c_sigma);
        let _ = writeln!(s, "e_c_hz={:?}", self.charge.e_c.hz());
        let _ = writeln!(s, "e_j_hz={:?}", self.charge.e_j.hz());
        let _ = writeln!(s, "convention={}", self.convention.label());
        s
    }
}

fn mode_kerr(trace: &SpectrumTrace, f: Frequency, lj: f64) -> Result<ModeKerr, SpecxError> {
    let c = bbq_mode_capacitance(trace, f)?;
    let l = 1.0 / (f.angular().powi(2) * c);
    let chi = -l * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * lj * c * PLANCK);
    Ok(ModeKerr {
        frequency: f,
        capacitance: c,
        inductance: l,
        chi: Frequency::from_hz(chi),
    })
}

/// Kerr coefficients and coupling from the admittance seen across the
/// junction, at the qubit-like zero `f_q` and the cavity-like zero `f_r`.
/// `E_C` uses `c_Σ` from `f_q` and `L_J`.
pub fn bbq_kerr(
    trace: &SpectrumTrace,
    f_q: Frequency,
    f_r: Frequency,
    lj: f64,
    convention: KerrConvention,
) -> Result<KerrReport, SpecxError> {
    if !(lj > 0.0) {
        return Err(SpecxError::InvalidInput(format!(
            "L_J must be positive, got {lj:e}"
        )));
    }
    if f_q == f_r {
        return Err(SpecxError::InvalidInput(
            "qubit and cavity zeros must differ".into(),
        ));
    }
    let qubit = mode_kerr(trace, f_q, lj)?;
    let resonator = mode_kerr(trace, f_r, lj)?;
    let chi_qr = cross_kerr(qubit.chi, resonator.chi)?;
    let delta_qr = f_q - f_r;
    let charge = csigma_ec_ej(f_q, lj)?;
    let g = coupling_from_cross_kerr(chi_qr, delta_qr, charge.e_c, convention)?;
    Ok(KerrReport {
        qubit,
        resonator,
        chi_qr,
        delta_qr,
        g,
        charge,
        convention,
    })
}
