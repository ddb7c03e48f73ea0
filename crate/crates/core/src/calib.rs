//! Coupler-law fitting `γ(d) = α·d⁴` and single-photon field rescaling.

use std::fmt::Write as _;
use std::io::Read;

use thiserror::Error;

use crate::units::{Frequency, PLANCK};

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("no data points")]
    Empty,
    #[error("all {0} points share one diameter; the fit is degenerate")]
    Degenerate(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Cavity-height tag of a fitted law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawSource {
    H1,
    H2,
    User,
}

impl LawSource {
    pub fn label(self) -> &'static str {
        match self {
            LawSource::H1 => "h1",
            LawSource::H2 => "h2",
            LawSource::User => "user",
        }
    }
}

/// `γ = α·d⁴` with `α` in Hz/mm⁴.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplerLaw {
    pub alpha: f64,
    pub exponent: f64,
    /// RMS fit residual, Hz.
    pub residual: f64,
    pub source: LawSource,
}

impl CouplerLaw {
    pub fn new(alpha: f64, source: LawSource) -> Result<Self, CalibError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CalibError::Invalid(format!(
                "α must be positive, got {alpha}"
            )));
        }
        Ok(CouplerLaw {
            alpha,
            exponent: 4.0,
            residual: 0.0,
            source,
        })
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alpha_hz_per_mm4={:?}", self.alpha);
        let _ = writeln!(s, "exponent={:?}", self.exponent);
        let _ = writeln!(s, "residual_hz={:?}", self.residual);
        let _ = writeln!(s, "source={}", self.source.label());
        s
    }
}

/// A coupler measurement: diameter in mm and the resulting γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplerPoint {
    pub d_mm: f64,
    pub gamma: Frequency,
}

fn check_points(points: &[CouplerPoint]) -> Result<(), CalibError> {
    if points.is_empty() {
        return Err(CalibError::Empty);
    }
    for p in points {
        if !(p.d_mm > 0.0 && p.d_mm.is_finite()) {
            return Err(CalibError::Invalid(format!(
                "diameter must be positive, got {} mm",
                p.d_mm
            )));
        }
        if !p.gamma.is_finite() {
            return Err(CalibError::Invalid("γ must be finite".into()));
        }
    }
    if points.len() > 1 && points.iter().all(|p| p.d_mm == points[0].d_mm) {
        return Err(CalibError::Degenerate(points.len()));
    }
    Ok(())
}

/// Zero-intercept least squares of γ on d⁴. A single point gives the
/// exact ratio `γ/d⁴`.
pub fn fit_alpha(points: &[CouplerPoint], source: LawSource) -> Result<CouplerLaw, CalibError> {
    check_points(points)?;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), p| {
        let x = p.d_mm.powi(4);
        (sxy + x * p.gamma.hz(), sxx + x * x)
    });
    let alpha = sxy / sxx;
    let ss: f64 = points
        .iter()
        .map(|p| (p.gamma.hz() - alpha * p.d_mm.powi(4)).powi(2))
        .sum();
    let mut law = CouplerLaw::new(alpha, source)?;
    law.residual = (ss / points.len() as f64).sqrt();
    Ok(law)
}

/// Free-exponent fit `γ = a·dⁿ` by linear regression in log-log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawDiagnostic {
    /// Prefactor, Hz/mmⁿ.
    pub prefactor: f64,
    pub exponent: f64,
    /// RMS residual of `ln γ`.
    pub log_residual: f64,
}

pub fn fit_power_law(points: &[CouplerPoint]) -> Result<PowerLawDiagnostic, CalibError> {
    check_points(points)?;
    if points.len() < 2 {
        return Err(CalibError::Invalid(
            "a free exponent needs at least two diameters".into(),
        ));
    }
    if points.iter().any(|p| !(p.gamma.hz() > 0.0)) {
        return Err(CalibError::Invalid("log-log fit needs γ > 0".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.d_mm.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.gamma.hz().ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - icpt - slope * x).powi(2))
        .sum();
    Ok(PowerLawDiagnostic {
        prefactor: icpt.exp(),
        exponent: slope,
        log_residual: (ss / n).sqrt(),
    })
}

pub fn gamma_of_d(law: &CouplerLaw, d_mm: f64) -> Result<Frequency, CalibError> {
    if !(d_mm >= 0.0) {
        return Err(CalibError::Invalid(format!(
            "diameter must be non-negative, got {d_mm} mm"
        )));
    }
    Ok(Frequency::from_hz(law.alpha * d_mm.powf(law.exponent)))
}

/// Reads `d_mm,gamma_hz` rows.
pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<CouplerPoint>, CalibError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["d_mm", "gamma_hz"] {
        return Err(CalibError::Invalid("expected columns d_mm,gamma_hz".into()));
    }
    rdr.records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec?;
            let num = |i: usize| {
                rec[i].trim().parse::<f64>().map_err(|e| {
                    CalibError::Invalid(format!("row {}: {}: {e}", row + 2, &headers[i]))
                })
            };
            Ok(CouplerPoint {
                d_mm: num(0)?,
                gamma: Frequency::from_hz(num(1)?),
            })
        })
        .collect()
}

/// Field of a normalised simulation rescaled to one photon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonFieldResult {
    /// Field of the simulation, V/m.
    pub e_norm: f64,
    /// Stored energy of the simulation, J.
    pub w_norm: f64,
    pub f: Frequency,
    /// `h·f`, J.
    pub w_ph: f64,
    /// Single-photon field, V/m.
    pub e_1ph: f64,
}

/// `E_1ph = E·√(h·f / W)` from the `E ∝ √W` scaling.
pub fn single_photon_field(
    e_norm: f64,
    w_norm: f64,
    f: Frequency,
) -> Result<PhotonFieldResult, CalibError> {
    for (name, v) in [("field", e_norm), ("energy", w_norm), ("frequency", f.hz())] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CalibError::Invalid(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let w_ph = PLANCK * f.hz();
    Ok(PhotonFieldResult {
        e_norm,
        w_norm,
        f,
        w_ph,
        e_1ph: e_norm * (w_ph / w_norm).sqrt(),
    })
}
