//! Frequency newtype and the physical constants used throughout the crate.
//!
//! Every frequency is an ordinary (not angular) frequency stored in hertz.
//! Reports and configuration files quote GHz/MHz; conversion happens at the
//! edges through the `from_*`/`as_*` helpers.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Elementary charge, C (exact, SI 2019).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J·s (exact, SI 2019).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Reduced flux quantum ħ/(2e), Wb.
pub const REDUCED_FLUX_QUANTUM: f64 = HBAR / (2.0 * ELEMENTARY_CHARGE);

pub(crate) const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// An ordinary frequency in Hz.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Frequency(f64);

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    pub const fn from_hz(hz: f64) -> Self {
        Frequency(hz)
    }

    pub fn from_khz(khz: f64) -> Self {
        Frequency(khz * 1e3)
    }

    pub fn from_mhz(mhz: f64) -> Self {
        Frequency(mhz * 1e6)
    }

    pub fn from_ghz(ghz: f64) -> Self {
        Frequency(ghz * 1e9)
    }

    /// Builds a frequency from an angular frequency in rad/s.
    pub fn from_angular(omega: f64) -> Self {
        Frequency(omega / TWO_PI)
    }

    pub const fn hz(self) -> f64 {
        self.0
    }

    pub fn mhz(self) -> f64 {
        self.0 * 1e-6
    }

    pub fn ghz(self) -> f64 {
        self.0 * 1e-9
    }

    /// Angular frequency in rad/s.
    pub fn angular(self) -> f64 {
        TWO_PI * self.0
    }

    pub fn abs(self) -> Self {
        Frequency(self.0.abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn min(self, other: Self) -> Self {
        Frequency(self.0.min(other.0))
    }

    pub fn max(self, other: Self) -> Self {
        Frequency(self.0.max(other.0))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hz = self.0;
        if hz.abs() >= 1e9 {
            write!(f, "{:.6} GHz", hz * 1e-9)
        } else if hz.abs() >= 1e6 {
            write!(f, "{:.6} MHz", hz * 1e-6)
        } else if hz.abs() >= 1e3 {
            write!(f, "{:.6} kHz", hz * 1e-3)
        } else {
            write!(f, "{hz} Hz")
        }
    }
}

impl Add for Frequency {
    type Output = Frequency;
    fn add(self, rhs: Frequency) -> Frequency {
        Frequency(self.0 + rhs.0)
    }
}

impl Sub for Frequency {
    type Output = Frequency;
    fn sub(self, rhs: Frequency) -> Frequency {
        Frequency(self.0 - rhs.0)
    }
}

impl Neg for Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        Frequency(-self.0)
    }
}

impl Mul<f64> for Frequency {
    type Output = Frequency;
    fn mul(self, rhs: f64) -> Frequency {
        Frequency(self.0 * rhs)
    }
}

impl Mul<Frequency> for f64 {
    type Output = Frequency;
    fn mul(self, rhs: Frequency) -> Frequency {
        Frequency(self * rhs.0)
    }
}

impl Div<f64> for Frequency {
    type Output = Frequency;
    fn div(self, rhs: f64) -> Frequency {
        Frequency(self.0 / rhs)
    }
}

/// Ratio of two frequencies.
impl Div for Frequency {
    type Output = f64;
    fn div(self, rhs: Frequency) -> f64 {
        self.0 / rhs.0
    }
}
