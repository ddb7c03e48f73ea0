//! Least-squares fit of an avoided crossing to the two-mode eigenvalues.
//!
//! The qubit frequency follows `q(L_J) = 1/(2π√(c_Σ L_J))` and the branches
//! are `(ω + q)/2 ∓ √((ω − q)²/4 + g²)`. The fit is Levenberg–Marquardt with
//! an analytic Jacobian and Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

use super::{min_gap, AvoidedCrossing, SpecxError};
use crate::units::{Frequency, TWO_PI};

const MAX_ITERATIONS: usize = 200;

/// Treatment of the qubit capacitance in [`fit_two_level`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CSigma {
    /// Known total qubit capacitance, F.
    Supplied(f64),
    /// Fitted, starting from the value that puts the bare qubit on `ω` at
    /// the minimum gap.
    Fitted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelFit {
    pub g: Frequency,
    pub omega: Frequency,
    pub c_sigma: f64,
    /// RMS residual over all branch points, Hz.
    pub rms: f64,
    pub iterations: usize,
}

struct Layout {
    omega: Option<f64>,
    c_sigma: Option<f64>,
}

impl Layout {
    fn unpack(&self, p: &DVector<f64>) -> (f64, f64, f64) {
        let mut it = p.iter().copied();
        let g = it.next().expect("g");
        let w = self.omega.unwrap_or_else(|| it.next().expect("omega"));
        let c = self.c_sigma.unwrap_or_else(|| it.next().expect("c_sigma"));
        (g, w, c)
    }
}

/// Fits `g`, and optionally `ω` and `c_Σ`, to both branches of `ac`.
///
/// `omega` fixes the cavity frequency when given. The sweep values of `ac`
/// are junction inductances in H.
pub fn fit_two_level(
    ac: &AvoidedCrossing,
    omega: Option<Frequency>,
    c_sigma: CSigma,
) -> Result<TwoLevelFit, SpecxError> {
    let mg = min_gap(ac)?;
    let common = ac.common_indices();
    let first = *common.first().expect("min_gap checked");
    let last = *common.last().expect("min_gap checked");
    if mg.index == first || mg.index == last {
        return Err(SpecxError::InsufficientData(
            "branch data must span both sides of the crossing".into(),
        ));
    }
    if ac.sweep.iter().any(|&l| !(l > 0.0)) {
        return Err(SpecxError::InvalidInput(
            "sweep values must be positive inductances".into(),
        ));
    }
    if let CSigma::Supplied(c) = c_sigma {
        if !(c > 0.0 && c.is_finite()) {
            return Err(SpecxError::InvalidInput(format!(
                "c_Σ must be positive, got {c}"
            )));
        }
    }

    // Observations: (L_J, frequency, is_high).
    let mut obs: Vec<(f64, f64, bool)> = Vec::new();
    for k in 0..ac.len() {
        if let Some(f) = ac.low[k] {
            obs.push((ac.sweep[k], f.hz(), false));
        }
        if let Some(f) = ac.high[k] {
            obs.push((ac.sweep[k], f.hz(), true));
        }
    }

    let mid =
        0.5 * (ac.low[mg.index].expect("common").hz() + ac.high[mg.index].expect("common").hz());
    let w0 = omega.map_or(mid, Frequency::hz);
    let g0 = 0.25 * 2.0 * mg.half_gap.hz();
    let layout = Layout {
        omega: omega.map(Frequency::hz),
        c_sigma: match c_sigma {
            CSigma::Supplied(c) => Some(c),
            CSigma::Fitted => None,
        },
    };
    let mut p0 = vec![g0.max(1e-6 * w0)];
    if layout.omega.is_none() {
        p0.push(w0);
    }
    if layout.c_sigma.is_none() {
        p0.push(1.0 / ((TWO_PI * w0).powi(2) * ac.sweep[mg.index]));
    }
    let mut p = DVector::from_vec(p0);
    let np = p.len();

    let eval = |p: &DVector<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let (g, w, c) = layout.unpack(p);
        let mut r = DVector::zeros(obs.len());
        let mut jac = DMatrix::zeros(obs.len(), np);
        for (row, &(lj, f, high)) in obs.iter().enumerate() {
            let q = 1.0 / (TWO_PI * (c * lj).sqrt());
            let d = w - q;
            let s = (0.25 * d * d + g * g).sqrt();
            let sign = if high { 1.0 } else { -1.0 };
            r[row] = 0.5 * (w + q) + sign * s - f;
            let mut col = 0;
            jac[(row, col)] = sign * g / s;
            col += 1;
            if layout.omega.is_none() {
                jac[(row, col)] = 0.5 + sign * d / (4.0 * s);
                col += 1;
            }
            if layout.c_sigma.is_none() {
                let dq = 0.5 - sign * d / (4.0 * s);
                jac[(row, col)] = dq * (-q / (2.0 * c));
            }
        }
        (r, jac)
    };

    let cost = |r: &DVector<f64>| r.norm_squared();
    let (mut r, mut jac) = eval(&p);
    let mut lambda = 1e-3;
    let mut rms_trace = vec![(cost(&r) / obs.len() as f64).sqrt()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let diag = DVector::from_iterator(np, (0..np).map(|i| jtj[(i, i)].max(f64::MIN_POSITIVE)));
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += lambda * diag[i];
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let (rt, jt) = eval(&trial);
            if rt.iter().all(|v| v.is_finite()) && cost(&rt) <= cost(&r) {
                let small = step
                    .iter()
                    .zip(trial.iter())
                    .all(|(s, x)| s.abs() <= 1e-13 * x.abs().max(1e-300));
                let flat = cost(&r) - cost(&rt) <= 1e-28 * cost(&r).max(1e-300);
                p = trial;
                r = rt;
                jac = jt;
                lambda = (lambda * 0.1).max(1e-15);
                accepted = true;
                converged = small || flat || cost(&r) == 0.0;
                break;
            }
            lambda *= 10.0;
        }
        rms_trace.push((cost(&r) / obs.len() as f64).sqrt());
        if converged || !accepted {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecxError::FitDivergence { rms_trace });
    }
    let (g, w, c) = layout.unpack(&p);
    Ok(TwoLevelFit {
        g: Frequency::from_hz(g.abs()),
        omega: Frequency::from_hz(w),
        c_sigma: c,
        rms: *rms_trace.last().expect("non-empty"),
        iterations,
    })
}
