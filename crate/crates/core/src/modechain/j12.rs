//! Inter-qubit exchange coupling mediated by the normal modes of a
//! three-cavity chain.
//!
//! With Q1 fixed at `q1`, Q2 is swept through `q1` and the 5×5 matrix is
//! diagonalised at every sweep point. The two qubit branches are the
//! outermost pair of eigenvalues on one side of the cavity band: the top two
//! when the qubits sit above it, the bottom two when below. Both pairs are
//! scanned and the one carrying more qubit weight at its closest approach is
//! kept. J12 is half of that closest approach.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{eigenmodes, ModeChainError, ModeMatrix};
use crate::numeric::golden_min;
use crate::units::Frequency;

/// Minimum summed qubit-row weight (out of 2) the selected branch pair must
/// carry at the closest approach.
pub const QUBIT_PAIR_WEIGHT_THRESHOLD: f64 = 0.5;

/// Absolute q2 tolerance of the golden-section refinement.
pub const Q2_REFINE_TOLERANCE_HZ: f64 = 1e3;

/// Placement of the two qubits in a three-cavity chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Configuration {
    /// Q1 in cavity 1, Q2 in cavity 2.
    NearestNeighbor,
    /// Q1 in cavity 1, Q2 in cavity 3.
    NextNearestNeighbor,
}

impl Configuration {
    /// Zero-based host cavity of Q2.
    pub fn second_host(self) -> usize {
        match self {
            Configuration::NearestNeighbor => 1,
            Configuration::NextNearestNeighbor => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Configuration::NearestNeighbor => "NN",
            Configuration::NextNearestNeighbor => "NNN",
        }
    }
}

/// Parameters of the 5×5 chain-plus-qubits matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct J12Params {
    pub configuration: Configuration,
    /// Single-cavity mode, shared by all three cavities.
    pub omega: Frequency,
    pub gamma: Frequency,
    pub g1: Frequency,
    pub g2: Frequency,
}

impl J12Params {
    /// Identical qubits: `g1 = g2 = g`.
    pub fn new(
        configuration: Configuration,
        omega: Frequency,
        gamma: Frequency,
        g: Frequency,
    ) -> Self {
        J12Params {
            configuration,
            omega,
            gamma,
            g1: g,
            g2: g,
        }
    }

    pub fn matrix(&self, q1: Frequency, q2: Frequency) -> ModeMatrix {
        let mut m = DMatrix::zeros(5, 5);
        self.fill(&mut m, q1.hz(), q2.hz());
        ModeMatrix::from_matrix(m).expect("constructed symmetric")
    }

    fn fill(&self, m: &mut DMatrix<f64>, q1: f64, q2: f64) {
        m.fill(0.0);
        let (w, g) = (self.omega.hz(), self.gamma.hz());
        for i in 0..3 {
            m[(i, i)] = w;
        }
        for i in 0..2 {
            m[(i, i + 1)] = g;
            m[(i + 1, i)] = g;
        }
        m[(3, 3)] = q1;
        m[(4, 4)] = q2;
        m[(0, 3)] = self.g1.hz();
        m[(3, 0)] = self.g1.hz();
        let h = self.configuration.second_host();
        m[(h, 4)] = self.g2.hz();
        m[(4, h)] = self.g2.hz();
    }

    fn sorted_eigenvalues(&self, scratch: &mut DMatrix<f64>, q1: f64, q2: f64) -> [f64; 5] {
        self.fill(scratch, q1, q2);
        let ev = scratch.clone().symmetric_eigenvalues();
        let mut out = [0.0; 5];
        out.copy_from_slice(ev.as_slice());
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Grid of Q2 frequencies centred on `q1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Q2Sweep {
    pub half_span: Frequency,
    pub step: Frequency,
}

impl Default for Q2Sweep {
    fn default() -> Self {
        Q2Sweep {
            half_span: Frequency::from_mhz(300.0),
            step: Frequency::from_mhz(1.0),
        }
    }
}

impl Q2Sweep {
    fn validate(&self) -> Result<usize, ModeChainError> {
        let (h, s) = (self.half_span.hz(), self.step.hz());
        if !(s > 0.0 && s.is_finite()) {
            return Err(ModeChainError::Sweep(format!(
                "q2 step must be positive, got {}",
                self.step
            )));
        }
        if !(h >= s) {
            return Err(ModeChainError::Sweep(format!(
                "q2 half-span {} smaller than step {}",
                self.half_span, self.step
            )));
        }
        Ok((h / s).floor() as usize)
    }
}

/// Which outermost eigenvalue pair carries the qubit branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSide {
    Upper,
    Lower,
}

impl PairSide {
    fn gap(self, ev: &[f64; 5]) -> f64 {
        match self {
            PairSide::Upper => ev[4] - ev[3],
            PairSide::Lower => ev[1] - ev[0],
        }
    }

    fn modes(self) -> [usize; 2] {
        match self {
            PairSide::Upper => [3, 4],
            PairSide::Lower => [0, 1],
        }
    }
}

/// J12 at one Q1 frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct J12Point {
    pub q1: Frequency,
    /// `q1 − ω`.
    pub delta: Frequency,
    pub j12: Frequency,
    /// Q2 frequency at the closest approach.
    pub q2_at_min: Frequency,
    pub side: PairSide,
    /// Summed qubit-row weight of the selected pair at the closest approach.
    pub pair_weight: f64,
}

struct SideScan {
    side: PairSide,
    half_gap: f64,
    q2: f64,
    weight: f64,
    at_edge: bool,
}

fn scan_side(params: &J12Params, q1: f64, grid: &[f64], gaps: &[f64], side: PairSide) -> SideScan {
    let (imin, _) =
        gaps.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc },
        );
    let lo = grid[imin.saturating_sub(1)];
    let hi = grid[(imin + 1).min(grid.len() - 1)];
    let mut scratch = DMatrix::zeros(5, 5);
    let (q2, gap) = golden_min(
        |q2| side.gap(&params.sorted_eigenvalues(&mut scratch, q1, q2)),
        lo,
        hi,
        Q2_REFINE_TOLERANCE_HZ,
    );
    let sol = eigenmodes(&params.matrix(Frequency::from_hz(q1), Frequency::from_hz(q2)));
    let weight = side
        .modes()
        .iter()
        .map(|&k| sol.weight_on(k, &[3, 4]))
        .sum();
    SideScan {
        side,
        half_gap: 0.5 * gap,
        q2,
        weight,
        at_edge: imin == 0 || imin + 1 == grid.len(),
    }
}

/// Computes J12 for Q1 at `q1` by sweeping Q2 across `q1 ± half_span`.
pub fn j12_point(
    params: &J12Params,
    q1: Frequency,
    sweep: &Q2Sweep,
) -> Result<J12Point, ModeChainError> {
    let half = sweep.validate()?;
    let q1h = q1.hz();
    let step = sweep.step.hz();
    let grid: Vec<f64> = (0..=2 * half)
        .map(|i| q1h + (i as f64 - half as f64) * step)
        .collect();
    let mut scratch = DMatrix::zeros(5, 5);
    let spectra: Vec<[f64; 5]> = grid
        .iter()
        .map(|&q2| params.sorted_eigenvalues(&mut scratch, q1h, q2))
        .collect();
    let upper_gaps: Vec<f64> = spectra.iter().map(|ev| PairSide::Upper.gap(ev)).collect();
    let lower_gaps: Vec<f64> = spectra.iter().map(|ev| PairSide::Lower.gap(ev)).collect();
    let upper = scan_side(params, q1h, &grid, &upper_gaps, PairSide::Upper);
    let lower = scan_side(params, q1h, &grid, &lower_gaps, PairSide::Lower);
    let best = if (upper.weight - lower.weight).abs() <= 1e-12 {
        if upper.half_gap <= lower.half_gap {
            upper
        } else {
            lower
        }
    } else if upper.weight > lower.weight {
        upper
    } else {
        lower
    };
    if best.weight <= QUBIT_PAIR_WEIGHT_THRESHOLD {
        return Err(ModeChainError::DarkBranch {
            q1,
            weight: best.weight,
            threshold: QUBIT_PAIR_WEIGHT_THRESHOLD,
        });
    }
    if best.at_edge {
        return Err(ModeChainError::Sweep(format!(
            "closest approach at the edge of the q2 sweep around q1 = {q1}; widen the span"
        )));
    }
    Ok(J12Point {
        q1,
        delta: q1 - params.omega,
        j12: Frequency::from_hz(best.half_gap),
        q2_at_min: Frequency::from_hz(best.q2),
        side: best.side,
        pair_weight: best.weight,
    })
}

/// J12 versus detuning `Δ = q1 − ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct J12Curve {
    pub configuration: Configuration,
    pub detunings: Vec<Frequency>,
    pub couplings: Vec<Frequency>,
    pub sweep: Q2Sweep,
    pub points: Vec<J12Point>,
}

/// Evaluates [`j12_point`] at every detuning. Points are computed in
/// parallel and returned in input order.
pub fn j12_sweep(
    params: &J12Params,
    detunings: &[Frequency],
    sweep: &Q2Sweep,
) -> Result<J12Curve, ModeChainError> {
    let points = detunings
        .par_iter()
        .map(|&d| j12_point(params, params.omega + d, sweep))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(J12Curve {
        configuration: params.configuration,
        detunings: points.iter().map(|p| p.delta).collect(),
        couplings: points.iter().map(|p| p.j12).collect(),
        sweep: *sweep,
        points,
    })
}

/// Maximum of J12 over `Δ ∈ [lo, hi]`: a grid scan at `step` followed by a
/// golden-section refinement around the best grid point. Detunings where the
/// qubit branches cannot be identified are skipped.
pub fn j12_maximum(
    params: &J12Params,
    (lo, hi): (Frequency, Frequency),
    step: Frequency,
    sweep: &Q2Sweep,
) -> Result<J12Point, ModeChainError> {
    if !(hi > lo) || !(step.hz() > 0.0) {
        return Err(ModeChainError::Sweep(format!(
            "bad detuning range [{lo}, {hi}] step {step}"
        )));
    }
    let n = ((hi - lo).hz() / step.hz()).floor() as usize;
    let deltas: Vec<f64> = (0..=n).map(|i| lo.hz() + i as f64 * step.hz()).collect();
    let evals: Vec<Option<J12Point>> = deltas
        .par_iter()
        .map(|&d| j12_point(params, params.omega + Frequency::from_hz(d), sweep).ok())
        .collect();
    let (ibest, best) = evals
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p)))
        .max_by(|a, b| a.1.j12.hz().total_cmp(&b.1.j12.hz()))
        .ok_or_else(|| {
            ModeChainError::Sweep("no detuning in range gave identifiable branches".into())
        })?;
    let a = deltas[ibest.saturating_sub(1)];
    let b = deltas[(ibest + 1).min(deltas.len() - 1)];
    let (d_star, neg_j) = golden_min(
        |d| {
            j12_point(params, params.omega + Frequency::from_hz(d), sweep)
                .map(|p| -p.j12.hz())
                .unwrap_or(0.0)
        },
        a,
        b,
        Q2_REFINE_TOLERANCE_HZ,
    );
    if -neg_j > best.j12.hz() {
        j12_point(params, params.omega + Frequency::from_hz(d_star), sweep)
    } else {
        Ok(best)
    }
}

/// Far-detuned exchange coupling as printed for the two placements:
/// `2g²γ/Δ²` (NN) and `2g²γ²/Δ³` (NNN). `|Δ|` is used so the result is
/// non-negative on both sides of the band.
pub fn j12_asymptotic(
    configuration: Configuration,
    g: Frequency,
    gamma: Frequency,
    delta: Frequency,
) -> Result<Frequency, ModeChainError> {
    let d = delta.hz().abs();
    if d == 0.0 {
        return Err(ModeChainError::ZeroDetuning);
    }
    let (g, gm) = (g.hz(), gamma.hz());
    let j = match configuration {
        Configuration::NearestNeighbor => 2.0 * g * g * gm / (d * d),
        Configuration::NextNearestNeighbor => 2.0 * g * g * gm * gm / (d * d * d),
    };
    Ok(Frequency::from_hz(j))
}
