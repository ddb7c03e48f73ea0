//! Coupled-mode frequency matrices for cavity chains with embedded qubits.
//!
//! A chain of cavities is described by a real symmetric tridiagonal matrix
//! with intrinsic cavity frequencies on the diagonal and inter-cavity
//! couplings on the first off-diagonals. Qubits are appended as extra rows
//! coupled only to their host cavity. Diagonalising the matrix gives the
//! normal-mode frequencies directly in Hz.

mod j12;

pub use j12::{
    j12_asymptotic, j12_maximum, j12_point, j12_sweep, Configuration, J12Curve, J12Params,
    J12Point, PairSide, Q2Sweep, QUBIT_PAIR_WEIGHT_THRESHOLD,
};

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::units::Frequency;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeChainError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("qubit placement: {0}")]
    Placement(String),
    #[error("mode ordering violated: {0}")]
    Ordering(String),
    #[error(
        "spectrum not producible by a symmetric three-cavity chain (radicand {radicand:e} Hz^2)"
    )]
    InconsistentSpectrum { radicand: f64 },
    #[error("zero detuning: asymptotic exchange coupling diverges")]
    ZeroDetuning,
    #[error("qubit branches not identifiable at q1 = {q1}: summed qubit weight {weight:.3} of the best pair is below {threshold}")]
    DarkBranch {
        q1: Frequency,
        weight: f64,
        threshold: f64,
    },
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("index out of range: {0}")]
    Index(String),
}

/// Real symmetric frequency matrix (entries in Hz).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMatrix {
    entries: DMatrix<f64>,
}

impl ModeMatrix {
    /// Wraps a dense matrix, rejecting anything that is not square, at least
    /// 2×2, finite and exactly symmetric.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self, ModeChainError> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(ModeChainError::Dimension(format!(
                "matrix is {}x{}, expected square",
                n,
                entries.ncols()
            )));
        }
        if n < 2 {
            return Err(ModeChainError::Dimension(format!("dimension {n} < 2")));
        }
        for i in 0..n {
            for j in 0..n {
                if !entries[(i, j)].is_finite() {
                    return Err(ModeChainError::Dimension(format!(
                        "non-finite entry at ({i}, {j})"
                    )));
                }
                if j > i && entries[(i, j)] != entries[(j, i)] {
                    return Err(ModeChainError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(ModeMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> Frequency {
        Frequency::from_hz(self.entries[(row, col)])
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> Frequency {
        Frequency::from_hz(self.entries.trace())
    }

    /// Largest absolute entry, in Hz.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_tridiagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i.abs_diff(j) <= 1 || self.entries[(i, j)] == 0.0))
    }
}

/// Builds the tridiagonal chain matrix: intrinsic cavity frequencies on the
/// diagonal and nearest-neighbour couplings beside it.
pub fn build_chain_matrix(
    intrinsic: &[Frequency],
    couplings: &[Frequency],
) -> Result<ModeMatrix, ModeChainError> {
    let n = intrinsic.len();
    if n < 2 {
        return Err(ModeChainError::Dimension(format!(
            "{n} cavities, need at least 2"
        )));
    }
    if couplings.len() + 1 != n {
        return Err(ModeChainError::Dimension(format!(
            "{} couplings for {} cavities, expected {}",
            couplings.len(),
            n,
            n - 1
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, f) in intrinsic.iter().enumerate() {
        m[(i, i)] = f.hz();
    }
    for (i, c) in couplings.iter().enumerate() {
        m[(i, i + 1)] = c.hz();
        m[(i + 1, i)] = c.hz();
    }
    ModeMatrix::from_matrix(m)
}

/// A qubit attached to one cavity of a chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitPlacement {
    /// Zero-based index of the host cavity.
    pub host: usize,
    pub frequency: Frequency,
    pub coupling: Frequency,
}

impl QubitPlacement {
    pub fn new(host: usize, frequency: Frequency, coupling: Frequency) -> Self {
        QubitPlacement {
            host,
            frequency,
            coupling,
        }
    }
}

/// Appends qubit rows to a chain matrix.
///
/// The result has the chain block in the upper left, qubit frequencies on the
/// trailing diagonal, and each qubit coupled only to its host cavity. A single
/// cavity "chain" is accepted here so the two-level qubit-cavity matrix can be
/// built the same way; pass it via [`single_cavity`].
pub fn build_qubit_chain_matrix(
    chain: &ChainBlock,
    qubits: &[QubitPlacement],
) -> Result<ModeMatrix, ModeChainError> {
    let n = chain.len();
    let mut seen = vec![false; n];
    for q in qubits {
        if q.host >= n {
            return Err(ModeChainError::Placement(format!(
                "host cavity {} out of range for a {}-cavity chain",
                q.host, n
            )));
        }
        if seen[q.host] {
            return Err(ModeChainError::Placement(format!(
                "cavity {} hosts two qubits",
                q.host
            )));
        }
        seen[q.host] = true;
    }
    let dim = n + qubits.len();
    let mut m = DMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (n, n)).copy_from(chain.as_matrix());
    for (k, q) in qubits.iter().enumerate() {
        let row = n + k;
        m[(row, row)] = q.frequency.hz();
        m[(row, q.host)] = q.coupling.hz();
        m[(q.host, row)] = q.coupling.hz();
    }
    ModeMatrix::from_matrix(m)
}

/// The cavity block a qubit matrix is built on: either a full chain matrix
/// or a lone cavity.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainBlock(DMatrix<f64>);

impl ChainBlock {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<&ModeMatrix> for ChainBlock {
    type Error = ModeChainError;

    fn try_from(m: &ModeMatrix) -> Result<Self, ModeChainError> {
        if !m.is_tridiagonal() {
            return Err(ModeChainError::Placement(
                "chain matrix is not tridiagonal".into(),
            ));
        }
        Ok(ChainBlock(m.as_matrix().clone()))
    }
}

/// A one-cavity block at frequency `omega`.
pub fn single_cavity(omega: Frequency) -> ChainBlock {
    ChainBlock(DMatrix::from_element(1, 1, omega.hz()))
}

/// Ascending eigenfrequencies with matching orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSolution {
    pub frequencies: Vec<Frequency>,
    /// Column `k` is the eigenvector for `frequencies[k]`.
    pub vectors: DMatrix<f64>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn component(&self, mode: usize, node: usize) -> f64 {
        self.vectors[(node, mode)]
    }

    /// Summed squared weight of mode `mode` on the given rows.
    pub fn weight_on(&self, mode: usize, rows: &[usize]) -> f64 {
        rows.iter().map(|&r| self.vectors[(r, mode)].powi(2)).sum()
    }
}

/// Diagonalises a mode matrix.
///
/// Frequencies come back ascending. Each eigenvector is signed so that its
/// largest-magnitude component is positive (ties go to the lowest index).
pub fn eigenmodes(m: &ModeMatrix) -> EigenSolution {
    let n = m.dim();
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut frequencies = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() * (1.0 + 1e-12) {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
        frequencies.push(Frequency::from_hz(eig.eigenvalues[src]));
    }
    EigenSolution {
        frequencies,
        vectors,
    }
}

/// Normal modes of the two-level qubit-cavity matrix `[[ω, g], [g, q]]`,
/// ascending.
pub fn two_level_modes(omega: Frequency, q: Frequency, g: Frequency) -> (Frequency, Frequency) {
    let mean = 0.5 * (omega.hz() + q.hz());
    let half = 0.5 * (omega.hz() - q.hz()).hypot(2.0 * g.hz());
    (
        Frequency::from_hz(mean - half),
        Frequency::from_hz(mean + half),
    )
}

/// Closed-form normal modes of the mirror-symmetric three-cavity chain
/// (`ω3 = ω1`, `γ12 = γ23 = γ`), returned as `(ω31, ω32, ω33)`.
///
/// The middle mode sits exactly at `ω1`; the outer pair is split about the
/// mean of `ω1` and `ω2`.
pub fn three_cavity_modes_closed(
    omega1: Frequency,
    omega2: Frequency,
    gamma: Frequency,
) -> (Frequency, Frequency, Frequency) {
    let (w1, w2, g) = (omega1.hz(), omega2.hz(), gamma.hz());
    let root = (w1 - w2).hypot(8f64.sqrt() * g);
    (
        Frequency::from_hz(0.5 * (w1 + w2 - root)),
        omega1,
        Frequency::from_hz(0.5 * (w1 + w2 + root)),
    )
}

/// Inverts the symmetric two-cavity spectrum: `γ = (ω22 − ω21)/2`,
/// `ω = ω21 + γ`. Returns `(γ, ω)`.
pub fn gamma_from_two_modes(
    omega21: Frequency,
    omega22: Frequency,
) -> Result<(Frequency, Frequency), ModeChainError> {
    if omega22 < omega21 {
        return Err(ModeChainError::Ordering(format!(
            "upper mode {omega22} below lower mode {omega21}"
        )));
    }
    let gamma = (omega22 - omega21) * 0.5;
    Ok((gamma, omega21 + gamma))
}

/// Recovers `(ω1, ω2, γ)` from the three normal modes of a mirror-symmetric
/// three-cavity chain.
///
/// Radicands that are negative only through rounding (within a few ulps of
/// the squared mode span) are clamped to zero.
pub fn params_from_three_modes(
    omega31: Frequency,
    omega32: Frequency,
    omega33: Frequency,
) -> Result<(Frequency, Frequency, Frequency), ModeChainError> {
    if !(omega31 <= omega32 && omega32 <= omega33) {
        return Err(ModeChainError::Ordering(format!(
            "expected ω31 ≤ ω32 ≤ ω33, got {omega31}, {omega32}, {omega33}"
        )));
    }
    let (a, b, c) = (omega31.hz(), omega32.hz(), omega33.hz());
    let omega1 = b;
    let omega2 = a + c - b;
    let span = c - a;
    let detune = (omega1 - omega2).abs();
    // (span − detune)(span + detune) keeps precision when γ ≪ |ω1 − ω2|.
    let radicand = (span - detune) * (span + detune);
    let slack = 8.0 * f64::EPSILON * span.max(detune).powi(2).max(f64::MIN_POSITIVE);
    if radicand < -slack {
        return Err(ModeChainError::InconsistentSpectrum { radicand });
    }
    let gamma = (radicand.max(0.0) / 8.0).sqrt();
    Ok((
        Frequency::from_hz(omega1),
        Frequency::from_hz(omega2),
        Frequency::from_hz(gamma),
    ))
}

/// Magnitude of a mode's eigenvector component on one node (cavity or qubit
/// row). A value of zero means the node is dark to that mode.
pub fn dark_mode_participation(
    s: &EigenSolution,
    mode: usize,
    node: usize,
) -> Result<f64, ModeChainError> {
    let n = s.len();
    if mode >= n || node >= n {
        return Err(ModeChainError::Index(format!(
            "mode {mode} / node {node} for a {n}-mode solution"
        )));
    }
    Ok(s.component(mode, node).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz(v: f64) -> Frequency {
        Frequency::from_ghz(v)
    }

    fn mhz(v: f64) -> Frequency {
        Frequency::from_mhz(v)
    }

    #[test]
    fn two_cavity_layout() {
        let m = build_chain_matrix(&[ghz(6.0), ghz(6.0)], &[mhz(15.0)]).unwrap();
        assert_eq!(
            m.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[6e9, 15e6, 15e6, 6e9])
        );
    }

    #[test]
    fn three_cavity_layout_matches_symmetric_chain() {
        let m =
            build_chain_matrix(&[ghz(6.0), ghz(6.1), ghz(6.0)], &[mhz(25.0), mhz(25.0)]).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[6e9, 25e6, 0.0, 25e6, 6.1e9, 25e6, 0.0, 25e6, 6e9]);
        assert_eq!(m.as_matrix(), &expected);
        assert!(m.is_tridiagonal());
    }

    #[test]
    fn decoupled_chain_keeps_intrinsic_frequencies() {
        let m = build_chain_matrix(&[ghz(7.0), ghz(5.0), ghz(6.0)], &[Frequency::ZERO; 2]).unwrap();
        let s = eigenmodes(&m);
        assert_eq!(s.frequencies, vec![ghz(5.0), ghz(6.0), ghz(7.0)]);
    }

    #[test]
    fn chain_length_mismatch_is_rejected() {
        let err = build_chain_matrix(&[ghz(6.0), ghz(6.0)], &[mhz(1.0), mhz(1.0)]).unwrap_err();
        assert!(matches!(err, ModeChainError::Dimension(_)));
        assert!(build_chain_matrix(&[ghz(6.0)], &[]).is_err());
    }

    #[test]
    fn nearest_neighbour_qubit_matrix_layout() {
        let (w, gm, g, q1, q2) = (5.642e9, 25e6, 110e6, 5.7e9, 5.71e9);
        let chain =
            build_chain_matrix(&[Frequency::from_hz(w); 3], &[Frequency::from_hz(gm); 2]).unwrap();
        let block = ChainBlock::try_from(&chain).unwrap();
        let m = build_qubit_chain_matrix(
            &block,
            &[
                QubitPlacement::new(0, Frequency::from_hz(q1), Frequency::from_hz(g)),
                QubitPlacement::new(1, Frequency::from_hz(q2), Frequency::from_hz(g)),
            ],
        )
        .unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(5, 5, &[
            w,   gm,  0.0, g,   0.0,
            gm,  w,   gm,  0.0, g,
            0.0, gm,  w,   0.0, 0.0,
            g,   0.0, 0.0, q1,  0.0,
            0.0, g,   0.0, 0.0, q2,
        ]);
        assert_eq!(m.as_matrix(), &expected);
    }

    #[test]
    fn next_nearest_neighbour_qubit_matrix_layout() {
        let (w, gm, g, q1, q2) = (5.642e9, 25e6, 110e6, 5.7e9, 5.71e9);
        let chain =
            build_chain_matrix(&[Frequency::from_hz(w); 3], &[Frequency::from_hz(gm); 2]).unwrap();
        let block = ChainBlock::try_from(&chain).unwrap();
        let m = build_qubit_chain_matrix(
            &block,
            &[
                QubitPlacement::new(0, Frequency::from_hz(q1), Frequency::from_hz(g)),
                QubitPlacement::new(2, Frequency::from_hz(q2), Frequency::from_hz(g)),
            ],
        )
        .unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(5, 5, &[
            w,   gm,  0.0, g,   0.0,
            gm,  w,   gm,  0.0, 0.0,
            0.0, gm,  w,   0.0, g,
            g,   0.0, 0.0, q1,  0.0,
            0.0, 0.0, g,   0.0, q2,
        ]);
        assert_eq!(m.as_matrix(), &expected);
    }

    #[test]
    fn single_cavity_qubit_is_two_level_matrix() {
        let m = build_qubit_chain_matrix(
            &single_cavity(ghz(5.642)),
            &[QubitPlacement::new(0, ghz(6.368), mhz(110.0))],
        )
        .unwrap();
        assert_eq!(
            m.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[5.642e9, 110e6, 110e6, 6.368e9])
        );
    }

    #[test]
    fn duplicate_host_is_a_placement_error() {
        let chain = build_chain_matrix(&[ghz(6.0); 3], &[mhz(25.0); 2]).unwrap();
        let block = ChainBlock::try_from(&chain).unwrap();
        let q = QubitPlacement::new(1, ghz(6.1), mhz(100.0));
        assert!(matches!(
            build_qubit_chain_matrix(&block, &[q, q]),
            Err(ModeChainError::Placement(_))
        ));
        let far = QubitPlacement::new(3, ghz(6.1), mhz(100.0));
        assert!(matches!(
            build_qubit_chain_matrix(&block, &[far]),
            Err(ModeChainError::Placement(_))
        ));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 1.0]);
        assert_eq!(
            ModeMatrix::from_matrix(m).unwrap_err(),
            ModeChainError::NotSymmetric { row: 0, col: 1 }
        );
    }

    #[test]
    fn degenerate_pair_splits_by_twice_coupling() {
        let m = build_chain_matrix(&[ghz(6.0), ghz(6.0)], &[mhz(20.0)]).unwrap();
        let s = eigenmodes(&m);
        assert!((s.frequencies[0].hz() - 5.98e9).abs() < 1e-5);
        assert!((s.frequencies[1].hz() - 6.02e9).abs() < 1e-5);
    }

    #[test]
    fn symmetric_three_chain_middle_mode_is_antisymmetric() {
        let m =
            build_chain_matrix(&[ghz(6.0), ghz(6.1), ghz(6.0)], &[mhz(25.0), mhz(25.0)]).unwrap();
        let s = eigenmodes(&m);
        let v = s.vectors.column(1);
        let r = 0.5f64.sqrt();
        assert!((v[0] - r).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);
        assert!((v[2] + r).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_sign_convention() {
        let m =
            build_chain_matrix(&[ghz(5.0), ghz(5.5), ghz(5.8)], &[mhz(80.0), mhz(40.0)]).unwrap();
        let s = eigenmodes(&m);
        for k in 0..3 {
            let col = s.vectors.column(k);
            let (imax, _) = col.iter().enumerate().fold((0, 0.0), |acc, (i, v)| {
                if v.abs() > acc.1 {
                    (i, v.abs())
                } else {
                    acc
                }
            });
            assert!(col[imax] > 0.0);
        }
    }

    #[test]
    fn two_level_resonant_and_decoupled() {
        let (lo, hi) = two_level_modes(ghz(6.0), ghz(6.0), mhz(110.0));
        assert!(((hi - lo).hz() - 220e6).abs() <= 4.0 * f64::EPSILON * hi.hz());
        assert_eq!(
            two_level_modes(ghz(6.4), ghz(5.6), Frequency::ZERO),
            (ghz(5.6), ghz(6.4))
        );
    }

    #[test]
    fn two_level_matches_eigensolver_at_working_point() {
        let (w, q, g) = (ghz(5.642), ghz(6.368), mhz(110.0));
        let m =
            build_qubit_chain_matrix(&single_cavity(w), &[QubitPlacement::new(0, q, g)]).unwrap();
        let s = eigenmodes(&m);
        let (lo, hi) = two_level_modes(w, q, g);
        assert!((lo - s.frequencies[0]).hz().abs() <= 1e-12 * q.hz());
        assert!((hi - s.frequencies[1]).hz().abs() <= 1e-12 * q.hz());
    }

    #[test]
    fn closed_form_three_modes_special_cases() {
        let (a, b, c) = three_cavity_modes_closed(ghz(6.0), ghz(6.0), mhz(25.0));
        let s2 = 2f64.sqrt() * 25e6;
        assert!((a.hz() - (6e9 - s2)).abs() < 1e-5);
        assert_eq!(b, ghz(6.0));
        assert!((c.hz() - (6e9 + s2)).abs() < 1e-5);

        let (a, b, c) = three_cavity_modes_closed(ghz(6.2), ghz(5.9), Frequency::ZERO);
        assert_eq!((a, b, c), (ghz(5.9), ghz(6.2), ghz(6.2)));
    }

    #[test]
    fn closed_form_matches_numeric_diagonalisation() {
        let (w1, w2, g) = (ghz(6.0), ghz(6.1), mhz(25.0));
        let m = build_chain_matrix(&[w1, w2, w1], &[g, g]).unwrap();
        let s = eigenmodes(&m);
        let (a, b, c) = three_cavity_modes_closed(w1, w2, g);
        for (x, y) in [a, b, c].iter().zip(&s.frequencies) {
            assert!((x.hz() - y.hz()).abs() <= 1e-12 * y.hz());
        }
    }

    #[test]
    fn gamma_inversion() {
        let (g, w) = gamma_from_two_modes(ghz(5.98), ghz(6.02)).unwrap();
        assert!((g.hz() - 20e6).abs() < 1e-5);
        assert!((w.hz() - 6e9).abs() < 1e-5);
        assert_eq!(
            gamma_from_two_modes(ghz(6.0), ghz(6.0)).unwrap(),
            (Frequency::ZERO, ghz(6.0))
        );
        assert!(matches!(
            gamma_from_two_modes(ghz(6.1), ghz(6.0)),
            Err(ModeChainError::Ordering(_))
        ));
    }

    #[test]
    fn gamma_from_power_law_point() {
        // 11.7 kHz/mm^4 at d = 6 mm gives 15.1632 MHz.
        let gamma = 11.7e3 * 6f64.powi(4);
        let (g, w) = gamma_from_two_modes(
            Frequency::from_hz(6e9 - gamma),
            Frequency::from_hz(6e9 + gamma),
        )
        .unwrap();
        assert!((g.hz() - 15.1632e6).abs() < 1e-3);
        assert!((w.hz() - 6e9).abs() < 1e-3);
    }

    #[test]
    fn three_mode_inversion_degenerate_chain() {
        let s2 = 2f64.sqrt() * 30e6;
        let (w1, w2, g) = params_from_three_modes(
            Frequency::from_hz(6e9 - s2),
            ghz(6.0),
            Frequency::from_hz(6e9 + s2),
        )
        .unwrap();
        assert!((w1.hz() - 6e9).abs() < 1e-6);
        assert!((w2.hz() - 6e9).abs() < 1e-5);
        assert!((g.hz() - 30e6).abs() < 1e-3);
    }

    #[test]
    fn three_mode_inversion_edge_and_misordered_input() {
        // Middle mode on an outer mode: the two cavities are uncoupled.
        let (w1, w2, g) = params_from_three_modes(ghz(5.9), ghz(5.9), ghz(6.0)).unwrap();
        assert_eq!((w1, w2, g.hz()), (ghz(5.9), ghz(6.0), 0.0));
        assert!(matches!(
            params_from_three_modes(ghz(6.0), ghz(5.9), ghz(6.1)),
            Err(ModeChainError::Ordering(_))
        ));
    }

    #[test]
    fn three_mode_inversion_on_perturbed_couplings() {
        // γ12 = 1.05 γ, γ23 = 0.95 γ: the symmetric inversion should land
        // within 5% of the mean coupling.
        let (w1, w2, g) = (ghz(6.0), ghz(6.05), mhz(25.0));
        let m = build_chain_matrix(&[w1, w2, w1], &[g * 1.05, g * 0.95]).unwrap();
        let s = eigenmodes(&m);
        let (_, _, gamma) =
            params_from_three_modes(s.frequencies[0], s.frequencies[1], s.frequencies[2]).unwrap();
        assert!((gamma / g - 1.0).abs() < 0.05, "gamma = {gamma}");
    }

    #[test]
    fn dark_mode_of_symmetric_chain() {
        let m =
            build_chain_matrix(&[ghz(6.0), ghz(6.0), ghz(6.0)], &[mhz(25.0), mhz(25.0)]).unwrap();
        let s = eigenmodes(&m);
        assert!(dark_mode_participation(&s, 1, 1).unwrap() < 1e-10);
        // Mode 1's centre amplitude 1/√2 is its largest component.
        let centre = dark_mode_participation(&s, 0, 1).unwrap();
        let edge = dark_mode_participation(&s, 0, 0).unwrap();
        assert!((centre - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(centre > edge);
        assert!(dark_mode_participation(&s, 3, 0).is_err());
    }

    #[test]
    fn broken_mirror_symmetry_lights_up_centre() {
        let m =
            build_chain_matrix(&[ghz(6.0), ghz(6.0), ghz(6.01)], &[mhz(25.0), mhz(25.0)]).unwrap();
        let s = eigenmodes(&m);
        assert!(dark_mode_participation(&s, 1, 1).unwrap() > 1e-3);
    }
}
