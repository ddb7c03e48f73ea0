//! Branch assembly over a junction-inductance sweep and minimum-gap
//! extraction.

use std::io::{Read, Write};

use super::{ResonanceSet, SpecxError};
use crate::numeric::parabola_vertex;
use crate::units::Frequency;

/// A detection joins a branch only if it lies within this many median
/// inter-point branch motions of the branch's predicted position.
const CONTINUITY_FACTOR: f64 = 5.0;

/// Two branches tracked across a sweep. Absent entries are sweep values
/// where the branch was not detected.
#[derive(Clone, Debug, PartialEq)]
pub struct AvoidedCrossing {
    /// Sweep values, usually junction inductances in H.
    pub sweep: Vec<f64>,
    pub low: Vec<Option<Frequency>>,
    pub high: Vec<Option<Frequency>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// How resonances are selected before branch assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchWindow {
    /// Resonances inside `[lo, hi]`.
    Band { lo: Frequency, hi: Frequency },
    /// The two highest or two lowest resonances at each sweep value.
    Outermost(Side),
}

/// Result of [`min_gap`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinGap {
    pub half_gap: Frequency,
    /// Sweep value at the minimum, after parabolic refinement.
    pub location: f64,
    /// Index of the smallest sampled gap.
    pub index: usize,
}

impl AvoidedCrossing {
    pub fn new(
        sweep: Vec<f64>,
        low: Vec<Option<Frequency>>,
        high: Vec<Option<Frequency>>,
    ) -> Result<Self, SpecxError> {
        if low.len() != sweep.len() || high.len() != sweep.len() {
            return Err(SpecxError::InvalidInput(format!(
                "{} sweep values but {} low and {} high entries",
                sweep.len(),
                low.len(),
                high.len()
            )));
        }
        for (k, (l, h)) in low.iter().zip(&high).enumerate() {
            if let (Some(l), Some(h)) = (l, h) {
                if h < l {
                    return Err(SpecxError::InvalidInput(format!(
                        "branch-high below branch-low at index {k}"
                    )));
                }
            }
        }
        Ok(AvoidedCrossing { sweep, low, high })
    }

    /// Fully populated branches.
    pub fn from_branches(
        sweep: Vec<f64>,
        low: Vec<Frequency>,
        high: Vec<Frequency>,
    ) -> Result<Self, SpecxError> {
        Self::new(
            sweep,
            low.into_iter().map(Some).collect(),
            high.into_iter().map(Some).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.sweep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sweep.is_empty()
    }

    /// Indices where both branches are present.
    pub fn common_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.low[k].is_some() && self.high[k].is_some())
            .collect()
    }

    /// Both branches shifted by `df`.
    pub fn translated(&self, df: Frequency) -> Self {
        let shift = |v: &Vec<Option<Frequency>>| v.iter().map(|x| x.map(|f| f + df)).collect();
        AvoidedCrossing {
            sweep: self.sweep.clone(),
            low: shift(&self.low),
            high: shift(&self.high),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SpecxError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lj_h", "branch_low_hz", "branch_high_hz"])?;
        let cell = |f: Option<Frequency>| f.map_or(String::new(), |f| format!("{:?}", f.hz()));
        for k in 0..self.len() {
            out.write_record([
                format!("{:?}", self.sweep[k]),
                cell(self.low[k]),
                cell(self.high[k]),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, SpecxError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["lj_h", "branch_low_hz", "branch_high_hz"] {
            return Err(SpecxError::InvalidInput(
                "expected columns lj_h,branch_low_hz,branch_high_hz".into(),
            ));
        }
        let (mut sweep, mut low, mut high) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<Option<f64>, SpecxError> {
                let s = rec[i].trim();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>().map(Some).map_err(|e| {
                    SpecxError::InvalidInput(format!("row {}: {}: {e}", row + 2, &headers[i]))
                })
            };
            sweep.push(
                parse(0)?.ok_or_else(|| {
                    SpecxError::InvalidInput(format!("row {}: empty lj_h", row + 2))
                })?,
            );
            low.push(parse(1)?.map(Frequency::from_hz));
            high.push(parse(2)?.map(Frequency::from_hz));
        }
        Self::new(sweep, low, high)
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn predict(branch: &[Option<Frequency>], k: usize) -> Option<f64> {
    let prev = (0..k).rev().find_map(|i| branch[i].map(|f| (i, f.hz())));
    let next = (k + 1..branch.len()).find_map(|i| branch[i].map(|f| (i, f.hz())));
    match (prev, next) {
        (Some((i, a)), Some((j, b))) => Some(a + (b - a) * (k - i) as f64 / (j - i) as f64),
        (Some((_, a)), None) => Some(a),
        (None, Some((_, b))) => Some(b),
        (None, None) => None,
    }
}

/// Assigns the resonances selected by `window` to a low and a high branch.
///
/// Sweep values with exactly two candidates fix both branches directly,
/// since the branches of an avoided crossing never cross. Elsewhere each
/// branch takes the nearest candidate to its interpolated position, subject
/// to the continuity limit; unmatched branches are left absent.
pub fn assemble_branches(
    sweep: &[(f64, ResonanceSet)],
    window: BranchWindow,
) -> Result<AvoidedCrossing, SpecxError> {
    if sweep.len() < 5 {
        return Err(SpecxError::InsufficientData(format!(
            "{} sweep values, need at least 5",
            sweep.len()
        )));
    }
    let candidates: Vec<Vec<Frequency>> = sweep
        .iter()
        .map(|(_, set)| {
            let f = set.frequencies();
            match window {
                BranchWindow::Band { lo, hi } => {
                    f.iter().copied().filter(|&x| x >= lo && x <= hi).collect()
                }
                BranchWindow::Outermost(Side::Upper) => f[f.len().saturating_sub(2)..].to_vec(),
                BranchWindow::Outermost(Side::Lower) => f[..f.len().min(2)].to_vec(),
            }
        })
        .collect();

    let overfull: Vec<usize> = (0..sweep.len())
        .filter(|&k| candidates[k].len() > 2)
        .collect();
    let longest_run = overfull
        .windows(2)
        .fold(
            (1usize, usize::from(!overfull.is_empty())),
            |(run, best), w| {
                let run = if w[1] == w[0] + 1 { run + 1 } else { 1 };
                (run, best.max(run))
            },
        )
        .1;
    if longest_run >= 3 || 4 * overfull.len() > sweep.len() {
        let count = candidates.iter().map(Vec::len).max().unwrap_or(0);
        return Err(SpecxError::AmbiguousWindow {
            count,
            points: overfull.len(),
        });
    }

    let n = sweep.len();
    let mut low: Vec<Option<Frequency>> = vec![None; n];
    let mut high: Vec<Option<Frequency>> = vec![None; n];
    for k in 0..n {
        if let [a, b] = candidates[k][..] {
            low[k] = Some(a.min(b));
            high[k] = Some(a.max(b));
        }
    }
    let mut motions = Vec::new();
    for k in 1..n {
        for br in [&low, &high] {
            if let (Some(a), Some(b)) = (br[k - 1], br[k]) {
                motions.push((b - a).hz().abs());
            }
        }
    }
    let floor = 2.0
        * sweep
            .iter()
            .map(|(_, s)| s.tolerance_hz())
            .fold(0.0, f64::max);
    let limit = median(motions).map_or(f64::INFINITY, |m| CONTINUITY_FACTOR * m.max(floor));

    let (fixed_low, fixed_high) = (low.clone(), high.clone());
    for k in 0..n {
        if candidates[k].len() == 2 || candidates[k].is_empty() {
            continue;
        }
        let preds = [predict(&fixed_low, k), predict(&fixed_high, k)];
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, c) in candidates[k].iter().enumerate() {
            for (bi, p) in preds.iter().enumerate() {
                if let Some(p) = p {
                    let d = (c.hz() - p).abs();
                    if d <= limit {
                        pairs.push((d, ci, bi));
                    }
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut used_c = Vec::new();
        let mut chosen: [Option<Frequency>; 2] = [None, None];
        for (_, ci, bi) in pairs {
            if chosen[bi].is_some() || used_c.contains(&ci) {
                continue;
            }
            chosen[bi] = Some(candidates[k][ci]);
            used_c.push(ci);
        }
        if let [Some(l), Some(h)] = chosen {
            if h < l {
                continue;
            }
        }
        low[k] = chosen[0];
        high[k] = chosen[1];
    }
    AvoidedCrossing::new(sweep.iter().map(|(x, _)| *x).collect(), low, high)
}

/// Half the minimum branch separation, with a parabolic refinement through
/// the three common points around the smallest sampled gap.
pub fn min_gap(ac: &AvoidedCrossing) -> Result<MinGap, SpecxError> {
    let common = ac.common_indices();
    if common.len() < 3 {
        return Err(SpecxError::InsufficientData(format!(
            "{} sweep values carry both branches, need at least 3",
            common.len()
        )));
    }
    let gap = |k: usize| (ac.high[k].expect("common") - ac.low[k].expect("common")).hz();
    let (pos, &k) = common
        .iter()
        .enumerate()
        .min_by(|a, b| gap(*a.1).total_cmp(&gap(*b.1)))
        .expect("non-empty");
    let raw = gap(k);
    let mut best = (ac.sweep[k], raw);
    if pos > 0 && pos + 1 < common.len() {
        let (i, j) = (common[pos - 1], common[pos + 1]);
        if let Some((x, y)) = parabola_vertex(
            (ac.sweep[i], gap(i)),
            (ac.sweep[k], raw),
            (ac.sweep[j], gap(j)),
        ) {
            let (lo, hi) = (ac.sweep[i].min(ac.sweep[j]), ac.sweep[i].max(ac.sweep[j]));
            if x >= lo && x <= hi && y <= raw {
                best = (x, y.max(0.0));
            }
        }
    }
    Ok(MinGap {
        half_gap: Frequency::from_hz(0.5 * best.1),
        location: best.0,
        index: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modechain::two_level_modes;
    use crate::specx::ResonanceKind;

    fn mhz(v: f64) -> Frequency {
        Frequency::from_mhz(v)
    }

    fn synthetic(g: f64, n: usize) -> Vec<(f64, ResonanceSet)> {
        (0..n)
            .map(|k| {
                let q = 5_500.0 + 10.0 * k as f64;
                let (a, b) = two_level_modes(mhz(5_600.0), mhz(q), mhz(g));
                (
                    k as f64,
                    ResonanceSet::uniform(vec![a, b], ResonanceKind::YZero, 1e3).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn synthetic_reassembly_is_exact() {
        let data = synthetic(110.0, 21);
        let ac = assemble_branches(&data, BranchWindow::Outermost(Side::Lower)).unwrap();
        for (k, (_, set)) in data.iter().enumerate() {
            assert_eq!(ac.low[k], Some(set.frequencies()[0]));
            assert_eq!(ac.high[k], Some(set.frequencies()[1]));
        }
        let mg = min_gap(&ac).unwrap();
        assert!((mg.half_gap.hz() - 110e6).abs() < 1e-6);
        assert_eq!(mg.location, 10.0);
    }

    #[test]
    fn uncoupled_branches_close_at_crossing() {
        let ac = assemble_branches(
            &synthetic(0.0, 21),
            BranchWindow::Band {
                lo: mhz(5000.0),
                hi: mhz(6000.0),
            },
        )
        .unwrap();
        assert_eq!(min_gap(&ac).unwrap().half_gap, Frequency::ZERO);
    }

    #[test]
    fn parallel_branches() {
        let sweep: Vec<f64> = (0..6).map(f64::from).collect();
        let low: Vec<Frequency> = sweep.iter().map(|x| mhz(5000.0 + x)).collect();
        let high: Vec<Frequency> = low.iter().map(|&f| f + mhz(24.0)).collect();
        let ac = AvoidedCrossing::from_branches(sweep, low, high).unwrap();
        assert!((min_gap(&ac).unwrap().half_gap.hz() - 12e6).abs() < 1e-6);
    }

    #[test]
    fn missing_detection_leaves_gap() {
        let mut data = synthetic(110.0, 21);
        // Drop the low branch at one sweep value and add a far stray line.
        let f = data[4].1.frequencies()[1];
        data[4].1 = ResonanceSet::uniform(vec![f], ResonanceKind::YZero, 1e3).unwrap();
        let stray = data[12].1.frequencies().to_vec();
        data[12].1 = ResonanceSet::uniform(
            vec![stray[0], stray[1], mhz(5_950.0)],
            ResonanceKind::YZero,
            1e3,
        )
        .unwrap();
        let ac = assemble_branches(
            &data,
            BranchWindow::Band {
                lo: mhz(5000.0),
                hi: mhz(6000.0),
            },
        )
        .unwrap();
        assert_eq!(ac.low[4], None);
        assert_eq!(ac.high[4], Some(f));
        assert_eq!(ac.low[12], Some(stray[0]));
        assert_eq!(ac.high[12], Some(stray[1]));
    }

    #[test]
    fn persistent_extra_branch_is_ambiguous() {
        let data: Vec<(f64, ResonanceSet)> = synthetic(110.0, 10)
            .into_iter()
            .map(|(x, s)| {
                let mut f = s.frequencies().to_vec();
                f.push(mhz(5_900.0));
                (
                    x,
                    ResonanceSet::uniform(f, ResonanceKind::YZero, 1e3).unwrap(),
                )
            })
            .collect();
        assert!(matches!(
            assemble_branches(
                &data,
                BranchWindow::Band {
                    lo: mhz(5000.0),
                    hi: mhz(6000.0)
                }
            ),
            Err(SpecxError::AmbiguousWindow { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        let mut ac =
            AvoidedCrossing::from_branches(vec![0.0, 1.0], vec![mhz(1.0); 2], vec![mhz(2.0); 2])
                .unwrap();
        assert!(matches!(min_gap(&ac), Err(SpecxError::InsufficientData(_))));
        ac.low = vec![None, None];
        assert!(min_gap(&ac).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut ac =
            assemble_branches(&synthetic(50.0, 6), BranchWindow::Outermost(Side::Upper)).unwrap();
        ac.low[2] = None;
        let mut buf = Vec::new();
        ac.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"lj_h,branch_low_hz,branch_high_hz\n"));
        assert_eq!(AvoidedCrossing::read_csv(buf.as_slice()).unwrap(), ac);
    }
}
