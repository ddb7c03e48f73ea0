use cqed_array::modechain::{
    build_chain_matrix, build_qubit_chain_matrix, eigenmodes, gamma_from_two_modes,
    three_cavity_modes_closed, ChainBlock, ModeMatrix, QubitPlacement,
};
use cqed_array::netoracle::{
    port_admittance_spectrum, transmission_spectrum, NetworkBuilder, NodeId, PortRole, SweepGrid,
};
use cqed_array::specx::{csigma_ec_ej, min_gap, AvoidedCrossing};
use cqed_array::Frequency;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn ghz(x: f64) -> Frequency {
    Frequency::from_ghz(x)
}

fn mhz(x: f64) -> Frequency {
    Frequency::from_mhz(x)
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        let pivot = a[c].clone();
        for row in a.iter_mut().skip(c + 1) {
            let f = row[c] / pivot[c];
            for (x, y) in row.iter_mut().zip(&pivot).skip(c) {
                *x -= f * y;
            }
        }
    }
    d
}

fn char_poly(a: &[Vec<f64>], lambda: f64) -> f64 {
    let shifted = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if i == j { v - lambda } else { v })
                .collect()
        })
        .collect();
    det(shifted)
}

/// Roots of the characteristic polynomial located by sign changes on a fine
/// scan of the Gershgorin interval, then bisected.
fn char_poly_roots(a: &[Vec<f64>]) -> Vec<f64> {
    let (lo, hi) = a
        .iter()
        .enumerate()
        .fold((f64::MAX, f64::MIN), |(lo, hi), (i, row)| {
            let r: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.abs())
                .sum();
            (lo.min(row[i] - r), hi.max(row[i] + r))
        });
    let (lo, hi) = (lo - 1e-3, hi + 1e-3);
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut p0 = char_poly(a, x0);
    for k in 1..=steps {
        let x1 = lo + (hi - lo) * k as f64 / steps as f64;
        let p1 = char_poly(a, x1);
        if p0 == 0.0 {
            roots.push(x0);
        } else if p0.signum() != p1.signum() && p1 != 0.0 {
            let (mut l, mut r, mut pl) = (x0, x1, p0);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let pm = char_poly(a, m);
                if pm.signum() == pl.signum() {
                    l = m;
                    pl = pm;
                } else {
                    r = m;
                }
            }
            roots.push(0.5 * (l + r));
        }
        x0 = x1;
        p0 = p1;
    }
    roots
}

fn symmetric_5x5() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (
        prop::collection::vec(4.0f64..8.0, 5),
        prop::collection::vec(-0.5f64..0.5, 10),
    )
        .prop_map(|(diag, off)| {
            let mut a = vec![vec![0.0; 5]; 5];
            let pairs = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j)));
            for ((i, j), v) in pairs.zip(&off) {
                a[i][j] = *v;
                a[j][i] = *v;
            }
            for (i, &v) in diag.iter().enumerate() {
                a[i][i] = v;
            }
            a
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenmodes_match_characteristic_polynomial(a in symmetric_5x5()) {
        let roots = char_poly_roots(&a);
        prop_assume!(roots.len() == 5);
        let m = ModeMatrix::from_matrix(DMatrix::from_fn(5, 5, |i, j| a[i][j] * 1e9)).unwrap();
        let sol = eigenmodes(&m);
        for (f, r) in sol.frequencies.iter().zip(&roots) {
            let rel = (f.ghz() - r).abs() / r.abs();
            prop_assert!(rel <= 1e-9, "eigen {} vs root {} (rel {rel:e})", f.ghz(), r);
        }
    }

    #[test]
    fn closed_form_three_cavity_matches_eigen(
        w1 in 4.0f64..9.0,
        w2 in 4.0f64..9.0,
        g in 1.0f64..500.0,
    ) {
        let (w1, w2, g) = (ghz(w1), ghz(w2), mhz(g));
        let m = build_chain_matrix(&[w1, w2, w1], &[g, g]).unwrap();
        let sol = eigenmodes(&m);
        let closed = three_cavity_modes_closed(w1, w2, g);
        for (e, c) in sol.frequencies.iter().zip([closed.0, closed.1, closed.2]) {
            prop_assert!((e.hz() - c.hz()).abs() / c.hz() <= 1e-9);
        }
    }

    #[test]
    fn gamma_round_trips_through_two_modes(w in 4.0f64..9.0, g in 0.1f64..500.0) {
        let (w, g) = (ghz(w), mhz(g));
        let m = build_chain_matrix(&[w, w], &[g]).unwrap();
        let sol = eigenmodes(&m);
        let (g_back, w_back) = gamma_from_two_modes(sol.frequencies[0], sol.frequencies[1]).unwrap();
        prop_assert!((g_back.hz() - g.hz()).abs() <= 1e-6 * g.hz() + 1.0);
        prop_assert!((w_back.hz() - w.hz()).abs() <= 1e-12 * w.hz() + 1.0);
    }

    #[test]
    fn eigenvalue_sum_equals_trace(
        cavities in prop::collection::vec(4.0f64..9.0, 2..6),
        couplings in prop::collection::vec(1.0f64..300.0, 5),
        q in 4.0f64..9.0,
        g in 10.0f64..200.0,
    ) {
        let w: Vec<Frequency> = cavities.iter().map(|&x| ghz(x)).collect();
        let c: Vec<Frequency> = couplings[..w.len() - 1].iter().map(|&x| mhz(x)).collect();
        let chain = build_chain_matrix(&w, &c).unwrap();
        let block = ChainBlock::try_from(&chain).unwrap();
        let m = build_qubit_chain_matrix(&block, &[QubitPlacement::new(0, ghz(q), mhz(g))]).unwrap();
        let sum: f64 = eigenmodes(&m).frequencies.iter().map(|f| f.hz()).sum();
        prop_assert!((sum - m.trace().hz()).abs() <= 1e-12 * m.trace().hz());
    }

    #[test]
    fn min_gap_is_translation_invariant(
        centre in 4.0f64..9.0,
        g in 5.0f64..200.0,
        x0 in -0.4f64..0.4,
        shift in -500.0f64..500.0,
    ) {
        let sweep: Vec<f64> = (0..81).map(|k| -1.0 + k as f64 * 0.025).collect();
        let (mut low, mut high) = (Vec::new(), Vec::new());
        for &x in &sweep {
            let half = (300.0 * (x - x0)).hypot(g);
            low.push(ghz(centre) - mhz(half));
            high.push(ghz(centre) + mhz(half));
        }
        let ac = AvoidedCrossing::from_branches(sweep, low, high).unwrap();
        let base = min_gap(&ac).unwrap();
        let moved = min_gap(&ac.translated(mhz(shift))).unwrap();
        prop_assert!((base.half_gap.hz() - moved.half_gap.hz()).abs() <= 1e-6 * base.half_gap.hz());
        prop_assert!((base.location - moved.location).abs() <= 1e-9);
        prop_assert_eq!(base.index, moved.index);
    }

    #[test]
    fn charge_parameters_round_trip(q in 3.0f64..9.0, lj in 2e-9f64..30e-9) {
        let p = csigma_ec_ej(ghz(q), lj).unwrap();
        let q_back = 1.0 / (2.0 * std::f64::consts::PI * (p.c_sigma * lj).sqrt());
        prop_assert!((q_back - ghz(q).hz()).abs() <= 1e-12 * ghz(q).hz());
        // √(8 E_J E_C) is the LC plasma frequency.
        let plasma = (8.0 * p.e_j.hz() * p.e_c.hz()).sqrt();
        prop_assert!((plasma - ghz(q).hz()).abs() <= 1e-9 * ghz(q).hz());
    }
}

fn two_port_network(
    c: &[f64; 3],
    l: &[f64; 3],
    kappa: &[f64; 2],
    r_loss: f64,
) -> cqed_array::netoracle::CircuitNetwork {
    let mut b = NetworkBuilder::new();
    let nodes: Vec<NodeId> = (0..3).map(|k| b.add_node(format!("n{k}"))).collect();
    for k in 0..3 {
        b.capacitor(c[k], nodes[k], NodeId::GROUND)
            .inductor(l[k], nodes[k], NodeId::GROUND);
    }
    b.capacitor(kappa[0], nodes[0], nodes[1])
        .capacitor(kappa[1], nodes[1], nodes[2])
        .resistor(r_loss, nodes[1], NodeId::GROUND)
        .port("A", nodes[0], PortRole::Drive, Some(50.0))
        .port("B", nodes[2], PortRole::Readout, Some(50.0));
    b.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scattering_is_reciprocal_and_passive(
        c in prop::array::uniform3(100e-15f64..500e-15),
        l in prop::array::uniform3(1e-9f64..5e-9),
        kappa in prop::array::uniform2(1e-15f64..30e-15),
        r_loss in 1e3f64..1e7,
    ) {
        let net = two_port_network(&c, &l, &kappa, r_loss);
        let grid = SweepGrid::new(ghz(2.0), ghz(8.0), mhz(20.0)).unwrap();
        let s21 = transmission_spectrum(&net, "A", "B", &grid).unwrap();
        let s12 = transmission_spectrum(&net, "B", "A", &grid).unwrap();
        let s11 = transmission_spectrum(&net, "A", "A", &grid).unwrap();
        for k in 0..grid.len() {
            let (a, b, r) = (s21.samples()[k], s12.samples()[k], s11.samples()[k]);
            prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-12));
            prop_assert!(a.norm_sqr() + r.norm_sqr() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn lossless_admittance_rises_with_frequency(
        c in prop::array::uniform3(100e-15f64..500e-15),
        l in prop::array::uniform3(1e-9f64..5e-9),
        kappa in prop::array::uniform2(1e-15f64..30e-15),
        f in 1.0f64..20.0,
    ) {
        let mut b = NetworkBuilder::new();
        let nodes: Vec<NodeId> = (0..3).map(|k| b.add_node(format!("n{k}"))).collect();
        for k in 0..3 {
            b.capacitor(c[k], nodes[k], NodeId::GROUND)
                .inductor(l[k], nodes[k], NodeId::GROUND);
        }
        b.capacitor(kappa[0], nodes[0], nodes[1])
            .capacitor(kappa[1], nodes[1], nodes[2])
            .port("P", nodes[0], PortRole::Drive, None);
        let net = b.build().unwrap();
        let grid = SweepGrid::new(ghz(0.5), ghz(25.0), mhz(50.0)).unwrap();
        let y = port_admittance_spectrum(&net, "P", &grid).unwrap();
        let h = 1e-7 * f;
        let (Some(lo), Some(mid), Some(hi)) = (
            y.evaluate(ghz(f - h)),
            y.evaluate(ghz(f)),
            y.evaluate(ghz(f + h)),
        ) else {
            return Err(TestCaseError::fail("no source attached"));
        };
        // Skip the immediate neighbourhood of a pole, where ImY flips sign.
        prop_assume!(lo.im.signum() == hi.im.signum() && mid.im.is_finite());
        prop_assert!(hi.im > lo.im, "ImY fell from {} to {} near {f} GHz", lo.im, hi.im);
    }
}
