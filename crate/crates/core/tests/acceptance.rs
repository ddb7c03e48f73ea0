//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are expected to fail; the run exits
//! non-zero if any other criterion fails or if a known-red one passes.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cqed_array::calib::{fit_alpha, CouplerPoint, LawSource};
use cqed_array::crossval::{
    dark_state_scan, oracle_bbq, oracle_fit_g, oracle_j12_maximum, OracleSettings,
};
use cqed_array::modechain::{
    build_chain_matrix, dark_mode_participation, eigenmodes, j12_asymptotic, j12_maximum,
    j12_point, three_cavity_modes_closed, Configuration, J12Params, Q2Sweep,
};
use cqed_array::netoracle::{
    calibrate_chain, network_eigenfrequencies, port_admittance_spectrum, port_impedance_spectrum,
    BaseCircuit, CalibrationTargets, ChainDesign, CircuitNetwork, NetworkBuilder, NodeId, PortRole,
    SpectrumTrace, SweepGrid,
};
use cqed_array::specx::{
    coupling_from_cross_kerr, cross_kerr, csigma_ec_ej, find_imy_zeros, find_imy_zeros_with,
    find_imz_poles, find_imz_poles_with, KerrConvention,
};
use cqed_array::Frequency;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail, with the measured reason.
const KNOWN_RED: &[(u32, &str)] = &[(
    11,
    "printed asymptotic forms are twice the sweep half-gap; ratio converges to 2, not 1",
)];

const OMEGA_GHZ: f64 = 5.642;
const GAMMA_MHZ: f64 = 25.0;
const G_MHZ: f64 = 110.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Rounds `x` to `sf` significant figures.
fn round_sig(x: f64, sf: i32) -> f64 {
    let mag = 10f64.powi(x.abs().log10().floor() as i32 + 1 - sf);
    (x / mag).round() * mag
}

/// `x` agrees with a printed value at three significant figures, or at the
/// printed precision when fewer digits were printed.
fn matches_printed(x: f64, printed: f64, printed_sf: i32) -> bool {
    let sf = printed_sf.min(3);
    (round_sig(x, sf) - round_sig(printed, sf)).abs() <= 1e-9 * printed.abs()
}

fn design() -> ChainDesign {
    let t = CalibrationTargets::new(
        Frequency::from_ghz(OMEGA_GHZ),
        Frequency::from_mhz(GAMMA_MHZ),
    )
    .with_qubit(Frequency::from_mhz(G_MHZ), Frequency::from_ghz(6.368), 8e-9);
    calibrate_chain(&t, &BaseCircuit::default()).expect("calibration")
}

fn params(c: Configuration) -> J12Params {
    J12Params::new(
        c,
        Frequency::from_ghz(OMEGA_GHZ),
        Frequency::from_mhz(GAMMA_MHZ),
        Frequency::from_mhz(G_MHZ),
    )
}

fn c1_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let w1 = Frequency::from_ghz(rng.gen_range(4.0..=8.0));
        let w2 = Frequency::from_ghz(rng.gen_range(4.0..=8.0));
        let g = Frequency::from_mhz(rng.gen_range(0.0..=200.0));
        let (a, b, c) = three_cavity_modes_closed(w1, w2, g);
        let m = build_chain_matrix(&[w1, w2, w1], &[g, g]).expect("chain");
        let num = eigenmodes(&m).frequencies;
        let mut closed = [a.hz(), b.hz(), c.hz()];
        closed.sort_by(f64::total_cmp);
        for (x, y) in closed.iter().zip(&num) {
            worst = worst.max(rel(*x, y.hz()));
        }
    }
    let dt = t0.elapsed();
    outcome(
        worst <= 1e-9 && dt < Duration::from_secs(1),
        format!("max rel diff {worst:.2e}, {dt:.2?}"),
    )
}

fn c2_constants() -> Outcome {
    let p = csigma_ec_ej(Frequency::from_ghz(6.368), 8e-9).expect("charge parameters");
    let (c, ec, ej) = (p.c_sigma * 1e15, p.e_c.ghz(), p.e_j.ghz());
    let pass = matches_printed(c, 78.0, 2)
        && matches_printed(ec, 0.248, 3)
        && matches_printed(ej, 20.433, 5);
    outcome(
        pass,
        format!("c_sigma {c:.3} fF, E_C {ec:.4} GHz, E_J {ej:.4} GHz"),
    )
}

fn c3_bbq_chain() -> Outcome {
    let chi_qr =
        cross_kerr(Frequency::from_mhz(-227.0), Frequency::from_mhz(-0.134)).expect("cross-Kerr");
    let d = Frequency::from_mhz(739.0);
    let ec = Frequency::from_mhz(248.0);
    let g2 = coupling_from_cross_kerr(chi_qr, d, ec, KerrConvention::FactorTwo).expect("g");
    let g1 = coupling_from_cross_kerr(chi_qr, d, ec, KerrConvention::LiteralB4).expect("g");
    let pass = rel(chi_qr.mhz(), -11.03) <= 0.005
        && rel(g2.mhz(), 110.0) <= 0.01
        && (g1.mhz() - 156.0).abs() < 1.0;
    outcome(
        pass,
        format!(
            "chi_qr {:.3} MHz, g factor-2 {:.2} MHz, g literal {:.1} MHz",
            chi_qr.mhz(),
            g2.mhz(),
            g1.mhz()
        ),
    )
}

fn model_max(c: Configuration) -> (f64, Duration) {
    let t0 = Instant::now();
    let range = (Frequency::from_mhz(-200.0), Frequency::from_mhz(200.0));
    let m = j12_maximum(
        &params(c),
        range,
        Frequency::from_mhz(5.0),
        &Q2Sweep::default(),
    )
    .expect("model maximum");
    (m.j12.mhz(), t0.elapsed())
}

fn c4_model_maxima() -> Outcome {
    let (nn, t_nn) = model_max(Configuration::NearestNeighbor);
    let (nnn, t_nnn) = model_max(Configuration::NextNearestNeighbor);
    let limit = Duration::from_secs(10);
    let pass = rel(nn, 12.4) <= 0.10 && rel(nnn, 2.7) <= 0.10 && t_nn < limit && t_nnn < limit;
    outcome(
        pass,
        format!("NN {nn:.3} MHz ({t_nn:.2?}), NNN {nnn:.3} MHz ({t_nnn:.2?})"),
    )
}

fn c5_oracle_vs_model(d: &ChainDesign) -> Outcome {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [
        Configuration::NearestNeighbor,
        Configuration::NextNearestNeighbor,
    ] {
        let (model, _) = model_max(c);
        let range = (Frequency::from_mhz(-150.0), Frequency::from_mhz(150.0));
        match oracle_j12_maximum(
            d,
            c,
            range,
            Frequency::from_mhz(10.0),
            &OracleSettings::default(),
        ) {
            Ok(o) => {
                let r = rel(o.j12.mhz(), model);
                pass &= r <= 0.35;
                parts.push(format!(
                    "{} oracle {:.3} MHz at {:+.1} MHz vs model {model:.3} MHz ({:.1}%)",
                    c.label(),
                    o.j12.mhz(),
                    o.delta.mhz(),
                    100.0 * r
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", c.label()));
            }
        }
    }
    let dt = t0.elapsed();
    pass &= dt < Duration::from_secs(300);
    outcome(pass, format!("{}; {dt:.1?}", parts.join("; ")))
}

fn c6_dark_state(d: &ChainDesign) -> Outcome {
    let w = Frequency::from_ghz(OMEGA_GHZ);
    let g = Frequency::from_mhz(GAMMA_MHZ);
    let s = eigenmodes(&build_chain_matrix(&[w, w, w], &[g, g]).expect("chain"));
    let part = dark_mode_participation(&s, 1, 1).expect("participation");
    let settings = OracleSettings::default();
    let lj: Vec<f64> = (0..=160).map(|k| 6e-9 + 0.05e-9 * k as f64).collect();
    match dark_state_scan(d, &lj, 8e-9, &settings) {
        Ok(r) => {
            let limit = 2.0 * settings.tolerance_hz;
            let mid = r.half_gaps[1].hz();
            let [rep1, rep2, rep3] = r.repulsion.map(|f| f.hz());
            let pass = part < 1e-10
                && mid < limit
                && rep2 < limit
                && rep1 > limit
                && rep3 > limit
                && r.missing.len() == 1;
            outcome(
                pass,
                format!(
                    "participation {part:.1e}; middle half-gap {mid:.2e} Hz; on-resonance repulsion mode1 {:.3} MHz, mode2 {rep2:.2e} Hz, mode3 {:.3} MHz; {} ImY zero(s) missing",
                    rep1 / 1e6,
                    rep3 / 1e6,
                    r.missing.len()
                ),
            )
        }
        Err(e) => outcome(false, format!("dark-state scan failed: {e}")),
    }
}

fn without_source(t: &SpectrumTrace) -> SpectrumTrace {
    SpectrumTrace::from_samples(
        t.kind(),
        t.ports().to_vec(),
        *t.grid(),
        t.samples().to_vec(),
    )
    .expect("trace")
}

fn c7_spectral_identity(d: &ChainDesign) -> Outcome {
    let net = d.network(1, &[(0, 8e-9)], &[]).expect("network");
    let grid = SweepGrid::new(
        Frequency::from_ghz(5.0),
        Frequency::from_ghz(7.0),
        Frequency::from_mhz(1.0),
    )
    .expect("grid");
    let y = port_admittance_spectrum(&net, "LP1", &grid).expect("admittance");
    let z = port_impedance_spectrum(&net, "LP1", &grid).expect("impedance");
    let worst = |a: &[Frequency], b: &[Frequency]| -> Option<f64> {
        (a.len() == b.len() && !a.is_empty()).then(|| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (*x - *y).abs().hz())
                .fold(0.0, f64::max)
        })
    };
    let coarse = worst(
        find_imy_zeros(&without_source(&y))
            .expect("zeros")
            .frequencies(),
        find_imz_poles(&without_source(&z))
            .expect("poles")
            .frequencies(),
    );
    let fine = worst(
        find_imy_zeros_with(&y, 1.0).expect("zeros").frequencies(),
        find_imz_poles_with(&z, 1.0).expect("poles").frequencies(),
    );
    let eig = network_eigenfrequencies(&net).expect("eigen");
    let vs_eig = worst(find_imy_zeros(&y).expect("zeros").frequencies(), &eig);
    match (coarse, fine, vs_eig) {
        (Some(c), Some(f), Some(e)) => outcome(
            c < 1e6 && f < 2e3 && e < 2e3,
            format!(
                "grid-level {:.1} kHz, refined {f:.3} Hz, zeros vs eigenfrequencies {e:.1} Hz",
                c / 1e3
            ),
        ),
        _ => outcome(false, "zero and pole counts differ".into()),
    }
}

fn random_lossless(rng: &mut ChaCha8Rng) -> CircuitNetwork {
    let n = rng.gen_range(1..=5);
    let mut b = NetworkBuilder::new();
    let nodes: Vec<NodeId> = (0..n).map(|k| b.add_node(format!("n{k}"))).collect();
    for &v in &nodes {
        b.capacitor(rng.gen_range(50e-15..500e-15), v, NodeId::GROUND);
        if rng.gen_bool(0.7) {
            b.inductor(rng.gen_range(0.5e-9..5e-9), v, NodeId::GROUND);
        }
    }
    for i in 1..n {
        let j = rng.gen_range(0..i);
        if rng.gen_bool(0.5) {
            b.capacitor(rng.gen_range(1e-15..50e-15), nodes[i], nodes[j]);
        } else {
            b.inductor(rng.gen_range(0.5e-9..5e-9), nodes[i], nodes[j]);
        }
    }
    b.inductor(rng.gen_range(0.5e-9..5e-9), nodes[0], NodeId::GROUND);
    b.port("P", nodes[0], PortRole::Drive, None);
    b.build().expect("random network")
}

fn c8_foster() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = SweepGrid::new(
        Frequency::from_ghz(0.5),
        Frequency::from_ghz(30.0),
        Frequency::from_mhz(5.0),
    )
    .expect("grid");
    let (mut checked, mut bad_slope, mut bad_alt) = (0usize, 0usize, 0usize);
    for _ in 0..100 {
        let net = random_lossless(&mut rng);
        let y = port_admittance_spectrum(&net, "P", &grid).expect("admittance");
        for _ in 0..100 {
            let f = rng.gen_range(0.6e9..29.9e9);
            let h = 1e-7 * f;
            let (Some(a), Some(m), Some(b)) = (
                y.evaluate(Frequency::from_hz(f - h)),
                y.evaluate(Frequency::from_hz(f)),
                y.evaluate(Frequency::from_hz(f + h)),
            ) else {
                continue;
            };
            // A pole between the two probes makes the point irregular.
            if a.im > m.im && m.im > b.im
                || !(a.im.is_finite() && b.im.is_finite())
                || (a.im > 0.0 && b.im < 0.0)
            {
                continue;
            }
            checked += 1;
            if (b.im - a.im).partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                bad_slope += 1;
            }
        }
        let zeros = find_imy_zeros(&y).expect("zeros");
        let im = y.imag();
        let f = y.frequencies();
        let poles: Vec<Frequency> = (1..im.len())
            .filter(|&k| im[k - 1] > 0.0 && im[k] < 0.0)
            .map(|k| f[k])
            .collect();
        let mut events: Vec<(f64, bool)> =
            zeros.frequencies().iter().map(|z| (z.hz(), true)).collect();
        events.extend(poles.iter().map(|p| (p.hz(), false)));
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        if events.windows(2).any(|w| w[0].1 == w[1].1) {
            bad_alt += 1;
        }
    }
    outcome(
        checked > 9000 && bad_slope == 0 && bad_alt == 0,
        format!("{checked} regular points, {bad_slope} non-positive slopes, {bad_alt} networks breaking alternation"),
    )
}

fn c9_power_law() -> Outcome {
    let ds = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let exact = |alpha: f64| -> Vec<CouplerPoint> {
        ds.iter()
            .map(|&d| CouplerPoint {
                d_mm: d,
                gamma: Frequency::from_hz(alpha * d.powi(4)),
            })
            .collect()
    };
    let mut worst_exact = 0.0f64;
    let mut worst_noisy = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for alpha in [11.7e3, 6.6e3] {
        let law = fit_alpha(&exact(alpha), LawSource::User).expect("fit");
        worst_exact = worst_exact.max(rel(law.alpha, alpha));
        for _ in 0..20 {
            let pts: Vec<CouplerPoint> = exact(alpha)
                .into_iter()
                .map(|p| CouplerPoint {
                    gamma: p.gamma * (1.0 + rng.gen_range(-0.02..=0.02)),
                    ..p
                })
                .collect();
            worst_noisy = worst_noisy.max(rel(
                fit_alpha(&pts, LawSource::User).expect("fit").alpha,
                alpha,
            ));
        }
    }
    outcome(
        worst_exact <= 1e-12 && worst_noisy <= 0.03,
        format!(
            "exact rel err {worst_exact:.1e}, noisy worst {:.2}%",
            100.0 * worst_noisy
        ),
    )
}

fn c10_g_cross_method(d: &ChainDesign) -> Outcome {
    let settings = OracleSettings::default();
    let lj: Vec<f64> = (0..=160).map(|k| 6e-9 + 0.05e-9 * k as f64).collect();
    let fit = oracle_fit_g(d, &lj, &settings);
    let bbq = oracle_bbq(d, 8e-9, KerrConvention::FactorTwo, &settings);
    match (fit, bbq) {
        (Ok((_, f)), Ok(k)) => {
            let r = rel(k.g.hz(), f.g.hz());
            outcome(
                r <= 0.05,
                format!(
                    "fit g {:.3} MHz, BBQ g {:.3} MHz ({:.2}%)",
                    f.g.mhz(),
                    k.g.mhz(),
                    100.0 * r
                ),
            )
        }
        (f, k) => outcome(false, format!("fit {:?}, bbq {:?}", f.err(), k.err())),
    }
}

fn c11_asymptotics() -> Outcome {
    let delta = Frequency::from_mhz(10.0 * G_MHZ.max(GAMMA_MHZ));
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [
        Configuration::NearestNeighbor,
        Configuration::NextNearestNeighbor,
    ] {
        let p = params(c);
        let sweep = j12_point(&p, p.omega + delta, &Q2Sweep::default())
            .expect("sweep")
            .j12;
        let asym = j12_asymptotic(c, p.g1, p.gamma, delta).expect("asymptotic");
        let r = rel(asym.hz(), sweep.hz());
        pass &= r <= 0.10;
        parts.push(format!(
            "{} sweep {:.3} kHz vs formula {:.3} kHz ({:.0}%)",
            c.label(),
            sweep.hz() / 1e3,
            asym.hz() / 1e3,
            100.0 * r
        ));
    }
    outcome(pass, parts.join("; "))
}

type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let d = design();
    let criteria: Vec<Criterion<'_>> = vec![
        (1, "closed-form equivalence", Box::new(c1_closed_form)),
        (2, "printed constants", Box::new(c2_constants)),
        (3, "BBQ chain", Box::new(c3_bbq_chain)),
        (4, "J12 model maxima", Box::new(c4_model_maxima)),
        (
            5,
            "oracle vs model J12",
            Box::new(|| c5_oracle_vs_model(&d)),
        ),
        (6, "dark state", Box::new(|| c6_dark_state(&d))),
        (
            7,
            "spectral identity",
            Box::new(|| c7_spectral_identity(&d)),
        ),
        (8, "Foster property", Box::new(c8_foster)),
        (9, "power-law fit", Box::new(c9_power_law)),
        (10, "g cross-method", Box::new(|| c10_g_cross_method(&d))),
        (11, "asymptotics", Box::new(c11_asymptotics)),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let o = run();
        let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = match (known, o.pass) {
            (Some((_, why)), false) => format!(" [known red: {why}]"),
            (Some(_), true) => {
                unexpected += 1;
                " [listed as known red but passed]".to_string()
            }
            (None, false) => {
                unexpected += 1;
                String::new()
            }
            (None, true) => String::new(),
        };
        println!("criterion {id:>2} {tag}: {name}: {}{note}", o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
