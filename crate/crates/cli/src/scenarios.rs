//! Scenario execution. Each runner writes its CSV and text artifacts into the
//! output directory and returns the scalar results for the run report.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use cqed_array::calib::{
    fit_alpha, fit_power_law, read_points_csv, single_photon_field, CouplerPoint, LawSource,
};
use cqed_array::crossval::{
    dark_state_scan, oracle_bbq, oracle_fit_g, oracle_j12_curve, transmission_gamma,
};
use cqed_array::modechain::{
    build_chain_matrix, build_qubit_chain_matrix, eigenmodes, gamma_from_two_modes, j12_maximum,
    j12_sweep, single_cavity, three_cavity_modes_closed, ChainBlock, Configuration, J12Curve,
    J12Params, PairSide, QubitPlacement,
};
use cqed_array::netoracle::{
    calibrate_chain, network_eigenfrequencies, port_admittance_spectrum, port_impedance_spectrum,
    transmission_spectrum, BaseCircuit, CalibrationTargets, ChainDesign, GammaExtraction, PortRole,
    PortSpec, SpectrumTrace, SweepGrid, REFERENCE_IMPEDANCE,
};
use cqed_array::specx::{
    find_imy_zeros, find_imz_poles, find_transmission_peaks, min_gap, ResonanceSet, Side,
};
use cqed_array::Frequency;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{
    AlphaPoints, BbqJob, ChainParams, CircuitParams, CompareJob, EigenJob, ExtractGammaJob,
    FitAlphaJob, FitGJob, GammaMethod, J12ModelJob, J12OracleJob, Job, PhotonFieldJob, SpectrumJob,
    TraceChoice,
};
use crate::plot::{self, Series};

#[derive(Debug, Error)]
pub enum RunError {
    /// A library call failed; the message is the module error verbatim.
    #[error("{0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn numeric<E: Display>(e: E) -> RunError {
    RunError::Numeric(e.to_string())
}

/// Everything a scenario produced.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub values: Map<String, Value>,
}

pub struct Context<'a> {
    pub out_dir: &'a Path,
    pub seed: u64,
    pub plot: bool,
}

impl Context<'_> {
    fn write(&self, out: &mut Outputs, name: &str, contents: &[u8]) -> Result<(), RunError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        out.files.push(path);
        Ok(())
    }

    fn table(&self, out: &mut Outputs, name: &str, t: &Table) -> Result<(), RunError> {
        self.write(out, name, t.render().as_bytes())
    }

    fn svg(
        &self,
        out: &mut Outputs,
        name: &str,
        title: &str,
        axes: (&str, &str),
        series: &[Series],
    ) -> Result<(), RunError> {
        if self.plot {
            self.write(
                out,
                name,
                plot::render(title, axes.0, axes.1, series).as_bytes(),
            )?;
        }
        Ok(())
    }
}

/// A CSV table of preformatted cells. Cells never contain separators.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn cell(x: f64) -> String {
    format!("{x:?}")
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or(String::new(), cell)
}

fn ghz(x: f64) -> Frequency {
    Frequency::from_ghz(x)
}

fn design(chain: &ChainParams, circuit: &CircuitParams) -> Result<ChainDesign, RunError> {
    let targets = CalibrationTargets::new(chain.omega(), chain.gamma()).with_qubit(
        chain.g(),
        ghz(circuit.q_ref_ghz),
        circuit.lj_ref_nh * 1e-9,
    );
    let base = BaseCircuit {
        total_capacitance: circuit.total_capacitance_ff * 1e-15,
        junction_capacitance: circuit.junction_capacitance_ff * 1e-15,
    };
    calibrate_chain(&targets, &base).map_err(numeric)
}

fn design_values(d: &ChainDesign, out: &mut Outputs) {
    let r = &d.report;
    out.values.insert(
        "calibration".into(),
        json!({
            "omega_hz": r.omega.hz(),
            "gamma_hz": r.gamma.hz(),
            "g_hz": r.g.map(|g| g.hz()),
            "q_hz": r.q.map(|q| q.hz()),
            "inductance_h": d.inductance,
            "total_capacitance_f": d.total_capacitance,
            "cc_f": d.cc,
            "cg_f": d.cg,
            "ca_f": d.ca,
        }),
    );
}

fn hz_list(fs: &[Frequency]) -> Value {
    Value::from(fs.iter().map(|f| f.hz()).collect::<Vec<_>>())
}

pub fn run(job: &Job, ctx: &Context) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    match job {
        Job::Spectrum(j) => spectrum(j, ctx, &mut out)?,
        Job::Eigen(j) => eigen(j, ctx, &mut out)?,
        Job::ExtractGamma(j) => extract_gamma(j, ctx, &mut out)?,
        Job::FitAlpha(j) => fit_alpha_job(j, ctx, &mut out)?,
        Job::FitG(j) => fit_g(j, ctx, &mut out)?,
        Job::Bbq(j) => bbq(j, ctx, &mut out)?,
        Job::J12Model(j) => j12_model(j, ctx, &mut out)?,
        Job::J12Oracle(j) => j12_oracle(j, ctx, &mut out)?,
        Job::Compare(j) => compare(j, ctx, &mut out)?,
        Job::PhotonField(j) => photon_field(j, ctx, &mut out)?,
    }
    Ok(out)
}

fn spectrum(j: &SpectrumJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let d = design(&j.chain, &j.circuit)?;
    design_values(&d, out);
    let qubits: Vec<(usize, f64)> = j
        .qubits
        .iter()
        .map(|q| (q.cavity - 1, q.lj_nh * 1e-9))
        .collect();
    let ports = if j.kind == TraceChoice::Transmission {
        let cp = d.total_capacitance / 400.0;
        let port = |name: &str, tank, role| PortSpec {
            name: name.into(),
            tank,
            role,
            cp,
            resistance: REFERENCE_IMPEDANCE,
        };
        vec![
            port("drive", 0, PortRole::Drive),
            port("readout", j.cavities - 1, PortRole::Readout),
        ]
    } else {
        Vec::new()
    };
    let net = d.network(j.cavities, &qubits, &ports).map_err(numeric)?;
    let modes = network_eigenfrequencies(&net).map_err(numeric)?;
    let grid = match &j.grid {
        Some(g) => SweepGrid::new(
            ghz(g.start_ghz),
            ghz(g.stop_ghz),
            Frequency::from_mhz(g.step_mhz),
        ),
        None => {
            let (lo, hi) = match (modes.first(), modes.last()) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => return Err(RunError::Numeric("network has no resonances".into())),
            };
            let step = Frequency::from_mhz(j.oracle.freq_step_mhz);
            let margin = Frequency::from_mhz(j.oracle.margin_mhz);
            let start = ((lo - margin).hz() / step.hz()).floor() * step.hz();
            SweepGrid::new(Frequency::from_hz(start), hi + margin, step)
        }
    }
    .map_err(numeric)?;
    let (trace, resonances): (SpectrumTrace, ResonanceSet) = match j.kind {
        TraceChoice::Admittance => {
            let t = port_admittance_spectrum(&net, &j.port, &grid).map_err(numeric)?;
            let r = find_imy_zeros(&t).map_err(numeric)?;
            (t, r)
        }
        TraceChoice::Impedance => {
            let t = port_impedance_spectrum(&net, &j.port, &grid).map_err(numeric)?;
            let r = find_imz_poles(&t).map_err(numeric)?;
            (t, r)
        }
        TraceChoice::Transmission => {
            let t = transmission_spectrum(&net, "drive", "readout", &grid).map_err(numeric)?;
            let r = find_transmission_peaks(&t).map_err(numeric)?;
            (t, r)
        }
    };
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).map_err(numeric)?;
    ctx.write(out, "spectrum.csv", &buf)?;
    let mut buf = Vec::new();
    resonances.write_csv(&mut buf).map_err(numeric)?;
    ctx.write(out, "resonances.csv", &buf)?;
    out.values.insert(
        "grid".into(),
        json!({"start_hz": grid.start().hz(), "stop_hz": grid.stop().hz(), "step_hz": grid.step().hz(), "points": grid.len()}),
    );
    out.values
        .insert("network_modes_hz".into(), hz_list(&modes));
    out.values
        .insert("resonances_hz".into(), hz_list(resonances.frequencies()));
    let xs = trace.frequencies();
    let (ys, label) = match j.kind {
        TraceChoice::Transmission => (trace.magnitude_db(), "|S21| (dB)"),
        _ => (clip(&trace.imag()), "Im (clipped)"),
    };
    let pts = xs.iter().zip(ys).map(|(f, y)| (f.ghz(), y)).collect();
    ctx.svg(
        out,
        "spectrum.svg",
        &format!("{:?} spectrum", j.kind),
        ("frequency (GHz)", label),
        &[Series::line(j.port.clone(), pts)],
    )
}

/// Clips a reactive trace to a few times its median magnitude so poles do
/// not flatten the plot.
fn clip(v: &[f64]) -> Vec<f64> {
    let mut mags: Vec<f64> = v
        .iter()
        .map(|x| x.abs())
        .filter(|x| x.is_finite())
        .collect();
    if mags.is_empty() {
        return v.to_vec();
    }
    mags.sort_by(f64::total_cmp);
    let lim = 5.0 * mags[mags.len() / 2];
    v.iter().map(|x| x.clamp(-lim, lim)).collect()
}

fn eigen(j: &EigenJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let w: Vec<Frequency> = j.intrinsic_ghz.iter().map(|&x| ghz(x)).collect();
    let g: Vec<Frequency> = j
        .couplings_mhz
        .iter()
        .map(|&x| Frequency::from_mhz(x))
        .collect();
    let n = w.len();
    let chain = if n >= 2 {
        Some(build_chain_matrix(&w, &g).map_err(numeric)?)
    } else {
        None
    };
    let matrix = if j.qubits.is_empty() {
        chain
            .clone()
            .ok_or_else(|| RunError::Numeric("nothing to diagonalise".into()))?
    } else {
        let block = match &chain {
            Some(m) => ChainBlock::try_from(m).map_err(numeric)?,
            None => single_cavity(w[0]),
        };
        let placements: Vec<QubitPlacement> = j
            .qubits
            .iter()
            .map(|q| {
                QubitPlacement::new(
                    q.cavity - 1,
                    ghz(q.frequency_ghz),
                    Frequency::from_mhz(q.coupling_mhz),
                )
            })
            .collect();
        build_qubit_chain_matrix(&block, &placements).map_err(numeric)?
    };
    let sol = eigenmodes(&matrix);
    let qubit_rows: Vec<usize> = (n..n + j.qubits.len()).collect();
    let mut t = Table::new(&["mode", "frequency_hz", "qubit_weight"]);
    for (k, f) in sol.frequencies.iter().enumerate() {
        t.push(vec![
            (k + 1).to_string(),
            cell(f.hz()),
            cell(sol.weight_on(k, &qubit_rows)),
        ]);
    }
    ctx.table(out, "eigen.csv", &t)?;
    out.values
        .insert("frequencies_hz".into(), hz_list(&sol.frequencies));
    out.values
        .insert("trace_hz".into(), matrix.trace().hz().into());
    if j.qubits.is_empty() && n == 2 && w[0] == w[1] {
        let (gamma, omega) =
            gamma_from_two_modes(sol.frequencies[0], sol.frequencies[1]).map_err(numeric)?;
        out.values.insert("gamma_hz".into(), gamma.hz().into());
        out.values.insert("omega_hz".into(), omega.hz().into());
    }
    if j.qubits.is_empty() && n == 3 && w[0] == w[2] && g[0] == g[1] {
        let (a, b, c) = three_cavity_modes_closed(w[0], w[1], g[0]);
        out.values
            .insert("closed_form_hz".into(), hz_list(&[a, b, c]));
    }
    Ok(())
}

fn extract_gamma(j: &ExtractGammaJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let (gamma, omega) = match (j.method, j.modes_ghz, &j.chain, &j.circuit, &j.oracle) {
        (GammaMethod::Modes, Some([a, b]), ..) => {
            let (g, w) = gamma_from_two_modes(ghz(a), ghz(b)).map_err(numeric)?;
            (g, Some(w))
        }
        (method, _, Some(chain), Some(circuit), Some(oracle)) => {
            let d = design(chain, circuit)?;
            design_values(&d, out);
            let g = match method {
                GammaMethod::Unloaded => d
                    .extract_gamma(GammaExtraction::Unloaded)
                    .map_err(numeric)?,
                GammaMethod::Loaded => d.extract_gamma(GammaExtraction::Loaded).map_err(numeric)?,
                _ => transmission_gamma(&d, &oracle.settings()).map_err(numeric)?,
            };
            (g, None)
        }
        _ => return Err(RunError::Numeric("unresolved extract-gamma inputs".into())),
    };
    let mut text = format!("gamma_hz={}\n", gamma.hz());
    if let Some(w) = omega {
        text.push_str(&format!("omega_hz={}\n", w.hz()));
        out.values.insert("omega_hz".into(), w.hz().into());
    }
    text.push_str(&format!("method={}\n", method_label(j.method)));
    ctx.write(out, "gamma.txt", text.as_bytes())?;
    out.values.insert("gamma_hz".into(), gamma.hz().into());
    Ok(())
}

fn method_label(m: GammaMethod) -> &'static str {
    match m {
        GammaMethod::Modes => "modes",
        GammaMethod::Unloaded => "unloaded",
        GammaMethod::Loaded => "loaded",
        GammaMethod::Transmission => "transmission",
    }
}

fn fit_alpha_job(j: &FitAlphaJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let points: Vec<CouplerPoint> = match &j.points {
        AlphaPoints::Csv { path } => {
            let f = fs::File::open(path).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            read_points_csv(f).map_err(numeric)?
        }
        AlphaPoints::Inline { d_mm, gamma_mhz } => d_mm
            .iter()
            .zip(gamma_mhz)
            .map(|(&d, &g)| CouplerPoint {
                d_mm: d,
                gamma: Frequency::from_mhz(g),
            })
            .collect(),
        AlphaPoints::Synthetic {
            alpha_hz_per_mm4,
            d_mm,
            noise_fraction,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            d_mm.iter()
                .map(|&d| {
                    let u: f64 = rng.gen_range(-1.0..=1.0);
                    CouplerPoint {
                        d_mm: d,
                        gamma: Frequency::from_hz(
                            alpha_hz_per_mm4 * d.powi(4) * (1.0 + noise_fraction * u),
                        ),
                    }
                })
                .collect()
        }
    };
    let source = match j.source.as_str() {
        "h1" => LawSource::H1,
        "h2" => LawSource::H2,
        _ => LawSource::User,
    };
    let law = fit_alpha(&points, source).map_err(numeric)?;
    let mut text = law.to_key_value();
    out.values
        .insert("alpha_hz_per_mm4".into(), law.alpha.into());
    out.values.insert("residual_hz".into(), law.residual.into());
    if points.len() >= 2 {
        let p = fit_power_law(&points).map_err(numeric)?;
        text.push_str(&format!(
            "free_exponent={}\nfree_prefactor={}\nlog_residual={}\n",
            p.exponent, p.prefactor, p.log_residual
        ));
        out.values.insert("free_exponent".into(), p.exponent.into());
    }
    ctx.write(out, "coupler_law.txt", text.as_bytes())?;
    let mut t = Table::new(&["d_mm", "gamma_hz"]);
    for p in &points {
        t.push(vec![cell(p.d_mm), cell(p.gamma.hz())]);
    }
    ctx.table(out, "points.csv", &t)?;
    let (dmin, dmax) = points.iter().fold((f64::MAX, f64::MIN), |(a, b), p| {
        (a.min(p.d_mm), b.max(p.d_mm))
    });
    let curve = (0..=50)
        .map(|k| {
            let d = dmin + (dmax - dmin) * k as f64 / 50.0;
            (d, law.alpha * d.powi(4) / 1e6)
        })
        .collect();
    ctx.svg(
        out,
        "coupler_law.svg",
        "Coupler law",
        ("d (mm)", "γ (MHz)"),
        &[
            Series::scatter(
                "points",
                points.iter().map(|p| (p.d_mm, p.gamma.mhz())).collect(),
            ),
            Series::line("α·d⁴", curve),
        ],
    )
}

fn fit_g(j: &FitGJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let d = design(&j.chain, &j.circuit)?;
    design_values(&d, out);
    let lj = j.lj.values();
    let (ac, fit) = oracle_fit_g(&d, &lj, &j.oracle.settings()).map_err(numeric)?;
    let mut buf = Vec::new();
    ac.write_csv(&mut buf).map_err(numeric)?;
    ctx.write(out, "branches.csv", &buf)?;
    let mg = min_gap(&ac).map_err(numeric)?;
    let text = format!(
        "g_hz={}\nomega_hz={}\nc_sigma_f={}\nrms_hz={}\niterations={}\nmin_half_gap_hz={}\nmin_gap_lj_h={}\n",
        fit.g.hz(),
        fit.omega.hz(),
        fit.c_sigma,
        fit.rms,
        fit.iterations,
        mg.half_gap.hz(),
        mg.location
    );
    ctx.write(out, "fit_g.txt", text.as_bytes())?;
    out.values.insert("g_hz".into(), fit.g.hz().into());
    out.values.insert("omega_hz".into(), fit.omega.hz().into());
    out.values.insert("rms_hz".into(), fit.rms.into());
    out.values
        .insert("min_half_gap_hz".into(), mg.half_gap.hz().into());
    let branch = |b: &[Option<Frequency>]| -> Vec<(f64, f64)> {
        ac.sweep
            .iter()
            .zip(b)
            .filter_map(|(&l, f)| f.map(|f| (l * 1e9, f.ghz())))
            .collect()
    };
    ctx.svg(
        out,
        "branches.svg",
        "Qubit-cavity avoided crossing",
        ("L_J (nH)", "frequency (GHz)"),
        &[
            Series::scatter("lower", branch(&ac.low)),
            Series::scatter("upper", branch(&ac.high)),
        ],
    )
}

fn bbq(j: &BbqJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let d = design(&j.chain, &j.circuit)?;
    design_values(&d, out);
    let r = oracle_bbq(&d, j.lj_nh * 1e-9, j.convention, &j.oracle.settings()).map_err(numeric)?;
    ctx.write(out, "kerr.txt", r.to_key_value().as_bytes())?;
    out.values.insert("chi_qr_hz".into(), r.chi_qr.hz().into());
    out.values.insert("g_hz".into(), r.g.hz().into());
    out.values.insert("e_c_hz".into(), r.charge.e_c.hz().into());
    out.values.insert("e_j_hz".into(), r.charge.e_j.hz().into());
    out.values
        .insert("c_sigma_f".into(), r.charge.c_sigma.into());
    Ok(())
}

fn params(chain: &ChainParams, c: Configuration) -> J12Params {
    J12Params::new(c, chain.omega(), chain.gamma(), chain.g())
}

fn file_tag(c: Configuration) -> String {
    c.label().to_lowercase()
}

fn model_curve(j: &J12ModelJob, c: Configuration) -> Result<J12Curve, RunError> {
    j12_sweep(&params(&j.chain, c), &j.detuning.values(), &j.q2.sweep()).map_err(numeric)
}

fn pair_side(s: PairSide) -> &'static str {
    match s {
        PairSide::Upper => "upper",
        PairSide::Lower => "lower",
    }
}

fn j12_model(j: &J12ModelJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let mut series = Vec::new();
    for &c in &j.configurations {
        let curve = model_curve(j, c)?;
        let mut t = Table::new(&["delta_hz", "j12_hz", "q1_hz", "q2_at_min_hz", "side"]);
        for p in &curve.points {
            t.push(vec![
                cell(p.delta.hz()),
                cell(p.j12.hz()),
                cell(p.q1.hz()),
                cell(p.q2_at_min.hz()),
                pair_side(p.side).into(),
            ]);
        }
        let tag = file_tag(c);
        ctx.table(out, &format!("j12_model_{tag}.csv"), &t)?;
        let mut entry = json!({});
        let (lo, hi) = (j.detuning.start_mhz, j.detuning.stop_mhz);
        if hi > lo {
            let m = j12_maximum(
                &params(&j.chain, c),
                (Frequency::from_mhz(lo), Frequency::from_mhz(hi)),
                Frequency::from_mhz(j.detuning.step_mhz),
                &j.q2.sweep(),
            )
            .map_err(numeric)?;
            entry = json!({"max_j12_hz": m.j12.hz(), "max_delta_hz": m.delta.hz()});
        }
        out.values.insert(tag.clone(), entry);
        series.push(Series::line(
            c.label(),
            curve
                .points
                .iter()
                .map(|p| (p.delta.mhz(), p.j12.mhz()))
                .collect(),
        ));
    }
    ctx.svg(
        out,
        "j12_model.svg",
        "Model J12",
        ("Δ (MHz)", "J12 (MHz)"),
        &series,
    )
}

fn side_label(s: Side) -> &'static str {
    match s {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

fn j12_oracle(j: &J12OracleJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let d = design(&j.chain, &j.circuit)?;
    design_values(&d, out);
    let settings = j.oracle.settings();
    if j.qubit_cavity == 2 {
        let r = dark_state_scan(&d, &j.lj.values(), j.probe_lj_nh * 1e-9, &settings)
            .map_err(numeric)?;
        let mut t = Table::new(&[
            "mode",
            "cavity_mode_hz",
            "resonant_lj_h",
            "repulsion_hz",
            "min_half_gap_hz",
            "min_half_gap_lj_h",
        ]);
        for k in 0..3 {
            t.push(vec![
                (k + 1).to_string(),
                cell(r.cavity_modes[k].hz()),
                cell(r.resonant_lj[k]),
                cell(r.repulsion[k].hz()),
                cell(r.half_gaps[k].hz()),
                cell(r.locations[k]),
            ]);
        }
        ctx.table(out, "dark_state.csv", &t)?;
        let mut t = Table::new(&["frequency_hz", "admittance_zero"]);
        for f in &r.modes {
            t.push(vec![cell(f.hz()), (!r.missing.contains(f)).to_string()]);
        }
        ctx.table(out, "probe_modes.csv", &t)?;
        out.values.insert(
            "dark_state".into(),
            json!({
                "half_gaps_hz": r.half_gaps.map(|f| f.hz()),
                "repulsion_hz": r.repulsion.map(|f| f.hz()),
                "modes_hz": hz_list(&r.modes),
                "admittance_zeros_hz": hz_list(&r.zeros),
                "missing_hz": hz_list(&r.missing),
            }),
        );
        return Ok(());
    }
    let mut series = Vec::new();
    for &c in &j.configurations {
        let points = oracle_j12_curve(&d, c, &j.detuning.values(), &settings).map_err(numeric)?;
        let mut t = Table::new(&[
            "delta_hz",
            "j12_hz",
            "q1_hz",
            "lj1_h",
            "lj2_at_min_h",
            "side",
            "status",
        ]);
        let mut failures = Vec::new();
        let mut best: Option<(f64, f64)> = None;
        for (delta, p) in j.detuning.values().into_iter().zip(&points) {
            match p {
                Ok(p) => {
                    t.push(vec![
                        cell(delta.hz()),
                        cell(p.j12.hz()),
                        cell(p.q1_nominal.hz()),
                        cell(p.lj1),
                        cell(p.lj2_at_min),
                        side_label(p.side).into(),
                        "ok".into(),
                    ]);
                    if best.is_none_or(|(j, _)| p.j12.hz() > j) {
                        best = Some((p.j12.hz(), delta.hz()));
                    }
                }
                Err(e) => {
                    t.push(vec![
                        cell(delta.hz()),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "unresolved".into(),
                    ]);
                    failures.push(json!({"delta_hz": delta.hz(), "error": e.to_string()}));
                }
            }
        }
        let tag = file_tag(c);
        ctx.table(out, &format!("j12_oracle_{tag}.csv"), &t)?;
        out.values.insert(
            tag,
            json!({
                "max_sampled_j12_hz": best.map(|b| b.0),
                "max_sampled_delta_hz": best.map(|b| b.1),
                "unresolved": failures,
            }),
        );
        series.push(Series::scatter(
            c.label(),
            points
                .iter()
                .flatten()
                .map(|p| (p.delta.mhz(), p.j12.mhz()))
                .collect(),
        ));
    }
    ctx.svg(
        out,
        "j12_oracle.svg",
        "Oracle J12",
        ("Δ (MHz)", "J12 (MHz)"),
        &series,
    )
}

fn compare(j: &CompareJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let d = design(&j.model.chain, &j.circuit)?;
    design_values(&d, out);
    let settings = j.oracle.settings();
    let detunings = j.model.detuning.values();
    let mut series = Vec::new();
    for &c in &j.model.configurations {
        let model = model_curve(&j.model, c)?;
        let oracle = oracle_j12_curve(&d, c, &detunings, &settings).map_err(numeric)?;
        let mut t = Table::new(&[
            "delta_hz",
            "model_j12_hz",
            "oracle_j12_hz",
            "relative_difference",
        ]);
        let (mut model_max, mut oracle_max) = (0.0f64, 0.0f64);
        for (m, o) in model.points.iter().zip(&oracle) {
            let o = o.as_ref().ok().map(|p| p.j12.hz());
            model_max = model_max.max(m.j12.hz());
            if let Some(o) = o {
                oracle_max = oracle_max.max(o);
            }
            t.push(vec![
                cell(m.delta.hz()),
                cell(m.j12.hz()),
                opt_cell(o),
                opt_cell(o.map(|o| (o - m.j12.hz()) / m.j12.hz())),
            ]);
        }
        let tag = file_tag(c);
        ctx.table(out, &format!("compare_{tag}.csv"), &t)?;
        out.values.insert(
            tag,
            json!({
                "model_max_sampled_j12_hz": model_max,
                "oracle_max_sampled_j12_hz": oracle_max,
                "relative_difference_of_maxima": (oracle_max - model_max) / model_max,
                "unresolved_points": oracle.iter().filter(|p| p.is_err()).count(),
            }),
        );
        series.push(Series::line(
            format!("{} model", c.label()),
            model
                .points
                .iter()
                .map(|p| (p.delta.mhz(), p.j12.mhz()))
                .collect(),
        ));
        series.push(Series::scatter(
            format!("{} oracle", c.label()),
            oracle
                .iter()
                .flatten()
                .map(|p| (p.delta.mhz(), p.j12.mhz()))
                .collect(),
        ));
    }
    ctx.svg(
        out,
        "compare.svg",
        "J12: model vs oracle",
        ("Δ (MHz)", "J12 (MHz)"),
        &series,
    )
}

fn photon_field(j: &PhotonFieldJob, ctx: &Context, out: &mut Outputs) -> Result<(), RunError> {
    let r =
        single_photon_field(j.e_norm_v_per_m, j.w_norm_j, ghz(j.frequency_ghz)).map_err(numeric)?;
    let text = format!(
        "e_norm_v_per_m={}\nw_norm_j={}\nfrequency_hz={}\nw_ph_j={}\ne_1ph_v_per_m={}\n",
        r.e_norm,
        r.w_norm,
        r.f.hz(),
        r.w_ph,
        r.e_1ph
    );
    ctx.write(out, "photon_field.txt", text.as_bytes())?;
    out.values.insert("e_1ph_v_per_m".into(), r.e_1ph.into());
    out.values.insert("w_ph_j".into(), r.w_ph.into());
    Ok(())
}
