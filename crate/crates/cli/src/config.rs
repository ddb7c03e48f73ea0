//! Experiment configuration: TOML documents whose numeric keys carry their
//! unit as a suffix (`_ghz`, `_mhz`, `_hz`, `_nh`, `_ff`, `_mm`).
//!
//! Loading happens in two passes. [`load`] parses the document and records
//! every key it does not recognise; [`resolve`] then fills defaults, checks
//! ranges and produces a [`Job`] for one scenario. Both passes report
//! problems as [`Diagnostic`]s naming the offending field.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use cqed_array::crossval::OracleSettings;
use cqed_array::modechain::{Configuration, Q2Sweep};
use cqed_array::specx::KerrConvention;
use cqed_array::Frequency;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Spectrum,
    Eigen,
    ExtractGamma,
    FitAlpha,
    FitG,
    Bbq,
    J12Model,
    J12Oracle,
    Compare,
    PhotonField,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Eigen => "eigen",
            Scenario::ExtractGamma => "extract-gamma",
            Scenario::FitAlpha => "fit-alpha",
            Scenario::FitG => "fit-g",
            Scenario::Bbq => "bbq",
            Scenario::J12Model => "j12-model",
            Scenario::J12Oracle => "j12-oracle",
            Scenario::Compare => "compare",
            Scenario::PhotonField => "photon-field",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Scenario::value_variants()
            .iter()
            .copied()
            .find(|v| v.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub chain: RawChain,
    #[serde(default)]
    pub circuit: RawCircuit,
    pub sweep: Option<RawSweep>,
    #[serde(default)]
    pub oracle: RawOracle,
    #[serde(default)]
    pub spectrum: RawSpectrum,
    #[serde(default)]
    pub eigen: RawEigen,
    #[serde(default)]
    pub extract_gamma: RawExtractGamma,
    #[serde(default)]
    pub fit_alpha: RawFitAlpha,
    #[serde(default)]
    pub bbq: RawBbq,
    #[serde(default)]
    pub j12: RawJ12,
    #[serde(default)]
    pub photon_field: RawPhotonField,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawChain {
    pub omega_ghz: Option<f64>,
    pub gamma_mhz: Option<f64>,
    pub g_mhz: Option<f64>,
    pub cavities: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawCircuit {
    pub total_capacitance_ff: Option<f64>,
    pub junction_capacitance_ff: Option<f64>,
    pub q_ref_ghz: Option<f64>,
    pub lj_ref_nh: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawSweep {
    pub lj_start_nh: Option<f64>,
    pub lj_stop_nh: Option<f64>,
    pub lj_step_nh: Option<f64>,
    pub freq_start_ghz: Option<f64>,
    pub freq_stop_ghz: Option<f64>,
    pub freq_step_mhz: Option<f64>,
    pub detuning_start_mhz: Option<f64>,
    pub detuning_stop_mhz: Option<f64>,
    pub detuning_step_mhz: Option<f64>,
    pub q2_half_span_mhz: Option<f64>,
    pub q2_step_mhz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawOracle {
    pub margin_mhz: Option<f64>,
    pub tolerance_hz: Option<f64>,
    pub lj2_step_nh: Option<f64>,
    pub lj2_span: Option<f64>,
    pub zoom_levels: Option<i64>,
}

#[derive(Debug, Deserialize)]
pub struct RawQubit {
    pub cavity: Option<i64>,
    pub lj_nh: Option<f64>,
    pub frequency_ghz: Option<f64>,
    pub coupling_mhz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawSpectrum {
    pub kind: Option<String>,
    pub port: Option<String>,
    #[serde(default)]
    pub qubits: Vec<RawQubit>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawEigen {
    pub intrinsic_ghz: Option<Vec<f64>>,
    pub couplings_mhz: Option<Vec<f64>>,
    #[serde(default)]
    pub qubits: Vec<RawQubit>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawExtractGamma {
    pub method: Option<String>,
    pub modes_ghz: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawFitAlpha {
    pub source: Option<String>,
    pub points_csv: Option<PathBuf>,
    pub d_mm: Option<Vec<f64>>,
    pub gamma_mhz: Option<Vec<f64>>,
    pub alpha_hz_per_mm4: Option<f64>,
    pub noise_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawBbq {
    pub lj_nh: Option<f64>,
    pub convention: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawJ12 {
    pub configurations: Option<Vec<String>>,
    pub qubit_cavity: Option<i64>,
    pub probe_lj_nh: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawPhotonField {
    pub e_norm_v_per_m: Option<f64>,
    pub w_norm_j: Option<f64>,
    pub frequency_ghz: Option<f64>,
}

/// Result of reading a configuration file.
#[derive(Debug)]
pub struct Loaded {
    pub raw: RawConfig,
    /// Directory relative paths inside the document are resolved against.
    pub base_dir: PathBuf,
    /// Top-level keys present in the document, in document order.
    pub tables: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses `text`. A syntax or type error yields a single diagnostic and a
/// default document; unknown keys are listed individually.
pub fn parse(text: &str, base_dir: PathBuf) -> Loaded {
    let mut diagnostics = Vec::new();
    let de = toml::Deserializer::new(text);
    let mut unknown = Vec::new();
    let raw = match serde_ignored::deserialize(de, |p| unknown.push(p.to_string())) {
        Ok(raw) => raw,
        Err(e) => {
            let e: toml::de::Error = e;
            diagnostics.push(Diagnostic {
                path: "<document>".into(),
                message: e.message().trim().to_string(),
            });
            RawConfig::default()
        }
    };
    diagnostics.extend(unknown.into_iter().map(|path| Diagnostic {
        path,
        message: "unknown key".into(),
    }));
    let tables = text
        .parse::<toml::Table>()
        .map(|t| t.keys().cloned().collect())
        .unwrap_or_default();
    Loaded {
        raw,
        base_dir,
        tables,
        diagnostics,
    }
}

pub fn load(path: &Path) -> std::io::Result<Loaded> {
    let text = std::fs::read_to_string(path)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(parse(&text, base))
}

// ---------------------------------------------------------------------------
// Resolved parameters. Everything here is echoed into the run report.

#[derive(Clone, Debug, Serialize)]
pub struct ChainParams {
    pub omega_ghz: f64,
    pub gamma_mhz: f64,
    pub g_mhz: f64,
}

impl ChainParams {
    pub fn omega(&self) -> Frequency {
        Frequency::from_ghz(self.omega_ghz)
    }
    pub fn gamma(&self) -> Frequency {
        Frequency::from_mhz(self.gamma_mhz)
    }
    pub fn g(&self) -> Frequency {
        Frequency::from_mhz(self.g_mhz)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CircuitParams {
    pub total_capacitance_ff: f64,
    pub junction_capacitance_ff: f64,
    pub q_ref_ghz: f64,
    pub lj_ref_nh: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LjGrid {
    pub start_nh: f64,
    pub stop_nh: f64,
    pub step_nh: f64,
}

impl LjGrid {
    /// Grid values in henries.
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start_nh, self.stop_nh, self.step_nh)
            .into_iter()
            .map(|x| x * 1e-9)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DetuningGrid {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub step_mhz: f64,
}

impl DetuningGrid {
    pub fn values(&self) -> Vec<Frequency> {
        linspace(self.start_mhz, self.stop_mhz, self.step_mhz)
            .into_iter()
            .map(Frequency::from_mhz)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyGrid {
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub step_mhz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Q2Params {
    pub half_span_mhz: f64,
    pub step_mhz: f64,
}

impl Q2Params {
    pub fn sweep(&self) -> Q2Sweep {
        Q2Sweep {
            half_span: Frequency::from_mhz(self.half_span_mhz),
            step: Frequency::from_mhz(self.step_mhz),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleParams {
    pub freq_step_mhz: f64,
    pub margin_mhz: f64,
    pub tolerance_hz: f64,
    pub lj_step_nh: f64,
    pub lj2_step_nh: f64,
    pub lj2_span: f64,
    pub zoom_levels: usize,
}

impl OracleParams {
    pub fn settings(&self) -> OracleSettings {
        OracleSettings {
            freq_step: Frequency::from_mhz(self.freq_step_mhz),
            margin: Frequency::from_mhz(self.margin_mhz),
            tolerance_hz: self.tolerance_hz,
            lj_step: self.lj_step_nh * 1e-9,
            lj2_step: self.lj2_step_nh * 1e-9,
            lj2_span: self.lj2_span,
            zoom_levels: self.zoom_levels,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceChoice {
    Admittance,
    Impedance,
    Transmission,
}

#[derive(Clone, Debug, Serialize)]
pub struct QubitLj {
    pub cavity: usize,
    pub lj_nh: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QubitModel {
    pub cavity: usize,
    pub frequency_ghz: f64,
    pub coupling_mhz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumJob {
    pub chain: ChainParams,
    pub circuit: CircuitParams,
    pub cavities: usize,
    pub qubits: Vec<QubitLj>,
    pub kind: TraceChoice,
    pub port: String,
    /// `None` places the grid around the network modes.
    pub grid: Option<FrequencyGrid>,
    pub oracle: OracleParams,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenJob {
    pub intrinsic_ghz: Vec<f64>,
    pub couplings_mhz: Vec<f64>,
    pub qubits: Vec<QubitModel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMethod {
    Modes,
    Unloaded,
    Loaded,
    Transmission,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractGammaJob {
    pub method: GammaMethod,
    pub modes_ghz: Option<[f64; 2]>,
    pub chain: Option<ChainParams>,
    pub circuit: Option<CircuitParams>,
    pub oracle: Option<OracleParams>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlphaPoints {
    Csv {
        path: PathBuf,
    },
    Inline {
        d_mm: Vec<f64>,
        gamma_mhz: Vec<f64>,
    },
    Synthetic {
        alpha_hz_per_mm4: f64,
        d_mm: Vec<f64>,
        noise_fraction: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct FitAlphaJob {
    pub source: String,
    pub points: AlphaPoints,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitGJob {
    pub chain: ChainParams,
    pub circuit: CircuitParams,
    pub lj: LjGrid,
    pub oracle: OracleParams,
}

#[derive(Clone, Debug, Serialize)]
pub struct BbqJob {
    pub chain: ChainParams,
    pub circuit: CircuitParams,
    pub lj_nh: f64,
    #[serde(serialize_with = "convention_label")]
    pub convention: KerrConvention,
    pub oracle: OracleParams,
}

#[derive(Clone, Debug, Serialize)]
pub struct J12ModelJob {
    pub chain: ChainParams,
    #[serde(serialize_with = "configuration_labels")]
    pub configurations: Vec<Configuration>,
    pub detuning: DetuningGrid,
    pub q2: Q2Params,
}

#[derive(Clone, Debug, Serialize)]
pub struct J12OracleJob {
    pub chain: ChainParams,
    pub circuit: CircuitParams,
    #[serde(serialize_with = "configuration_labels")]
    pub configurations: Vec<Configuration>,
    pub detuning: DetuningGrid,
    pub oracle: OracleParams,
    /// 1-based cavity of Q1; cavity 2 runs the dark-state scan instead.
    pub qubit_cavity: usize,
    pub lj: LjGrid,
    pub probe_lj_nh: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareJob {
    pub model: J12ModelJob,
    pub circuit: CircuitParams,
    pub oracle: OracleParams,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhotonFieldJob {
    pub e_norm_v_per_m: f64,
    pub w_norm_j: f64,
    pub frequency_ghz: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Job {
    Spectrum(SpectrumJob),
    Eigen(EigenJob),
    ExtractGamma(ExtractGammaJob),
    FitAlpha(FitAlphaJob),
    FitG(FitGJob),
    Bbq(BbqJob),
    J12Model(J12ModelJob),
    J12Oracle(J12OracleJob),
    Compare(CompareJob),
    PhotonField(PhotonFieldJob),
}

#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub output_dir: Option<PathBuf>,
    pub job: Job,
}

fn convention_label<S: serde::Serializer>(c: &KerrConvention, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(c.label())
}

fn configuration_labels<S: serde::Serializer>(
    c: &[Configuration],
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|c| c.label().to_lowercase()))
}

/// `start, start + step, …` up to `stop`, with the count rounded so that a
/// stop lying on the grid is included.
pub fn linspace(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

// ---------------------------------------------------------------------------
// Resolution.

const DEFAULT_LJ: (f64, f64, f64) = (6.0, 14.0, 0.05);
const DEFAULT_FREQ_STEP_MHZ: f64 = 1.0;
const DEFAULT_DETUNING: (f64, f64, f64) = (-150.0, 150.0, 10.0);

#[derive(Default)]
struct Checker {
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn fail(&mut self, path: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            path: path.into(),
            message: message.into(),
        });
    }

    fn required(&mut self, path: &str, v: Option<f64>) -> f64 {
        match v {
            Some(x) if x.is_finite() => x,
            Some(x) => {
                self.fail(path, format!("must be finite, got {x}"));
                f64::NAN
            }
            None => {
                self.fail(path, "required");
                f64::NAN
            }
        }
    }

    fn positive(&mut self, path: &str, v: Option<f64>, default: Option<f64>) -> f64 {
        let x = match (v, default) {
            (None, Some(d)) => return d,
            (v, _) => self.required(path, v),
        };
        if x.is_finite() && x <= 0.0 {
            self.fail(path, format!("must be positive, got {x}"));
        }
        x
    }

    fn non_negative(&mut self, path: &str, v: Option<f64>, default: f64) -> f64 {
        let x = v.unwrap_or(default);
        if !(x >= 0.0 && x.is_finite()) {
            self.fail(path, format!("must be non-negative, got {x}"));
        }
        x
    }

    fn count(&mut self, path: &str, v: Option<i64>, default: usize, min: usize) -> usize {
        match v {
            None => default,
            Some(n) if n >= min as i64 => n as usize,
            Some(n) => {
                self.fail(path, format!("must be at least {min}, got {n}"));
                default
            }
        }
    }

    fn chain(&mut self, c: &RawChain) -> ChainParams {
        ChainParams {
            omega_ghz: self.positive("chain.omega_ghz", c.omega_ghz, None),
            gamma_mhz: self.positive("chain.gamma_mhz", c.gamma_mhz, None),
            g_mhz: self.positive("chain.g_mhz", c.g_mhz, None),
        }
    }

    fn circuit(&mut self, c: &RawCircuit) -> CircuitParams {
        let p = CircuitParams {
            total_capacitance_ff: self.positive(
                "circuit.total_capacitance_ff",
                c.total_capacitance_ff,
                Some(400.0),
            ),
            junction_capacitance_ff: self.positive(
                "circuit.junction_capacitance_ff",
                c.junction_capacitance_ff,
                Some(10.0),
            ),
            q_ref_ghz: self.positive("circuit.q_ref_ghz", c.q_ref_ghz, Some(6.368)),
            lj_ref_nh: self.positive("circuit.lj_ref_nh", c.lj_ref_nh, Some(8.0)),
        };
        if p.junction_capacitance_ff >= p.total_capacitance_ff {
            self.fail(
                "circuit.junction_capacitance_ff",
                "must be smaller than circuit.total_capacitance_ff",
            );
        }
        p
    }

    fn lj_grid(&mut self, s: Option<&RawSweep>) -> LjGrid {
        let d = RawSweep::default();
        let s = s.unwrap_or(&d);
        let g = LjGrid {
            start_nh: self.positive("sweep.lj_start_nh", s.lj_start_nh, Some(DEFAULT_LJ.0)),
            stop_nh: self.positive("sweep.lj_stop_nh", s.lj_stop_nh, Some(DEFAULT_LJ.1)),
            step_nh: self.positive("sweep.lj_step_nh", s.lj_step_nh, Some(DEFAULT_LJ.2)),
        };
        if g.stop_nh <= g.start_nh {
            self.fail("sweep.lj_stop_nh", "must exceed sweep.lj_start_nh");
        } else if linspace(g.start_nh, g.stop_nh, g.step_nh).len() < 5 {
            self.fail("sweep.lj_step_nh", "grid has fewer than 5 points");
        }
        g
    }

    fn detuning(&mut self, s: Option<&RawSweep>) -> DetuningGrid {
        let d = RawSweep::default();
        let s = s.unwrap_or(&d);
        let start = s.detuning_start_mhz.unwrap_or(DEFAULT_DETUNING.0);
        let stop = s.detuning_stop_mhz.unwrap_or(DEFAULT_DETUNING.1);
        let g = DetuningGrid {
            start_mhz: self.required("sweep.detuning_start_mhz", Some(start)),
            stop_mhz: self.required("sweep.detuning_stop_mhz", Some(stop)),
            step_mhz: self.positive(
                "sweep.detuning_step_mhz",
                s.detuning_step_mhz,
                Some(DEFAULT_DETUNING.2),
            ),
        };
        if g.stop_mhz < g.start_mhz {
            self.fail(
                "sweep.detuning_stop_mhz",
                "must not be below sweep.detuning_start_mhz",
            );
        }
        g
    }

    fn q2(&mut self, s: Option<&RawSweep>) -> Q2Params {
        let d = Q2Sweep::default();
        let r = RawSweep::default();
        let s = s.unwrap_or(&r);
        let p = Q2Params {
            half_span_mhz: self.positive(
                "sweep.q2_half_span_mhz",
                s.q2_half_span_mhz,
                Some(d.half_span.mhz()),
            ),
            step_mhz: self.positive("sweep.q2_step_mhz", s.q2_step_mhz, Some(d.step.mhz())),
        };
        if p.half_span_mhz < p.step_mhz {
            self.fail(
                "sweep.q2_half_span_mhz",
                "must be at least sweep.q2_step_mhz",
            );
        }
        p
    }

    fn oracle(&mut self, o: &RawOracle, s: Option<&RawSweep>) -> OracleParams {
        let d = OracleSettings::default();
        OracleParams {
            freq_step_mhz: self.positive(
                "sweep.freq_step_mhz",
                s.and_then(|s| s.freq_step_mhz),
                Some(DEFAULT_FREQ_STEP_MHZ),
            ),
            margin_mhz: self.positive("oracle.margin_mhz", o.margin_mhz, Some(d.margin.mhz())),
            tolerance_hz: self.positive(
                "oracle.tolerance_hz",
                o.tolerance_hz,
                Some(d.tolerance_hz),
            ),
            lj_step_nh: s.and_then(|s| s.lj_step_nh).unwrap_or(DEFAULT_LJ.2),
            lj2_step_nh: self.positive("oracle.lj2_step_nh", o.lj2_step_nh, Some(d.lj2_step * 1e9)),
            lj2_span: {
                let x = self.positive("oracle.lj2_span", o.lj2_span, Some(d.lj2_span));
                if x >= 1.0 {
                    self.fail("oracle.lj2_span", "must be below 1");
                }
                x
            },
            zoom_levels: self.count("oracle.zoom_levels", o.zoom_levels, d.zoom_levels, 0),
        }
    }

    fn configurations(&mut self, v: &Option<Vec<String>>) -> Vec<Configuration> {
        let Some(v) = v else {
            return vec![
                Configuration::NearestNeighbor,
                Configuration::NextNearestNeighbor,
            ];
        };
        if v.is_empty() {
            self.fail("j12.configurations", "must list at least one of nn, nnn");
        }
        v.iter()
            .enumerate()
            .filter_map(|(i, s)| match s.as_str() {
                "nn" => Some(Configuration::NearestNeighbor),
                "nnn" => Some(Configuration::NextNearestNeighbor),
                other => {
                    self.fail(
                        &format!("j12.configurations[{i}]"),
                        format!("expected nn or nnn, got {other:?}"),
                    );
                    None
                }
            })
            .collect()
    }

    fn frequency_grid(&mut self, s: Option<&RawSweep>) -> Option<FrequencyGrid> {
        let s = s?;
        match (s.freq_start_ghz, s.freq_stop_ghz) {
            (None, None) => None,
            (start, stop) => {
                let g = FrequencyGrid {
                    start_ghz: self.positive("sweep.freq_start_ghz", start, None),
                    stop_ghz: self.positive("sweep.freq_stop_ghz", stop, None),
                    step_mhz: self.positive(
                        "sweep.freq_step_mhz",
                        s.freq_step_mhz,
                        Some(DEFAULT_FREQ_STEP_MHZ),
                    ),
                };
                if g.stop_ghz <= g.start_ghz {
                    self.fail("sweep.freq_stop_ghz", "must exceed sweep.freq_start_ghz");
                }
                Some(g)
            }
        }
    }

    fn cavity(&mut self, path: &str, v: Option<i64>, cavities: usize) -> usize {
        match v {
            Some(c) if c >= 1 && c as usize <= cavities => c as usize,
            Some(c) => {
                self.fail(path, format!("must lie in 1..={cavities}, got {c}"));
                1
            }
            None => {
                self.fail(path, "required");
                1
            }
        }
    }

    fn unused(&mut self, path: &str, present: bool, scenario: Scenario) {
        if present {
            self.fail(path, format!("not used by scenario {}", scenario.name()));
        }
    }
}

/// Resolves `raw` for `scenario`, or for the scenario named in the document
/// when `scenario` is `None`.
pub fn resolve(loaded: &Loaded, scenario: Option<Scenario>) -> Result<Resolved, Vec<Diagnostic>> {
    let raw = &loaded.raw;
    let mut c = Checker {
        diags: loaded.diagnostics.clone(),
    };
    let declared = match raw.scenario.as_deref() {
        None => None,
        Some(s) => match Scenario::parse(s) {
            Some(sc) => Some(sc),
            None => {
                c.fail("scenario", format!("unknown scenario {s:?}"));
                None
            }
        },
    };
    let scenario = match (scenario, declared) {
        (Some(a), Some(b)) if a != b => {
            c.fail(
                "scenario",
                format!(
                    "document declares {} but {} was requested",
                    b.name(),
                    a.name()
                ),
            );
            a
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            if raw.scenario.is_none() {
                c.fail("scenario", "required");
            }
            return Err(c.diags);
        }
    };
    let allowed = sections(scenario, raw);
    for t in &loaded.tables {
        let reported = loaded.diagnostics.iter().any(|d| &d.path == t);
        if !reported
            && !matches!(t.as_str(), "scenario" | "output_dir")
            && !allowed.contains(&t.as_str())
        {
            c.fail(t, format!("not used by scenario {}", scenario.name()));
        }
    }
    let sweep = raw.sweep.as_ref();
    let job = match scenario {
        Scenario::Spectrum => {
            let chain = c.chain(&raw.chain);
            let circuit = c.circuit(&raw.circuit);
            let cavities = c.count("chain.cavities", raw.chain.cavities, 1, 1);
            let qubits: Vec<QubitLj> = raw
                .spectrum
                .qubits
                .iter()
                .enumerate()
                .map(|(i, q)| {
                    let p = format!("spectrum.qubits[{i}]");
                    c.unused(
                        &format!("{p}.frequency_ghz"),
                        q.frequency_ghz.is_some(),
                        scenario,
                    );
                    c.unused(
                        &format!("{p}.coupling_mhz"),
                        q.coupling_mhz.is_some(),
                        scenario,
                    );
                    QubitLj {
                        cavity: c.cavity(&format!("{p}.cavity"), q.cavity, cavities),
                        lj_nh: c.positive(&format!("{p}.lj_nh"), q.lj_nh, None),
                    }
                })
                .collect();
            let kind = match raw.spectrum.kind.as_deref().unwrap_or("admittance") {
                "admittance" => TraceChoice::Admittance,
                "impedance" => TraceChoice::Impedance,
                "transmission" => TraceChoice::Transmission,
                other => {
                    c.fail(
                        "spectrum.kind",
                        format!("expected admittance, impedance or transmission, got {other:?}"),
                    );
                    TraceChoice::Admittance
                }
            };
            let port = match (kind, raw.spectrum.port.clone()) {
                (TraceChoice::Transmission, Some(_)) => {
                    c.fail("spectrum.port", "transmission always runs drive to readout");
                    String::new()
                }
                (TraceChoice::Transmission, None) => "drive->readout".into(),
                (_, Some(p)) => p,
                (_, None) => "LP1".into(),
            };
            if kind != TraceChoice::Transmission {
                let valid = port
                    .strip_prefix("LP")
                    .and_then(|k| k.parse::<usize>().ok())
                    .is_some_and(|k| k >= 1 && k <= qubits.len());
                if !valid {
                    c.fail(
                        "spectrum.port",
                        format!(
                            "{port:?} is not a qubit port; ports are LP1..LP{}",
                            qubits.len()
                        ),
                    );
                }
            } else if cavities < 2 {
                c.fail("chain.cavities", "transmission needs at least 2 cavities");
            }
            Job::Spectrum(SpectrumJob {
                chain,
                circuit,
                cavities,
                qubits,
                kind,
                port,
                grid: c.frequency_grid(sweep),
                oracle: c.oracle(&raw.oracle, sweep),
            })
        }
        Scenario::Eigen => {
            let cavities = c.count("chain.cavities", raw.chain.cavities, 2, 1);
            let intrinsic_ghz = match &raw.eigen.intrinsic_ghz {
                Some(v) => v.clone(),
                None => vec![c.positive("chain.omega_ghz", raw.chain.omega_ghz, None); cavities],
            };
            for (i, &w) in intrinsic_ghz.iter().enumerate() {
                c.positive(&format!("eigen.intrinsic_ghz[{i}]"), Some(w), None);
            }
            let n = intrinsic_ghz.len();
            let couplings_mhz = match &raw.eigen.couplings_mhz {
                Some(v) => v.clone(),
                None if n > 1 => {
                    vec![c.positive("chain.gamma_mhz", raw.chain.gamma_mhz, None); n - 1]
                }
                None => Vec::new(),
            };
            for (i, &g) in couplings_mhz.iter().enumerate() {
                c.required(&format!("eigen.couplings_mhz[{i}]"), Some(g));
            }
            if couplings_mhz.len() + 1 != n {
                c.fail(
                    "eigen.couplings_mhz",
                    format!("{} couplings for {n} cavities", couplings_mhz.len()),
                );
            }
            let qubits = raw
                .eigen
                .qubits
                .iter()
                .enumerate()
                .map(|(i, q)| {
                    let p = format!("eigen.qubits[{i}]");
                    c.unused(&format!("{p}.lj_nh"), q.lj_nh.is_some(), scenario);
                    QubitModel {
                        cavity: c.cavity(&format!("{p}.cavity"), q.cavity, n),
                        frequency_ghz: c.positive(
                            &format!("{p}.frequency_ghz"),
                            q.frequency_ghz,
                            None,
                        ),
                        coupling_mhz: match q.coupling_mhz {
                            Some(g) => c.required(&format!("{p}.coupling_mhz"), Some(g)),
                            None => c.positive("chain.g_mhz", raw.chain.g_mhz, None),
                        },
                    }
                })
                .collect::<Vec<_>>();
            if n < 2 && qubits.is_empty() {
                c.fail("eigen", "a single cavity needs at least one qubit");
            }
            Job::Eigen(EigenJob {
                intrinsic_ghz,
                couplings_mhz,
                qubits,
            })
        }
        Scenario::ExtractGamma => {
            let method = match raw.extract_gamma.method.as_deref().unwrap_or("modes") {
                "modes" => GammaMethod::Modes,
                "unloaded" => GammaMethod::Unloaded,
                "loaded" => GammaMethod::Loaded,
                "transmission" => GammaMethod::Transmission,
                other => {
                    c.fail(
                        "extract_gamma.method",
                        format!("expected modes, unloaded, loaded or transmission, got {other:?}"),
                    );
                    GammaMethod::Modes
                }
            };
            if method == GammaMethod::Modes {
                let modes_ghz = match raw.extract_gamma.modes_ghz.as_deref() {
                    Some(&[a, b]) => {
                        let a = c.positive("extract_gamma.modes_ghz[0]", Some(a), None);
                        let b = c.positive("extract_gamma.modes_ghz[1]", Some(b), None);
                        if b < a {
                            c.fail("extract_gamma.modes_ghz", "modes must be ascending");
                        }
                        Some([a, b])
                    }
                    Some(v) => {
                        c.fail(
                            "extract_gamma.modes_ghz",
                            format!("expected 2 frequencies, got {}", v.len()),
                        );
                        None
                    }
                    None => {
                        c.fail("extract_gamma.modes_ghz", "required for method modes");
                        None
                    }
                };
                Job::ExtractGamma(ExtractGammaJob {
                    method,
                    modes_ghz,
                    chain: None,
                    circuit: None,
                    oracle: None,
                })
            } else {
                c.unused(
                    "extract_gamma.modes_ghz",
                    raw.extract_gamma.modes_ghz.is_some(),
                    scenario,
                );
                Job::ExtractGamma(ExtractGammaJob {
                    method,
                    modes_ghz: None,
                    chain: Some(c.chain(&raw.chain)),
                    circuit: Some(c.circuit(&raw.circuit)),
                    oracle: Some(c.oracle(&raw.oracle, sweep)),
                })
            }
        }
        Scenario::FitAlpha => {
            let f = &raw.fit_alpha;
            let source = f.source.clone().unwrap_or_else(|| "user".into());
            if !matches!(source.as_str(), "h1" | "h2" | "user") {
                c.fail(
                    "fit_alpha.source",
                    format!("expected h1, h2 or user, got {source:?}"),
                );
            }
            let points = match (&f.points_csv, &f.gamma_mhz, f.alpha_hz_per_mm4) {
                (Some(p), None, None) => AlphaPoints::Csv {
                    path: loaded.base_dir.join(p),
                },
                (None, Some(g), None) => {
                    let d = f.d_mm.clone().unwrap_or_default();
                    if d.len() != g.len() || d.is_empty() {
                        c.fail(
                            "fit_alpha.d_mm",
                            format!("{} diameters for {} γ values", d.len(), g.len()),
                        );
                    }
                    for (i, &x) in d.iter().enumerate() {
                        c.positive(&format!("fit_alpha.d_mm[{i}]"), Some(x), None);
                    }
                    for (i, &x) in g.iter().enumerate() {
                        c.positive(&format!("fit_alpha.gamma_mhz[{i}]"), Some(x), None);
                    }
                    AlphaPoints::Inline {
                        d_mm: d,
                        gamma_mhz: g.clone(),
                    }
                }
                (None, None, Some(a)) => {
                    let alpha = c.positive("fit_alpha.alpha_hz_per_mm4", Some(a), None);
                    let d = f
                        .d_mm
                        .clone()
                        .unwrap_or_else(|| vec![4.0, 5.0, 6.0, 7.0, 8.0]);
                    for (i, &x) in d.iter().enumerate() {
                        c.positive(&format!("fit_alpha.d_mm[{i}]"), Some(x), None);
                    }
                    AlphaPoints::Synthetic {
                        alpha_hz_per_mm4: alpha,
                        d_mm: d,
                        noise_fraction: c.non_negative(
                            "fit_alpha.noise_fraction",
                            f.noise_fraction,
                            0.0,
                        ),
                    }
                }
                _ => {
                    c.fail(
                        "fit_alpha",
                        "give exactly one of points_csv, gamma_mhz (with d_mm) or alpha_hz_per_mm4",
                    );
                    AlphaPoints::Inline {
                        d_mm: Vec::new(),
                        gamma_mhz: Vec::new(),
                    }
                }
            };
            if !matches!(points, AlphaPoints::Synthetic { .. }) {
                c.unused(
                    "fit_alpha.noise_fraction",
                    f.noise_fraction.is_some(),
                    scenario,
                );
            }
            Job::FitAlpha(FitAlphaJob { source, points })
        }
        Scenario::FitG => {
            if sweep.is_none() {
                c.fail("sweep", "fit-g needs an L_J sweep grid");
            }
            Job::FitG(FitGJob {
                chain: c.chain(&raw.chain),
                circuit: c.circuit(&raw.circuit),
                lj: c.lj_grid(sweep),
                oracle: c.oracle(&raw.oracle, sweep),
            })
        }
        Scenario::Bbq => {
            let circuit = c.circuit(&raw.circuit);
            let convention = match raw.bbq.convention.as_deref().unwrap_or("factor-2") {
                "factor-2" => KerrConvention::FactorTwo,
                "literal-b4" => KerrConvention::LiteralB4,
                other => {
                    c.fail(
                        "bbq.convention",
                        format!("expected factor-2 or literal-b4, got {other:?}"),
                    );
                    KerrConvention::FactorTwo
                }
            };
            Job::Bbq(BbqJob {
                chain: c.chain(&raw.chain),
                lj_nh: c.positive("bbq.lj_nh", raw.bbq.lj_nh, Some(circuit.lj_ref_nh)),
                circuit,
                convention,
                oracle: c.oracle(&raw.oracle, sweep),
            })
        }
        Scenario::J12Model => Job::J12Model(model_job(&mut c, raw, sweep)),
        Scenario::J12Oracle => {
            let circuit = c.circuit(&raw.circuit);
            let qubit_cavity = c.count("j12.qubit_cavity", raw.j12.qubit_cavity, 1, 1);
            if qubit_cavity > 2 {
                c.fail(
                    "j12.qubit_cavity",
                    format!("must be 1 or 2, got {qubit_cavity}"),
                );
            }
            Job::J12Oracle(J12OracleJob {
                chain: c.chain(&raw.chain),
                configurations: c.configurations(&raw.j12.configurations),
                detuning: c.detuning(sweep),
                oracle: c.oracle(&raw.oracle, sweep),
                qubit_cavity,
                lj: c.lj_grid(sweep),
                probe_lj_nh: c.positive(
                    "j12.probe_lj_nh",
                    raw.j12.probe_lj_nh,
                    Some(circuit.lj_ref_nh),
                ),
                circuit,
            })
        }
        Scenario::Compare => Job::Compare(CompareJob {
            model: model_job(&mut c, raw, sweep),
            circuit: c.circuit(&raw.circuit),
            oracle: c.oracle(&raw.oracle, sweep),
        }),
        Scenario::PhotonField => {
            let p = &raw.photon_field;
            Job::PhotonField(PhotonFieldJob {
                e_norm_v_per_m: c.positive("photon_field.e_norm_v_per_m", p.e_norm_v_per_m, None),
                w_norm_j: c.positive("photon_field.w_norm_j", p.w_norm_j, None),
                frequency_ghz: c.positive("photon_field.frequency_ghz", p.frequency_ghz, None),
            })
        }
    };
    if c.diags.is_empty() {
        Ok(Resolved {
            scenario,
            output_dir: raw.output_dir.as_ref().map(|p| loaded.base_dir.join(p)),
            job,
        })
    } else {
        Err(c.diags)
    }
}

/// Top-level tables a scenario reads.
fn sections(scenario: Scenario, raw: &RawConfig) -> &'static [&'static str] {
    match scenario {
        Scenario::Spectrum => &["chain", "circuit", "sweep", "oracle", "spectrum"],
        Scenario::Eigen => &["chain", "eigen"],
        Scenario::ExtractGamma => match raw.extract_gamma.method.as_deref() {
            None | Some("modes") => &["extract_gamma"],
            Some(_) => &["chain", "circuit", "sweep", "oracle", "extract_gamma"],
        },
        Scenario::FitAlpha => &["fit_alpha"],
        Scenario::FitG => &["chain", "circuit", "sweep", "oracle"],
        Scenario::Bbq => &["chain", "circuit", "sweep", "oracle", "bbq"],
        Scenario::J12Model => &["chain", "j12", "sweep"],
        Scenario::J12Oracle | Scenario::Compare => &["chain", "circuit", "sweep", "oracle", "j12"],
        Scenario::PhotonField => &["photon_field"],
    }
}

fn model_job(c: &mut Checker, raw: &RawConfig, sweep: Option<&RawSweep>) -> J12ModelJob {
    J12ModelJob {
        chain: c.chain(&raw.chain),
        configurations: c.configurations(&raw.j12.configurations),
        detuning: c.detuning(sweep),
        q2: c.q2(sweep),
    }
}
