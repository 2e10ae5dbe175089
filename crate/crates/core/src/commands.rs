//! Command layer shared by the CLI and the Python bindings: run
//! configuration, parameter sweeps, verification suites and report rendering.
//!
//! Every command is a pure function of its [`RunConfig`] and returns the
//! rendered report together with its exit code.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::bounds::{
    beta_report, lower_constant_p, lower_constant_t, multi_index_count, schur_upper_constant, stirling_limit_probe,
    ConstantReport, PLowerReport, SchurReport,
};
use crate::error::{Error, Result};
use crate::integrals::{
    c_alpha_s, closed_form_is_monotone, i_closed_form, i_quadrature, lemma1_grid, lemma1_max_via_gauss,
    sphere_identity_check, sphere_identity_rule, IArgs, LEMMA_ALPHAS, LEMMA_SS, LEMMA_XS,
};
use crate::kernels::{estimate_growth_constant, growth_sample, KernelControl, KernelSeries, SamplerConfig, DEFAULT_REL_TOL};
use crate::operators::{
    bracket_norm, besov_norm_of_image, reproducing_check, tau_norm, BracketConfig, NormBracket, Operator,
    TestFunction, DEFAULT_SEED,
};
use crate::params::{smallest_admissible_order, Params};
use crate::quadrature::RadialSplit;
use crate::specfun::{gauss_value, hyp2f1, hyp2f1_derivative, euler_identity_check, ln_gamma, series_at_one, Hyp2F1Args, SeriesControl};
use crate::zonal::DEFAULT_DEGREE_CAP;

/// Version of the JSON envelope and CSV column layout.
pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "bergnorm";

pub const EXIT_OK: i32 = 0;
pub const EXIT_HARD_FAILURE: i32 = 1;
/// Usage errors, and sweeps in which nothing ran.
pub const EXIT_USAGE: i32 = 2;

/// Terms of the `t = 1` series before its tail estimate.
pub const GAUSS_SERIES_TERMS: usize = 20_000;
pub const GAUSS_LIMIT_TOL: f64 = 1e-4;
pub const DERIVATIVE_FD_TOL: f64 = 1e-6;
pub const DERIVATIVE_FD_STEP: f64 = 1e-5;
pub const SPHERE_IDENTITY_TOL: f64 = 1e-6;
pub const SPHERE_IDENTITY_ORDER: usize = 24;
pub const SPHERE_IDENTITY_XS: [f64; 5] = [0.0, 0.3, 0.6, 0.8, 0.9];
pub const LEMMA_GRID_TOL: f64 = 1e-5;
pub const LEMMA_MIN_CLOSED_TOL: f64 = 1e-8;
pub const LEMMA_MIN_QUAD_TOL: f64 = 1e-5;
pub const LEMMA_LIMIT_TOL: f64 = 1e-4;
/// `1 - |x|` at which the closed form is compared with its boundary limit.
pub const LEMMA_LIMIT_GAP: f64 = 1e-12;
pub const REPRODUCING_TOL: f64 = 1e-5;
pub const REPRODUCING_MAX_DEGREE: usize = 4;
pub const REPRODUCING_POINTS: usize = 50;
pub const REPRODUCING_MAX_RADIUS: f64 = 0.7;
pub const PSI_NORM_TOL: f64 = 1e-6;
pub const P_IMAGE_TOL: f64 = 1e-6;
pub const STIRLING_PS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];
pub const STIRLING_SLOPE_TOL: f64 = 0.2;

pub fn lemma_split() -> RadialSplit {
    RadialSplit { radial_order: 64, sphere_order: 24, clustering: None }
}

pub fn reproducing_split() -> RadialSplit {
    RadialSplit { radial_order: 24, sphere_order: 36, clustering: None }
}

pub fn psi_split() -> RadialSplit {
    RadialSplit { radial_order: 48, sphere_order: 8, clustering: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidParams(format!("unknown format '{other}' (expected json or csv)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Lemma1,
    Kernels,
    Operators,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identities" => Ok(Self::Identities),
            "lemma1" => Ok(Self::Lemma1),
            "kernels" => Ok(Self::Kernels),
            "operators" => Ok(Self::Operators),
            other => Err(Error::InvalidParams(format!(
                "unknown suite '{other}' (expected identities, lemma1, kernels or operators)"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Resolved configuration of one run. `n`, `alpha`, `p` and `m` are sweep
/// lists (a config file may give scalars); an empty `m` list selects the
/// smallest admissible order for each `(n, p)`.
///
/// Defaults: `n = 2`, `alpha = 1`, `p = 2`, smallest `m`,
/// seed [`DEFAULT_SEED`], orders 32/16, degree cap 200, `rel_tol = 1e-8`,
/// 100 trials, JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub alpha: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub p: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub m: Vec<u32>,
    pub seed: u64,
    pub radial_order: usize,
    pub sphere_order: usize,
    pub degree_cap: usize,
    pub rel_tol: f64,
    pub trials: usize,
    pub format: OutputFormat,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: vec![2],
            alpha: vec![1.0],
            p: vec![2.0],
            m: vec![],
            seed: DEFAULT_SEED,
            radial_order: 32,
            sphere_order: 16,
            degree_cap: DEFAULT_DEGREE_CAP,
            rel_tol: DEFAULT_REL_TOL,
            trials: 100,
            format: OutputFormat::Json,
            out: None,
        }
    }
}

/// One point of the sweep, admissible or not.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCase {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub m: Option<u32>,
    pub params: std::result::Result<Params, String>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.split()?;
        self.kernel_control()?;
        Ok(())
    }

    pub fn split(&self) -> Result<RadialSplit> {
        RadialSplit::new(self.radial_order, self.sphere_order)
    }

    pub fn kernel_control(&self) -> Result<KernelControl> {
        KernelControl::new(self.degree_cap, self.rel_tol)
    }

    pub fn bracket_config(&self) -> Result<BracketConfig> {
        let split = self.split()?;
        Ok(BracketConfig {
            trials: self.trials,
            seed: self.seed,
            outer: split,
            inner: split,
            kernel: self.kernel_control()?,
            sampler: SamplerConfig { seed: self.seed, ..SamplerConfig::default() },
        })
    }

    /// Cartesian product in the order `n`, `alpha`, `p`, `m` (last varies fastest).
    pub fn cases(&self) -> Vec<ParamCase> {
        let mut out = vec![];
        for &n in &self.n {
            for &alpha in &self.alpha {
                for &p in &self.p {
                    let ms: Vec<Option<u32>> =
                        if self.m.is_empty() { vec![None] } else { self.m.iter().map(|&m| Some(m)).collect() };
                    for m in ms {
                        out.push(ParamCase { n, alpha, p, m, params: admissible(n, alpha, p, m) });
                    }
                }
            }
        }
        out
    }
}

fn admissible(n: usize, alpha: f64, p: f64, m: Option<u32>) -> std::result::Result<Params, String> {
    let build = || -> Result<Params> {
        let mut params = Params::new(n, alpha, p, 0)?;
        params.m = m.unwrap_or_else(|| smallest_admissible_order(n, p));
        params.require_besov_admissible()?;
        Ok(params)
    };
    build().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub format_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
}

impl ReportHeader {
    fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
        }
    }
}

/// A rendered report and the exit code of the command that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub body: String,
    pub exit_code: i32,
}

fn json_body<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_body(header: &ReportHeader, columns: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut out = format!("# {} {} csv v{}\n", header.tool, header.command, header.format_version);
    writeln!(out, "# config: {}", serde_json::to_string(&header.config)?).expect("write to String");
    let mut w = csv::Writer::from_writer(vec![]);
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(columns).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?);
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn sweep_exit(ok: usize, total: usize) -> i32 {
    if total == 0 {
        EXIT_USAGE
    } else if ok == 0 {
        EXIT_HARD_FAILURE
    } else {
        EXIT_OK
    }
}

/// Every named constant for one Params value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub schur: SchurReport,
    pub a: ConstantReport,
    pub beta: ConstantReport,
    pub p_lower: PLowerReport,
    pub multi_index_count: f64,
}

pub fn constant_set(params: &Params) -> Result<ConstantSet> {
    Ok(ConstantSet {
        schur: schur_upper_constant(params)?,
        a: lower_constant_t(params)?,
        beta: beta_report(params)?,
        p_lower: lower_constant_p(params)?,
        multi_index_count: multi_index_count(params.n, params.m),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub m: Option<u32>,
    pub params: Option<Params>,
    pub error: Option<String>,
    pub constants: Option<ConstantSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub header: ReportHeader,
    pub rows: Vec<ConstantsRow>,
}

pub fn constants_report(config: &RunConfig) -> ConstantsReport {
    let rows = config
        .cases()
        .into_iter()
        .map(|c| {
            let (params, error, constants) = match c.params.clone() {
                Err(e) => (None, Some(e), None),
                Ok(pr) => match constant_set(&pr) {
                    Ok(set) => (Some(pr), None, Some(set)),
                    Err(e) => (Some(pr), Some(e.to_string()), None),
                },
            };
            ConstantsRow { n: c.n, alpha: c.alpha, p: c.p, m: c.m, params, error, constants }
        })
        .collect();
    ConstantsReport { header: ReportHeader::new("constants", config), rows }
}

const CONSTANTS_COLUMNS: [&str; 21] = [
    "n",
    "alpha",
    "p",
    "m",
    "error",
    "schur_exponent",
    "d_displayed",
    "d_proof_assembled",
    "d_tilde_displayed",
    "jensen_holds",
    "a_displayed",
    "a_proof_assembled",
    "a_corrected",
    "a_rel_discrepancy",
    "b_displayed",
    "b_proof_assembled",
    "b_corrected",
    "b_rel_discrepancy",
    "m_alpha_p_printed",
    "m_alpha_p_exact",
    "multi_index_count",
];

pub fn cmd_constants(config: &RunConfig) -> Result<CommandOutput> {
    config.validate()?;
    let report = constants_report(config);
    let total = report.rows.len();
    let ok = report.rows.iter().filter(|r| r.constants.is_some()).count();
    let body = match config.format {
        OutputFormat::Json => json_body(&report)?,
        OutputFormat::Csv => {
            let rows = report
                .rows
                .iter()
                .map(|r| {
                    let m = r.params.map(|p| p.m).or(r.m).map(|m| m.to_string()).unwrap_or_default();
                    let mut row = vec![r.n.to_string(), num(r.alpha), num(r.p), m, r.error.clone().unwrap_or_default()];
                    match &r.constants {
                        Some(c) => row.extend([
                            num(c.schur.schur_exponent),
                            num(c.schur.d.displayed),
                            num(c.schur.d.proof_assembled),
                            num(c.schur.d_tilde.displayed),
                            c.schur.jensen_holds.to_string(),
                            num(c.a.displayed),
                            num(c.a.proof_assembled),
                            opt(c.a.corrected),
                            num(c.a.rel_discrepancy),
                            num(c.p_lower.b.displayed),
                            num(c.p_lower.b.proof_assembled),
                            opt(c.p_lower.b.corrected),
                            num(c.p_lower.b.rel_discrepancy),
                            num(c.p_lower.m_alpha_p.displayed),
                            opt(c.p_lower.m_alpha_p.corrected),
                            num(c.multi_index_count),
                        ]),
                        None => row.extend(std::iter::repeat_n(String::new(), CONSTANTS_COLUMNS.len() - 5)),
                    }
                    row
                })
                .collect();
            csv_body(&report.header, &CONSTANTS_COLUMNS, rows)?
        }
    };
    Ok(CommandOutput { body, exit_code: sweep_exit(ok, total) })
}

/// All constant reports of the sweep; inadmissible points are left out.
pub fn audit_reports(config: &RunConfig) -> Vec<ConstantReport> {
    let mut out = vec![];
    for c in config.cases() {
        let Ok(pr) = c.params else { continue };
        let Ok(set) = constant_set(&pr) else { continue };
        out.extend([set.schur.d, set.schur.d_tilde, set.a, set.p_lower.b, set.beta, set.p_lower.m_alpha_p]);
    }
    out
}

/// Auditing never gates: the exit code is always 0.
pub fn cmd_audit(config: &RunConfig) -> Result<CommandOutput> {
    let reports = audit_reports(config);
    let body = match config.format {
        OutputFormat::Json => json_body(&reports)?,
        OutputFormat::Csv => {
            let header = ReportHeader::new("audit", config);
            let rows = reports
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.inputs.n.to_string(),
                        num(r.inputs.alpha),
                        num(r.inputs.p),
                        r.inputs.m.to_string(),
                        num(r.displayed),
                        num(r.proof_assembled),
                        opt(r.corrected),
                        num(r.rel_discrepancy),
                    ]
                })
                .collect();
            csv_body(
                &header,
                &["name", "n", "alpha", "p", "m", "displayed", "proof_assembled", "corrected", "rel_discrepancy"],
                rows,
            )?
        }
    };
    Ok(CommandOutput { body, exit_code: EXIT_OK })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub m: Option<u32>,
    pub error: Option<String>,
    pub bracket: Option<NormBracket>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub header: ReportHeader,
    pub operator: Operator,
    pub rows: Vec<BracketRow>,
}

pub fn bracket_report(config: &RunConfig, operator: Operator) -> Result<BracketReport> {
    config.validate()?;
    let bc = config.bracket_config()?;
    let rows = config
        .cases()
        .into_iter()
        .map(|c| {
            let (error, bracket) = match c.params.clone().map_err(Error::InvalidParams).and_then(|pr| bracket_norm(operator, &pr, &bc)) {
                Ok(b) => (None, Some(b)),
                Err(e) => (Some(e.to_string()), None),
            };
            BracketRow { n: c.n, alpha: c.alpha, p: c.p, m: c.params.ok().map(|p| p.m).or(c.m), error, bracket }
        })
        .collect();
    let command = format!("bracket {operator}");
    Ok(BracketReport { header: ReportHeader::new(&command, config), operator, rows })
}

const BRACKET_COLUMNS: [&str; 20] = [
    "operator",
    "n",
    "alpha",
    "p",
    "m",
    "error",
    "lower_paper_displayed",
    "lower_paper_proof_assembled",
    "lower_paper_corrected",
    "lower_empirical",
    "lower_empirical_margined",
    "upper_paper_displayed",
    "upper_paper_proof_assembled",
    "upper_certified",
    "paper_witness_quotient",
    "quad_error_est",
    "conjecture_ratio",
    "trials",
    "best_witness_kind",
    "findings",
];

pub fn cmd_bracket(config: &RunConfig, operator: Operator) -> Result<CommandOutput> {
    let report = bracket_report(config, operator)?;
    let total = report.rows.len();
    let ok = report.rows.iter().filter(|r| r.bracket.is_some()).count();
    let body = match config.format {
        OutputFormat::Json => json_body(&report)?,
        OutputFormat::Csv => {
            let rows = report
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![
                        operator.to_string(),
                        r.n.to_string(),
                        num(r.alpha),
                        num(r.p),
                        r.m.map(|m| m.to_string()).unwrap_or_default(),
                        r.error.clone().unwrap_or_default(),
                    ];
                    match &r.bracket {
                        Some(b) => row.extend([
                            num(b.lower_paper.displayed),
                            num(b.lower_paper.proof_assembled),
                            opt(b.lower_paper.corrected),
                            num(b.lower_empirical),
                            num(b.lower_empirical_margined),
                            num(b.upper_paper.displayed),
                            num(b.upper_paper.proof_assembled),
                            b.upper_paper.certified.to_string(),
                            num(b.paper_witness_quotient),
                            num(b.quad_error_est),
                            opt(b.conjecture_ratio),
                            b.trials.to_string(),
                            serde_json::to_value(&b.best_witness.kind)?["kind"].as_str().unwrap_or_default().to_string(),
                            b.findings.iter().map(|f| f.code.as_str()).collect::<Vec<_>>().join(";"),
                        ]),
                        None => row.extend(std::iter::repeat_n(String::new(), BRACKET_COLUMNS.len() - 6)),
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            csv_body(&report.header, &BRACKET_COLUMNS, rows)?
        }
    };
    Ok(CommandOutput { body, exit_code: sweep_exit(ok, total) })
}

/// One verification check. Hard checks gate the exit code; soft ones record
/// findings about the paper's constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub params: Option<Params>,
    pub hard: bool,
    pub passed: bool,
    /// Largest residual, or the measured quantity for threshold checks.
    pub value: f64,
    pub tolerance: f64,
    pub points: usize,
    pub detail: String,
}

impl Check {
    fn residual(name: &str, params: Option<Params>, value: f64, tolerance: f64, points: usize, detail: String) -> Self {
        Self { name: name.into(), params, hard: true, passed: value < tolerance, value, tolerance, points, detail }
    }

    fn flag(name: &str, params: Option<Params>, passed: bool, value: f64, detail: String) -> Self {
        Self { name: name.into(), params, hard: true, passed, value, tolerance: 0.0, points: 1, detail }
    }

    fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    fn error(name: &str, params: Option<Params>, e: &Error) -> Self {
        Self::flag(name, params, false, f64::NAN, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub header: ReportHeader,
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub hard_failures: usize,
    pub soft_failures: usize,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.checks.is_empty() {
            EXIT_USAGE
        } else if self.hard_failures > 0 {
            EXIT_HARD_FAILURE
        } else {
            EXIT_OK
        }
    }

    pub fn check(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.name == name)
    }
}

/// The `(a, b, c)` grid of the hypergeometric checks: 50 triples with
/// `c - a - b > 0`.
pub fn hypergeometric_grid() -> Vec<(f64, f64, f64)> {
    let mut out = vec![];
    for a in [0.1, 0.5, 1.0, 1.5, 2.0] {
        for b in [0.25, 0.75] {
            for d in [0.5, 1.0, 1.5, 2.5, 3.5] {
                out.push((a, b, a + b + d));
            }
        }
    }
    out
}

pub const DERIVATIVE_TS: [f64; 3] = [0.2, 0.5, 0.8];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn worst<T>(items: impl IntoIterator<Item = (f64, T)>) -> (f64, Option<T>, usize) {
    let mut best = (f64::NEG_INFINITY, None, 0);
    for (v, t) in items {
        best.2 += 1;
        if v > best.0 || v.is_nan() {
            best.0 = v;
            best.1 = Some(t);
        }
    }
    best
}

fn identities_checks(out: &mut Vec<Check>) {
    let ctl = SeriesControl::default();
    let grid = hypergeometric_grid();
    let gauss: Result<Vec<(f64, (f64, f64, f64))>> = grid
        .iter()
        .map(|&(a, b, c)| Ok((rel(gauss_value(a, b, c)?, series_at_one(a, b, c, GAUSS_SERIES_TERMS)?), (a, b, c))))
        .collect();
    out.push(match gauss {
        Ok(v) => {
            let (r, at, k) = worst(v);
            Check::residual("hyp2f1_gauss_limit", None, r, GAUSS_LIMIT_TOL, k, format!("worst at (a, b, c) = {at:?}"))
        }
        Err(e) => Check::error("hyp2f1_gauss_limit", None, &e),
    });
    let h = DERIVATIVE_FD_STEP;
    let deriv: Result<Vec<(f64, (f64, f64, f64, f64))>> = grid
        .iter()
        .flat_map(|&(a, b, c)| DERIVATIVE_TS.iter().map(move |&t| (a, b, c, t)))
        .map(|(a, b, c, t)| {
            let f = |t: f64| hyp2f1(&Hyp2F1Args::new(a, b, c, t)?, &ctl);
            let fd = (f(t + h)? - f(t - h)?) / (2.0 * h);
            Ok((rel(hyp2f1_derivative(a, b, c, t, &ctl)?, fd), (a, b, c, t)))
        })
        .collect();
    out.push(match deriv {
        Ok(v) => {
            let (r, at, k) = worst(v);
            Check::residual("hyp2f1_derivative_fd", None, r, DERIVATIVE_FD_TOL, k, format!("worst at (a, b, c, t) = {at:?}"))
        }
        Err(e) => Check::error("hyp2f1_derivative_fd", None, &e),
    });
    let euler: Result<Vec<_>> = grid
        .iter()
        .flat_map(|&(a, b, c)| DERIVATIVE_TS.iter().map(move |&t| (a, b, c, t)))
        .map(|(a, b, c, t)| euler_identity_check(a, b, c, t, &ctl))
        .collect();
    match euler {
        Ok(v) => {
            let (r, at, k) = worst(v.iter().map(|e| (e.standard_rel_residual, (e.a, e.b, e.c, e.t))));
            out.push(Check::residual("euler_transformation", None, r, 1e-10, k, format!("worst at (a, b, c, t) = {at:?}")));
            let (r, at, k) = worst(v.iter().map(|e| (e.printed_rel_residual, (e.a, e.b, e.c, e.t))));
            out.push(
                Check::residual("euler_transformation_printed_form", None, r, 1e-10, k, format!("worst at (a, b, c, t) = {at:?}"))
                    .soft(),
            );
        }
        Err(e) => out.push(Check::error("euler_transformation", None, &e)),
    }
    for n in [2usize, 3] {
        let name = format!("sphere_identity_n{n}");
        let nf = n as f64;
        let run = || -> Result<Check> {
            let rule = sphere_identity_rule(n, SPHERE_IDENTITY_ORDER)?;
            let mut rows = vec![];
            for c in [0.5, 1.0, nf - 1.0, nf + 0.5] {
                for &x in &SPHERE_IDENTITY_XS {
                    rows.push((sphere_identity_check(n, c, x, &rule)?, (c, x)));
                }
            }
            let (r, at, k) = worst(rows);
            Ok(Check::residual(&name, None, r, SPHERE_IDENTITY_TOL, k, format!("worst at (c, |x|) = {at:?}")))
        };
        out.push(run().unwrap_or_else(|e| Check::error(&name, None, &e)));
    }
}

/// `π^{n/2} Γ(α) / Γ(n/2 + α)`, evaluated directly.
fn lemma_min_reference(n: usize, alpha: f64) -> Result<f64> {
    let h = n as f64 / 2.0;
    Ok((h * PI.ln() + ln_gamma(alpha)? - ln_gamma(h + alpha)?).exp())
}

fn lemma1_checks(out: &mut Vec<Check>) {
    let ctl = SeriesControl::default();
    let split = lemma_split();
    for n in [2usize, 3] {
        let grid_name = format!("lemma1_grid_n{n}");
        match lemma1_grid(n, &split) {
            Ok(rows) => {
                let skipped = LEMMA_ALPHAS.len() * LEMMA_SS.len() * LEMMA_XS.len() - rows.len();
                let (r, at, k) = worst(rows.iter().map(|w| (w.rel_err, (w.alpha, w.s, w.x))));
                out.push(Check::residual(
                    &grid_name,
                    None,
                    r,
                    LEMMA_GRID_TOL,
                    k,
                    format!("worst at (alpha, s, |x|) = {at:?}; {skipped} points with s + alpha <= -1 skipped"),
                ));
                let mut mono = true;
                for pair in rows.windows(2) {
                    if pair[0].alpha == pair[1].alpha && pair[0].s == pair[1].s && pair[1].quad < pair[0].quad {
                        mono = false;
                    }
                }
                out.push(Check::flag(
                    &format!("lemma1_quadrature_monotone_n{n}"),
                    None,
                    mono,
                    if mono { 1.0 } else { 0.0 },
                    "quadrature values nondecreasing in |x| on every grid pair".into(),
                ));
            }
            Err(e) => out.push(Check::error(&grid_name, None, &e)),
        }
        let run = || -> Result<Vec<Check>> {
            let mut min_closed = vec![];
            let mut min_quad = vec![];
            let mut limit = vec![];
            let mut gauss = vec![];
            let mut mono = true;
            let mut xs = LEMMA_XS.to_vec();
            xs.extend([0.99, 0.999, 1.0 - 1e-6]);
            for &alpha in &LEMMA_ALPHAS {
                let reference = lemma_min_reference(n, alpha)?;
                for &s in &LEMMA_SS {
                    if !(s + alpha > -1.0) {
                        continue;
                    }
                    let at0 = IArgs::new(alpha, s, 0.0)?;
                    min_closed.push((rel(i_closed_form(n, &at0, &ctl)?, reference), (alpha, s)));
                    min_quad.push((rel(i_quadrature(n, &at0, &split)?, reference), (alpha, s)));
                    let c = c_alpha_s(n, alpha, s)?;
                    let near = i_closed_form(n, &at0.with_x(1.0 - LEMMA_LIMIT_GAP), &ctl)?;
                    limit.push((rel(near, c), (alpha, s)));
                    gauss.push((rel(lemma1_max_via_gauss(n, alpha, s)?, c), (alpha, s)));
                    mono &= closed_form_is_monotone(n, alpha, s, &xs)?;
                }
            }
            let (r1, a1, k1) = worst(min_closed);
            let (r2, a2, k2) = worst(min_quad);
            let (r3, a3, k3) = worst(limit);
            let (r4, a4, k4) = worst(gauss);
            Ok(vec![
                Check::residual(&format!("lemma1_min_closed_n{n}"), None, r1, LEMMA_MIN_CLOSED_TOL, k1, format!("worst at (alpha, s) = {a1:?}")),
                Check::residual(&format!("lemma1_min_quadrature_n{n}"), None, r2, LEMMA_MIN_QUAD_TOL, k2, format!("worst at (alpha, s) = {a2:?}")),
                Check::residual(
                    &format!("lemma1_boundary_limit_n{n}"),
                    None,
                    r3,
                    LEMMA_LIMIT_TOL,
                    k3,
                    format!("closed form at |x| = 1 - {LEMMA_LIMIT_GAP:e}; worst at (alpha, s) = {a3:?}"),
                ),
                Check::residual(&format!("lemma1_max_via_gauss_n{n}"), None, r4, 1e-10, k4, format!("worst at (alpha, s) = {a4:?}")),
                Check::flag(&format!("lemma1_closed_form_monotone_n{n}"), None, mono, if mono { 1.0 } else { 0.0 }, format!("|x| in {xs:?}")),
            ])
        };
        match run() {
            Ok(v) => out.extend(v),
            Err(e) => out.push(Check::error(&format!("lemma1_constants_n{n}"), None, &e)),
        }
    }
}

fn kernels_checks(config: &RunConfig, params: &[Params], out: &mut Vec<Check>) -> Result<()> {
    let control = config.kernel_control()?;
    let mut seen: Vec<(usize, f64)> = vec![];
    for pr in params {
        if seen.contains(&(pr.n, pr.alpha)) {
            continue;
        }
        seen.push((pr.n, pr.alpha));
        let pr = Some(*pr);
        let p = pr.unwrap();
        match reproducing_check(&p, REPRODUCING_MAX_DEGREE, REPRODUCING_POINTS, REPRODUCING_MAX_RADIUS, &reproducing_split(), control, config.seed) {
            Ok(r) => out.push(Check::residual(
                "kernel_reproducing",
                pr,
                r.sup_error,
                REPRODUCING_TOL,
                r.points,
                format!(
                    "degrees 0..={REPRODUCING_MAX_DEGREE}, |x| <= {REPRODUCING_MAX_RADIUS}, sup error by degree {:?}, kernel degree <= {}",
                    r.sup_error_by_degree, r.max_kernel_degree
                ),
            )),
            Err(e) => out.push(Check::error("kernel_reproducing", pr, &e)),
        }
        let series = KernelSeries::new(&p, control);
        let sym: Result<Vec<(f64, usize)>> = (0..20)
            .map(|i| {
                let (x, y) = growth_sample(p.n, config.seed, i, 0.9);
                Ok((rel(series.eval(&x, &y)?.value, series.eval(&y, &x)?.value), i))
            })
            .collect();
        out.push(match sym {
            Ok(v) => {
                let (r, _, k) = worst(v);
                Check::residual("kernel_symmetry", pr, r, 1e-12, k, "R(x, y) = R(y, x) on seeded pairs with |x|, |y| <= 0.9".into())
            }
            Err(e) => Check::error("kernel_symmetry", pr, &e),
        });
        let sampler = SamplerConfig { seed: config.seed, ..SamplerConfig::default() };
        out.push(match estimate_growth_constant(&series, p.m, &sampler) {
            Ok(g) => Check::flag(
                "growth_constant",
                pr,
                g.empirical_value.is_finite() && g.empirical_value > 0.0 && g.skipped == 0,
                g.empirical_value,
                format!("{} samples, {} beyond the degree cap", g.sample_count, g.skipped),
            )
            .soft(),
            Err(e) => Check::error("growth_constant", pr, &e).soft(),
        });
    }
    Ok(())
}

fn operators_checks(config: &RunConfig, params: &[Params], out: &mut Vec<Check>) -> Result<()> {
    let mut bc = config.bracket_config()?;
    bc.trials = 0;
    for p in params {
        let pr = Some(*p);
        match TestFunction::psi(p).and_then(|psi| tau_norm(&psi, p.p, &psi_split())) {
            Ok(v) => out.push(Check::residual("psi_unit_norm", pr, (v - 1.0).abs(), PSI_NORM_TOL, 1, format!("norm {v}"))),
            Err(e) => out.push(Check::error("psi_unit_norm", pr, &e)),
        }
        let split = config.split()?;
        let fm = (|| -> Result<(f64, PLowerReport)> {
            Ok((besov_norm_of_image(p, &TestFunction::f_m(p), &split)?, lower_constant_p(p)?))
        })();
        match fm {
            Ok((v, b)) => {
                let corrected = b.b.corrected.unwrap_or(f64::NAN);
                out.push(Check::residual("p_image_corrected_value", pr, rel(v, corrected), P_IMAGE_TOL, 1, format!("norm {v}, corrected {corrected}")));
                out.push(
                    Check::residual(
                        "p_image_proof_value",
                        pr,
                        rel(v, b.b.proof_assembled),
                        1e-3,
                        1,
                        format!("norm {v}, proof value {}, ratio {}", b.b.proof_assembled, v / b.b.proof_assembled),
                    )
                    .soft(),
                );
            }
            Err(e) => out.push(Check::error("p_image_corrected_value", pr, &e)),
        }
        match bracket_norm(Operator::T, p, &bc) {
            Ok(b) => {
                out.push(Check::flag(
                    "t_witness_lower_positive",
                    pr,
                    b.lower_empirical > 0.0 && b.lower_empirical.is_finite(),
                    b.lower_empirical,
                    format!("margined {}", b.lower_empirical_margined),
                ));
                for (code, reference) in [
                    ("exceeds_displayed_upper", b.upper_paper.displayed),
                    ("exceeds_proof_assembled_upper", b.upper_paper.proof_assembled),
                ] {
                    let violated = b.lower_empirical_margined > reference;
                    let reported = b.findings.iter().any(|f| f.code == code);
                    out.push(Check::flag(
                        "t_violation_reported",
                        pr,
                        violated == reported,
                        b.lower_empirical_margined,
                        format!("{code}: violated {violated}, finding present {reported}, reference {reference}"),
                    ));
                    out.push(
                        Check::flag(&format!("t_within_{code}"), pr, !violated, b.lower_empirical_margined, format!("upper {reference}")).soft(),
                    );
                }
            }
            Err(e) => out.push(Check::error("t_witness_lower_positive", pr, &e)),
        }
        match schur_upper_constant(p) {
            Ok(s) => out.push(Check::flag("jensen_direction", pr, s.jensen_holds, s.jensen_gap, format!("D_tilde {} <= D {}", s.d_tilde.displayed, s.d.displayed))),
            Err(e) => out.push(Check::error("jensen_direction", pr, &e)),
        }
        match stirling_limit_probe(p.n, p.alpha, p.m, &STIRLING_PS) {
            Ok(s) => {
                out.push(Check::flag("stirling_increasing_tail", pr, s.increasing_tail, s.values[s.values.len() - 1], format!("D at p = {:?}: {:?}", s.ps, s.values)));
                out.push(Check::residual(
                    "stirling_slope",
                    pr,
                    s.slope_rel_err,
                    STIRLING_SLOPE_TOL,
                    s.ps.len(),
                    format!("tail slope {}, limit {}", s.tail_slope, s.stirling_slope),
                ));
            }
            Err(e) => out.push(Check::error("stirling_increasing_tail", pr, &e)),
        }
    }
    Ok(())
}

pub fn verify_report(config: &RunConfig, suite: Suite) -> Result<VerifyReport> {
    config.validate()?;
    let cases = config.cases();
    let mut checks = vec![];
    let param_suite = matches!(suite, Suite::Kernels | Suite::Operators);
    let valid: Vec<Params> = cases.iter().filter_map(|c| c.params.clone().ok()).collect();
    if !cases.is_empty() {
        match suite {
            Suite::Identities => identities_checks(&mut checks),
            Suite::Lemma1 => lemma1_checks(&mut checks),
            Suite::Kernels => kernels_checks(config, &valid, &mut checks)?,
            Suite::Operators => operators_checks(config, &valid, &mut checks)?,
        }
        if param_suite && !valid.is_empty() {
            for c in cases.iter().filter(|c| c.params.is_err()) {
                let detail = c.params.clone().err().unwrap_or_default();
                checks.push(Check::flag("params_admissible", None, false, f64::NAN, format!("(n, alpha, p, m) = ({}, {}, {}, {:?}): {detail}", c.n, c.alpha, c.p, c.m)).soft());
            }
        }
    }
    let hard_failures = checks.iter().filter(|c| c.hard && !c.passed).count();
    let soft_failures = checks.iter().filter(|c| !c.hard && !c.passed).count();
    Ok(VerifyReport { header: ReportHeader::new(&format!("verify {}", suite_name(suite)), config), suite, checks, hard_failures, soft_failures })
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Identities => "identities",
        Suite::Lemma1 => "lemma1",
        Suite::Kernels => "kernels",
        Suite::Operators => "operators",
    }
}

pub fn cmd_verify(config: &RunConfig, suite: Suite) -> Result<CommandOutput> {
    let report = verify_report(config, suite)?;
    let exit_code = report.exit_code();
    let body = match config.format {
        OutputFormat::Json => json_body(&report)?,
        OutputFormat::Csv => {
            let rows = report
                .checks
                .iter()
                .map(|c| {
                    let (n, alpha, p, m) = match c.params {
                        Some(pr) => (pr.n.to_string(), num(pr.alpha), num(pr.p), pr.m.to_string()),
                        None => Default::default(),
                    };
                    vec![
                        c.name.clone(),
                        n,
                        alpha,
                        p,
                        m,
                        c.hard.to_string(),
                        c.passed.to_string(),
                        num(c.value),
                        num(c.tolerance),
                        c.points.to_string(),
                        c.detail.clone(),
                    ]
                })
                .collect();
            csv_body(
                &report.header,
                &["check", "n", "alpha", "p", "m", "hard", "passed", "value", "tolerance", "points", "detail"],
                rows,
            )?
        }
    };
    Ok(CommandOutput { body, exit_code })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> RunConfig {
        RunConfig::default()
    }

    #[test]
    fn config_accepts_scalars_and_lists() {
        let c = RunConfig::from_json(r#"{"n": 3, "alpha": [0.5, 1.0], "p": 2.0, "trials": 4}"#).unwrap();
        assert_eq!(c.n, vec![3]);
        assert_eq!(c.alpha, vec![0.5, 1.0]);
        assert_eq!(c.trials, 4);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn config_round_trips() {
        let c = RunConfig { alpha: vec![0.5, 2.0], m: vec![2], format: OutputFormat::Csv, ..single() };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&s).unwrap(), c);
    }

    #[test]
    fn smallest_order_fills_missing_m() {
        let c = RunConfig { n: vec![3], p: vec![1.5, 4.0], ..single() };
        let ms: Vec<u32> = c.cases().iter().map(|k| k.params.clone().unwrap().m).collect();
        assert_eq!(ms, vec![2, 1]);
    }

    #[test]
    fn single_params_gives_one_finite_row() {
        let r = constants_report(&single());
        assert_eq!(r.rows.len(), 1);
        let c = r.rows[0].constants.as_ref().unwrap();
        assert!(c.schur.d.is_finite() && c.a.is_finite() && c.p_lower.b.is_finite());
    }

    #[test]
    fn sweep_is_a_cartesian_product() {
        let c = RunConfig { alpha: vec![0.5, 1.0, 2.0], p: vec![2.0, 4.0], ..single() };
        assert_eq!(constants_report(&c).rows.len(), 6);
    }

    #[test]
    fn inadmissible_rows_are_errors() {
        let c = RunConfig { n: vec![3], m: vec![1, 2], ..single() };
        let out = cmd_constants(&c).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        let r = constants_report(&c);
        assert!(r.rows[0].error.is_some() && r.rows[1].constants.is_some());
        let all_bad = RunConfig { n: vec![3], m: vec![1], ..single() };
        assert_eq!(cmd_constants(&all_bad).unwrap().exit_code, EXIT_HARD_FAILURE);
    }

    #[test]
    fn empty_sweep_means_nothing_ran() {
        let c = RunConfig { p: vec![], ..single() };
        assert_eq!(cmd_constants(&c).unwrap().exit_code, EXIT_USAGE);
        assert_eq!(cmd_verify(&c, Suite::Identities).unwrap().exit_code, EXIT_USAGE);
        assert_eq!(cmd_audit(&c).unwrap().exit_code, EXIT_OK);
    }

    #[test]
    fn constants_are_byte_identical() {
        let c = RunConfig { alpha: vec![0.5, 1.0], ..single() };
        assert_eq!(cmd_constants(&c).unwrap(), cmd_constants(&c).unwrap());
    }

    #[test]
    fn csv_has_versioned_header() {
        let c = RunConfig { format: OutputFormat::Csv, ..single() };
        let body = cmd_constants(&c).unwrap().body;
        let mut lines = body.lines();
        assert_eq!(lines.next().unwrap(), "# bergnorm constants csv v1");
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert!(lines.next().unwrap().starts_with("n,alpha,p,m,error,schur_exponent"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn audit_is_a_bare_array() {
        let v: serde_json::Value = serde_json::from_str(&cmd_audit(&single()).unwrap().body).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 6);
        assert!(arr.iter().all(|r| r["rel_discrepancy"].is_number()));
    }

    #[test]
    fn parsing_suites_and_formats() {
        assert_eq!("Lemma1".parse::<Suite>().unwrap(), Suite::Lemma1);
        assert!("lemma2".parse::<Suite>().is_err());
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
    }

    #[test]
    fn hypergeometric_grid_is_admissible() {
        let g = hypergeometric_grid();
        assert_eq!(g.len(), 50);
        assert!(g.iter().all(|&(a, b, c)| c - a - b > 0.0));
    }

    #[test]
    fn identities_suite_passes() {
        let r = verify_report(&single(), Suite::Identities).unwrap();
        assert_eq!(r.hard_failures, 0, "{:#?}", r.checks);
    }

    #[test]
    fn witness_only_bracket_config() {
        let c = RunConfig { trials: 0, ..single() };
        let out = cmd_bracket(&c, Operator::T).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        let r: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        assert_eq!(r["rows"][0]["bracket"]["trials"], 0);
        assert_eq!(r["header"]["config"]["trials"], 0);
    }
}
