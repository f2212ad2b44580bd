//! Command-line front end: CSV ingestion, fitting and reporting, and Monte
//! Carlo runs. `main.rs` only parses arguments and maps errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::{epsilon_upper, sigma_ustar_interval};
use crate::effects::pe_bounds;
use crate::error::{Error, Result};
use crate::estimate_gaussian::{self, FitOptions};
use crate::inference::{ci_effect_given, ci_sigma_ustar2, BonferroniConfig};
use crate::mixture::{fit_mixture, mixture_sigma_ustar_interval, Component, MixtureOptions};
use crate::model::{validate, Dataset, EffectKind, EffectQuery, Estimator, ModelKind, ReducedFormFit};
use crate::simulate::{replication_rng, run_mc, sample_with, DgpConfig, McConfig, McResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "ivbounds", version, about = "Bounds and confidence intervals for partial effects in IV-Tobit/IV-Probit models with a mismeasured regressor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model to a CSV file and report parameters, bounds and CIs.
    Fit(FitArgs),
    /// Run the Monte Carlo experiment and write CSV tables.
    Simulate(SimulateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Tobit,
    Probit,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Tobit => ModelKind::Tobit,
            KindArg::Probit => ModelKind::Probit,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorArg {
    TwoStep,
    Mle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EffectArg {
    PeMean,
    PeProb,
    ApeMean,
    ApeProb,
}

impl From<EffectArg> for EffectKind {
    fn from(e: EffectArg) -> Self {
        match e {
            EffectArg::PeMean => EffectKind::PeTobitMean,
            EffectArg::PeProb => EffectKind::PeProbability,
            EffectArg::ApeMean => EffectKind::ApeTobitMean,
            EffectArg::ApeProb => EffectKind::ApeProbability,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Input CSV with a header row.
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Outcome column.
    #[arg(long)]
    pub y: String,
    /// Mismeasured endogenous regressor column.
    #[arg(long)]
    pub x: String,
    /// Exogenous covariate columns (include an intercept column explicitly).
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<String>,
    /// Instrument columns.
    #[arg(long, value_delimiter = ',', required = true)]
    pub z: Vec<String>,
    /// Effects to report (default: the mean effects for Tobit, probability effects for Probit).
    #[arg(long, value_delimiter = ',', value_enum)]
    pub effects: Vec<EffectArg>,
    /// PE evaluation point: `means`, `row:I` or `values:X,W1,...`.
    #[arg(long, default_value = "means")]
    pub at: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Step-one level; defaults to alpha / 10.
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long, value_enum, default_value = "mle")]
    pub estimator: EstimatorArg,
    /// Also fit a K-component mixed Tobit and report its PE bounds.
    #[arg(long)]
    pub mixture_k: Option<usize>,
    /// Random starts for the mixture fit.
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the machine-readable report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub out_format: OutFormat,
    /// Report schema version (only 1 is supported).
    #[arg(long, default_value_t = FORMAT_VERSION)]
    pub format_version: u32,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignArg {
    Default,
    Custom,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// `default` is (theta1, theta2, sigma_v*, sigma_u*, sigma_eps, pi1, pi2) = (2, 1, 1, 1, 1, 1, 0);
    /// `custom` applies the parameter flags below on top of it.
    #[arg(long, value_enum, default_value = "default")]
    pub design: DesignArg,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: Option<f64>,
    #[arg(long)]
    pub sigma_vstar: Option<f64>,
    #[arg(long)]
    pub sigma_ustar: Option<f64>,
    #[arg(long)]
    pub sigma_eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pi1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pi2: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "tobit")]
    pub kind: KindArg,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.9,-0.6,-0.3,0,0.3,0.6,0.9")]
    pub rho_grid: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub outdir: PathBuf,
    /// Also write the first replication's data for every rho as `data_rho<i>.csv`.
    #[arg(long)]
    pub export_data: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub alpha1: Option<f64>,
}

/// A dataset read from CSV together with its column names.
#[derive(Debug, Clone)]
pub struct NamedData {
    pub data: Dataset,
    pub w_names: Vec<String>,
    pub z_names: Vec<String>,
}

fn parse_cell(raw: &str, row: usize, col: &str) -> Result<f64> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .map_err(|_| Error::Input(format!("row {row}, column '{col}': cannot parse '{t}' as a number")))
}

/// Read the named columns from an RFC-4180 CSV file with a header row.
pub fn read_csv(path: &Path, y: &str, x: &str, w: &[String], z: &[String]) -> Result<NamedData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        let hits: Vec<usize> = headers.iter().enumerate().filter(|(_, h)| *h == name).map(|(i, _)| i).collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::Input(format!(
                "column '{name}' not found in header (available: {})",
                headers.join(", ")
            ))),
            _ => Err(Error::Input(format!("column '{name}' appears more than once in header"))),
        }
    };
    let iy = find(y)?;
    let ix = find(x)?;
    let iw: Vec<usize> = w.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let iz: Vec<usize> = z.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let (mut ys, mut xs, mut ws, mut zs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = |i: usize| parse_cell(rec.get(i).unwrap_or(""), r + 1, &headers[i]);
        ys.push(cell(iy)?);
        xs.push(cell(ix)?);
        for &i in &iw {
            ws.push(cell(i)?);
        }
        for &i in &iz {
            zs.push(cell(i)?);
        }
    }
    let n = ys.len();
    Ok(NamedData {
        data: Dataset::new(
            ys,
            xs,
            DMatrix::from_row_slice(n, iw.len(), &ws),
            DMatrix::from_row_slice(n, iz.len(), &zs),
        ),
        w_names: w.to_vec(),
        z_names: z.to_vec(),
    })
}

/// Write a dataset as `y,x,w0..,z0..`.
pub fn write_dataset_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string(), "x".to_string()];
    header.extend((0..d.d_w()).map(|k| format!("w{k}")));
    header.extend((0..d.d_z()).map(|k| format!("z{k}")));
    wtr.write_record(&header)?;
    for i in 0..d.n() {
        let mut row = vec![d.y[i].to_string(), d.x[i].to_string()];
        row.extend((0..d.d_w()).map(|k| d.w[(i, k)].to_string()));
        row.extend((0..d.d_z()).map(|k| d.z[(i, k)].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub name: String,
    pub estimate: f64,
    /// `None` for parameters fixed by normalization.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub lower: f64,
    pub upper: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ci_lower_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub kind: EffectKind,
    pub covariate: String,
    pub covariate_index: usize,
    /// Evaluation point for partial effects.
    pub at: Option<Vec<f64>>,
    pub naive: f64,
    pub naive_se: f64,
    pub naive_ci_lower: f64,
    pub naive_ci_upper: f64,
    pub lb: f64,
    pub ub: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEffectRow {
    pub kind: EffectKind,
    pub covariate: String,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub k: usize,
    pub loglik: f64,
    pub bic: f64,
    pub theta: Vec<f64>,
    pub components: Vec<Component>,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub effects: Vec<MixtureEffectRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub dropped_rows: usize,
    pub rho_uv: f64,
    pub epsilon_upper: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub estimator: Estimator,
    pub alpha: f64,
    pub alpha1: f64,
    pub parameters: Vec<ParamRow>,
    pub sigma_ustar2: SigmaReport,
    pub effects: Vec<EffectRow>,
    pub mixture: Option<MixtureReport>,
    pub diagnostics: Diagnostics,
}

impl RunReport {
    /// Whether every effect CI contains its `[LB, UB]`.
    pub fn nesting_holds(&self) -> bool {
        self.effects.iter().all(|e| e.ci_lower <= e.lb && e.ub <= e.ci_upper)
    }
}

fn evaluation_point(spec: &str, d: &Dataset) -> Result<Vec<f64>> {
    let n_cov = 1 + d.d_w();
    if spec == "means" {
        return Ok(d.covariate_means());
    }
    if let Some(i) = spec.strip_prefix("row:") {
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("--at row index '{i}' is not an integer")))?;
        if i >= d.n() {
            return Err(Error::Input(format!("--at row {i} out of range (n = {})", d.n())));
        }
        let mut h = vec![d.x[i]];
        h.extend(d.w.row(i).iter());
        return Ok(h);
    }
    if let Some(v) = spec.strip_prefix("values:") {
        let h: Vec<f64> = v
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Input(format!("--at value '{s}' is not a number"))))
            .collect::<Result<_>>()?;
        if h.len() != n_cov {
            return Err(Error::Input(format!("--at values needs {n_cov} entries (x then w), got {}", h.len())));
        }
        return Ok(h);
    }
    Err(Error::Input(format!("--at must be 'means', 'row:I' or 'values:...', got '{spec}'")))
}

/// Covariates worth reporting: `x` and every non-constant `w` column.
fn reported_covariates(nd: &NamedData) -> Vec<(usize, String)> {
    let d = &nd.data;
    let mut out = vec![(0, "x".to_string())];
    for k in 0..d.d_w() {
        let col = d.w.column(k);
        let first = col[0];
        if col.iter().any(|&v| v != first) {
            out.push((k + 1, nd.w_names[k].clone()));
        }
    }
    out
}

fn default_effects(kind: ModelKind) -> Vec<EffectKind> {
    match kind {
        ModelKind::Tobit => vec![EffectKind::PeTobitMean, EffectKind::ApeTobitMean],
        ModelKind::Probit => vec![EffectKind::PeProbability, EffectKind::ApeProbability],
    }
}

/// Run the full fitting pipeline on already-loaded data.
pub fn fit_report(args: &FitArgs, named: &NamedData) -> Result<RunReport> {
    if args.format_version != FORMAT_VERSION {
        return Err(Error::Input(format!(
            "unsupported --format-version {} (supported: {FORMAT_VERSION})",
            args.format_version
        )));
    }
    let kind: ModelKind = args.kind.into();
    let cfg = BonferroniConfig::new(args.alpha, args.alpha1)?;
    let effects: Vec<EffectKind> = if args.effects.is_empty() {
        default_effects(kind)
    } else {
        args.effects.iter().map(|&e| e.into()).collect()
    };
    if kind == ModelKind::Probit && effects.iter().any(|e| !e.is_probability()) {
        return Err(Error::Input("mean effects are not defined for Probit; use pe-prob / ape-prob".into()));
    }
    if args.mixture_k.is_some() && kind == ModelKind::Probit {
        return Err(Error::Input("the mixture model is available for Tobit only".into()));
    }

    let checked = validate(&named.data, kind)?;
    let d = &checked.dataset;
    let named = NamedData {
        data: d.clone(),
        w_names: named.w_names.clone(),
        z_names: named.z_names.clone(),
    };
    let h = evaluation_point(&args.at, d)?;

    let opts = FitOptions {
        seed: args.seed,
        ..FitOptions::default()
    };
    let estimator = match args.estimator {
        EstimatorArg::TwoStep => Estimator::TwoStep,
        EstimatorArg::Mle => Estimator::Mle,
    };
    let fit = estimate_gaussian::fit(d, kind, estimator, &opts)?;

    let ses = fit.standard_errors().ok_or(Error::MissingVcov)?;
    let parameters = fit
        .param_names(&named.w_names, &named.z_names)
        .into_iter()
        .zip(fit.to_vector())
        .zip(&ses)
        .enumerate()
        .map(|(i, ((name, estimate), &se))| ParamRow {
            name,
            estimate,
            se: (kind == ModelKind::Tobit || i != fit.idx_sigma_u2()).then_some(se),
        })
        .collect();

    let bounds = sigma_ustar_interval(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv)?;
    let ci1 = ci_sigma_ustar2(&fit, &cfg)?;
    let mut notes = Vec::new();
    if checked.dropped_rows > 0 {
        notes.push(format!("dropped {} rows with missing or non-finite values", checked.dropped_rows));
    }
    if ci1.clamped {
        notes.push("lower confidence limit for sigma_ustar2 was negative and has been set to 0".into());
    }

    let covariates = reported_covariates(&named);
    let mut rows = Vec::new();
    for &ek in &effects {
        for (j, name) in &covariates {
            let q = if ek.is_average() {
                EffectQuery::ape(ek, *j)
            } else {
                EffectQuery::pe(ek, *j, h.clone())
            };
            let e = ci_effect_given(&q, &fit, d, &cfg, ci1.interval, bounds.interval)?;
            rows.push(EffectRow {
                kind: ek,
                covariate: name.clone(),
                covariate_index: *j,
                at: q.h.clone(),
                naive: e.naive,
                naive_se: e.naive_se,
                naive_ci_lower: e.naive_ci.lo,
                naive_ci_upper: e.naive_ci.hi,
                lb: e.bounds.lower,
                ub: e.bounds.upper,
                ci_lower: e.interval.lo,
                ci_upper: e.interval.hi,
            });
        }
    }

    let mixture = match args.mixture_k {
        None => None,
        Some(k) => Some(mixture_report(d, k, args, &effects, &covariates, &h)?),
    };

    Ok(RunReport {
        format_version: FORMAT_VERSION,
        model_kind: kind,
        estimator,
        alpha: cfg.alpha,
        alpha1: cfg.alpha1,
        parameters,
        sigma_ustar2: SigmaReport {
            lower: bounds.interval.lo,
            upper: bounds.interval.hi,
            xi1: bounds.xi1,
            xi2: bounds.xi2,
            ci_lower: ci1.interval.lo,
            ci_upper: ci1.interval.hi,
            ci_lower_clamped: ci1.clamped,
        },
        effects: rows,
        mixture,
        diagnostics: Diagnostics {
            n: d.n(),
            dropped_rows: checked.dropped_rows,
            rho_uv: fit.rho_uv(),
            epsilon_upper: epsilon_upper(fit.theta1(), fit.sigma_u2, fit.sigma_v2, fit.sigma_uv)?,
            loglik: fit.loglik,
            iterations: fit.iterations,
            notes,
        },
    })
}

fn mixture_report(
    d: &Dataset,
    k: usize,
    args: &FitArgs,
    effects: &[EffectKind],
    covariates: &[(usize, String)],
    h: &[f64],
) -> Result<MixtureReport> {
    let opts = MixtureOptions {
        starts: args.starts,
        seed: args.seed,
        ..MixtureOptions::default()
    };
    let m = fit_mixture(d, k, &opts)?;
    let interval = mixture_sigma_ustar_interval(&m.params)?;
    // Only the slope vector and the total U variance (for the naive value) are used.
    let total_u2: f64 = m
        .params
        .components
        .iter()
        .map(|c| c.weight * (c.sigma_u2 + c.mu_u * c.mu_u))
        .sum();
    let proxy = ReducedFormFit {
        theta: m.params.theta.clone(),
        pi1: m.params.pi1.clone(),
        pi2: m.params.pi2.clone(),
        sigma_u2: total_u2,
        sigma_v2: 1.0,
        sigma_uv: 0.0,
        vcov: None,
        model_kind: ModelKind::Tobit,
        estimator: Estimator::Mle,
        loglik: m.loglik,
        iterations: m.iterations,
    };
    let mut rows = Vec::new();
    for &ek in effects.iter().filter(|e| !e.is_average()) {
        for (j, name) in covariates {
            let b = pe_bounds(&EffectQuery::pe(ek, *j, h.to_vec()), &proxy, interval)?;
            rows.push(MixtureEffectRow {
                kind: ek,
                covariate: name.clone(),
                lb: b.lower,
                ub: b.upper,
            });
        }
    }
    Ok(MixtureReport {
        k,
        loglik: m.loglik,
        bic: m.bic,
        theta: m.params.theta.clone(),
        components: m.params.components.clone(),
        sigma_lower: interval.lo,
        sigma_upper: interval.hi,
        effects: rows,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    section: &'a str,
    name: String,
    estimate: Option<f64>,
    se: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    ci_lower: Option<f64>,
    ci_upper: Option<f64>,
    naive_ci_lower: Option<f64>,
    naive_ci_upper: Option<f64>,
}

impl<'a> CsvRow<'a> {
    fn new(section: &'a str, name: String) -> Self {
        CsvRow {
            section,
            name,
            estimate: None,
            se: None,
            lower: None,
            upper: None,
            ci_lower: None,
            ci_upper: None,
            naive_ci_lower: None,
            naive_ci_upper: None,
        }
    }
}

/// Serialize a report as JSON (pretty, trailing newline).
pub fn report_json(r: &RunReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)? + "\n")
}

/// Serialize a report as a flat CSV table.
pub fn report_csv(r: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &r.parameters {
        w.serialize(CsvRow {
            estimate: Some(p.estimate),
            se: p.se,
            ..CsvRow::new("param", p.name.clone())
        })?;
    }
    let s = &r.sigma_ustar2;
    w.serialize(CsvRow {
        lower: Some(s.lower),
        upper: Some(s.upper),
        ci_lower: Some(s.ci_lower),
        ci_upper: Some(s.ci_upper),
        ..CsvRow::new("sigma_ustar2", "sigma_ustar2".into())
    })?;
    for e in &r.effects {
        w.serialize(CsvRow {
            estimate: Some(e.naive),
            se: Some(e.naive_se),
            lower: Some(e.lb),
            upper: Some(e.ub),
            ci_lower: Some(e.ci_lower),
            ci_upper: Some(e.ci_upper),
            naive_ci_lower: Some(e.naive_ci_lower),
            naive_ci_upper: Some(e.naive_ci_upper),
            ..CsvRow::new("effect", format!("{}:{}", e.kind.label(), e.covariate))
        })?;
    }
    if let Some(m) = &r.mixture {
        for e in &m.effects {
            w.serialize(CsvRow {
                lower: Some(e.lb),
                upper: Some(e.ub),
                ..CsvRow::new("mixture_effect", format!("{}:{}", e.kind.label(), e.covariate))
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Human-readable table.
pub fn render_table(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "IV-{} ({:?}), n = {}", match r.model_kind {
        ModelKind::Tobit => "Tobit",
        ModelKind::Probit => "Probit",
    }, r.estimator, r.diagnostics.n);
    let _ = writeln!(s, "\n{:<16} {:>12} {:>10}", "parameter", "estimate", "se");
    for p in &r.parameters {
        let _ = writeln!(s, "{:<16} {:>12.4} {:>10}", p.name, p.estimate, fmt_opt(p.se));
    }
    let g = &r.sigma_ustar2;
    let _ = writeln!(
        s,
        "\nsigma_ustar2 identified set [{:.4}, {:.4}], {:.1}% CI [{:.4}, {:.4}]",
        g.lower,
        g.upper,
        100.0 * (1.0 - r.alpha1),
        g.ci_lower,
        g.ci_upper
    );
    let _ = writeln!(
        s,
        "\n{:<10} {:<10} {:>9} {:>21} {:>21} {:>21}",
        "effect", "covariate", "naive", "naive CI", "[LB, UB]", "CI"
    );
    for e in &r.effects {
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>9.4} {:>21} {:>21} {:>21}",
            e.kind.label(),
            e.covariate,
            e.naive,
            format!("[{:.4}, {:.4}]", e.naive_ci_lower, e.naive_ci_upper),
            format!("[{:.4}, {:.4}]", e.lb, e.ub),
            format!("[{:.4}, {:.4}]", e.ci_lower, e.ci_upper)
        );
    }
    if let Some(m) = &r.mixture {
        let _ = writeln!(
            s,
            "\nmixture K = {}: loglik {:.3}, BIC {:.3}, sigma_ustar2 set [{:.4}, {:.4}]",
            m.k, m.loglik, m.bic, m.sigma_lower, m.sigma_upper
        );
        for e in &m.effects {
            let _ = writeln!(s, "  {:<10} {:<10} [{:.4}, {:.4}]", e.kind.label(), e.covariate, e.lb, e.ub);
        }
    }
    let dg = &r.diagnostics;
    let _ = writeln!(
        s,
        "\nrho_UV {:.4}, sigma_eps2 <= {:.4}, loglik {:.4}, dropped rows {}",
        dg.rho_uv, dg.epsilon_upper, dg.loglik, dg.dropped_rows
    );
    for n in &dg.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

/// `fit` subcommand: returns the report and the human table.
pub fn cmd_fit(args: &FitArgs) -> Result<(RunReport, String)> {
    let named = read_csv(&args.data, &args.y, &args.x, &args.w, &args.z)?;
    let report = fit_report(args, &named)?;
    if let Some(path) = &args.out {
        let body = match args.out_format {
            OutFormat::Json => report_json(&report)?,
            OutFormat::Csv => report_csv(&report)?,
        };
        fs::write(path, body)?;
    }
    let table = render_table(&report);
    Ok((report, table))
}

fn dgp_from_args(a: &SimulateArgs) -> Result<DgpConfig> {
    let overrides = [a.theta1, a.theta2, a.sigma_vstar, a.sigma_ustar, a.sigma_eps, a.pi1, a.pi2];
    if a.design == DesignArg::Default && overrides.iter().any(Option::is_some) {
        return Err(Error::Input("parameter flags require --design custom".into()));
    }
    let base = DgpConfig::default();
    let cfg = DgpConfig {
        theta1: a.theta1.unwrap_or(base.theta1),
        theta2: a.theta2.unwrap_or(base.theta2),
        sigma_vstar: a.sigma_vstar.unwrap_or(base.sigma_vstar),
        sigma_ustar: a.sigma_ustar.unwrap_or(base.sigma_ustar),
        sigma_eps: a.sigma_eps.unwrap_or(base.sigma_eps),
        pi1: a.pi1.unwrap_or(base.pi1),
        pi2: a.pi2.unwrap_or(base.pi2),
        n: a.n,
        kind: a.kind.into(),
        ..base
    };
    cfg.check()?;
    Ok(cfg)
}

/// `simulate` subcommand: writes `replications.csv`, `summary.csv` and
/// `figure.csv` (plus `data_rho<i>.csv` with `--export-data`) to `outdir`.
pub fn cmd_simulate(a: &SimulateArgs) -> Result<McResult> {
    let dgp = dgp_from_args(a)?;
    let mut mc = McConfig::new(dgp.clone(), a.rho_grid.clone(), a.reps, a.seed);
    mc.bonferroni = BonferroniConfig::new(a.alpha, a.alpha1)?;
    let result = run_mc(&mc)?;
    fs::create_dir_all(&a.outdir)?;
    result.write_replications(&a.outdir.join("replications.csv"))?;
    result.write_summary(&a.outdir.join("summary.csv"))?;
    result.write_long(&a.outdir.join("figure.csv"))?;
    if a.export_data {
        for (g, &rho) in a.rho_grid.iter().enumerate() {
            let d = sample_with(&dgp.with_rho(rho), &mut replication_rng(a.seed, g, 0));
            write_dataset_csv(&d, &a.outdir.join(format!("data_rho{g}.csv")))?;
        }
    }
    Ok(result)
}

/// Short text summary of a Monte Carlo run.
pub fn render_mc(r: &McResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>6}",
        "rho", "true", "naive", "med LB", "med UB", "cov s2", "cov PE", "cov nv", "fail"
    );
    for m in &r.summaries {
        let _ = writeln!(
            s,
            "{:>6.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.3} {:>8.3} {:>8.3} {:>6}",
            m.rho, m.true_pe, m.median_naive, m.median_lb, m.median_ub, m.coverage_sigma, m.coverage_pe, m.coverage_naive, m.failures
        );
    }
    s
}
