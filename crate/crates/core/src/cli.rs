//! Command-line front end: one subcommand per toolkit capability.
//!
//! Exit codes are 0 on success, 1 for usage errors, 2 for data errors and
//! 3 when a fit did not converge (its report is still written).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{load_column, Dataset, Digest};
use crate::error::Error;
use crate::global::{global_fit, OptimizeConfig};
use crate::impute::{impute, ImputeStrategy};
use crate::local::{fit, FitResult, LocalConfig, LocalMethod};
use crate::metrics::{model_analysis, residual_diagnostics, residuals, Diagnostics, Metrics};
use crate::models::ModelSpec;
use crate::plot::{emit_plot, PlotKind, PlotRequest};
use crate::regress::{select_model, Candidate, Selection};
use crate::smooth::{is_uniform_grid, savitzky_golay, SGConfig};
use crate::stats::{summary_statistics, SummaryStats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Flags that change where output goes or how fast it is produced, but never
/// what it contains. They are left out of the echoed command.
const NON_SEMANTIC_FLAGS: [&str; 4] = ["--out", "--report", "--out-dir", "--n-jobs"];

#[derive(Debug, Parser)]
#[command(name = "curvefit", version, about = "Curve fitting, smoothing, imputation and regression diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a parametric model by nonlinear least squares.
    Fit(FitArgs),
    /// Savitzky-Golay smoothing of the y column.
    Smooth(SmoothArgs),
    /// Fill missing y values.
    Impute(ImputeArgs),
    /// Summary statistics of one column.
    Stats(StatsArgs),
    /// Fit several candidate models and rank them by adjusted R².
    Select(SelectArgs),
    /// Write SVG charts.
    Plot(PlotArgs),
    /// Goodness-of-fit metrics for a model or a prediction column.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "x")]
    x_col: String,
    #[arg(long, default_value = "y")]
    y_col: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family name.
    #[arg(long)]
    model: String,
    /// Initial parameters, comma separated. Defaults to a data-driven guess.
    #[arg(long, value_delimiter = ',', value_parser = parse_num, allow_hyphen_values = true)]
    init: Option<Vec<f64>>,
    /// Local optimizer used without --global.
    #[arg(long, default_value = "levenberg_marquardt", value_parser = parse_method)]
    method: LocalMethod,
    /// Differential evolution with restarts, then local polish.
    #[arg(long)]
    global: bool,
    /// Per-parameter bounds `lo:hi,lo:hi,...` for --global.
    #[arg(long, value_delimiter = ',', value_parser = parse_bound, allow_hyphen_values = true)]
    bounds: Option<Vec<(f64, f64)>>,
    /// Iterations (local) or generations per restart (global).
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    #[arg(long, default_value_t = 0.05)]
    mutation_rate: f64,
    #[arg(long, default_value_t = 0.7)]
    crossover: f64,
    #[arg(long)]
    population: Option<usize>,
    /// Worker threads for restarts; -1 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    n_jobs: i64,
    #[arg(long, env = "CURVEFIT_SEED", default_value_t = 0)]
    seed: u64,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Half-width w; the window spans 2w+1 points.
    #[arg(long)]
    window: usize,
    #[arg(long)]
    degree: usize,
    /// Smoothed CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImputeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// drop, mean, median, linear, ffill, bfill or model:<name>.
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    column: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated candidates; every builtin family when omitted.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated plot kinds.
    #[arg(long, value_delimiter = ',', default_value = "scatter")]
    kinds: Vec<String>,
    /// Model whose residuals feed the qq and residuals_vs_fitted plots.
    #[arg(long)]
    model: Option<String>,
    /// Model parameters; fitted from the data when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_num, allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    /// Directory receiving `<kind>.svg` files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, conflicts_with = "pred_col", requires = "params")]
    model: Option<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_num, allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    /// Column holding predictions to score against the y column.
    #[arg(long, required_unless_present = "model")]
    pred_col: Option<String>,
    /// Include residuals and QQ points in the report.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_num(t: &str) -> Result<f64, String> {
    match t.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{t}` is not a finite number")),
    }
}

fn parse_bound(pair: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = pair
        .split_once(':')
        .ok_or_else(|| format!("bound `{pair}` is not lo:hi"))?;
    Ok((parse_num(lo)?, parse_num(hi)?))
}

fn parse_method(s: &str) -> Result<LocalMethod, String> {
    [LocalMethod::LevenbergMarquardt, LocalMethod::NelderMead, LocalMethod::GradientDescent]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| "expected levenberg_marquardt, nelder_mead or gradient_descent".to_string())
}

/// Machine-readable record of one invocation.
#[derive(Debug, Serialize)]
pub struct RunReport<T: Serialize> {
    /// Arguments that reproduce the results, output locations excluded.
    pub command: String,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub input: Digest,
    pub result: T,
}

#[derive(Debug, Serialize)]
struct FitOutput {
    model: String,
    fit: FitResult,
    metrics: Metrics,
}

#[derive(Debug, Serialize)]
struct EvaluateOutput {
    metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Serialize)]
struct PlotOutput {
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<Vec<f64>>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownModel { .. } => Failure::Usage(e.to_string()),
            e => Failure::Data(e),
        }
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (program name first) and runs the subcommand, returning
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let echo = command_echo(&args);
    let outcome = match cli.command {
        Command::Fit(a) => run_fit(a, echo),
        Command::Smooth(a) => run_smooth(a, echo),
        Command::Impute(a) => run_impute(a, echo),
        Command::Stats(a) => run_stats(a, echo),
        Command::Select(a) => run_select(a, echo),
        Command::Plot(a) => run_plot(a, echo),
        Command::Evaluate(a) => run_evaluate(a, echo),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn command_echo(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for a in args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()) {
        if std::mem::take(&mut skip_next) {
            continue;
        }
        let flag = a.split('=').next().unwrap_or_default();
        if NON_SEMANTIC_FLAGS.contains(&flag) {
            skip_next = !a.contains('=');
            continue;
        }
        out.push(a);
    }
    out
}

fn report<T: Serialize>(command: Vec<String>, seed: Option<u64>, input: Digest, result: T) -> RunReport<T> {
    RunReport {
        command: command.join(" "),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        input,
        result,
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::WriteError(e.to_string()))?;
    text.push('\n');
    write_bytes(text.as_bytes(), out)
}

fn write_bytes(bytes: &[u8], out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::WriteError(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::WriteError(e.to_string())),
    }
}

fn load(a: &DataArgs) -> Result<Dataset, Error> {
    Dataset::load_csv(&a.data, &a.x_col, &a.y_col)
}

/// Complete rows only, with a warning when some were dropped.
fn complete(d: &Dataset) -> Result<Dataset, Error> {
    let c = d.complete_pairs()?;
    if c.len() < d.len() {
        log::warn!("dropped {} rows with missing values", d.len() - c.len());
    }
    Ok(c)
}

fn run_fit(a: FitArgs, mut echo: Vec<String>) -> Outcome {
    let spec = ModelSpec::by_name(&a.model)?;
    let raw = load(&a.data)?;
    let d = complete(&raw)?;

    let (result, seed) = if a.global {
        let cfg = OptimizeConfig {
            bounds: a.bounds.clone().unwrap_or_default(),
            max_iter: a.max_iter as usize,
            restarts: a.restarts as usize,
            mutation_rate: a.mutation_rate,
            n_jobs: a.n_jobs,
            seed: a.seed,
            population: a.population,
            crossover: a.crossover,
        };
        if !echo.iter().any(|t| t == "--seed" || t.starts_with("--seed=")) {
            echo.extend(["--seed".to_string(), a.seed.to_string()]);
        }
        (global_fit(&spec, &d, &cfg)?, Some(a.seed))
    } else {
        let init = match &a.init {
            Some(v) if v.len() != spec.param_count() => {
                return Err(Failure::Usage(format!(
                    "--init has {} values, model `{}` takes {}",
                    v.len(),
                    spec.name(),
                    spec.param_count()
                )))
            }
            Some(v) => v.clone(),
            None => spec.default_init(&d).into_inner(),
        };
        let cfg = LocalConfig {
            max_iter: a.max_iter as usize,
            method: a.method,
            ..LocalConfig::default()
        };
        (fit(&spec, &d, &init, &cfg)?, None)
    };

    let (x, y) = d.xy()?;
    let metrics = model_analysis(&y, &spec.evaluate(&result.theta_hat, &x)?)?;
    let converged = result.converged;
    let out = FitOutput {
        model: spec.name().to_string(),
        fit: result,
        metrics,
    };
    write_json(&report(echo, seed, raw.digest(), out), a.out.as_deref())?;
    if converged {
        Ok(EXIT_OK)
    } else {
        log::warn!("fit did not converge");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn write_csv(d: &Dataset, out: Option<&Path>) -> Result<(), Error> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    write_bytes(&buf, out)
}

fn run_smooth(a: SmoothArgs, echo: Vec<String>) -> Outcome {
    let raw = load(&a.data)?;
    let (x, y) = raw.xy()?;
    let cfg = SGConfig::new(a.window, a.degree)?;
    if !is_uniform_grid(&x) {
        log::warn!("x is not uniformly spaced; smoothing treats samples as equidistant");
    }
    let smoothed = savitzky_golay(&y, &cfg)?;
    let out = Dataset::from_xy(&x, &smoothed)?.with_names(raw.x_name(), raw.y_name());
    write_csv(&out, a.out.as_deref())?;
    if let Some(p) = &a.report {
        write_json(&report(echo, None, raw.digest(), cfg), Some(p))?;
    }
    Ok(EXIT_OK)
}

fn run_impute(a: ImputeArgs, echo: Vec<String>) -> Outcome {
    let strategy: ImputeStrategy = a.strategy.parse().map_err(|e: Error| match e {
        Error::InvalidConfig(m) => Failure::Usage(m),
        e => Failure::from(e),
    })?;
    let raw = load(&a.data)?;
    let out = impute(&raw, &strategy)?;
    write_csv(&out, a.out.as_deref())?;
    if let Some(p) = &a.report {
        write_json(&report(echo, None, raw.digest(), out.digest()), Some(p))?;
    }
    Ok(EXIT_OK)
}

fn run_stats(a: StatsArgs, echo: Vec<String>) -> Outcome {
    let col = load_column(&a.data, &a.column)?;
    let missing = col.iter().filter(|v| v.is_none()).count();
    let stats: SummaryStats = summary_statistics(&col)?;
    let input = Digest {
        rows: col.len(),
        missing_x: 0,
        missing_y: missing,
    };
    write_json(&report(echo, None, input, stats), a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn run_select(a: SelectArgs, echo: Vec<String>) -> Outcome {
    let names = a
        .candidates
        .clone()
        .unwrap_or_else(|| crate::models::Family::ALL.iter().map(|f| f.name().to_string()).collect());
    let candidates = names
        .iter()
        .map(|n| {
            n.parse::<Candidate>().map_err(|e| match e {
                Error::InvalidConfig(m) => Failure::Usage(m),
                e => Failure::from(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let raw = load(&a.data)?;
    let (x, y) = complete(&raw)?.xy()?;
    let table: Vec<Selection> = select_model(&x, &y, &candidates)?;
    write_json(&report(echo, None, raw.digest(), table), a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn model_params(spec: &ModelSpec, given: Option<&Vec<f64>>, d: &Dataset) -> Result<Vec<f64>, Failure> {
    match given {
        Some(p) if p.len() != spec.param_count() => Err(Failure::Usage(format!(
            "--params has {} values, model `{}` takes {}",
            p.len(),
            spec.name(),
            spec.param_count()
        ))),
        Some(p) => Ok(p.clone()),
        None => {
            let init = spec.default_init(d);
            Ok(fit(spec, d, &init, &LocalConfig::default())?.theta_hat.into_inner())
        }
    }
}

fn run_plot(a: PlotArgs, echo: Vec<String>) -> Outcome {
    let kinds = a
        .kinds
        .iter()
        .map(|k| k.parse::<PlotKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if kinds.contains(&PlotKind::ResidualsVsFitted) && a.model.is_none() {
        return Err(Failure::Usage("residuals_vs_fitted needs --model".into()));
    }
    let raw = load(&a.data)?;
    let d = complete(&raw)?;
    let (x, y) = d.xy()?;

    let fitted = match &a.model {
        Some(name) => {
            let spec = ModelSpec::by_name(name)?;
            let params = model_params(&spec, a.params.as_ref(), &d)?;
            let yhat = spec.evaluate(&params, &x)?;
            Some((params, yhat))
        }
        None => None,
    };
    let resid = fitted.as_ref().map(|(_, yhat)| residuals(&y, yhat));

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Error::WriteError(format!("{}: {e}", a.out_dir.display())))?;
    let mut files = Vec::new();
    for kind in kinds {
        let (columns, series): (Vec<String>, Vec<&[f64]>) = match kind {
            PlotKind::Scatter => (vec![a.data.x_col.clone(), a.data.y_col.clone()], vec![&x, &y]),
            PlotKind::Line => (vec![a.data.x_col.clone(), a.data.y_col.clone()], vec![&xs, &ys]),
            PlotKind::Histogram | PlotKind::Box => (vec![a.data.y_col.clone()], vec![&y]),
            PlotKind::Qq => match &resid {
                Some(r) => (vec!["residual".into()], vec![r]),
                None => (vec![a.data.y_col.clone()], vec![&y]),
            },
            PlotKind::ResidualsVsFitted => {
                let (Some((_, yhat)), Some(r)) = (&fitted, &resid) else { unreachable!() };
                (vec!["fitted".into(), "residual".into()], vec![yhat, r])
            }
        };
        let name = format!("{}.svg", kind.name());
        let req = PlotRequest {
            kind,
            columns,
            output_path: a.out_dir.join(&name),
        };
        emit_plot(&req, &series)?;
        files.push(name);
    }
    let out = PlotOutput {
        files,
        params: fitted.map(|(p, _)| p),
    };
    write_json(&report(echo, None, raw.digest(), out), None)?;
    Ok(EXIT_OK)
}

fn run_evaluate(a: EvaluateArgs, echo: Vec<String>) -> Outcome {
    let (digest, y, yhat) = match (&a.model, &a.pred_col) {
        (Some(name), _) => {
            let spec = ModelSpec::by_name(name)?;
            let raw = load(&a.data)?;
            let (x, y) = complete(&raw)?.xy()?;
            let params = model_params(&spec, a.params.as_ref(), &raw)?;
            let yhat = spec.evaluate(&params, &x)?;
            (raw.digest(), y, yhat)
        }
        (None, Some(pred)) => {
            let raw = Dataset::load_csv(&a.data.data, pred, &a.data.y_col)?;
            let (yhat, y) = complete(&raw)?.xy()?;
            (raw.digest(), y, yhat)
        }
        (None, None) => unreachable!("clap requires --model or --pred-col"),
    };
    let out = EvaluateOutput {
        metrics: model_analysis(&y, &yhat)?,
        diagnostics: if a.diagnostics { Some(residual_diagnostics(&y, &yhat)?) } else { None },
    };
    write_json(&report(echo, None, digest, out), a.out.as_deref())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn echo_drops_output_and_thread_flags() {
        let e = command_echo(&os(&[
            "curvefit", "fit", "--model", "linear", "--out", "a.json", "--n-jobs=4", "--seed", "3",
        ]));
        assert_eq!(e, ["fit", "--model", "linear", "--seed", "3"]);
    }

    #[test]
    fn number_and_bound_parsers() {
        assert_eq!(parse_num(" -2.5").unwrap(), -2.5);
        assert!(parse_num("x").is_err());
        assert!(parse_num("inf").is_err());
        assert_eq!(parse_bound("-2:2").unwrap(), (-2.0, 2.0));
        assert!(parse_bound("0-10").is_err());
    }

    #[test]
    fn lists_parse_into_vectors() {
        let cli = Cli::try_parse_from([
            "curvefit", "fit", "--data", "d.csv", "--model", "gaussian", "--init", "1,-2,0.5", "--bounds", "-1:1,0:2,0.1:3",
        ])
        .unwrap();
        let Command::Fit(a) = cli.command else { panic!() };
        assert_eq!(a.init.unwrap(), [1.0, -2.0, 0.5]);
        assert_eq!(a.bounds.unwrap(), [(-1.0, 1.0), (0.0, 2.0), (0.1, 3.0)]);
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["curvefit"]), EXIT_USAGE);
        assert_eq!(run(["curvefit", "fit", "--data", "d.csv", "--model", "linear", "--max-iter", "0"]), EXIT_USAGE);
        assert_eq!(run(["curvefit", "fit", "--data", "/nonexistent.csv", "--model", "nope"]), EXIT_USAGE);
        assert_eq!(run(["curvefit", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        assert_eq!(run(["curvefit", "stats", "--data", "/nonexistent.csv"]), EXIT_DATA);
    }
}
