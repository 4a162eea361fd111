//! Batch command-line front end.
//!
//! Settings come from three layers, later ones winning: an optional
//! `--config` file, the `MTASA_WORKERS` environment variable (worker count
//! only) and command-line flags. Analysis-period indices are zero-based.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgAction, CommandFactory, FromArgMatches, Parser, ValueEnum};

use crate::engine::run_pipeline;
use crate::error::ValidationError;
use crate::io::{self, IoError};
use crate::model::{
    validate_inputs, AnalysisPeriod, AssessmentConfig, DistanceKind, FeatureTransform, Filtering,
    RotationVariableSet, WeightVector, WorkerCount,
};

pub const WORKERS_ENV: &str = "MTASA_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistanceArg {
    Euclidean,
    Dtw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformArg {
    Dft,
    Dwt,
}

/// Multivariate time-series alignment and similarity assessment.
#[derive(Debug, Parser)]
#[command(name = "mtasa", version, about)]
struct Args {
    /// Query CSV (long format, one instance).
    #[arg(long, value_name = "PATH", action = ArgAction::Append)]
    query: Vec<PathBuf>,
    /// Dataset CSV (long format).
    #[arg(long, value_name = "PATH", action = ArgAction::Append)]
    dataset: Vec<PathBuf>,
    /// Comma-separated measurement variables.
    #[arg(long, value_name = "LIST", action = ArgAction::Append)]
    vars: Vec<String>,
    /// Comma-separated weights, one per variable, summing to 1.
    #[arg(long, value_name = "LIST", action = ArgAction::Append)]
    weights: Vec<String>,
    /// Zero-based analysis-period indices, e.g. `10,11` or `0-11`. Default: whole series.
    #[arg(long, value_name = "LIST", action = ArgAction::Append)]
    period: Vec<String>,
    /// Variables driving alignment. Default: all measurement variables.
    #[arg(long = "rotation-vars", value_name = "LIST", action = ArgAction::Append)]
    rotation_vars: Vec<String>,
    /// Align instances before measuring distances (default).
    #[arg(long, overrides_with = "no_rotate")]
    rotate: bool,
    /// Skip alignment.
    #[arg(long = "no-rotate", overrides_with = "rotate")]
    no_rotate: bool,
    #[arg(long, value_enum, action = ArgAction::Append)]
    distance: Vec<DistanceArg>,
    #[arg(long, value_enum, action = ArgAction::Append)]
    transform: Vec<TransformArg>,
    /// Drop similarities strictly below this value.
    #[arg(long = "absolute-threshold", value_name = "R", action = ArgAction::Append, conflicts_with = "top_k")]
    absolute_threshold: Vec<f64>,
    /// Keep only the K most similar instances.
    #[arg(long = "top-k", value_name = "K", action = ArgAction::Append)]
    top_k: Vec<usize>,
    /// Worker threads, or `auto` for one per logical core.
    #[arg(long, value_name = "N|auto", action = ArgAction::Append)]
    workers: Vec<String>,
    /// Output CSV.
    #[arg(long, value_name = "PATH", action = ArgAction::Append)]
    out: Vec<PathBuf>,
    /// Flat `key = value` config file.
    #[arg(long, value_name = "PATH", action = ArgAction::Append)]
    config: Vec<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(ValidationError),
    Io(IoError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_)
            | Self::Io(IoError::QueryMissingCells { .. })
            | Self::Io(IoError::Invalid { .. }) => 1,
            Self::Usage(_) | Self::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Validation(e) => write!(f, "validation error: {e}"),
            Self::Io(e) => write!(f, "input/output error: {e}"),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        Self::Validation(e)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::Io(e)
    }
}

/// Fully resolved string-level settings before they are interpreted.
#[derive(Debug, Default)]
struct Settings {
    query: Option<PathBuf>,
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    vars: Option<String>,
    weights: Option<String>,
    period: Option<String>,
    rotation_vars: Option<String>,
    rotation_mode: Option<bool>,
    distance: Option<DistanceKind>,
    transform: Option<FeatureTransform>,
    filtering: Option<Filtering>,
    workers: Option<String>,
}

fn last<T: Clone>(flag: &str, values: &[T], warnings: &mut Vec<String>) -> Option<T> {
    if values.len() > 1 {
        warnings.push(format!("--{flag} given {} times; using the last value", values.len()));
    }
    values.last().cloned()
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Usage(format!("{key}: expected true or false, got `{v}`"))),
    }
}

fn parse_filtering(v: &str) -> Result<Filtering, CliError> {
    let v = v.trim();
    if v.eq_ignore_ascii_case("none") {
        return Ok(Filtering::None);
    }
    let (kind, arg) = v
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("filtering: expected none, absolute:R or relative:K, got `{v}`")))?;
    let bad = || CliError::Usage(format!("filtering: invalid value `{v}`"));
    match kind.trim() {
        "absolute" => arg.trim().parse().map(Filtering::Absolute).map_err(|_| bad()),
        "relative" => arg.trim().parse().map(Filtering::Relative).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn apply_config_file(settings: &mut Settings, entries: Vec<(String, String)>) -> Result<(), CliError> {
    for (key, value) in entries {
        match key.as_str() {
            "query" => settings.query = Some(value.into()),
            "dataset" => settings.dataset = Some(value.into()),
            "out" => settings.out = Some(value.into()),
            "measurement_vars" => settings.vars = Some(value),
            "weights" => settings.weights = Some(value),
            "analysis_period" => settings.period = Some(value),
            "rotation_variables" => settings.rotation_vars = Some(value),
            "rotation_mode" => settings.rotation_mode = Some(parse_bool(&key, &value)?),
            "distance_kind" => {
                settings.distance = Some(match value.as_str() {
                    "euclidean" => DistanceKind::Euclidean,
                    "dtw" => DistanceKind::Dtw,
                    _ => return Err(CliError::Usage(format!("distance_kind: unknown `{value}`"))),
                })
            }
            "feature_transform" => {
                settings.transform = Some(match value.as_str() {
                    "dft" => FeatureTransform::Dft,
                    "dwt" => FeatureTransform::Dwt,
                    _ => return Err(CliError::Usage(format!("feature_transform: unknown `{value}`"))),
                })
            }
            "filtering" => settings.filtering = Some(parse_filtering(&value)?),
            "worker_count" => settings.workers = Some(value),
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
    }
    Ok(())
}

fn resolve(args: Args, warnings: &mut Vec<String>) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    if let Some(path) = last("config", &args.config, warnings) {
        apply_config_file(&mut s, io::load_config_file(path)?)?;
    }
    if let Ok(env) = std::env::var(WORKERS_ENV) {
        s.workers = Some(env);
    }
    macro_rules! overlay {
        ($field:ident, $flag:literal, $src:expr) => {
            if let Some(v) = last($flag, &$src, warnings) {
                s.$field = Some(v.into());
            }
        };
    }
    overlay!(query, "query", args.query);
    overlay!(dataset, "dataset", args.dataset);
    overlay!(out, "out", args.out);
    overlay!(vars, "vars", args.vars);
    overlay!(weights, "weights", args.weights);
    overlay!(period, "period", args.period);
    overlay!(rotation_vars, "rotation-vars", args.rotation_vars);
    overlay!(workers, "workers", args.workers);
    if args.rotate {
        s.rotation_mode = Some(true);
    } else if args.no_rotate {
        s.rotation_mode = Some(false);
    }
    if let Some(d) = last("distance", &args.distance, warnings) {
        s.distance = Some(match d {
            DistanceArg::Euclidean => DistanceKind::Euclidean,
            DistanceArg::Dtw => DistanceKind::Dtw,
        });
    }
    if let Some(t) = last("transform", &args.transform, warnings) {
        s.transform = Some(match t {
            TransformArg::Dft => FeatureTransform::Dft,
            TransformArg::Dwt => FeatureTransform::Dwt,
        });
    }
    if let Some(t) = last("absolute-threshold", &args.absolute_threshold, warnings) {
        s.filtering = Some(Filtering::Absolute(t));
    }
    if let Some(k) = last("top-k", &args.top_k, warnings) {
        s.filtering = Some(Filtering::Relative(k));
    }
    Ok(s)
}

/// Parses `10,11`, `0-11` or any comma-separated mix of indices and ranges.
fn parse_period(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = |p: &str| CliError::Usage(format!("invalid analysis period entry `{p}`"));
    let mut out = Vec::new();
    for part in split_list(s) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| bad(&part))?;
            let b: usize = b.trim().parse().map_err(|_| bad(&part))?;
            if b < a {
                return Err(bad(&part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(&part))?);
        }
    }
    Ok(out)
}

fn parse_workers(s: &str) -> Result<WorkerCount, CliError> {
    if s.trim().eq_ignore_ascii_case("auto") {
        return Ok(WorkerCount::Auto);
    }
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("workers: expected a positive integer or auto, got `{s}`")))?;
    Ok(WorkerCount::fixed(n)?)
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required setting --{name}")))
}

fn execute<W: Write>(settings: Settings, out: &mut W, warnings: &mut Vec<String>) -> Result<(), CliError> {
    let query_path = required(settings.query, "query")?;
    let dataset_path = required(settings.dataset, "dataset")?;
    let out_path = required(settings.out, "out")?;
    let vars = split_list(&required(settings.vars, "vars")?);
    if vars.is_empty() {
        return Err(CliError::Usage("--vars lists no variables".into()));
    }
    let weights: Vec<f64> = split_list(&required(settings.weights, "weights")?)
        .iter()
        .map(|w| w.parse().map_err(|_| CliError::Usage(format!("invalid weight `{w}`"))))
        .collect::<Result<_, _>>()?;
    let weights = WeightVector::new(weights)?;
    let rotation_names = settings.rotation_vars.as_deref().map(split_list).unwrap_or_else(|| vars.clone());
    let rotation: Vec<usize> = rotation_names
        .iter()
        .map(|name| {
            vars.iter()
                .position(|v| v == name)
                .ok_or_else(|| ValidationError::UnknownVariable(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let rotation = RotationVariableSet::new(rotation)?;
    let workers = match settings.workers {
        Some(w) => parse_workers(&w)?,
        None => WorkerCount::Auto,
    };

    let dataset = io::load_dataset(&dataset_path, &vars)?;
    let query = io::load_query(&query_path, &vars)?;
    let period = match settings.period {
        Some(p) => AnalysisPeriod::new(parse_period(&p)?)?,
        None => AnalysisPeriod::full(dataset.timesteps()),
    };

    let mut config = AssessmentConfig::new(vars, weights, period, rotation);
    config.rotation_mode = settings.rotation_mode.unwrap_or(true);
    config.distance_kind = settings.distance.unwrap_or_default();
    config.feature_transform = settings.transform.unwrap_or_default();
    config.filtering = settings.filtering.unwrap_or_default();
    config.worker_count = workers;
    if config.rotation_mode && config.distance_kind == DistanceKind::Dtw {
        warnings.push("--rotate with --distance dtw: rotation already corrects shifts before DTW".into());
    }

    validate_inputs(&dataset, &query, &config)?;
    let started = Instant::now();
    let assessment = run_pipeline(&dataset, &query, &config)?;
    let elapsed = started.elapsed();
    warnings.extend(assessment.warnings.iter().cloned());
    io::write_results(&assessment.index, &assessment.raw_combined, &out_path)?;
    writeln!(
        out,
        "K={} valid={} elapsed={:.3}s out={}",
        dataset.instances(),
        assessment.valid_count,
        elapsed.as_secs_f64(),
        out_path.display()
    )
    .ok();
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let matches = match Args::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    let args = match Args::from_arg_matches(&matches) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    let mut warnings = Vec::new();
    let result = resolve(args, &mut warnings).and_then(|s| execute(s, out, &mut warnings));
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}
