//! `dirbeam` command-line driver.
//!
//! Flags (optionally layered over a TOML `--config` file) resolve into a
//! [`RunConfig`], which [`execute`] turns into an artifact. JSON artifacts
//! carry the library version and the resolved config inline; CSV artifacts
//! stay plain tables and the same metadata goes to a `<out>.meta.json`
//! sidecar (or stderr when writing to stdout).
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage, 3 I/O, 4 a
//! verification battery failed. Failures print one JSON error record on stderr.

pub mod args;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::closedform::{
    beta_opt_u_orth, beta_opt_u_parallel, beta_opt_v_orth, delta_snr_u_orth, delta_snr_u_parallel,
    delta_snr_v_orth, delta_snr_v_parallel, snr_dominant_path, snr_u_parallel, snr_v_parallel,
    two_path_objective, AllocationPoint, DeltaSnr, TwoPathParams, REGIME_TOL,
};
use crate::error::Error;
use crate::exec::Execution;
use crate::montecarlo::{percentile, run_ccdf, McConfig, RNG_ALGORITHM};
use crate::verify::{run_suite, Suite, VerifyReport};

pub use args::{Case, Cli, Command, Format, SuiteChoice};
use args::{CcdfOpts, ClosedformOpts, FileOutput, OutputArgs, SweepOpts, VerifyOpts};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ClosedformParams {
    pub case: Case,
    pub a1: f64,
    pub a2: f64,
    pub uu: f64,
    pub vv: f64,
    pub nu_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepParams {
    pub case: Case,
    pub k_min: f64,
    pub k_max: f64,
    pub steps: usize,
    pub uu: f64,
    pub vv: f64,
    pub nu_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyParams {
    pub suite: SuiteChoice,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "parameters", rename_all = "lowercase")]
pub enum Job {
    Closedform(ClosedformParams),
    Sweep(SweepParams),
    Ccdf(McConfig),
    Verify(VerifyParams),
}

/// Fully resolved invocation; echoed into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub job: Job,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub execution: Execution,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Numerical(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Numerical(_) => "numerical",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Verification(_) => "verification",
        }
    }

    /// Single-line JSON record for stderr.
    pub fn record(&self) -> String {
        json!({
            "error": { "kind": self.kind(), "message": self.to_string() },
            "exit_code": self.exit_code(),
            "version": VERSION,
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::WrongRegime(_)
            | Error::Unsupported(_)
            | Error::Undefined(_)
            | Error::Dimension { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Reads `path` as TOML; `out` and `format` go to the output section, the
/// remaining keys must deserialize into the command's option struct.
fn load_config_file<T: DeserializeOwned>(path: &Path) -> CliResult<(T, FileOutput)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    let mut output = toml::Table::new();
    for key in ["out", "format"] {
        if let Some(v) = table.remove(key) {
            output.insert(key.into(), v);
        }
    }
    let bad = |e: toml::de::Error| usage(format!("config {}: {e}", path.display()));
    let output: FileOutput = toml::Value::Table(output).try_into().map_err(bad)?;
    let opts: T = toml::Value::Table(table).try_into().map_err(bad)?;
    Ok((opts, output))
}

fn merged<T: DeserializeOwned + Default>(
    flags: T,
    output: OutputArgs,
    merge: impl FnOnce(T, T) -> T,
) -> CliResult<(T, Option<PathBuf>, Option<Format>)> {
    let (file, file_out) = match &output.config {
        Some(path) => load_config_file::<T>(path)?,
        None => (T::default(), FileOutput::default()),
    };
    Ok((
        merge(flags, file),
        output.out.or(file_out.out),
        output.format.or(file_out.format),
    ))
}

fn required(value: Option<f64>, flag: &str) -> CliResult<f64> {
    value.ok_or_else(|| usage(format!("missing --{flag}")))
}

fn check_finite(value: f64, flag: &str) -> CliResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(usage(format!("--{flag} must be finite")))
    }
}

fn check_unit(value: f64, flag: &str) -> CliResult<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(usage(format!("--{flag} must lie in [0, 1], got {value}")))
    }
}

/// Correlation magnitudes for a case: the one the case pins defaults to its
/// regime value and must agree with it; the other must be supplied.
fn regime_correlations(case: Case, uu: Option<f64>, vv: Option<f64>) -> CliResult<(f64, f64)> {
    let (uu, vv) = match case {
        Case::VOrth => (required(uu, "uu")?, vv.unwrap_or(0.0)),
        Case::UOrth => (uu.unwrap_or(0.0), required(vv, "vv")?),
        Case::VParallel => (required(uu, "uu")?, vv.unwrap_or(1.0)),
        Case::UParallel => (uu.unwrap_or(1.0), required(vv, "vv")?),
    };
    let (uu, vv) = (check_unit(uu, "uu")?, check_unit(vv, "vv")?);
    let ok = match case {
        Case::VOrth => vv < REGIME_TOL,
        Case::UOrth => uu < REGIME_TOL,
        Case::VParallel => vv > 1.0 - REGIME_TOL,
        Case::UParallel => uu > 1.0 - REGIME_TOL,
    };
    if !ok {
        return Err(usage(format!(
            "case {} is inconsistent with uu = {uu}, vv = {vv}",
            case_name(case)
        )));
    }
    Ok((uu, vv))
}

fn case_name(case: Case) -> &'static str {
    match case {
        Case::VOrth => "v-orth",
        Case::UOrth => "u-orth",
        Case::VParallel => "v-parallel",
        Case::UParallel => "u-parallel",
    }
}

fn resolve_closedform(o: ClosedformOpts) -> CliResult<ClosedformParams> {
    let case = o.case.ok_or_else(|| usage("missing --case"))?;
    let (uu, vv) = regime_correlations(case, o.uu, o.vv)?;
    let p = ClosedformParams {
        case,
        a1: check_finite(required(o.a1, "a1")?, "a1")?,
        a2: check_finite(required(o.a2, "a2")?, "a2")?,
        uu,
        vv,
        nu_deg: check_finite(o.nu_deg.unwrap_or(0.0), "nu-deg")?,
    };
    if p.a1 < 0.0 || p.a2 < 0.0 || p.a1 + p.a2 == 0.0 {
        return Err(usage("--a1 and --a2 must be nonnegative and not both zero"));
    }
    Ok(p)
}

fn resolve_sweep(o: SweepOpts) -> CliResult<SweepParams> {
    let case = o.case.ok_or_else(|| usage("missing --case"))?;
    let (uu, vv) = regime_correlations(case, o.uu, o.vv)?;
    let p = SweepParams {
        case,
        k_min: check_finite(o.k_min.unwrap_or(1.0), "k-min")?,
        k_max: check_finite(o.k_max.unwrap_or(10.0), "k-max")?,
        steps: o.steps.unwrap_or(10),
        uu,
        vv,
        nu_deg: check_finite(o.nu_deg.unwrap_or(0.0), "nu-deg")?,
    };
    if !(p.k_min > 0.0 && p.k_max >= p.k_min) {
        return Err(usage("need 0 < --k-min <= --k-max"));
    }
    if p.steps == 0 || (p.steps == 1 && p.k_max != p.k_min) {
        return Err(usage(
            "--steps must be at least 2 (or 1 with k-min = k-max)",
        ));
    }
    Ok(p)
}

fn resolve_ccdf(o: CcdfOpts) -> CliResult<McConfig> {
    let d = McConfig::default();
    let cfg = McConfig {
        num_paths: o.paths.unwrap_or(d.num_paths),
        nt: o.nt.unwrap_or(d.nt),
        nr: o.nr.unwrap_or(d.nr),
        spacing_wavelengths: o.spacing.unwrap_or(d.spacing_wavelengths),
        trials: o.trials.unwrap_or(d.trials),
        seed: o.seed.unwrap_or(d.seed),
        fov_deg: o.fov.unwrap_or(d.fov_deg),
        gain_model: d.gain_model,
        scheme: o.scheme.unwrap_or(d.scheme),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_verify(o: VerifyOpts) -> CliResult<VerifyParams> {
    let p = VerifyParams {
        suite: o.suite.unwrap_or(SuiteChoice::All),
        trials: o.trials.unwrap_or(500),
        seed: o.seed.unwrap_or(1),
    };
    if p.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    Ok(p)
}

/// Merges flags with the optional config file and applies defaults.
pub fn resolve(command: Command) -> CliResult<RunConfig> {
    let (job, out, format, execution, default_format) = match command {
        Command::Closedform(a) => {
            let (o, out, fmt) = merged(a.opts, a.output, ClosedformOpts::or)?;
            (
                Job::Closedform(resolve_closedform(o)?),
                out,
                fmt,
                None,
                Format::Json,
            )
        }
        Command::Sweep(a) => {
            let (o, out, fmt) = merged(a.opts, a.output, SweepOpts::or)?;
            (Job::Sweep(resolve_sweep(o)?), out, fmt, None, Format::Csv)
        }
        Command::Ccdf(a) => {
            let (o, out, fmt) = merged(a.opts, a.output, CcdfOpts::or)?;
            let exec = o.execution;
            (Job::Ccdf(resolve_ccdf(o)?), out, fmt, exec, Format::Csv)
        }
        Command::Verify(a) => {
            let (o, out, fmt) = merged(a.opts, a.output, VerifyOpts::or)?;
            let exec = o.execution;
            (
                Job::Verify(resolve_verify(o)?),
                out,
                fmt,
                exec,
                Format::Json,
            )
        }
    };
    Ok(RunConfig {
        job,
        output_path: out,
        format: format.unwrap_or(default_format),
        execution: execution.unwrap_or_default(),
    })
}

/// Result of [`execute`]: the main output plus metadata for CSV runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub body: String,
    /// Version/config record accompanying a CSV body.
    pub meta: Option<String>,
    /// Set when a verification battery reported failures.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct ClosedformResult {
    beta_sq: Option<f64>,
    theta_deg: Option<f64>,
    delta_snr: f64,
    delta_snr_db: f64,
    swapped: bool,
    destructive: bool,
    snr_optimal: f64,
    snr_dominant_path: f64,
}

fn two_path(a1: f64, a2: f64, uu: f64, vv: f64, nu_deg: f64) -> TwoPathParams {
    TwoPathParams {
        mag_a1: a1,
        mag_a2: a2,
        phase_diff: nu_deg.to_radians(),
        uu_mag: uu,
        uu_phase: 0.0,
        vv_mag: vv,
        vv_phase: 0.0,
    }
}

fn evaluate_case(case: Case, p: &TwoPathParams) -> crate::error::Result<ClosedformResult> {
    let p = p.validated()?;
    let with_alloc =
        |alloc: AllocationPoint, d: DeltaSnr| -> crate::error::Result<ClosedformResult> {
            Ok(ClosedformResult {
                beta_sq: Some(alloc.beta_sq()),
                theta_deg: Some(alloc.theta.to_degrees()),
                delta_snr: d.ratio,
                delta_snr_db: d.db(),
                swapped: d.swapped,
                destructive: d.destructive,
                snr_optimal: two_path_objective(&p, alloc)?,
                snr_dominant_path: snr_dominant_path(&p),
            })
        };
    match case {
        Case::VOrth => with_alloc(beta_opt_v_orth(&p)?, delta_snr_v_orth(&p)?),
        Case::UOrth if p.vv_mag < REGIME_TOL => {
            // Both sides orthogonal: the v-orthogonal allocation applies.
            with_alloc(beta_opt_v_orth(&p)?, delta_snr_u_orth(&p)?)
        }
        Case::UOrth => with_alloc(beta_opt_u_orth(&p)?, delta_snr_u_orth(&p)?),
        Case::UParallel => {
            let d = delta_snr_u_parallel(&p)?;
            let mut r = with_alloc(beta_opt_u_parallel(&p)?, d)?;
            r.snr_optimal = snr_u_parallel(&p)?;
            Ok(r)
        }
        Case::VParallel => {
            let d = delta_snr_v_parallel(&p)?;
            Ok(ClosedformResult {
                beta_sq: None,
                theta_deg: None,
                delta_snr: d.ratio,
                delta_snr_db: d.db(),
                swapped: d.swapped,
                destructive: false,
                snr_optimal: snr_v_parallel(&p)?,
                snr_dominant_path: snr_dominant_path(&p),
            })
        }
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn json_artifact(config: &RunConfig, result: serde_json::Value) -> String {
    let doc = json!({ "version": VERSION, "config": config, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    s.push('\n');
    s
}

fn csv_artifact(config: &RunConfig, body: String, summary: serde_json::Value) -> Artifact {
    let meta = json!({ "version": VERSION, "config": config, "summary": summary });
    let mut meta = serde_json::to_string_pretty(&meta).expect("JSON values serialize");
    meta.push('\n');
    Artifact {
        body,
        meta: Some(meta),
        failure: None,
    }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("plain data serializes")
}

/// Runs a resolved command and renders its output. Writes nothing.
pub fn execute(config: &RunConfig) -> CliResult<Artifact> {
    match &config.job {
        Job::Closedform(p) => {
            let r = evaluate_case(p.case, &two_path(p.a1, p.a2, p.uu, p.vv, p.nu_deg))?;
            Ok(match config.format {
                Format::Json => Artifact {
                    body: json_artifact(config, to_json(&r)),
                    meta: None,
                    failure: None,
                },
                Format::Csv => {
                    let mut body = String::from(
                        "case,beta_sq,theta_deg,delta_snr,delta_snr_db,swapped,destructive,snr_optimal,snr_dominant_path\n",
                    );
                    writeln!(
                        body,
                        "{},{},{},{},{},{},{},{},{}",
                        case_name(p.case),
                        opt_cell(r.beta_sq),
                        opt_cell(r.theta_deg),
                        r.delta_snr,
                        r.delta_snr_db,
                        r.swapped,
                        r.destructive,
                        r.snr_optimal,
                        r.snr_dominant_path
                    )
                    .expect("writing to a String");
                    csv_artifact(config, body, json!(null))
                }
            })
        }
        Job::Sweep(p) => {
            let mut rows = Vec::with_capacity(p.steps);
            for i in 0..p.steps {
                let k = if p.steps == 1 {
                    p.k_min
                } else {
                    p.k_min + (p.k_max - p.k_min) * i as f64 / (p.steps - 1) as f64
                };
                let r = evaluate_case(p.case, &two_path(k, 1.0, p.uu, p.vv, p.nu_deg))?;
                rows.push((k, r));
            }
            Ok(match config.format {
                Format::Json => {
                    let rows: Vec<_> = rows
                        .iter()
                        .map(|(k, r)| json!({ "k": k, "values": to_json(r) }))
                        .collect();
                    Artifact {
                        body: json_artifact(config, json!(rows)),
                        meta: None,
                        failure: None,
                    }
                }
                Format::Csv => {
                    let mut body =
                        String::from("k,beta_sq,theta_deg,delta_snr,delta_snr_db,destructive\n");
                    for (k, r) in &rows {
                        writeln!(
                            body,
                            "{k},{},{},{},{},{}",
                            opt_cell(r.beta_sq),
                            opt_cell(r.theta_deg),
                            r.delta_snr,
                            r.delta_snr_db,
                            r.destructive
                        )
                        .expect("writing to a String");
                    }
                    csv_artifact(config, body, json!(null))
                }
            })
        }
        Job::Ccdf(cfg) => {
            let table = run_ccdf(cfg, config.execution)?;
            let summary = json!({
                "rng": RNG_ALGORITHM,
                "trials": table.len(),
                "median_db": table.median()?,
                "p90_db": percentile(&table, 0.9)?,
                "resampled": table.resampled,
                "nonconverged": table.nonconverged,
            });
            Ok(match config.format {
                Format::Csv => csv_artifact(config, table.to_csv(), summary),
                Format::Json => Artifact {
                    body: json_artifact(
                        config,
                        json!({ "summary": summary, "table": to_json(&table) }),
                    ),
                    meta: None,
                    failure: None,
                },
            })
        }
        Job::Verify(p) => {
            let suites: Vec<Suite> = match p.suite {
                SuiteChoice::All => Suite::ALL.to_vec(),
                SuiteChoice::Prop1 => vec![Suite::Prop1],
                SuiteChoice::Prop2 => vec![Suite::Prop2],
                SuiteChoice::Prop3 => vec![Suite::Prop3],
                SuiteChoice::Prop4 => vec![Suite::Prop4],
                SuiteChoice::Bounds => vec![Suite::Bounds],
            };
            let reports = suites
                .into_iter()
                .map(|s| run_suite(s, p.trials, p.seed, config.execution))
                .collect::<crate::error::Result<Vec<VerifyReport>>>()?;
            let failed: Vec<String> = reports
                .iter()
                .filter(|r| !r.ok())
                .map(|r| format!("{} ({} of {} cases)", r.suite, r.failed, r.cases))
                .collect();
            let failure = (!failed.is_empty()).then(|| failed.join(", "));
            let mut artifact = match config.format {
                Format::Json => Artifact {
                    body: json_artifact(config, to_json(&reports)),
                    meta: None,
                    failure: None,
                },
                Format::Csv => {
                    let mut body = String::from(
                        "suite,cases,passed,failed,metric,worst,tolerance,metric_failures\n",
                    );
                    for r in &reports {
                        for m in &r.metrics {
                            writeln!(
                                body,
                                "{},{},{},{},\"{}\",{},{},{}",
                                r.suite,
                                r.cases,
                                r.passed,
                                r.failed,
                                m.name.replace('"', "\"\""),
                                m.worst,
                                m.tolerance,
                                m.failures
                            )
                            .expect("writing to a String");
                        }
                    }
                    csv_artifact(config, body, json!(null))
                }
            };
            artifact.failure = failure;
            Ok(artifact)
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Executes and writes the artifact. A failed verification battery is
/// reported as an error after its report has been written.
pub fn run(config: &RunConfig) -> CliResult<Artifact> {
    let artifact = execute(config)?;
    match &config.output_path {
        Some(path) => {
            write_file(path, &artifact.body)?;
            if let Some(meta) = &artifact.meta {
                write_file(&sidecar_path(path), meta)?;
            }
        }
        None => {
            print!("{}", artifact.body);
            if let Some(meta) = &artifact.meta {
                let compact: serde_json::Value = serde_json::from_str(meta).expect("meta is JSON");
                eprintln!("{compact}");
            }
        }
    }
    if let Some(what) = &artifact.failure {
        return Err(CliError::Verification(what.clone()));
    }
    Ok(artifact)
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = usage(e.render().to_string().trim().to_owned());
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    match resolve(cli.command).and_then(|cfg| run(&cfg)) {
        Ok(_) => 0,
        Err(err) => {
            eprintln!("{}", err.record());
            err.exit_code()
        }
    }
}
