//! Command-line flags and their config-file mirror.
//!
//! Every option struct doubles as the schema of the `--config` file (TOML,
//! keys spelled like the long flags). All fields are optional so a flag can
//! override a file value and defaults are applied only after merging.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::montecarlo::Scheme;

/// Parses a flag value with the same spelling the config file uses.
fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// Transmit directions electrically orthogonal.
    VOrth,
    /// Receive directions electrically orthogonal.
    UOrth,
    /// Transmit directions coincide.
    VParallel,
    /// Receive directions coincide.
    UParallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteChoice {
    All,
    Prop1,
    Prop2,
    Prop3,
    Prop4,
    Bounds,
}

#[derive(Debug, Parser)]
#[command(
    name = "dirbeam",
    version,
    about = "Optimal vs. directional beamforming on sparse mmWave MIMO channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a two-path closed form.
    Closedform(ClosedformArgs),
    /// Tabulate a two-path loss against the gain ratio K = |alpha1| / |alpha2|.
    Sweep(SweepArgs),
    /// Monte Carlo CCDF of the loss of a directional scheme.
    Ccdf(CcdfArgs),
    /// Run an oracle-equivalence battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, value_parser = serde_value::<Format>)]
    pub format: Option<Format>,
    /// TOML file with the same keys as the long flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys accepted by every command's config file besides its own options.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FileOutput {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ClosedformOpts {
    /// v-orth, u-orth, v-parallel or u-parallel.
    #[arg(long, value_parser = serde_value::<Case>)]
    pub case: Option<Case>,
    /// |alpha1|
    #[arg(long)]
    pub a1: Option<f64>,
    /// |alpha2|
    #[arg(long)]
    pub a2: Option<f64>,
    /// |u1^H u2|; defaults to the case's regime value when it fixes one.
    #[arg(long)]
    pub uu: Option<f64>,
    /// |v1^H v2|; defaults to the case's regime value when it fixes one.
    #[arg(long)]
    pub vv: Option<f64>,
    /// Phase misalignment nu in degrees (0 = coherent).
    #[arg(long, allow_hyphen_values = true)]
    pub nu_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClosedformArgs {
    #[command(flatten)]
    pub opts: ClosedformOpts,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepOpts {
    #[arg(long, value_parser = serde_value::<Case>)]
    pub case: Option<Case>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Number of evenly spaced K values, endpoints included.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub uu: Option<f64>,
    #[arg(long)]
    pub vv: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub opts: SweepOpts,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CcdfOpts {
    /// Number of paths L.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub nr: Option<usize>,
    /// Element spacing in wavelengths.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Field of view in degrees, centred on broadside.
    #[arg(long)]
    pub fov: Option<f64>,
    /// bidirectional, dominant_tx_mf_rx or equal_power.
    #[arg(long, value_parser = serde_value::<Scheme>)]
    pub scheme: Option<Scheme>,
    /// sequential or parallel; results are identical either way.
    #[arg(long, value_parser = serde_value::<Execution>)]
    pub execution: Option<Execution>,
}

#[derive(Debug, Args)]
pub struct CcdfArgs {
    #[command(flatten)]
    pub opts: CcdfOpts,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyOpts {
    /// prop1, prop2, prop3, prop4, bounds or all.
    #[arg(long, value_parser = serde_value::<SuiteChoice>)]
    pub suite: Option<SuiteChoice>,
    /// Random draws per suite.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = serde_value::<Execution>)]
    pub execution: Option<Execution>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub opts: VerifyOpts,
    #[command(flatten)]
    pub output: OutputArgs,
}

macro_rules! merge_fields {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            /// Field-wise `self` over `file`.
            pub fn or(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

merge_fields!(ClosedformOpts {
    case,
    a1,
    a2,
    uu,
    vv,
    nu_deg
});
merge_fields!(SweepOpts {
    case,
    k_min,
    k_max,
    steps,
    uu,
    vv,
    nu_deg
});
merge_fields!(CcdfOpts {
    paths,
    nt,
    nr,
    spacing,
    trials,
    seed,
    fov,
    scheme,
    execution
});
merge_fields!(VerifyOpts {
    suite,
    trials,
    seed,
    execution
});
