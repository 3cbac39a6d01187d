use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "boundnoise", version, about = "Calibrate, compare and audit bounded-noise DP mechanisms")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed of the ChaCha8 random streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with certificate settings (camelCase keys of the certificate config).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Concurrent sweep points.
    #[arg(long, global = true, env = "BOUNDNOISE_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Clone)]
pub struct FamilyArgs {
    /// Noise family: poly, single-exp or double-exp.
    #[arg(long, default_value = "poly")]
    pub family: String,
    /// Exponent of the poly family.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args, Clone)]
pub struct PrivacyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    /// Number of queries; accepts forms such as 1e6.
    #[arg(long, value_parser = parse_count)]
    pub k: u64,
    /// Per-query sensitivity.
    #[arg(long = "Delta", default_value_t = 1.0)]
    pub sensitivity: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest certified noise magnitude R* and its certificate.
    Calibrate(PrivacyArgs),
    /// Bounded against Gaussian noise over a sweep of k, eps or delta.
    Compare(CompareArgs),
    /// Largest query budget per mechanism over a sweep of sample sizes.
    Adaptive(AdaptiveArgs),
    /// Draws from the noise distribution at magnitude R.
    Sample(SampleArgs),
    /// Certificate at an explicit R.
    Verify(VerifyArgs),
    /// Monte Carlo falsifier at an explicit R.
    Falsify(FalsifyArgs),
    /// Rate-function quantities and the heavy-tail bound.
    Theory(TheoryArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub delta: f64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub k: u64,
    #[arg(long = "Delta", default_value_t = 1.0)]
    pub sensitivity: f64,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', num_args = 0.., value_parser = parse_count, conflicts_with_all = ["eps_sweep", "delta_sweep"])]
    pub k_sweep: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with = "delta_sweep")]
    pub eps_sweep: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub delta_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AdaptiveArgs {
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',', num_args = 0.., value_parser = parse_count, required = true)]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub count: u64,
    /// Stream index within the seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long = "R")]
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Generalized,
    Verbatim,
}

#[derive(Debug, Args)]
pub struct FalsifyArgs {
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub samples: u64,
    #[arg(long, value_enum, default_value = "generalized")]
    pub rule: RuleArg,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Rate function: poly, double-exp or linear.
    #[arg(long, default_value = "poly")]
    pub rate: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_parser = parse_count)]
    pub k: u64,
    /// Tail constant C of the rate function.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Constant C_f of delta*_k.
    #[arg(long = "Cf", default_value_t = 1.0)]
    pub c_f: f64,
    /// Points t of the heavy-tail table; a default grid when omitted.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub t: Option<Vec<f64>>,
}

/// Positive integer, also in exponent form (`1e6`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v < 1.8e19) {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    Ok(v as u64)
}
