//! Command-line surface; the parsed form doubles as the serialized RunConfig.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnt_core::torus_lab::config::Tolerances;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "gnt-lab", version, about = "Generalized Newton transformation verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON report here (atomically); stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Tolerance override KEY=VALUE; keys: algebraic, integral, vanishing,
    /// mc_sigmas, stencil, unrolled.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|e| format!("{v:?}: {e}"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance {k} must be nonnegative"));
    }
    Ok((k.to_string(), v))
}

pub fn apply_tolerances(over: &[(String, f64)]) -> Result<Tolerances, String> {
    let mut t = Tolerances::default();
    for (k, v) in over {
        let slot = match k.as_str() {
            "algebraic" => &mut t.algebraic,
            "integral" => &mut t.integral,
            "vanishing" => &mut t.vanishing,
            "mc_sigmas" => &mut t.mc_sigmas,
            "stencil" => &mut t.stencil,
            "unrolled" => &mut t.unrolled,
            other => return Err(format!("unknown tolerance {other:?}")),
        };
        *slot = *v;
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// Integer entries uniform in -bound..=bound.
    Random,
    /// Symmetrized random integer matrices.
    Symmetric,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// σ_u and T_u of one system from a JSON file, with its exact identity checks.
    Gnt(GntArgs),
    /// Randomized exact identity trials.
    Verify(VerifyArgs),
    /// S_r and T_r directly and through the generalized transformations.
    Classical(ClassicalArgs),
    /// Integral-formula checks on a torus geometry config.
    Integrate(IntegrateArgs),
    /// Exact κ recurrence and closed-form table.
    KappaTable(KappaArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GntArgs {
    /// JSON file {"p":…, "q":…, "matrices":[…]} with integer or "a/b" entries.
    #[arg(long)]
    pub system: PathBuf,
    /// Largest |u| in the emitted table (default p + 1).
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SystemKind::Random)]
    pub system: SystemKind,
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Entries are drawn from -bound..=bound.
    #[arg(long, default_value_t = 3)]
    pub bound: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw p and q per trial uniformly from 1..=p and 1..=q.
    #[arg(long)]
    pub vary: bool,
    /// Also compare the classical operators for r ≤ 4.
    #[arg(long)]
    pub classical: bool,
    /// Rerun the configuration stored in an earlier verify report and
    /// compare outcomes.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ClassicalArgs {
    /// System JSON file; a seeded random system when omitted.
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 3)]
    pub bound: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest even r.
    #[arg(long, default_value_t = 4)]
    pub r_max: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct IntegrateArgs {
    /// Geometry config JSON.
    #[arg(long)]
    pub geometry: PathBuf,
    /// Multi-index as comma-separated entries, e.g. 1,1; repeatable.
    /// Replaces the config's list when given.
    #[arg(long = "u")]
    pub u: Vec<String>,
    /// Check name; repeatable.  Replaces the config's list when given.
    #[arg(long = "check")]
    pub check: Vec<String>,
    /// Grid resolution override.
    #[arg(long)]
    pub m: Option<usize>,
    /// Refinement study over these resolutions, e.g. 16,32,64.
    #[arg(long, value_delimiter = ',')]
    pub refine: Vec<usize>,
    /// CSV table of the refinement study.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct KappaArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub q: usize,
    /// Single even r ≤ p; all rows when omitted.
    #[arg(long)]
    pub r: Option<usize>,
}

/// Everything that determines a run; embedded verbatim in its report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub tolerances: Tolerances,
}
