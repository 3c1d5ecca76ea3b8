//! Command-line flags and their config-file mirror.
//!
//! Every subcommand's flags double as keys of a TOML section with the same
//! name (`[generate]`, `[oracle]`, `[run]`, `[curve]`, `[state-dump]`,
//! `[state-load]`); a flag given on the command line wins over the file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "seqtutor", version, about = "Personalized sequencing of teaching materials")]
pub struct Cli {
    /// Worker threads for replications (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with default flag values per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Exact oracle values, gaps and the crossover cost of an instance.
    Oracle(OracleArgs),
    /// Run one policy and write per-student rows plus a summary.
    Run(RunArgs),
    /// Regret at each point of an n grid, for one or more policies.
    Curve(CurveArgs),
    /// Save or restore learner snapshots.
    #[command(subcommand)]
    State(StateCommand),
}

#[derive(Subcommand, Debug)]
pub enum StateCommand {
    /// Train a fresh learner and write its snapshot.
    Dump(StateDumpArgs),
    /// Validate a snapshot, optionally continue training it.
    Load(StateLoadArgs),
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Tabular,
    Factored,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseArg {
    Bernoulli,
    TruncatedNormal,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Bf,
    Etutor,
    Rr,
    Fr,
}

/// Fills every unset field of `$dst` from `$src`.
macro_rules! merge_from {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

#[derive(Args, Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of materials.
    #[arg(long = "Q")]
    #[serde(rename = "Q")]
    pub q: Option<usize>,
    #[arg(long)]
    pub contexts: Option<usize>,
    #[arg(long)]
    pub feedbacks: Option<usize>,
    #[arg(long, env = "SEQTUTOR_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub score_lo: Option<f64>,
    #[arg(long)]
    pub score_hi: Option<f64>,
    /// Factored mode: smallest decision gap, net of cost.
    #[arg(long)]
    pub min_gap: Option<f64>,
    /// Comma-separated cost per material.
    #[arg(long, value_delimiter = ',')]
    pub costs: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseArg>,
    /// Standard deviation of truncated-normal noise.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub enforce_assumption1: Option<bool>,
    /// Instance file; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn merge(&mut self, file: Self) {
        merge_from!(self, file; mode, q, contexts, feedbacks, seed, score_lo, score_hi, min_gap, costs, noise,
            sigma, enforce_assumption1, output);
    }
}

#[derive(Args, Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OracleArgs {
    /// Instance file, or `builtin:example1` / `builtin:remedial`.
    #[serde(skip)]
    pub instance: String,
    /// Replace every material cost by this value.
    #[arg(long)]
    pub cost: Option<f64>,
    /// Only this context (default: all).
    #[arg(long)]
    pub context: Option<usize>,
    /// Skip the crossover search.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_crossover: Option<bool>,
    /// JSON report file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl OracleArgs {
    pub fn merge(&mut self, file: Self) {
        merge_from!(self, file; cost, context, no_crossover, output);
    }
}

/// Flags that pick and shape the simulated population and the policies.
#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    #[serde(skip)]
    pub instance: String,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Students per replication.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long, env = "SEQTUTOR_SEED")]
    pub seed: Option<u64>,
    /// Derive the exploration constants from this target probability.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Material order for the fixed rule, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Per-slot stop probability of the random rule.
    #[arg(long)]
    pub stop_prob: Option<f64>,
    #[arg(long)]
    pub cost: Option<f64>,
    /// Divide scores and costs by this factor.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Comma-separated context probabilities.
    #[arg(long, value_delimiter = ',')]
    pub context_dist: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn merge(&mut self, file: Self) {
        merge_from!(self, file; policy, n, reps, seed, epsilon, d, delta, order, stop_prob, cost, scale,
            context_dist, out);
    }
}

#[derive(Args, Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct CurveArgs {
    #[serde(skip)]
    pub instance: String,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyArg>>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long, env = "SEQTUTOR_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    #[arg(long)]
    pub stop_prob: Option<f64>,
    #[arg(long)]
    pub cost: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub context_dist: Option<Vec<f64>>,
    /// Curve CSV; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl CurveArgs {
    pub fn merge(&mut self, file: Self) {
        merge_from!(self, file; policies, n_grid, reps, seed, epsilon, d, delta, order, stop_prob, cost, scale,
            context_dist, output);
    }
}

#[derive(Args, Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct StateDumpArgs {
    #[serde(skip)]
    pub instance: String,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, env = "SEQTUTOR_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cost: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub context_dist: Option<Vec<f64>>,
    /// Snapshot file; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl StateDumpArgs {
    pub fn merge(&mut self, file: Self) {
        merge_from!(self, file; n, seed, epsilon, d, delta, cost, scale, context_dist, output);
    }
}

#[derive(Args, Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct StateLoadArgs {
    /// Snapshot file.
    #[serde(skip)]
    pub state: PathBuf,
    /// Instance to continue training on; needed when `--n` is positive.
    #[arg(long)]
    pub instance: Option<String>,
    /// Further students to train on (default 0).
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, env = "SEQTUTOR_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cost: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub context_dist: Option<Vec<f64>>,
    /// Snapshot file for the loaded (and possibly retrained) state.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl StateLoadArgs {
    pub fn merge(&mut self, file: Self) {
        merge_from!(self, file; instance, n, seed, epsilon, d, delta, cost, scale, context_dist, output);
    }
}

/// Contents of a `--config` file.
#[derive(Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub generate: GenerateArgs,
    pub oracle: OracleArgs,
    pub run: RunArgs,
    pub curve: CurveArgs,
    pub state_dump: StateDumpArgs,
    pub state_load: StateLoadArgs,
}
