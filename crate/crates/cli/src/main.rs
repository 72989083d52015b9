//! `randep`: randomized dependence measures and cause-effect inference from
//! the command line.

mod bench;
mod causal;
mod dependence;
mod fail;
mod input;

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "randep", version, about = "Randomized dependence measures and cause-effect classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SeedArg {
    /// Random seed; falls back to RANDEP_SEED, then 0.
    #[arg(long, env = "RANDEP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomized dependence coefficient between two column groups.
    Rdc(RdcArgs),
    /// Exact and randomized MMD between two samples.
    Mmd(MmdArgs),
    /// Train, apply and evaluate cause-effect classifiers.
    Rcc {
        #[command(subcommand)]
        command: RccCommand,
    },
    /// Reconstruct a DAG from a multivariate CSV with a trivariate model.
    Dag(DagArgs),
    /// Desk-scale reproduction suites, emitted as CSV.
    Bench(BenchArgs),
    /// Write synthetic samples as CSV.
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvalueMethod {
    Bartlett,
    /// Permutation null with the feature banks held fixed.
    Bootstrap,
}

#[derive(Args, Debug)]
pub struct RdcArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Columns of x (indices or header names, comma separated).
    #[arg(long, default_value = "0")]
    pub x_cols: String,
    #[arg(long, default_value = "1")]
    pub y_cols: String,
    /// Random features per view.
    #[arg(short, long, default_value_t = 20)]
    pub k: usize,
    /// Bandwidth is this scale divided by the view dimension.
    #[arg(long, default_value_t = 1.0 / 6.0)]
    pub gamma_scale: f64,
    #[arg(long, default_value_t = randep::component_analysis::DEFAULT_RIDGE)]
    pub ridge: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum)]
    pub pvalue: Option<PvalueMethod>,
    /// Replicates for the bootstrap p-value.
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct MmdArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Kernel bandwidth γ in exp(-γ‖u − v‖²).
    #[arg(long, conflicts_with = "median_heuristic")]
    pub gamma: Option<f64>,
    /// Choose γ from the pooled median squared distance (the default).
    #[arg(long)]
    pub median_heuristic: bool,
    /// Random features for the randomized estimate.
    #[arg(short, long, default_value_t = 1024)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logistic,
    Forest,
}

#[derive(Subcommand, Debug)]
enum RccCommand {
    /// Train on synthetic data and write a model bundle.
    Train(TrainArgs),
    /// Print p(X→Y) for a two-column pair file.
    Predict(PredictArgs),
    /// Score a directory of labelled pair files.
    EvalDir(EvalDirArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Comma-separated kernel bandwidths.
    #[arg(long, value_delimiter = ',')]
    pub bandwidths: Option<Vec<f64>>,
    /// Fresh synthetic samples scored after training.
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Also learn confounded and independent classes.
    #[arg(long)]
    pub extended_labels: bool,
    /// Train the three-variable model used by `dag`.
    #[arg(long)]
    pub trivariate: bool,
    /// TOML file with defaults for the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct EvalDirArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dir: PathBuf,
    /// Label file; defaults to `labels.txt` or `pairmeta.txt` inside the directory.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct DagArgs {
    #[arg(long)]
    pub model3: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Write DOT here and print the edge list instead.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Bernstein,
    Power,
    Null,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Sample size (default per suite).
    #[arg(long)]
    pub n: Option<usize>,
    /// Seeds (bernstein), repetitions (power) or replicates (null).
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Noise variances for the power suite.
    #[arg(long, value_delimiter = ',')]
    pub noise: Option<Vec<f64>>,
    /// Feature counts for the bernstein suite.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Causal,
    Confounded,
    Independent,
}

#[derive(Subcommand, Debug)]
enum SynthCommand {
    /// A two-column pair with x → y (or a confounded / independent pair).
    Pair {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_enum, default_value_t = PairKind::Causal)]
        kind: PairKind,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A three-column sample from one of the eight canonical DAGs (0..=7).
    Triple {
        #[arg(long, default_value_t = 0)]
        dag: usize,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> fail::CmdResult {
    match cli.command {
        Command::Rdc(a) => dependence::rdc(&a),
        Command::Mmd(a) => dependence::mmd(&a),
        Command::Rcc { command: RccCommand::Train(a) } => causal::train(&a),
        Command::Rcc { command: RccCommand::Predict(a) } => causal::predict(&a),
        Command::Rcc { command: RccCommand::EvalDir(a) } => causal::eval_dir(&a),
        Command::Dag(a) => causal::dag(&a),
        Command::Bench(a) => bench::bench(&a),
        Command::Synth { command: SynthCommand::Pair { n, kind, seed, out } } => {
            bench::synth_pair(n, kind, seed.seed, out.as_deref())
        }
        Command::Synth { command: SynthCommand::Triple { dag, n, seed, out } } => {
            bench::synth_triple(dag, n, seed.seed, out.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                std::process::exit(2);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
