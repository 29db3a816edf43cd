//! Command-line entry point for sparseout experiments.
//!
//! Subcommands:
//! - `train`          one autoencoder run, per-epoch loss and sparsity
//! - `sparsity-sweep` dropout baseline plus sparseout across q values
//! - `verify-theorems` machine-checked variance and equivalence claims
//! - `timing-bench`   epoch wall-time per regularizer across widths
//!
//! Every command is deterministic given its seed: rerunning with the same
//! arguments reproduces output files byte for byte (timing excepted, since
//! it measures the host).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparseout_cli::commands::{
    cmd_sparsity_sweep, cmd_timing_bench, cmd_train, cmd_verify_theorems, sweep_to_csv,
    timings_to_csv,
};
use sparseout_cli::data::{load_mnist_idx, synthesize_dataset, Dataset};
use sparseout_cli::run::{records_to_csv, OutAct, Regularizer, RunConfig};
use sparseout_cli::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "sparseout",
    version,
    about = "Train and analyze sparsity-inducing stochastic regularizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one autoencoder and record per-epoch loss and hidden-layer
    /// sparsity.
    Train(TrainArgs),
    /// Train a dropout baseline plus one sparseout run per q, all from the
    /// same seed, and record per-epoch held-out loss and sparsity.
    SparsitySweep(SweepArgs),
    /// Check the closed-form variance and the dropout-equivalence claims
    /// against Monte-Carlo and bitwise oracles. Exits 2 on any failure.
    VerifyTheorems(VerifyArgs),
    /// Measure median epoch wall time per regularizer across hidden widths.
    /// Interpret ratios between rows, not absolute seconds.
    TimingBench(TimingArgs),
}

/// Where the training images come from.
#[derive(Args, Debug)]
struct DataArgs {
    /// Path to an IDX image file (MNIST format), or "synthetic" for the
    /// built-in generator.
    #[arg(long, default_value = "synthetic")]
    data: String,

    /// Optional IDX label file accompanying an IDX --data file.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Sample count for synthetic data.
    #[arg(long, default_value_t = 1250)]
    n: usize,

    /// Feature dimension for synthetic data.
    #[arg(long, default_value_t = 784)]
    d: usize,

    /// Seed for the synthetic generator (independent of --seed so the
    /// dataset can be held fixed while training randomness varies).
    #[arg(long, default_value_t = 1234)]
    data_seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        if self.data == "synthetic" {
            if self.labels.is_some() {
                return Err(CliError::InvalidArgument(
                    "--labels requires an IDX --data file".into(),
                ));
            }
            synthesize_dataset(self.n, self.d, self.data_seed)
        } else {
            load_mnist_idx(Path::new(&self.data), self.labels.as_deref())
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Regularizer on the hidden layer: none|dropout|sparseout|bridgeout.
    #[arg(long, default_value = "sparseout")]
    regularizer: String,

    /// Keep probability of the Bernoulli mask, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    p: f64,

    /// Norm exponent in (0, 4]; 2 recovers dropout, below 2 promotes
    /// sparsity.
    #[arg(long, default_value_t = 2.0)]
    q: f64,

    /// Hidden layer width.
    #[arg(long, default_value_t = 512)]
    hidden: usize,

    /// Training epochs.
    #[arg(long, default_value_t = 25)]
    epochs: usize,

    /// SGD learning rate.
    #[arg(long, default_value_t = 0.1)]
    lr: f64,

    /// Minibatch size.
    #[arg(long, default_value_t = 128)]
    batch: usize,

    /// Seed for weight initialization and training randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Decoder output activation: sigmoid|linear.
    #[arg(long, default_value = "sigmoid")]
    out_act: String,

    /// Write the per-epoch CSV here; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainArgs {
    fn to_config(&self) -> Result<RunConfig> {
        check_q(self.q)?;
        let cfg = RunConfig {
            regularizer: Regularizer::parse(&self.regularizer)?,
            p: self.p,
            q: self.q,
            hidden_size: self.hidden,
            epochs: self.epochs,
            learning_rate: self.lr,
            batch_size: self.batch,
            seed: self.seed,
            out_act: OutAct::parse(&self.out_act)?,
            output_path: self.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Comma-separated norm exponents for the sparseout runs.
    #[arg(long, default_value = "1.5,2.0,2.5")]
    q_list: String,

    /// Keep probability of the Bernoulli mask, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    p: f64,

    /// Hidden layer width.
    #[arg(long, default_value_t = 512)]
    hidden: usize,

    /// Training epochs per run.
    #[arg(long, default_value_t = 25)]
    epochs: usize,

    /// SGD learning rate.
    #[arg(long, default_value_t = 0.1)]
    lr: f64,

    /// Minibatch size.
    #[arg(long, default_value_t = 128)]
    batch: usize,

    /// Seed shared by every run in the sweep.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Decoder output activation: sigmoid|linear.
    #[arg(long, default_value = "sigmoid")]
    out_act: String,

    /// Write the combined CSV here; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Seed for the verification oracles.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Negative control: skew the analytic variance by 5% so the grid
    /// checks must fail. Proves the harness can fail.
    #[arg(long, hide = true)]
    corrupt_variance: bool,
}

#[derive(Args, Debug)]
struct TimingArgs {
    /// Comma-separated hidden widths to measure.
    #[arg(long, default_value = "1024,2048")]
    hidden_sizes: String,

    /// Timed epochs per cell (median is reported); at least 3.
    #[arg(long, default_value_t = 3)]
    repeats: usize,

    /// Synthetic sample count per epoch.
    #[arg(long, default_value_t = 256)]
    n: usize,

    /// Minibatch size.
    #[arg(long, default_value_t = 128)]
    batch: usize,

    /// Seed for data and training randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Write the timing CSV here; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Command-line policy on the norm exponent: hard limit (0, 4], warning
/// outside the well-tested band [1, 3].
fn check_q(q: f64) -> Result<()> {
    if !q.is_finite() || q <= 0.0 || q > 4.0 {
        return Err(CliError::InvalidArgument(format!(
            "norm exponent q must be in (0, 4], got {q}"
        )));
    }
    if !(1.0..=3.0).contains(&q) {
        eprintln!("warning: q={q} is outside the well-tested range [1, 3]");
    }
    Ok(())
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| {
            let trimmed = part.trim();
            trimmed
                .parse::<f64>()
                .map_err(|_| CliError::InvalidArgument(format!("bad value '{trimmed}' in {flag}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            let trimmed = part.trim();
            trimmed
                .parse::<usize>()
                .map_err(|_| CliError::InvalidArgument(format!("bad value '{trimmed}' in {flag}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.to_config()?;
            let dataset = args.data.load()?;
            let records = cmd_train(&dataset, &cfg)?;
            match &cfg.output_path {
                Some(path) => {
                    let last = records.last().expect("training produces >= 1 epoch");
                    println!(
                        "wrote {} epoch records to {} (final test loss {}, hoyer {})",
                        records.len(),
                        path.display(),
                        last.test_loss,
                        last.hoyer
                    );
                }
                None => print!("{}", records_to_csv(&records)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SparsitySweep(args) => {
            let q_list = parse_f64_list(&args.q_list, "--q-list")?;
            for &q in &q_list {
                check_q(q)?;
            }
            let base = RunConfig {
                regularizer: Regularizer::Sparseout,
                p: args.p,
                q: 2.0,
                hidden_size: args.hidden,
                epochs: args.epochs,
                learning_rate: args.lr,
                batch_size: args.batch,
                seed: args.seed,
                out_act: OutAct::parse(&args.out_act)?,
                output_path: args.out.clone(),
            };
            base.validate()?;
            let dataset = args.data.load()?;
            let rows = cmd_sparsity_sweep(&dataset, &base, &q_list)?;
            match &base.output_path {
                Some(path) => {
                    println!("wrote {} sweep rows to {}", rows.len(), path.display());
                }
                None => print!("{}", sweep_to_csv(&rows)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyTheorems(args) => {
            let report = cmd_verify_theorems(args.seed, args.corrupt_variance)?;
            print!("{}", report.render());
            if report.all_passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::TimingBench(args) => {
            let hidden_sizes = parse_usize_list(&args.hidden_sizes, "--hidden-sizes")?;
            let records = cmd_timing_bench(
                &hidden_sizes,
                args.batch,
                args.repeats,
                args.n,
                args.seed,
                args.out.as_deref(),
            )?;
            match &args.out {
                Some(path) => {
                    println!("wrote {} timing rows to {}", records.len(), path.display());
                }
                None => print!("{}", timings_to_csv(&records)),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
