//! The `timing-bench` subcommand: wall-clock cost of one training epoch
//! for each regularizer across hidden-layer widths.
//!
//! Absolute seconds depend on the host, so conclusions should be drawn
//! from ratios between rows (regularizer overhead at a fixed width, or
//! growth of one regularizer across widths), never from raw numbers.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use sparseout::{train_epoch, Rng};

use crate::data::synthesize_dataset;
use crate::run::{build_network, OutAct, Regularizer, RunConfig};
use crate::{CliError, Result};

/// Median epoch wall time for one (hidden width, regularizer) cell.
#[derive(Debug, Clone)]
pub struct TimingRecord {
    pub hidden: usize,
    pub regularizer: Regularizer,
    pub median_seconds: f64,
    pub all_seconds: Vec<f64>,
}

/// Median of a non-empty slice; averages the two middle values when the
/// length is even.
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Times `train_epoch` for every regularizer at every width. Each cell
/// runs one untimed warmup epoch, then `repeats` timed epochs, and
/// reports the median. Progress goes to stderr.
pub fn measure_timings(
    hidden_sizes: &[usize],
    batch_size: usize,
    repeats: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<TimingRecord>> {
    if repeats < 3 {
        return Err(CliError::InvalidArgument(format!(
            "timing requires at least 3 repeats for a stable median, got {repeats}"
        )));
    }
    if hidden_sizes.is_empty() {
        return Err(CliError::InvalidArgument(
            "timing requires at least one hidden size".into(),
        ));
    }
    let d = 784;
    let dataset = synthesize_dataset(n, d, seed ^ 0x7131_ED00)?;

    let regularizers = [
        Regularizer::None,
        Regularizer::Dropout,
        Regularizer::Sparseout,
        Regularizer::Bridgeout,
    ];
    let mut records = Vec::new();
    for &hidden in hidden_sizes {
        for reg in regularizers {
            let cfg = RunConfig {
                regularizer: reg,
                p: 0.5,
                q: 1.5,
                hidden_size: hidden,
                epochs: 1,
                learning_rate: 0.1,
                batch_size,
                seed,
                out_act: OutAct::Sigmoid,
                output_path: None,
            };
            cfg.validate()?;
            let mut init_rng = Rng::new(seed);
            let mut net = build_network(&cfg, d, &mut init_rng)?;
            let sgd = cfg.sgd();
            let mut train_rng = Rng::new(seed ^ 0x7E57_0123);

            // Warmup epoch: first-touch allocation and cache effects land
            // here instead of in the first timed repeat.
            train_epoch(
                &mut net,
                &dataset.images,
                &dataset.images,
                &sgd,
                &mut train_rng,
            )?;

            let mut all_seconds = Vec::with_capacity(repeats);
            for rep in 0..repeats {
                let start = Instant::now();
                train_epoch(
                    &mut net,
                    &dataset.images,
                    &dataset.images,
                    &sgd,
                    &mut train_rng,
                )?;
                let elapsed = start.elapsed().as_secs_f64();
                all_seconds.push(elapsed);
                eprintln!("timing: hidden={hidden} regularizer={reg} repeat={rep} {elapsed:.3}s");
            }
            records.push(TimingRecord {
                hidden,
                regularizer: reg,
                median_seconds: median(&all_seconds),
                all_seconds,
            });
        }
    }
    Ok(records)
}

/// CSV rendering, one row per (hidden width, regularizer) cell.
pub fn timings_to_csv(records: &[TimingRecord]) -> String {
    let mut out = String::from("hidden_size,regularizer,median_seconds\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.hidden, r.regularizer, r.median_seconds);
    }
    out
}

/// Runs the benchmark and optionally writes the CSV.
pub fn cmd_timing_bench(
    hidden_sizes: &[usize],
    batch_size: usize,
    repeats: usize,
    n: usize,
    seed: u64,
    output_path: Option<&Path>,
) -> Result<Vec<TimingRecord>> {
    let records = measure_timings(hidden_sizes, batch_size, repeats, n, seed)?;
    if let Some(path) = output_path {
        std::fs::write(path, timings_to_csv(&records))
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(records)
}
