//! The `train` subcommand: one run, one CSV.

use std::fs;

use crate::data::Dataset;
use crate::run::{records_to_csv, train_autoencoder, EpochRecord, RunConfig};
use crate::{CliError, Result};

/// Trains one autoencoder and writes its per-epoch trace as CSV if an
/// output path is configured. Returns the records for programmatic use.
pub fn cmd_train(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<EpochRecord>> {
    let result = train_autoencoder(dataset, cfg)?;
    if let Some(path) = &cfg.output_path {
        let csv = records_to_csv(&result.records);
        fs::write(path, csv).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(result.records)
}
