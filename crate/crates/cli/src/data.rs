//! Dataset ingestion: IDX image files and a deterministic synthetic
//! fallback.
//!
//! The IDX container holds a big-endian magic number (0x00000803 for
//! unsigned-byte image cubes, 0x00000801 for label vectors), the dimension
//! sizes, then raw bytes. Images are flattened row-major to one example per
//! tensor row and scaled from [0, 255] to [0, 1].

use std::fs;
use std::path::Path;

use sparseout::{Rng, Tensor};

use crate::{CliError, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Where a dataset's pixels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    MnistIdx,
    Synthetic,
}

/// A loaded dataset: one example per row, all values in [0, 1].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Tensor,
    pub labels: Option<Vec<u8>>,
    pub source: DataSource,
    /// Generator seed for synthetic data; 0 for file-loaded data.
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.images.rows()
    }

    pub fn d(&self) -> usize {
        self.images.cols()
    }

    /// Splits into (train, held-out): the held-out part is the last
    /// `holdout_fraction` of rows (at least 1 row) and is never trained on.
    pub fn split(&self, holdout_fraction: f64) -> Result<(Tensor, Tensor)> {
        if !(0.0..1.0).contains(&holdout_fraction) || self.n() < 2 {
            return Err(CliError::InvalidArgument(format!(
                "cannot hold out {holdout_fraction} of {} examples",
                self.n()
            )));
        }
        let holdout = ((self.n() as f64 * holdout_fraction).round() as usize).max(1);
        let train_n = self.n() - holdout;
        if train_n == 0 {
            return Err(CliError::InvalidArgument(
                "holdout fraction leaves no training data".into(),
            ));
        }
        let train_idx: Vec<usize> = (0..train_n).collect();
        let hold_idx: Vec<usize> = (train_n..self.n()).collect();
        Ok((
            self.images.select_rows(&train_idx)?,
            self.images.select_rows(&hold_idx)?,
        ))
    }
}

/// Cursor over a byte buffer that reports the offset of any failure.
struct IdxReader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> IdxReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        IdxReader { bytes, offset: 0 }
    }

    fn read_u32_be(&mut self, what: &str) -> Result<u32> {
        let end = self.offset + 4;
        if end > self.bytes.len() {
            return Err(CliError::Format {
                offset: self.offset as u64,
                message: format!("file truncated while reading {what}"),
            });
        }
        let v = u32::from_be_bytes(self.bytes[self.offset..end].try_into().unwrap());
        self.offset = end;
        Ok(v)
    }

    fn read_bytes(&mut self, count: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.offset + count;
        if end > self.bytes.len() {
            return Err(CliError::Format {
                offset: self.bytes.len() as u64,
                message: format!(
                    "file truncated: {what} needs {count} bytes starting at offset {}, file has {}",
                    self.offset,
                    self.bytes.len()
                ),
            });
        }
        let s = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(s)
    }
}

/// Loads an IDX image file (and optionally its label file) into a dataset.
///
/// Pixels are divided by 255, so byte 255 maps to exactly 1.0. A 28x28
/// image becomes one 784-wide row, row-major.
pub fn load_mnist_idx(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset> {
    let bytes =
        fs::read(images_path).map_err(|e| CliError::io(images_path.display().to_string(), e))?;
    let mut r = IdxReader::new(&bytes);

    let magic = r.read_u32_be("image magic number")?;
    if magic != IMAGES_MAGIC {
        let hint = if magic == LABELS_MAGIC {
            " (this is a label file, not an image file)"
        } else {
            ""
        };
        return Err(CliError::Format {
            offset: 0,
            message: format!("bad image magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}{hint}"),
        });
    }
    let n = r.read_u32_be("image count")? as usize;
    let rows = r.read_u32_be("image height")? as usize;
    let cols = r.read_u32_be("image width")? as usize;
    if n == 0 || rows == 0 || cols == 0 {
        return Err(CliError::Format {
            offset: 4,
            message: format!("degenerate dimensions {n} x {rows} x {cols}"),
        });
    }
    let pixels = r.read_bytes(n * rows * cols, "pixel data")?;
    let data: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let images = Tensor::from_vec(n, rows * cols, data)?;

    let labels = match labels_path {
        None => None,
        Some(path) => Some(load_idx_labels(path, n)?),
    };

    Ok(Dataset {
        images,
        labels,
        source: DataSource::MnistIdx,
        seed: 0,
    })
}

fn load_idx_labels(path: &Path, expected_n: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let mut r = IdxReader::new(&bytes);
    let magic = r.read_u32_be("label magic number")?;
    if magic != LABELS_MAGIC {
        return Err(CliError::Format {
            offset: 0,
            message: format!("bad label magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"),
        });
    }
    let n = r.read_u32_be("label count")? as usize;
    if n != expected_n {
        return Err(CliError::Format {
            offset: 4,
            message: format!("label count {n} does not match image count {expected_n}"),
        });
    }
    Ok(r.read_bytes(n, "label data")?.to_vec())
}

/// Deterministic synthetic stand-in for MNIST when no IDX files are at
/// hand: 10 random prototype vectors, each example a prototype plus
/// uniform noise, clipped to [0, 1]. The same seed always yields the same
/// tensor, bitwise.
pub fn synthesize_dataset(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(CliError::InvalidArgument(format!(
            "synthetic dataset needs n >= 1 and d >= 1, got {n} x {d}"
        )));
    }
    let mut rng = Rng::new(seed);
    let k = 10usize;
    let prototypes = rng.uniform_tensor(k, d, 0.0, 1.0);
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let proto = prototypes.row(i % k);
        for &base in proto {
            let noisy = base + rng.uniform(-0.15, 0.15);
            data.push(noisy.clamp(0.0, 1.0));
        }
    }
    Ok(Dataset {
        images: Tensor::from_vec(n, d, data)?,
        labels: None,
        source: DataSource::Synthetic,
        seed,
    })
}
