//! Datasets: IDX ingestion, synthetic blobs and seeded mini-batching.
//!
//! IDX files (the MNIST container) are big-endian: two zero bytes, a data
//! type byte (`0x08` = unsigned byte), a dimension count byte, one `u32` per
//! dimension, then the raw values. Image files must carry magic
//! `0x00000803` and label files `0x00000801`. Pixels are scaled to `[0, 1]`
//! by dividing by 255.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Tensor;

/// Environment variable naming the directory relative dataset paths are
/// resolved against.
pub const DATA_DIR_ENV: &str = "GRAVITY_DATA_DIR";

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Feature matrix in `[0, 1]` with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(Error::argument(
                "dataset needs positive feature and class counts",
            ));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::argument(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::argument(format!("feature {i} lies outside [0, 1]")));
        }
        if let Some(i) = labels.iter().position(|&y| y >= classes) {
            return Err(Error::argument(format!(
                "label {} at row {i} is outside [0, {classes})",
                labels[i]
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Copies the given rows into an `[len, dim]` batch. Panics on an empty
    /// index list.
    pub fn gather(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let mut x = Vec::with_capacity(indices.len() * self.dim);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.labels[i]);
        }
        let t =
            Tensor::new(vec![indices.len(), self.dim], x).expect("gather needs at least one index");
        (t, y)
    }

    /// Contiguous rows `start..end` as a batch.
    pub fn slice(&self, start: usize, end: usize) -> (Tensor, Vec<usize>) {
        let x = self.features[start * self.dim..end * self.dim].to_vec();
        let t = Tensor::new(vec![end - start, self.dim], x).expect("non-empty slice");
        (t, self.labels[start..end].to_vec())
    }

    /// Keeps only the first `n` rows.
    pub fn truncated(mut self, n: usize) -> Self {
        if n < self.len() {
            self.labels.truncate(n);
            self.features.truncate(n * self.dim);
        }
        self
    }

    /// Widens the class count, e.g. to align train and test splits.
    pub fn with_classes(mut self, classes: usize) -> Result<Self> {
        if classes < self.classes {
            return Err(Error::argument("cannot shrink the class count"));
        }
        self.classes = classes;
        Ok(self)
    }

    /// Splits into the first `n` rows and the rest.
    pub fn split_at(self, n: usize) -> Result<(Self, Self)> {
        if n == 0 || n >= self.len() {
            return Err(Error::argument(format!(
                "split point {n} must lie strictly inside 0..{}",
                self.len()
            )));
        }
        let (dim, classes) = (self.dim, self.classes);
        let mut features = self.features;
        let mut labels = self.labels;
        let rest_x = features.split_off(n * dim);
        let rest_y = labels.split_off(n);
        Ok((
            Self {
                features,
                labels,
                dim,
                classes,
            },
            Self {
                features: rest_x,
                labels: rest_y,
                dim,
                classes,
            },
        ))
    }
}

/// Parsed IDX header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    pub fn data_type(&self) -> u8 {
        (self.magic >> 8) as u8
    }

    /// Size of the header in bytes.
    pub fn header_bytes(&self) -> usize {
        4 + 4 * self.dims.len()
    }

    /// Number of payload elements implied by the dimensions.
    pub fn element_count(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).product()
    }
}

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err(path, bytes.len() as u64, "file truncated inside the header"))
}

/// Parses the header of an in-memory IDX file.
pub fn parse_idx_header(bytes: &[u8], path: &Path) -> Result<IdxHeader> {
    let magic = be_u32(bytes, 0, path)?;
    if magic >> 16 != 0 {
        return Err(format_err(path, 0, format!("bad IDX magic 0x{magic:08x}")));
    }
    let ndims = (magic & 0xff) as usize;
    let dims = (0..ndims)
        .map(|i| be_u32(bytes, 4 + 4 * i, path))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdxHeader { magic, dims })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads only the header of an IDX file.
pub fn read_idx_header(path: impl AsRef<Path>) -> Result<IdxHeader> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let header = parse_idx_header(&bytes, path)?;
    let expected =
        header.header_bytes() as u64 + header.element_count() * element_size(header.data_type());
    if (bytes.len() as u64) < expected {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!("file truncated: header promises {expected} bytes"),
        ));
    }
    Ok(header)
}

fn element_size(dtype: u8) -> u64 {
    match dtype {
        0x08 | 0x09 => 1,
        0x0b => 2,
        0x0c | 0x0d => 4,
        0x0e => 8,
        _ => 1,
    }
}

fn read_idx_payload(path: &Path, magic: u32) -> Result<(IdxHeader, Vec<u8>)> {
    let mut bytes = read_file(path)?;
    let header = parse_idx_header(&bytes, path)?;
    if header.magic != magic {
        return Err(format_err(
            path,
            0,
            format!("expected magic 0x{magic:08x}, found 0x{:08x}", header.magic),
        ));
    }
    let start = header.header_bytes();
    let want = header.element_count() as usize;
    if bytes.len() < start + want {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!("file truncated: expected {want} payload bytes after offset {start}"),
        ));
    }
    bytes.truncate(start + want);
    let payload = bytes.split_off(start);
    Ok((header, payload))
}

/// Loads an image/label IDX pair.
///
/// Images are flattened row-major to `rows·cols` features; the class count
/// is one more than the largest label.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let (img_header, pixels) = read_idx_payload(images_path, IDX_IMAGES_MAGIC)?;
    let (lbl_header, raw_labels) = read_idx_payload(labels_path, IDX_LABELS_MAGIC)?;
    let (count, rows, cols) = (img_header.dims[0], img_header.dims[1], img_header.dims[2]);
    if lbl_header.dims[0] != count {
        return Err(format_err(
            labels_path,
            4,
            format!(
                "{} labels for {count} images in {}",
                lbl_header.dims[0],
                images_path.display()
            ),
        ));
    }
    let dim = rows as usize * cols as usize;
    if dim == 0 {
        return Err(format_err(images_path, 8, "images have a zero dimension"));
    }
    let features = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&l| l as usize).collect();
    let classes = labels.iter().copied().max().map_or(1, |m| m + 1);
    Dataset::new(features, labels, dim, classes)
}

/// Resolves a dataset path: absolute paths are kept, relative ones are
/// joined onto `root`, else onto `$GRAVITY_DATA_DIR`, else used as is.
pub fn resolve_path(path: &Path, root: Option<&Path>) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match root {
        Some(r) => r.join(path),
        None => match std::env::var_os(DATA_DIR_ENV) {
            Some(r) => PathBuf::from(r).join(path),
            None => path.to_path_buf(),
        },
    }
}

/// `k` Gaussian clusters in `[0, 1]^d`.
///
/// Centres are uniform in `[0.2, 0.8]^d`; sample `i` belongs to class
/// `i mod k` and is its centre plus `spread·N(0, I)`, clipped to `[0, 1]`.
pub fn synthetic_blobs(n: usize, d: usize, k: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if k < 2 || n < k || d == 0 {
        return Err(Error::argument(format!(
            "synthetic blobs need n >= k >= 2 and d > 0 (n={n}, d={d}, k={k})"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::argument(format!(
            "spread must be non-negative, got {spread}"
        )));
    }
    let mut rng = seed::rng(seed);
    let centres: Vec<f64> = (0..k * d).map(|_| rng.random_range(0.2..0.8)).collect();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push((centres[c * d + j] + spread * z).clamp(0.0, 1.0));
        }
        labels.push(c);
    }
    Dataset::new(features, labels, d, k)
}

/// How an epoch is cut into mini-batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub drop_last: bool,
}

/// One epoch's sample order, chunked into batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochBatches {
    order: Vec<usize>,
    batch_size: usize,
    drop_last: bool,
}

impl EpochBatches {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        if self.drop_last {
            self.order.len() / self.batch_size
        } else {
            self.order.len().div_ceil(self.batch_size)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.order.chunks(self.batch_size).take(self.len())
    }
}

impl BatchPlan {
    pub fn new(batch_size: usize, shuffle_seed: u64) -> Self {
        Self {
            batch_size,
            shuffle_seed,
            drop_last: false,
        }
    }

    /// Shuffled order for `epoch`, seeded from `(shuffle_seed, epoch)`.
    pub fn epoch(&self, n: usize, epoch: u64) -> Result<EpochBatches> {
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::argument(format!(
                "batch size {} must lie in 1..={n}",
                self.batch_size
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed::rng(seed::derive(self.shuffle_seed, epoch));
        order.shuffle(&mut rng);
        Ok(EpochBatches {
            order,
            batch_size: self.batch_size,
            drop_last: self.drop_last,
        })
    }
}

pub fn batches(dataset: &Dataset, plan: &BatchPlan, epoch: u64) -> Result<EpochBatches> {
    plan.epoch(dataset.len(), epoch)
}
