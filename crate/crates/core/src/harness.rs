//! Reproducible training runs.
//!
//! A [`RunConfig`] fully determines a run. The master seed is split into
//! independent sub-seeds (see [`crate::seed`]) for model initialisation,
//! optimizer state and batch shuffling. Each run trains sequentially, so
//! identical configs produce identical [`MetricsLog`]s; only per-batch
//! evaluation and [`compare`] fan out, and both collect results in a fixed
//! order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{load_idx, resolve_path, synthetic_blobs, BatchPlan, Dataset};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::nn::{self, Model};
use crate::optim::OptimizerSpec;
use crate::seed;
use crate::tensor::Tensor;

/// Batch size used for the per-epoch evaluation passes.
pub const EVAL_BATCH_SIZE: usize = 1000;

pub const METRICS_FILE: &str = "metrics.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const CSV_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,wall_seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Hidden layer widths; input and output widths come from the dataset.
    pub hidden: Vec<usize>,
}

impl ModelSpec {
    pub fn layer_specs(&self, input_dim: usize, classes: usize) -> Result<Vec<nn::LayerSpec>> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(classes);
        nn::mlp_specs(&dims)
    }
}

fn mnist_train_images() -> PathBuf {
    "train-images-idx3-ubyte".into()
}
fn mnist_train_labels() -> PathBuf {
    "train-labels-idx1-ubyte".into()
}
fn mnist_test_images() -> PathBuf {
    "t10k-images-idx3-ubyte".into()
}
fn mnist_test_labels() -> PathBuf {
    "t10k-labels-idx1-ubyte".into()
}

/// Where the training and validation splits come from. The official test
/// split of an IDX dataset serves as the validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    Idx {
        /// Directory for relative file names; falls back to `$GRAVITY_DATA_DIR`.
        #[serde(default)]
        root: Option<PathBuf>,
        #[serde(default = "mnist_train_images")]
        train_images: PathBuf,
        #[serde(default = "mnist_train_labels")]
        train_labels: PathBuf,
        #[serde(default = "mnist_test_images")]
        test_images: PathBuf,
        #[serde(default = "mnist_test_labels")]
        test_labels: PathBuf,
        /// Use only the first `train_limit` training rows.
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
    /// Gaussian blobs; `n_train + n_val` samples are drawn and split.
    Synthetic {
        n_train: usize,
        n_val: usize,
        dim: usize,
        classes: usize,
        spread: f64,
        seed: u64,
    },
}

impl DatasetSpec {
    pub fn idx_in(root: impl Into<PathBuf>) -> Self {
        DatasetSpec::Idx {
            root: Some(root.into()),
            train_images: mnist_train_images(),
            train_labels: mnist_train_labels(),
            test_images: mnist_test_images(),
            test_labels: mnist_test_labels(),
            train_limit: None,
            test_limit: None,
        }
    }

    /// Loads `(train, validation)` with a shared class count.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetSpec::Idx {
                root,
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_limit,
                test_limit,
            } => {
                let root = root.as_deref();
                let mut train = load_idx(
                    resolve_path(train_images, root),
                    resolve_path(train_labels, root),
                )?;
                let mut val = load_idx(
                    resolve_path(test_images, root),
                    resolve_path(test_labels, root),
                )?;
                if let Some(n) = train_limit {
                    train = train.truncated(*n);
                }
                if let Some(n) = test_limit {
                    val = val.truncated(*n);
                }
                if train.dim() != val.dim() {
                    return Err(Error::config(format!(
                        "train images have {} features, test images {}",
                        train.dim(),
                        val.dim()
                    )));
                }
                let k = train.classes().max(val.classes());
                Ok((train.with_classes(k)?, val.with_classes(k)?))
            }
            &DatasetSpec::Synthetic {
                n_train,
                n_val,
                dim,
                classes,
                spread,
                seed,
            } => {
                if n_val == 0 || n_train < classes {
                    return Err(Error::config(
                        "synthetic dataset needs n_val > 0 and n_train >= classes",
                    ));
                }
                synthetic_blobs(n_train + n_val, dim, classes, spread, seed)?.split_at(n_train)
            }
        }
    }
}

fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    128
}
fn default_output_dir() -> PathBuf {
    "runs".into()
}
fn yes() -> bool {
    true
}

/// Everything that defines a training run. Serialised as JSON; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
    pub optimizer: OptimizerSpec,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// When false, `wall_seconds` is written as 0 so that logs of repeated
    /// runs compare byte for byte.
    #[serde(default = "yes")]
    pub record_wall_time: bool,
}

impl RunConfig {
    pub fn new(model: ModelSpec, dataset: DatasetSpec, optimizer: OptimizerSpec) -> Self {
        Self {
            model,
            dataset,
            optimizer,
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            seed: 0,
            output_dir: default_output_dir(),
            record_wall_time: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if self.model.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form with `output_dir` blanked, hex
    /// encoded. Where a run is written does not change its identity.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.output_dir = PathBuf::new();
        let json = serde_json::to_string(&keyed).expect("run config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub optimizer: String,
    pub epochs_requested: usize,
    pub epochs_completed: usize,
    pub status: RunStatus,
    /// Why the run stopped early, for failed runs.
    pub failure: Option<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub records: Vec<EpochRecord>,
    pub metadata: RunMetadata,
}

impl MetricsLog {
    fn new(config: &RunConfig) -> Self {
        Self {
            records: Vec::new(),
            metadata: RunMetadata {
                config_hash: config.hash(),
                seed: config.seed,
                optimizer: config.optimizer.name().to_string(),
                epochs_requested: config.epochs,
                epochs_completed: 0,
                status: RunStatus::Completed,
                failure: None,
                config: config.clone(),
            },
        }
    }

    fn fail(&mut self, message: String) {
        self.metadata.status = RunStatus::Failed;
        self.metadata.failure = Some(message);
    }

    pub fn failed(&self) -> bool {
        self.metadata.status == RunStatus::Failed
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch,
                fmt_sig9(r.train_loss),
                fmt_sig9(r.train_acc),
                fmt_sig9(r.val_loss),
                fmt_sig9(r.val_acc),
                fmt_sig9(r.wall_seconds)
            );
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serialises") + "\n"
    }

    /// Writes `metrics.csv` and `metadata.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(METRICS_FILE);
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let meta = dir.join(METADATA_FILE);
        fs::write(&meta, self.metadata_json()).map_err(|e| Error::io(&meta, e))?;
        Ok(())
    }
}

/// Formats with 9 significant digits, `%.9g` style.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}").to_lowercase();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Full-pass mean loss and accuracy. Never touches the parameters.
pub fn evaluate(model: &Model, data: &Dataset, batch_size: usize) -> Result<(f64, f64)> {
    evaluate_with(model, data, batch_size, ExecMode::default())
}

pub fn evaluate_with(
    model: &Model,
    data: &Dataset,
    batch_size: usize,
    mode: ExecMode,
) -> Result<(f64, f64)> {
    if batch_size == 0 {
        return Err(Error::argument("evaluation batch size must be positive"));
    }
    if data.dim() != model.input_dim() {
        return Err(Error::argument(format!(
            "model expects {} features, dataset has {}",
            model.input_dim(),
            data.dim()
        )));
    }
    if data.classes() > model.num_classes() {
        return Err(Error::argument(format!(
            "dataset has {} classes, model outputs {}",
            data.classes(),
            model.num_classes()
        )));
    }
    let n = data.len();
    if n == 0 {
        return Err(Error::argument("cannot evaluate on an empty dataset"));
    }
    let step = batch_size.min(n);
    let starts: Vec<usize> = (0..n).step_by(step).collect();
    let parts = mode.map(&starts, |&s| -> Result<(f64, usize)> {
        let (x, y) = data.slice(s, (s + step).min(n));
        let logits = model.forward(&x)?;
        nn::loss_sum_and_hits(&logits, &y)
    });
    let mut loss = 0.0;
    let mut hits = 0;
    for part in parts {
        let (l, h) = part?;
        loss += l;
        hits += h;
    }
    Ok((loss / n as f64, hits as f64 / n as f64))
}

/// Loads the configured dataset and trains.
pub fn train(config: &RunConfig) -> Result<MetricsLog> {
    config.validate()?;
    let (train_set, val_set) = config.dataset.load()?;
    train_on(config, &train_set, &val_set)
}

/// Trains on already loaded splits.
///
/// Configuration and shape problems are returned as errors. A non-finite
/// loss or optimizer update stops the run; the epochs completed so far are
/// kept and the log is marked failed.
pub fn train_on(config: &RunConfig, train_set: &Dataset, val_set: &Dataset) -> Result<MetricsLog> {
    config.validate()?;
    let specs = config
        .model
        .layer_specs(train_set.dim(), train_set.classes())?;
    let mut model = Model::new(&specs, seed::derive(config.seed, seed::MODEL_INIT_STREAM))?;
    let mut optimizer = config.optimizer.build(
        &model.param_shapes(),
        seed::derive(config.seed, seed::OPTIMIZER_STREAM),
    )?;
    let plan = BatchPlan::new(
        config.batch_size,
        seed::derive(config.seed, seed::SHUFFLE_STREAM),
    );
    let mut log = MetricsLog::new(config);

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let order = plan.epoch(train_set.len(), epoch as u64)?;
        for (b, batch) in order.iter().enumerate() {
            let (x, y): (Tensor, Vec<usize>) = train_set.gather(batch);
            let (loss, grads) = model.loss_and_grads(&x, &y)?;
            if !loss.is_finite() {
                log.fail(format!(
                    "epoch {epoch}, batch {b}: non-finite training loss"
                ));
                return Ok(log);
            }
            match optimizer.step(model.params_mut(), &grads) {
                Ok(()) => {}
                Err(e @ Error::Numeric { .. }) => {
                    log.fail(format!("epoch {epoch}, batch {b}: {e}"));
                    return Ok(log);
                }
                Err(e) => return Err(e),
            }
        }
        let (train_loss, train_acc) = evaluate(&model, train_set, EVAL_BATCH_SIZE)?;
        let (val_loss, val_acc) = evaluate(&model, val_set, EVAL_BATCH_SIZE)?;
        if !(train_loss.is_finite() && val_loss.is_finite()) {
            log.fail(format!("epoch {epoch}: non-finite evaluation loss"));
            return Ok(log);
        }
        let wall_seconds = if config.record_wall_time {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        log.records.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
            wall_seconds,
        });
        log.metadata.epochs_completed = epoch;
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub optimizer: String,
    pub best_val_acc: f64,
    pub final_val_loss: f64,
    pub epochs_completed: usize,
    pub status: RunStatus,
}

/// Logs of several runs over the same data and model.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub logs: Vec<MetricsLog>,
}

impl Comparison {
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.labels
            .iter()
            .zip(&self.logs)
            .map(|(label, log)| SummaryRow {
                label: label.clone(),
                optimizer: log.metadata.optimizer.clone(),
                best_val_acc: log
                    .records
                    .iter()
                    .map(|r| r.val_acc)
                    .fold(f64::NAN, f64::max),
                final_val_loss: log.last().map_or(f64::NAN, |r| r.val_loss),
                epochs_completed: log.metadata.epochs_completed,
                status: log.metadata.status,
            })
            .collect()
    }

    /// Long-format per-epoch table: one row per (epoch, run).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,run,optimizer,train_loss,train_acc,val_loss,val_acc\n");
        let epochs = self.logs.iter().map(|l| l.records.len()).max().unwrap_or(0);
        for e in 0..epochs {
            for (label, log) in self.labels.iter().zip(&self.logs) {
                if let Some(r) = log.records.get(e) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.epoch,
                        label,
                        log.metadata.optimizer,
                        fmt_sig9(r.train_loss),
                        fmt_sig9(r.train_acc),
                        fmt_sig9(r.val_loss),
                        fmt_sig9(r.val_acc)
                    );
                }
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("run,optimizer,best_val_acc,final_val_loss,epochs_completed,status\n");
        for row in self.summary() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.label,
                row.optimizer,
                fmt_sig9(row.best_val_acc),
                fmt_sig9(row.final_val_loss),
                row.epochs_completed,
                match row.status {
                    RunStatus::Completed => "completed",
                    RunStatus::Failed => "failed",
                }
            );
        }
        out
    }

    /// Writes one sub-directory per run plus `comparison.csv` and
    /// `summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (label, log) in self.labels.iter().zip(&self.logs) {
            log.write(&dir.join(label))?;
        }
        let path = dir.join("comparison.csv");
        fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))?;
        let path = dir.join("summary.csv");
        fs::write(&path, self.summary_csv()).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

/// Runs every config on a shared dataset and model architecture.
pub fn compare(configs: &[RunConfig], mode: ExecMode) -> Result<Comparison> {
    if configs.len() < 2 {
        return Err(Error::argument("compare needs at least two run configs"));
    }
    let first = &configs[0];
    for (i, c) in configs.iter().enumerate().skip(1) {
        if c.dataset != first.dataset {
            return Err(Error::argument(format!(
                "config {i} uses a different dataset"
            )));
        }
        if c.model != first.model {
            return Err(Error::argument(format!(
                "config {i} uses a different model"
            )));
        }
    }
    for c in configs {
        c.validate()?;
    }
    let (train_set, val_set) = first.dataset.load()?;
    let logs = mode
        .map(configs, |c| train_on(c, &train_set, &val_set))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let labels = configs
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{i}-{}", c.optimizer.name()))
        .collect();
    Ok(Comparison { labels, logs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs_config(optimizer: OptimizerSpec, epochs: usize) -> RunConfig {
        RunConfig {
            epochs,
            batch_size: 32,
            seed: 3,
            record_wall_time: false,
            ..RunConfig::new(
                ModelSpec { hidden: vec![16] },
                DatasetSpec::Synthetic {
                    n_train: 200,
                    n_val: 100,
                    dim: 8,
                    classes: 4,
                    spread: 0.1,
                    seed: 1,
                },
                optimizer,
            )
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(std::f64::consts::LN_10), "2.30258509");
        assert_eq!(fmt_sig9(123456789.4), "123456789");
        assert_eq!(fmt_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(2.5e-7), "2.5e-07");
        assert_eq!(fmt_sig9(-0.000123456789123), "-0.000123456789");
        assert_eq!(fmt_sig9(0.9999999999), "1");
        assert_eq!(fmt_sig9(f64::NAN), "nan");
    }

    #[test]
    fn config_json_round_trip_and_strictness() {
        let cfg = blobs_config(OptimizerSpec::gravity_default(), 2);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());

        let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(matches!(
            RunConfig::from_json(&v.to_string()),
            Err(Error::Config(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        v["optimizer"] = serde_json::json!({"name": "sgdx"});
        assert!(matches!(
            RunConfig::from_json(&v.to_string()),
            Err(Error::Config(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        v["dataset"]["colour"] = serde_json::json!("red");
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn minimal_config_takes_protocol_defaults() {
        let cfg = RunConfig::from_json(
            r#"{"model":{"hidden":[128]},"dataset":{"kind":"idx"},"optimizer":{"name":"gravity"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.epochs, 100);
        assert_eq!(cfg.batch_size, 128);
        assert_eq!(cfg.optimizer, OptimizerSpec::gravity_default());
    }

    #[test]
    fn zero_epochs_gives_metadata_only() {
        let log = train(&blobs_config(OptimizerSpec::gravity_default(), 0)).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.to_csv(), format!("{CSV_HEADER}\n"));
        assert_eq!(log.metadata.epochs_completed, 0);
        assert!(!log.failed());
    }

    #[test]
    fn training_is_reproducible() {
        let cfg = blobs_config(OptimizerSpec::gravity_default(), 3);
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.metadata_json(), b.metadata_json());
        let epochs: Vec<usize> = a.records.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, vec![1, 2, 3]);
    }

    #[test]
    fn divergent_run_is_flushed_as_failed() {
        let cfg = blobs_config(
            OptimizerSpec::Gd {
                learning_rate: 1e300,
            },
            5,
        );
        let log = train(&cfg).unwrap();
        assert!(log.failed());
        assert!(log.records.len() < 5);
        assert!(log.metadata.failure.is_some());
    }

    #[test]
    fn evaluate_cases() {
        let (train_set, _) = blobs_config(OptimizerSpec::gravity_default(), 1)
            .dataset
            .load()
            .unwrap();
        let mut model = Model::mlp(&[8, 4, 10], 0).unwrap();
        for p in model.params_mut() {
            p.data_mut().fill(0.0);
        }
        let (loss, acc) = evaluate(&model, &train_set, 64).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
        let zeros = train_set.labels().iter().filter(|&&y| y == 0).count();
        assert_eq!(acc, zeros as f64 / train_set.len() as f64);

        let model = Model::mlp(&[8, 5, 4], 9).unwrap();
        let a = evaluate(&model, &train_set, 1000).unwrap();
        let b = evaluate(&model, &train_set, train_set.len()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, evaluate(&model, &train_set, 1000).unwrap());
        let c = evaluate_with(&model, &train_set, 7, ExecMode::Sequential).unwrap();
        let d = evaluate_with(&model, &train_set, 7, ExecMode::Parallel).unwrap();
        assert_eq!(c, d);

        let wrong = Model::mlp(&[3, 4], 0).unwrap();
        assert!(evaluate(&wrong, &train_set, 10).is_err());
    }

    #[test]
    fn compare_requires_matching_configs() {
        let a = blobs_config(OptimizerSpec::gravity_default(), 1);
        assert!(compare(std::slice::from_ref(&a), ExecMode::Sequential).is_err());
        let mut b = blobs_config(OptimizerSpec::adam(1e-3), 1);
        b.model.hidden = vec![8];
        assert!(matches!(
            compare(&[a.clone(), b], ExecMode::Sequential),
            Err(Error::Argument(_))
        ));
        let mut c = blobs_config(OptimizerSpec::adam(1e-3), 1);
        if let DatasetSpec::Synthetic { spread, .. } = &mut c.dataset {
            *spread = 0.2;
        }
        assert!(compare(&[a, c], ExecMode::Sequential).is_err());
    }

    #[test]
    fn compare_aligns_runs() {
        let configs = vec![
            blobs_config(OptimizerSpec::gravity_default(), 2),
            blobs_config(OptimizerSpec::adam(1e-3), 2),
            blobs_config(OptimizerSpec::rmsprop(1e-3), 2),
        ];
        let cmp = compare(&configs, ExecMode::Parallel).unwrap();
        assert_eq!(cmp.labels, vec!["0-gravity", "1-adam", "2-rmsprop"]);
        let summary = cmp.summary();
        assert_eq!(summary.len(), 3);
        assert!(summary.iter().all(|r| r.epochs_completed == 2));
        assert_eq!(cmp.to_csv().lines().count(), 1 + 2 * 3);
        let seq = compare(&configs, ExecMode::Sequential).unwrap();
        assert_eq!(seq.to_csv(), cmp.to_csv());

        // same optimizer, different master seeds: only the numbers move
        let mut other = configs[0].clone();
        other.seed = 77;
        let cmp = compare(&[configs[0].clone(), other], ExecMode::Sequential).unwrap();
        let s = cmp.summary();
        assert_eq!(s[0].optimizer, s[1].optimizer);
        assert_ne!(s[0].final_val_loss, s[1].final_val_loss);
    }
}
