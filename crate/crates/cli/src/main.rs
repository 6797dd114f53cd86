//! `gravity` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 I/O or file format
//! error, 4 numeric failure (diverged run or failed gradient check).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gravity_core::data::{read_idx_header, resolve_path};
use gravity_core::exec::ExecMode;
use gravity_core::harness::{self, fmt_sig9, RunConfig};
use gravity_core::nn::{gradient_check, probe_batch, GradCheckConfig, Model};
use gravity_core::optim::{gd_delta, response_curve};
use gravity_core::{seed, Error};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "gravity", version, about = "Gravity optimizer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Gravity and GD single-step response curves as CSV.
    Curve(CurveArgs),
    /// Train one run from a JSON config.
    Train(TrainArgs),
    /// Train several configs on the same data and summarise them.
    Compare(CompareArgs),
    /// Check backprop gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Print the header of an IDX file.
    IdxInfo(IdxInfoArgs),
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    g_min: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    g_max: f64,
    #[arg(long, default_value_t = 1201)]
    samples: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Repeat once per run.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    #[arg(long, default_value = "runs/compare")]
    out: PathBuf,
    /// Overrides the master seed of every config.
    #[arg(long)]
    seed: Option<u64>,
    /// Run the configs one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Layer widths, input first.
    #[arg(long, value_delimiter = ',', default_value = "784,128,10")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    /// Coordinates checked per parameter tensor; 0 checks all.
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long, default_value_t = 1e-5)]
    threshold: f64,
}

#[derive(Args)]
struct IdxInfoArgs {
    /// Relative paths resolve against $GRAVITY_DATA_DIR when set.
    path: PathBuf,
}

/// A failure carrying the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Argument(_) => EXIT_USAGE,
            Error::Io { .. } | Error::Format { .. } => EXIT_IO,
            Error::Numeric { .. } => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let mut out = io::stdout().lock();
    let result = match cli.command {
        Command::Curve(a) => curve(a, &mut out),
        Command::Train(a) => train(a, &mut out),
        Command::Compare(a) => compare(a, &mut out),
        Command::Gradcheck(a) => gradcheck(a, &mut out),
        Command::IdxInfo(a) => idx_info(a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(out: &mut impl Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes())
        .map_err(|e| io_failure(Path::new("<stdout>"), e))
}

fn curve(a: CurveArgs, out: &mut impl Write) -> CmdResult {
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    if !(a.g_min.is_finite() && a.g_max.is_finite() && a.g_min < a.g_max) {
        return Err(usage("--g-min must be finite and below --g-max"));
    }
    let last = (a.samples - 1) as f64;
    // endpoint-weighted form so grid points such as 0 and ±m land exactly
    let grid: Vec<f64> = (0..a.samples)
        .map(|i| (a.g_min * (last - i as f64) + a.g_max * i as f64) / last)
        .collect();
    let rows = response_curve(a.lr, a.m, &grid)?;
    let mut csv = String::from("g,gravity_dw,gd_dw\n");
    for (g, dw) in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(g),
            fmt_sig9(dw),
            fmt_sig9(gd_delta(a.lr, g))
        ));
    }
    match a.out {
        None => emit(out, &csv),
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            }
            fs::write(&path, csv).map_err(|e| io_failure(&path, e))?;
            emit(
                out,
                &format!("wrote {} rows to {}\n", a.samples, path.display()),
            )
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn train(a: TrainArgs, out: &mut impl Write) -> CmdResult {
    let mut cfg = load_config(&a.config, a.seed)?;
    if let Some(dir) = a.out {
        cfg.output_dir = dir;
    }
    let log = harness::train(&cfg)?;
    log.write(&cfg.output_dir)?;
    let status = if log.failed() { "failed" } else { "completed" };
    let line = match log.last() {
        Some(r) => format!(
            "epoch={} train_loss={} train_acc={} val_loss={} val_acc={} status={status}\n",
            r.epoch,
            fmt_sig9(r.train_loss),
            fmt_sig9(r.train_acc),
            fmt_sig9(r.val_loss),
            fmt_sig9(r.val_acc)
        ),
        None => format!("epoch=0 status={status}\n"),
    };
    emit(out, &line)?;
    match log.metadata.failure {
        Some(reason) => Err(Failure {
            code: EXIT_NUMERIC,
            message: reason,
        }),
        None => Ok(()),
    }
}

fn compare(a: CompareArgs, out: &mut impl Write) -> CmdResult {
    if a.configs.len() < 2 {
        return Err(usage("compare needs at least two --config files"));
    }
    let configs = a
        .configs
        .iter()
        .map(|p| load_config(p, a.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mode = if a.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    let cmp = harness::compare(&configs, mode)?;
    cmp.write(&a.out)?;
    let mut text = String::new();
    for row in cmp.summary() {
        text.push_str(&format!(
            "run={} optimizer={} best_val_acc={} final_val_loss={} epochs={}\n",
            row.label,
            row.optimizer,
            fmt_sig9(row.best_val_acc),
            fmt_sig9(row.final_val_loss),
            row.epochs_completed
        ));
    }
    emit(out, &text)?;
    if cmp.logs.iter().any(|l| l.failed()) {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: "at least one run stopped on a numeric failure".into(),
        });
    }
    Ok(())
}

fn gradcheck(a: GradcheckArgs, out: &mut impl Write) -> CmdResult {
    if a.dims.len() < 2 || a.batch == 0 {
        return Err(usage(
            "--dims needs at least two widths and --batch must be positive",
        ));
    }
    let model = Model::mlp(&a.dims, seed::derive(a.seed, seed::MODEL_INIT_STREAM))?;
    let k = *a.dims.last().expect("two widths");
    let (x, y) = probe_batch(
        a.batch,
        a.dims[0],
        k,
        seed::derive(a.seed, seed::SHUFFLE_STREAM),
    )?;
    let cfg = GradCheckConfig {
        step: a.step,
        samples_per_tensor: (a.samples > 0).then_some(a.samples),
        seed: a.seed,
        mode: ExecMode::default(),
    };
    let report = gradient_check(&model, &x, &y, &cfg)?;
    let verdict = if report.passes(a.threshold) {
        "pass"
    } else {
        "fail"
    };
    emit(
        out,
        &format!(
            "checked={} max_rel_err={:.3e} worst={}:{} threshold={:e} result={verdict}\n",
            report.checked, report.max_rel_err, report.worst.0, report.worst.1, a.threshold
        ),
    )?;
    if verdict == "fail" {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: "gradient check exceeded the threshold".into(),
        });
    }
    Ok(())
}

fn idx_info(a: IdxInfoArgs, out: &mut impl Write) -> CmdResult {
    let path = resolve_path(&a.path, None);
    let header = read_idx_header(&path)?;
    let dims: Vec<String> = header.dims.iter().map(u32::to_string).collect();
    emit(
        out,
        &format!(
            "magic=0x{:08x}\ndims={}\ncount={}\n",
            header.magic,
            dims.join("x"),
            header.dims[0]
        ),
    )
}
