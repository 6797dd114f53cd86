use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gravity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravity"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synthetic_config(optimizer: &str, epochs: usize, out: &Path) -> String {
    format!(
        r#"{{
  "model": {{"hidden": [8]}},
  "dataset": {{"kind": "synthetic", "n_train": 120, "n_val": 40, "dim": 6, "classes": 3, "spread": 0.1, "seed": 4}},
  "optimizer": {optimizer},
  "epochs": {epochs},
  "batch_size": 32,
  "seed": 1,
  "output_dir": {:?},
  "record_wall_time": false
}}"#,
        out.to_str().unwrap()
    )
}

#[test]
fn curve_golden_stdout() {
    let o = gravity(&[
        "curve",
        "--lr",
        "0.1",
        "--m",
        "1",
        "--g-min",
        "-2",
        "--g-max",
        "2",
        "--samples",
        "5",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "g,gravity_dw,gd_dw\n-2,0.04,0.2\n-1,0.05,0.1\n0,0,0\n1,-0.05,-0.1\n2,-0.04,-0.2\n"
    );
}

#[test]
fn curve_default_grid_peaks_at_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = gravity(&["curve", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        format!("wrote 1201 rows to {}\n", out.display())
    );
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1202);
    assert!(csv.lines().any(|l| l == "1,-0.05,-0.1"));
    assert!(csv.lines().any(|l| l == "0,0,0"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["curve", "--samples", "1"][..],
        &["curve", "--g-min", "3", "--g-max", "1"],
        &["curve", "--lr", "0"],
        &["curve", "--bogus"],
        &[],
        &["train"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&gravity(args)), 2, "{args:?}");
    }
}

#[test]
fn train_writes_logs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, synthetic_config(r#"{"name": "gravity"}"#, 3, &out)).unwrap();
    let o = gravity(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.starts_with("epoch=3 train_loss="), "{line}");
    assert!(line.ends_with("status=completed\n"));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.ends_with(",0\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "completed");
    assert_eq!(meta["optimizer"], "gravity");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);

    // --seed and --out override the file
    let other = dir.path().join("other");
    let o = gravity(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read_to_string(other.join("metrics.csv")).unwrap(), csv);
}

#[test]
fn train_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        code(&gravity(&["train", "--config", "/nonexistent/cfg.json"])),
        3
    );

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, synthetic_config(r#"{"name": "sgdx"}"#, 1, &out)).unwrap();
    assert_eq!(
        code(&gravity(&["train", "--config", cfg.to_str().unwrap()])),
        2
    );

    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(
        code(&gravity(&["train", "--config", cfg.to_str().unwrap()])),
        2
    );

    let missing_data = r#"{"model":{"hidden":[4]},"dataset":{"kind":"idx","root":"/nonexistent"},"optimizer":{"name":"gravity"}}"#;
    fs::write(&cfg, missing_data).unwrap();
    assert_eq!(
        code(&gravity(&["train", "--config", cfg.to_str().unwrap()])),
        3
    );

    fs::write(
        &cfg,
        synthetic_config(r#"{"name": "gd", "learning_rate": 1e300}"#, 3, &out),
    )
    .unwrap();
    let o = gravity(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("status=failed"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "failed");
}

#[test]
fn compare_runs_and_rejects_single_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    fs::write(
        &a,
        synthetic_config(r#"{"name": "gravity"}"#, 2, dir.path()),
    )
    .unwrap();
    fs::write(
        &b,
        synthetic_config(r#"{"name": "adam", "learning_rate": 0.001}"#, 2, dir.path()),
    )
    .unwrap();
    let out = dir.path().join("cmp");

    let one = gravity(&[
        "compare",
        "--config",
        a.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&one), 2);

    let args = [
        "compare",
        "--config",
        a.to_str().unwrap(),
        "--config",
        b.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let o = gravity(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("run=0-gravity optimizer=gravity best_val_acc="));
    assert!(lines[1].starts_with("run=1-adam optimizer=adam best_val_acc="));
    assert!(out.join("comparison.csv").is_file());
    assert!(out.join("summary.csv").is_file());
    assert!(out.join("0-gravity").join("metrics.csv").is_file());

    let mut seq = args.to_vec();
    seq.push("--sequential");
    assert_eq!(stdout(&gravity(&seq)), text);
}

#[test]
fn gradcheck_default_passes() {
    let o = gravity(&["gradcheck"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    assert!(line.starts_with("checked=106 max_rel_err="), "{line}");
    assert!(line.ends_with("threshold=1e-5 result=pass\n"));
    assert_eq!(stdout(&gravity(&["gradcheck"])), line);

    assert_eq!(code(&gravity(&["gradcheck", "--dims", "4"])), 2);
    let strict = gravity(&["gradcheck", "--dims", "5,4,3", "--threshold", "0"]);
    assert_eq!(code(&strict), 4);
    assert!(stdout(&strict).ends_with("result=fail\n"));
}

#[test]
fn idx_info_golden() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img");
    let mut bytes = 0x0803u32.to_be_bytes().to_vec();
    for d in [2u32, 3, 4] {
        bytes.extend_from_slice(&d.to_be_bytes());
    }
    bytes.extend_from_slice(&[0; 24]);
    fs::write(&path, &bytes).unwrap();
    let o = gravity(&["idx-info", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "magic=0x00000803\ndims=2x3x4\ncount=2\n");

    fs::write(&path, &bytes[..6]).unwrap();
    assert_eq!(code(&gravity(&["idx-info", path.to_str().unwrap()])), 3);
    assert_eq!(code(&gravity(&["idx-info", "/nonexistent/idx"])), 3);
}

#[test]
fn idx_info_on_mnist_when_available() {
    let root = std::env::var_os("GRAVITY_DATA_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    let path = root.join("train-images-idx3-ubyte");
    if !path.is_file() {
        eprintln!("skipping: {} not present", path.display());
        return;
    }
    let o = gravity(&["idx-info", path.to_str().unwrap()]);
    assert_eq!(
        stdout(&o),
        "magic=0x00000803\ndims=60000x28x28\ncount=60000\n"
    );
}
