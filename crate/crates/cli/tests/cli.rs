use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pyramidcast"));
    cmd.env_remove("PYRAMIDCAST_DATA").env("RUST_LOG", "error");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("binary runs");
    (
        status.code().expect("exited normally"),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

/// Hourly CSV with columns `date,a,b,OT`.
fn write_series(path: &Path, rows: usize) {
    let mut text = String::from("date,a,b,OT\n");
    for r in 0..rows {
        let day = r / 24;
        let t = r as f64;
        let _ = writeln!(
            text,
            "2020-{:02}-{:02} {:02}:00:00,{:.4},{:.4},{:.4}",
            1 + day / 28,
            1 + day % 28,
            r % 24,
            (t * 0.26).sin(),
            (t * 0.05).cos() * 2.0,
            (t * 0.26).sin() + 0.3 * (t * 0.01).cos()
        );
    }
    std::fs::write(path, text).unwrap();
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_series(&dir.path().join("toy.csv"), 700);
        std::fs::write(
            dir.path().join("manifest.toml"),
            "[datasets.toy]\npath = \"toy.csv\"\nchannels = 3\n",
        )
        .unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn cmd(&self, args: &[&str]) -> Command {
        let mut cmd = bin();
        cmd.arg("--manifest").arg(self.path("manifest.toml")).args(args);
        cmd
    }
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(bin().arg("--help"));
    assert_eq!(code, 0);
    for sub in ["train", "bench", "profile", "inspect-pyramid"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
    let (code, out, _) = run(bin().args(["train", "--help"]));
    assert_eq!(code, 0);
    assert!(out.contains("--univariate"));
}

#[test]
fn profile_reports_reference_counts() {
    let (code, out, _) = run(bin().args(["profile", "--model", "fpn-fusion", "--lookback", "336", "--horizon", "96", "--channels", "7", "--batch", "32"]));
    assert_eq!(code, 0);
    assert!(out.contains("| FPN-fusion | 336 | 96 | 7 | 32 | 13499360 (13.50M) | 424256 (0.42M) |"), "{out}");
    let (code, out, _) = run(bin().args(["profile", "--model", "dlinear"]));
    assert_eq!(code, 0);
    assert!(out.contains("452928"), "{out}");
}

#[test]
fn profile_writes_efficiency_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eff.csv");
    let (code, _, _) = run(bin().args(["profile", "--model", "dlinear,fpn-fusion", "--csv"]).arg(&csv));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,lookback,horizon,channels,batch,macs,params,add_ops,notes");
    assert!(lines[1].starts_with("DLinear,336,96,7,32,14450688,452928,"));
    assert!(lines[2].starts_with("FPN-fusion,336,96,7,32,13499360,424256,"));
}

#[test]
fn unknown_variant_lists_valid_names() {
    let (code, _, err) = run(bin().args(["profile", "--model", "informer"]));
    assert_eq!(code, 2);
    assert!(err.contains("fpn-fusion") && err.contains("dlinear"), "{err}");
}

#[test]
fn inspect_pyramid_cases() {
    let (code, out, _) = run(bin().args(["inspect-pyramid", "--lookback", "336", "--stages", "4", "--constant", "2.5"]));
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows, vec!["1,336,0.000000", "2,167,0.000000", "3,83,0.000000", "4,41,0.000000"]);

    let (code, _, err) = run(bin().args(["inspect-pyramid", "--lookback", "12", "--stages", "4", "--constant", "1"]));
    assert_eq!(code, 2);
    assert!(err.contains("invalid pyramid"), "{err}");

    let fx = Fixture::new();
    let (code, out, _) = run(&mut fx.cmd(&["inspect-pyramid", "--dataset", "toy", "--lookback", "96", "--stages", "3"]));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("`OT`"));
    assert_eq!(out.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 3);
}

#[test]
fn train_writes_checkpoint_and_log() {
    let fx = Fixture::new();
    let out_dir = fx.path("run");
    let (code, out, err) = run(fx
        .cmd(&["train", "--dataset", "toy", "--model", "fpn-fusion", "--horizon", "24", "--lookback", "48", "--univariate", "--epochs", "3", "--out"])
        .arg(&out_dir));
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("test_mse="), "{out}");
    assert!(out.contains("C=1"));
    assert!(out_dir.join("model.ckpt").exists());
    let log = std::fs::read_to_string(out_dir.join("train_log.csv")).unwrap();
    assert!(log.starts_with("epoch,train_loss,val_mse,val_mae,lr,wall_clock_s"));
    assert!(log.lines().last().unwrap().starts_with("best="));
}

#[test]
fn train_is_reproducible_per_seed() {
    let fx = Fixture::new();
    let go = |dir: &str| {
        let (code, out, err) = run(fx
            .cmd(&["train", "--dataset", "toy", "--model", "dlinear", "--horizon", "24", "--lookback", "48", "--epochs", "2", "--seed", "5", "--out"])
            .arg(fx.path(dir)));
        assert_eq!(code, 0, "{err}");
        (out.lines().next().unwrap().to_string(), std::fs::read(fx.path(dir).join("model.ckpt")).unwrap())
    };
    assert_eq!(go("a"), go("b"));
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let fx = Fixture::new();
    let cfg = fx.path("run.cfg");
    std::fs::write(&cfg, "# toy run\ndataset = toy\nmodel = nlinear\nhorizon = 24\nlookback = 48\nepochs = 1\n").unwrap();
    let (code, out, err) = run(fx.cmd(&["train", "--model", "linear", "--out"]).arg(fx.path("o")).arg("--config").arg(&cfg));
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("toy Linear T=24 L=48"), "{out}");

    std::fs::write(&cfg, "horizn = 24\n").unwrap();
    let (code, _, err) = run(fx.cmd(&["train"]).arg("--config").arg(&cfg));
    assert_eq!(code, 2);
    assert!(err.contains("horizn"), "{err}");
}

#[test]
fn missing_dataset_file_exits_two_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(bin()
        .args(["train", "--dataset", "ETTh1", "--model", "fpn-fusion", "--horizon", "96", "--univariate", "--data-dir"])
        .arg(dir.path()));
    assert_eq!(code, 2);
    assert!(err.contains(&dir.path().join("ETTh1.csv").display().to_string()), "{err}");
}

#[test]
fn data_root_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(bin()
        .env("PYRAMIDCAST_DATA", dir.path())
        .args(["train", "--dataset", "weather", "--model", "linear", "--horizon", "96"]));
    assert_eq!(code, 2);
    assert!(err.contains(&dir.path().join("weather.csv").display().to_string()), "{err}");
}

#[test]
fn unknown_dataset_is_a_usage_error() {
    let (code, _, err) = run(bin().args(["train", "--dataset", "m4", "--model", "linear", "--horizon", "8"]));
    assert_eq!(code, 2);
    assert!(err.contains("unknown dataset"), "{err}");
}

#[test]
fn bench_grid_writes_two_row_report() {
    let fx = Fixture::new();
    let out_dir = fx.path("report");
    let (code, out, err) = run(fx
        .cmd(&["bench", "--datasets", "toy", "--models", "dlinear,fpn-fusion", "--horizons", "24", "--lookback", "48", "--epochs", "2", "--out"])
        .arg(&out_dir));
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("toy,24,DLinear,computed,"));
    assert!(rows[1].starts_with("toy,24,FPN-fusion,computed,"));
    let flagged = rows.iter().filter(|r| r.split(',').nth(10) == Some("true")).count();
    assert!(flagged >= 1);
    assert!(out.contains("FPN-fusion vs DLinear: mean MSE reduction"), "{out}");
    assert_eq!(std::fs::read_to_string(out_dir.join("report.md")).unwrap(), out.split("\nFPN-fusion vs").next().unwrap());
}

#[test]
fn bench_rejects_ili_horizon_96() {
    let (code, _, err) = run(bin().args(["bench", "--datasets", "ILI", "--horizons", "96"]));
    assert_eq!(code, 2);
    assert!(err.contains("24, 36, 48, 60"), "{err}");
}

#[test]
fn bench_records_failed_cells_and_exits_one() {
    let fx = Fixture::new();
    // Horizon 400 leaves no windows in the validation split.
    let (code, out, err) = run(fx
        .cmd(&["bench", "--datasets", "toy", "--models", "linear", "--horizons", "24,400", "--lookback", "48", "--epochs", "1", "--out"])
        .arg(fx.path("r")));
    assert_eq!(code, 1, "{err}");
    assert!(out.contains("Failed cells"), "{out}");
    let csv = std::fs::read_to_string(fx.path("r").join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn bench_smoke_mode_runs_one_epoch() {
    let fx = Fixture::new();
    let (code, _, err) = run(fx
        .cmd(&["bench", "--datasets", "toy", "--models", "fpn-fusion", "--horizons", "24", "--lookback", "48", "--smoke", "0.1", "--out"])
        .arg(fx.path("s")));
    assert_eq!(code, 0, "{err}");
}
