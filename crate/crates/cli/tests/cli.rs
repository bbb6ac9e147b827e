use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lwr_core::tns;

const TINY: &str = r#"{
  "grid": {"m": 16, "n": 32},
  "datagen": {"splits": [
    {"name": "train", "alphas": [0, 1, 2, 3], "per_class": 3},
    {"name": "val", "alphas": [0, 1, 2, 3], "per_class": 1},
    {"name": "test", "alphas": [4, 5, 6, 7, 8], "per_class": 2}]},
  "arch": {"layers": 2, "width": 6, "modes_x": 4, "modes_t": 8, "q_hidden": 8},
  "train": {"epochs": 4, "batch_size": 4, "lr": 0.005, "checkpoint_every": 1},
  "eval": {"bench_grids": [[16, 32], [32, 64]], "bench_repetitions": 1, "heatmaps": 2}
}"#;

struct Work {
    dir: tempfile::TempDir,
}

impl Work {
    fn new() -> Self {
        let w = Self { dir: tempfile::tempdir().unwrap() };
        fs::write(w.path("cfg.json"), TINY).unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_lwr"))
            .current_dir(self.dir.path())
            .env("RUST_LOG", "warn")
            .args(["--threads", "1"])
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn gen(&self, out: &str, seed: &str) {
        self.ok(&["--config", "cfg.json", "--seed", seed, "--out", out, "gen-data"]);
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

/// History rows without the wall-clock column.
fn history(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn gen_data_counts_and_echoed_config() {
    let w = Work::new();
    let stdout = w.ok(&["--config", "cfg.json", "--seed", "1", "--out", "data", "gen-data"]);
    assert!(stdout.contains("train"));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(w.path("data/manifest.json")).unwrap()).unwrap();
    let samples = manifest["samples"].as_array().unwrap();
    let count = |split: &str| samples.iter().filter(|s| s["split"] == split).count();
    assert_eq!((count("train"), count("val"), count("test")), (12, 4, 10));
    let echoed: serde_json::Value =
        serde_json::from_slice(&fs::read(w.path("data/resolved_config.json")).unwrap()).unwrap();
    assert_eq!(echoed["seed"], 1);
    assert_eq!(echoed["grid"]["m"], 16);
    assert_eq!(echoed["flux"]["v_max"], 60.0);
}

#[test]
fn gen_data_is_byte_deterministic() {
    let w = Work::new();
    w.gen("a", "5");
    w.gen("b", "5");
    assert_eq!(files(&w.path("a")), files(&w.path("b")));
    w.gen("c", "6");
    assert_ne!(files(&w.path("a")), files(&w.path("c")));
}

#[test]
fn cfl_violation_exits_one_and_names_bound() {
    let w = Work::new();
    // dx = 1000 m / 64 cells; v_max·dt must stay below it, so dt ≤ 0.9375 s.
    fs::write(w.path("bad.json"), r#"{"grid": {"dt_s": 1.0}}"#).unwrap();
    let out = w.run(&["--config", "bad.json", "--out", "x", "gen-data"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("CFL") && err.contains("Δt·sup|f'(u)| ≤ Δx"), "{err}");
}

#[test]
fn config_errors_exit_one() {
    let w = Work::new();
    fs::write(w.path("bad.json"), r#"{"grid": {"cells": 16}}"#).unwrap();
    assert_eq!(code(&w.run(&["--config", "bad.json", "gen-data"])), 1);
    assert_eq!(code(&w.run(&["--config", "missing.json", "gen-data"])), 1);
    assert_eq!(code(&w.run(&["no-such-command"])), 1);
    assert_eq!(code(&w.run(&["--help"])), 0);
}

#[test]
fn solve_constant_and_riemann() {
    let w = Work::new();
    fs::write(w.path("flat.txt"), "42\n".repeat(32)).unwrap();
    w.ok(&["--out", "flat", "solve", "--ic", "flat.txt"]);
    let (dims, v) = tns::read(&w.path("flat/field.tns")).unwrap();
    assert_eq!(dims, vec![32, 256]);
    assert!(v.iter().all(|&u| (u - 42.0).abs() < 1e-12));
    assert!(w.path("flat/field.ppm").exists());
    assert!(w.path("flat/resolved_config.json").exists());

    // f(30) = f(90) for the default flux: the jump does not move.
    let ic: String = (0..64).map(|i| if i < 32 { "30\n" } else { "90\n" }).collect();
    fs::write(w.path("riemann.txt"), ic).unwrap();
    w.ok(&["--out", "shock", "solve", "--ic", "riemann.txt"]);
    let (dims, v) = tns::read(&w.path("shock/field.tns")).unwrap();
    let (m, n) = (dims[0], dims[1]);
    let last: Vec<f64> = (0..m).map(|i| v[i * n + n - 1]).collect();
    let crossing = (1..m).find(|&i| last[i - 1] < 60.0 && last[i] >= 60.0).unwrap();
    assert!((crossing as i64 - 32).abs() <= 1, "jump at {crossing}");
}

#[test]
fn solve_bvp_needs_boundary() {
    let w = Work::new();
    fs::write(w.path("ic.txt"), "10\n".repeat(16)).unwrap();
    let out = w.run(&["--out", "s", "solve", "--ic", "ic.txt", "--kind", "bvp"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bc"));

    let up = vec!["30"; 64].join(" ");
    let down = vec!["0"; 64].join(" ");
    fs::write(w.path("bc.txt"), format!("{up}\n{down}\n")).unwrap();
    w.ok(&["--out", "s", "solve", "--ic", "ic.txt", "--bc", "bc.txt"]);
    assert_eq!(tns::read(&w.path("s/field.tns")).unwrap().0, vec![16, 64]);
}

#[test]
fn train_smoke_resume_and_lambda_zero() {
    let w = Work::new();
    w.gen("data", "2");
    w.ok(&["--config", "cfg.json", "--out", "run", "train", "--dataset", "data"]);
    let rows = history(&w.path("run/history.csv"));
    assert_eq!(rows.len(), 1 + 1 + 4);
    let objective = |row: &str| row.split(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert!(objective(&rows[5]) < objective(&rows[1]), "{rows:?}");
    assert!(w.path("run/resolved_config.json").exists());

    // A fresh run refuses to overwrite; 2 epochs then resume matches 4 straight.
    assert_eq!(code(&w.run(&["--config", "cfg.json", "--out", "run", "train", "--dataset", "data"])), 1);
    w.ok(&["--config", "cfg.json", "--out", "half", "train", "--dataset", "data", "--epochs", "2"]);
    w.ok(&["--config", "cfg.json", "--out", "half", "train", "--dataset", "data", "--resume"]);
    assert_eq!(files(&w.path("run/params")), files(&w.path("half/params")));
    assert_eq!(history(&w.path("half/history.csv")), rows);

    w.ok(&["--config", "cfg.json", "--out", "fno", "train", "--dataset", "data", "--model", "fno"]);
    w.ok(&["--config", "cfg.json", "--out", "l0", "train", "--dataset", "data", "--lambda", "0"]);
    assert_eq!(files(&w.path("fno/params")), files(&w.path("l0/params")));
    assert_eq!(history(&w.path("fno/history.csv")), history(&w.path("l0/history.csv")));
}

#[test]
fn divergent_training_exits_two() {
    let w = Work::new();
    w.gen("data", "2");
    fs::write(w.path("hot.json"), TINY.replace("\"lr\": 0.005", "\"lr\": 1e200")).unwrap();
    let out = w.run(&["--config", "hot.json", "--out", "hot", "train", "--dataset", "data"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
}

#[test]
fn predict_eval_fit_bench_sweep() {
    let w = Work::new();
    w.gen("data", "4");
    w.ok(&["--config", "cfg.json", "--out", "run", "train", "--dataset", "data", "--epochs", "2"]);

    let input = "data/samples/test-ivp-i4b0-0000.input.tns";
    w.ok(&["--out", "p1", "predict", "--checkpoint", "run", "--input", input]);
    w.ok(&["--out", "p2", "predict", "--checkpoint", "run/params", "--input", input]);
    let (dims, a) = tns::read(&w.path("p1/prediction.tns")).unwrap();
    assert_eq!(dims, vec![16, 32]);
    assert_eq!(a, tns::read(&w.path("p2/prediction.tns")).unwrap().1);
    tns::write(&w.path("odd.tns"), &[12, 32], &vec![0.1; 12 * 32]).unwrap();
    assert_eq!(code(&w.run(&["--out", "p3", "predict", "--checkpoint", "run", "--input", "odd.tns"])), 1);
    assert_eq!(code(&w.run(&["--out", "p3", "predict", "--checkpoint", "data", "--input", input])), 1);

    w.ok(&["--config", "cfg.json", "--out", "ev", "eval", "--checkpoint", "run", "--dataset", "data"]);
    let classes = fs::read_to_string(w.path("ev/classes.csv")).unwrap();
    assert_eq!(classes.lines().count(), 1 + 5);
    assert_eq!(fs::read_dir(w.path("ev/heatmaps")).unwrap().count(), 2);

    w.ok(&["--config", "cfg.json", "--out", "fit", "fit-curves", "--report", "ev/report.json", "--threshold", "6.5"]);
    let fits: serde_json::Value = serde_json::from_slice(&fs::read(w.path("fit/fits.json")).unwrap()).unwrap();
    let (k1, k2) = (fits["power"]["k1"].as_f64().unwrap(), fits["power"]["k2"].as_f64().unwrap());
    assert!(k1 >= 0.0 && (0.0..=3.0).contains(&k2), "{fits}");
    assert!(fits["piecewise"]["k3"].as_f64().is_some());

    w.ok(&["--config", "cfg.json", "--out", "bench", "bench", "--checkpoint", "run"]);
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(w.path("bench/bench.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);

    fs::write(w.path("short.json"), TINY.replace("\"epochs\": 4", "\"epochs\": 1")).unwrap();
    let table = w.ok(&["--config", "short.json", "--out", "sw", "lambda-sweep", "--dataset", "data", "--lambdas", "0,1,2.5"]);
    assert_eq!(table.lines().count(), 1 + 3);
    let csv = fs::read_to_string(w.path("sw/lambda_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.lines().nth(3).unwrap().starts_with("2.5,"));
}
