use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use onebit_core::quantum::MeasurementSet;
use onebit_core::{maximally_entangled_state, BellFunctional, QuantumModel, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn onebit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onebit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_game(dir: &TempDir, d: usize) -> PathBuf {
    let path = dir.path().join(format!("game{d}.json"));
    let o = onebit(&[
        "game",
        "--d",
        &d.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    path
}

fn write_json(path: &Path, text: serde_json::Result<String>) {
    std::fs::write(path, text.unwrap()).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn game_files() {
    let dir = TempDir::new().unwrap();
    let path = write_game(&dir, 5);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let coefficients = v["coefficients"].as_array().unwrap();
    assert_eq!(coefficients.len(), 250);
    assert_eq!(
        coefficients
            .iter()
            .filter(|c| c.as_i64() == Some(1))
            .count(),
        50
    );
    assert_eq!(
        coefficients
            .iter()
            .filter(|c| c.as_i64() == Some(0))
            .count(),
        200
    );

    let o = onebit(&["game", "--d", "2"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 16);

    let o = onebit(&["game", "--d", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));

    let o = onebit(&["game", "--d", "3", "--out", "/nonexistent/dir/x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

fn has_float_token(text: &str) -> bool {
    let b = text.as_bytes();
    (1..b.len().saturating_sub(1))
        .any(|i| b[i] == b'.' && b[i - 1].is_ascii_digit() && b[i + 1].is_ascii_digit())
        || text.contains("e-")
        || text.contains("e+")
}

#[test]
fn bounds_of_xor_games_are_exact_integers() {
    let dir = TempDir::new().unwrap();
    for (d, expected) in [
        (5, ["local 6", "onebit 7", "ns 10"]),
        (6, ["local 7", "onebit 8", "ns 12"]),
    ] {
        let o = onebit(&["bounds", p(&write_game(&dir, d))]);
        assert!(o.status.success());
        let text = stdout(&o);
        let lines: Vec<&str> = text.lines().collect();
        for (line, want) in lines.iter().zip(expected) {
            assert!(
                line.starts_with(&format!("{want} ")) || *line == want,
                "{line}"
            );
        }
        assert!(!has_float_token(&text), "{text}");
    }
    let o = onebit(&[
        "--json",
        "bounds",
        p(&write_game(&dir, 4)),
        "--which",
        "onebit,ns",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["onebit"]["value"], 6);
    assert_eq!(v["ns"]["value"], 8);
    assert!(v.get("local").is_none());
    assert!(!has_float_token(&stdout(&o)));
}

#[test]
fn bounds_of_zero_functional() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("zero.json");
    write_json(
        &path,
        serde_json::to_string(&BellFunctional::zero(Scenario::new(3, 2, 2, 3).unwrap())),
    );
    let o = onebit(&["bounds", p(&path)]);
    assert!(o.status.success());
    let values: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split(' ').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(values, ["0", "0", "0"]);
}

#[test]
fn verify_matches_and_guards() {
    let dir = TempDir::new().unwrap();
    let o = onebit(&["verify", p(&write_game(&dir, 3))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "MATCH 5");

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = Scenario::new(3, 2, 2, 2).unwrap();
    let random = BellFunctional::from_fn(s, |_, _, _, _| rng.random_range(-5..=5));
    let path = dir.path().join("random.json");
    write_json(&path, serde_json::to_string(&random));
    let o = onebit(&["verify", p(&path)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("MATCH "));

    let o = onebit(&["verify", p(&write_game(&dir, 5))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));

    let o = onebit(&["verify", p(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seesaw_violation_and_model_file() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("model.json");
    let o = onebit(&[
        "--json",
        "seesaw",
        p(&write_game(&dir, 5)),
        "--out",
        p(&model),
        "--require-violation",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let score = v["score"].as_f64().unwrap();
    assert!((7.17..=7.1798).contains(&score), "{score}");
    assert_eq!(v["violation"], true);
    let saved: QuantumModel =
        serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved.state.local_dim(), 5);

    let o = onebit(&["seesaw", p(&write_game(&dir, 6))]);
    let line = stdout(&o).lines().next().unwrap().to_string();
    let score: f64 = line.strip_prefix("score ").unwrap().parse().unwrap();
    assert!(score >= 8.31, "{score}");

    let o = onebit(&[
        "seesaw",
        p(&write_game(&dir, 2)),
        "--restarts",
        "5",
        "--require-violation",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation no"));
}

#[test]
fn default_sweep_grid_starts_near_fidelity_one() {
    let o = onebit(&[
        "sweep",
        "--trials",
        "1",
        "--restarts",
        "1",
        "--sweeps",
        "50",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sigma,seed,fidelity,score"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][0], 0.0);
    assert!(rows[0][2] > 0.999 && rows[1][2] > 0.999);
    assert!(rows.iter().all(|r| r[3] <= 10.0 + 1e-6));
}

#[test]
fn sweep_output_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = onebit(&[
            "--threads",
            threads,
            "--seed",
            "4",
            "sweep",
            "--d",
            "3",
            "--sigmas",
            "0,1e-3,3e-3",
            "--trials",
            "2",
            "--restarts",
            "3",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("beyond one-bit bound"));
        std::fs::read(out).unwrap()
    };
    let one = run("1", "a.csv");
    assert_eq!(one, run("3", "b.csv"));
    assert_eq!(String::from_utf8(one).unwrap().lines().count(), 7);
}

#[test]
fn report_on_shipped_and_dummy_models() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/d5_optimized_model.json");
    let o = onebit(&["--json", "report", p(&shipped)]);
    assert!(o.status.success(), "{o:?}");
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["w"].as_f64().unwrap() - 0.64).abs() <= 0.05);
    assert_eq!(v["beats_one_bit"], true);
    assert!(v["mub_deviation"].as_f64().unwrap() <= 0.10);

    let dir = TempDir::new().unwrap();
    let dummy = QuantumModel::new(
        maximally_entangled_state(5).unwrap(),
        MeasurementSet::computational(5, 5),
        MeasurementSet::fourier(5, 2),
    )
    .unwrap();
    let path = dir.path().join("dummy.json");
    write_json(&path, serde_json::to_string(&dummy));
    let o = onebit(&["--json", "report", p(&path)]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["w"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["beats_one_bit"], false);

    let o = onebit(&["report", p(&path)]);
    assert!(stdout(&o).contains("beats one-bit bound no"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(onebit(&[]).status.code(), Some(2));
    assert_eq!(onebit(&["bounds"]).status.code(), Some(2));
    assert_eq!(onebit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        onebit(&["--threads", "0", "game", "--d", "2"])
            .status
            .code(),
        Some(2)
    );
}
