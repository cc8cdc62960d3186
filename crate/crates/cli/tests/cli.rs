use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyomwu::{PolymatrixGame, ZeroSumCheck};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polyomwu"))
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn polyomwu")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The directory printed on the first stdout line of `run`.
fn run_dir(out: &Output) -> PathBuf {
    let stdout = String::from_utf8_lossy(&out.stdout);
    PathBuf::from(stdout.lines().next().expect("run prints its output directory"))
}

#[test]
fn gen_writes_a_zero_sum_game_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = exec(&["gen", "--n", "10", "--actions", "10", "--seed", "0", "--out", path_str(p)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let game = PolymatrixGame::from_json(std::str::from_utf8(&bytes).unwrap()).unwrap();
    assert_eq!(game.n(), 10);
    assert!(game.check_zero_sum(ZeroSumCheck::ExactPairwise { tol: 0.0 }).passed);
    let out = exec(&["validate", "game", "--game", path_str(&a)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn gen_minimal_game_to_stdout() {
    let out = exec(&["gen", "--n", "2", "--actions", "1"]);
    assert_eq!(code(&out), 0);
    let game = PolymatrixGame::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let e = &game.edges()[0];
    assert_eq!(e.a_ij.len(), 1);
    assert_eq!(e.a_ji[0], -e.a_ij[0]);
    assert_eq!(code(&exec(&["gen", "--n", "1"])), 2);
}

#[test]
fn qre_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(code(&exec(&["gen", "--n", "3", "--actions", "3", "--seed", "4", "--out", path_str(&g)])), 0);
    assert_eq!(code(&exec(&["qre", "--game", path_str(&g), "--tau", "0"])), 2);
    let sol_path = dir.path().join("qre.json");
    let out = exec(&["qre", "--game", path_str(&g), "--tau", "0.1", "--out", path_str(&sol_path)]);
    assert_eq!(code(&out), 0);
    let sol: polyomwu::QreSolution = serde_json::from_str(&std::fs::read_to_string(&sol_path).unwrap()).unwrap();
    let game = PolymatrixGame::from_json(&std::fs::read_to_string(&g).unwrap()).unwrap();
    assert!(polyomwu::qre_residual(&game, &sol.profile, 0.1).unwrap() <= 1e-10);
    let out = exec(&["qre", "--game", path_str(&g), "--tau", "0.1", "--max-iter", "3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn validate_rejects_non_antisymmetric_game() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(code(&exec(&["gen", "--n", "3", "--actions", "2", "--out", path_str(&g)])), 0);
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&g).unwrap()).unwrap();
    let v = doc["edges"][0]["a_ji"][0].as_f64().unwrap();
    doc["edges"][0]["a_ji"][0] = serde_json::json!(v + 0.25);
    std::fs::write(&g, doc.to_string()).unwrap();
    let out = exec(&["validate", "game", "--game", path_str(&g)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("2.5e-1"));
}

#[test]
fn validate_permuted_schedule_and_replay_it() {
    let dir = tempfile::tempdir().unwrap();
    let perm = dir.path().join("perm.txt");
    let out = exec(&[
        "validate", "schedule", "--delay", "permuted", "--gamma", "25", "--horizon", "5000", "--agents", "2",
        "--dump", path_str(&perm),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let out = exec(&[
        "validate", "schedule", "--delay", "replay", "--schedule-file", path_str(&perm), "--horizon", "5000",
        "--agents", "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(code(&exec(&["validate", "schedule", "--delay", "fixed"])), 2);
}

#[test]
fn custom_run_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 4, "actions": 3, "eta": 0.02, "horizon": 10, "seeds": [0, 1, 2]}"#).unwrap();
    let out = exec(&["run", "--preset", "custom", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = run_dir(&out);
    assert!(run.file_name().unwrap().to_str().unwrap().starts_with("custom-"));
    for f in ["seed_0.csv", "seed_1.csv", "seed_2.csv", "mean.csv"] {
        let text = std::fs::read_to_string(run.join("run").join(f)).unwrap();
        assert_eq!(text.lines().count(), 11, "{f}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("run/seed_1.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["config"]["horizon"], 10);
}

#[test]
fn golden_csv_head() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(&[
        "run", "--n", "3", "--actions", "2", "--eta", "0.05", "--horizon", "10", "--seeds", "0", "--regret", "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(run_dir(&out).join("run/seed_0.csv")).unwrap();
    let head: Vec<&str> = csv.lines().take(4).collect();
    let golden = include_str!("golden/tiny_seed0_head.csv");
    assert_eq!(head, golden.lines().collect::<Vec<_>>());
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        exec(&[
            "run", "--n", "4", "--actions", "3", "--delay", "permuted", "--gamma", "3", "--two-timescale", "--eta",
            "0.02", "--horizon", "50", "--seeds", "0..3", "--out", path_str(d),
        ])
    };
    let (oa, ob) = (args(a.path()), args(b.path()));
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    let (da, db) = (run_dir(&oa), run_dir(&ob));
    assert_eq!(da.file_name(), db.file_name());
    for f in ["run/seed_0.csv", "run/seed_2.csv", "run/mean.csv", "summary.csv"] {
        assert_eq!(std::fs::read(da.join(f)).unwrap(), std::fs::read(db.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&exec(&["run", "--preset", "fig2b", "--tau", "0.2"])), 2);
    assert_eq!(code(&exec(&["run", "--preset", "custom"])), 2);
    assert_eq!(code(&exec(&["run", "--preset", "fig9"])), 2);
    assert_eq!(code(&exec(&["run", "--delay", "uniform", "--horizon", "3"])), 2);
    assert_eq!(code(&exec(&["run", "--eta", "fast", "--horizon", "3"])), 2);
    assert_eq!(code(&exec(&["run", "--tau", "0.1", "--eta", "20", "--horizon", "3"])), 2);
    assert_eq!(code(&exec(&["frobnicate"])), 2);
}
