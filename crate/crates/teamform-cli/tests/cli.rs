//! End-to-end CLI checks: board files round-trip through the binary, the
//! solver subcommand reproduces the reference game, and experiment reruns
//! are byte-identical.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_teamform"));
    assert!(p.exists(), "binary missing at {}", p.display());
    p = p.canonicalize().unwrap();
    p
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("teamform_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn gen_boards_writes_a_split() {
    let dir = tmp("gen");
    let status = Command::new(bin())
        .args([
            "gen-boards", "--n", "5", "--quota", "15", "--mean", "6", "--std", "1", "--train",
            "8", "--test", "4", "--seed", "5", "--exclude-equal-power",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let train = std::fs::read_to_string(dir.join("train.boards")).unwrap();
    assert!(train.starts_with("# seed=5\n# label=train\n"));
    assert_eq!(train.lines().filter(|l| !l.starts_with('#')).count(), 8);
}

#[test]
fn shapley_subcommand_prints_known_values() {
    let out = Command::new(bin())
        .args(["shapley", "--weights", "49,49,2", "--quota", "50"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim(),
        "0.3333333333333333,0.3333333333333333,0.3333333333333333"
    );
}

#[test]
fn solve_nash_reproduces_the_reference_game() {
    let dir = tmp("nash");
    let board = dir.join("board.txt");
    std::fs::write(&board, "0.4 0.4 0.2 0.2 0.2 ; 1\n").unwrap();
    let out = Command::new(bin())
        .args(["solve-nash", "--reward", "20", "--rounds", "10"])
        .arg("--board")
        .arg(&board)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("player,expected_utility,normalized"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v0: f64 = first[1].parse().unwrap();
    assert!((v0 - 6.29).abs() < 0.01, "v0 = {v0}");
}

#[test]
fn nash_corr_rerun_is_byte_identical() {
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = tmp(&format!("corr{run}"));
        let config = dir.join("cfg.toml");
        std::fs::write(&config, "seed = 12\n[boards]\nn_train = 2\nn_test = 6\n").unwrap();
        let status = Command::new(bin())
            .arg("nash-corr")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&dir)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(dir.join("nash_shapley.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
