use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

#[test]
fn mermin_classical_value() {
    let out = run(&["classical", "--game", &data("mermin.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out), serde_json::json!({ "omega": "3/4", "beta": "1/2" }));

    let out = run(&["classical", "--game", &data("mermin.json"), "--witness"]);
    assert_eq!(json_of(&out)["witness"].as_array().unwrap().len(), 3);
}

#[test]
fn uag_table_lower_bounds() {
    let out = run(&["uag-table", "--m", "2", "--t", "2..9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lower: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(lower, ["1", "3/4", "2/3", "29/48", "17/30", "781/1440", "166/315", "8341/16128"]);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn two_player_profile_always_picks_one() {
    let out = run(&["uag-profile", "--t", "2", "--m", "2", "--grid", "8", "-o", "csv"]);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.ends_with(",1")));
}

#[test]
fn output_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&["ugsdp", "study", "--k", "3", "--eps", "0.01,0.05", "--seeds", "4", "--seed", "9", "-o", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(a.starts_with(b"eps,mean_loss,stderr,sqrt_eps_log_k\n"));
    assert_eq!(a, b);

    // worker count does not change the bytes
    let one = run(&["--workers", "1", "floor-trial", "--t", "3", "--m", "2", "--samples", "20000", "--seed", "5"]);
    let four = run(&["--workers", "4", "floor-trial", "--t", "3", "--m", "2", "--samples", "20000", "--seed", "5"]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn exit_codes_are_distinct() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = run(&["classical", "--game", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed input"));

    let out = run(&["classical", "--game", &data("mermin.json"), "--budget", "3"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));

    let out = run(&["floor-trial", "--t", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));

    assert_eq!(run(&["classical", "--game", &data("mermin.json"), "--budget", "0"]).status.code(), Some(3));
    assert_eq!(run(&["classical", "--game", "/nonexistent/g.json"]).status.code(), Some(1));
}

#[test]
fn partial_results_exit_two() {
    let out = run(&["linegame", "--p", "3", "--n", "2", "--t", "3", "bias", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["exact"], Value::Bool(false));

    let out = run(&["boyer-search", "--t", "3", "--m", "2", "--d-max", "4", "--budget", "40"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    assert!(!v["skipped"].as_array().unwrap().is_empty());
}

#[test]
fn boyer_search_minimum() {
    let out = run(&["boyer-search", "--t", "3", "--m", "2", "--d-max", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["min"]["value"], "3/4");
}

#[test]
fn ghz_strategy_wins_mermin() {
    let out = run(&["qeval", "--game", &data("mermin.json"), "--strategy", &data("mermin_ghz.json")]);
    let p = json_of(&out)["winning_probability"].as_f64().unwrap();
    assert!((p - 1.0).abs() < 1e-9);

    let out = run(&["schmidt-reduce", "--game", &data("mermin.json"), "--strategy", &data("mermin_ghz_schmidt.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["angles"].as_array().unwrap().len(), 3);
}

#[test]
fn chsh_tensor_norm_and_extraction() {
    let v = json_of(&run(&["hypnorm", "--tensor", &data("chsh_tensor.json"), "--t", "2"]));
    assert!((v["norm"].as_f64().unwrap() - 2f64.powf(-0.25)).abs() < 1e-12);
    assert_eq!(v["expectation_exact"], "1/2");
    let v = json_of(&run(&["extract", "--tensor", &data("chsh_tensor.json")]));
    assert_eq!(v["bias"], "1/2");
    assert_eq!(run(&["ht", "--t", "4"]).status.code(), Some(0));
}

#[test]
fn quadratic_phase_gowers_norm() {
    let v = json_of(&run(&["gowers", "--fn", &data("quadratic_z5.json"), "--s", "2"]));
    assert!((v["norm"].as_f64().unwrap() - 5f64.powf(-0.25)).abs() < 1e-9);
}

#[test]
fn magic_square_line_game() {
    let v = json_of(&run(&["linegame", "--p", "3", "--n", "2", "--t", "3", "vonneumann"]));
    assert_eq!(v["holds"], Value::Bool(true));
    assert_eq!(v["exact"], Value::Bool(true));

    let v = json_of(&run(&["linegame", "--p", "3", "--n", "1", "--t", "2", "--tau", &data("tau_z3.json"), "parrep", "--k", "2"]));
    assert_eq!(v["holds"], Value::Bool(true));

    let out = run(&["linegame", "--p", "3", "--n", "2", "--t", "3", "witness", "--seed", "2", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["split"].as_array().unwrap().len(), 3);
}

#[test]
fn unique_game_solve_then_round() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let out = run(&["ugsdp", "solve", "--game", &data("chsh_unique.json"), "--tol", "1e-7", "-o", sol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let target = (std::f64::consts::PI / 8.0).cos().powi(2);
    assert!((s["objective"].as_f64().unwrap() - target).abs() < 1e-5);

    let a = run(&["ugsdp", "round", "--sol", sol.to_str().unwrap(), "--seed", "11"]);
    let b = run(&["ugsdp", "round", "--sol", sol.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    let win = v["value"].as_str().unwrap();
    assert!(["0", "1/4", "1/2", "3/4", "1"].contains(&win));
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for cmd in [
        "classical", "uag-table", "boyer-search", "uag-profile", "schmidt-reduce", "qeval", "hypnorm", "ht", "extract",
        "gowers", "linegame", "ugsdp", "floor-trial",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}
