use std::path::PathBuf;
use std::process::{Command, Output};

use bracket_exact::bracket::{compute_tournament, ComputeOptions};
use bracket_exact::data_io::{parse_json_lines, TournamentConfig};
use bracket_exact::match_model::{build_matrices, ModelParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bracket-exact"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bx-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn compute_men_bundled() {
    let text = stdout(&["--config", "men-2022", "--format", "json-lines", "compute"]);
    let report = parse_json_lines(&text).unwrap();
    assert_eq!(report.teams.len(), 32);
    assert_eq!(report.teams[0].name, "Qatar");
    let champion: f64 = report.champion().iter().sum();
    assert!((champion - 1.0).abs() < 1e-8);
    let combos = report.combos.unwrap();
    assert_eq!(combos.full_range()[1..], [576, 6_272, 57_600, 992]);

    let table = stdout(&["--config", "men-2022", "compute"]);
    assert_eq!(
        table
            .lines()
            .filter(|l| l.contains("  A  ") || l.contains(" A   "))
            .count(),
        4
    );
    assert!(table.contains("Champion"));
    assert!(table.contains("6272"));
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &[
            "--config",
            "women-2023",
            "--format",
            "json-lines",
            "compute",
        ][..],
        &[
            "--config",
            "women-2023",
            "--format",
            "json-lines",
            "simulate",
            "--runs",
            "3000",
            "--seed",
            "9",
        ][..],
        &[
            "--config",
            "women-2023",
            "--format",
            "json-lines",
            "bracket",
        ][..],
    ] {
        assert_eq!(stdout(args), stdout(args), "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["compute"]).status.code(), Some(2));
    assert_eq!(
        run(&["--config", "no-such-config.toml", "compute"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["ranking-table", "--group-size", "6"]).status.code(),
        Some(4)
    );
    assert_eq!(
        run(&["ranking-table", "--group-size", "7", "--allow-large-groups"])
            .status
            .code(),
        Some(4)
    );

    let dir = temp_dir("exit");
    let bad = bracket_exact::bracket::ScheduleDescriptor::wc2022()
        .to_toml_string()
        .replace("blocks = [2, 3]", "blocks = [2, 4]");
    let path = dir.join("bad.toml");
    std::fs::write(&path, bad).unwrap();
    let out = run(&[
        "--config",
        "men-2022",
        "--schedule",
        path.to_str().unwrap(),
        "compute",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("round 1"));
}

#[test]
fn ranking_table_export() {
    let csv = stdout(&["ranking-table"]);
    assert_eq!(csv.lines().count(), 730);
    assert!(csv.lines().any(|l| l == "522,2,9,11,,,,,,,,,,"));
}

#[test]
fn bracket_probability_recomputes() {
    let text = stdout(&[
        "--config",
        "women-2023",
        "--format",
        "json-lines",
        "bracket",
    ]);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    let (p, q) = (
        v["probability"].as_f64().unwrap(),
        v["recomputed"].as_f64().unwrap(),
    );
    assert!(p > 0.0 && (p / q - 1.0).abs() < 1e-12);
    assert_eq!(v["rounds"].as_array().unwrap().len(), 4);
    let tree = stdout(&["--config", "women-2023", "bracket"]);
    assert!(tree.contains("Champion: "));
    assert_eq!(tree.lines().filter(|l| l.contains("L16: ")).count(), 8);
}

#[test]
fn overrides_flag_changes_result() {
    let dir = temp_dir("ovr");
    let path = dir.join("o.csv");
    std::fs::write(
        &path,
        "stage,team_a,team_b,result\ngroup,Zambia,Spain,a_wins\n",
    )
    .unwrap();
    let base = parse_json_lines(&stdout(&[
        "--config",
        "women-2023",
        "--format",
        "json-lines",
        "compute",
    ]))
    .unwrap();
    let fixed = parse_json_lines(&stdout(&[
        "--config",
        "women-2023",
        "--overrides",
        path.to_str().unwrap(),
        "--format",
        "json-lines",
        "compute",
    ]))
    .unwrap();
    let zambia = base.teams.iter().position(|t| t.name == "Zambia").unwrap();
    assert!(fixed.teams[zambia].reach[0] > base.teams[zambia].reach[0]);
    // Second half of the bracket does not see group C until the final.
    for t in 16..32 {
        assert_eq!(base.teams[t].reach[..4], fixed.teams[t].reach[..4]);
    }

    std::fs::write(&path, "knockout,Zambia,Spain,draw\n").unwrap();
    let out = run(&[
        "--config",
        "women-2023",
        "--overrides",
        path.to_str().unwrap(),
        "compute",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn calibrate_recovers_model_sigma() {
    let cfg = TournamentConfig::bundled("women-2023").unwrap();
    let m = build_matrices(
        &cfg.ratings,
        ModelParams::new(300.0).unwrap(),
        cfg.knockout_rule,
    )
    .unwrap();
    let win = compute_tournament(&m, &cfg.schedule, ComputeOptions::default())
        .unwrap()
        .win;
    let mut csv = String::from("team,decimal_odds\n");
    for (i, p) in win.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", cfg.teams.name(i), 1.0 / p));
    }
    let dir = temp_dir("cal");
    let path = dir.join("odds.csv");
    std::fs::write(&path, csv).unwrap();
    let text = stdout(&[
        "--config",
        "women-2023",
        "--format",
        "json-lines",
        "calibrate",
        "--odds",
        path.to_str().unwrap(),
        "--sigma-grid",
        "200:400:25",
    ]);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["sigma"].as_f64(), Some(300.0));
    assert_eq!(v["curve"].as_array().unwrap().len(), 9);
}

#[test]
fn bench_and_compare_run() {
    let text = stdout(&[
        "--config",
        "women-2023",
        "--format",
        "json-lines",
        "bench",
        "--reps",
        "5",
        "--runs",
        "200",
    ]);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert!(v["equivalent_runs"].as_f64().unwrap() > 0.0);
    assert_eq!(v["exact_deterministic"], serde_json::Value::Bool(true));

    let csv = stdout(&[
        "--config",
        "men-2022",
        "compare",
        "--grid",
        "100,400",
        "--trials",
        "5",
        "--skip-timing",
    ]);
    assert!(csv.starts_with("runs,trial_stat,measure,value\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 9);
    assert!(
        run(&["--config", "men-2022", "compare", "--grid", "0"])
            .status
            .code()
            == Some(2)
    );
}

#[test]
fn schedule_flag_reindexes() {
    let text = stdout(&[
        "--config",
        "women-2023",
        "--schedule",
        "wc2022",
        "--format",
        "json-lines",
        "compute",
    ]);
    let r = parse_json_lines(&text).unwrap();
    assert_eq!(r.schedule, "wc2022");
    assert_eq!(r.teams[4].group, "B");
}
