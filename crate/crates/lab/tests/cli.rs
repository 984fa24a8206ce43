use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tsclab(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tsclab"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    out
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_simulate_bench_evolve_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = stdout(&tsclab(
        d,
        &[
            "gen-grid",
            "--rows",
            "1",
            "--cols",
            "2",
            "--demand-end",
            "600",
            "--out",
            "inst",
        ],
    ));
    assert!(s.contains("2 intersections"), "{s}");

    let s = stdout(&tsclab(
        d,
        &[
            "simulate",
            "--roadnet",
            "inst/roadnet.json",
            "--flow",
            "inst/flow.json",
            "--controller",
            "fixed",
            "--out",
            "ep",
        ],
    ));
    assert!(s.starts_with("Fixed-Time:"), "{s}");
    assert!(d.join("ep/episode.json").is_file() && d.join("ep/phase_log.csv").is_file());

    fs::write(d.join("mine.sexp"), "(- x8 x10)\n").unwrap();
    let s = stdout(&tsclab(
        d,
        &[
            "bench",
            "--roadnet",
            "inst/roadnet.json",
            "--flow",
            "inst/flow.json",
            "--controller",
            "mp",
            "--controller",
            "mine.sexp",
        ],
    ));
    assert!(s.contains("MP") && s.contains("mine"), "{s}");

    fs::write(
        d.join("exp.json"),
        r#"{"instance":{"files":{"roadnet":"inst/roadnet.json","flow":"inst/flow.json"}},
            "sim":{"duration":600},"evolution":{"population_size":8,"generations":2},"runs":3}"#,
    )
    .unwrap();
    stdout(&tsclab(
        d,
        &[
            "evolve", "--config", "exp.json", "--runs", "2", "--seed", "9", "--out", "res",
        ],
    ));
    let report = fs::read_to_string(d.join("res/report.json")).unwrap();
    assert!(report.contains("\"seeds\": [\n    9,\n    10\n  ]"), "{report}");
    assert!(!d.join("res/best_tree_run2.sexp").exists());

    let s = stdout(&tsclab(d, &["analyze", "res", "--out", "an"]));
    assert!(s.contains("top terminals:"), "{s}");
    assert_eq!(
        fs::read_to_string(d.join("an/terminals.csv")).unwrap().lines().count(),
        17
    );
}

#[test]
fn bad_input_fails_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("broken.json"), "{").unwrap();
    let o = tsclab(tmp.path(), &["evolve", "--config", "broken.json"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json"));

    let o = tsclab(tmp.path(), &["simulate", "--roadnet", "x.json"]);
    assert!(!o.status.success());
}
