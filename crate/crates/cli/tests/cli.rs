use std::{
    fs,
    path::{Path, PathBuf},
    process::{Command, Output},
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hopfield-attract"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for sub in ["", "analyze", "check", "bound", "simulate", "example", "matrix"] {
        let mut args = vec![];
        if !sub.is_empty() {
            args.push(sub);
        }
        args.push("--help");
        let out = run(&args);
        assert!(out.status.success());
        let name = if sub.is_empty() { "main" } else { sub };
        let path = golden.join(format!("help-{name}.txt"));
        let expected = fs::read_to_string(&path).unwrap();
        assert_eq!(stdout(&out), expected, "help for `{name}` drifted from {}", path.display());
    }
}

#[test]
fn check_example_4_1() {
    let out = run(&["check", "example-4.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("M_hat: singular M-matrix, reducible"));
    assert!(text.contains("[  0.666667  -0.333333          0]\n[         0   0.666667  -0.333333]\n[         0          0          0]"));
    assert!(text.contains("[attractive_item_i]"));
}

#[test]
fn check_json_and_inconclusive_exit() {
    let out = run(&["check", "example-4.2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "attractive_item_ii");
    let out = run(&["check", &fixture("inconclusive.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("this does not indicate instability"));
}

#[test]
fn errors_exit_one() {
    let out = run(&["check", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("a[1]") && err.contains("position"), "{err}");
    let out = run(&["check", "example-9.9"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["simulate", "example-4.1", "--eps-trunc", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["simulate", "example-4.1", "--steps", "x"]);
    assert_eq!(out.status.code(), Some(2), "clap usage errors use status 2");
}

#[test]
fn simulate_example_4_2_decays() {
    let out = run(&["simulate", "example-4.2", "--steps", "2000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "m,x_1,x_2,x_3,sup_norm,tail_err");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2001);
    let last: Vec<f64> = rows[2000].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 2000.0);
    assert!(last[4] < 1e-3);
    // Deterministic output.
    assert_eq!(stdout(&run(&["simulate", "example-4.2", "--steps", "2000"])), text);
}

#[test]
fn bound_csv_to_file() {
    let path: PathBuf = Path::new(env!("CARGO_TARGET_TMPDIR")).join("bound-4.2.csv");
    let out = run(&[
        "bound",
        "example-4.2",
        "--regime",
        "plus",
        "--q-cap",
        "50",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("q,S_1,S_2,S_3\n0,1.0000000000000000e0,"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn matrix_and_analyze() {
    let out = run(&["matrix", &fixture("identity3.txt")]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "non-singular M-matrix, reducible\n");
    let out = run(&["analyze", &fixture("m-plus-4.2.txt")]);
    let text = stdout(&out);
    assert!(text.contains("classification: singular M-matrix, irreducible"));
    assert!(text.contains("d = (1, 1, 1)"));
}

#[test]
fn example_prints_side_by_side() {
    let out = run(&["example", "example-4.1", "--steps", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("M_hat: reference | computed"));
    assert!(text.contains("converged at: m = "));
}
