use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wg-maxwell"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn runs_are_reproducible() {
    let args = ["--case", "s3", "--levels", "1..3"];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn paths_agree_at_printed_precision() {
    let full = stdout(&["--case", "s4", "--levels", "1..3", "--path", "full"]);
    let cond = stdout(&["--case", "s4", "--levels", "1..3", "--path", "condensed"]);
    let strip = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&full), strip(&cond));
}

#[test]
fn json_lists_one_report_per_case() {
    let text = stdout(&["--levels", "1..2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        assert_eq!(r["rows"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn csv_has_header_and_rows() {
    let text = stdout(&["--case", "s2", "--levels", "1..3", "--format", "csv"]);
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn slices_are_written_to_the_output_directory() {
    let dir = std::env::temp_dir().join(format!("wg-slices-{}", std::process::id()));
    let text = stdout(&[
        "--case",
        "s3",
        "--level",
        "2",
        "--slice-z",
        "0.5",
        "--slice-resolution",
        "8",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let written: Vec<_> = text.lines().collect();
    assert!(!written.is_empty());
    for path in written {
        let body = std::fs::read_to_string(path).unwrap();
        assert_eq!(body.lines().count(), 65, "{path}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_arguments_fail() {
    assert_eq!(run(&["--levels", "4..2"]).status.code(), Some(2));
    assert!(!run(&["--nu", "-1", "--level", "1"]).status.success());
    assert!(!run(&["--slice-z", "0.5"]).status.success());
}
