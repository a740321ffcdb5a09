use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfspace"))
        .args(args)
        .current_dir(root())
        .env_remove("HALFSPACE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// The value of column `name` in the first data row of a CSV document.
fn column(csv: &str, name: &str) -> String {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    row[k].to_string()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["ahat", "--q", "zero,one"]).status.code(), Some(2));
}

#[test]
fn shipped_models_validate() {
    for file in ["reference", "companion", "injective", "fan"] {
        let out = run(&["validate", &format!("models/{file}.json")]);
        assert!(out.status.success(), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).starts_with("# model_sha256="));
    }
}

#[test]
fn missing_model_file_is_an_error() {
    let out = run(&["--model", "models/none.json", "ahat", "--q", "0,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn a_hat_of_the_vertical_direction() {
    let out = run(&["ahat", "--q", "0,1"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let get = |name: &str| column(&csv, name).parse::<f64>().unwrap();
    assert!((get("a_hat_0") + 0.25541).abs() < 1e-5);
    assert!((get("a_hat_1") - 0.75151).abs() < 1e-5);
    assert!((get("i") - 0.75151).abs() < 1e-5);
    assert_eq!(get("gamma_q_0"), 0.0);
}

#[test]
fn negative_list_values_parse() {
    let out = run(&["ahat", "--q", "-1,1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn same_seed_same_bytes() {
    let args = ["--seed", "7", "green", "--from", "0,1", "--to", "2,1", "--method", "mc", "--paths", "3000"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut other = args;
    other[1] = "8";
    assert_ne!(run(&other).stdout, a.stdout);
}

#[test]
fn output_file_matches_standard_output() {
    let dir = std::env::temp_dir().join(format!("halfspace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("atlas.csv");
    let to_file = run(&["-o", path.to_str().unwrap(), "atlas", "--samples", "31"]);
    assert!(to_file.status.success());
    let direct = run(&["atlas", "--samples", "31"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn text_format_is_readable() {
    let out = run(&["--format", "text", "ahat", "--q", "1,1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("stratum"));
}
