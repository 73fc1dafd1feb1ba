use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BROKEN_SQUARE: &str = r#"{
  "dims": {
    "0": ["00", "01", "10", "11", "w"],
    "1": ["bottom", "left", "right", "top"],
    "2": ["sq"]
  },
  "faces": {
    "bottom": {"0-": "00", "0+": "w"},
    "top": {"0-": "01", "0+": "11"},
    "left": {"0-": "00", "0+": "01"},
    "right": {"0-": "10", "0+": "11"},
    "sq": {"0-": "left", "0+": "right", "1-": "bottom", "1+": "top"}
  }
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cube-blowup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn validate_reports_counts() {
    let out = stdout(&run(&["validate", &data("cross.json")]));
    assert!(out.contains("counts [5, 4]"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.json", BROKEN_SQUARE);
    assert_eq!(
        run(&["validate", broken.to_str().unwrap()]).status.code(),
        Some(1)
    );
    let garbage = write(&dir, "garbage.json", "{ not json");
    assert_eq!(
        run(&["validate", garbage.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["validate", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let unknown = run(&["fibers", "-n", "1", "--cube", "(7,7)", &data("cross.json")]);
    assert_eq!(unknown.status.code(), Some(1));
    assert_eq!(
        run(&["model", "--program", "P(m;V(m)"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["model", "--program", "P(m)|V(m)"]).status.code(),
        Some(1)
    );
}

#[test]
fn tensor_and_subdivide_outputs_validate() {
    let dir = TempDir::new().unwrap();
    let square = dir.path().join("square.json");
    let cross = data("cross.json");
    stdout(&run(&[
        "tensor",
        &cross,
        &cross,
        "-o",
        square.to_str().unwrap(),
    ]));
    let out = stdout(&run(&["validate", square.to_str().unwrap()]));
    assert!(out.contains("counts [25, 40, 16]"), "{out}");
    let halved = write(
        &dir,
        "halved.json",
        &stdout(&run(&["subdivide", "-s", "2", &cross])),
    );
    let out = stdout(&run(&["validate", halved.to_str().unwrap()]));
    assert!(out.contains("counts [9, 8]"), "{out}");
}

#[test]
fn blowup_file_matches_printed_json() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("b.json");
    let printed = stdout(&run(&[
        "blowup",
        "-n",
        "1",
        "--json",
        "-o",
        target.to_str().unwrap(),
        &data("cross.json"),
    ]));
    assert_eq!(fs::read_to_string(&target).unwrap(), printed);
    assert_eq!(
        printed,
        fs::read_to_string(data("cross-blowup.json")).unwrap()
    );
    let summary = stdout(&run(&["blowup", "-n", "1", &data("cross.json")]));
    assert!(
        summary.starts_with("1-blowup: 8 germs over 9 cubes"),
        "{summary}"
    );
}

#[test]
fn committed_examples_reproduce() {
    let lifts = stdout(&run(&[
        "lift",
        "-n",
        "1",
        "--path",
        &data("cross-path.json"),
        &data("cross.json"),
    ]));
    assert_eq!(lifts, fs::read_to_string(data("cross-lifts.json")).unwrap());
    let dot = stdout(&run(&[
        "export",
        "--format",
        "dot",
        "-n",
        "1",
        &data("cross.json"),
    ]));
    assert_eq!(dot, fs::read_to_string(data("cross.dot")).unwrap());
    let model = stdout(&run(&["model", "--program", &data("mutex.prog")]));
    assert_eq!(model, fs::read_to_string(data("mutex-model.json")).unwrap());
}

#[test]
fn inline_program_matches_file() {
    let from_file = stdout(&run(&["model", "--program", &data("mutex.prog")]));
    let text = fs::read_to_string(data("mutex.prog")).unwrap();
    let inline = stdout(&run(&["model", "--program", text.trim()]));
    assert_eq!(inline, from_file);
}

#[test]
fn fibers_lists_germs() {
    let out = stdout(&run(&[
        "fibers",
        "-n",
        "1",
        "--cube",
        "(0,0)",
        &data("cross.json"),
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["germs"].as_array().unwrap().len(), 4);
    assert_eq!(v["cube"], "(0,0)");
}
