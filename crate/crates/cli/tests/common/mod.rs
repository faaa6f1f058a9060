#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plsforge::DenseMatrix;

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plsforge"))
        .args(args)
        .env_remove("PLSFORGE_THREADS")
        .output()
        .expect("binary runs")
}

/// Run and require exit 0, returning stdout.
pub fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "plsforge {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Run expecting failure with `code`; returns stderr.
pub fn fails(args: &[&str], code: i32) -> String {
    let out = run(args);
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(out.status.code(), Some(code), "plsforge {args:?}: stderr was\n{err}");
    err
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parse a numeric CSV written by the tool; `skip` leading columns are dropped.
pub fn read_csv(path: &Path, skip: usize) -> (Vec<String>, DenseMatrix) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').skip(skip).map(String::from).collect();
    let mut data = Vec::new();
    let mut n = 0;
    for l in lines {
        data.extend(l.split(',').skip(skip).map(|c| c.parse::<f64>().unwrap()));
        n += 1;
    }
    let m = DenseMatrix::from_row_slice(n, header.len(), &data);
    (header, m)
}

pub fn write_csv(path: &Path, header: Option<&str>, m: &DenseMatrix) {
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(h);
        text.push('\n');
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

pub fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}
