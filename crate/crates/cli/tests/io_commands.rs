mod common;

use std::fs;

use common::*;
use plsforge::bigdata::ChunkedDataset;
use plsforge::ChunkSource;
use plsforge::DenseMatrix;

fn awkward_matrix(n: usize, p: usize, seed: u64) -> DenseMatrix {
    // values whose decimal forms need all 17 digits
    DenseMatrix::from_fn(n, p, |i, j| {
        let t = (i * 31 + j * 7) as f64 + seed as f64;
        (t * 0.1).sin() / 3.0 + 1e-300 * (j as f64) - 12345.678901234567 * ((i + j) % 2) as f64
    })
}

#[test]
fn ten_rows_in_two_chunks_of_five() {
    let dir = tempfile::tempdir().unwrap();
    let x = awkward_matrix(10, 3, 1);
    let y = awkward_matrix(10, 2, 2);
    let (xp, yp, out) = (dir.path().join("x.csv"), dir.path().join("y.csv"), dir.path().join("ds"));
    write_csv(&xp, None, &x);
    write_csv(&yp, Some("a,b"), &y);
    ok(&["import", "--x", s(&xp), "--y", s(&yp), "--chunks", "2", "--out", s(&out)]);

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["G"], 2);
    assert_eq!(m["chunk_rows"], serde_json::json!([5, 5]));
    assert_eq!((m["n"].as_u64(), m["p"].as_u64(), m["q"].as_u64()), (Some(10), Some(3), Some(2)));

    let ds = ChunkedDataset::open(&out).unwrap();
    let (x0, _) = ds.read_chunk(0).unwrap();
    let (x1, y1) = ds.read_chunk(1).unwrap();
    assert_eq!(x0, x.rows(0, 5).into_owned());
    assert_eq!(x1, x.rows(5, 5).into_owned());
    assert_eq!(y1, y.rows(5, 5).into_owned());
}

#[test]
fn csv_to_dataset_to_csv_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let x = awkward_matrix(23, 4, 3);
    let y = awkward_matrix(23, 3, 4);
    let (xp, yp) = (dir.path().join("x.csv"), dir.path().join("y.csv"));
    write_csv(&xp, Some("p,q,r,s"), &x);
    write_csv(&yp, None, &y);
    let ds = dir.path().join("ds");
    ok(&["import", "--x", s(&xp), "--y", s(&yp), "--chunk-rows", "7", "--out", s(&ds)]);
    assert_eq!(json(&ds.join("manifest.json"))["chunk_rows"], serde_json::json!([7, 7, 7, 2]));
    // 7 rows of 4 + 3 doubles
    let by_bytes = dir.path().join("by_bytes");
    ok(&["import", "--x", s(&xp), "--y", s(&yp), "--chunk-bytes", "392", "--out", s(&by_bytes)]);
    assert_eq!(json(&by_bytes.join("manifest.json"))["chunk_rows"], serde_json::json!([7, 7, 7, 2]));

    let back = dir.path().join("back");
    ok(&["export", "--data", s(&ds), "--out", s(&back)]);
    let (hx, x2) = read_csv(&back.join("x.csv"), 0);
    let (hy, y2) = read_csv(&back.join("y.csv"), 0);
    assert_eq!(hx, ["x1", "x2", "x3", "x4"]);
    assert_eq!(hy, ["y1", "y2", "y3"]);
    for (a, b) in x.iter().zip(x2.iter()).chain(y.iter().zip(y2.iter())) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn header_is_detected_only_when_first_row_is_not_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let with = dir.path().join("with.csv");
    let without = dir.path().join("without.csv");
    let y = dir.path().join("y.csv");
    fs::write(&with, "alpha,beta\n1,2\n3,4.5\n-1,0\n").unwrap();
    fs::write(&without, "1,2\n3,4.5\n-1,0\n").unwrap();
    fs::write(&y, "1e0\n2\n3\n").unwrap();
    for (p, out) in [(&with, "a"), (&without, "b")] {
        let out = dir.path().join(out);
        ok(&["import", "--x", s(p), "--y", s(&y), "--out", s(&out)]);
        let ds = ChunkedDataset::open(&out).unwrap();
        assert_eq!(ds.n_rows(), 3);
    }
}

#[test]
fn labels_are_dummy_coded_on_import() {
    let dir = tempfile::tempdir().unwrap();
    let xp = dir.path().join("x.csv");
    let lp = dir.path().join("labels.csv");
    write_csv(&xp, None, &awkward_matrix(5, 2, 5));
    fs::write(&lp, "class\nb\na\nb\nc\na\n").unwrap();
    let out = dir.path().join("ds");
    ok(&["import", "--x", s(&xp), "--labels", s(&lp), "--labels-header", "--out", s(&out)]);
    let ds = ChunkedDataset::open(&out).unwrap();
    // classes in order of first appearance
    assert_eq!(ds.manifest().classes.as_deref(), Some(&["b".to_string(), "a".into(), "c".into()][..]));
    let (_, y) = ds.read_chunk(0).unwrap();
    assert_eq!(y.row(0).iter().copied().collect::<Vec<_>>(), [1.0, 0.0, 0.0]);
    assert_eq!(y.row(3).iter().copied().collect::<Vec<_>>(), [0.0, 0.0, 1.0]);
}

#[test]
fn bad_input_reports_line_numbers_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    fs::write(d("y.csv"), "1\n2\n3\n").unwrap();
    fs::write(d("ragged.csv"), "a,b\n1,2\n3\n4,5\n").unwrap();
    fs::write(d("text.csv"), "1,2\n3,oops\n4,5\n").unwrap();
    fs::write(d("nan.csv"), "1,2\n3,NaN\n4,5\n").unwrap();
    fs::write(d("short.csv"), "1,2\n3,4\n").unwrap();

    let err = fails(&["import", "--x", s(&d("ragged.csv")), "--y", s(&d("y.csv")), "--out", s(&d("o1"))], 3);
    assert!(err.contains("line 3"), "{err}");
    let err = fails(&["import", "--x", s(&d("text.csv")), "--y", s(&d("y.csv")), "--out", s(&d("o2"))], 3);
    assert!(err.contains("line 2") && err.contains("column 2"), "{err}");
    let err = fails(&["import", "--x", s(&d("nan.csv")), "--y", s(&d("y.csv")), "--out", s(&d("o3"))], 3);
    assert!(err.contains("line 2"), "{err}");
    let err = fails(&["import", "--x", s(&d("short.csv")), "--y", s(&d("y.csv")), "--out", s(&d("o4"))], 3);
    assert!(err.contains("row count"), "{err}");
    // nothing half-written on failure
    for o in ["o1", "o2", "o3", "o4"] {
        assert!(!d(o).exists());
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 5);

    fails(&["import", "--x", s(&d("missing.csv")), "--y", s(&d("y.csv")), "--out", s(&d("o5"))], 4);
    fails(&["import", "--x", s(&d("short.csv"))], 2);
    fails(&["fit", "--data", s(&d("nowhere")), "--out", s(&d("m"))], 6);
    fails(&["predict", "--model", s(&d("nowhere")), "--x", s(&d("y.csv")), "--out", s(&d("p.csv"))], 6);
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn existing_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--design", "plsda", "--n", "6", "--out", s(&out)]);
    let err = fails(&["simulate", "--design", "plsda", "--n", "9", "--out", s(&out)], 2);
    assert!(err.contains("--force"), "{err}");
    assert_eq!(ChunkedDataset::open(&out).unwrap().n_rows(), 6);
    ok(&["simulate", "--design", "plsda", "--n", "9", "--force", "--out", s(&out)]);
    assert_eq!(ChunkedDataset::open(&out).unwrap().n_rows(), 9);
}

#[test]
fn simulate_shapes_classes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    ok(&["simulate", "--design", "group-pls", "--n", "100", "--seed", "3", "--chunks", "4", "--out", s(&d("g"))]);
    let ds = ChunkedDataset::open(d("g")).unwrap();
    assert_eq!((ds.n_rows(), ds.dims()), (100, (400, 500)));
    assert_eq!(ds.n_chunks(), 4);
    let truth = json(&d("g").join("truth.json"));
    assert_eq!(truth["truth"]["active_x"].as_array().unwrap().len(), 4);
    assert_eq!(truth["truth"]["active_y"].as_array().unwrap().len(), 4);

    ok(&["simulate", "--design", "plsda", "--n", "6", "--seed", "3", "--out", s(&d("p"))]);
    let ds = ChunkedDataset::open(d("p")).unwrap();
    assert_eq!((ds.n_rows(), ds.dims()), (6, (600, 3)));
    assert_eq!(ds.manifest().classes.as_ref().unwrap().len(), 3);
    let labels = fs::read_to_string(d("p").join("labels.csv")).unwrap();
    assert_eq!(labels, "1\n1\n2\n2\n3\n3\n");

    // reruns are byte-identical, in both formats
    for fmt in ["dataset", "csv"] {
        for (design, n) in [("group-pls", "50"), ("plsda", "12")] {
            let a = d(&format!("{design}-{fmt}-a"));
            let b = d(&format!("{design}-{fmt}-b"));
            for out in [&a, &b] {
                ok(&["simulate", "--design", design, "--n", n, "--seed", "9", "--format", fmt, "--out", s(out)]);
            }
            let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            assert!(names.len() >= 3);
            for name in names {
                assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
            }
        }
    }
}

#[test]
fn info_describes_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    ok(&["simulate", "--design", "plsda", "--n", "9", "--chunks", "3", "--out", s(&out)]);
    let v: serde_json::Value = serde_json::from_str(&ok(&["info", "--data", s(&out)])).unwrap();
    assert_eq!(v["kind"], "dataset");
    assert_eq!(v["chunks"], 3);
    assert_eq!(v["classes"], serde_json::json!(["1", "2", "3"]));
}
