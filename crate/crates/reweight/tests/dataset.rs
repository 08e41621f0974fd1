use std::io::Write;

use reweight::dataset::{load_csv, synthetic_dataset, Generator, Standardizer};
use reweight::HarnessError;
use reweight_testkit::dense::Mat;

fn write_file(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    path
}

#[test]
fn three_row_file_with_response_last() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "small.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
    let ds = load_csv(&path, "y").unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.dim(), 2);
    assert_eq!(ds.features[1], vec![4.0, 5.0]);
    assert_eq!(ds.responses, vec![3.0, 6.0, 9.0]);
    assert_eq!(ds.feature_names, vec!["a", "b"]);
    assert_eq!(ds.dropped_rows, 0);
}

#[test]
fn response_column_may_be_in_the_middle_or_an_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "mid.csv", "a,target,b\n1,10,2\n3,30,4\n");
    let by_name = load_csv(&path, "target").unwrap();
    let by_index = load_csv(&path, "1").unwrap();
    assert_eq!(by_name.responses, vec![10.0, 30.0]);
    assert_eq!(by_name.features, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert_eq!(by_name.features, by_index.features);
}

#[test]
fn blank_cell_drops_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "gap.csv", "a,b,y\n1,2,3\n4,,6\n7,8,9\n");
    let ds = load_csv(&path, "y").unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.dropped_rows, 1);
    assert_eq!(ds.responses, vec![3.0, 9.0]);
}

#[test]
fn absent_file_reports_the_path() {
    let err = load_csv("/definitely/not/here.csv", "y").unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert!(err.to_string().contains("/definitely/not/here.csv"), "{err}");
}

#[test]
fn non_numeric_cell_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "bad.csv", "a,y\n1,2\nabc,3\n");
    let err = load_csv(&path, "y").unwrap_err();
    assert!(matches!(err, HarnessError::NonNumeric { .. }), "{err}");
    assert!(err.to_string().contains("abc"));
}

#[test]
fn empty_or_unknown_column_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_file(&dir, "empty.csv", "a,y\n");
    assert!(load_csv(&empty, "y").is_err());
    let all_blank = write_file(&dir, "blank.csv", "a,y\n1,\n,2\n");
    assert!(load_csv(&all_blank, "y").is_err());
    let path = write_file(&dir, "ok.csv", "a,y\n1,2\n");
    assert!(load_csv(&path, "z").is_err());
}

#[test]
fn noiseless_linear_data_is_exactly_affine() {
    let ds = synthetic_dataset(Generator::Linear, 40, 3, 0.0, 11).unwrap();
    // Fit an affine map by least squares and require a zero residual.
    let a = Mat::from_fn(ds.len(), 4, |i, j| if j == 0 { 1.0 } else { ds.features[i][j - 1] });
    let y = Mat::from_fn(ds.len(), 1, |i, _| ds.responses[i]);
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * &y)).unwrap();
    let resid = &a * &coef - &y;
    assert!(resid.amax() < 1e-12, "max residual {}", resid.amax());
    assert!(ds.responses.iter().all(|&y| y > 0.0));
}

#[test]
fn same_seed_gives_identical_bytes() {
    for g in [Generator::Linear, Generator::Sinusoid, Generator::Piecewise] {
        let mut a = Vec::new();
        let mut b = Vec::new();
        synthetic_dataset(g, 50, 2, 0.3, 5).unwrap().write_csv(&mut a).unwrap();
        synthetic_dataset(g, 50, 2, 0.3, 5).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn different_seeds_give_different_responses() {
    let a = synthetic_dataset(Generator::Sinusoid, 20, 2, 0.1, 1).unwrap();
    let b = synthetic_dataset(Generator::Sinusoid, 20, 2, 0.1, 2).unwrap();
    assert_ne!(a.responses, b.responses);
}

#[test]
fn written_csv_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic_dataset(Generator::Piecewise, 30, 3, 0.2, 9).unwrap();
    let path = dir.path().join("round.csv");
    ds.save_csv(&path).unwrap();
    let back = load_csv(&path, "y").unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.responses, ds.responses);
}

#[test]
fn synthetic_rejects_degenerate_shapes() {
    assert!(synthetic_dataset(Generator::Linear, 0, 2, 0.1, 0).is_err());
    assert!(synthetic_dataset(Generator::Linear, 5, 0, 0.1, 0).is_err());
    assert!(synthetic_dataset(Generator::Linear, 5, 2, -1.0, 0).is_err());
}

#[test]
fn standardizer_uses_only_the_given_rows() {
    let x = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![100.0, -7.0]];
    let s = Standardizer::fit(&x, &[0, 1]).unwrap();
    assert_eq!(s.mean, vec![2.0, 5.0]);
    assert_eq!(s.scale, vec![1.0, 1.0]);
    assert_eq!(s.apply(&x[0]), vec![-1.0, 0.0]);
    assert_eq!(s.apply(&x[2]), vec![98.0, -12.0]);
}
