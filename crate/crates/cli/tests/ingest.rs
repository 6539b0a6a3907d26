use std::fs;

use resmarg_cli::ingest::ingest_csv;
use resmarg_cli::CliError;

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn infers_domain_in_first_appearance_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(&dir, "d.csv", "letter,word\nb,z\na,x\nb,y\n");
    let r = ingest_csv(&csv, None).unwrap();
    assert_eq!(r.table.domain().sizes(), &[2, 3]);
    assert_eq!(r.table.len(), 3);
    assert_eq!(r.values["letter"], vec!["b", "a"]);
    assert_eq!(r.values["word"], vec!["z", "x", "y"]);
    assert_eq!(r.table.record(1), &[1, 1]);
}

#[test]
fn drops_rows_with_missing_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(&dir, "d.csv", "a,b\n0,x\n1,\n1,y\n0,y\n");
    let r = ingest_csv(&csv, None).unwrap();
    assert_eq!(r.table.len(), 3);
    assert_eq!(r.dropped_rows, 1);
}

#[test]
fn drops_constant_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(&dir, "d.csv", "a,const,b\n0,k,x\n1,k,y\n");
    let r = ingest_csv(&csv, None).unwrap();
    assert_eq!(r.table.domain().attrs(), &["a".to_string(), "b".to_string()]);
    assert_eq!(r.dropped_columns, vec!["const".to_string()]);
}

#[test]
fn validates_against_domain_file() {
    let dir = tempfile::tempdir().unwrap();
    let dom = write(&dir, "dom.json", r#"{"b": 3, "a": 2}"#);
    let csv = write(&dir, "d.csv", "a,b,extra\n0,2,q\n1,0,r\n");
    let r = ingest_csv(&csv, Some(&dom)).unwrap();
    assert_eq!(r.table.domain().attrs(), &["b".to_string(), "a".to_string()]);
    assert_eq!(r.table.record(0), &[2, 0]);

    let bad = write(&dir, "bad.csv", "a,b\n0,3\n");
    let err = ingest_csv(&bad, Some(&dom)).unwrap_err();
    assert!(matches!(err, CliError::Input(_)), "{err}");
}

#[test]
fn missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ingest_csv(&dir.path().join("nope.csv"), None).is_err());
}
