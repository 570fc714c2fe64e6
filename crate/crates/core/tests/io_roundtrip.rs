mod common;

use std::fs;
use std::path::Path;

use benchfold::io::{
    format_f64, parse_config, parse_datasets, parse_results, rankings_csv, write_datasets, write_outputs,
    write_results, Artifacts, RANKINGS_FILE,
};
use benchfold::model::{validate_tensor, MeasureSpec};
use benchfold::multiverse::{run_multiverse, RankingTable};

use common::random_tensor;

#[test]
fn tensor_survives_write_and_parse() {
    let tensor = random_tensor(7, 4, 6, 0.2, 3);
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results.csv");
    let datasets = dir.path().join("datasets.csv");
    write_results(&results, &tensor).unwrap();
    write_datasets(&datasets, tensor.datasets()).unwrap();

    let metas = parse_datasets(&datasets).unwrap();
    let back = parse_results(&results, &metas, &[MeasureSpec::ibrier(), MeasureSpec::cindex()]).unwrap();
    assert_eq!(back, tensor);
    assert!(validate_tensor(&back).is_empty());
}

#[test]
fn rewriting_parsed_results_is_byte_identical() {
    let tensor = random_tensor(5, 3, 4, 0.3, 8);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_results(&a, &tensor).unwrap();
    let back = parse_results(&a, tensor.datasets(), tensor.measures()).unwrap();
    write_results(&b, &back).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn empty_table_writes_header_only() {
    let table = RankingTable::empty(vec!["x".into(), "y".into()]);
    let bytes = rankings_csv(&table).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), "datasets,measure,imputation,aggregation,x,y\n");
}

#[test]
fn shipped_config_spans_the_full_grid() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../paper.config");
    let config = parse_config(&path).unwrap();
    assert_eq!(config.multiverse.grid_size(), 288);
    assert_eq!(config.unfolding.dim, 2);
    assert_eq!(config.sampling.permutations, 50);
}

#[test]
fn outputs_and_manifest_are_reproducible() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../paper.config");
    let config = parse_config(&path).unwrap();
    let tensor = random_tensor(18, 5, 5, 0.1, 4);
    let table = run_multiverse(&tensor, &config.multiverse).unwrap();
    let artifacts = Artifacts {
        table: Some(&table),
        ..Default::default()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = write_outputs(d1.path(), &artifacts).unwrap();
    let m2 = write_outputs(d2.path(), &artifacts).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(m1.files.len(), 1);
    assert_eq!(
        fs::read(d1.path().join(RANKINGS_FILE)).unwrap(),
        fs::read(d2.path().join(RANKINGS_FILE)).unwrap()
    );
}

#[test]
fn float_format_examples() {
    assert_eq!(format_f64(2.5), "2.5000000000000000e0");
    assert_eq!(format_f64(0.1).parse::<f64>().unwrap(), 0.1);
}
