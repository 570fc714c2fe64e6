mod common;

use std::path::Path;

use benchfold::diagnostics::{default_option_distances, ideal_distance, scree, stress_per_point};
use benchfold::io::parse_config_str;
use benchfold::multiverse::{run_multiverse, Choice};
use benchfold::unfolding::{fit, UnfoldOptions};

use common::{planted_ranks, random_tensor};

const TWO_BY_FOUR: &str = r#"
[multiverse]
filters = ["all", "n_below"]
measures = ["ibrier", "cindex"]
imputations = ["threshold20", "mean_nonfailed"]
aggregations = ["mean", "mean_rank"]

[multiverse.defaults]
datasets = "all"
measure = "ibrier"
imputation = "threshold20"
aggregation = "mean"
"#;

fn quick() -> UnfoldOptions {
    UnfoldOptions {
        n_starts: 3,
        max_iter: 2000,
        ..Default::default()
    }
}

#[test]
fn two_options_per_choice() {
    let config = parse_config_str(TWO_BY_FOUR, "grid.config", Path::new(".")).unwrap();
    let tensor = random_tensor(10, 5, 4, 0.1, 2);
    let table = run_multiverse(&tensor, &config.multiverse).unwrap();
    assert_eq!(table.len(), 16);
    let solution = fit(&table.rank_rows(), &quick()).unwrap();
    let distances = default_option_distances(&solution, &table, &config.multiverse).unwrap();

    // each choice has its default in 8 of the 16 universes, one alternative each
    assert_eq!(distances.len(), 32);
    for choice in Choice::ALL {
        assert_eq!(distances.iter().filter(|d| d.choice == choice).count(), 8);
    }
    let default_key = config.multiverse.defaults.key();
    assert_eq!(distances.iter().filter(|d| d.context == default_key).count(), 4);
    assert!(distances.iter().all(|d| d.distance.is_finite() && d.distance >= 0.0));
}

#[test]
fn ideal_distance_is_a_metric_on_rows() {
    let solution = fit(&planted_ranks(12, 5, 4), &quick()).unwrap();
    for a in 0..12 {
        assert_eq!(ideal_distance(&solution, a, a), 0.0);
        for b in 0..12 {
            assert_eq!(ideal_distance(&solution, a, b), ideal_distance(&solution, b, a));
        }
    }
}

#[test]
fn spp_shares_sum_to_hundred() {
    let delta = planted_ranks(15, 6, 9);
    let solution = fit(&delta, &quick()).unwrap();
    let (rows, cols) = stress_per_point(&solution, &delta, None).unwrap();
    assert!((rows.iter().sum::<f64>() - 100.0).abs() < 0.1);
    assert!((cols.iter().sum::<f64>() - 100.0).abs() < 0.1);
}

#[test]
fn scree_on_planted_data_falls_to_two_dimensions() {
    let delta = planted_ranks(30, 10, 5);
    let (points, _) = scree(&delta, &quick(), &[1, 2, 3]).unwrap();
    assert_eq!(points.iter().map(|p| p.dim).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(points[0].stress_normalized > 1e-3);
    assert!(points[1].stress_normalized < 1e-9);
    assert!(points[2].stress_normalized < 1e-9);
}
