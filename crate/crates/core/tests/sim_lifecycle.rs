//! Lifecycle and experiment-matrix behavior on small synthetic streams.

use driftwatt::dataset::{generate_synthetic_stream, BatchStream, DriftEvent, SyntheticDriftSpec};
use driftwatt::model::{MaxFeaturesSpec, SearchSpace};
use driftwatt::sim::{
    run_experiment_matrix, run_lifecycle, run_lifecycle_with_sensor, LifecycleReport,
    SimulationConfig, StubSensor,
};

fn small_stream(periods: usize) -> BatchStream {
    generate_synthetic_stream(&SyntheticDriftSpec {
        n_features: 4,
        n_periods: periods,
        samples_per_period: 120,
        failure_rate: 0.25,
        drift_events: vec![DriftEvent {
            period: periods - 2,
            feature: 1,
            shift: 2.0,
        }],
        label_signal_features: vec![0, 1],
        seed: 77,
    })
    .unwrap()
}

fn small_search() -> SearchSpace {
    SearchSpace {
        n_trees: vec![8],
        max_depth: vec![Some(4)],
        min_samples_leaf: vec![2],
        max_features: vec![MaxFeaturesSpec::All],
        bootstrap_fraction: 1.0,
        n_candidates: 2,
        holdout_fraction: 0.25,
    }
}

fn config(name: &str, window: usize, seed: u64) -> SimulationConfig {
    let mut cfg = SimulationConfig::named(name, window).unwrap();
    cfg.search = small_search();
    cfg.seed = seed;
    cfg
}

#[test]
fn static_trains_once_and_never_retrains() {
    let stream = small_stream(8);
    let report = run_lifecycle(&stream, &config("static", 4, 1)).unwrap();
    assert_eq!(report.retrain_count, 0);
    assert_eq!(report.records.len(), 4);
    assert!(report.records.iter().all(|r| !r.retrained));
    // exactly one period carries training energy: the first evaluation period
    let train_periods: Vec<usize> = report
        .ledger
        .periods
        .iter()
        .filter(|p| p.train_j > 0.0)
        .map(|p| p.period)
        .collect();
    assert_eq!(train_periods, vec![4]);
    assert_eq!(report.ledger.summary.detect_total_j, 0.0);
}

#[test]
fn periodic_retrains_before_every_period_after_the_first() {
    let stream = small_stream(8);
    let report = run_lifecycle(&stream, &config("periodic_sw", 4, 1)).unwrap();
    assert_eq!(report.retrain_count, 3);
    let retrained: Vec<bool> = report.records.iter().map(|r| r.retrained).collect();
    assert_eq!(retrained, vec![false, true, true, true]);
}

#[test]
fn never_firing_informed_matches_static_train_energy_exactly() {
    let stream = small_stream(8);
    let static_report = run_lifecycle(&stream, &config("static", 4, 9)).unwrap();
    let informed = config("ks_all_sw", 4, 9);
    let report =
        run_lifecycle_with_sensor(&stream, &informed, Some(&StubSensor::never_fire())).unwrap();
    assert_eq!(report.retrain_count, 0);
    assert_eq!(
        report.ledger.summary.train_total_j,
        static_report.ledger.summary.train_total_j
    );
}

#[test]
fn always_firing_informed_matches_periodic_retrain_count() {
    let stream = small_stream(8);
    let periodic = run_lifecycle(&stream, &config("periodic_sw", 4, 9)).unwrap();
    let informed = config("ks_all_sw", 4, 9);
    let report =
        run_lifecycle_with_sensor(&stream, &informed, Some(&StubSensor::always_fire())).unwrap();
    assert_eq!(report.retrain_count, periodic.retrain_count);
    assert_eq!(
        report
            .records
            .iter()
            .filter(|r| r.drift_detected == Some(true))
            .count(),
        report.records.len()
    );
}

#[test]
fn lifecycle_is_deterministic_under_the_virtual_meter() {
    let stream = small_stream(8);
    let cfg = config("ks_all_sw", 4, 5);
    let a = run_lifecycle(&stream, &cfg).unwrap();
    let b = run_lifecycle(&stream, &cfg).unwrap();
    assert_eq!(
        serde_json::to_vec(&a).unwrap(),
        serde_json::to_vec(&b).unwrap()
    );
}

#[test]
fn inference_energy_per_period_is_identical_across_configurations() {
    let stream = small_stream(8);
    let reports: Vec<LifecycleReport> = ["static", "periodic_sw", "periodic_fh", "ks_all_sw"]
        .iter()
        .map(|name| run_lifecycle(&stream, &config(name, 4, 3)).unwrap())
        .collect();
    let baseline: Vec<f64> = reports[0].records.iter().map(|r| r.infer_j).collect();
    for report in &reports[1..] {
        let infer: Vec<f64> = report.records.iter().map(|r| r.infer_j).collect();
        assert_eq!(infer, baseline, "config {}", report.config.name);
    }
}

#[test]
fn full_history_trains_on_at_least_as_many_rows_as_sliding_window() {
    let stream = small_stream(10);
    let fh = run_lifecycle(&stream, &config("periodic_fh", 5, 2)).unwrap();
    let sw = run_lifecycle(&stream, &config("periodic_sw", 5, 2)).unwrap();
    let mut strict = false;
    for (a, b) in fh.records.iter().zip(&sw.records) {
        assert!(a.train_rows >= b.train_rows);
        strict |= a.train_rows > b.train_rows;
    }
    assert!(strict, "full history should eventually exceed the window");
}

#[test]
fn no_model_trains_on_its_own_evaluation_period() {
    // with downsampling off, train_rows equals the raw window row count, so
    // the audit is exact: rows must match the batches up to period p-1
    let stream = small_stream(8);
    let mut cfg = config("periodic_fh", 4, 2);
    cfg.downsample_ratio = None;
    let report = run_lifecycle(&stream, &cfg).unwrap();
    let sizes: Vec<usize> = stream.batches().iter().map(|b| b.len()).collect();
    for (i, record) in report.records.iter().enumerate() {
        let trained_through = if record.retrained {
            record.period - 1
        } else {
            3 // initial fit saw periods 0..=3
        };
        assert!(trained_through < record.period);
        let expected: usize = sizes[..=trained_through].iter().sum();
        assert_eq!(record.train_rows, expected, "record {i}");
    }
}

#[test]
fn informed_retrain_count_equals_acted_on_verdicts() {
    let stream = small_stream(10);
    let cfg = config("ks_all_sw", 5, 4).with_detector_settings(0.05, 0.95, 5000);
    let report = run_lifecycle(&stream, &cfg).unwrap();
    let fired: usize = report
        .records
        .iter()
        .enumerate()
        .filter(|(i, r)| *i > 0 && r.drift_detected == Some(true))
        .count();
    assert_eq!(report.retrain_count, fired);
    for record in &report.records {
        assert!(record.drift_detected.is_some());
    }
}

#[test]
fn matrix_returns_reports_in_canonical_order() {
    let stream = small_stream(6);
    let configs = vec![config("static", 3, 0), config("periodic_sw", 3, 0)];
    let seeds = vec![10, 20, 30];
    let reports = run_experiment_matrix(&stream, &configs, &seeds, 99).unwrap();
    assert_eq!(reports.len(), 6);
    let keys: Vec<(String, u64)> = reports
        .iter()
        .map(|r| (r.config.name.clone(), r.config.seed))
        .collect();
    assert_eq!(
        keys,
        vec![
            ("static".into(), 10),
            ("static".into(), 20),
            ("static".into(), 30),
            ("periodic_sw".into(), 10),
            ("periodic_sw".into(), 20),
            ("periodic_sw".into(), 30),
        ]
    );
    // shuffled execution must not change results
    let again = run_experiment_matrix(&stream, &configs, &seeds, 12345).unwrap();
    assert_eq!(
        serde_json::to_vec(&reports).unwrap(),
        serde_json::to_vec(&again).unwrap()
    );
}

#[test]
fn full_grid_of_nine_configurations_and_thirty_seeds_yields_270_reports() {
    let stream = small_stream(6);
    let tiny_search = SearchSpace {
        n_trees: vec![3],
        max_depth: vec![Some(2)],
        min_samples_leaf: vec![4],
        max_features: vec![MaxFeaturesSpec::All],
        bootstrap_fraction: 1.0,
        n_candidates: 1,
        holdout_fraction: 0.25,
    };
    let configs: Vec<SimulationConfig> = driftwatt::policy::CONFIGURATION_NAMES
        .iter()
        .map(|name| {
            let mut cfg = SimulationConfig::named(name, 3).unwrap();
            cfg.search = tiny_search.clone();
            cfg
        })
        .collect();
    let seeds: Vec<u64> = (0..30).collect();
    let reports = run_experiment_matrix(&stream, &configs, &seeds, 4).unwrap();
    assert_eq!(reports.len(), 270);
    for (i, report) in reports.iter().enumerate() {
        assert_eq!(report.config.name, configs[i / 30].name);
        assert_eq!(report.config.seed, seeds[i % 30]);
    }
}

#[test]
fn matrix_rejects_duplicate_pairs() {
    let stream = small_stream(6);
    let configs = vec![config("static", 3, 0)];
    assert!(run_experiment_matrix(&stream, &configs, &[1, 1], 0).is_err());
}

#[test]
fn misnamed_configuration_is_rejected() {
    let mut cfg = config("periodic_sw", 3, 0);
    cfg.name = "periodic_fh".into();
    let stream = small_stream(6);
    assert!(run_lifecycle(&stream, &cfg).is_err());
}
