//! Acceptance suite: one test per criterion, each printing its measured
//! numbers. Criterion 11 (byte-identical CLI runs) lives in the CLI crate's
//! acceptance target since it drives the binary.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use driftwatt::dataset::{
    generate_synthetic_stream, BatchStream, DriftEvent, FeatureMatrix, LabeledBatch,
    SyntheticDriftSpec,
};
use driftwatt::detect::{
    detect_drift, detect_drift_with_importances, ks_pvalue, ks_statistic,
    select_important_features, DetectorConfig, DriftMethod,
};
use driftwatt::energy::{detector_overhead_pct, extrapolate_annual, Span, SpanUnit};
use driftwatt::model::{roc_auc, train_forest, ForestHyperparams, MaxFeaturesSpec, SearchSpace};
use driftwatt::report::wilcoxon_signed_rank;
use driftwatt::sim::{
    run_lifecycle, run_lifecycle_with_sensor, LifecycleReport, SimulationConfig, StubSensor,
};

// ------------------------------------------------------------------ helpers

fn round_two_sig_figs(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let magnitude = x.abs().log10().floor();
    let scale = 10f64.powf(magnitude - 1.0);
    (x / scale).round() * scale
}

fn gaussian_window(rows: usize, cols: usize, shift: &[(usize, f64)], seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let names = (0..cols).map(|i| format!("f{i}")).collect();
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        for c in 0..cols {
            let z: f64 = StandardNormal.sample(&mut rng);
            let delta: f64 = shift.iter().filter(|(f, _)| *f == c).map(|(_, s)| *s).sum();
            values.push(z + delta);
        }
    }
    FeatureMatrix::new(values, rows, cols, names).unwrap()
}

fn train_detect_total(report: &LifecycleReport) -> f64 {
    report.ledger.summary.train_total_j + report.ledger.summary.detect_total_j
}

/// The stream pinned by criteria 6 and 7: 20 features, 24 periods,
/// 1000 samples/period, 3-sigma drifts at periods 8 and 16 on
/// label-relevant features.
fn rq1_stream() -> &'static BatchStream {
    static STREAM: OnceLock<BatchStream> = OnceLock::new();
    STREAM.get_or_init(|| {
        generate_synthetic_stream(&SyntheticDriftSpec {
            n_features: 20,
            n_periods: 24,
            samples_per_period: 1000,
            failure_rate: 0.1,
            drift_events: vec![
                DriftEvent {
                    period: 8,
                    feature: 0,
                    shift: 3.0,
                },
                DriftEvent {
                    period: 16,
                    feature: 1,
                    shift: 3.0,
                },
            ],
            label_signal_features: vec![0, 1, 2],
            seed: 2024,
        })
        .unwrap()
    })
}

/// Tiny forests: the virtual meter prices rows x candidates, not trees, so
/// this cuts runtime without touching any measured quantity.
fn energy_probe_search() -> SearchSpace {
    SearchSpace {
        n_trees: vec![2],
        max_depth: vec![Some(2)],
        min_samples_leaf: vec![10],
        max_features: vec![MaxFeaturesSpec::Sqrt],
        bootstrap_fraction: 1.0,
        n_candidates: 10,
        holdout_fraction: 0.2,
    }
}

fn accuracy_probe_search() -> SearchSpace {
    SearchSpace {
        n_trees: vec![8],
        max_depth: vec![Some(6)],
        min_samples_leaf: vec![5],
        max_features: vec![MaxFeaturesSpec::Sqrt],
        bootstrap_fraction: 1.0,
        n_candidates: 10,
        holdout_fraction: 0.2,
    }
}

struct Rq1aRuns {
    fh: LifecycleReport,
    sw: LifecycleReport,
}

fn rq1a_runs() -> &'static Rq1aRuns {
    static RUNS: OnceLock<Rq1aRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let stream = rq1_stream();
        let mut fh_cfg = SimulationConfig::named("periodic_fh", 12).unwrap();
        fh_cfg.search = energy_probe_search();
        fh_cfg.seed = 7;
        let mut sw_cfg = SimulationConfig::named("periodic_sw", 12).unwrap();
        sw_cfg.search = energy_probe_search();
        sw_cfg.seed = 7;
        Rq1aRuns {
            fh: run_lifecycle(stream, &fh_cfg).unwrap(),
            sw: run_lifecycle(stream, &sw_cfg).unwrap(),
        }
    })
}

struct Rq1bRuns {
    informed: LifecycleReport,
    periodic: LifecycleReport,
    static_run: LifecycleReport,
}

/// Criterion 7 configures a 3-period window and a 1000-row detector cap:
/// with the default 12-period window a persistent step drift keeps the
/// window mixed past the last evaluation period and the KS detector
/// (correctly) refires every period, so the short window is what makes a
/// "fires only around the drift" regime reachable at all.
fn rq1b_runs() -> &'static Rq1bRuns {
    static RUNS: OnceLock<Rq1bRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let stream = rq1_stream();
        let mut informed = SimulationConfig::named("ks_all_sw", 3)
            .unwrap()
            .with_detector_settings(0.05, 0.95, 1000);
        informed.search = accuracy_probe_search();
        informed.seed = 7;
        let mut periodic = SimulationConfig::named("periodic_sw", 3).unwrap();
        periodic.search = accuracy_probe_search();
        periodic.seed = 7;
        let mut static_cfg = SimulationConfig::named("static", 3).unwrap();
        static_cfg.search = accuracy_probe_search();
        static_cfg.seed = 7;
        Rq1bRuns {
            informed: run_lifecycle(stream, &informed).unwrap(),
            periodic: run_lifecycle(stream, &periodic).unwrap(),
            static_run: run_lifecycle(stream, &static_cfg).unwrap(),
        }
    })
}

// ---------------------------------------------------------------- criteria

#[test]
fn criterion_01_annual_extrapolation_reproduces_published_estimates() {
    let months = |v| Span {
        value: v,
        unit: SpanUnit::Months,
    };
    let weeks = |v| Span {
        value: v,
        unit: SpanUnit::Weeks,
    };
    let cases: [(f64, Span, f64); 6] = [
        (6.3e3, months(6.0), 12.6e3),
        (5.9e3, months(6.0), 11.8e3),
        (191.3e3, months(1.0), 2.3e6),
        (106.9e3, months(1.0), 1.3e6),
        (427.0e3, weeks(2.0), 11.1e6),
        (393.7e3, weeks(2.0), 10.2e6),
    ];
    for (observed, span, displayed) in cases {
        let annual = extrapolate_annual(observed, span).unwrap();
        assert_eq!(
            round_two_sig_figs(annual),
            round_two_sig_figs(displayed),
            "observed {observed} J over {span:?}: annual {annual} J vs displayed {displayed} J"
        );
        println!("PASS criterion 1 case: {observed} J/{span:?} -> {annual} J/yr (~{displayed})");
    }
}

#[test]
fn criterion_02_roc_auc_matches_pairwise_oracle_on_1000_instances() {
    let oracle = |scores: &[f64], labels: &[u8]| -> f64 {
        let mut num = 0.0;
        let mut pairs = 0u64;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] != 1 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] != 0 {
                    continue;
                }
                pairs += 1;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
        num / pairs as f64
    };
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for case in 0..1000 {
        let n = rng.random_range(2..=50);
        // coarse grid of exactly representable values forces ties
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..=10) as f64 / 8.0)
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        labels[0] = 0;
        labels[n - 1] = 1;
        let ours = roc_auc(&scores, &labels).unwrap();
        assert_eq!(ours, oracle(&scores, &labels), "case {case}");
    }
    println!("PASS criterion 2: 1000/1000 instances match the pairwise oracle exactly");
}

#[test]
fn criterion_03_ks_statistic_and_pvalue_match_their_oracles() {
    let scan_oracle = |a: &[f64], b: &[f64]| -> f64 {
        let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        pooled.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pooled.dedup();
        pooled
            .iter()
            .map(|&x| {
                let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
                let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
                (fa - fb).abs()
            })
            .fold(0.0, f64::max)
    };
    let series_oracle = |d: f64, m: usize, n: usize| -> f64 {
        let lambda = d * ((m as f64 * n as f64) / (m + n) as f64).sqrt();
        if lambda < 1e-9 {
            return 1.0;
        }
        // smallest terms first
        let mut terms = Vec::new();
        for k in 1..=20_000u64 {
            let t = 2.0 * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            terms.push(if k % 2 == 1 { t } else { -t });
            if t < 1e-18 {
                break;
            }
        }
        terms.iter().rev().sum::<f64>().clamp(0.0, 1.0)
    };

    let mut rng = ChaCha12Rng::seed_from_u64(303);
    for case in 0..1000 {
        let m = rng.random_range(1..=200);
        let n = rng.random_range(1..=200);
        let a: Vec<f64> = (0..m)
            .map(|_| rng.random_range(-12..12) as f64 / 4.0)
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-12..12) as f64 / 4.0)
            .collect();
        let d = ks_statistic(&a, &b).unwrap();
        assert_eq!(d, scan_oracle(&a, &b), "case {case}: statistic");
        let p = ks_pvalue(d, m, n).unwrap();
        assert!(
            (p - series_oracle(d, m, n)).abs() < 1e-9,
            "case {case}: p {p} vs oracle"
        );
    }
    println!("PASS criterion 3: 1000/1000 sample pairs match the CDF-scan and series oracles");
}

#[test]
fn criterion_04_wilcoxon_matches_exhaustive_enumeration_on_500_vectors() {
    let oracle = |diffs: &[f64]| -> (f64, f64) {
        let n = diffs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
        let mut ranks = vec![0.0f64; n];
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
                j += 1;
            }
            let avg = (i + 1 + j) as f64 / 2.0;
            for &idx in &order[i..j] {
                ranks[idx] = avg;
            }
            i = j;
        }
        let mean: f64 = ranks.iter().sum::<f64>() / 2.0;
        let w_obs: f64 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| ranks[i]).sum();
        let dev = (w_obs - mean).abs();
        let mut count = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ranks[i])
                .sum();
            if (w - mean).abs() >= dev {
                count += 1;
            }
        }
        (w_obs, count as f64 / (1u64 << n) as f64)
    };

    let mut rng = ChaCha12Rng::seed_from_u64(404);
    for case in 0..500 {
        let n = rng.random_range(5..=12);
        let diffs: Vec<f64> = (0..n)
            .map(|_| loop {
                let v = rng.random_range(-7i32..=7);
                if v != 0 {
                    break v as f64;
                }
            })
            .collect();
        let zeros = vec![0.0; n];
        let ours = wilcoxon_signed_rank(&diffs, &zeros).unwrap();
        let (w_expected, p_expected) = oracle(&diffs);
        assert_eq!(ours.w_statistic, w_expected, "case {case}: W");
        assert_eq!(ours.p_value, p_expected, "case {case}: p");
    }
    println!("PASS criterion 4: 500/500 difference vectors match 2^n enumeration exactly");
}

#[test]
fn criterion_05_stub_detector_equivalences_are_bit_exact() {
    let stream = generate_synthetic_stream(&SyntheticDriftSpec {
        n_features: 4,
        n_periods: 10,
        samples_per_period: 200,
        failure_rate: 0.25,
        drift_events: vec![DriftEvent {
            period: 7,
            feature: 1,
            shift: 2.0,
        }],
        label_signal_features: vec![0, 1],
        seed: 55,
    })
    .unwrap();
    let mk = |name: &str| {
        let mut cfg = SimulationConfig::named(name, 5).unwrap();
        cfg.search = energy_probe_search();
        cfg.seed = 11;
        cfg
    };

    let static_run = run_lifecycle(&stream, &mk("static")).unwrap();
    let never =
        run_lifecycle_with_sensor(&stream, &mk("ks_all_sw"), Some(&StubSensor::never_fire()))
            .unwrap();
    assert_eq!(never.retrain_count, 0);
    assert_eq!(
        never.ledger.summary.train_total_j, static_run.ledger.summary.train_total_j,
        "never-fire train energy must equal static's bit-exactly"
    );

    let periodic = run_lifecycle(&stream, &mk("periodic_sw")).unwrap();
    let always =
        run_lifecycle_with_sensor(&stream, &mk("ks_all_sw"), Some(&StubSensor::always_fire()))
            .unwrap();
    assert_eq!(always.retrain_count, periodic.retrain_count);
    println!(
        "PASS criterion 5: never-fire train {} J == static {} J; always-fire retrains {} == periodic {}",
        never.ledger.summary.train_total_j,
        static_run.ledger.summary.train_total_j,
        always.retrain_count,
        periodic.retrain_count
    );
}

#[test]
fn criterion_06_full_history_exceeds_sliding_window_as_row_counts_predict() {
    let runs = rq1a_runs();
    let fh_total = runs.fh.ledger.summary.train_total_j;
    let sw_total = runs.sw.ledger.summary.train_total_j;
    assert!(
        fh_total >= 1.30 * sw_total,
        "FH {fh_total} J must exceed SW {sw_total} J by at least 30%"
    );

    // the gap grows monotonically once retraining starts (window is at
    // capacity from the first evaluation period here)
    let cum = |r: &LifecycleReport| -> Vec<f64> {
        r.ledger
            .periods
            .iter()
            .map(|p| p.cumulative_train_j)
            .collect()
    };
    let gaps: Vec<f64> = cum(&runs.fh)
        .iter()
        .zip(cum(&runs.sw))
        .map(|(a, b)| a - b)
        .collect();
    for (i, w) in gaps.windows(2).enumerate() {
        assert!(w[1] >= w[0], "gap shrank at record {i}: {gaps:?}");
    }
    let retrain_periods = runs.fh.records.iter().filter(|r| r.retrained).count();
    assert!(gaps.last().unwrap() > &0.0 && retrain_periods == 11);

    // closed-form prediction: train joules are c_t * rows * (candidates + 1),
    // with rows fixed by the stream's label counts and the 1:10 rebalance
    let sizes: Vec<(usize, usize)> = rq1_stream()
        .batches()
        .iter()
        .map(|b| (b.positives(), b.negatives()))
        .collect();
    let downsampled = |range: std::ops::Range<usize>| -> f64 {
        let pos: usize = sizes[range.clone()].iter().map(|s| s.0).sum();
        let neg: usize = sizes[range].iter().map(|s| s.1).sum();
        (pos + neg.min(10 * pos)) as f64
    };
    let events: Vec<std::ops::Range<usize>> = std::iter::once(0..12)
        .chain((13..=23).map(|p| 0..p))
        .collect();
    let predicted_fh: f64 = events
        .iter()
        .map(|r| downsampled(r.clone()) * 11.0 * 1e-3)
        .sum();
    let events_sw: Vec<std::ops::Range<usize>> = std::iter::once(0..12)
        .chain((13..=23).map(|p| p - 12..p))
        .collect();
    let predicted_sw: f64 = events_sw
        .iter()
        .map(|r| downsampled(r.clone()) * 11.0 * 1e-3)
        .sum();
    assert!(
        (fh_total - predicted_fh).abs() <= 0.05 * predicted_fh,
        "FH {fh_total} J vs predicted {predicted_fh} J"
    );
    assert!(
        (sw_total - predicted_sw).abs() <= 0.05 * predicted_sw,
        "SW {sw_total} J vs predicted {predicted_sw} J"
    );
    println!(
        "PASS criterion 6: FH {fh_total:.1} J vs SW {sw_total:.1} J (+{:.1}%), predicted {predicted_fh:.1}/{predicted_sw:.1} J",
        100.0 * (fh_total / sw_total - 1.0)
    );
}

#[test]
fn criterion_07_informed_retrains_rarely_and_saves_energy_without_losing_accuracy() {
    let runs = rq1b_runs();
    let informed_retrains = runs.informed.retrain_count;
    let periodic_retrains = runs.periodic.retrain_count;
    assert!(
        informed_retrains <= 4,
        "informed retrained {informed_retrains} times"
    );
    assert_eq!(periodic_retrains, 11);

    let informed_energy = train_detect_total(&runs.informed);
    let periodic_energy = train_detect_total(&runs.periodic);
    assert!(
        informed_energy <= 0.5 * periodic_energy,
        "informed {informed_energy} J vs periodic {periodic_energy} J"
    );

    let informed_auc = runs.informed.mean_roc_auc.unwrap();
    let static_auc = runs.static_run.mean_roc_auc.unwrap();
    assert!(
        informed_auc >= static_auc,
        "informed AUC {informed_auc} vs static {static_auc}"
    );
    println!(
        "PASS criterion 7: informed retrains {informed_retrains}/12 vs periodic 11, energy {informed_energy:.1} J vs {periodic_energy:.1} J (-{:.0}%), AUC {informed_auc:.3} >= static {static_auc:.3}",
        100.0 * (1.0 - informed_energy / periodic_energy)
    );
}

#[test]
fn criterion_08_detector_sensitivity_and_specificity() {
    // (a) false positives on identically distributed windows
    let config = DetectorConfig::new(DriftMethod::KsAll);
    let mut false_positives = 0;
    for trial in 0..200u64 {
        let train = gaussian_window(1000, 10, &[], 9_000 + 2 * trial);
        let incoming = gaussian_window(1000, 10, &[], 9_001 + 2 * trial);
        if detect_drift(&config, &train, &incoming, None)
            .unwrap()
            .drift
        {
            false_positives += 1;
        }
    }
    let fp_rate = false_positives as f64 / 200.0;
    assert!(fp_rate <= 0.08, "false-positive rate {fp_rate}");

    // one deployed model provides the KS-FI filter for (b) and (c):
    // labels depend on features 0 and 1 only
    let model = {
        let features = gaussian_window(1000, 10, &[], 31_337);
        let mut rng = ChaCha12Rng::seed_from_u64(31_338);
        let labels: Vec<u8> = (0..features.rows())
            .map(|r| {
                let logit = 2.0 * (features.get(r, 0) + features.get(r, 1)) - 0.5;
                u8::from(rng.random_bool(1.0 / (1.0 + (-logit).exp())))
            })
            .collect();
        let batch = LabeledBatch::new(0, features, labels).unwrap();
        let hp = ForestHyperparams {
            n_trees: 40,
            max_depth: Some(10),
            min_samples_leaf: 2,
            max_features: 3,
            bootstrap_fraction: 1.0,
        };
        train_forest(&batch, &hp, 31_339).unwrap()
    };
    assert_eq!(
        select_important_features(model.importances()).unwrap(),
        vec![0, 1],
        "the FI filter must select exactly the label-relevant features"
    );

    let pca = DetectorConfig::new(DriftMethod::KsPca);
    let fi = DetectorConfig::new(DriftMethod::KsFi);
    let mut flagged = [[0u32; 3]; 2]; // [scenario][detector: all, pca, fi]
    for trial in 0..100u64 {
        let train = gaussian_window(1000, 10, &[], 40_000 + 4 * trial);
        // (b) 3-sigma shift on label-relevant feature 0
        let relevant = gaussian_window(1000, 10, &[(0, 3.0)], 40_001 + 4 * trial);
        // (c) 5-sigma shift confined to label-irrelevant feature 5
        let irrelevant = gaussian_window(1000, 10, &[(5, 5.0)], 40_002 + 4 * trial);
        for (s, incoming) in [(0, &relevant), (1, &irrelevant)] {
            flagged[s][0] +=
                u32::from(detect_drift(&config, &train, incoming, None).unwrap().drift);
            flagged[s][1] += u32::from(detect_drift(&pca, &train, incoming, None).unwrap().drift);
            flagged[s][2] += u32::from(
                detect_drift_with_importances(&fi, &train, incoming, Some(model.importances()))
                    .unwrap()
                    .drift,
            );
        }
    }
    // (b): every detector sees a relevant 3-sigma shift
    assert!(
        flagged[0].iter().all(|&f| f >= 95),
        "relevant-shift flags {:?}",
        flagged[0]
    );
    // (c): KS-ALL sees the noise shift, KS-FI filters it out
    assert!(
        flagged[1][0] >= 95,
        "KS-ALL noise-shift flags {}",
        flagged[1][0]
    );
    assert!(
        flagged[1][2] <= 20,
        "KS-FI noise-shift flags {}",
        flagged[1][2]
    );
    println!(
        "PASS criterion 8: FP rate {fp_rate:.3}; 3s relevant shift flags (all/pca/fi) {:?}/100; 5s noise shift all {} fi {}",
        flagged[0], flagged[1][0], flagged[1][2]
    );
}

#[test]
fn criterion_09_inference_energy_is_identical_across_all_nine_configurations() {
    let stream = generate_synthetic_stream(&SyntheticDriftSpec {
        n_features: 8,
        n_periods: 8,
        samples_per_period: 300,
        failure_rate: 0.25,
        drift_events: vec![DriftEvent {
            period: 5,
            feature: 0,
            shift: 2.5,
        }],
        label_signal_features: vec![0, 1],
        seed: 808,
    })
    .unwrap();
    let names = [
        "static",
        "periodic_sw",
        "periodic_fh",
        "ks_all_sw",
        "ks_all_fh",
        "ks_pca_sw",
        "ks_pca_fh",
        "ks_fi_sw",
        "ks_fi_fh",
    ];
    let mut baseline: Option<Vec<f64>> = None;
    for name in names {
        let mut cfg = SimulationConfig::named(name, 4).unwrap();
        cfg.search = energy_probe_search();
        cfg.seed = 21;
        let report = run_lifecycle(&stream, &cfg).unwrap();
        let infer: Vec<f64> = report.records.iter().map(|r| r.infer_j).collect();
        match &baseline {
            None => baseline = Some(infer),
            Some(expected) => assert_eq!(&infer, expected, "config {name}"),
        }
    }
    println!(
        "PASS criterion 9: per-period inference joules bit-identical across 9 configurations: {:?}",
        baseline.unwrap()
    );
}

#[test]
fn criterion_10_detector_overhead_formula_and_low_overhead_in_informed_run() {
    assert_eq!(detector_overhead_pct(1.0, 99.0).unwrap(), 1.0);
    assert_eq!(detector_overhead_pct(2.0, 48.0).unwrap(), 4.0);
    assert_eq!(detector_overhead_pct(0.0, 123.0).unwrap(), 0.0);

    let runs = rq1b_runs();
    let detect = runs.informed.ledger.summary.detect_total_j;
    let train = runs.informed.ledger.summary.train_total_j;
    let overhead = detector_overhead_pct(detect, train).unwrap();
    assert!(overhead < 10.0, "informed-run overhead {overhead}%");
    println!(
        "PASS criterion 10: formula exact; informed-run detector overhead {overhead:.2}% < 10%"
    );
}
