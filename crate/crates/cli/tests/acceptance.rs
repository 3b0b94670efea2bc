//! Acceptance criterion 11: end-to-end determinism. Running `simulate`
//! twice with identical data, config, seeds and the virtual meter must
//! produce byte-identical run files, and `report` over them byte-identical
//! CSVs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_driftwatt"))
}

const CONFIG: &str = r#"
[run]
configurations = ["static", "periodic_sw", "ks_all_sw", "ks_fi_fh"]
span_value = 2.0
span_unit = "weeks"

[search]
n_trees = [5]
max_depth = [3]
min_samples_leaf = [2]
max_features = ["sqrt", "all"]
n_candidates = 3
holdout_fraction = 0.25

[synthetic]
n_features = 5
n_periods = 8
samples_per_period = 200
failure_rate = 0.25
label_signal_features = [0, 1]
seed = 31
drift_events = [{ period = 6, feature = 0, shift = 2.5 }]
"#;

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn criterion_11_simulate_and_report_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let stream = dir.path().join("stream.csv");
    let status = bin()
        .args(["generate", "--spec"])
        .arg(&cfg)
        .arg("--out")
        .arg(&stream)
        .status()
        .unwrap();
    assert!(status.success());

    let simulate = |out: &Path| {
        let status = bin()
            .args(["simulate", "--data"])
            .arg(&stream)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--seeds", "3", "--meter", "virtual", "--shuffle-seed", "17"])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let runs_a = dir.path().join("runs_a");
    let runs_b = dir.path().join("runs_b");
    simulate(&runs_a);
    simulate(&runs_b);

    let a = dir_contents(&runs_a);
    let b = dir_contents(&runs_b);
    assert_eq!(a.len(), 12, "4 configurations x 3 seeds");
    assert_eq!(a, b, "run files must be byte-identical");

    let report = |out: &Path| {
        let status = bin()
            .args(["report", "--runs"])
            .arg(&runs_a)
            .arg("--out")
            .arg(out)
            .args([
                "--compare",
                "ks_all_sw,periodic_sw",
                "--compare",
                "ks_fi_fh,static",
                "--alpha",
                "0.05",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let tables_a = dir.path().join("tables_a");
    let tables_b = dir.path().join("tables_b");
    report(&tables_a);
    report(&tables_b);

    let ta = dir_contents(&tables_a);
    let tb = dir_contents(&tables_b);
    assert_eq!(
        ta.iter().map(|e| e.0.as_str()).collect::<Vec<_>>(),
        vec!["comparisons.csv", "figure_data.csv", "summary.csv"]
    );
    assert_eq!(ta, tb, "report tables must be byte-identical");
    println!(
        "PASS criterion 11: 12 run files and 3 report tables byte-identical across repeated runs"
    );
}
