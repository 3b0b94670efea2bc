//! Cross-seed statistics over run artifacts and the CSV tables they feed.

mod wilcoxon;

pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_LIMIT};

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::energy::{detector_overhead_pct, extrapolate_annual};
use crate::error::{Error, Result};
use crate::policy::RetrainTrigger;
use crate::sim::LifecycleReport;

/// The reports produced by one experiment matrix, all over the same stream.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    reports: Vec<LifecycleReport>,
}

impl RunArtifact {
    /// Loads every `*.json` report in a directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut reports = Vec::with_capacity(paths.len());
        for path in paths {
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let report: LifecycleReport = serde_json::from_slice(&bytes).map_err(|e| {
                Error::Validation(format!("cannot parse report {}: {e}", path.display()))
            })?;
            reports.push(report);
        }
        Self::from_reports(reports)
    }

    pub fn from_reports(mut reports: Vec<LifecycleReport>) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::InsufficientData("no run reports found".into()));
        }
        let fingerprint = reports[0].stream_fingerprint.clone();
        if let Some(bad) = reports.iter().find(|r| r.stream_fingerprint != fingerprint) {
            return Err(Error::Validation(format!(
                "mixed stream fingerprints: run {} seed {} disagrees",
                bad.config.name, bad.config.seed
            )));
        }
        reports
            .sort_by(|a, b| (&a.config.name, a.config.seed).cmp(&(&b.config.name, b.config.seed)));
        Ok(Self { reports })
    }

    pub fn reports(&self) -> &[LifecycleReport] {
        &self.reports
    }

    fn by_config(&self) -> BTreeMap<&str, Vec<&LifecycleReport>> {
        let mut map: BTreeMap<&str, Vec<&LifecycleReport>> = BTreeMap::new();
        for report in &self.reports {
            map.entry(report.config.name.as_str())
                .or_default()
                .push(report);
        }
        map
    }
}

/// Median/IQR rollup of one configuration across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub config: String,
    pub runs: usize,
    pub median_train_detect_j: f64,
    pub iqr_train_detect_j: f64,
    pub median_infer_j: f64,
    pub iqr_infer_j: f64,
    pub median_mean_roc_auc: Option<f64>,
    pub iqr_mean_roc_auc: Option<f64>,
    pub median_retrain_count: f64,
    /// Present only for detector-informed configurations.
    pub overhead_pct: Option<f64>,
    /// Present when the runs declare an observation span.
    pub annual_train_detect_j: Option<f64>,
}

/// Per-configuration medians, IQRs, detector overhead and the one-year
/// estimate, sorted by configuration name.
pub fn summarize_runs(runs: &RunArtifact) -> Result<Vec<ConfigSummary>> {
    let mut summaries = Vec::new();
    for (config, reports) in runs.by_config() {
        let train_detect: Vec<f64> = reports
            .iter()
            .map(|r| r.ledger.summary.train_total_j + r.ledger.summary.detect_total_j)
            .collect();
        let infer: Vec<f64> = reports
            .iter()
            .map(|r| r.ledger.summary.infer_total_j)
            .collect();
        let aucs: Vec<f64> = reports.iter().filter_map(|r| r.mean_roc_auc).collect();
        let retrains: Vec<f64> = reports.iter().map(|r| r.retrain_count as f64).collect();

        let informed = matches!(reports[0].config.trigger, RetrainTrigger::Informed { .. });
        let overhead_pct = if informed {
            let detect: Vec<f64> = reports
                .iter()
                .map(|r| r.ledger.summary.detect_total_j)
                .collect();
            let train: Vec<f64> = reports
                .iter()
                .map(|r| r.ledger.summary.train_total_j)
                .collect();
            Some(detector_overhead_pct(median(&detect), median(&train))?)
        } else {
            None
        };
        let annual_train_detect_j = reports[0]
            .config
            .span
            .map(|span| extrapolate_annual(median(&train_detect), span))
            .transpose()?;

        summaries.push(ConfigSummary {
            config: config.to_string(),
            runs: reports.len(),
            median_train_detect_j: median(&train_detect),
            iqr_train_detect_j: iqr(&train_detect),
            median_infer_j: median(&infer),
            iqr_infer_j: iqr(&infer),
            median_mean_roc_auc: (!aucs.is_empty()).then(|| median(&aucs)),
            iqr_mean_roc_auc: (!aucs.is_empty()).then(|| iqr(&aucs)),
            median_retrain_count: median(&retrains),
            overhead_pct,
            annual_train_detect_j,
        });
    }
    Ok(summaries)
}

/// Metrics two configurations are compared on.
pub const COMPARISON_METRICS: [&str; 3] = ["train_detect_j", "infer_j", "mean_roc_auc"];

/// One paired comparison row. `p_value` is absent when the test is
/// undefined on the pairs (fewer than five nonzero differences, e.g. for
/// energy metrics of bit-identical virtual-meter runs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub config_a: String,
    pub config_b: String,
    pub metric: String,
    pub n_pairs: usize,
    pub w_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub median_diff: f64,
    pub significant: Option<bool>,
}

/// Pairs configurations `a` and `b` by seed and runs the Wilcoxon test on
/// each comparison metric.
pub fn compare_configs(
    runs: &RunArtifact,
    a: &str,
    b: &str,
    alpha: f64,
) -> Result<Vec<Comparison>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Configuration(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let grouped = runs.by_config();
    let reports_a = grouped
        .get(a)
        .ok_or_else(|| Error::Validation(format!("no runs for configuration `{a}`")))?;
    let reports_b = grouped
        .get(b)
        .ok_or_else(|| Error::Validation(format!("no runs for configuration `{b}`")))?;
    let seeds_a: Vec<u64> = reports_a.iter().map(|r| r.config.seed).collect();
    let seeds_b: Vec<u64> = reports_b.iter().map(|r| r.config.seed).collect();
    if seeds_a != seeds_b {
        return Err(Error::Validation(format!(
            "configurations `{a}` and `{b}` were run on different seed sets"
        )));
    }

    let mut rows = Vec::with_capacity(COMPARISON_METRICS.len());
    for metric in COMPARISON_METRICS {
        let extract = |r: &LifecycleReport| -> Option<f64> {
            match metric {
                "train_detect_j" => {
                    Some(r.ledger.summary.train_total_j + r.ledger.summary.detect_total_j)
                }
                "infer_j" => Some(r.ledger.summary.infer_total_j),
                _ => r.mean_roc_auc,
            }
        };
        let pairs: Vec<(f64, f64)> = reports_a
            .iter()
            .zip(reports_b.iter())
            .filter_map(|(ra, rb)| Some((extract(ra)?, extract(rb)?)))
            .collect();
        let va: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let vb: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let outcome = match wilcoxon_signed_rank(&va, &vb) {
            Ok(r) => Some(r),
            Err(Error::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        };
        let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).collect();
        rows.push(Comparison {
            config_a: a.to_string(),
            config_b: b.to_string(),
            metric: metric.to_string(),
            n_pairs: pairs.len(),
            w_statistic: outcome.map(|o| o.w_statistic),
            p_value: outcome.map(|o| o.p_value),
            median_diff: if diffs.is_empty() {
                0.0
            } else {
                median(&diffs)
            },
            significant: outcome.map(|o| o.p_value < alpha),
        });
    }
    Ok(rows)
}

/// Writes `summary.csv`, `comparisons.csv` and `figure_data.csv` (the
/// per-period cumulative series behind energy/accuracy trajectory plots).
pub fn emit_tables(
    runs: &RunArtifact,
    summaries: &[ConfigSummary],
    comparisons: &[Comparison],
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();

    let summary_path = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path).map_err(|e| table_error(&summary_path, e))?;
    w.write_record([
        "config",
        "runs",
        "median_train_detect_j",
        "iqr_train_detect_j",
        "median_infer_j",
        "iqr_infer_j",
        "median_mean_roc_auc",
        "iqr_mean_roc_auc",
        "median_retrain_count",
        "overhead_pct",
        "annual_train_detect_j",
    ])
    .map_err(|e| table_error(&summary_path, e))?;
    for s in summaries {
        w.write_record([
            s.config.clone(),
            s.runs.to_string(),
            s.median_train_detect_j.to_string(),
            s.iqr_train_detect_j.to_string(),
            s.median_infer_j.to_string(),
            s.iqr_infer_j.to_string(),
            fmt_opt(s.median_mean_roc_auc),
            fmt_opt(s.iqr_mean_roc_auc),
            s.median_retrain_count.to_string(),
            fmt_opt(s.overhead_pct),
            fmt_opt(s.annual_train_detect_j),
        ])
        .map_err(|e| table_error(&summary_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&summary_path, e))?;

    let cmp_path = out_dir.join("comparisons.csv");
    let mut w = csv::Writer::from_path(&cmp_path).map_err(|e| table_error(&cmp_path, e))?;
    w.write_record([
        "config_a",
        "config_b",
        "metric",
        "n_pairs",
        "w_statistic",
        "p_value",
        "median_diff",
        "significant",
    ])
    .map_err(|e| table_error(&cmp_path, e))?;
    for c in comparisons {
        w.write_record([
            c.config_a.clone(),
            c.config_b.clone(),
            c.metric.clone(),
            c.n_pairs.to_string(),
            fmt_opt(c.w_statistic),
            fmt_opt(c.p_value),
            c.median_diff.to_string(),
            c.significant.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| table_error(&cmp_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&cmp_path, e))?;

    let fig_path = out_dir.join("figure_data.csv");
    let mut w = csv::Writer::from_path(&fig_path).map_err(|e| table_error(&fig_path, e))?;
    w.write_record([
        "config",
        "seed",
        "period",
        "retrained",
        "drift_detected",
        "roc_auc",
        "train_j",
        "detect_j",
        "infer_j",
        "cumulative_train_j",
        "cumulative_detect_j",
        "cumulative_infer_j",
        "cumulative_train_detect_j",
    ])
    .map_err(|e| table_error(&fig_path, e))?;
    for report in runs.reports() {
        let cumulative: BTreeMap<usize, (f64, f64, f64)> = report
            .ledger
            .periods
            .iter()
            .map(|p| {
                (
                    p.period,
                    (
                        p.cumulative_train_j,
                        p.cumulative_detect_j,
                        p.cumulative_infer_j,
                    ),
                )
            })
            .collect();
        for record in &report.records {
            let (ct, cd, ci) = cumulative.get(&record.period).copied().unwrap_or_default();
            w.write_record([
                report.config.name.clone(),
                report.config.seed.to_string(),
                record.period.to_string(),
                record.retrained.to_string(),
                record
                    .drift_detected
                    .map(|d| d.to_string())
                    .unwrap_or_default(),
                fmt_opt(record.roc_auc),
                record.train_j.to_string(),
                record.detect_j.to_string(),
                record.infer_j.to_string(),
                ct.to_string(),
                cd.to_string(),
                ci.to_string(),
                (ct + cd).to_string(),
            ])
            .map_err(|e| table_error(&fig_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&fig_path, e))
}

fn table_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("csv error on {}: {other:?}", path.display())),
    }
}

/// Linear-interpolation quantile on a copy of the data.
fn quantile(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (h - lo as f64)
}

fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(iqr(&[1.0, 1.0, 1.0, 1.0]), 0.0);
    }
}
