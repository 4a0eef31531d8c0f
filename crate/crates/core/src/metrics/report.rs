use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use super::{write_roc_csv, ConfusionMatrix, MetricSet, RocCurve};
use crate::error::{Error, Result};
use crate::nn::LossHistory;
use crate::svg::{self, Series};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub preset: Option<String>,
    pub pipeline: String,
    /// Feature-set name, e.g. `Dataset1`.
    pub dataset: String,
    pub synthetic: bool,
    pub seed: u64,
    pub config_hash: String,
    pub thread_count: usize,
    pub timestamp: String,
}

impl RunMetadata {
    /// Current UTC time in RFC 3339 form.
    pub fn now() -> String {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        DateTime::from_timestamp(secs, 0)
            .map(|t| t.to_rfc3339())
            .unwrap_or_default()
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub metrics: MetricSet,
    pub confusion: ConfusionMatrix,
    pub auc: Option<f64>,
    pub loss: Option<LossHistory>,
    /// Pipeline-specific values such as the fitted threshold.
    #[serde(default)]
    pub details: BTreeMap<String, serde_json::Value>,
    /// Fully resolved run configuration.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub metrics_json: PathBuf,
    pub roc_csv: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Write `metrics.json`, `roc.csv` and the SVG plots into `dir`.
pub fn emit_report(dir: &Path, report: &Report, roc: Option<&RocCurve>) -> Result<ReportFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = &report.metadata;
    let desc = format!(
        "pipeline={} dataset={} seed={} config_hash={}",
        meta.pipeline, meta.dataset, meta.seed, meta.config_hash
    );
    let metrics_json = write(
        dir.join("metrics.json"),
        &(serde_json::to_string_pretty(report)? + "\n"),
    )?;
    let mut plots = Vec::new();

    let cm = &report.confusion;
    plots.push(write(
        dir.join("confusion.svg"),
        &svg::heatmap(
            &format!("Confusion matrix ({})", meta.pipeline),
            &["true 0", "true 1"],
            &["pred 0", "pred 1"],
            &[
                vec![cm.tn as f64, cm.fp as f64],
                vec![cm.fn_ as f64, cm.tp as f64],
            ],
            &desc,
        ),
    )?);

    let mut roc_csv = None;
    if let Some(r) = roc {
        let path = dir.join("roc.csv");
        write_roc_csv(&path, r)?;
        roc_csv = Some(path);
        let curve = Series {
            name: format!("AUC {:.3}", r.auc),
            points: r.fpr.iter().copied().zip(r.tpr.iter().copied()).collect(),
        };
        let chance = Series {
            name: "chance".into(),
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        };
        plots.push(write(
            dir.join("roc.svg"),
            &svg::line_plot(
                &format!("ROC ({})", meta.pipeline),
                "false positive rate",
                "true positive rate",
                &[curve, chance],
                &desc,
            ),
        )?);
    }

    if let Some(h) = report.loss.as_ref().filter(|h| !h.train.is_empty()) {
        let epochs = |v: &[f64]| -> Vec<(f64, f64)> {
            v.iter()
                .enumerate()
                .map(|(i, &l)| ((i + 1) as f64, l))
                .collect()
        };
        let mut series = vec![Series {
            name: "train".into(),
            points: epochs(&h.train),
        }];
        if !h.validation.is_empty() {
            series.push(Series {
                name: "validation".into(),
                points: epochs(&h.validation),
            });
        }
        plots.push(write(
            dir.join("loss.svg"),
            &svg::line_plot("Training loss", "epoch", "loss", &series, &desc),
        )?);
    }

    Ok(ReportFiles {
        metrics_json,
        roc_csv,
        plots,
    })
}
