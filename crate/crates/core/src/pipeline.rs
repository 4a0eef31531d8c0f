//! Step-by-step execution of a [`RunConfig`] with every intermediate
//! result kept on disk under `out_dir`:
//!
//! ```text
//! prepared/manifest.json, {train,validation,test}.csv
//! models/{fc,lstm,latent}.json, models/*.loss.json
//! <pipeline>/scores.csv, detector.json, evaluation.json, report files
//! importance/importance.csv, importance.svg
//! ```
//!
//! Each step checks that the artifacts it reads exist and were produced
//! from the same settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{Autoencoder, AutoencoderKind};
use crate::cluster::{iforest_fit, lof_fit, ocsvm_fit, pca_project, write_pca_csv};
use crate::config::{DataSource, ModelSettings, RunConfig};
use crate::data::synthetic;
use crate::data::{
    load_tables, scale_per_split, split, window_labels, window_sequences, FeatureMatrix,
    FeatureSet, LoadReport, MinMaxScaler, RecordTable, SplitManifest,
};
use crate::error::{Error, Result};
use crate::importance::{mdi_importance, rf_fit, ImportanceReport};
use crate::metrics::{
    confusion, emit_report, metrics, roc_auc, ConfusionMatrix, MetricSet, Report, ReportFiles,
    RocCurve, RunMetadata, REPORT_SCHEMA_VERSION,
};
use crate::nn::{LossHistory, Tensor};
use crate::threshold::{autoencoder_errors, classify, fit_threshold, write_score_csv};

/// One evaluable pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    ReconFc,
    ReconLstm,
    ClusterIforest,
    ClusterLof,
    ClusterOcsvm,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 5] = [
        PipelineKind::ReconFc,
        PipelineKind::ReconLstm,
        PipelineKind::ClusterIforest,
        PipelineKind::ClusterLof,
        PipelineKind::ClusterOcsvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::ReconFc => "recon_fc",
            PipelineKind::ReconLstm => "recon_lstm",
            PipelineKind::ClusterIforest => "cluster_iforest",
            PipelineKind::ClusterLof => "cluster_lof",
            PipelineKind::ClusterOcsvm => "cluster_ocsvm",
        }
    }

    /// Column name of the anomaly score in `scores.csv`.
    pub fn score_name(self) -> &'static str {
        match self {
            PipelineKind::ReconFc | PipelineKind::ReconLstm => "msle",
            PipelineKind::ClusterIforest => "iforest_score",
            PipelineKind::ClusterLof => "lof",
            PipelineKind::ClusterOcsvm => "neg_decision",
        }
    }

    fn is_cluster(self) -> bool {
        !matches!(self, PipelineKind::ReconFc | PipelineKind::ReconLstm)
    }

    /// Autoencoder whose training loss belongs in this pipeline's report.
    fn model(self) -> ModelKind {
        match self {
            PipelineKind::ReconFc => ModelKind::Fc,
            PipelineKind::ReconLstm => ModelKind::Lstm,
            _ => ModelKind::Latent,
        }
    }
}

/// Trained autoencoders kept under `models/`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Fc,
    Lstm,
    Latent,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fc => "fc",
            ModelKind::Lstm => "lstm",
            ModelKind::Latent => "latent",
        }
    }

    fn arch(self) -> AutoencoderKind {
        match self {
            ModelKind::Lstm => AutoencoderKind::Lstm,
            _ => AutoencoderKind::Fc,
        }
    }

    fn settings(self, cfg: &RunConfig) -> &ModelSettings {
        match self {
            ModelKind::Fc => &cfg.fc,
            ModelKind::Lstm => &cfg.lstm,
            ModelKind::Latent => &cfg.latent,
        }
    }

    fn salt(self) -> u64 {
        match self {
            ModelKind::Fc => 1,
            ModelKind::Lstm => 2,
            ModelKind::Latent => 3,
        }
    }
}

/// Row counts of one prepared split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub rows: usize,
    pub nominal: usize,
    pub wildfire: usize,
}

impl SplitCounts {
    fn of(m: &FeatureMatrix) -> Self {
        Self {
            rows: m.n_rows(),
            nominal: m.count_label(0),
            wildfire: m.count_label(1),
        }
    }
}

/// Written by `prepare`; every later step reads it first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedManifest {
    pub data_hash: String,
    pub synthetic: bool,
    pub feature_set: String,
    pub columns: Vec<String>,
    pub load: Option<LoadReport>,
    pub train: SplitCounts,
    pub validation: SplitCounts,
    pub test: SplitCounts,
    /// (batch, timesteps, features) of the windowed splits.
    pub sequence_shapes: BTreeMap<String, (usize, usize, usize)>,
    pub scalers: BTreeMap<String, MinMaxScaler>,
    pub split: SplitManifest,
}

/// Result of `evaluate` for one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub pipeline: PipelineKind,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub roc: Option<RocCurve>,
}

/// Everything `run` produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: PreparedManifest,
    pub evaluations: Vec<Evaluation>,
    pub reports: Vec<ReportFiles>,
    pub importance: Option<ImportanceReport>,
}

/// Rows of `scores.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScoreFile {
    sample_ids: Vec<usize>,
    scores: Vec<f64>,
    predicted: Vec<u8>,
    truth: Vec<u8>,
}

/// Offset on `seed` for an independent sub-stream.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path, step: &'static str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            step,
        });
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_matrix_csv(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["row_id".to_string(), "label".to_string()];
    header.extend(m.columns.iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (i, row) in m.data.rows().into_iter().enumerate() {
        let mut rec = vec![m.row_ids[i].to_string(), m.labels[i].to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_matrix_csv(path: &Path, manifest: &PreparedManifest) -> Result<FeatureMatrix> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            step: "prepare",
        });
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    if columns != manifest.columns {
        return Err(Error::Schema(format!(
            "{} columns differ from the manifest",
            path.display()
        )));
    }
    let (mut row_ids, mut labels, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |what: &str| Error::Schema(format!("{}: bad {what} value", path.display()));
        row_ids.push(rec[0].parse::<usize>().map_err(|_| bad("row_id"))?);
        labels.push(rec[1].parse::<u8>().map_err(|_| bad("label"))?);
        for cell in rec.iter().skip(2) {
            values.push(cell.parse::<f64>().map_err(|_| bad("feature"))?);
        }
    }
    let n = row_ids.len();
    let data = Array2::from_shape_vec((n, columns.len()), values)
        .map_err(|e| Error::shape(format!("{n} x {}", columns.len()), e))?;
    Ok(FeatureMatrix {
        feature_set: None,
        columns,
        row_ids,
        labels,
        data,
        scaler: None,
    })
}

/// Load or generate the labelled table described by `source`.
pub fn load_table(source: &DataSource) -> Result<(RecordTable, Option<LoadReport>)> {
    match source {
        DataSource::Synthetic { generator } => Ok((synthetic::generate(generator), None)),
        _ => {
            let (w, n, f) = source.paths().expect("file-backed source");
            for p in [&w, &n, &f] {
                if !p.exists() {
                    return Err(Error::io(
                        p,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                    ));
                }
            }
            let (table, report) = load_tables(&w, &n, &f)?;
            Ok((table, Some(report)))
        }
    }
}

/// Prepared splits in memory.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub manifest: PreparedManifest,
    pub train: FeatureMatrix,
    pub validation: FeatureMatrix,
    pub test: FeatureMatrix,
}

/// Executes the steps of one run configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: RunConfig,
    hash: String,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash();
        Ok(Self { cfg, hash })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn out(&self) -> &Path {
        &self.cfg.out_dir
    }

    fn prepared_dir(&self) -> PathBuf {
        self.out().join("prepared")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.prepared_dir().join("manifest.json")
    }

    pub fn model_path(&self, model: ModelKind) -> PathBuf {
        self.out()
            .join("models")
            .join(format!("{}.json", model.name()))
    }

    fn loss_path(&self, model: ModelKind) -> PathBuf {
        self.out()
            .join("models")
            .join(format!("{}.loss.json", model.name()))
    }

    pub fn pipeline_dir(&self, kind: PipelineKind) -> PathBuf {
        self.out().join(kind.name())
    }

    /// Pipelines selected by the config, in a fixed order.
    pub fn selected(&self) -> Vec<PipelineKind> {
        let p = &self.cfg.pipeline;
        PipelineKind::ALL
            .into_iter()
            .filter(|k| match k {
                PipelineKind::ReconFc => p.recon_fc,
                PipelineKind::ReconLstm => p.recon_lstm,
                PipelineKind::ClusterIforest => p.cluster_iforest,
                PipelineKind::ClusterLof => p.cluster_lof,
                PipelineKind::ClusterOcsvm => p.cluster_ocsvm,
            })
            .collect()
    }

    fn selected_models(&self) -> Vec<ModelKind> {
        let p = &self.cfg.pipeline;
        let mut out = Vec::new();
        if p.recon_fc {
            out.push(ModelKind::Fc);
        }
        if p.recon_lstm {
            out.push(ModelKind::Lstm);
        }
        if p.any_cluster() {
            out.push(ModelKind::Latent);
        }
        out
    }

    /// Hash binding a trained model to its data and settings.
    fn model_hash(&self, model: ModelKind) -> String {
        let value = serde_json::json!({
            "data": self.cfg.data_hash(),
            "model": model.name(),
            "settings": model.settings(&self.cfg),
            "seed": self.cfg.seed,
        });
        crate::config::sha256_hex(value.to_string().as_bytes())
    }

    /// Load, split and scale the data; write the manifest and split CSVs.
    pub fn prepare(&self) -> Result<PreparedManifest> {
        let cfg = &self.cfg;
        let (table, load) = load_table(&cfg.data)?;
        let set = FeatureSet::by_name(cfg.feature_set)
            .ok_or_else(|| Error::Config("feature_set must be Dataset1 or Dataset2".into()))?;
        let matrix = table.select_features(&set)?;
        let bundle = split(&matrix, cfg.split, cfg.seed)?;
        let scaled = scale_per_split(&bundle, cfg.scaler_mode);

        let mut sequence_shapes = BTreeMap::new();
        let mut scalers = BTreeMap::new();
        let dir = self.prepared_dir();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (name, m) in [
            ("train", &scaled.train),
            ("validation", &scaled.validation),
            ("test", &scaled.test),
        ] {
            write_matrix_csv(&dir.join(format!("{name}.csv")), m)?;
            if m.n_rows() >= cfg.lstm.window_length {
                sequence_shapes.insert(
                    name.to_string(),
                    window_sequences(m, cfg.lstm.window_length)?.shape(),
                );
            }
            if let Some(s) = &m.scaler {
                scalers.insert(name.to_string(), s.clone());
            }
        }
        let manifest = PreparedManifest {
            data_hash: cfg.data_hash(),
            synthetic: cfg.data.is_synthetic(),
            feature_set: cfg.feature_set.to_string(),
            columns: set.columns.clone(),
            load,
            train: SplitCounts::of(&scaled.train),
            validation: SplitCounts::of(&scaled.validation),
            test: SplitCounts::of(&scaled.test),
            sequence_shapes,
            scalers,
            split: scaled.manifest(),
        };
        write_json(&self.manifest_path(), &manifest)?;
        info!(
            "prepared {}: train {} / validation {} / test {} rows",
            manifest.feature_set, manifest.train.rows, manifest.validation.rows, manifest.test.rows
        );
        Ok(manifest)
    }

    pub fn read_manifest(&self) -> Result<PreparedManifest> {
        let manifest: PreparedManifest = read_json(&self.manifest_path(), "prepare")?;
        if manifest.data_hash != self.cfg.data_hash() {
            return Err(Error::Config(format!(
                "{} was prepared with different data settings; run `prepare` again",
                self.manifest_path().display()
            )));
        }
        Ok(manifest)
    }

    /// Read the prepared splits back from disk.
    pub fn load_prepared(&self) -> Result<PreparedData> {
        let manifest = self.read_manifest()?;
        let dir = self.prepared_dir();
        let read = |name: &str| -> Result<FeatureMatrix> {
            let mut m = read_matrix_csv(&dir.join(format!("{name}.csv")), &manifest)?;
            m.feature_set = Some(self.cfg.feature_set);
            m.scaler = manifest.scalers.get(name).cloned();
            Ok(m)
        };
        let (train, validation, test) = (read("train")?, read("validation")?, read("test")?);
        Ok(PreparedData {
            manifest,
            train,
            validation,
            test,
        })
    }

    fn tensor(&self, model: ModelKind, m: &FeatureMatrix) -> Result<Tensor> {
        Ok(match model.arch() {
            AutoencoderKind::Fc => Tensor::Matrix(m.data.clone()),
            AutoencoderKind::Lstm => {
                Tensor::Sequence(window_sequences(m, self.cfg.lstm.window_length)?.data)
            }
        })
    }

    /// Train every autoencoder the selected pipelines need.
    pub fn train(&self) -> Result<Vec<(ModelKind, LossHistory)>> {
        let data = self.load_prepared()?;
        let mut out = Vec::new();
        for model in self.selected_models() {
            let settings = model.settings(&self.cfg);
            let spec = settings.spec(model.arch(), data.train.n_cols());
            let seed = derive_seed(self.cfg.seed, model.salt());
            let ae = Autoencoder::build(spec, seed)?;
            let x = self.tensor(model, &data.train)?;
            let v = self.tensor(model, &data.validation)?;
            let train_cfg = crate::nn::TrainConfig {
                seed: derive_seed(seed, 100),
                ..settings.train
            };
            info!(
                "training {} autoencoder: {} parameters, {} samples",
                model.name(),
                ae.network().param_count(),
                x.batch_len()
            );
            let (ae, history) = ae.fit(&x, Some(&v), &train_cfg, &settings.optimizer)?;
            let path = self.model_path(model);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            ae.save(&path, data.train.scaler.clone(), &self.model_hash(model))?;
            write_json(&self.loss_path(model), &history)?;
            info!(
                "{}: {} epochs, best epoch {:?}, early stop {}",
                model.name(),
                history.train.len(),
                history.best_epoch,
                history.stopped_early
            );
            out.push((model, history));
        }
        Ok(out)
    }

    fn load_model(&self, model: ModelKind) -> Result<Autoencoder> {
        let path = self.model_path(model);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                step: "train",
            });
        }
        let (ae, ckpt) = Autoencoder::load(&path)?;
        if ckpt.config_hash != self.model_hash(model) {
            return Err(Error::Config(format!(
                "{} was trained with different settings; run `train` again",
                path.display()
            )));
        }
        Ok(ae)
    }

    fn write_scores(
        &self,
        kind: PipelineKind,
        file: &ScoreFile,
        details: &serde_json::Value,
    ) -> Result<()> {
        let dir = self.pipeline_dir(kind);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_score_csv(
            &dir.join("scores.csv"),
            kind.score_name(),
            &file.sample_ids,
            &file.scores,
            &file.predicted,
            &file.truth,
        )?;
        write_json(&dir.join("detector.json"), details)
    }

    fn read_scores(&self, kind: PipelineKind) -> Result<ScoreFile> {
        let path = self.pipeline_dir(kind).join("scores.csv");
        let step = if kind.is_cluster() {
            "cluster"
        } else {
            "detect"
        };
        if !path.exists() {
            return Err(Error::MissingArtifact { path, step });
        }
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        let mut f = ScoreFile {
            sample_ids: Vec::new(),
            scores: Vec::new(),
            predicted: Vec::new(),
            truth: Vec::new(),
        };
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(&path, e))?;
            let bad = || Error::Schema(format!("{}: malformed row", path.display()));
            f.sample_ids.push(rec[0].parse().map_err(|_| bad())?);
            f.scores.push(rec[1].parse().map_err(|_| bad())?);
            f.predicted.push(rec[2].parse().map_err(|_| bad())?);
            f.truth.push(rec[3].parse().map_err(|_| bad())?);
        }
        Ok(f)
    }

    /// Reconstruction-error detection: fit the threshold on training errors
    /// and classify the test split.
    pub fn detect(&self) -> Result<Vec<PipelineKind>> {
        let kinds: Vec<PipelineKind> = self
            .selected()
            .into_iter()
            .filter(|k| !k.is_cluster())
            .collect();
        if kinds.is_empty() {
            return Ok(kinds);
        }
        let data = self.load_prepared()?;
        for &kind in &kinds {
            let model = kind.model();
            let ae = self.load_model(model)?;
            let train_err = autoencoder_errors(&ae, &self.tensor(model, &data.train)?)?;
            let test_err = autoencoder_errors(&ae, &self.tensor(model, &data.test)?)?;
            let threshold = fit_threshold(&train_err.values)?;
            let predicted = classify(&test_err.values, &threshold);
            let train_flagged = classify(&train_err.values, &threshold)
                .iter()
                .filter(|&&l| l == 1)
                .count();
            let (sample_ids, truth) = match model.arch() {
                AutoencoderKind::Fc => (data.test.row_ids.clone(), data.test.labels.clone()),
                AutoencoderKind::Lstm => {
                    let w = self.cfg.lstm.window_length;
                    let ids = data.test.row_ids.chunks_exact(w).map(|c| c[0]).collect();
                    (
                        ids,
                        window_labels(&data.test.labels, w, self.cfg.window_label),
                    )
                }
            };
            let details = serde_json::json!({
                "threshold": threshold.value,
                "train_error_mean": threshold.mu,
                "train_error_std": threshold.sigma,
                "train_samples": train_err.len(),
                "train_flagged_fraction": train_flagged as f64 / train_err.len() as f64,
                "granularity": train_err.granularity,
            });
            let file = ScoreFile {
                sample_ids,
                scores: test_err.values,
                predicted,
                truth,
            };
            self.write_scores(kind, &file, &details)?;
            info!("{}: threshold {:.6}", kind.name(), threshold.value);
        }
        Ok(kinds)
    }

    /// Latent-feature detectors: encode with the latent autoencoder, fit on
    /// the training split, label the test split.
    pub fn cluster(&self) -> Result<Vec<PipelineKind>> {
        let kinds: Vec<PipelineKind> = self
            .selected()
            .into_iter()
            .filter(|k| k.is_cluster())
            .collect();
        if kinds.is_empty() {
            return Ok(kinds);
        }
        let data = self.load_prepared()?;
        let ae = self.load_model(ModelKind::Latent)?;
        let z_train = ae.encode(&Tensor::Matrix(data.train.data.clone()))?;
        let z_test = ae.encode(&Tensor::Matrix(data.test.data.clone()))?;
        let pca = if self.cfg.pca_dim <= z_test.ncols() && z_test.nrows() > 0 {
            Some(pca_project(&z_test, self.cfg.pca_dim)?)
        } else {
            warn!(
                "pca_dim {} exceeds latent width {}; skipping projection",
                self.cfg.pca_dim,
                z_test.ncols()
            );
            None
        };
        for &kind in &kinds {
            let (scores, predicted, details) = match kind {
                PipelineKind::ClusterIforest => {
                    let seed = derive_seed(self.cfg.seed, 4);
                    let m = iforest_fit(&z_train, &self.cfg.iforest, seed)?;
                    let details = serde_json::json!({
                        "offset": m.offset,
                        "subsample_size": m.subsample_size,
                        "n_estimators": m.trees.len(),
                    });
                    (m.score(&z_test)?, m.predict(&z_test)?, details)
                }
                PipelineKind::ClusterLof => {
                    let m = lof_fit(&z_train, &self.cfg.lof)?;
                    let details = serde_json::json!({ "offset": m.offset });
                    (m.score(&z_test)?, m.predict(&z_test)?, details)
                }
                PipelineKind::ClusterOcsvm => {
                    let m = ocsvm_fit(&z_train, &self.cfg.ocsvm)?;
                    let decision = m.decision_function(&z_test)?;
                    let details = serde_json::json!({
                        "rho": m.rho,
                        "kernel": m.kernel,
                        "support_vectors": m.support.len(),
                        "iterations": m.iterations,
                        "converged": m.converged,
                        "residual": m.residual,
                    });
                    let predicted = decision.iter().map(|&f| u8::from(f < 0.0)).collect();
                    (decision.iter().map(|f| -f).collect(), predicted, details)
                }
                _ => unreachable!("filtered to cluster pipelines"),
            };
            let file = ScoreFile {
                sample_ids: data.test.row_ids.clone(),
                scores,
                predicted,
                truth: data.test.labels.clone(),
            };
            self.write_scores(kind, &file, &details)?;
            if let Some(p) = &pca {
                let path = self.pipeline_dir(kind).join("pca.csv");
                write_pca_csv(
                    &path,
                    &file.sample_ids,
                    &p.coordinates,
                    &file.predicted,
                    &file.truth,
                )?;
            }
            info!(
                "{}: {} of {} test rows flagged",
                kind.name(),
                file.predicted.iter().filter(|&&l| l == 1).count(),
                file.predicted.len()
            );
        }
        Ok(kinds)
    }

    /// Random-forest MDI ranking over every labelled row and all 28
    /// features.
    pub fn importance(&self) -> Result<ImportanceReport> {
        let (table, _) = load_table(&self.cfg.data)?;
        let set = FeatureSet::dataset1();
        let m = table.select_features(&set)?;
        let settings = &self.cfg.importance;
        let forest = rf_fit(
            &m.data,
            &m.labels,
            &settings.rf,
            derive_seed(self.cfg.seed, 5),
        )?;
        let report = ImportanceReport::new(set.columns.clone(), mdi_importance(&forest))?;
        let dir = self.out().join("importance");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        report.write_csv(&dir.join("importance.csv"))?;
        report.write_svg(
            &dir.join("importance.svg"),
            &format!("seed={} config_hash={}", self.cfg.seed, self.hash),
        )?;
        if settings.recompute {
            let derived = reduced_feature_list(&report, "Temperature_Min");
            write_json(&dir.join("derived_feature_set.json"), &derived)?;
        }
        Ok(report)
    }

    /// Confusion matrix, metrics and ROC for every pipeline with scores.
    pub fn evaluate(&self) -> Result<Vec<Evaluation>> {
        let mut out = Vec::new();
        for kind in self.selected() {
            let f = self.read_scores(kind)?;
            let cm = confusion(&f.truth, &f.predicted)?;
            let roc = match roc_auc(&f.scores, &f.truth) {
                Ok(r) => Some(r),
                Err(e) => {
                    warn!("{}: no ROC curve: {e}", kind.name());
                    None
                }
            };
            let ev = Evaluation {
                pipeline: kind,
                confusion: cm,
                metrics: metrics(&cm),
                roc,
            };
            write_json(&self.pipeline_dir(kind).join("evaluation.json"), &ev)?;
            out.push(ev);
        }
        Ok(out)
    }

    /// Assemble `metrics.json`, `roc.csv` and plots per pipeline.
    pub fn report(&self) -> Result<Vec<ReportFiles>> {
        let mut out = Vec::new();
        let mut config = self.cfg.to_value();
        if let Some(obj) = config.as_object_mut() {
            obj.remove("out_dir");
        }
        for kind in self.selected() {
            let dir = self.pipeline_dir(kind);
            let ev: Evaluation = read_json(&dir.join("evaluation.json"), "evaluate")?;
            let detector: serde_json::Value = read_json(
                &dir.join("detector.json"),
                if kind.is_cluster() {
                    "cluster"
                } else {
                    "detect"
                },
            )?;
            let loss: Option<LossHistory> = read_json(&self.loss_path(kind.model()), "train").ok();
            let mut details: BTreeMap<String, serde_json::Value> = match detector {
                serde_json::Value::Object(map) => map.into_iter().collect(),
                other => BTreeMap::from([("detector".to_string(), other)]),
            };
            details.insert(
                "false_positive_rate".into(),
                serde_json::json!(ev.confusion.false_positive_rate()),
            );
            let report = Report {
                schema_version: REPORT_SCHEMA_VERSION,
                metadata: RunMetadata {
                    preset: self.cfg.preset.clone(),
                    pipeline: kind.name().to_string(),
                    dataset: self.cfg.feature_set.to_string(),
                    synthetic: self.cfg.data.is_synthetic(),
                    seed: self.cfg.seed,
                    config_hash: self.hash.clone(),
                    thread_count: rayon::current_num_threads(),
                    timestamp: RunMetadata::now(),
                },
                metrics: ev.metrics,
                confusion: ev.confusion,
                auc: ev.roc.as_ref().map(|r| r.auc),
                loss,
                details,
                config: config.clone(),
            };
            out.push(emit_report(&dir, &report, ev.roc.as_ref())?);
        }
        Ok(out)
    }

    /// Every step in order.
    pub fn run(&self) -> Result<RunSummary> {
        let manifest = self.prepare()?;
        write_json(&self.out().join("config.json"), &self.cfg)?;
        self.train()?;
        self.detect()?;
        self.cluster()?;
        let importance = if self.cfg.pipeline.importance {
            Some(self.importance()?)
        } else {
            None
        };
        let evaluations = self.evaluate()?;
        let reports = self.report()?;
        Ok(RunSummary {
            manifest,
            evaluations,
            reports,
            importance,
        })
    }
}

/// Features ranked at or above `anchor`, in rank order.
pub fn reduced_feature_list(report: &ImportanceReport, anchor: &str) -> Vec<String> {
    let Some(a) = report.features.iter().position(|f| f == anchor) else {
        return Vec::new();
    };
    let cutoff = report.importances[a];
    report
        .ranking
        .iter()
        .filter(|&&f| report.importances[f] >= cutoff)
        .map(|&f| report.features[f].clone())
        .collect()
}
