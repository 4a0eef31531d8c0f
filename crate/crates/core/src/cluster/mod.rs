//! Outlier detectors applied to latent codes, plus PCA for plotting.

mod contamination;
mod iforest;
mod lof;
mod ocsvm;
mod pca;

pub use iforest::{
    anomaly_score, average_path_length, iforest_fit, iforest_predict, ITreeNode,
    IsolationForestModel, IsolationForestParams, IsolationTree, MaxSamples,
};
pub use lof::{lof_fit, lof_fit_predict, LofModel, LofParams, Metric, LRD_CAP};
pub use ocsvm::{ocsvm_fit, ocsvm_predict, Kernel, OcsvmParams, OneClassSvmModel};
pub use pca::{pca_project, write_pca_csv, PcaProjection};
