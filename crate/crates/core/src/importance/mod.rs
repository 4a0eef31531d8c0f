//! Random-forest Gini importance (mean decrease in impurity).

mod forest;

pub use forest::{
    gini_impurity, mdi_importance, rf_fit, DecisionTree, MaxFeatures, RandomForest, RfParams,
    TreeNode,
};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svg;

/// Normalised per-feature importances with a descending ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub features: Vec<String>,
    pub importances: Vec<f64>,
    /// Feature indices from most to least important.
    pub ranking: Vec<usize>,
}

impl ImportanceReport {
    pub fn new(features: Vec<String>, importances: Vec<f64>) -> Result<Self> {
        if features.len() != importances.len() {
            return Err(Error::shape(features.len(), importances.len()));
        }
        let mut ranking: Vec<usize> = (0..importances.len()).collect();
        ranking.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
        Ok(Self {
            features,
            importances,
            ranking,
        })
    }

    /// 1-based rank of each feature.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.ranking.len()];
        for (pos, &f) in self.ranking.iter().enumerate() {
            r[f] = pos + 1;
        }
        r
    }

    /// Feature names from least to most important.
    pub fn lowest(&self, n: usize) -> Vec<&str> {
        self.ranking
            .iter()
            .rev()
            .take(n)
            .map(|&f| self.features[f].as_str())
            .collect()
    }

    /// `feature,mdi,rank` in ranked order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["feature", "mdi", "rank"])
            .map_err(|e| Error::csv(path, e))?;
        for (pos, &f) in self.ranking.iter().enumerate() {
            w.write_record([
                self.features[f].clone(),
                self.importances[f].to_string(),
                (pos + 1).to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_svg(&self, path: &Path, description: &str) -> Result<()> {
        let labels: Vec<String> = self
            .ranking
            .iter()
            .map(|&f| self.features[f].clone())
            .collect();
        let values: Vec<f64> = self.ranking.iter().map(|&f| self.importances[f]).collect();
        let doc = svg::bar_chart(
            "Random-forest feature importance (MDI)",
            &labels,
            &values,
            description,
        );
        fs::write(path, doc).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_and_csv() {
        let r = ImportanceReport::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        assert_eq!(r.ranking, [1, 2, 0]);
        assert_eq!(r.ranks(), [3, 1, 2]);
        assert_eq!(r.lowest(1), ["a"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imp.csv");
        r.write_csv(&path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "feature,mdi,rank\nb,0.5,1\nc,0.3,2\na,0.2,3\n"
        );
    }
}
