//! Record ingestion, labelling, feature selection, splitting, scaling and
//! windowing of the daily region-level weather/vegetation table.

mod features;
mod load;
mod scale;
mod split;
pub mod synthetic;
mod window;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{FeatureSet, FeatureSetName, DATASET1_COLUMNS, DATASET2_COLUMNS};
pub use load::{load_tables, LoadReport, DATE_COLUMN, FIRE_AREA_COLUMN, REGION_COLUMN};
pub use scale::{scale_per_split, MinMaxScaler, ScalerMode};
pub use split::{split, SplitBundle, SplitManifest, SplitPlan};
pub use window::{window_labels, window_sequences, SequenceTensor, WindowLabel};

/// One of the seven pre-aggregated Australian regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    NSW,
    NT,
    QL,
    SA,
    VI,
    WA,
    TA,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::NSW,
        Region::NT,
        Region::QL,
        Region::SA,
        Region::VI,
        Region::WA,
        Region::TA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::NSW => "NSW",
            Region::NT => "NT",
            Region::QL => "QL",
            Region::SA => "SA",
            Region::VI => "VI",
            Region::WA => "WA",
            Region::TA => "TA",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Schema(format!("unknown region {s:?}")))
    }
}

/// Binary fire label: 1 iff any fire area was recorded that day.
pub fn derive_fire_label(fire_area: f64) -> Result<u8> {
    if fire_area.is_nan() || fire_area < 0.0 {
        return Err(Error::Domain(format!(
            "fire area must be non-negative, got {fire_area}"
        )));
    }
    Ok(u8::from(fire_area != 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub date: NaiveDate,
    pub region: Region,
    /// Values aligned with [`RecordTable::feature_names`].
    pub features: Vec<f64>,
    pub fire_area: f64,
    pub fire_label: Option<u8>,
}

/// Dated, region-tagged rows sharing a single feature-name list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTable {
    feature_names: Vec<String>,
    rows: Vec<Record>,
}

impl RecordTable {
    pub fn new(feature_names: Vec<String>, rows: Vec<Record>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != feature_names.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} feature values, table declares {}",
                    row.features.len(),
                    feature_names.len()
                )));
            }
            if row.fire_area.is_nan() || row.fire_area < 0.0 {
                return Err(Error::Domain(format!(
                    "row {i}: negative fire area {}",
                    row.fire_area
                )));
            }
        }
        Ok(Self {
            feature_names,
            rows,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fill every row's label from its fire area.
    pub fn derive_labels(&mut self) -> Result<()> {
        for row in &mut self.rows {
            row.fire_label = Some(derive_fire_label(row.fire_area)?);
        }
        Ok(())
    }

    /// Sort rows by (region, date) so consecutive rows form per-region time series.
    pub fn sort_by_region_date(&mut self) {
        self.rows.sort_by_key(|r| (r.region, r.date));
    }

    /// Counts of (non-wildfire, wildfire) rows; labels are derived on the fly if absent.
    pub fn class_counts(&self) -> Result<(usize, usize)> {
        let mut counts = (0, 0);
        for row in &self.rows {
            match row
                .fire_label
                .map_or_else(|| derive_fire_label(row.fire_area), Ok)?
            {
                0 => counts.0 += 1,
                _ => counts.1 += 1,
            }
        }
        Ok(counts)
    }

    /// Project onto `set.columns` in that order. Date and Region never appear.
    pub fn select_features(&self, set: &FeatureSet) -> Result<FeatureMatrix> {
        let positions = set
            .columns
            .iter()
            .map(|name| {
                self.feature_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| {
                        Error::Schema(format!(
                            "feature {name:?} required by {} is missing from the table",
                            set.name
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut data = Array2::zeros((self.rows.len(), positions.len()));
        let mut labels = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &p) in positions.iter().enumerate() {
                data[[i, j]] = row.features[p];
            }
            labels.push(match row.fire_label {
                Some(l) => l,
                None => derive_fire_label(row.fire_area)?,
            });
        }
        Ok(FeatureMatrix {
            feature_set: Some(set.name),
            columns: set.columns.clone(),
            row_ids: (0..self.rows.len()).collect(),
            labels,
            data,
            scaler: None,
        })
    }
}

/// Free function form of [`RecordTable::select_features`].
pub fn select_features(table: &RecordTable, set: &FeatureSet) -> Result<FeatureMatrix> {
    table.select_features(set)
}

/// Rows × features with their source row ids, labels, feature set and
/// the scaler applied (if any).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub feature_set: Option<FeatureSetName>,
    pub columns: Vec<String>,
    pub row_ids: Vec<usize>,
    pub labels: Vec<u8>,
    pub data: Array2<f64>,
    pub scaler: Option<MinMaxScaler>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    /// Sub-matrix of the given positional rows, keeping order.
    pub fn take_rows(&self, positions: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            feature_set: self.feature_set,
            columns: self.columns.clone(),
            row_ids: positions.iter().map(|&p| self.row_ids[p]).collect(),
            labels: positions.iter().map(|&p| self.labels[p]).collect(),
            data: self.data.select(ndarray::Axis(0), positions),
            scaler: self.scaler.clone(),
        }
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fire_label_rule() {
        assert_eq!(derive_fire_label(0.0).unwrap(), 0);
        assert_eq!(derive_fire_label(10120.93).unwrap(), 1);
        assert_eq!(derive_fire_label(1e-9).unwrap(), 1);
        assert!(matches!(derive_fire_label(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn region_parsing() {
        assert_eq!("nsw".parse::<Region>().unwrap(), Region::NSW);
        assert_eq!(" TA ".parse::<Region>().unwrap(), Region::TA);
        assert!("ACT".parse::<Region>().is_err());
    }

    fn tiny_table(names: &[&str]) -> RecordTable {
        let date = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let rows = (0..3)
            .map(|i| Record {
                date,
                region: Region::ALL[i],
                features: (0..names.len()).map(|j| (i * 10 + j) as f64).collect(),
                fire_area: i as f64,
                fire_label: None,
            })
            .collect();
        RecordTable::new(names.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn select_reorders_columns_and_labels() {
        let table = tiny_table(&["a", "b", "c"]);
        let set = FeatureSet::custom(vec!["c".into(), "a".into()]);
        let m = table.select_features(&set).unwrap();
        assert_eq!(m.columns, vec!["c", "a"]);
        assert_eq!(m.data.row(1).to_vec(), vec![12.0, 10.0]);
        assert_eq!(m.labels, vec![0, 1, 1]);
    }

    #[test]
    fn dataset2_on_table_missing_temperature_min_is_schema_error() {
        let names: Vec<&str> = DATASET1_COLUMNS
            .iter()
            .copied()
            .filter(|c| *c != "Temperature_Min")
            .collect();
        let table = tiny_table(&names);
        let err = table.select_features(&FeatureSet::dataset2()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("Temperature_Min")));
        let m = tiny_table(DATASET1_COLUMNS)
            .select_features(&FeatureSet::dataset1())
            .unwrap();
        assert_eq!(m.n_cols(), 28);
        let m = tiny_table(DATASET1_COLUMNS)
            .select_features(&FeatureSet::dataset2())
            .unwrap();
        assert_eq!(m.n_cols(), 17);
    }

    #[test]
    fn negative_area_rejected_at_construction() {
        let row = Record {
            date: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            region: Region::SA,
            features: vec![],
            fire_area: -0.5,
            fire_label: None,
        };
        assert!(RecordTable::new(vec![], vec![row]).is_err());
    }
}
