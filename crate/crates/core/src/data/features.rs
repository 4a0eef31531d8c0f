use std::fmt;

use serde::{Deserialize, Serialize};

/// All 28 weather and vegetation columns.
pub const DATASET1_COLUMNS: &[&str] = &[
    "Precipitation_Max",
    "Precipitation_Mean",
    "Precipitation_Variance",
    "RelativeHumidity_Max",
    "RelativeHumidity_Mean",
    "RelativeHumidity_Min",
    "RelativeHumidity_Variance",
    "SoilWaterContent_Max",
    "SoilWaterContent_Mean",
    "SoilWaterContent_Min",
    "SoilWaterContent_Variance",
    "SolarRadiation_Max",
    "SolarRadiation_Mean",
    "SolarRadiation_Min",
    "SolarRadiation_Variance",
    "Temperature_Max",
    "Temperature_Mean",
    "Temperature_Min",
    "Temperature_Variance",
    "WindSpeed_Max",
    "WindSpeed_Mean",
    "WindSpeed_Min",
    "WindSpeed_Variance",
    "Vegetation_index_Mean",
    "Vegetation_index_Max",
    "Vegetation_index_Min",
    "Vegetation_index_Std",
    "Vegetation_index_Variance",
];

/// The 17 columns retained after the impurity-importance screening, in
/// decreasing importance order.
pub const DATASET2_COLUMNS: &[&str] = &[
    "Vegetation_index_Mean",
    "Temperature_Max",
    "SoilWaterContent_Mean",
    "RelativeHumidity_Min",
    "RelativeHumidity_Mean",
    "RelativeHumidity_Variance",
    "Temperature_Variance",
    "SolarRadiation_Max",
    "Vegetation_index_Std",
    "Vegetation_index_Variance",
    "Temperature_Mean",
    "SoilWaterContent_Max",
    "SoilWaterContent_Variance",
    "SolarRadiation_Mean",
    "WindSpeed_Min",
    "Vegetation_index_Max",
    "Temperature_Min",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSetName {
    Dataset1,
    Dataset2,
    Custom,
}

impl fmt::Display for FeatureSetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSetName::Dataset1 => "Dataset1",
            FeatureSetName::Dataset2 => "Dataset2",
            FeatureSetName::Custom => "Custom",
        })
    }
}

/// Named, ordered list of feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub name: FeatureSetName,
    pub columns: Vec<String>,
}

impl FeatureSet {
    pub fn dataset1() -> Self {
        Self {
            name: FeatureSetName::Dataset1,
            columns: DATASET1_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn dataset2() -> Self {
        Self {
            name: FeatureSetName::Dataset2,
            columns: DATASET2_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn custom(columns: Vec<String>) -> Self {
        Self {
            name: FeatureSetName::Custom,
            columns,
        }
    }

    pub fn by_name(name: FeatureSetName) -> Option<Self> {
        match name {
            FeatureSetName::Dataset1 => Some(Self::dataset1()),
            FeatureSetName::Dataset2 => Some(Self::dataset2()),
            FeatureSetName::Custom => None,
        }
    }
}
