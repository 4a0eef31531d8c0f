use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Record, RecordTable, Region};
use crate::error::{Error, Result};

pub const DATE_COLUMN: &str = "Date";
pub const REGION_COLUMN: &str = "Region";
pub const FIRE_AREA_COLUMN: &str = "Estimated_fire_area";

/// Span covered by the published daily aggregates; rows outside it only warn.
const FIRST_DAY: (i32, u32, u32) = (2005, 1, 1);
const LAST_DAY: (i32, u32, u32) = (2021, 1, 23);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_joined: usize,
    pub dropped_missing: usize,
    pub outside_date_range: usize,
}

type Key = (NaiveDate, Region);

struct Source {
    columns: Vec<String>,
    rows: HashMap<Key, Vec<Option<f64>>>,
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let day = raw.get(..10).unwrap_or(raw);
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

fn parse_value(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_source(path: &Path) -> Result<Source> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();

    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{} has no {name:?} column", path.display())))
    };
    let date_idx = find(DATE_COLUMN)?;
    let region_idx = find(REGION_COLUMN)?;
    let value_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != date_idx && i != region_idx)
        .collect();
    let columns = value_idx.iter().map(|&i| headers[i].to_string()).collect();

    let mut rows = HashMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let date = parse_date(&record[date_idx]).ok_or_else(|| {
            Error::Schema(format!(
                "{} line {}: bad date {:?}",
                path.display(),
                line + 2,
                &record[date_idx]
            ))
        })?;
        let region: Region = record[region_idx].parse()?;
        let values = value_idx.iter().map(|&i| parse_value(&record[i])).collect();
        if rows.insert((date, region), values).is_some() {
            return Err(Error::Schema(format!(
                "{}: duplicate row for {date} {region}",
                path.display()
            )));
        }
    }
    Ok(Source { columns, rows })
}

/// Inner-join the weather, vegetation and wildfire CSVs on (date, region).
///
/// Feature columns are the weather columns followed by the vegetation
/// columns; the wildfire file contributes only `Estimated_fire_area`.
/// Rows with any missing value are dropped and counted. The result is
/// labelled and sorted by (region, date).
pub fn load_tables(
    weather_path: &Path,
    ndvi_path: &Path,
    wildfire_path: &Path,
) -> Result<(RecordTable, LoadReport)> {
    let weather = read_source(weather_path)?;
    let ndvi = read_source(ndvi_path)?;
    let fires = read_source(wildfire_path)?;

    let area_idx = fires
        .columns
        .iter()
        .position(|c| c == FIRE_AREA_COLUMN)
        .ok_or_else(|| {
            Error::Schema(format!(
                "{} has no {FIRE_AREA_COLUMN:?} column",
                wildfire_path.display()
            ))
        })?;
    let weather_cols: Vec<&String> = weather
        .columns
        .iter()
        .filter(|c| c.as_str() != FIRE_AREA_COLUMN)
        .collect();
    let ndvi_cols: Vec<&String> = ndvi
        .columns
        .iter()
        .filter(|c| c.as_str() != FIRE_AREA_COLUMN)
        .collect();
    let mut feature_names: Vec<String> = Vec::new();
    for c in weather_cols.iter().chain(ndvi_cols.iter()) {
        if feature_names.contains(c) {
            return Err(Error::Schema(format!(
                "column {c:?} appears in more than one input"
            )));
        }
        feature_names.push((*c).clone());
    }
    let pick = |src: &Source, cols: &[&String], key: &Key| -> Vec<Option<f64>> {
        let values = &src.rows[key];
        cols.iter()
            .map(|c| {
                let i = src.columns.iter().position(|x| x == *c).unwrap();
                values[i]
            })
            .collect()
    };

    let first = NaiveDate::from_ymd_opt(FIRST_DAY.0, FIRST_DAY.1, FIRST_DAY.2).unwrap();
    let last = NaiveDate::from_ymd_opt(LAST_DAY.0, LAST_DAY.1, LAST_DAY.2).unwrap();

    // BTreeMap keeps the join order independent of hash iteration.
    let keys: BTreeMap<(Region, NaiveDate), Key> = weather
        .rows
        .keys()
        .filter(|k| ndvi.rows.contains_key(k) && fires.rows.contains_key(k))
        .map(|&(d, r)| ((r, d), (d, r)))
        .collect();

    let mut report = LoadReport::default();
    let mut rows = Vec::with_capacity(keys.len());
    for key in keys.values() {
        report.rows_joined += 1;
        let mut values = pick(&weather, &weather_cols, key);
        values.extend(pick(&ndvi, &ndvi_cols, key));
        let area = fires.rows[key][area_idx];
        let (Some(features), Some(fire_area)) =
            (values.into_iter().collect::<Option<Vec<f64>>>(), area)
        else {
            report.dropped_missing += 1;
            continue;
        };
        if key.0 < first || key.0 > last {
            report.outside_date_range += 1;
        }
        rows.push(Record {
            date: key.0,
            region: key.1,
            features,
            fire_area,
            fire_label: None,
        });
    }
    if report.rows_joined == 0 {
        return Err(Error::Schema(
            "joining the three inputs on (Date, Region) produced zero rows".into(),
        ));
    }
    if report.outside_date_range > 0 {
        log::warn!(
            "{} rows fall outside {first}..{last}",
            report.outside_date_range
        );
    }
    if report.dropped_missing > 0 {
        log::info!(
            "dropped {} rows with missing values",
            report.dropped_missing
        );
    }

    let mut table = RecordTable::new(feature_names, rows)?;
    table.derive_labels()?;
    table.sort_by_region_date();
    Ok((table, report))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn inner_join_keeps_shared_key_only() {
        let dir = tempfile::tempdir().unwrap();
        let w = write(
            dir.path(),
            "w.csv",
            "Date,Region,Temperature_Max\n2010-01-01,NSW,30\n2010-01-02,NSW,31\n",
        );
        let n = write(
            dir.path(),
            "n.csv",
            "Date,Region,Vegetation_index_Mean\n2010-01-01,NSW,0.4\n2010-01-03,NSW,0.5\n",
        );
        let f = write(
            dir.path(),
            "f.csv",
            "Region,Date,Estimated_fire_area\nNSW,2010-01-01,12.5\nVI,2010-01-02,0\n",
        );
        let (table, report) = load_tables(&w, &n, &f).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(report.rows_joined, 1);
        assert_eq!(
            table.feature_names(),
            &[
                "Temperature_Max".to_string(),
                "Vegetation_index_Mean".to_string()
            ]
        );
        let row = &table.rows()[0];
        assert_eq!(row.features, vec![30.0, 0.4]);
        assert_eq!(row.fire_label, Some(1));
    }

    #[test]
    fn missing_cell_drops_row() {
        let dir = tempfile::tempdir().unwrap();
        let w = write(
            dir.path(),
            "w.csv",
            "Date,Region,A,B\n2010-01-01,SA,1,\n2010-01-02,SA,1,2\n",
        );
        let n = write(
            dir.path(),
            "n.csv",
            "Date,Region,C\n2010-01-01,SA,1\n2010-01-02,SA,1\n",
        );
        let f = write(
            dir.path(),
            "f.csv",
            "Date,Region,Estimated_fire_area\n2010-01-01,SA,0\n2010-01-02,SA,0\n",
        );
        let (table, report) = load_tables(&w, &n, &f).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(report.dropped_missing, 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nope.csv");
        assert!(matches!(load_tables(&p, &p, &p), Err(Error::Io { .. })));
    }

    #[test]
    fn empty_join_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let w = write(dir.path(), "w.csv", "Date,Region,A\n2010-01-01,SA,1\n");
        let n = write(dir.path(), "n.csv", "Date,Region,C\n2010-01-02,SA,1\n");
        let f = write(
            dir.path(),
            "f.csv",
            "Date,Region,Estimated_fire_area\n2010-01-01,SA,0\n",
        );
        assert!(matches!(load_tables(&w, &n, &f), Err(Error::Schema(_))));
    }

    #[test]
    fn negative_area_is_domain_error() {
        let dir = tempfile::tempdir().unwrap();
        let w = write(dir.path(), "w.csv", "Date,Region,A\n2010-01-01,SA,1\n");
        let n = write(dir.path(), "n.csv", "Date,Region,C\n2010-01-01,SA,1\n");
        let f = write(
            dir.path(),
            "f.csv",
            "Date,Region,Estimated_fire_area\n2010-01-01,SA,-3\n",
        );
        assert!(matches!(load_tables(&w, &n, &f), Err(Error::Domain(_))));
    }
}
