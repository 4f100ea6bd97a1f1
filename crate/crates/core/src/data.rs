//! Tree datasets: the embedded black cherry table and CSV ingestion.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::regress::pearson;
use crate::units::{convert, Dimension, Quantity, Unit, UnitError};

/// Meyer's black cherry data as printed: diameter at breast height
/// (inches), total height (feet), volume (cubic feet).
pub const CHERRY_TABLE: [(f64, f64, f64); 31] = [
    (8.3, 70.0, 10.3),
    (8.6, 65.0, 10.3),
    (8.8, 63.0, 10.2),
    (10.5, 72.0, 16.4),
    (10.7, 81.0, 18.8),
    (10.8, 83.0, 19.7),
    (11.0, 66.0, 15.6),
    (11.0, 75.0, 18.2),
    (11.1, 80.0, 22.6),
    (11.2, 75.0, 19.9),
    (11.3, 79.0, 24.2),
    (11.4, 76.0, 21.0),
    (11.4, 76.0, 21.4),
    (11.7, 69.0, 21.3),
    (12.0, 75.0, 19.1),
    (12.9, 74.0, 22.2),
    (12.9, 85.0, 33.8),
    (13.3, 86.0, 27.4),
    (13.7, 71.0, 25.7),
    (13.8, 64.0, 24.9),
    (14.0, 78.0, 34.5),
    (14.2, 80.0, 31.7),
    (14.5, 74.0, 36.3),
    (16.0, 72.0, 38.3),
    (16.3, 77.0, 42.6),
    (17.3, 81.0, 55.4),
    (17.5, 82.0, 55.7),
    (17.9, 80.0, 58.3),
    (18.0, 80.0, 51.5),
    (18.0, 80.0, 51.0),
    (20.6, 87.0, 77.0),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("dataset has no records")]
    Empty,
    #[error("expected header `dbh,height,volume`, found `{0}`")]
    Header(String),
    #[error("row {row}: expected 3 fields, found {found}")]
    FieldCount { row: u64, found: usize },
    #[error("row {row}: {column} value `{value}` is not a number")]
    NonNumeric { row: u64, column: &'static str, value: String },
    #[error("row {row}: {column} must be positive, got {value}")]
    NonPositive { row: u64, column: &'static str, value: f64 },
    #[error("{column} unit `{unit}` has dimension {found}, expected {expected}")]
    UnitDimension { column: &'static str, unit: String, found: Dimension, expected: Dimension },
    #[error("record ids must be 1..=n in order")]
    BadIds,
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        DataError::Csv(e.to_string())
    }
}

/// One felled tree, in canonical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeRecord {
    pub id: usize,
    /// Diameter at breast height, ft.
    pub dbh: f64,
    /// Total height, ft.
    pub height: f64,
    /// Stem volume, ft³.
    pub volume: f64,
}

impl TreeRecord {
    /// `V`, `d`, `h` as quantities, keyed for Pi group evaluation.
    pub fn quantities(&self) -> BTreeMap<String, Quantity> {
        BTreeMap::from([
            ("V".to_string(), Quantity::cubic_feet(self.volume)),
            ("d".to_string(), Quantity::feet(self.dbh)),
            ("h".to_string(), Quantity::feet(self.height)),
        ])
    }
}

/// Units in which a dataset's columns were recorded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceUnits {
    pub dbh: Unit,
    pub height: Unit,
    pub volume: Unit,
}

impl SourceUnits {
    pub fn new(dbh: Unit, height: Unit, volume: Unit) -> Result<Self, DataError> {
        let check = |column: &'static str, unit: &Unit, expected: Dimension| {
            if unit.dimension() == expected {
                Ok(())
            } else {
                Err(DataError::UnitDimension {
                    column,
                    unit: unit.name().to_string(),
                    found: unit.dimension(),
                    expected,
                })
            }
        };
        check("dbh", &dbh, Dimension::length())?;
        check("height", &height, Dimension::length())?;
        check("volume", &volume, Dimension::length_pow(3))?;
        Ok(SourceUnits { dbh, height, volume })
    }

    pub fn parse(dbh: &str, height: &str, volume: &str) -> Result<Self, DataError> {
        Self::new(dbh.parse()?, height.parse()?, volume.parse()?)
    }

    /// Inches, feet, cubic feet.
    pub fn cherry() -> Self {
        Self::parse("in", "ft", "ft3").expect("fixed units")
    }

    pub fn canonical() -> Self {
        Self::new(Unit::foot(), Unit::foot(), Unit::cubic_foot()).expect("fixed units")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    records: Vec<TreeRecord>,
    pub source_units: SourceUnits,
}

impl Dataset {
    pub fn new(name: impl Into<String>, records: Vec<TreeRecord>, source_units: SourceUnits) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        if records.iter().enumerate().any(|(i, r)| r.id != i + 1) {
            return Err(DataError::BadIds);
        }
        Ok(Dataset { name: name.into(), records, source_units })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source_units(&self) -> &SourceUnits {
        &self.source_units
    }

    pub fn records(&self) -> &[TreeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dbh(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.dbh).collect()
    }

    pub fn heights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.height).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.volume).collect()
    }

    /// The record with the largest volume.
    pub fn largest(&self) -> &TreeRecord {
        self.records
            .iter()
            .max_by(|a, b| a.volume.total_cmp(&b.volume))
            .expect("non-empty dataset")
    }
}

/// The 31-tree black cherry dataset, diameters converted to feet.
pub fn cherry_dataset() -> Dataset {
    let units = SourceUnits::cherry();
    let ft = Unit::foot();
    let records = CHERRY_TABLE
        .iter()
        .enumerate()
        .map(|(i, &(d, h, v))| TreeRecord {
            id: i + 1,
            dbh: convert(d, &units.dbh, &ft).expect("length unit"),
            height: h,
            volume: v,
        })
        .collect();
    Dataset::new("cherry", records, units).expect("embedded table is valid")
}

const HEADER: [&str; 3] = ["dbh", "height", "volume"];

/// Read `dbh,height,volume` rows recorded in `units`.
pub fn read_csv<R: Read>(reader: R, name: &str, units: &SourceUnits) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(DataError::Empty);
    }
    if header.iter().ne(HEADER) {
        return Err(DataError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let (ft, ft3) = (Unit::foot(), Unit::cubic_foot());
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(records.len() as u64 + 2, |p| p.line());
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != 3 {
            return Err(DataError::FieldCount { row: line, found: row.len() });
        }
        let mut values = [0.0; 3];
        for (k, column) in HEADER.iter().enumerate() {
            let cell = &row[k];
            let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                row: line,
                column,
                value: cell.to_string(),
            })?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(DataError::NonPositive { row: line, column, value: v });
            }
            values[k] = v;
        }
        records.push(TreeRecord {
            id: records.len() + 1,
            dbh: convert(values[0], &units.dbh, &ft)?,
            height: convert(values[1], &units.height, &ft)?,
            volume: convert(values[2], &units.volume, &ft3)?,
        });
    }
    Dataset::new(name, records, units.clone())
}

pub fn load_csv(path: impl AsRef<Path>, units: &SourceUnits) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    read_csv(file, &name, units)
}

/// Write the dataset as `dbh,height,volume` in `units`.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W, units: &SourceUnits) -> Result<(), DataError> {
    let (ft, ft3) = (Unit::foot(), Unit::cubic_foot());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(HEADER)?;
    for r in &ds.records {
        w.write_record([
            convert(r.dbh, &ft, &units.dbh)?.to_string(),
            convert(r.height, &ft, &units.height)?.to_string(),
            convert(r.volume, &ft3, &units.volume)?.to_string(),
        ])?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean_dbh_ft: f64,
    pub mean_height_ft: f64,
    pub mean_volume_ft3: f64,
    /// `None` when the correlation is undefined (fewer than two records or
    /// a constant column).
    pub corr_dbh_height: Option<f64>,
    pub corr_dbh_volume: Option<f64>,
    pub corr_height_volume: Option<f64>,
}

// Sorting first makes the mean independent of record order.
fn mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn summary(ds: &Dataset) -> Summary {
    let (d, h, v) = (ds.dbh(), ds.heights(), ds.volumes());
    Summary {
        n: ds.len(),
        mean_dbh_ft: mean(&d),
        mean_height_ft: mean(&h),
        mean_volume_ft3: mean(&v),
        corr_dbh_height: pearson(&d, &h).ok(),
        corr_dbh_volume: pearson(&d, &v).ok(),
        corr_height_volume: pearson(&h, &v).ok(),
    }
}
