use std::fs;
use std::path::Path;

use super::GepInstance;
use crate::error::{GepError, Result};

/// Write an instance as a JSON document.
pub fn save_instance(path: impl AsRef<Path>, inst: &GepInstance) -> Result<()> {
    let text = serde_json::to_string_pretty(inst).map_err(|e| GepError::Parse {
        path: path.as_ref().display().to_string(),
        message: e.to_string(),
    })?;
    fs::write(path, text)?;
    Ok(())
}

/// Read and validate an instance document.
pub fn load_instance(path: impl AsRef<Path>) -> Result<GepInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let inst: GepInstance = serde_json::from_str(&text).map_err(|e| GepError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    inst.validate()?;
    Ok(inst)
}

/// Input series read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub demand: Vec<f64>,
    pub cap_factor: Vec<Vec<f64>>,
    pub z_ref: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }
}

/// Read `t,demand,cf_1..cf_G,ref_1..ref_R`. Rows must have consecutive `t`.
/// Row numbers in errors count data rows from 1.
pub fn load_timeseries_csv(path: impl AsRef<Path>, g: usize, r: usize) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| csv_err(0, e))?;

    let mut expected = vec!["t".to_string(), "demand".to_string()];
    expected.extend((1..=g).map(|i| format!("cf_{i}")));
    expected.extend((1..=r).map(|i| format!("ref_{i}")));
    let header = reader.headers().map_err(|e| csv_err(0, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(GepError::Ingest {
            row: 0,
            message: "no data rows".into(),
        });
    }
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(GepError::Ingest {
            row: 0,
            message: format!("header {:?} does not match expected {:?}", got, expected),
        });
    }

    let mut series = TimeSeries {
        demand: Vec::new(),
        cap_factor: Vec::new(),
        z_ref: Vec::new(),
    };
    let mut first_t: Option<i64> = None;
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(row, e))?;
        if rec.len() != expected.len() {
            return Err(GepError::Ingest {
                row,
                message: format!("expected {} cells, found {}", expected.len(), rec.len()),
            });
        }
        let t: i64 = rec[0].parse().map_err(|_| GepError::Ingest {
            row,
            message: format!("t = {:?} is not an integer", &rec[0]),
        })?;
        let start = *first_t.get_or_insert(t);
        let want = start + i as i64;
        if t != want {
            let kind = if t < want { "unsorted or duplicated" } else { "gap in" };
            return Err(GepError::Ingest {
                row,
                message: format!("{kind} time index: expected t = {want}, found {t}"),
            });
        }
        let mut vals = Vec::with_capacity(rec.len() - 1);
        for (col, cell) in rec.iter().enumerate().skip(1) {
            let v: f64 = cell.parse().map_err(|_| GepError::Ingest {
                row,
                message: format!("column {} = {:?} is not numeric", expected[col], cell),
            })?;
            vals.push(v);
        }
        series.demand.push(vals[0]);
        series.cap_factor.push(vals[1..1 + g].to_vec());
        series.z_ref.push(vals[1 + g..].to_vec());
    }
    if series.is_empty() {
        return Err(GepError::Ingest {
            row: 0,
            message: "no data rows".into(),
        });
    }
    Ok(series)
}

fn csv_err(row: usize, e: csv::Error) -> GepError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GepError::Io(io),
        other => GepError::Ingest {
            row,
            message: format!("{other:?}"),
        },
    }
}
