use std::fs::File;
use std::path::{Path, PathBuf};

use foldstat::Dataset;

use crate::error::CliError;

/// Which columns of a CSV file become the label and the features.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub has_header: bool,
    pub label: Option<String>,
    /// `None` selects every column except the label.
    pub features: Option<Vec<String>>,
    pub add_intercept: bool,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            has_header: true,
            label: None,
            features: None,
            add_intercept: false,
        }
    }
}

struct Table {
    names: Vec<String>,
    records: csv::StringRecordsIntoIter<File>,
}

fn open(path: &Path, has_header: bool) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(has_header).flexible(false).from_reader(file);
    let names = if has_header {
        reader
            .headers()
            .map_err(|e| CliError::csv(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect()
    } else {
        // without a header, columns are named by 1-based position
        let width = reader
            .records()
            .next()
            .transpose()
            .map_err(|e| CliError::csv(path, e))?
            .map_or(0, |r| r.len());
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        reader = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(file);
        (1..=width).map(|c| c.to_string()).collect()
    };
    Ok(Table {
        names,
        records: reader.into_records(),
    })
}

fn column_index(names: &[String], name: &str, path: &Path) -> Result<usize, CliError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| CliError::data(format!("{}: no column named {name:?} (have {})", path.display(), names.join(","))))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64, CliError> {
    let value: f64 = cell
        .trim()
        .parse()
        .map_err(|_| CliError::data(format!("cannot parse {cell:?} as a number at row {row}, column {column:?}")))?;
    if !value.is_finite() {
        return Err(CliError::data(format!("non-finite value {cell:?} at row {row}, column {column:?}")));
    }
    Ok(value)
}

/// Reads the selected columns into a row-major dataset. Rows are numbered
/// from 1, not counting the header, in error messages.
pub fn ingest_csv(spec: &DatasetSpec) -> Result<Dataset, CliError> {
    let Table { names, records } = open(&spec.path, spec.has_header)?;
    let label = spec
        .label
        .as_deref()
        .map(|name| column_index(&names, name, &spec.path))
        .transpose()?;
    let features: Vec<usize> = match &spec.features {
        Some(list) => list
            .iter()
            .map(|name| column_index(&names, name, &spec.path))
            .collect::<Result<_, _>>()?,
        None => (0..names.len()).filter(|&c| Some(c) != label).collect(),
    };
    if features.is_empty() && !spec.add_intercept {
        return Err(CliError::argument("no feature columns selected"));
    }
    let width = features.len() + spec.add_intercept as usize;
    let mut values = Vec::new();
    let mut labels = label.map(|_| Vec::new());
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::csv(&spec.path, e))?;
        if spec.add_intercept {
            values.push(1.0);
        }
        for &c in &features {
            values.push(parse_cell(&record[c], row, &names[c])?);
        }
        if let (Some(c), Some(ys)) = (label, labels.as_mut()) {
            ys.push(parse_cell(&record[c], row, &names[c])?);
        }
    }
    if values.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", spec.path.display())));
    }
    Dataset::new(width, values, labels).map_err(CliError::from)
}

/// Reads one column as raw strings, for sketches. `column` defaults to the
/// first column.
pub fn ingest_items(path: &Path, has_header: bool, column: Option<&str>) -> Result<Vec<String>, CliError> {
    let Table { names, records } = open(path, has_header)?;
    let c = match column {
        Some(name) => column_index(&names, name, path)?,
        None => 0,
    };
    records
        .map(|r| {
            let r = r.map_err(|e| CliError::csv(path, e))?;
            Ok(r[c].to_string())
        })
        .collect()
}
