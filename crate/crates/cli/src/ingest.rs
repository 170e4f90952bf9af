//! CSV ingestion: comma delimiter, decimal-point numerics, optional header
//! auto-detected by a non-numeric first row.
//!
//! Malformed, empty, or non-finite cells are hard errors that name the row
//! and column — bin membership must be a function of the data, never of a
//! cleaning policy.

use std::path::Path;

use crate::CliError;

/// Parsed input: one id and one numeric row per CSV data row, in file order.
pub struct Dataset {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }
}

/// A column named on the command line: a 0-based index, or a header name.
enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    fn parse(text: &str) -> Self {
        match text.parse::<usize>() {
            Ok(index) => ColumnRef::Index(index),
            Err(_) => ColumnRef::Name(text.to_string()),
        }
    }

    fn is_name(&self) -> bool {
        matches!(self, ColumnRef::Name(_))
    }

    fn resolve(&self, header: Option<&csv::StringRecord>, width: usize) -> Result<usize, CliError> {
        match self {
            ColumnRef::Index(index) => {
                if *index >= width {
                    return Err(CliError::Data(format!(
                        "column index {index} out of range for a {width}-column file"
                    )));
                }
                Ok(*index)
            }
            ColumnRef::Name(name) => {
                let header = header.ok_or_else(|| {
                    CliError::Data(format!(
                        "column {name:?} referenced by name but the file has no header row"
                    ))
                })?;
                header
                    .iter()
                    .position(|cell| cell == name)
                    .ok_or_else(|| CliError::Data(format!("column {name:?} not found in header")))
            }
        }
    }
}

pub fn read_dataset(
    path: &Path,
    id_col: Option<&str>,
    value_cols: &[String],
) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(format!("cannot parse {}: {e}", path.display())))?;
    dataset_from_records(records, id_col, value_cols)
}

fn dataset_from_records(
    records: Vec<csv::StringRecord>,
    id_col: Option<&str>,
    value_cols: &[String],
) -> Result<Dataset, CliError> {
    let Some(first) = records.first() else {
        return Err(CliError::Data("no records".into()));
    };
    let width = first.len();
    let id_ref = id_col.map(ColumnRef::parse);
    let value_refs: Vec<ColumnRef> = value_cols.iter().map(|c| ColumnRef::parse(c)).collect();

    // A name reference forces a header; otherwise the first row is a header
    // iff any would-be value cell fails to parse as a number.
    let names_used =
        id_ref.as_ref().is_some_and(ColumnRef::is_name) || value_refs.iter().any(ColumnRef::is_name);
    let has_header = names_used || {
        let id_index = match &id_ref {
            Some(ColumnRef::Index(i)) => Some(*i),
            _ => None,
        };
        let candidates: Vec<usize> = if value_refs.is_empty() {
            (0..width).filter(|i| Some(*i) != id_index).collect()
        } else {
            value_refs
                .iter()
                .filter_map(|r| match r {
                    ColumnRef::Index(i) => Some(*i),
                    ColumnRef::Name(_) => None,
                })
                .collect()
        };
        candidates
            .iter()
            .any(|&i| first.get(i).is_none_or(|cell| cell.parse::<f64>().is_err()))
    };
    let header = has_header.then_some(first);

    let id_index = id_ref.map(|r| r.resolve(header, width)).transpose()?;
    let value_indexes: Vec<usize> = if value_refs.is_empty() {
        (0..width).filter(|i| Some(*i) != id_index).collect()
    } else {
        value_refs
            .iter()
            .map(|r| r.resolve(header, width))
            .collect::<Result<_, _>>()?
    };
    if value_indexes.is_empty() {
        return Err(CliError::Data("no value columns".into()));
    }

    let data_rows = &records[has_header as usize..];
    if data_rows.is_empty() {
        return Err(CliError::Data("no records".into()));
    }
    let mut ids = Vec::with_capacity(data_rows.len());
    let mut rows = Vec::with_capacity(data_rows.len());
    for (row_number, record) in data_rows.iter().enumerate() {
        // 1-based row numbers in messages, counting the header if present.
        let file_row = row_number + 1 + has_header as usize;
        if record.len() != width {
            return Err(CliError::Data(format!(
                "row {file_row} has {} columns, expected {width}",
                record.len()
            )));
        }
        ids.push(match id_index {
            Some(i) => record[i].to_string(),
            None => row_number.to_string(),
        });
        let mut row = Vec::with_capacity(value_indexes.len());
        for &i in &value_indexes {
            let cell = &record[i];
            if cell.trim().is_empty() {
                return Err(CliError::Data(format!(
                    "empty cell at row {file_row}, column {i}"
                )));
            }
            let value: f64 = cell.parse().map_err(|_| {
                CliError::Data(format!(
                    "non-numeric cell {cell:?} at row {file_row}, column {i}"
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Data(format!(
                    "non-finite cell {cell:?} at row {file_row}, column {i}"
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    Ok(Dataset { ids, rows })
}
