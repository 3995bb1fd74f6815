//! CSV loading and writing, plus JSON persistence for fitted models.
//!
//! Missing cells are exactly `NA` or the empty string. Numbers are written
//! with the shortest representation that parses back to the same bits.

use std::fs;
use std::path::{Path, PathBuf};

use relimp_core::{Dataset, DatasetError, GbmModel};
use thiserror::Error;

/// Header name treated as row labels rather than a numeric column.
pub const ROW_LABEL_COLUMN: &str = "period";

const MISSING_TOKEN: &str = "NA";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: no header row")]
    NoHeader { path: PathBuf },
    /// `row` counts data rows from 1; the header is row 0.
    #[error("row {row}, column `{column}`: cannot parse `{cell}` as a finite number")]
    UnparseableCell { row: usize, column: String, cell: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn parse_cell(cell: &str) -> Result<Option<f64>, ()> {
    if cell.is_empty() || cell == MISSING_TOKEN {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(()),
    }
}

/// Parses CSV text into a dataset. A leading `period` column becomes the
/// row labels.
pub fn parse_csv(text: &str, response: &str, path: &Path) -> Result<Dataset, IoError> {
    let csv_err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(IoError::NoHeader { path: path.to_path_buf() });
    }
    let label_col = header.iter().position(|h| h == ROW_LABEL_COLUMN);
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut c = 0;
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == label_col {
                labels.push(cell.to_owned());
                continue;
            }
            let value = parse_cell(cell).map_err(|()| IoError::UnparseableCell {
                row: r + 1,
                column: header[i].clone(),
                cell: cell.to_owned(),
            })?;
            columns[c].push(value);
            c += 1;
        }
    }

    let response_index = names
        .iter()
        .position(|n| n == response)
        .ok_or_else(|| DatasetError::MissingResponseColumn(response.into()))?;
    let row_labels = label_col.map(|_| labels);
    Ok(Dataset::new(names, columns, response_index, row_labels)?)
}

pub fn load_csv(path: &Path, response: &str) -> Result<Dataset, IoError> {
    let text = read_to_string(path)?;
    parse_csv(&text, response, path)
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Shortest decimal form that round-trips; missing cells become `NA`.
pub fn format_value(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => MISSING_TOKEN.to_owned(),
    }
}

/// Renders a CSV document. Fields are quoted only when required.
pub fn csv_string<I, R, S>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        let fields: Vec<S> = row.into_iter().collect();
        writer.write_record(fields.iter().map(AsRef::as_ref)).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Serializes a dataset in the format `load_csv` reads.
pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let mut header: Vec<&str> = Vec::new();
    if dataset.row_labels().is_some() {
        header.push(ROW_LABEL_COLUMN);
    }
    header.extend(dataset.column_names().iter().map(String::as_str));
    let rows = (0..dataset.n_rows()).map(|r| {
        let mut fields: Vec<String> = Vec::new();
        if let Some(labels) = dataset.row_labels() {
            fields.push(labels[r].clone());
        }
        fields.extend((0..dataset.n_cols()).map(|c| format_value(dataset.column(c)[r])));
        fields
    });
    csv_string(&header, rows)
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<(), IoError> {
    write_file(path, dataset_to_csv(dataset).as_bytes())
}

pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Compact JSON: an ensemble of many trees is read by machines only.
pub fn model_json(model: &GbmModel) -> String {
    let mut s = serde_json::to_string(model).expect("serializable model");
    s.push('\n');
    s
}

pub fn save_model(model: &GbmModel, path: &Path) -> Result<(), IoError> {
    write_file(path, model_json(model).as_bytes())
}

pub fn load_model(path: &Path) -> Result<GbmModel, IoError> {
    read_json(path)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })
}
