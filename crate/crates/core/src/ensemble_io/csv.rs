//! Comma-separated integer matrices. UTF-8, no quoting, `#` starts a comment
//! line and blank lines are skipped.

use std::fs;
use std::path::Path;

use super::bagging::Dataset;
use crate::entropy::LabelVector;
use crate::error::{Error, Result};
use crate::objective::EnsemblePredictions;

fn parse_error(source: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Data lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_id_row(source: &str, line_no: usize, line: &str) -> Result<Vec<u32>> {
    line.split(',')
        .enumerate()
        .map(|(col, cell)| {
            let cell = cell.trim();
            if cell.starts_with('-') && cell[1..].parse::<u64>().is_ok() {
                return Err(parse_error(source, line_no, col + 1, format!("negative class id '{cell}'")));
            }
            cell.parse::<u32>().map_err(|_| {
                parse_error(source, line_no, col + 1, format!("'{cell}' is not a nonnegative integer class id"))
            })
        })
        .collect()
}

/// Parses a predictions matrix (one row per classifier) and a single-row
/// label vector. The class universe is `1 + max id` over both.
pub fn parse_predictions(predictions: &str, labels: &str) -> Result<EnsemblePredictions> {
    parse_predictions_named(predictions, "predictions", labels, "labels")
}

fn parse_predictions_named(
    predictions: &str,
    pred_name: &str,
    labels: &str,
    labels_name: &str,
) -> Result<EnsemblePredictions> {
    let labels = parse_labels_named(labels, labels_name)?;
    let d = labels.len();
    let mut rows = Vec::new();
    for (line_no, line) in data_lines(predictions) {
        let row = parse_id_row(pred_name, line_no, line)?;
        if row.len() != d {
            return Err(parse_error(
                pred_name,
                line_no,
                row.len().min(d) + 1,
                format!("row has {} fields but the labels have {d}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(pred_name, 1, 1, "no prediction rows found"));
    }
    let max_id = rows
        .iter()
        .flatten()
        .chain(labels.iter())
        .copied()
        .max()
        .unwrap_or(0);
    let n_classes = max_id + 1;
    let rows = rows
        .into_iter()
        .map(|r| LabelVector::new(r, n_classes))
        .collect::<Result<Vec<_>>>()?;
    EnsemblePredictions::new(rows, LabelVector::new(labels, n_classes)?)
}

/// Parses a single-row label file.
pub fn parse_labels(text: &str) -> Result<Vec<u32>> {
    parse_labels_named(text, "labels")
}

fn parse_labels_named(text: &str, name: &str) -> Result<Vec<u32>> {
    let mut lines = data_lines(text);
    let (line_no, line) = lines
        .next()
        .ok_or_else(|| parse_error(name, 1, 1, "no label row found"))?;
    if let Some((extra, _)) = lines.next() {
        return Err(parse_error(name, extra, 1, "label file must contain exactly one row"));
    }
    parse_id_row(name, line_no, line)
}

pub fn load_predictions(
    predictions_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<EnsemblePredictions> {
    let p = predictions_path.as_ref();
    let l = labels_path.as_ref();
    parse_predictions_named(
        &fs::read_to_string(p)?,
        &p.display().to_string(),
        &fs::read_to_string(l)?,
        &l.display().to_string(),
    )
}

fn join_ids(values: &[u32]) -> String {
    values
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn format_predictions(ens: &EnsemblePredictions) -> String {
    let mut out = String::new();
    for row in ens.rows() {
        out.push_str(&join_ids(row.values()));
        out.push('\n');
    }
    out
}

pub fn format_labels(labels: &LabelVector) -> String {
    let mut out = join_ids(labels.values());
    out.push('\n');
    out
}

pub fn write_predictions(
    ens: &EnsemblePredictions,
    predictions_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(predictions_path, format_predictions(ens))?;
    fs::write(labels_path, format_labels(ens.labels()))?;
    Ok(())
}

/// Parses `d` lines of real features followed by an integer label. A first
/// data line that does not parse as numbers is treated as a header.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    parse_dataset_named(text, "dataset")
}

fn parse_dataset_named(text: &str, name: &str) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, (line_no, line)) in data_lines(text).enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(parse_error(name, line_no, 1, "need at least one feature and a label"));
        }
        let (label_cell, feature_cells) = cells.split_last().expect("len >= 2");
        let parsed: std::result::Result<Vec<f64>, usize> = feature_cells
            .iter()
            .enumerate()
            .map(|(c, s)| s.parse::<f64>().map_err(|_| c))
            .collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if idx == 0 && label_cell.parse::<u32>().is_err() => continue,
            Err(c) => {
                return Err(parse_error(name, line_no, c + 1, format!("'{}' is not a number", feature_cells[c])));
            }
        };
        let label = label_cell.parse::<u32>().map_err(|_| {
            parse_error(name, line_no, cells.len(), format!("'{label_cell}' is not a nonnegative integer label"))
        })?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_error(
                    name,
                    line_no,
                    row.len().min(w) + 1,
                    format!("row has {} features, expected {w}", row.len()),
                ));
            }
            Some(_) => {}
        }
        features.push(row);
        labels.push(label);
    }
    Dataset::new(features, LabelVector::from_values(labels).map_err(|_| parse_error(name, 1, 1, "dataset has no rows"))?)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let p = path.as_ref();
    parse_dataset_named(&fs::read_to_string(p)?, &p.display().to_string())
}
