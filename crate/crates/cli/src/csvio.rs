//! CSV ingestion and export.
//!
//! Comma separated, '.' decimal point, at most one header row, numbers
//! unquoted. Values are written with 17 significant digits so that a
//! written matrix reads back bit-identical.

use std::io::{Read, Write};
use std::path::Path;

use clustersift::data::{validate_matrix, DataMatrix};

use crate::error::CliError;

/// Parse CSV text. Row numbers in errors count data rows from 1.
pub fn parse_matrix<R: Read>(input: R, has_header: bool) -> Result<DataMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (j, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("row {}: {e}", j + 1)))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(i, field)| {
                field.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "row {}, column {}: cannot parse '{field}' as a number",
                        j + 1,
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(validate_matrix(&rows)?)
}

pub fn read_matrix(path: &Path, has_header: bool) -> Result<(DataMatrix, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let data = parse_matrix(bytes.as_slice(), has_header)?;
    Ok((data, bytes))
}

/// Scientific notation, 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix<W: Write>(out: W, data: &DataMatrix, header: bool) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    if header {
        w.write_record((1..=data.p()).map(|i| format!("x{i}")))
            .map_err(csv_err)?;
    }
    for row in data.rows() {
        w.write_record(row.iter().map(|&v| format_value(v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
