//! CSV input and output. Files carry a header row and one sample per row.

use std::io::Write;
use std::path::Path;

use mggp::Dataset;

use crate::error::CliError;

/// Loads the named output and input columns.
pub fn read_dataset(path: &Path, output: &str, inputs: &[String]) -> Result<Dataset, CliError> {
    let data_err = |msg: String| CliError::Data(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| data_err(e.to_string()))?
        .clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("missing column `{name}`")))
    };
    let y_idx = index(output)?;
    let u_idx = inputs
        .iter()
        .map(|c| index(c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut y = Vec::new();
    let mut u = vec![Vec::new(); inputs.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(e.to_string()))?;
        let field = |i: usize, name: &str| -> Result<f64, CliError> {
            let text = record.get(i).unwrap_or("");
            text.parse().map_err(|_| {
                data_err(format!(
                    "row {}: column `{name}` value `{text}` is not a number",
                    row + 1
                ))
            })
        };
        y.push(field(y_idx, output)?);
        for ((col, &i), name) in u.iter_mut().zip(&u_idx).zip(inputs) {
            col.push(field(i, name)?);
        }
    }
    Dataset::new(y, u).map_err(|e| data_err(e.to_string()))
}

/// Writes equally long columns under the given header.
pub fn write_columns<W: Write>(
    out: W,
    header: &[&str],
    columns: &[&[f64]],
) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Runtime(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io)?;
    let rows = columns.first().map_or(0, |c| c.len());
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| c[r].to_string()))
            .map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Runtime(format!("writing CSV: {e}")))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
