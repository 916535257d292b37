//! Plain-CSV readers and writers. No header unless `--header` is given.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use khem_core::basegen::Points;
use khem_core::EnsembleBase;

use crate::error::CliError;

fn records(path: &Path, header: bool) -> Result<Vec<Vec<String>>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_owned).collect())
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    row: usize,
    field: &str,
    what: &str,
) -> Result<T, CliError> {
    field.parse().map_err(|_| {
        CliError::Input(format!(
            "{}: row {}: {field:?} is not {what}",
            path.display(),
            row + 1
        ))
    })
}

/// `n × l` integer label matrix. Negative labels are allowed; only equality
/// matters.
pub fn read_base(path: &Path, header: bool) -> Result<EnsembleBase, CliError> {
    let rows = records(path, header)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            rec.iter()
                .map(|f| parse_field::<i64>(path, i, f, "an integer label").map(|v| v as u64))
                .collect::<Result<Vec<u64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnsembleBase::from_rows(&rows)?)
}

pub fn read_points(path: &Path, header: bool) -> Result<Points, CliError> {
    let rows = records(path, header)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            rec.iter()
                .map(|f| parse_field::<f64>(path, i, f, "a number"))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no rows", path.display())));
    }
    Ok(Points::from_rows(&rows)?)
}

/// One integer label per line.
pub fn read_labels(path: &Path, header: bool) -> Result<Vec<i64>, CliError> {
    records(path, header)?
        .iter()
        .enumerate()
        .map(|(i, rec)| match rec.as_slice() {
            [field] => parse_field(path, i, field, "an integer label"),
            _ => Err(CliError::Input(format!(
                "{}: row {}: expected one label, found {} fields",
                path.display(),
                i + 1,
                rec.len()
            ))),
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", path.display())))
}

/// Writes `rows` as comma-separated lines.
pub fn write_rows<R, T>(path: &Path, rows: R) -> Result<(), CliError>
where
    R: IntoIterator,
    R::Item: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    let mut out = create(path)?;
    let fail = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    for row in rows {
        let line: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(fail)?;
    }
    out.flush().map_err(fail)
}

pub fn write_lines<T: std::fmt::Display>(path: &Path, values: &[T]) -> Result<(), CliError> {
    write_rows(path, values.iter().map(std::iter::once))
}
