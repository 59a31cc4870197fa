use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            line,
            column: 0,
            message: e.to_string(),
        }
    };
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("cannot parse {field:?} as a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 0,
            message: "no data rows".into(),
        });
    }
    Ok(Table { headers, rows })
}

fn column(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse {
            line: 1,
            column: 0,
            message: format!("column '{name}' not found"),
        })
}

/// Consecutive columns `{prefix}1, {prefix}2, ...`.
fn numbered(headers: &[String], prefix: &str) -> Vec<usize> {
    (1..)
        .map_while(|k| headers.iter().position(|h| *h == format!("{prefix}{k}")))
        .collect()
}

/// Reads a dataset with header `x1,...,xd,y`.
pub fn read_dataset_from<R: Read>(reader: R) -> Result<Dataset> {
    let table = parse_table(reader)?;
    let xs = numbered(&table.headers, "x");
    if xs.is_empty() {
        column(&table.headers, "x1")?;
    }
    let y = column(&table.headers, "y")?;
    let points = table
        .rows
        .iter()
        .map(|r| xs.iter().map(|&j| r[j]).collect())
        .collect();
    let responses = table.rows.iter().map(|r| r[y]).collect();
    Dataset::new(points, responses)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_from(std::fs::File::open(path)?)
}

/// Reads simulator runs with header `x1..xd,t1..tq,y`; inputs are `x` then `θ`.
pub fn read_simulator_runs(path: &Path, control_dim: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let table = parse_table(std::fs::File::open(path)?)?;
    let xs = numbered(&table.headers, "x");
    if xs.len() != control_dim {
        return Err(Error::Parse {
            line: 1,
            column: 0,
            message: format!("expected {control_dim} x columns, found {}", xs.len()),
        });
    }
    let ts = numbered(&table.headers, "t");
    if ts.is_empty() {
        column(&table.headers, "t1")?;
    }
    let y = column(&table.headers, "y")?;
    let inputs = table
        .rows
        .iter()
        .map(|r| xs.iter().chain(&ts).map(|&j| r[j]).collect())
        .collect();
    let outputs = table.rows.iter().map(|r| r[y]).collect();
    Ok((inputs, outputs))
}
