use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Standard output, or a file that must not already exist unless
/// `overwrite` is set.
pub fn open_sink(path: Option<&Path>, overwrite: bool) -> Result<Box<dyn Write>, CliError> {
    let Some(path) = path else {
        return Ok(Box::new(io::stdout().lock()));
    };
    let mut opts = OpenOptions::new();
    opts.write(true);
    if overwrite {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    match opts.open(path) {
        Ok(f) => Ok(Box::new(io::BufWriter::new(f))),
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(CliError::usage(format!(
            "{} exists; pass --overwrite to replace it",
            path.display()
        ))),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// One lattice point of a sweep. Numeric fields are absent when the point
/// failed; `status` then carries the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub xi: Vec<f64>,
    pub value: Option<f64>,
    pub gradient: Option<Vec<f64>>,
    pub residual: Option<f64>,
    pub status: String,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.value.is_some()
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=m).map(|j| format!("xi_{j}")).collect();
    h.push("value".into());
    h.extend((1..=m).map(|j| format!("grad_{j}")));
    h.push("residual".into());
    h.push("status".into());
    h
}

pub fn write_rows_csv<W: Write>(out: W, m: usize, rows: &[Row]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(m))?;
    for row in rows {
        let mut rec: Vec<String> = row.xi.iter().copied().map(float).collect();
        rec.push(row.value.map(float).unwrap_or_default());
        match &row.gradient {
            Some(g) => rec.extend(g.iter().copied().map(float)),
            None => rec.extend(std::iter::repeat_n(String::new(), m)),
        }
        rec.push(row.residual.map(float).unwrap_or_default());
        rec.push(row.status.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, S: Serialize>(mut out: W, value: &S) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
