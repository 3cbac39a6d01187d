use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Standard output or a file, buffered.
pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut out = open(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::numeric(format!("json encoding: {e}")))?;
    writeln!(out).and_then(|_| out.flush()).map_err(io_error)
}

/// One header row, then `rows`; floats in shortest round-trip form.
pub fn write_csv(path: Option<&Path>, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let out = open(path)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn io_error(e: io::Error) -> CliError {
    CliError::usage(format!("write failed: {e}"))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::usage(format!("write failed: {e}"))
}
