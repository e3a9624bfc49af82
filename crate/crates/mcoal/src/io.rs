//! Input parsing and JSON/CSV output. Block indices are 1-based in every
//! file this module writes.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

/// Version stamped into every JSON document as `schema_version`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0} exists; pass --force to overwrite")]
    OutputExists(PathBuf),
    #[error("cannot parse `{0}` as a number")]
    BadNumber(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Comma-separated floats, e.g. `1.1,0.8,0.5`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, IoError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| IoError::BadNumber(t.to_string())))
        .collect()
}

/// Numbers separated by whitespace or commas; `#` starts a comment.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            out.push(tok.parse().map_err(|_| IoError::BadNumber(tok.to_string()))?);
        }
    }
    Ok(out)
}

/// Standard output, or a file that is only replaced when `force` is set.
pub fn open_output(path: Option<&Path>, force: bool) -> Result<Box<dyn Write>, IoError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let file: io::Result<File> =
                if force { File::create(p) } else { OpenOptions::new().write(true).create_new(true).open(p) };
            match file {
                Ok(f) => Ok(Box::new(BufWriter::new(f))),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(IoError::OutputExists(p.to_path_buf())),
                Err(source) => Err(IoError::File { path: p.to_path_buf(), source }),
            }
        }
    }
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(w: &mut dyn Write, body: &T) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut *w, &Versioned { schema_version: SCHEMA_VERSION, body })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(&mut *w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    drop(out);
    w.flush()?;
    Ok(())
}

/// `1;4;5` for the 0-based block `[0, 3, 4]`.
pub fn one_based(block: &[usize]) -> String {
    block.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

pub fn one_based_blocks(blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect()
}

/// Excursion table of a breadth-first walk.
#[derive(Debug, Serialize)]
pub struct ComponentRow {
    pub component_index: usize,
    pub start: f64,
    pub end: f64,
    pub length: f64,
    pub members: String,
}

#[derive(Debug, Serialize)]
pub struct EventRow {
    pub time: f64,
    pub left: String,
    pub right: String,
}

/// Uribe's diagram, one line per row.
#[derive(Debug, Serialize)]
pub struct DiagramRow {
    pub line_id: usize,
    pub block: usize,
    pub intercept: f64,
    pub slope: f64,
    pub stop_time: Option<f64>,
    pub target: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct PathRow {
    pub s: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

#[derive(Debug, Serialize)]
pub struct ExcursionRow {
    pub start: f64,
    pub end: f64,
    pub length: f64,
}
