use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::DateTime;

use crate::error::{Error, Result};

/// A single `(user, location, time)` record with external ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckIn {
    pub user: String,
    pub location: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Reads the SNAP check-in layout: `user \t time \t lat \t lon \t location`.
pub fn parse_checkins(path: impl AsRef<Path>) -> Result<Vec<CheckIn>> {
    let path = path.as_ref();
    parse_checkins_from(open(path)?).map_err(|e| attach_path(e, path))
}

pub fn parse_checkins_from(reader: impl BufRead) -> Result<Vec<CheckIn>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let timestamp = parse_timestamp(fields[1]).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("bad timestamp `{}`", fields[1]),
        })?;
        for (name, raw) in [("latitude", fields[2]), ("longitude", fields[3])] {
            if raw.trim().parse::<f64>().map_or(true, |v| !v.is_finite()) {
                return Err(Error::Parse { line: line_no, msg: format!("bad {name} `{raw}`") });
            }
        }
        if fields[0].is_empty() || fields[4].is_empty() {
            return Err(Error::Parse { line: line_no, msg: "empty user or location id".into() });
        }
        out.push(CheckIn {
            user: fields[0].to_owned(),
            location: fields[4].to_owned(),
            timestamp,
        });
    }
    Ok(out)
}

fn parse_timestamp(raw: &str) -> Option<i64> {
    let ts = DateTime::parse_from_rfc3339(raw.trim()).ok()?.timestamp();
    (ts >= 0).then_some(ts)
}

/// Reads `user \t user` friendship pairs as given; no deduplication.
pub fn parse_edges(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    parse_edges_from(open(path)?).map_err(|e| attach_path(e, path))
}

pub fn parse_edges_from(reader: impl BufRead) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                out.push((a.to_owned(), b.to_owned()))
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected two tab-separated user ids".into(),
                })
            }
        }
    }
    Ok(out)
}

fn attach_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    }
}
