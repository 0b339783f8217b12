//! JSON Lines helpers shared by every on-disk format in the crate.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

/// A line that could not be decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

/// Records decoded from a JSON Lines file along with the lines that failed.
#[derive(Debug, Clone)]
pub struct Decoded<T> {
    pub records: Vec<T>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads a JSON Lines file. Blank lines are ignored; malformed lines are
/// collected in `skipped`.
pub fn read_lenient<T: DeserializeOwned>(path: &Path) -> Result<Decoded<T>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    decode_lenient(BufReader::new(file)).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn decode_lenient<T: DeserializeOwned, R: BufRead>(reader: R) -> std::io::Result<Decoded<T>> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(rec) => records.push(rec),
            Err(err) => skipped.push(SkippedLine {
                line: idx + 1,
                reason: err.to_string(),
            }),
        }
    }
    Ok(Decoded { records, skipped })
}

/// Reads a JSON Lines file, failing on the first malformed line.
pub fn read_strict<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let decoded = read_lenient(path)?;
    if let Some(bad) = decoded.skipped.first() {
        return Err(Error::Dataset(format!(
            "{}:{}: {}",
            path.display(),
            bad.line,
            bad.reason
        )));
    }
    Ok(decoded.records)
}

pub fn write<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let wrap = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(wrap)?;
        }
    }
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    for rec in records {
        serde_json::to_writer(&mut out, rec).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    body.push('\n');
    write_text(path, &body)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, body: &str) -> Result<()> {
    let wrap = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(wrap)?;
        }
    }
    fs::write(path, body).map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Deserialize, Debug, PartialEq)]
    struct Rec {
        a: u32,
    }

    #[test]
    fn lenient_decode_reports_line_numbers() {
        let input = "{\"a\":1}\n\n{\"a\":\n{\"a\":3}\n";
        let decoded: Decoded<Rec> = decode_lenient(input.as_bytes()).unwrap();
        assert_eq!(decoded.records, vec![Rec { a: 1 }, Rec { a: 3 }]);
        assert_eq!(decoded.skipped.len(), 1);
        assert_eq!(decoded.skipped[0].line, 3);
    }
}
