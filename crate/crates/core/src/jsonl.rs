//! Line-delimited JSON helpers shared by every file format in the crate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses every non-blank line of `reader` as a `T`, keeping its 1-based line number.
pub fn read_numbered_from<T: DeserializeOwned, R: Read>(
    reader: R,
    origin: &Path,
) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| io_err(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Json {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

pub fn read_from<T: DeserializeOwned, R: Read>(reader: R, origin: &Path) -> Result<Vec<T>> {
    Ok(read_numbered_from(reader, origin)?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

pub fn read_numbered<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_numbered_from(file, path)
}

pub fn read_path<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_from(file, path)
}

pub fn write_to<T: Serialize, W: Write>(mut writer: W, values: &[T], origin: &Path) -> Result<()> {
    for value in values {
        let line = serde_json::to_string(value).expect("serializable value");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| io_err(origin, e))?;
    }
    writer.flush().map_err(|e| io_err(origin, e))
}

pub fn write_path<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_to(BufWriter::new(file), values, path)
}
