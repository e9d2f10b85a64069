//! JSON-lines and JSON artifacts with schema-version sidecars.
//!
//! Every JSON-lines artifact `x.jsonl` is accompanied by `x.jsonl.meta.json`
//! holding `{artifact, schema_version, records}`. Readers refuse artifacts
//! whose sidecar is missing or carries another version. JSON documents embed
//! `schema_version` as a top-level field instead.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub artifact: String,
    pub schema_version: u32,
    pub records: usize,
}

/// A JSON document tagged with its schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub payload: T,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = create(path)?;
    for r in records {
        writeln!(out, "{}", to_json(r)?).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    let meta = ArtifactMeta {
        artifact: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        schema_version: SCHEMA_VERSION,
        records: records.len(),
    };
    write_pretty(&meta_path(path), &meta)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(format!("{} does not exist", path.display())))
    }
}

fn check_version(path: &Path, found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: path.to_path_buf(),
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<ArtifactMeta> {
    let mp = meta_path(path);
    require(&mp)?;
    let contents = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let meta: ArtifactMeta = serde_json::from_str(&contents).map_err(|e| Error::Parse {
        path: mp.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    check_version(path, meta.schema_version)?;
    Ok(meta)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    require(path)?;
    let meta = read_meta(path)?;
    let records = read_plain_jsonl(path)?;
    if records.len() != meta.records {
        return Err(Error::InvalidInput(format!(
            "{}: sidecar declares {} records, found {}",
            path.display(),
            meta.records,
            records.len()
        )));
    }
    Ok(records)
}

/// Reads JSON lines without a sidecar (raw inputs); blank lines are skipped.
pub fn read_plain_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Nonblank lines with their one-based line numbers.
pub fn read_jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    require(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn write_pretty<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    writeln!(out, "{text}").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, payload: T) -> Result<()> {
    write_pretty(
        path,
        &Versioned {
            schema_version: SCHEMA_VERSION,
            payload,
        },
    )
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    require(path)?;
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |e: serde_json::Error| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    };
    let raw: serde_json::Value = serde_json::from_str(&contents).map_err(parse_err)?;
    let found = raw
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing schema_version".into(),
        })?;
    check_version(path, found as u32)?;
    let doc: Versioned<T> = serde_json::from_value(raw).map_err(parse_err)?;
    Ok(doc.payload)
}
