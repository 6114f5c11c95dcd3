//! On-disk formats: documents (JSON lines), interactions (TSV), vocabulary
//! and dataset bundles (JSON), flat labeled vectors (JSON lines).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Document, Label, SparseVector, Vocabulary};
use crate::{Error, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// One `{"id": ..., "text": ...}` object per line. Blank lines are skipped.
pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

/// `user_id<TAB>item_id` per line, no header. Blank lines are skipped.
pub fn read_interactions(path: &Path) -> Result<Vec<(String, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(u), Some(item), None) if !u.is_empty() && !item.is_empty() => {
                out.push((u.to_string(), item.to_string()))
            }
            _ => {
                return Err(parse_err(
                    path,
                    i + 1,
                    "expected two tab-separated columns: user_id, item_id",
                ))
            }
        }
    }
    Ok(out)
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let reader = BufReader::new(File::open(path)?);
    serde_json::from_reader(reader).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

pub fn write_vocabulary(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_json_pretty(path, vocab)
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    read_json(path)
}

pub fn write_datasets(path: &Path, bundle: &DatasetBundle) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, bundle)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_datasets(path: &Path) -> Result<DatasetBundle> {
    let bundle: DatasetBundle = read_json(path)?;
    bundle.validate()?;
    Ok(bundle)
}

/// One labeled vector per line, as exported for synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub user_id: String,
    pub item_id: String,
    pub features: SparseVector,
    pub label: Label,
    pub split: String,
}

pub fn write_vectors_jsonl(path: &Path, bundle: &DatasetBundle) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for user in &bundle.users {
        let parts = [
            ("train", &user.train),
            ("validation", &user.validation),
            ("test", &user.test),
        ];
        for (split, examples) in parts {
            for ex in examples {
                let rec = VectorRecord {
                    user_id: user.user_id.clone(),
                    item_id: ex.item_id.clone(),
                    features: ex.features.clone(),
                    label: ex.label,
                    split: split.to_string(),
                };
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
