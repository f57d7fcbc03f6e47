//! Preference-matrix file formats.
//!
//! The canonical format is a sparse triplet file with rows `i_key,j_key,value`
//! plus a sidecar object-index file fixing the object order. Values are
//! written losslessly: integers and `p/q` fractions for exact entries,
//! decimal floats otherwise. A dense JSON form is available for small
//! matrices.
//!
//! Lines starting with `#` are headers and are ignored on load.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::graphcore::{GraphError, RankingProblem};
use crate::prefmodel::{Granularity, ObjectKey};
use crate::value::Value;

/// Largest matrix the dense JSON form accepts.
pub const DENSE_JSON_MAX: usize = 64;

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("dense JSON output is limited to {DENSE_JSON_MAX} objects, got {0}")]
    TooLargeForDense(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MatrixIoError + '_ {
    move |source| MatrixIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Sidecar path of a triplet file: `matrix.csv` -> `matrix.index.csv`.
pub fn index_path(path: &Path) -> PathBuf {
    path.with_extension("index.csv")
}

/// Writes the sparse triplet file and its object-index sidecar. The header
/// lines go into both files, each prefixed with `# `.
pub fn save_triplets(
    problem: &RankingProblem,
    path: &Path,
    header_lines: &[String],
) -> Result<(), MatrixIoError> {
    let mut out = String::new();
    for line in header_lines {
        out.push_str(&format!("# {line}\n"));
    }
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record(["i_key", "j_key", "value"])
        .map_err(|source| MatrixIoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    for (i, j, v) in problem.matrix().iter() {
        writer
            .write_record([
                problem.objects()[i].key.as_str(),
                problem.objects()[j].key.as_str(),
                v.to_string().as_str(),
            ])
            .map_err(|source| MatrixIoError::Csv {
                path: path.to_path_buf(),
                source,
            })?;
    }
    let body = writer.into_inner().expect("in-memory writer");
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(out.as_bytes()).map_err(io_err(path))?;
    file.write_all(&body).map_err(io_err(path))?;

    let index = index_path(path);
    let mut out = String::new();
    for line in header_lines {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("index,key\n");
    for (i, obj) in problem.objects().iter().enumerate() {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        writer
            .write_record([i.to_string().as_str(), obj.key.as_str()])
            .map_err(|source| MatrixIoError::Csv {
                path: index.clone(),
                source,
            })?;
        out.push_str(&String::from_utf8(writer.into_inner().expect("in-memory writer")).unwrap());
    }
    fs::write(&index, out).map_err(io_err(&index))?;
    Ok(())
}

/// Loads a matrix from either format, sniffing dense JSON by its leading
/// brace. Triplet files use the sidecar index for object order when present
/// and fall back to lexicographic key order.
pub fn load_matrix(path: &Path, granularity: Granularity) -> Result<RankingProblem, MatrixIoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if text.trim_start().starts_with('{') {
        load_dense_json_text(&text, path, granularity)
    } else {
        load_triplets_text(&text, path, granularity)
    }
}

fn load_triplets_text(
    text: &str,
    path: &Path,
    granularity: Granularity,
) -> Result<RankingProblem, MatrixIoError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut raw: Vec<(String, String, Value)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| MatrixIoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(MatrixIoError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let value: Value = record[2].parse().map_err(|e| MatrixIoError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{e}"),
        })?;
        raw.push((record[0].to_string(), record[1].to_string(), value));
    }

    let index = index_path(path);
    let keys: Vec<String> = if index.is_file() {
        load_index(&index)?
    } else {
        let mut keys: Vec<String> = raw
            .iter()
            .flat_map(|(i, j, _)| [i.clone(), j.clone()])
            .collect();
        keys.sort();
        keys.dedup();
        keys
    };
    let objects: Vec<ObjectKey> = keys
        .iter()
        .map(|k| ObjectKey::new(granularity, k.clone()))
        .collect();
    let position: std::collections::HashMap<&str, usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();

    let mut triplets = Vec::with_capacity(raw.len());
    for (i_key, j_key, value) in raw {
        let missing = |key: &str| MatrixIoError::Malformed {
            path: path.to_path_buf(),
            message: format!("key {key:?} missing from the object index"),
        };
        let i = *position
            .get(i_key.as_str())
            .ok_or_else(|| missing(&i_key))?;
        let j = *position
            .get(j_key.as_str())
            .ok_or_else(|| missing(&j_key))?;
        triplets.push((i, j, value));
    }
    Ok(RankingProblem::from_triplets(objects, triplets)?)
}

fn load_index(path: &Path) -> Result<Vec<String>, MatrixIoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut entries: Vec<(usize, String)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| MatrixIoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let idx: usize = record[0].parse().map_err(|_| MatrixIoError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad index {:?}", &record[0]),
        })?;
        entries.push((idx, record[1].to_string()));
    }
    entries.sort();
    for (expected, (idx, _)) in entries.iter().enumerate() {
        if *idx != expected {
            return Err(MatrixIoError::Malformed {
                path: path.to_path_buf(),
                message: format!("object indices are not 0..n (missing {expected})"),
            });
        }
    }
    Ok(entries.into_iter().map(|(_, k)| k).collect())
}

/// Writes the dense JSON form: object list plus a full row-major matrix.
/// Exact values appear as strings, floats as numbers.
pub fn save_dense_json(
    problem: &RankingProblem,
    path: &Path,
    header_lines: &[String],
) -> Result<(), MatrixIoError> {
    let n = problem.len();
    if n > DENSE_JSON_MAX {
        return Err(MatrixIoError::TooLargeForDense(n));
    }
    let doc = json!({
        "headers": header_lines,
        "granularity": problem.objects()[0].granularity.to_string(),
        "objects": problem.objects().iter().map(|o| o.key.clone()).collect::<Vec<_>>(),
        "matrix": problem.matrix().to_dense(),
    });
    let text = serde_json::to_string_pretty(&doc).expect("serializable document");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn load_dense_json_text(
    text: &str,
    path: &Path,
    fallback_granularity: Granularity,
) -> Result<RankingProblem, MatrixIoError> {
    let malformed = |message: String| MatrixIoError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let granularity = doc
        .get("granularity")
        .and_then(|g| g.as_str())
        .and_then(|g| g.parse().ok())
        .unwrap_or(fallback_granularity);
    let objects: Vec<ObjectKey> = doc
        .get("objects")
        .and_then(|o| o.as_array())
        .ok_or_else(|| malformed("missing \"objects\" array".into()))?
        .iter()
        .map(|k| {
            k.as_str()
                .map(|k| ObjectKey::new(granularity, k))
                .ok_or_else(|| malformed("object keys must be strings".into()))
        })
        .collect::<Result<_, _>>()?;
    let rows = doc
        .get("matrix")
        .and_then(|m| m.as_array())
        .ok_or_else(|| malformed("missing \"matrix\" array".into()))?;
    if rows.len() != objects.len() {
        return Err(malformed(format!(
            "matrix has {} rows for {} objects",
            rows.len(),
            objects.len()
        )));
    }
    let mut triplets = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| malformed(format!("row {i} is not an array")))?;
        if cells.len() != objects.len() {
            return Err(malformed(format!("row {i} has {} cells", cells.len())));
        }
        for (j, cell) in cells.iter().enumerate() {
            let value = json_value_to_scalar(cell)
                .ok_or_else(|| malformed(format!("bad value at ({i}, {j})")))?;
            if !value.is_zero() {
                triplets.push((i, j, value));
            }
        }
    }
    Ok(RankingProblem::from_triplets(objects, triplets)?)
}

fn json_value_to_scalar(v: &serde_json::Value) -> Option<Value> {
    match v {
        serde_json::Value::String(s) => s.parse().ok(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(Value::from_int(i))
            } else {
                n.as_f64().map(Value::Approx)
            }
        }
        _ => None,
    }
}
