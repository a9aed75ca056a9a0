//! LIBSVM sparse text format:
//! one sample per line, `label idx:val idx:val ...` with 1-based,
//! strictly increasing indices. Labels must be binary; `0/1` labels are
//! mapped to `-1/+1`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LibsvmError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: labels must be binary (-1/+1 or 0/1), got {label}")]
    NonBinaryLabel { line: usize, label: f64 },
    #[error("empty dataset")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct ClassificationDataset {
    /// Dense sample vectors, `m x n`.
    pub samples: Vec<Vec<f64>>,
    /// Labels in `{-1, +1}`.
    pub labels: Vec<f64>,
    pub n_features: usize,
}

impl ClassificationDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn load_libsvm(path: &Path) -> Result<ClassificationDataset, LibsvmError> {
    parse_libsvm(BufReader::new(File::open(path)?))
}

pub fn parse_libsvm(reader: impl BufRead) -> Result<ClassificationDataset, LibsvmError> {
    let mut raw: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut n_features = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let label: f64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| LibsvmError::Malformed { line: lineno, msg: "bad label".into() })?;
        let mut entries = Vec::new();
        let mut prev_idx = 0usize;
        for tok in parts {
            let (is, vs) = tok.split_once(':').ok_or(LibsvmError::Malformed {
                line: lineno,
                msg: format!("expected idx:val, got '{tok}'"),
            })?;
            let idx: usize = is.parse().map_err(|_| LibsvmError::Malformed {
                line: lineno,
                msg: format!("bad index '{is}'"),
            })?;
            let val: f64 = vs.parse().map_err(|_| LibsvmError::Malformed {
                line: lineno,
                msg: format!("bad value '{vs}'"),
            })?;
            if idx == 0 {
                return Err(LibsvmError::Malformed {
                    line: lineno,
                    msg: "indices are 1-based".into(),
                });
            }
            if idx <= prev_idx {
                return Err(LibsvmError::Malformed {
                    line: lineno,
                    msg: format!("indices must be strictly increasing, got {idx} after {prev_idx}"),
                });
            }
            prev_idx = idx;
            n_features = n_features.max(idx);
            entries.push((idx - 1, val));
        }
        raw.push((label, entries));
    }
    if raw.is_empty() {
        return Err(LibsvmError::Empty);
    }

    // Decide the label convention from the observed values.
    let mut uses_zero_one = false;
    for (i, (label, _)) in raw.iter().enumerate() {
        match *label {
            l if l == -1.0 || l == 1.0 => {}
            0.0 => uses_zero_one = true,
            l => return Err(LibsvmError::NonBinaryLabel { line: i + 1, label: l }),
        }
    }

    let mut samples = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    for (label, entries) in raw {
        let mut v = vec![0.0; n_features];
        for (idx, val) in entries {
            v[idx] = val;
        }
        samples.push(v);
        let t = if uses_zero_one && label == 0.0 { -1.0 } else { label };
        labels.push(t);
    }
    Ok(ClassificationDataset { samples, labels, n_features })
}
