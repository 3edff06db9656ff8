//! Dataset loading: dense CSV with the label in the first column, and sparse
//! 1-based `label idx:val` libsvm files densified with absent entries at 0.

use std::fs;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Csv,
    LibSvm,
}

/// A dense labeled matrix. Features are stored row-major; labels keep their
/// original values (classification remapping happens at training time).
#[derive(Debug, Clone)]
pub struct RawDataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    n: usize,
    d: usize,
    format: SourceFormat,
}

impl RawDataset {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn format(&self) -> SourceFormat {
        self.format
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// Feature-major copy for the column-wise training entry points.
    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        let mut columns: Vec<Vec<f64>> = (0..self.d).map(|_| Vec::with_capacity(self.n)).collect();
        for i in 0..self.n {
            for (f, col) in columns.iter_mut().enumerate() {
                col.push(self.features[i * self.d + f]);
            }
        }
        columns
    }

    /// Widen rows with trailing zero features (sparse sources only say how
    /// many features they happened to mention).
    pub fn pad_features(&mut self, d: usize) {
        assert!(d >= self.d);
        if d == self.d {
            return;
        }
        let mut widened = vec![0.0; self.n * d];
        for i in 0..self.n {
            widened[i * d..i * d + self.d]
                .copy_from_slice(&self.features[i * self.d..(i + 1) * self.d]);
        }
        self.features = widened;
        self.d = d;
    }

    /// Sorted distinct label values and each row's index into them.
    /// This is the classification remapping; the distinct values are stored
    /// in the model so predictions can report original labels.
    pub fn class_mapping(&self) -> Result<(Vec<f64>, Vec<u32>), CliError> {
        let mut distinct: Vec<f64> = self.labels.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(CliError::Usage(format!(
                "classification needs at least 2 distinct labels, found {}",
                distinct.len()
            )));
        }
        let mapped = self
            .labels
            .iter()
            .map(|y| distinct.partition_point(|v| v.total_cmp(y).is_lt()) as u32)
            .collect();
        Ok((distinct, mapped))
    }
}

fn parse_field(token: &str, path: &str, line: usize, what: &str) -> Result<f64, CliError> {
    token.trim().parse::<f64>().map_err(|_| CliError::Parse {
        path: path.to_string(),
        line,
        message: format!("{what} is not numeric: {token:?}"),
    })
}

/// Load a CSV file whose first column is the label.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawDataset, CliError> {
    let display = path.as_ref().display().to_string();
    let text = fs::read_to_string(&path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut d = None;
    let mut n = 0;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let label_tok = fields.next().unwrap();
        labels.push(parse_field(label_tok, &display, lineno, "label")?);
        let mut count = 0;
        for tok in fields {
            features.push(parse_field(tok, &display, lineno, "feature")?);
            count += 1;
        }
        match d {
            None => {
                if count == 0 {
                    return Err(CliError::Parse {
                        path: display,
                        line: lineno,
                        message: "row has a label but no features".into(),
                    });
                }
                d = Some(count);
            }
            Some(expected) if expected != count => {
                return Err(CliError::Parse {
                    path: display,
                    line: lineno,
                    message: format!("ragged row: {count} features, expected {expected}"),
                });
            }
            _ => {}
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Parse {
            path: display,
            line: 0,
            message: "empty file".into(),
        });
    }
    Ok(RawDataset {
        features,
        labels,
        n,
        d: d.unwrap(),
        format: SourceFormat::Csv,
    })
}

/// Load a sparse libsvm file: `label idx:val ...` with 1-based indices.
/// Out-of-order pairs are tolerated; a duplicated index is an error. The
/// feature count is the largest index seen anywhere in the file.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<RawDataset, CliError> {
    let display = path.as_ref().display().to_string();
    let text = fs::read_to_string(&path)?;
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0usize;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap();
        labels.push(parse_field(label_tok, &display, lineno, "label")?);
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let Some((idx_str, val_str)) = tok.split_once(':') else {
                return Err(CliError::Parse {
                    path: display,
                    line: lineno,
                    message: format!("malformed feature pair: {tok:?}"),
                });
            };
            let index: usize = idx_str.parse().map_err(|_| CliError::Parse {
                path: display.clone(),
                line: lineno,
                message: format!("bad feature index: {idx_str:?}"),
            })?;
            if index == 0 {
                return Err(CliError::Parse {
                    path: display,
                    line: lineno,
                    message: "feature indices are 1-based; found 0".into(),
                });
            }
            let value = parse_field(val_str, &display, lineno, "feature value")?;
            pairs.push((index, value));
            d = d.max(index);
        }
        pairs.sort_by_key(|&(i, _)| i);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CliError::Parse {
                    path: display,
                    line: lineno,
                    message: format!("duplicate feature index {}", w[0].0),
                });
            }
        }
        rows.push(pairs);
    }
    if rows.is_empty() {
        return Err(CliError::Parse {
            path: display,
            line: 0,
            message: "empty file".into(),
        });
    }
    if d == 0 {
        return Err(CliError::Parse {
            path: display,
            line: 0,
            message: "no feature pairs anywhere in the file".into(),
        });
    }

    let n = rows.len();
    let mut features = vec![0.0; n * d];
    for (i, pairs) in rows.into_iter().enumerate() {
        for (index, value) in pairs {
            features[i * d + (index - 1)] = value;
        }
    }
    Ok(RawDataset {
        features,
        labels,
        n,
        d,
        format: SourceFormat::LibSvm,
    })
}

/// Load by content: lines with `idx:val` pairs are libsvm, otherwise CSV.
pub fn load_auto(path: impl AsRef<Path>) -> Result<RawDataset, CliError> {
    let display = path.as_ref().display().to_string();
    let text = fs::read_to_string(&path)?;
    let first = text
        .lines()
        .map(|l| l.trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| CliError::Parse {
            path: display,
            line: 0,
            message: "empty file".into(),
        })?;
    if first
        .split_whitespace()
        .skip(1)
        .any(|tok| tok.contains(':'))
    {
        load_libsvm(path)
    } else {
        load_csv(path)
    }
}
