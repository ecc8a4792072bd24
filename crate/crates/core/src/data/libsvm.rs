//! LIBSVM text format.
//!
//! ```text
//! +1 3:1 11:0.5
//! -1 1:0.5 # trailing comments are ignored
//! ```
//!
//! Labels must be `+1`/`-1` (any numeric spelling of ±1). A `0` label is
//! accepted as `-1` only when [`ParseOptions::zero_label_as_negative`] is set.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{DataError, Label, SparseExample};

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Lower bound on the reported dimension.
    pub dim_hint: Option<usize>,
    pub zero_label_as_negative: bool,
}

/// Examples of one file, in file order, with the dimension they require.
#[derive(Debug, Clone)]
pub struct ParsedSplit {
    pub examples: Vec<SparseExample>,
    pub dim: usize,
}

pub fn parse_libsvm<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<ParsedSplit, DataError> {
    let mut examples = Vec::new();
    let mut dim = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| DataError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let ex = parse_line(content, opts).map_err(|message| DataError::Parse {
            line: lineno,
            message,
        })?;
        dim = dim.max(ex.required_dim());
        examples.push(ex);
    }
    Ok(ParsedSplit {
        examples,
        dim: dim.max(opts.dim_hint.unwrap_or(0)),
    })
}

pub fn parse_libsvm_file(path: &Path, opts: &ParseOptions) -> Result<ParsedSplit, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_libsvm(BufReader::new(file), opts).map_err(|e| match e {
        DataError::Parse { line, message } => DataError::FileParse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

fn parse_line(content: &str, opts: &ParseOptions) -> Result<SparseExample, String> {
    let mut tokens = content.split_ascii_whitespace();
    let label_tok = tokens.next().ok_or("missing label")?;
    let label = parse_label(label_tok, opts)?;
    let mut features: Vec<(u32, f64)> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("expected <index>:<value>, got {tok:?}"))?;
        let idx: i64 = idx
            .parse()
            .map_err(|_| format!("bad feature index {idx:?}"))?;
        if idx < 1 {
            return Err(format!("feature index must be >= 1, got {idx}"));
        }
        let idx = u32::try_from(idx - 1).map_err(|_| format!("feature index {idx} too large"))?;
        let val: f64 = val
            .parse()
            .map_err(|_| format!("bad feature value {val:?}"))?;
        if !val.is_finite() {
            return Err(format!("non-finite feature value {val}"));
        }
        if let Some(&(prev, _)) = features.last() {
            if idx <= prev {
                return Err(format!(
                    "feature indices must be strictly increasing ({} after {})",
                    idx + 1,
                    prev + 1
                ));
            }
        }
        features.push((idx, val));
    }
    Ok(SparseExample { label, features })
}

fn parse_label(tok: &str, opts: &ParseOptions) -> Result<Label, String> {
    let v: f64 = tok.parse().map_err(|_| format!("bad label {tok:?}"))?;
    if v == 1.0 {
        Ok(Label::Positive)
    } else if v == -1.0 || (v == 0.0 && opts.zero_label_as_negative) {
        Ok(Label::Negative)
    } else {
        Err(format!("label must be +1 or -1, got {tok:?}"))
    }
}

/// Serializes an example back to one LIBSVM line (no trailing newline).
pub fn to_libsvm_line(ex: &SparseExample) -> String {
    let mut line = ex.label.to_string();
    for &(j, v) in &ex.features {
        // `{}` on f64 prints the shortest representation that parses back exactly.
        let _ = write!(line, " {}:{}", j + 1, v);
    }
    line
}
