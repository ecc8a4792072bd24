//! Labelled sparse datasets.
//!
//! Examples are read from LIBSVM text (see [`libsvm`]), optionally rescaled to
//! `[0, 1]` per feature (see [`scale`]) and grouped into a train/test
//! [`Dataset`]. Feature indices are 1-based on disk and 0-based in memory; the
//! conversion happens only inside the parser and the serializer.

pub mod libsvm;
pub mod manifest;
pub mod scale;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use libsvm::{parse_libsvm, parse_libsvm_file, to_libsvm_line, ParseOptions, ParsedSplit};
pub use manifest::{DatasetEntry, Manifest};
pub use scale::{normalize_zero_one, MinMaxScaler};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    FileParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("empty example list")]
    Empty,
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
}

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// One labelled sample with 0-based, strictly increasing feature indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExample {
    pub label: Label,
    pub features: Vec<(u32, f64)>,
}

impl SparseExample {
    /// Panics if the indices are not strictly increasing.
    pub fn new(label: Label, features: Vec<(u32, f64)>) -> Self {
        assert!(
            features.windows(2).all(|w| w[0].0 < w[1].0),
            "feature indices must be strictly increasing"
        );
        Self { label, features }
    }

    /// `xᵀa` for a dense parameter vector.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.features.iter().map(|&(j, v)| x[j as usize] * v).sum()
    }

    /// One past the largest 0-based index, i.e. the dimension this example needs.
    pub fn required_dim(&self) -> usize {
        self.features.last().map_or(0, |&(j, _)| j as usize + 1)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<SparseExample>,
    pub test: Vec<SparseExample>,
    pub dim: usize,
}

impl Dataset {
    /// Builds a dataset whose dimension covers both splits.
    pub fn new(
        name: impl Into<String>,
        train: Vec<SparseExample>,
        test: Vec<SparseExample>,
        dim_hint: Option<usize>,
    ) -> Result<Self, DataError> {
        if train.is_empty() {
            return Err(DataError::Empty);
        }
        let inferred = train
            .iter()
            .chain(&test)
            .map(SparseExample::required_dim)
            .max()
            .unwrap_or(0);
        Ok(Self {
            name: name.into(),
            train,
            test,
            dim: inferred.max(dim_hint.unwrap_or(0)),
        })
    }

    pub fn from_files(
        name: impl Into<String>,
        train_path: &Path,
        test_path: &Path,
        opts: &ParseOptions,
    ) -> Result<Self, DataError> {
        let train = parse_libsvm_file(train_path, opts)?;
        let test = parse_libsvm_file(test_path, opts)?;
        let hint = opts.dim_hint.map(|d| d.max(train.dim).max(test.dim));
        Self::new(name, train.examples, test.examples, hint)
    }

    /// Rescales both splits with statistics fitted on the training split.
    pub fn normalized(mut self) -> Result<Self, DataError> {
        let scaler = MinMaxScaler::fit(&self.train)?;
        self.train = scaler.transform(&self.train);
        self.test = scaler.transform(&self.test);
        Ok(self)
    }
}

/// Sizes a dataset is expected to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedMeta {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
}

/// Published sizes of the LIBSVM classification problems used in the experiments.
pub fn known_metadata(name: &str) -> Option<ExpectedMeta> {
    let (n_train, n_test, dim) = match name {
        "a1a" => (1605, 29351, 123),
        "w1a" => (2477, 47272, 300),
        "cina" => (10000, 6033, 132),
        _ => return None,
    };
    Some(ExpectedMeta {
        n_train,
        n_test,
        dim,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub field: &'static str,
    pub expected: usize,
    pub actual: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetadataReport {
    pub dataset: String,
    pub mismatches: Vec<Mismatch>,
}

impl MetadataReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for MetadataReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "{}: metadata ok", self.dataset);
        }
        write!(f, "{}: metadata mismatch", self.dataset)?;
        for m in &self.mismatches {
            write!(f, "; {} expected {} got {}", m.field, m.expected, m.actual)?;
        }
        Ok(())
    }
}

pub fn validate_metadata(ds: &Dataset, expected: ExpectedMeta) -> MetadataReport {
    let checks = [
        ("N", expected.n_train, ds.train.len()),
        ("N_t", expected.n_test, ds.test.len()),
        ("d", expected.dim, ds.dim),
    ];
    let mismatches = checks
        .into_iter()
        .filter(|(_, e, a)| e != a)
        .map(|(field, expected, actual)| Mismatch {
            field,
            expected,
            actual,
        })
        .collect();
    MetadataReport {
        dataset: ds.name.clone(),
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(label: Label, f: &[(u32, f64)]) -> SparseExample {
        SparseExample::new(label, f.to_vec())
    }

    #[test]
    fn dimension_covers_both_splits() {
        let train = vec![ex(Label::Positive, &[(0, 1.0)])];
        let test = vec![ex(Label::Negative, &[(4, 1.0)])];
        let ds = Dataset::new("t", train, test, None).unwrap();
        assert_eq!(ds.dim, 5);
        let ds = Dataset::new("t", ds.train, ds.test, Some(9)).unwrap();
        assert_eq!(ds.dim, 9);
    }

    #[test]
    fn empty_train_split_rejected() {
        assert!(matches!(
            Dataset::new("t", vec![], vec![], None),
            Err(DataError::Empty)
        ));
    }

    #[test]
    fn metadata_mismatch_names_field() {
        let train = vec![ex(Label::Positive, &[(2, 1.0)]); 3];
        let test = vec![ex(Label::Negative, &[(0, 1.0)]); 2];
        let ds = Dataset::new("toy", train, test, None).unwrap();
        let ok = validate_metadata(
            &ds,
            ExpectedMeta {
                n_train: 3,
                n_test: 2,
                dim: 3,
            },
        );
        assert!(ok.passed());
        let bad = validate_metadata(
            &ds,
            ExpectedMeta {
                n_train: 3,
                n_test: 2,
                dim: 100,
            },
        );
        assert!(!bad.passed());
        assert_eq!(bad.mismatches.len(), 1);
        assert_eq!(bad.mismatches[0].field, "d");
        assert!(bad.to_string().contains("d expected 100 got 3"));
    }

    #[test]
    fn published_sizes() {
        let a1a = known_metadata("a1a").unwrap();
        assert_eq!((a1a.n_train, a1a.n_test, a1a.dim), (1605, 29351, 123));
        let w1a = known_metadata("w1a").unwrap();
        assert_eq!((w1a.n_train, w1a.n_test, w1a.dim), (2477, 47272, 300));
        assert!(known_metadata("mnist").is_none());
    }
}
