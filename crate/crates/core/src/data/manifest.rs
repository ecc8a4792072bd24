//! Locating datasets on disk.
//!
//! A manifest is a JSON file:
//!
//! ```json
//! {
//!   "datasets": {
//!     "a1a": { "train": "a1a", "test": "a1a.t",
//!              "expected": { "n_train": 1605, "n_test": 29351, "dim": 123 } },
//!     "cina": { "train": "cina.svm", "test": "cina.t.svm", "normalize": true }
//!   }
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Without a
//! manifest, a data directory is searched for `<name>` and `<name>.t`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{known_metadata, DataError, Dataset, ExpectedMeta, ParseOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub expected: Option<ExpectedMeta>,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub zero_label_as_negative: bool,
}

impl DatasetEntry {
    pub fn load(&self, name: &str) -> Result<Dataset, DataError> {
        let opts = ParseOptions {
            dim_hint: self.expected.map(|e| e.dim),
            zero_label_as_negative: self.zero_label_as_negative,
        };
        let ds = Dataset::from_files(name, &self.train, &self.test, &opts)?;
        if self.normalize {
            ds.normalized()
        } else {
            Ok(ds)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub datasets: BTreeMap<String, DatasetEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| DataError::Manifest {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in manifest.datasets.values_mut() {
            if entry.train.is_relative() {
                entry.train = base.join(&entry.train);
            }
            if entry.test.is_relative() {
                entry.test = base.join(&entry.test);
            }
        }
        Ok(manifest)
    }

    /// Entry for `name` from the manifest, or the `<dir>/<name>`,
    /// `<dir>/<name>.t` convention when a data directory is given.
    pub fn resolve(&self, name: &str, data_dir: Option<&Path>) -> Result<DatasetEntry, DataError> {
        if let Some(entry) = self.datasets.get(name) {
            let mut entry = entry.clone();
            if entry.expected.is_none() {
                entry.expected = known_metadata(name);
            }
            return Ok(entry);
        }
        let dir = data_dir.ok_or_else(|| DataError::UnknownDataset(name.to_string()))?;
        let train = dir.join(name);
        if !train.exists() {
            return Err(DataError::UnknownDataset(format!(
                "{name} (not in manifest, no file at {})",
                train.display()
            )));
        }
        Ok(DatasetEntry {
            test: dir.join(format!("{name}.t")),
            train,
            expected: known_metadata(name),
            normalize: name == "cina",
            zero_label_as_negative: false,
        })
    }
}
