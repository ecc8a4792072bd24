use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{HarnessError, RunRecord};

pub const CSV_COLUMNS: [&str; 13] = [
    "run_id",
    "dataset",
    "variant",
    "alpha",
    "gamma1",
    "gamma2",
    "seed",
    "epoch",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "pct_bb_steps",
    "wall_time_s",
];

/// `v` rounded to 6 significant digits, `%g` style: plain notation for
/// exponents in `[-5, 6)`, scientific otherwise, trailing zeros dropped.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        let fixed = format!("{v:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

/// One row per completed epoch; a failed run adds a row for the epoch it
/// failed in with empty metrics.
fn rows(records: &[RunRecord]) -> Vec<[String; 13]> {
    let mut out = Vec::new();
    for r in records {
        let fixed = |epoch: usize, train: String, test: String, acc: String| {
            [
                r.run_id.clone(),
                r.dataset.clone(),
                r.variant.name().to_string(),
                opt(r.alpha),
                opt(r.gamma1),
                opt(r.gamma2),
                r.seed.to_string(),
                epoch.to_string(),
                train,
                test,
                acc,
                format_sig(100.0 * r.bb_fraction),
                opt(r.wall_time_s),
            ]
        };
        for e in &r.epochs {
            out.push(fixed(
                e.epoch,
                format_sig(e.train_loss),
                format_sig(e.test_loss),
                format_sig(e.test_accuracy),
            ));
        }
        if !r.succeeded() {
            let epoch = r.epochs.last().map_or(1, |e| e.epoch + 1);
            out.push(fixed(epoch, String::new(), String::new(), String::new()));
        }
    }
    out
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let io_err = |e: csv::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(CSV_COLUMNS).map_err(io_err)?;
    for row in rows(records) {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The CSV rows as a JSON array of objects with the same keys. Numeric
/// fields are numbers; empty fields are `null`.
pub fn write_json(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let text_fields = ["run_id", "dataset", "variant"];
    let array: Vec<Value> = rows(records)
        .into_iter()
        .map(|row| {
            let mut obj = Map::new();
            for (key, cell) in CSV_COLUMNS.iter().zip(row) {
                let v = if text_fields.contains(key) {
                    Value::String(cell)
                } else if cell.is_empty() {
                    Value::Null
                } else if let Ok(i) = cell.parse::<u64>() {
                    Value::from(i)
                } else {
                    cell.parse::<f64>()
                        .ok()
                        .and_then(serde_json::Number::from_f64)
                        .map_or(Value::String(cell), Value::Number)
                };
                obj.insert(key.to_string(), v);
            }
            Value::Object(obj)
        })
        .collect();
    write_pretty(&array, path)
}

pub fn write_pretty<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io(e.into()))?;
    writeln!(w).map_err(io)?;
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::EpochMetrics;
    use crate::optimizer::{RunFailure, Variant};

    fn record() -> RunRecord {
        RunRecord {
            run_id: "Ex511".into(),
            dataset: "toy".into(),
            variant: Variant::Trish,
            alpha: Some(10.0),
            gamma1: Some(4.0 / 0.3477),
            gamma2: Some(0.5 / 0.3477),
            seed: 7,
            epochs: vec![EpochMetrics {
                epoch: 1,
                train_loss: 0.412345678,
                test_loss: 0.5,
                test_accuracy: 0.8352,
            }],
            bb_fraction: 0.0,
            iterations: 26,
            gradient_evaluations: 1605,
            assumption4: true,
            wall_time_s: None,
            failure: None,
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.412345678), "0.412346");
        assert_eq!(format_sig(11.504170), "11.5042");
        assert_eq!(format_sig(100.0), "100");
        assert_eq!(format_sig(1e-7), "1e-7");
        assert_eq!(format_sig(123456789.0), "1.23457e8");
        assert_eq!(format_sig(-0.5), "-0.5");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(999999.5), "1e6");
    }

    #[test]
    fn one_record_one_epoch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        write_csv(&[record()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(
            lines[1],
            "Ex511,toy,trish,10,11.5042,1.43802,7,1,0.412346,0.5,0.8352,0,"
        );
    }

    #[test]
    fn repeated_writes_are_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_csv(&[record(), record()], &a).unwrap();
        write_csv(&[record(), record()], &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn failed_run_gets_a_row() {
        let mut r = record();
        r.failure = Some(RunFailure {
            k: 30,
            reason: "non-finite iterate".into(),
        });
        let rows = rows(&[r]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][7], "2");
        assert!(rows[1][8].is_empty());
    }

    #[test]
    fn json_mirrors_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.json");
        write_json(&[record()], &path).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let row = &v[0];
        for key in CSV_COLUMNS {
            assert!(row.get(key).is_some(), "{key}");
        }
        assert_eq!(row["seed"], 7);
        assert_eq!(row["test_accuracy"], 0.8352);
        assert!(row["wall_time_s"].is_null());
    }
}
