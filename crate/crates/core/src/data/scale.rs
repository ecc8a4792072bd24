//! Per-feature min-max rescaling to `[0, 1]`.
//!
//! Statistics account for implicit zeros: a feature absent from some example
//! has 0 among its observed values. Constant features (including features
//! never present in the fitting set) map to 0.

use std::collections::BTreeMap;

use super::{DataError, SparseExample};

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    /// 0-based feature index -> (min, max)
    ranges: BTreeMap<u32, (f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(examples: &[SparseExample]) -> Result<Self, DataError> {
        if examples.is_empty() {
            return Err(DataError::Empty);
        }
        let mut ranges: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
        for ex in examples {
            for &(j, v) in &ex.features {
                let e = ranges.entry(j).or_insert((v, v, 0));
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
                e.2 += 1;
            }
        }
        let n = examples.len();
        let ranges = ranges
            .into_iter()
            .map(|(j, (lo, hi, count))| {
                if count < n {
                    (j, (lo.min(0.0), hi.max(0.0)))
                } else {
                    (j, (lo, hi))
                }
            })
            .collect();
        Ok(Self { ranges })
    }

    pub fn range(&self, feature: u32) -> Option<(f64, f64)> {
        self.ranges.get(&feature).copied()
    }

    fn map(lo: f64, hi: f64, v: f64) -> f64 {
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    /// Applies the fitted statistics. Values outside the fitted range land
    /// outside `[0, 1]`; no clipping is done.
    pub fn transform(&self, examples: &[SparseExample]) -> Vec<SparseExample> {
        // Features whose implicit zero maps to a nonzero value must be materialised.
        let shifted: Vec<(u32, f64)> = self
            .ranges
            .iter()
            .filter_map(|(&j, &(lo, hi))| {
                let z = Self::map(lo, hi, 0.0);
                (z != 0.0).then_some((j, z))
            })
            .collect();
        examples
            .iter()
            .map(|ex| {
                let mut out: Vec<(u32, f64)> =
                    Vec::with_capacity(ex.features.len() + shifted.len());
                let mut s = shifted.iter().peekable();
                for &(j, v) in &ex.features {
                    while let Some(&&(sj, z)) = s.peek() {
                        if sj >= j {
                            break;
                        }
                        out.push((sj, z));
                        s.next();
                    }
                    if s.peek().is_some_and(|&&(sj, _)| sj == j) {
                        s.next();
                    }
                    let scaled = match self.ranges.get(&j) {
                        Some(&(lo, hi)) => Self::map(lo, hi, v),
                        None => 0.0,
                    };
                    if scaled != 0.0 {
                        out.push((j, scaled));
                    }
                }
                out.extend(s.copied());
                SparseExample {
                    label: ex.label,
                    features: out,
                }
            })
            .collect()
    }
}

/// Fits on `examples` and rescales them.
pub fn normalize_zero_one(examples: &[SparseExample]) -> Result<Vec<SparseExample>, DataError> {
    Ok(MinMaxScaler::fit(examples)?.transform(examples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> Vec<SparseExample> {
        values
            .iter()
            .map(|&v| SparseExample {
                label: Label::Positive,
                features: vec![(0, v)],
            })
            .collect()
    }

    fn column_values(ex: &[SparseExample], j: u32) -> Vec<f64> {
        ex.iter()
            .map(|e| {
                e.features
                    .iter()
                    .find(|&&(k, _)| k == j)
                    .map_or(0.0, |&(_, v)| v)
            })
            .collect()
    }

    #[test]
    fn evenly_spaced_column() {
        let out = normalize_zero_one(&col(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(column_values(&out, 0), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let out = normalize_zero_one(&col(&[5.0, 5.0])).unwrap();
        assert_eq!(column_values(&out, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn binary_features_unchanged() {
        let input = vec![
            SparseExample {
                label: Label::Positive,
                features: vec![(0, 1.0), (3, 1.0)],
            },
            SparseExample {
                label: Label::Negative,
                features: vec![(3, 1.0)],
            },
            SparseExample {
                label: Label::Negative,
                features: vec![(0, 1.0)],
            },
        ];
        assert_eq!(normalize_zero_one(&input).unwrap(), input);
    }

    #[test]
    fn negative_minimum_materialises_implicit_zeros() {
        let input = vec![
            SparseExample {
                label: Label::Positive,
                features: vec![(1, -2.0)],
            },
            SparseExample {
                label: Label::Negative,
                features: vec![(0, 3.0)],
            },
            SparseExample {
                label: Label::Negative,
                features: vec![(1, 2.0)],
            },
        ];
        let out = normalize_zero_one(&input).unwrap();
        assert_eq!(column_values(&out, 1), vec![0.0, 0.5, 1.0]);
        assert_eq!(out[1].features, vec![(0, 1.0), (1, 0.5)]);
    }

    #[test]
    fn statistics_reused_on_test_split() {
        let scaler = MinMaxScaler::fit(&col(&[0.0, 10.0])).unwrap();
        let test = scaler.transform(&col(&[5.0, 20.0]));
        assert_eq!(column_values(&test, 0), vec![0.5, 2.0]);
        // unseen feature in the fitting set is constant zero there
        let unseen = scaler.transform(&[SparseExample {
            label: Label::Positive,
            features: vec![(7, 3.0)],
        }]);
        assert!(unseen[0].features.is_empty());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(normalize_zero_one(&[]), Err(DataError::Empty)));
    }

    proptest! {
        #[test]
        fn output_in_unit_interval(rows in proptest::collection::vec(
            proptest::collection::btree_map(0u32..8, -50.0f64..50.0, 0..8), 1..30)) {
            let input: Vec<SparseExample> = rows
                .into_iter()
                .map(|m| SparseExample { label: Label::Positive, features: m.into_iter().collect() })
                .collect();
            let out = normalize_zero_one(&input).unwrap();
            for ex in &out {
                prop_assert!(ex.features.windows(2).all(|w| w[0].0 < w[1].0));
                for &(_, v) in &ex.features {
                    prop_assert!((0.0..=1.0).contains(&v), "value {} out of range", v);
                }
            }
        }
    }
}
