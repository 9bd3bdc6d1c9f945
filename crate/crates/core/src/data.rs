//! In-memory tables consumed by folds.
//!
//! A [`Dataset`] is an immutable dense table: `n_rows` feature vectors of
//! width `d`, stored row-major, plus an optional label per row. Folds see a
//! table through the [`RowSource`] trait, which is also implemented for plain
//! slices so that sketches and rating triples can be folded the same way.

use crate::error::{Error, Result};

/// Anything that can hand out rows by index to a fold.
pub trait RowSource: Sync {
    type Row<'a>: Copy
    where
        Self: 'a;

    fn num_rows(&self) -> usize;

    fn row(&self, index: usize) -> Self::Row<'_>;
}

impl<T: Sync> RowSource for [T] {
    type Row<'a>
        = &'a T
    where
        T: 'a;

    fn num_rows(&self) -> usize {
        self.len()
    }

    fn row(&self, index: usize) -> &T {
        &self[index]
    }
}

impl<T: Sync> RowSource for Vec<T> {
    type Row<'a>
        = &'a T
    where
        T: 'a;

    fn num_rows(&self) -> usize {
        self.len()
    }

    fn row(&self, index: usize) -> &T {
        &self[index]
    }
}

/// Borrowed view of one dataset row.
#[derive(Debug, Clone, Copy)]
pub struct DataRow<'a> {
    pub index: usize,
    pub features: &'a [f64],
    pub label: Option<f64>,
}

impl DataRow<'_> {
    pub fn label_or_err(&self) -> Result<f64> {
        self.label
            .ok_or_else(|| Error::data(self.index, "row has no label"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    n_features: usize,
    features: Vec<f64>,
    labels: Option<Vec<f64>>,
}

impl Dataset {
    /// Builds a dataset from row-major features. Every value must be finite.
    pub fn new(n_features: usize, features: Vec<f64>, labels: Option<Vec<f64>>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Argument("a dataset needs at least one feature".into()));
        }
        if !features.len().is_multiple_of(n_features) {
            return Err(Error::Argument(format!(
                "{} feature values do not divide into rows of width {n_features}",
                features.len()
            )));
        }
        let n_rows = features.len() / n_features;
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(pos / n_features, format!("non-finite feature in column {}", pos % n_features)));
        }
        if let Some(labels) = &labels {
            if labels.len() != n_rows {
                return Err(Error::dim(n_rows, labels.len()));
            }
            if let Some(row) = labels.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(row, "non-finite label"));
            }
        }
        Ok(Self {
            n_rows,
            n_features,
            features,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyInput("no rows given"))?;
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Data {
                    row: i,
                    reason: format!("expected {d} features, found {}", row.len()),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::new(d, flat, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn feature_row(&self, index: usize) -> &[f64] {
        let d = self.n_features;
        &self.features[index * d..(index + 1) * d]
    }

    /// Returns a copy with rows reordered so that new row `i` is old row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_rows {
            return Err(Error::dim(self.n_rows, order.len()));
        }
        let mut features = Vec::with_capacity(self.features.len());
        for &i in order {
            features.extend_from_slice(self.feature_row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&i| l[i]).collect());
        Self::new(self.n_features, features, labels)
    }

    /// Prepends a constant-one column.
    pub fn with_intercept(&self) -> Self {
        let d = self.n_features + 1;
        let mut features = Vec::with_capacity(self.n_rows * d);
        for i in 0..self.n_rows {
            features.push(1.0);
            features.extend_from_slice(self.feature_row(i));
        }
        Self {
            n_rows: self.n_rows,
            n_features: d,
            features,
            labels: self.labels.clone(),
        }
    }
}

impl RowSource for Dataset {
    type Row<'a> = DataRow<'a>;

    fn num_rows(&self) -> usize {
        self.n_rows
    }

    fn row(&self, index: usize) -> DataRow<'_> {
        DataRow {
            index,
            features: self.feature_row(index),
            label: self.labels.as_ref().map(|l| l[index]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_values() {
        let err = Dataset::new(2, vec![1.0, f64::NAN, 0.0, 1.0], None).unwrap_err();
        assert!(matches!(err, Error::Data { row: 0, .. }));
        let err = Dataset::new(1, vec![1.0, 2.0], Some(vec![0.0, f64::INFINITY])).unwrap_err();
        assert!(matches!(err, Error::Data { row: 1, .. }));
    }

    #[test]
    fn label_length_must_match() {
        let err = Dataset::new(1, vec![1.0, 2.0], Some(vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, actual: 1 }));
    }

    #[test]
    fn zero_width_rejected() {
        assert!(Dataset::new(0, vec![], None).is_err());
    }

    #[test]
    fn intercept_prepends_ones() {
        let ds = Dataset::from_rows(&[vec![2.0], vec![3.0]], Some(vec![1.0, 0.0])).unwrap();
        let wi = ds.with_intercept();
        assert_eq!(wi.n_features(), 2);
        assert_eq!(wi.features(), &[1.0, 2.0, 1.0, 3.0]);
        assert_eq!(wi.row(1).label, Some(0.0));
    }
}
