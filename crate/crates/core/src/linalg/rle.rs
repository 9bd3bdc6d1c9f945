use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub value: f64,
    pub length: usize,
}

/// A vector stored as maximal runs of equal values. Adjacent runs always
/// hold different values and every run is non-empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVectorRle {
    runs: Vec<Run>,
    len: usize,
}

impl SparseVectorRle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        let mut v = Self::new();
        for &x in values {
            v.push_run(x, 1)?;
        }
        Ok(v)
    }

    /// Builds from runs, coalescing neighbours with equal values.
    pub fn from_runs(runs: impl IntoIterator<Item = (f64, usize)>) -> Result<Self> {
        let mut v = Self::new();
        for (value, length) in runs {
            v.push_run(value, length)?;
        }
        Ok(v)
    }

    /// Appends `length` copies of `value`.
    pub fn push_run(&mut self, value: f64, length: usize) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Numeric("RLE vectors hold finite values only".into()));
        }
        if length == 0 {
            return Err(Error::Argument("run length must be at least 1".into()));
        }
        match self.runs.last_mut() {
            Some(last) if last.value == value => last.length += length,
            _ => self.runs.push(Run { value, length }),
        }
        self.len += length;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len);
        for r in &self.runs {
            out.extend(std::iter::repeat_n(r.value, r.length));
        }
        out
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.dot_counted(other).map(|(v, _)| v)
    }

    /// Dot product by walking both run lists in step. Also returns the
    /// number of overlapping segments visited, which never exceeds
    /// `runs(a) + runs(b)`.
    pub fn dot_counted(&self, other: &Self) -> Result<(f64, usize)> {
        if self.len != other.len {
            return Err(Error::dim(self.len, other.len));
        }
        let (mut i, mut j) = (0, 0);
        let (mut left_a, mut left_b) = (
            self.runs.first().map_or(0, |r| r.length),
            other.runs.first().map_or(0, |r| r.length),
        );
        let mut sum = 0.0;
        let mut segments = 0;
        while i < self.runs.len() && j < other.runs.len() {
            let overlap = left_a.min(left_b);
            sum += self.runs[i].value * other.runs[j].value * overlap as f64;
            segments += 1;
            left_a -= overlap;
            left_b -= overlap;
            if left_a == 0 {
                i += 1;
                left_a = self.runs.get(i).map_or(0, |r| r.length);
            }
            if left_b == 0 {
                j += 1;
                left_b = other.runs.get(j).map_or(0, |r| r.length);
            }
        }
        Ok((sum, segments))
    }
}
