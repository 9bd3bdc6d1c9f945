//! Stochastic gradient descent over a sum of convex terms.
//!
//! Each step applies `x <- x - alpha * N * g_i(x)` for one term `i`, where
//! `N` is the number of terms, so `N * g_i` estimates the full gradient
//! without bias. Terms are visited in a fresh seeded shuffle every epoch and
//! the step size decays as `alpha0 / epoch`. The update loop is serial; the
//! full objective recorded after each epoch is computed as a parallel fold.

mod objective;

pub use objective::{objective_value, term_gradient, term_value, Example, Gradient, Objective, ObjectiveFold};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, RowSource};
use crate::driver::{iterate, Footprint, IterationLedger, LedgerConfig};
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Observed entries of a sparse matrix, with per-row and per-column counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratings {
    entries: Vec<Rating>,
    n_rows: usize,
    n_cols: usize,
    row_counts: Vec<u64>,
    col_counts: Vec<u64>,
}

impl Ratings {
    pub fn new(entries: Vec<Rating>, n_rows: usize, n_cols: usize) -> Result<Self> {
        let mut row_counts = vec![0; n_rows];
        let mut col_counts = vec![0; n_cols];
        for (i, e) in entries.iter().enumerate() {
            if e.row >= n_rows || e.col >= n_cols {
                return Err(Error::data(i, format!("index ({}, {}) outside {n_rows} x {n_cols}", e.row, e.col)));
            }
            if !e.value.is_finite() {
                return Err(Error::data(i, "non-finite rating"));
            }
            row_counts[e.row] += 1;
            col_counts[e.col] += 1;
        }
        Ok(Self {
            entries,
            n_rows,
            n_cols,
            row_counts,
            col_counts,
        })
    }

    /// Shape taken as one past the largest row and column index.
    pub fn from_entries(entries: Vec<Rating>) -> Result<Self> {
        let n_rows = entries.iter().map(|e| e.row + 1).max().unwrap_or(0);
        let n_cols = entries.iter().map(|e| e.col + 1).max().unwrap_or(0);
        Self::new(entries, n_rows, n_cols)
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
}

impl RowSource for Ratings {
    type Row<'a> = Example<'a>;

    fn num_rows(&self) -> usize {
        self.entries.len()
    }

    fn row(&self, index: usize) -> Example<'_> {
        let e = self.entries[index];
        Example::Rating {
            index,
            row: e.row,
            col: e.col,
            value: e.value,
            row_count: self.row_counts[e.row],
            col_count: self.col_counts[e.col],
        }
    }
}

/// The training examples of an SGD run.
#[derive(Debug, Clone, Copy)]
pub enum Examples<'a> {
    Labeled(&'a Dataset),
    Ratings(&'a Ratings),
}

impl<'a> Examples<'a> {
    pub fn len(&self) -> usize {
        match self {
            Examples::Labeled(d) => d.n_rows(),
            Examples::Ratings(r) => r.num_rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn example(&self, index: usize) -> Result<Example<'a>> {
        match *self {
            Examples::Labeled(d) => Example::from_row(d.row(index)),
            Examples::Ratings(r) => Ok(r.row(index)),
        }
    }
}

/// Low-rank factors `L` (rank x rows) and `R` (rank x cols); column `i` of
/// `L` is the row factor `L_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub left: Matrix,
    pub right: Matrix,
}

impl Factors {
    pub fn zeros(rank: usize, n_rows: usize, n_cols: usize) -> Self {
        Self {
            left: Matrix::zeros(rank, n_rows),
            right: Matrix::zeros(rank, n_cols),
        }
    }

    pub fn rank(&self) -> usize {
        self.left.rows()
    }

    pub fn n_rows(&self) -> usize {
        self.left.cols()
    }

    pub fn n_cols(&self) -> usize {
        self.right.cols()
    }

    pub fn left(&self, i: usize) -> &[f64] {
        self.left.col(i)
    }

    pub fn right(&self, j: usize) -> &[f64] {
        self.right.col(j)
    }

    pub fn predict(&self, i: usize, j: usize) -> f64 {
        crate::linalg::dot(self.left(i), self.right(j))
    }

    pub fn frobenius_squared(&self) -> f64 {
        let sq = |m: &Matrix| m.as_slice().iter().map(|v| v * v).sum::<f64>();
        sq(&self.left) + sq(&self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgdParams {
    Vector(DenseVector),
    Factors(Factors),
}

impl SgdParams {
    fn len(&self) -> usize {
        match self {
            SgdParams::Vector(x) => x.len(),
            SgdParams::Factors(f) => f.left.as_slice().len() + f.right.as_slice().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdModel {
    pub params: SgdParams,
    /// Epochs completed.
    pub epoch: usize,
    pub alpha0: f64,
}

impl Footprint for SgdModel {
    fn footprint_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.params.len() * std::mem::size_of::<f64>()
    }
}

fn descend(target: &mut [f64], g: &[f64], scale: f64) -> bool {
    let mut finite = true;
    for (t, gi) in target.iter_mut().zip(g) {
        *t -= scale * gi;
        finite &= t.is_finite();
    }
    finite
}

/// `model <- model - alpha * n * g`. A factor gradient only touches its own
/// row and column factors.
pub fn sgd_step(model: &mut SgdModel, g: &Gradient, alpha: f64, n: usize) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 || n == 0 {
        return Err(Error::Argument("sgd_step needs alpha > 0 and n >= 1".into()));
    }
    let scale = alpha * n as f64;
    let finite = match (&mut model.params, g) {
        (SgdParams::Vector(x), Gradient::Dense(g)) => {
            if x.len() != g.len() {
                return Err(Error::dim(x.len(), g.len()));
            }
            descend(x, g, scale)
        }
        (
            SgdParams::Factors(f),
            Gradient::Factor {
                row,
                col,
                d_left,
                d_right,
            },
        ) => {
            if *row >= f.n_rows() || *col >= f.n_cols() {
                return Err(Error::Argument(format!("factor index ({row}, {col}) out of range")));
            }
            if d_left.len() != f.rank() || d_right.len() != f.rank() {
                return Err(Error::dim(f.rank(), d_left.len().max(d_right.len())));
            }
            descend(f.left.col_mut(*row), d_left, scale) & descend(f.right.col_mut(*col), d_right, scale)
        }
        _ => return Err(Error::Argument("gradient shape does not match the model".into())),
    };
    if finite {
        Ok(())
    } else {
        Err(Error::Divergence {
            epoch: model.epoch + 1,
            step_size: alpha,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `alpha0 / e` for every step of epoch `e`.
    PerEpoch,
    /// `alpha0 / t` for the `t`-th step overall.
    PerStep,
}

#[derive(Debug, Clone)]
pub struct SgdConfig {
    pub alpha0: f64,
    pub epochs: usize,
    pub seed: u64,
    pub schedule: StepSchedule,
    pub workers: usize,
    pub ledger: LedgerConfig,
}

impl SgdConfig {
    pub fn new(alpha0: f64, epochs: usize) -> Self {
        Self {
            alpha0,
            epochs,
            seed: 0,
            schedule: StepSchedule::PerEpoch,
            workers: 1,
            ledger: LedgerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    /// Step size at the start of the epoch.
    pub step_size: f64,
}

#[derive(Debug)]
pub struct SgdFit {
    pub model: SgdModel,
    pub trace: Vec<EpochRecord>,
    pub ledger: IterationLedger<SgdModel>,
}

/// Starting point: zeros for vector models, small seeded uniform entries in
/// `(-0.5/sqrt(r), 0.5/sqrt(r))` for factors.
pub fn initial_params(obj: &Objective, data: Examples<'_>, rng: &mut impl Rng) -> Result<SgdParams> {
    match (obj, data) {
        (Objective::Recommendation { rank, .. }, Examples::Ratings(r)) => {
            let bound = 0.5 / (*rank as f64).sqrt();
            let mut draw = |cols: usize| {
                let values = (0..rank * cols).map(|_| rng.random_range(-bound..bound)).collect();
                Matrix::from_column_major(*rank, cols, values)
            };
            Ok(SgdParams::Factors(Factors {
                left: draw(r.n_rows())?,
                right: draw(r.n_cols())?,
            }))
        }
        (obj, Examples::Labeled(d)) if !obj.is_factorization() => {
            Ok(SgdParams::Vector(DenseVector::zeros(d.n_features())))
        }
        (obj, _) => Err(Error::Argument(format!("objective {} does not fit this data", obj.name()))),
    }
}

/// A base step size scaled to the data: `1 / (N L)` with `L` a bound on the
/// curvature of a single term, so that the first epoch's steps
/// `alpha0 * N * g_i` cannot overshoot any one term.
pub fn suggested_alpha0(obj: &Objective, data: Examples<'_>) -> f64 {
    let n = data.len().max(1) as f64;
    let curvature = match data {
        Examples::Labeled(d) => {
            let max_sq = (0..d.n_rows())
                .map(|i| d.feature_row(i).iter().map(|v| v * v).sum::<f64>())
                .fold(0.0, f64::max);
            let scale = match obj {
                Objective::LeastSquares | Objective::Lasso { .. } => 2.0,
                Objective::Logistic => 0.25,
                Objective::SvmHinge | Objective::Recommendation { .. } => 1.0,
            };
            scale * max_sq
        }
        Examples::Ratings(r) => {
            let max_abs = r.entries().iter().map(|e| e.value.abs()).fold(0.0, f64::max);
            let mu = match obj {
                Objective::Recommendation { mu, .. } => *mu,
                _ => 0.0,
            };
            2.0 * (1.0 + max_abs) + 2.0 * mu
        }
    };
    1.0 / (n * curvature.max(f64::MIN_POSITIVE))
}

pub fn sgd_fit(data: Examples<'_>, obj: &Objective, config: &SgdConfig) -> Result<SgdFit> {
    obj.validate()?;
    if !(config.alpha0 > 0.0 && config.alpha0.is_finite()) {
        return Err(Error::Argument("alpha0 must be positive and finite".into()));
    }
    if config.epochs == 0 {
        return Err(Error::Argument("epochs must be at least 1".into()));
    }
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyInput("SGD over zero examples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = SgdModel {
        params: initial_params(obj, data, &mut rng)?,
        epoch: 0,
        alpha0: config.alpha0,
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut step_sizes = Vec::with_capacity(config.epochs);
    let outcome = iterate(
        &data,
        config.workers,
        start,
        config.epochs,
        config.ledger.clone(),
        |current: &SgdModel, data: &Examples<'_>, workers| {
            let mut model = current.clone();
            let epoch = model.epoch + 1;
            order.shuffle(&mut rng);
            step_sizes.push(config.alpha0 / epoch as f64);
            for (k, &i) in order.iter().enumerate() {
                let alpha = match config.schedule {
                    StepSchedule::PerEpoch => config.alpha0 / epoch as f64,
                    StepSchedule::PerStep => config.alpha0 / (model.epoch * n + k + 1) as f64,
                };
                let g = term_gradient(obj, &model.params, data.example(i)?, n)?;
                sgd_step(&mut model, &g, alpha, n)?;
            }
            model.epoch = epoch;
            let value = objective_value(obj, &model.params, *data, workers)?;
            if !value.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    step_size: config.alpha0 / epoch as f64,
                });
            }
            Ok((model, value))
        },
        |_| false,
    )?;
    let trace = outcome
        .ledger
        .entries()
        .iter()
        .zip(&step_sizes)
        .map(|(e, &step_size)| EpochRecord {
            epoch: e.iteration,
            objective: e.diagnostic,
            step_size,
        })
        .collect();
    Ok(SgdFit {
        model: outcome.state,
        trace,
        ledger: outcome.ledger,
    })
}
