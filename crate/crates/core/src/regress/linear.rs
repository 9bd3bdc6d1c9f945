//! Ordinary least squares in one pass.
//!
//! The transition accumulates `n`, `sum(y)`, `sum(y^2)`, `X^T y` and the lower
//! triangle of `X^T X`; merging adds the sums. The final step solves the
//! normal equations through the eigen pseudo-inverse of `X^T X`, so
//! rank-deficient designs still produce the minimum-norm solution.

use serde::{Deserialize, Serialize};

use super::stats::student_t_two_sided_p;
use crate::data::{DataRow, Dataset};
use crate::error::{Error, Result};
use crate::fold::{run_parallel, FoldSpec};
use crate::linalg::{dot, spd_pseudo_inverse, DenseVector, SymMatrixLower};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinRegrState {
    pub num_rows: u64,
    /// Zero until the first row fixes it.
    pub width_of_x: usize,
    pub y_sum: f64,
    pub y_square_sum: f64,
    pub x_transp_y: Vec<f64>,
    pub x_transp_x: SymMatrixLower,
}

impl Default for LinRegrState {
    fn default() -> Self {
        Self {
            num_rows: 0,
            width_of_x: 0,
            y_sum: 0.0,
            y_square_sum: 0.0,
            x_transp_y: Vec::new(),
            x_transp_x: SymMatrixLower::zeros(0),
        }
    }
}

impl LinRegrState {
    pub fn is_empty(&self) -> bool {
        self.num_rows == 0
    }

    pub fn add_row(&mut self, y: f64, x: &[f64]) -> Result<()> {
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite value in regression row".into()));
        }
        if self.num_rows == 0 {
            // the first row determines the number of independent variables
            *self = Self {
                width_of_x: x.len(),
                x_transp_y: vec![0.0; x.len()],
                x_transp_x: SymMatrixLower::zeros(x.len()),
                ..Self::default()
            };
        } else if x.len() != self.width_of_x {
            return Err(Error::dim(self.width_of_x, x.len()));
        }
        self.num_rows += 1;
        self.y_sum += y;
        self.y_square_sum += y * y;
        for (acc, xi) in self.x_transp_y.iter_mut().zip(x) {
            *acc += xi * y;
        }
        self.x_transp_x.rank_one_update(x)
    }

    pub fn merge(mut self, other: Self) -> Result<Self> {
        if other.is_empty() {
            return Ok(self);
        }
        if self.is_empty() {
            return Ok(other);
        }
        if self.width_of_x != other.width_of_x {
            return Err(Error::dim(self.width_of_x, other.width_of_x));
        }
        self.num_rows += other.num_rows;
        self.y_sum += other.y_sum;
        self.y_square_sum += other.y_square_sum;
        for (a, b) in self.x_transp_y.iter_mut().zip(&other.x_transp_y) {
            *a += b;
        }
        self.x_transp_x.add_assign(&other.x_transp_x)?;
        Ok(self)
    }
}

pub fn linregr_transition(mut state: LinRegrState, y: f64, x: &[f64]) -> Result<LinRegrState> {
    state.add_row(y, x)?;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinRegrResult {
    pub coef: DenseVector,
    pub r2: f64,
    pub std_err: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub condition_no: f64,
    #[serde(skip)]
    pub rank: usize,
    #[serde(skip)]
    pub num_rows: u64,
}

pub fn linregr_final(state: &LinRegrState) -> Result<LinRegrResult> {
    if state.is_empty() {
        return Err(Error::EmptyInput("linear regression over zero rows"));
    }
    let n = state.num_rows;
    let xtx = &state.x_transp_x;
    let decomposition = spd_pseudo_inverse(xtx)?;
    let pinv = &decomposition.pseudo_inverse;
    let coef = pinv.mul_vec(&state.x_transp_y)?;

    let xtx_coef = xtx.mul_vec(&coef)?;
    let cross = dot(&coef, &state.x_transp_y);
    let quad = dot(&coef, &xtx_coef);
    let ssr = state.y_square_sum - 2.0 * cross + quad;
    // residual sum below the cancellation noise of the expanded form is zero
    let noise = 8.0 * f64::EPSILON * (state.y_square_sum + 2.0 * cross.abs() + quad.abs());
    let ssr = if ssr <= noise { 0.0 } else { ssr };
    let sst = (state.y_square_sum - state.y_sum * state.y_sum / n as f64).max(0.0);
    let tol = 1e-12 * state.y_square_sum.max(1.0);
    let r2 = if sst <= tol {
        if ssr <= tol {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    };

    let rank = decomposition.rank;
    if n <= rank as u64 {
        return Err(Error::DegreesOfFreedom { rows: n, rank });
    }
    let dof = n - rank as u64;
    let sigma2 = ssr / dof as f64;
    let std_err: Vec<f64> = (0..state.width_of_x)
        .map(|j| (sigma2 * pinv.get(j, j)).max(0.0).sqrt())
        .collect();
    let t_stats: Vec<f64> = coef
        .iter()
        .zip(&std_err)
        .map(|(&c, &se)| {
            if se > 0.0 {
                c / se
            } else if c == 0.0 {
                0.0
            } else {
                c.signum() * f64::INFINITY
            }
        })
        .collect();
    let p_values = t_stats
        .iter()
        .map(|&t| student_t_two_sided_p(t, dof))
        .collect::<Result<Vec<_>>>()?;

    Ok(LinRegrResult {
        coef: DenseVector::new(coef)?,
        r2,
        std_err,
        t_stats,
        p_values,
        condition_no: decomposition.condition_no,
        rank,
        num_rows: n,
    })
}

/// OLS as a fold over labelled dataset rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearRegression;

impl FoldSpec<Dataset> for LinearRegression {
    type State = LinRegrState;
    type Output = LinRegrResult;

    fn identity(&self) -> LinRegrState {
        LinRegrState::default()
    }

    fn transition(&self, state: &mut LinRegrState, row: DataRow<'_>) -> Result<()> {
        let y = row.label_or_err()?;
        state.add_row(y, row.features)
    }

    fn merge(&self, left: LinRegrState, right: LinRegrState) -> Result<LinRegrState> {
        left.merge(right)
    }

    fn finalize(&self, state: LinRegrState) -> Result<LinRegrResult> {
        linregr_final(&state)
    }
}

pub fn linregr(data: &Dataset, workers: usize) -> Result<LinRegrResult> {
    run_parallel(&LinearRegression, data, workers)
}
