//! Convex objectives, their single-term gradients and full values.

use serde::{Deserialize, Serialize};

use super::{Examples, Factors, Ratings, SgdParams};
use crate::data::{DataRow, Dataset};
use crate::error::{Error, Result};
use crate::fold::{run_parallel, FoldSpec};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `sum (x'u - y)^2`
    LeastSquares,
    /// `sum (x'u - y)^2 + mu |x|_1`
    Lasso { mu: f64 },
    /// `sum log(1 + exp(-y x'u))`, labels in {-1, +1}
    Logistic,
    /// `sum (1 - y x'u)_+`, labels in {-1, +1}
    SvmHinge,
    /// `sum over observed (L_i'R_j - M_ij)^2 + mu (|L|_F^2 + |R|_F^2)`
    Recommendation { mu: f64, rank: usize },
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Objective::Lasso { mu } | Objective::Recommendation { mu, .. } if !(mu >= 0.0 && mu.is_finite()) => {
                Err(Error::Argument(format!("mu must be finite and non-negative, got {mu}")))
            }
            Objective::Recommendation { rank: 0, .. } => Err(Error::Argument("rank must be at least 1".into())),
            _ => Ok(()),
        }
    }

    pub fn is_factorization(&self) -> bool {
        matches!(self, Objective::Recommendation { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::LeastSquares => "least_squares",
            Objective::Lasso { .. } => "lasso",
            Objective::Logistic => "logistic",
            Objective::SvmHinge => "hinge",
            Objective::Recommendation { .. } => "recommendation",
        }
    }
}

/// One term of the objective.
#[derive(Debug, Clone, Copy)]
pub enum Example<'a> {
    Labeled {
        index: usize,
        features: &'a [f64],
        label: f64,
    },
    Rating {
        index: usize,
        row: usize,
        col: usize,
        value: f64,
        /// Observations in this row and column, for amortizing the regularizer.
        row_count: u64,
        col_count: u64,
    },
}

impl<'a> Example<'a> {
    pub fn from_row(row: DataRow<'a>) -> Result<Self> {
        Ok(Example::Labeled {
            index: row.index,
            features: row.features,
            label: row.label_or_err()?,
        })
    }
}

/// Gradient of one term: dense for vector models, two factor columns for
/// factorizations.
#[derive(Debug, Clone, PartialEq)]
pub enum Gradient {
    Dense(Vec<f64>),
    Factor {
        row: usize,
        col: usize,
        d_left: Vec<f64>,
        d_right: Vec<f64>,
    },
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        match self {
            Gradient::Dense(g) => dot(g, g).sqrt(),
            Gradient::Factor { d_left, d_right, .. } => (dot(d_left, d_left) + dot(d_right, d_right)).sqrt(),
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn signed_label(index: usize, label: f64) -> Result<f64> {
    if label == 1.0 || label == -1.0 {
        Ok(label)
    } else {
        Err(Error::data(index, format!("label must be -1 or +1, got {label}")))
    }
}

fn vector_params<'p>(params: &'p SgdParams, features: &[f64]) -> Result<&'p [f64]> {
    match params {
        SgdParams::Vector(x) if x.len() == features.len() => Ok(x),
        SgdParams::Vector(x) => Err(Error::dim(x.len(), features.len())),
        SgdParams::Factors(_) => Err(Error::Argument("vector example given to a factorization model".into())),
    }
}

fn factor_params(params: &SgdParams) -> Result<&Factors> {
    match params {
        SgdParams::Factors(f) => Ok(f),
        SgdParams::Vector(_) => Err(Error::Argument("rating example given to a vector model".into())),
    }
}

fn check_kind(obj: &Objective, example: &Example<'_>) -> Result<()> {
    match (obj.is_factorization(), example) {
        (false, Example::Labeled { .. }) | (true, Example::Rating { .. }) => Ok(()),
        _ => Err(Error::Argument(format!("example shape does not fit objective {}", obj.name()))),
    }
}

/// Gradient (or subgradient at kinks) of the single term `f_i`.
///
/// `num_examples` is `N`, over which the lasso penalty is spread.
pub fn term_gradient(obj: &Objective, params: &SgdParams, example: Example<'_>, num_examples: usize) -> Result<Gradient> {
    check_kind(obj, &example)?;
    match example {
        Example::Labeled { index, features: u, label: y } => {
            let x = vector_params(params, u)?;
            let z = dot(x, u);
            let scale_u = |c: f64| u.iter().map(|ui| c * ui).collect::<Vec<f64>>();
            let g = match *obj {
                Objective::LeastSquares => scale_u(2.0 * (z - y)),
                Objective::Lasso { mu } => {
                    let mut g = scale_u(2.0 * (z - y));
                    let w = mu / num_examples.max(1) as f64;
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += w * sign(*xi);
                    }
                    g
                }
                Objective::Logistic => {
                    let y = signed_label(index, y)?;
                    scale_u(-y * sigmoid(-y * z))
                }
                Objective::SvmHinge => {
                    let y = signed_label(index, y)?;
                    if 1.0 - y * z > 0.0 {
                        scale_u(-y)
                    } else {
                        vec![0.0; u.len()]
                    }
                }
                Objective::Recommendation { .. } => unreachable!("checked above"),
            };
            Ok(Gradient::Dense(g))
        }
        Example::Rating {
            index,
            row,
            col,
            value,
            row_count,
            col_count,
        } => {
            let Objective::Recommendation { mu, .. } = *obj else {
                unreachable!("checked above")
            };
            let f = factor_params(params)?;
            if row >= f.n_rows() || col >= f.n_cols() {
                return Err(Error::data(index, format!("rating index ({row}, {col}) outside the factor shape")));
            }
            let (l, r) = (f.left(row), f.right(col));
            let e = dot(l, r) - value;
            let wl = 2.0 * mu / row_count.max(1) as f64;
            let wr = 2.0 * mu / col_count.max(1) as f64;
            Ok(Gradient::Factor {
                row,
                col,
                d_left: r.iter().zip(l).map(|(rj, li)| 2.0 * e * rj + wl * li).collect(),
                d_right: l.iter().zip(r).map(|(li, rj)| 2.0 * e * li + wr * rj).collect(),
            })
        }
    }
}

/// Value of the single term `f_i`, with its share of any regularizer.
pub fn term_value(obj: &Objective, params: &SgdParams, example: Example<'_>, num_examples: usize) -> Result<f64> {
    check_kind(obj, &example)?;
    match example {
        Example::Labeled { index, features: u, label: y } => {
            let x = vector_params(params, u)?;
            let z = dot(x, u);
            Ok(match *obj {
                Objective::LeastSquares => (z - y) * (z - y),
                Objective::Lasso { mu } => {
                    (z - y) * (z - y) + mu / num_examples.max(1) as f64 * x.iter().map(|v| v.abs()).sum::<f64>()
                }
                Objective::Logistic => softplus(-signed_label(index, y)? * z),
                Objective::SvmHinge => (1.0 - signed_label(index, y)? * z).max(0.0),
                Objective::Recommendation { .. } => unreachable!("checked above"),
            })
        }
        Example::Rating {
            index,
            row,
            col,
            value,
            row_count,
            col_count,
        } => {
            let Objective::Recommendation { mu, .. } = *obj else {
                unreachable!("checked above")
            };
            let f = factor_params(params)?;
            if row >= f.n_rows() || col >= f.n_cols() {
                return Err(Error::data(index, format!("rating index ({row}, {col}) outside the factor shape")));
            }
            let (l, r) = (f.left(row), f.right(col));
            let e = dot(l, r) - value;
            Ok(e * e + mu / row_count.max(1) as f64 * dot(l, l) + mu / col_count.max(1) as f64 * dot(r, r))
        }
    }
}

/// Loss part of the objective as a fold; the regularizer is added once at
/// the end.
pub struct ObjectiveFold<'a> {
    pub objective: &'a Objective,
    pub params: &'a SgdParams,
}

impl ObjectiveFold<'_> {
    fn loss(&self, example: Example<'_>) -> Result<f64> {
        let plain = match self.objective {
            Objective::Lasso { .. } => Objective::LeastSquares,
            Objective::Recommendation { rank, .. } => Objective::Recommendation { mu: 0.0, rank: *rank },
            other => *other,
        };
        term_value(&plain, self.params, example, 1)
    }

    fn regularizer(&self) -> f64 {
        match (self.objective, self.params) {
            (Objective::Lasso { mu }, SgdParams::Vector(x)) => mu * x.iter().map(|v| v.abs()).sum::<f64>(),
            (Objective::Recommendation { mu, .. }, SgdParams::Factors(f)) => mu * f.frobenius_squared(),
            _ => 0.0,
        }
    }
}

impl FoldSpec<Dataset> for ObjectiveFold<'_> {
    type State = f64;
    type Output = f64;

    fn identity(&self) -> f64 {
        0.0
    }

    fn transition(&self, state: &mut f64, row: DataRow<'_>) -> Result<()> {
        *state += self.loss(Example::from_row(row)?)?;
        Ok(())
    }

    fn merge(&self, left: f64, right: f64) -> Result<f64> {
        Ok(left + right)
    }

    fn finalize(&self, state: f64) -> Result<f64> {
        Ok(state + self.regularizer())
    }
}

impl FoldSpec<Ratings> for ObjectiveFold<'_> {
    type State = f64;
    type Output = f64;

    fn identity(&self) -> f64 {
        0.0
    }

    fn transition(&self, state: &mut f64, row: Example<'_>) -> Result<()> {
        *state += self.loss(row)?;
        Ok(())
    }

    fn merge(&self, left: f64, right: f64) -> Result<f64> {
        Ok(left + right)
    }

    fn finalize(&self, state: f64) -> Result<f64> {
        Ok(state + self.regularizer())
    }
}

/// The full objective `f(x)` over all examples, computed with `workers` threads.
pub fn objective_value(obj: &Objective, params: &SgdParams, data: Examples<'_>, workers: usize) -> Result<f64> {
    obj.validate()?;
    let spec = ObjectiveFold { objective: obj, params };
    match data {
        Examples::Labeled(d) => run_parallel(&spec, d, workers),
        Examples::Ratings(r) => run_parallel(&spec, r, workers),
    }
}
