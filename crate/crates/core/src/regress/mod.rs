//! Least-squares and logistic regression as folds.

mod linear;
mod logistic;
mod stats;

pub use linear::{linregr, linregr_final, linregr_transition, LinRegrResult, LinRegrState, LinearRegression};
pub use logistic::{
    logregr_fit, logregr_irls_step, IrlsIterate, IrlsStep, LogRegrConfig, LogRegrFit, LogRegrState,
};
pub use stats::student_t_two_sided_p;
