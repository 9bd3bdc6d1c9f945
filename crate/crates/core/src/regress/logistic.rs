//! Binary logistic regression by iteratively reweighted least squares.
//!
//! Each iteration is one fold. With `mu = sigma(x^T b)` and weight
//! `D = mu (1 - mu)`, a row contributes `D x x^T` to `X^T D X` and
//! `x (D x^T b + y - mu)` to `X^T D z`, where `z = x^T b + (y - mu) / D`.
//! The next iterate is `pinv(X^T D X) X^T D z`, which is exactly a Newton
//! step on the log-likelihood.

use serde::{Deserialize, Serialize};

use crate::data::{DataRow, Dataset};
use crate::driver::{iterate, Footprint, IterationLedger, LedgerConfig};
use crate::error::{Error, Result};
use crate::fold::{fold_parallel, FoldSpec};
use crate::linalg::{dot, spd_pseudo_inverse, DenseVector, SymMatrixLower};

const MIN_WEIGHT: f64 = 1e-12;
const DIVERGENCE_NORM: f64 = 1e8;
const SEPARATION_LOG_LIKELIHOOD: f64 = -1e-6;

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Transition state of one IRLS pass: the coefficients the pass is
/// evaluated at, plus the weighted sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegrState {
    pub coef_prev: DenseVector,
    pub x_transp_d_x: SymMatrixLower,
    pub x_transp_d_z: Vec<f64>,
    pub log_likelihood: f64,
    pub num_rows: u64,
}

/// One IRLS pass at fixed coefficients.
#[derive(Debug, Clone)]
pub struct IrlsStep {
    coef: DenseVector,
}

impl IrlsStep {
    pub fn new(coef: DenseVector) -> Self {
        Self { coef }
    }
}

impl FoldSpec<Dataset> for IrlsStep {
    type State = LogRegrState;
    /// Next coefficients and the log-likelihood at the current ones.
    type Output = (DenseVector, f64);

    fn identity(&self) -> LogRegrState {
        let d = self.coef.len();
        LogRegrState {
            coef_prev: self.coef.clone(),
            x_transp_d_x: SymMatrixLower::zeros(d),
            x_transp_d_z: vec![0.0; d],
            log_likelihood: 0.0,
            num_rows: 0,
        }
    }

    fn transition(&self, state: &mut LogRegrState, row: DataRow<'_>) -> Result<()> {
        let y = row.label_or_err()?;
        if y != 0.0 && y != 1.0 {
            return Err(Error::data(row.index, format!("logistic label must be 0 or 1, got {y}")));
        }
        let x = row.features;
        if x.len() != self.coef.len() {
            return Err(Error::dim(self.coef.len(), x.len()));
        }
        let eta = dot(x, &self.coef);
        let mu = sigmoid(eta);
        let weight = (mu * (1.0 - mu)).max(MIN_WEIGHT);
        state.x_transp_d_x.rank_one_update_scaled(weight, x)?;
        let target = weight * eta + y - mu;
        for (acc, xi) in state.x_transp_d_z.iter_mut().zip(x) {
            *acc += xi * target;
        }
        // log sigma(s * eta) with s = +1 for y = 1, -1 for y = 0
        let signed = if y == 1.0 { eta } else { -eta };
        state.log_likelihood -= softplus(-signed);
        state.num_rows += 1;
        Ok(())
    }

    fn merge(&self, mut left: LogRegrState, right: LogRegrState) -> Result<LogRegrState> {
        if left.coef_prev.len() != right.coef_prev.len() {
            return Err(Error::dim(left.coef_prev.len(), right.coef_prev.len()));
        }
        left.x_transp_d_x.add_assign(&right.x_transp_d_x)?;
        for (a, b) in left.x_transp_d_z.iter_mut().zip(&right.x_transp_d_z) {
            *a += b;
        }
        left.log_likelihood += right.log_likelihood;
        left.num_rows += right.num_rows;
        Ok(left)
    }

    fn finalize(&self, state: LogRegrState) -> Result<(DenseVector, f64)> {
        if state.num_rows == 0 {
            return Err(Error::EmptyInput("logistic regression over zero rows"));
        }
        let decomposition = spd_pseudo_inverse(&state.x_transp_d_x)?;
        let next = decomposition.pseudo_inverse.mul_vec(&state.x_transp_d_z)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::PerfectSeparation("coefficients became non-finite".into()));
        }
        Ok((DenseVector::new(next)?, state.log_likelihood))
    }
}

/// One IRLS iteration: returns the next coefficients and the
/// log-likelihood evaluated at `coef`.
pub fn logregr_irls_step(data: &Dataset, coef: &DenseVector, workers: usize) -> Result<(DenseVector, f64)> {
    let spec = IrlsStep::new(coef.clone());
    spec.finalize(fold_parallel(&spec, data, workers)?)
}

/// Inter-iteration state kept by the driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlsIterate {
    pub coef: DenseVector,
    /// Log-likelihood at the previous iterate (the one this was computed from).
    pub log_likelihood: f64,
    /// `max |coef - previous coef|`
    pub step_inf: f64,
}

impl Footprint for IrlsIterate {
    fn footprint_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.coef.len() * std::mem::size_of::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct LogRegrConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub workers: usize,
    /// Starting coefficients; zeros when `None`.
    pub init: Option<DenseVector>,
    pub ledger: LedgerConfig,
}

impl Default for LogRegrConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            workers: 1,
            init: None,
            ledger: LedgerConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct LogRegrFit {
    pub coef: DenseVector,
    /// Log-likelihood at `coef`.
    pub log_likelihood: f64,
    pub num_iterations: usize,
    pub converged: bool,
    /// False if the log-likelihood ever decreased between iterations.
    pub monotone: bool,
    pub ledger: IterationLedger<IrlsIterate>,
}

pub fn logregr_fit(data: &Dataset, config: &LogRegrConfig) -> Result<LogRegrFit> {
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    let d = data.n_features();
    let init = match &config.init {
        Some(c) if c.len() != d => return Err(Error::dim(d, c.len())),
        Some(c) => c.clone(),
        None => DenseVector::zeros(d),
    };
    let start = IrlsIterate {
        coef: init,
        log_likelihood: f64::MIN,
        step_inf: f64::INFINITY,
    };
    let tol = config.tol;
    let outcome = iterate(
        data,
        config.workers,
        start,
        config.max_iter,
        config.ledger.clone(),
        |current: &IrlsIterate, data: &Dataset, workers| {
            let (next, log_likelihood) = logregr_irls_step(data, &current.coef, workers)?;
            let norm = next.norm_inf();
            if norm > DIVERGENCE_NORM {
                return Err(Error::PerfectSeparation(format!(
                    "coefficient norm {norm:e} exceeds {DIVERGENCE_NORM:e}"
                )));
            }
            if log_likelihood > SEPARATION_LOG_LIKELIHOOD && norm > current.coef.norm_inf() && norm > 1.0 {
                return Err(Error::PerfectSeparation(format!(
                    "log-likelihood {log_likelihood:e} tends to 0 while the coefficient norm grows to {norm:e}"
                )));
            }
            let step_inf = next
                .iter()
                .zip(current.coef.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Ok((
                IrlsIterate {
                    coef: next,
                    log_likelihood,
                    step_inf,
                },
                log_likelihood,
            ))
        },
        |ledger| ledger.last_state().is_some_and(|s| s.step_inf < tol),
    )?;

    let diagnostics = outcome.ledger.diagnostics();
    let monotone = diagnostics
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
    let coef = outcome.state.coef;
    let (_, log_likelihood) = logregr_irls_step(data, &coef, config.workers)?;
    Ok(LogRegrFit {
        coef,
        log_likelihood,
        num_iterations: outcome.ledger.len(),
        converged: outcome.converged,
        monotone,
        ledger: outcome.ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_pair() -> Dataset {
        Dataset::from_rows(&[vec![1.0], vec![1.0]], Some(vec![0.0, 1.0])).unwrap()
    }

    #[test]
    fn symmetric_intercept_fixed_point() {
        let (next, ll) = logregr_irls_step(&sym_pair(), &DenseVector::zeros(1), 1).unwrap();
        assert_eq!(next[0], 0.0);
        assert!((ll - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        let fit = logregr_fit(&sym_pair(), &LogRegrConfig::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.num_iterations, 1);
        assert!(fit.coef[0].abs() < 1e-10);
    }

    #[test]
    fn first_step_from_zero_is_scaled_least_squares() {
        let rows = [vec![1.0, 0.3], vec![1.0, -1.2], vec![1.0, 2.0], vec![1.0, 0.7], vec![1.0, -0.4]];
        let y = vec![1.0, 0.0, 1.0, 0.0, 0.0];
        let ds = Dataset::from_rows(&rows, Some(y.clone())).unwrap();
        let (next, _) = logregr_irls_step(&ds, &DenseVector::zeros(2), 1).unwrap();
        // 4 pinv(X^T X) X^T (y - 1/2), computed directly
        let mut xtx = SymMatrixLower::zeros(2);
        let mut xtr = [0.0; 2];
        for (x, yi) in rows.iter().zip(&y) {
            xtx.rank_one_update(x).unwrap();
            xtr[0] += x[0] * (yi - 0.5);
            xtr[1] += x[1] * (yi - 0.5);
        }
        let expect = spd_pseudo_inverse(&xtx).unwrap().pseudo_inverse.mul_vec(&xtr).unwrap();
        for j in 0..2 {
            assert!((next[j] - 4.0 * expect[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn label_validation() {
        let ds = Dataset::from_rows(&[vec![1.0], vec![1.0]], Some(vec![0.0, 2.0])).unwrap();
        assert!(matches!(
            logregr_irls_step(&ds, &DenseVector::zeros(1), 1),
            Err(Error::Data { row: 1, .. })
        ));
    }

    #[test]
    fn separable_data_is_reported() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64 - 4.5]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i >= 5 { 1.0 } else { 0.0 }).collect();
        let ds = Dataset::from_rows(&rows, Some(y)).unwrap();
        let err = logregr_fit(&ds, &LogRegrConfig::default()).unwrap_err();
        assert!(matches!(err, Error::PerfectSeparation(_)), "{err}");
    }

    #[test]
    fn seeded_fixed_point_converges_immediately() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, ((i * 7) % 11) as f64 / 5.0 - 1.0]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 3) % 5 < 2) as u8 as f64).collect();
        let ds = Dataset::from_rows(&rows, Some(y)).unwrap();
        let fit = logregr_fit(&ds, &LogRegrConfig::default()).unwrap();
        assert!(fit.converged && fit.monotone);
        let again = logregr_fit(
            &ds,
            &LogRegrConfig {
                init: Some(fit.coef.clone()),
                ..LogRegrConfig::default()
            },
        )
        .unwrap();
        assert!(again.num_iterations <= 2);
    }

    #[test]
    fn max_iter_exhaustion_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, ((i * 7) % 11) as f64 / 5.0 - 1.0]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 3) % 5 < 2) as u8 as f64).collect();
        let ds = Dataset::from_rows(&rows, Some(y)).unwrap();
        let fit = logregr_fit(
            &ds,
            &LogRegrConfig {
                max_iter: 1,
                ..LogRegrConfig::default()
            },
        )
        .unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.num_iterations, 1);
    }
}
