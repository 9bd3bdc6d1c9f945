use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `dof`
/// degrees of freedom, via the regularized incomplete beta function
/// `I_{v/(v+t^2)}(v/2, 1/2)`. Infinite `t` gives 0.
pub fn student_t_two_sided_p(t: f64, dof: u64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Argument("Student t needs at least one degree of freedom".into()));
    }
    if t.is_nan() {
        return Err(Error::Numeric("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let nu = dof as f64;
    let x = nu / (nu + t * t);
    Ok(beta_reg(nu / 2.0, 0.5, x).clamp(0.0, 1.0))
}
