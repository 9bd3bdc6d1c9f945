use super::{Matrix, SymMatrixLower};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric positive semidefinite matrix together
/// with its Moore-Penrose pseudo-inverse.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix,
    pub pseudo_inverse: SymMatrixLower,
    /// `lambda_max / lambda_min` over retained eigenvalues; `+inf` when
    /// the matrix is rank deficient.
    pub condition_no: f64,
    pub rank: usize,
    /// Eigenvalues at or below this are treated as zero.
    pub tolerance: f64,
}

impl EigenDecomposition {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.eigenvalues.len()
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix given row-major.
/// Returns unsorted eigenvalues and the column-major eigenvector matrix.
fn jacobi(dim: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Matrix)> {
    let n = dim;
    let mut v = Matrix::identity(n);
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].abs())
            .sum();
        if off == 0.0 {
            return Ok(((0..n).map(|i| a[i * n + i]).collect(), v));
        }
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold {
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = akp - s * (akq + tau * akp);
                    let new_kq = akq + s * (akp - tau * akq);
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp - s * (vkq + tau * vkp));
                    v.set(k, q, vkq + s * (vkp - tau * vkq));
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
    )))
}

/// Eigen-decomposes a Gram-type matrix and forms its pseudo-inverse.
///
/// Eigenvalues at or below `d * eps * max|lambda|` count as zero. An
/// eigenvalue below minus that tolerance means the input was not PSD.
pub fn spd_pseudo_inverse(m: &SymMatrixLower) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let d = m.dim();
    let (values, vectors) = jacobi(d, m.to_full())?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = Matrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.col_mut(dst).copy_from_slice(vectors.col(src));
    }

    let scale = eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tolerance = d as f64 * f64::EPSILON * scale;
    if let Some(&lowest) = eigenvalues.first() {
        if lowest < -tolerance {
            return Err(Error::NotPsd {
                eigenvalue: lowest,
                tolerance,
            });
        }
    }

    let mut pinv = vec![0.0; d * d];
    let mut rank = 0;
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        if lambda <= tolerance {
            continue;
        }
        rank += 1;
        let inv = 1.0 / lambda;
        let v = eigenvectors.col(i);
        for r in 0..d {
            let w = inv * v[r];
            for c in 0..=r {
                pinv[r * d + c] += w * v[c];
            }
        }
    }
    let pseudo_inverse = SymMatrixLower::from_full(d, &pinv)?;

    let condition_no = if rank == d && d > 0 {
        eigenvalues[d - 1] / eigenvalues[0]
    } else {
        f64::INFINITY
    };

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        pseudo_inverse,
        condition_no,
        rank,
        tolerance,
    })
}
