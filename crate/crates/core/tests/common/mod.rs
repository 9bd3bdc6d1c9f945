//! Seeded data generators and independent reference solvers shared by the
//! integration and acceptance tests. Nothing here calls into the library's
//! numerical kernels.

#![allow(dead_code)]

use foldstat::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major uniform[-1, 1] features.
pub fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// `y = X b + N(0, sigma^2)` with `b` drawn uniform[-2, 2]. Returns the data
/// and the true coefficients.
pub fn linear_data(seed: u64, n: usize, d: usize, sigma: f64) -> (Dataset, Vec<f64>) {
    let mut r = rng(seed);
    let rows = uniform_rows(&mut r, n, d);
    let b: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    let noise = Normal::new(0.0, sigma).unwrap();
    let y = rows
        .iter()
        .map(|x| x.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>() + noise.sample(&mut r))
        .collect();
    (Dataset::from_rows(&rows, Some(y)).unwrap(), b)
}

/// Logistic data with {0,1} labels, an intercept column first, and `d`
/// linearly independent point pairs carrying opposite labels so that no
/// hyperplane separates the classes.
pub fn logistic_data(seed: u64, n: usize, d: usize) -> Dataset {
    assert!(n >= 2 * d && d >= 1);
    let mut r = rng(seed);
    let beta: Vec<f64> = (0..d).map(|_| r.random_range(-1.5..1.5)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for j in 0..d {
        // e_j shifted onto the intercept column: independent directions
        let mut x = vec![0.0; d];
        x[0] = 1.0;
        if j > 0 {
            x[j] = 1.0;
        }
        rows.push(x.clone());
        y.push(0.0);
        rows.push(x);
        y.push(1.0);
    }
    while rows.len() < n {
        let mut x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        x[0] = 1.0;
        let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let p = 1.0 / (1.0 + (-eta).exp());
        y.push(if r.random::<f64>() < p { 1.0 } else { 0.0 });
        rows.push(x);
    }
    Dataset::from_rows(&rows, Some(y)).unwrap()
}

/// Two Gaussian blobs in 2-D with unit variance centered at `(-c, 0)` and
/// `(c, 0)`. Returns the data and each row's blob.
pub fn two_blobs(seed: u64, per_blob: usize, c: f64, sd: f64) -> (Dataset, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut rows = Vec::new();
    let mut blob = Vec::new();
    for i in 0..2 * per_blob {
        let b = i % 2;
        let cx = if b == 0 { -c } else { c };
        rows.push(vec![cx + noise.sample(&mut r), noise.sample(&mut r)]);
        blob.push(b);
    }
    (Dataset::from_rows(&rows, None).unwrap(), blob)
}

/// Dense Gaussian elimination with partial pivoting on `a x = b`, `a`
/// row-major `n x n`.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        assert!(a[pivot * n + col] != 0.0, "singular system");
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x
}

/// `(X^T X, X^T y)` by straightforward summation, `X^T X` row-major.
pub fn normal_equations(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let d = data.n_features();
    let y = data.labels().unwrap();
    let mut xtx = vec![0.0; d * d];
    let mut xty = vec![0.0; d];
    for i in 0..data.n_rows() {
        let x = data.feature_row(i);
        for r in 0..d {
            xty[r] += x[r] * y[i];
            for c in 0..d {
                xtx[r * d + c] += x[r] * x[c];
            }
        }
    }
    (xtx, xty)
}

pub fn ols_oracle(data: &Dataset) -> Vec<f64> {
    let (xtx, xty) = normal_equations(data);
    solve_dense(xtx, xty)
}

pub fn logistic_log_likelihood(data: &Dataset, beta: &[f64]) -> f64 {
    let y = data.labels().unwrap();
    (0..data.n_rows())
        .map(|i| {
            let eta: f64 = data.feature_row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            let s = if y[i] == 1.0 { eta } else { -eta };
            -((-s).exp().ln_1p())
        })
        .sum()
}

/// Newton's method on the logistic log-likelihood with step halving, run
/// until the step is below 1e-13 in every coordinate.
pub fn logistic_newton_oracle(data: &Dataset) -> Vec<f64> {
    let d = data.n_features();
    let y = data.labels().unwrap();
    let mut beta = vec![0.0; d];
    for _ in 0..200 {
        let mut hess = vec![0.0; d * d];
        let mut grad = vec![0.0; d];
        for i in 0..data.n_rows() {
            let x = data.feature_row(i);
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            let w = p * (1.0 - p);
            for r in 0..d {
                grad[r] += (y[i] - p) * x[r];
                for c in 0..d {
                    hess[r * d + c] += w * x[r] * x[c];
                }
            }
        }
        let step = solve_dense(hess, grad);
        let base = logistic_log_likelihood(data, &beta);
        let mut t = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            if logistic_log_likelihood(data, &next) >= base - 1e-12 || t < 1e-6 {
                break;
            }
            t *= 0.5;
        }
        let size = step.iter().fold(0.0f64, |m, s| m.max((t * s).abs()));
        beta = next;
        if size < 1e-13 {
            break;
        }
    }
    beta
}

pub fn lloyd_objective(data: &Dataset, centers: &[Vec<f64>]) -> f64 {
    (0..data.n_rows())
        .map(|i| {
            centers
                .iter()
                .map(|c| c.iter().zip(data.feature_row(i)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Plain serial Lloyd iterations from given centers, keeping a center in
/// place when its cluster empties. Stops when assignments repeat.
pub fn naive_lloyd(data: &Dataset, mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d = data.n_features();
    let mut assign = vec![usize::MAX; data.n_rows()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, slot) in assign.iter_mut().enumerate() {
            let x = data.feature_row(i);
            let mut best = (0, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let dist: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist < best.1 {
                    best = (j, dist);
                }
            }
            if *slot != best.0 {
                changed = true;
                *slot = best.0;
            }
        }
        let mut sums = vec![vec![0.0; d]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(data.feature_row(i)) {
                *s += x;
            }
        }
        for j in 0..centers.len() {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    (centers, assign)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Zipf(s) sample over `1..=universe` by inverse CDF.
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(universe: usize, s: f64) -> Self {
        let mut cdf = Vec::with_capacity(universe);
        let mut acc = 0.0;
        for k in 1..=universe {
            acc += 1.0 / (k as f64).powf(s);
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Self { cdf }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u) + 1
    }
}
