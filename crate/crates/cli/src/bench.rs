use std::time::Instant;

use foldstat::regress::{linregr_final, LinearRegression};
use foldstat::{fold_parallel, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::commands::Outcome;
use crate::error::{CliError, ErrorKind};
use crate::report::{num, sig6, LedgerSummary};

pub const NOISE_SD: f64 = 0.1;

/// Features i.i.d. uniform on [-1, 1] and `y = X b + N(0, 0.1^2)` with `b`
/// drawn uniform on [-1, 1] from the same seeded stream.
pub fn synthetic_regression(rows: usize, vars: usize, seed: u64) -> Result<(Dataset, Vec<f64>), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..vars).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let noise = Normal::new(0.0, NOISE_SD).expect("valid sd");
    let mut x = Vec::with_capacity(rows * vars);
    let mut y = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut fit = 0.0;
        for bj in &b {
            let v: f64 = rng.random_range(-1.0..=1.0);
            fit += v * bj;
            x.push(v);
        }
        y.push(fit + noise.sample(&mut rng));
    }
    let data = Dataset::new(vars, x, Some(y))?;
    Ok((data, b))
}

fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ys` on `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

struct Cell {
    vars: usize,
    workers: usize,
    total: Vec<f64>,
    pass: Vec<f64>,
    finalize: Vec<f64>,
}

pub fn cmd_bench(
    algo: &str,
    vars: &[usize],
    rows: usize,
    threads: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Outcome, CliError> {
    if algo != "linregr" {
        return Err(CliError::argument(format!("unknown benchmark algorithm {algo:?}; supported: linregr")));
    }
    if vars.is_empty() || threads.is_empty() || vars.contains(&0) || threads.contains(&0) {
        return Err(CliError::argument("--vars and --threads need non-empty lists of positive integers"));
    }
    if rows == 0 || repeats == 0 {
        return Err(CliError::argument("--rows and --repeats must be at least 1"));
    }
    let widest = *vars.iter().max().expect("non-empty");
    // features plus labels for the widest dataset, which is the only one alive at a time
    let needed = (rows as u128) * (widest as u128 + 1) * 8;
    if let Some(avail) = available_memory() {
        if needed > (avail as u128) * 4 / 5 {
            return Err(CliError::new(
                ErrorKind::Sizing,
                format!("{rows} rows x {widest} variables needs {needed} bytes; only {avail} available"),
            ));
        }
    }

    let mut cells = Vec::new();
    let mut identical = true;
    for &k in vars {
        let (data, _) = synthetic_regression(rows, k, seed)?;
        for &p in threads {
            let mut cell = Cell {
                vars: k,
                workers: p,
                total: Vec::new(),
                pass: Vec::new(),
                finalize: Vec::new(),
            };
            let mut first: Option<Vec<u64>> = None;
            for _ in 0..repeats {
                let t0 = Instant::now();
                let state = fold_parallel(&LinearRegression, &data, p)?;
                let t1 = Instant::now();
                let result = linregr_final(&state)?;
                let t2 = Instant::now();
                cell.pass.push((t1 - t0).as_secs_f64());
                cell.finalize.push((t2 - t1).as_secs_f64());
                cell.total.push((t2 - t0).as_secs_f64());
                let bits: Vec<u64> = result.coef.iter().map(|c| c.to_bits()).collect();
                match &first {
                    None => first = Some(bits),
                    Some(f) => identical &= *f == bits,
                }
            }
            cells.push(cell);
        }
    }

    let base = threads[0];
    let table: Vec<Value> = cells
        .iter()
        .map(|c| {
            json!({
                "workers": c.workers,
                "vars": c.vars,
                "rows": rows,
                "median_seconds": num(median(&c.total)),
                "median_pass_seconds": num(median(&c.pass)),
                "median_final_seconds": num(median(&c.finalize)),
                "seconds": c.total.iter().map(|&s| num(s)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let per_row: Vec<(usize, f64)> = cells
        .iter()
        .filter(|c| c.workers == base)
        .map(|c| (c.vars, median(&c.pass) / rows as f64))
        .collect();
    let xs: Vec<f64> = per_row.iter().map(|(k, _)| (*k as f64).ln()).collect();
    let ys: Vec<f64> = per_row.iter().map(|(_, t)| t.ln()).collect();
    let exponent = fitted_slope(&xs, &ys);
    let speedup: Vec<Value> = cells
        .iter()
        .filter(|c| c.workers != base)
        .filter_map(|c| {
            let reference = cells.iter().find(|r| r.vars == c.vars && r.workers == base)?;
            Some(json!({
                "vars": c.vars,
                "workers": c.workers,
                "baseline_workers": base,
                "speedup": num(median(&reference.total) / median(&c.total)),
            }))
        })
        .collect();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = json!({
        "algo": algo,
        "rows": rows,
        "repeats": repeats,
        "cores": cores,
        "table": table,
        "per_row_seconds": per_row.iter().map(|(k, t)| json!({ "vars": k, "seconds": num(*t) })).collect::<Vec<_>>(),
        "per_row_exponent": exponent.map_or(Value::Null, num),
        "speedup": speedup,
        "repeat_payloads_identical": identical,
    });
    Ok(Outcome {
        n: rows,
        d: widest,
        result,
        ledger: LedgerSummary::default(),
        converged: true,
    })
}

/// Aligned text rendering of a bench result.
pub fn text_table(result: &Value) -> String {
    let mut out = format!("{:>8} {:>6} {:>10} {:>12}\n", "workers", "vars", "rows", "seconds");
    for row in result["table"].as_array().into_iter().flatten() {
        out.push_str(&format!(
            "{:>8} {:>6} {:>10} {:>12}\n",
            row["workers"].to_string(),
            row["vars"].to_string(),
            row["rows"].to_string(),
            row["median_seconds"].as_f64().map_or("-".into(), sig6)
        ));
    }
    let exponent = result["per_row_exponent"].as_f64().map_or("-".into(), sig6);
    out.push_str(&format!("per-row cost exponent in vars: {exponent}\n"));
    for s in result["speedup"].as_array().into_iter().flatten() {
        out.push_str(&format!(
            "speedup t({})/t({}) at {} vars: {}\n",
            s["baseline_workers"], s["workers"], s["vars"],
            s["speedup"].as_f64().map_or("-".into(), sig6)
        ));
    }
    out.push_str(&format!("cores available: {}\n", result["cores"]));
    out
}
