use std::path::{Path, PathBuf};

use foldstat::kmeans::{kmeans_fit, KMeansConfig, Seeding};
use foldstat::regress::{linregr, logregr_fit, LogRegrConfig};
use foldstat::sgd::{sgd_fit, suggested_alpha0, Examples, Objective, Rating, Ratings, SgdConfig, SgdParams};
use foldstat::sketch::{CountMinFold, CountMinState, FmFold, FmState, Sketch};
use foldstat::{run_parallel, Dataset};
use serde_json::{json, Map, Value};

use crate::cli::{Cli, Command, ObjectiveArg, SeedingArg, SketchArg};
use crate::error::CliError;
use crate::ingest::{ingest_csv, ingest_items, DatasetSpec};
use crate::report::{num, nums, LedgerSummary, RunReport};

/// Result of a command before timing and the command echo are attached.
pub struct Outcome {
    pub n: usize,
    pub d: usize,
    pub result: Value,
    pub ledger: LedgerSummary,
    pub converged: bool,
}

impl Outcome {
    fn single_pass(data: &Dataset, result: Value) -> Self {
        Self {
            n: data.n_rows(),
            d: data.n_features(),
            result,
            ledger: LedgerSummary::default(),
            converged: true,
        }
    }
}

fn data_path(cli: &Cli) -> Result<&Path, CliError> {
    cli.data
        .as_deref()
        .ok_or_else(|| CliError::argument("--data PATH is required for this command"))
}

fn dataset(cli: &Cli, needs_label: bool) -> Result<Dataset, CliError> {
    if needs_label && cli.label.is_none() {
        return Err(CliError::argument("--label NAME is required for this command"));
    }
    let mut spec = DatasetSpec::new(data_path(cli)?);
    spec.label = cli.label.clone();
    spec.features = cli.features.clone();
    spec.add_intercept = cli.intercept;
    ingest_csv(&spec)
}

fn rows_of(m: &foldstat::linalg::Matrix) -> Value {
    // one array per column, so factor i and centroid j read as vectors
    Value::Array(m.columns().map(nums).collect())
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    if cli.partitions == 0 {
        return Err(CliError::argument("--partitions must be at least 1"));
    }
    match &cli.command {
        Command::Linregr => cmd_linregr(cli),
        Command::Logregr { tol, max_iter } => cmd_logregr(cli, *tol, *max_iter),
        Command::Kmeans {
            k,
            seeding,
            max_iter,
            reassign_tol,
        } => cmd_kmeans(cli, *k, *seeding, *max_iter, *reassign_tol),
        Command::Sgd {
            objective,
            alpha0,
            epochs,
            mu,
            rank,
        } => cmd_sgd(cli, *objective, *alpha0, *epochs, *mu, *rank),
        Command::Sketch {
            kind,
            eps,
            delta,
            bitmaps,
            query,
            save,
            load,
        } => cmd_sketch(cli, *kind, *eps, *delta, *bitmaps, query, save.as_deref(), load.as_deref()),
        Command::Bench {
            algo,
            vars,
            rows,
            threads,
            repeats,
        } => crate::bench::cmd_bench(algo, vars, *rows, threads, *repeats, cli.seed),
    }
}

fn cmd_linregr(cli: &Cli) -> Result<Outcome, CliError> {
    let data = dataset(cli, true)?;
    let r = linregr(&data, cli.partitions)?;
    let result = json!({
        "coef": nums(&r.coef),
        "r2": num(r.r2),
        "std_err": nums(&r.std_err),
        "t_stats": nums(&r.t_stats),
        "p_values": nums(&r.p_values),
        "condition_no": num(r.condition_no),
    });
    Ok(Outcome::single_pass(&data, result))
}

fn cmd_logregr(cli: &Cli, tol: f64, max_iter: usize) -> Result<Outcome, CliError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::argument("--tol must be positive"));
    }
    let data = dataset(cli, true)?;
    let config = LogRegrConfig {
        tol,
        max_iter,
        workers: cli.partitions,
        ..LogRegrConfig::default()
    };
    let fit = logregr_fit(&data, &config)?;
    let result = json!({
        "coef": nums(&fit.coef),
        "log_likelihood": num(fit.log_likelihood),
        "num_iterations": fit.num_iterations,
        "monotone": fit.monotone,
    });
    Ok(Outcome {
        n: data.n_rows(),
        d: data.n_features(),
        result,
        ledger: LedgerSummary::from_ledger(&fit.ledger),
        converged: fit.converged,
    })
}

fn cmd_kmeans(cli: &Cli, k: usize, seeding: SeedingArg, max_iter: usize, reassign_tol: f64) -> Result<Outcome, CliError> {
    if !(0.0..=1.0).contains(&reassign_tol) {
        return Err(CliError::argument("--reassign-tol must lie in [0, 1]"));
    }
    let data = dataset(cli, false)?;
    let mut config = KMeansConfig::new(k);
    config.seeding = match seeding {
        SeedingArg::Kmeanspp => Seeding::KMeansPP,
        SeedingArg::Random => Seeding::Random,
    };
    config.seed = cli.seed;
    config.max_iter = max_iter;
    config.reassign_tol = reassign_tol;
    config.workers = cli.partitions;
    let fit = kmeans_fit(&data, &config)?;
    let mut sizes = vec![0usize; k];
    for &a in &fit.assignments {
        sizes[a] += 1;
    }
    let result = json!({
        "centroids": rows_of(fit.centroids.positions()),
        "cluster_sizes": sizes,
        "assignments": fit.assignments,
        "objective": num(fit.objective),
        "iterations": fit.iterations,
        "frac_reassigned": num(fit.frac_reassigned_final),
        "duplicate_seeds": fit.duplicate_seeds,
    });
    Ok(Outcome {
        n: data.n_rows(),
        d: data.n_features(),
        result,
        ledger: LedgerSummary::from_ledger(&fit.ledger),
        converged: fit.converged,
    })
}

fn signed_labels(data: &Dataset) -> Result<Dataset, CliError> {
    let labels = data
        .labels()
        .ok_or_else(|| CliError::argument("--label NAME is required for this command"))?;
    let signed = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y == 1.0 {
                Ok(1.0)
            } else if y == 0.0 || y == -1.0 {
                Ok(-1.0)
            } else {
                Err(CliError::data(format!("label {y} at row {} is not 0/1 or -1/+1", i + 1)))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(data.n_features(), data.features().to_vec(), Some(signed)).map_err(CliError::from)
}

fn ratings(data: &Dataset) -> Result<Ratings, CliError> {
    if data.n_features() != 2 {
        return Err(CliError::argument(
            "recommendation needs exactly two index columns (row, column) plus --label for the value",
        ));
    }
    let values = data
        .labels()
        .ok_or_else(|| CliError::argument("--label NAME is required for this command"))?;
    let index = |v: f64, i: usize| {
        if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(CliError::data(format!("index {v} at row {} is not a non-negative integer", i + 1)))
        }
    };
    let entries = (0..data.n_rows())
        .map(|i| {
            let r = data.feature_row(i);
            Ok(Rating {
                row: index(r[0], i)?,
                col: index(r[1], i)?,
                value: values[i],
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ratings::from_entries(entries).map_err(CliError::from)
}

fn cmd_sgd(
    cli: &Cli,
    objective: ObjectiveArg,
    alpha0: Option<f64>,
    epochs: usize,
    mu: f64,
    rank: usize,
) -> Result<Outcome, CliError> {
    if cli.intercept && matches!(objective, ObjectiveArg::Recommendation) {
        return Err(CliError::argument("--intercept does not apply to recommendation"));
    }
    let raw = dataset(cli, true)?;
    let obj = match objective {
        ObjectiveArg::LeastSquares => Objective::LeastSquares,
        ObjectiveArg::Lasso => Objective::Lasso { mu },
        ObjectiveArg::Logistic => Objective::Logistic,
        ObjectiveArg::Hinge => Objective::SvmHinge,
        ObjectiveArg::Recommendation => Objective::Recommendation { mu, rank },
    };
    let classified;
    let rated;
    let examples = match objective {
        ObjectiveArg::LeastSquares | ObjectiveArg::Lasso => Examples::Labeled(&raw),
        ObjectiveArg::Logistic | ObjectiveArg::Hinge => {
            classified = signed_labels(&raw)?;
            Examples::Labeled(&classified)
        }
        ObjectiveArg::Recommendation => {
            rated = ratings(&raw)?;
            Examples::Ratings(&rated)
        }
    };
    let alpha0 = alpha0.unwrap_or_else(|| suggested_alpha0(&obj, examples));
    let mut config = SgdConfig::new(alpha0, epochs);
    config.seed = cli.seed;
    config.workers = cli.partitions;
    let fit = sgd_fit(examples, &obj, &config)?;
    let params = match &fit.model.params {
        SgdParams::Vector(x) => json!({ "coef": nums(x) }),
        SgdParams::Factors(f) => json!({ "left": rows_of(&f.left), "right": rows_of(&f.right) }),
    };
    let trace: Vec<Value> = fit
        .trace
        .iter()
        .map(|e| json!({ "epoch": e.epoch, "objective": num(e.objective), "step_size": num(e.step_size) }))
        .collect();
    let result = json!({
        "objective": objective.name(),
        "alpha0": num(alpha0),
        "epochs": epochs,
        "params": params,
        "final_objective": num(fit.trace.last().map_or(f64::NAN, |e| e.objective)),
        "trace": trace,
    });
    Ok(Outcome {
        n: raw.n_rows(),
        d: raw.n_features(),
        result,
        ledger: LedgerSummary::from_ledger(&fit.ledger),
        // a fixed epoch budget that finished without diverging
        converged: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sketch(
    cli: &Cli,
    kind: SketchArg,
    eps: f64,
    delta: f64,
    bitmaps: usize,
    queries: &[String],
    save: Option<&Path>,
    load: Option<&Path>,
) -> Result<Outcome, CliError> {
    let column = match cli.features.as_deref() {
        None => None,
        Some([one]) => Some(one.as_str()),
        Some(_) => return Err(CliError::argument("sketch reads a single column; pass one name to --features")),
    };
    if cli.data.is_none() && load.is_none() {
        return Err(CliError::argument("sketch needs --data PATH, --load PATH, or both"));
    }
    let items = match &cli.data {
        Some(path) => ingest_items(path, true, column)?,
        None => Vec::new(),
    };
    let base = load.map(Sketch::load).transpose()?;
    let p = cli.partitions;
    let sketch = match (kind, base) {
        (SketchArg::Cm, Some(Sketch::CountMin(prior))) => {
            let fresh = run_parallel(&CountMinFold::like(&prior), items.as_slice(), p)?;
            Sketch::CountMin(prior.merge(&fresh)?)
        }
        (SketchArg::Cm, None) => {
            let shape = CountMinState::with_error(eps, delta, cli.seed)?;
            Sketch::CountMin(run_parallel(&CountMinFold::like(&shape), items.as_slice(), p)?)
        }
        (SketchArg::Fm, Some(Sketch::FlajoletMartin(prior))) => {
            let fold = FmFold {
                num_bitmaps: prior.num_bitmaps(),
                seed: prior.seed(),
            };
            let fresh = run_parallel(&fold, items.as_slice(), p)?;
            Sketch::FlajoletMartin(prior.merge(&fresh)?)
        }
        (SketchArg::Fm, None) => {
            FmState::new(bitmaps, cli.seed)?;
            let fold = FmFold {
                num_bitmaps: bitmaps,
                seed: cli.seed,
            };
            Sketch::FlajoletMartin(run_parallel(&fold, items.as_slice(), p)?)
        }
        (_, Some(_)) => return Err(CliError::argument("--load file holds the other kind of sketch")),
    };
    if let Some(path) = save {
        sketch.save(path)?;
    }
    let saved = save.map(|p| p.display().to_string());
    let result = match &sketch {
        Sketch::CountMin(s) => {
            let estimates: Vec<Value> = queries
                .iter()
                .map(|q| json!({ "item": q, "estimate": s.estimate(q.as_bytes()) }))
                .collect();
            json!({
                "kind": "cm",
                "width": s.width(),
                "depth": s.depth(),
                "seed": s.seed(),
                "total": s.total(),
                "queries": estimates,
                "saved": saved,
            })
        }
        Sketch::FlajoletMartin(s) => {
            if !queries.is_empty() {
                return Err(CliError::argument("--query applies to cm sketches only"));
            }
            json!({
                "kind": "fm",
                "bitmaps": s.num_bitmaps(),
                "seed": s.seed(),
                "items_seen": s.items_seen(),
                "estimate": num(s.estimate()),
                "saved": saved,
            })
        }
    };
    Ok(Outcome {
        n: items.len(),
        d: 1,
        result,
        ledger: LedgerSummary::default(),
        converged: true,
    })
}

/// The parsed flags, echoed into the report.
pub fn args_echo(cli: &Cli) -> Map<String, Value> {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let mut m = Map::new();
    m.insert("data".into(), json!(path(&cli.data)));
    m.insert("label".into(), json!(cli.label));
    m.insert("features".into(), json!(cli.features));
    m.insert("intercept".into(), json!(cli.intercept));
    m.insert("partitions".into(), json!(cli.partitions));
    m.insert("seed".into(), json!(cli.seed));
    match &cli.command {
        Command::Linregr => {}
        Command::Logregr { tol, max_iter } => {
            m.insert("tol".into(), num(*tol));
            m.insert("max_iter".into(), json!(max_iter));
        }
        Command::Kmeans {
            k,
            seeding,
            max_iter,
            reassign_tol,
        } => {
            m.insert("k".into(), json!(k));
            m.insert("seeding".into(), json!(format!("{seeding:?}").to_lowercase()));
            m.insert("max_iter".into(), json!(max_iter));
            m.insert("reassign_tol".into(), num(*reassign_tol));
        }
        Command::Sgd {
            objective,
            alpha0,
            epochs,
            mu,
            rank,
        } => {
            m.insert("objective".into(), json!(objective.name()));
            m.insert("alpha0".into(), alpha0.map_or(Value::Null, num));
            m.insert("epochs".into(), json!(epochs));
            m.insert("mu".into(), num(*mu));
            m.insert("rank".into(), json!(rank));
        }
        Command::Sketch {
            kind,
            eps,
            delta,
            bitmaps,
            query,
            save,
            load,
        } => {
            m.insert("kind".into(), json!(format!("{kind:?}").to_lowercase()));
            m.insert("eps".into(), num(*eps));
            m.insert("delta".into(), num(*delta));
            m.insert("bitmaps".into(), json!(bitmaps));
            m.insert("query".into(), json!(query));
            m.insert("save".into(), json!(path(save)));
            m.insert("load".into(), json!(path(load)));
        }
        Command::Bench {
            algo,
            vars,
            rows,
            threads,
            repeats,
        } => {
            m.insert("algo".into(), json!(algo));
            m.insert("vars".into(), json!(vars));
            m.insert("rows".into(), json!(rows));
            m.insert("threads".into(), json!(threads));
            m.insert("repeats".into(), json!(repeats));
        }
    }
    m
}

pub fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Linregr => "linregr",
        Command::Logregr { .. } => "logregr",
        Command::Kmeans { .. } => "kmeans",
        Command::Sgd { .. } => "sgd",
        Command::Sketch { .. } => "sketch",
        Command::Bench { .. } => "bench",
    }
}

pub fn report(cli: &Cli, outcome: Outcome, wall_clock_ms: f64, workers: usize) -> RunReport {
    RunReport {
        command: command_name(cli).to_string(),
        args: args_echo(cli),
        n: outcome.n,
        d: outcome.d,
        workers,
        wall_clock_ms,
        result: outcome.result,
        ledger: outcome.ledger,
        converged: outcome.converged,
    }
}
