use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "foldstat", version, about = "Parallel fold-based statistics over CSV files")]
pub struct Cli {
    /// Input CSV file with a header row
    #[arg(long, global = true, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Column holding the dependent variable
    #[arg(long, global = true, value_name = "NAME")]
    pub label: Option<String>,

    /// Feature columns in order; defaults to every column except the label
    #[arg(long, global = true, value_name = "A,B,...", value_delimiter = ',')]
    pub features: Option<Vec<String>>,

    /// Prepend a constant-1 feature
    #[arg(long, global = true)]
    pub intercept: bool,

    /// Number of worker partitions
    #[arg(long, global = true, value_name = "P", default_value_t = 1)]
    pub partitions: usize,

    /// Master seed for every random choice
    #[arg(long, global = true, value_name = "S", default_value_t = 0)]
    pub seed: u64,

    /// Emit a JSON object instead of text
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ordinary least squares with standard errors and p-values
    Linregr,
    /// Logistic regression by iteratively reweighted least squares
    Logregr {
        #[arg(long, value_name = "T", default_value_t = 1e-8)]
        tol: f64,
        #[arg(long = "max-iter", value_name = "M", default_value_t = 100)]
        max_iter: usize,
    },
    /// Lloyd's k-means
    Kmeans {
        #[arg(long, value_name = "K")]
        k: usize,
        #[arg(long, value_enum, default_value_t = SeedingArg::Kmeanspp)]
        seeding: SeedingArg,
        #[arg(long = "max-iter", value_name = "M", default_value_t = 100)]
        max_iter: usize,
        /// Stop once at most this fraction of points changes cluster
        #[arg(long = "reassign-tol", value_name = "F", default_value_t = 0.0)]
        reassign_tol: f64,
    },
    /// Stochastic gradient descent over a convex objective
    Sgd {
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Base step size; the step in epoch e is alpha0 / e. Defaults to a
        /// data-scaled value.
        #[arg(long, value_name = "A")]
        alpha0: Option<f64>,
        #[arg(long, value_name = "E", default_value_t = 100)]
        epochs: usize,
        /// Regularization weight for lasso and recommendation
        #[arg(long, value_name = "MU", default_value_t = 0.1)]
        mu: f64,
        /// Factor rank for recommendation
        #[arg(long, value_name = "R", default_value_t = 10)]
        rank: usize,
    },
    /// Count-Min frequencies or Flajolet-Martin distinct counts over one column
    Sketch {
        #[arg(value_enum)]
        kind: SketchArg,
        #[arg(long, value_name = "E", default_value_t = 0.01)]
        eps: f64,
        #[arg(long, value_name = "D", default_value_t = 0.01)]
        delta: f64,
        #[arg(long, value_name = "M", default_value_t = 64)]
        bitmaps: usize,
        /// Item to estimate (Count-Min); repeatable
        #[arg(long, value_name = "ITEM")]
        query: Vec<String>,
        /// Write the sketch state here
        #[arg(long, value_name = "PATH")]
        save: Option<PathBuf>,
        /// Start from a saved sketch state
        #[arg(long, value_name = "PATH")]
        load: Option<PathBuf>,
    },
    /// Time an estimator on synthetic data across sizes and worker counts
    Bench {
        #[arg(long, value_name = "NAME", default_value = "linregr")]
        algo: String,
        #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "10,20,40,80")]
        vars: Vec<usize>,
        #[arg(long, value_name = "N", default_value_t = 1_000_000)]
        rows: usize,
        #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "1,4")]
        threads: Vec<usize>,
        #[arg(long, value_name = "R", default_value_t = 3)]
        repeats: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SeedingArg {
    Kmeanspp,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ObjectiveArg {
    LeastSquares,
    Lasso,
    Logistic,
    Hinge,
    Recommendation,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SketchArg {
    Cm,
    Fm,
}

impl ObjectiveArg {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveArg::LeastSquares => "least_squares",
            ObjectiveArg::Lasso => "lasso",
            ObjectiveArg::Logistic => "logistic",
            ObjectiveArg::Hinge => "hinge",
            ObjectiveArg::Recommendation => "recommendation",
        }
    }
}
