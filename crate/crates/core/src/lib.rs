pub mod data;
pub mod driver;
pub mod error;
pub mod fold;
mod hash;
pub mod kmeans;
pub mod linalg;
pub mod regress;
pub mod sgd;
pub mod sketch;

pub use data::{DataRow, Dataset, RowSource};
pub use driver::{iterate, IterationLedger, LedgerConfig};
pub use error::{Error, Result};
pub use fold::{fold_parallel, fold_partition, merge_states, run_parallel, FnFold, FoldSpec, Partition};
