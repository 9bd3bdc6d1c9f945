//! Transition/merge/final aggregates and their data-parallel executor.
//!
//! An aggregate is described by a [`FoldSpec`]: an identity state, a
//! transition that absorbs one row, a merge that combines two partial states
//! and a finalizer that turns a state into a result. [`run_parallel`] splits a
//! row source into contiguous partitions, folds each partition on its own
//! worker thread, then merges the partial states left to right in partition
//! order. Merge order never depends on thread scheduling, so a fixed worker
//! count always yields bit-identical results.

use std::ops::Range;

use crate::data::RowSource;
use crate::error::{Error, Result};

pub trait FoldSpec<S: RowSource + ?Sized>: Sync {
    type State: Send;
    type Output;

    fn identity(&self) -> Self::State;

    fn transition(&self, state: &mut Self::State, row: S::Row<'_>) -> Result<()>;

    fn merge(&self, left: Self::State, right: Self::State) -> Result<Self::State>;

    fn finalize(&self, state: Self::State) -> Result<Self::Output>;
}

/// A fold assembled from closures.
pub struct FnFold<St, T, M, F> {
    identity: St,
    transition: T,
    merge: M,
    finalize: F,
}

impl<St, T, M, F> FnFold<St, T, M, F> {
    pub fn new(identity: St, transition: T, merge: M, finalize: F) -> Self {
        Self {
            identity,
            transition,
            merge,
            finalize,
        }
    }
}

impl<S, St, T, M, F, O> FoldSpec<S> for FnFold<St, T, M, F>
where
    S: RowSource + ?Sized,
    St: Clone + Send + Sync,
    T: for<'a> Fn(&mut St, S::Row<'a>) -> Result<()> + Sync,
    M: Fn(St, St) -> Result<St> + Sync,
    F: Fn(St) -> Result<O> + Sync,
{
    type State = St;
    type Output = O;

    fn identity(&self) -> St {
        self.identity.clone()
    }

    fn transition(&self, state: &mut St, row: S::Row<'_>) -> Result<()> {
        (self.transition)(state, row)
    }

    fn merge(&self, left: St, right: St) -> Result<St> {
        (self.merge)(left, right)
    }

    fn finalize(&self, state: St) -> Result<O> {
        (self.finalize)(state)
    }
}

/// A contiguous row range `[start, end)` of a row source.
#[derive(Debug)]
pub struct Partition<'a, S: ?Sized> {
    source: &'a S,
    range: Range<usize>,
}

impl<S: ?Sized> Clone for Partition<'_, S> {
    fn clone(&self) -> Self {
        Self {
            source: self.source,
            range: self.range.clone(),
        }
    }
}

impl<'a, S: RowSource + ?Sized> Partition<'a, S> {
    pub fn new(source: &'a S, range: Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > source.num_rows() {
            return Err(Error::Argument(format!(
                "row range {range:?} outside 0..{}",
                source.num_rows()
            )));
        }
        Ok(Self { source, range })
    }

    pub fn whole(source: &'a S) -> Self {
        Self {
            source,
            range: 0..source.num_rows(),
        }
    }

    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn source(&self) -> &'a S {
        self.source
    }
}

/// Splits `n_rows` into `workers` contiguous ranges of `n_rows / workers`
/// rows each; the remainder goes to the last range.
pub fn partition_ranges(n_rows: usize, workers: usize) -> Result<Vec<Range<usize>>> {
    if workers == 0 {
        return Err(Error::Argument("worker count must be at least 1".into()));
    }
    let base = n_rows / workers;
    Ok((0..workers)
        .map(|w| {
            let start = w * base;
            let end = if w + 1 == workers { n_rows } else { start + base };
            start..end
        })
        .collect())
}

pub fn partitions<S: RowSource + ?Sized>(source: &S, workers: usize) -> Result<Vec<Partition<'_, S>>> {
    Ok(partition_ranges(source.num_rows(), workers)?
        .into_iter()
        .map(|range| Partition { source, range })
        .collect())
}

/// Applies the transition over a partition in ascending row order,
/// starting from the identity state.
pub fn fold_partition<S, F>(spec: &F, part: &Partition<'_, S>) -> Result<F::State>
where
    S: RowSource + ?Sized,
    F: FoldSpec<S> + ?Sized,
{
    let mut state = spec.identity();
    for i in part.range() {
        spec.transition(&mut state, part.source.row(i))?;
    }
    Ok(state)
}

pub fn merge_states<S, F>(spec: &F, left: F::State, right: F::State) -> Result<F::State>
where
    S: RowSource + ?Sized,
    F: FoldSpec<S> + ?Sized,
{
    spec.merge(left, right)
}

/// Folds every partition (concurrently when `workers > 1`) and merges the
/// partial states left to right. Returns the merged, unfinalized state.
pub fn fold_parallel<S, F>(spec: &F, source: &S, workers: usize) -> Result<F::State>
where
    S: RowSource + ?Sized,
    F: FoldSpec<S> + ?Sized,
{
    let parts = partitions(source, workers)?;
    if parts.len() == 1 {
        return fold_partition(spec, &parts[0]);
    }
    let partials: Vec<Result<F::State>> = std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .iter()
            .map(|part| scope.spawn(move || fold_partition(spec, part)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold worker panicked"))
            .collect()
    });
    let mut partials = partials.into_iter();
    let mut acc = partials.next().expect("at least one partition")?;
    for partial in partials {
        acc = spec.merge(acc, partial?)?;
    }
    Ok(acc)
}

pub fn run_parallel<S, F>(spec: &F, source: &S, workers: usize) -> Result<F::Output>
where
    S: RowSource + ?Sized,
    F: FoldSpec<S> + ?Sized,
{
    let state = fold_parallel(spec, source, workers)?;
    spec.finalize(state)
}
