//! Driver loop for multipass algorithms.
//!
//! The driver only ever holds inter-iteration state (coefficients,
//! centroids); each step runs its heavy work as folds over a borrowed
//! dataset. Every iteration is recorded in an [`IterationLedger`]. When the
//! resident snapshots outgrow the configured byte budget, the oldest ones are
//! written to a newline-delimited JSON spill file and dropped from memory.

use std::borrow::Cow;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BYTE_BUDGET: usize = 256 * 1024 * 1024;

/// Approximate in-memory size of an inter-iteration state.
pub trait Footprint {
    fn footprint_bytes(&self) -> usize;
}

impl Footprint for Vec<f64> {
    fn footprint_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.len() * std::mem::size_of::<f64>()
    }
}

impl Footprint for f64 {
    fn footprint_bytes(&self) -> usize {
        std::mem::size_of::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct LedgerConfig {
    pub byte_budget: usize,
    /// Directory for the spill file; the system temp dir when `None`.
    pub spill_dir: Option<PathBuf>,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self {
            byte_budget: DEFAULT_BYTE_BUDGET,
            spill_dir: None,
        }
    }
}

#[derive(Debug)]
enum Slot<S> {
    Resident(S),
    Spilled { offset: u64 },
}

#[derive(Debug)]
pub struct LedgerEntry<S> {
    pub iteration: usize,
    pub diagnostic: f64,
    pub state_bytes: usize,
    slot: Slot<S>,
}

impl<S> LedgerEntry<S> {
    /// The snapshot, if it has not been spilled.
    pub fn resident_state(&self) -> Option<&S> {
        match &self.slot {
            Slot::Resident(s) => Some(s),
            Slot::Spilled { .. } => None,
        }
    }

    pub fn is_spilled(&self) -> bool {
        matches!(self.slot, Slot::Spilled { .. })
    }
}

#[derive(Debug)]
struct SpillFile {
    file: tempfile::NamedTempFile,
    end: u64,
}

#[derive(Debug)]
pub struct IterationLedger<S> {
    entries: Vec<LedgerEntry<S>>,
    resident_bytes: usize,
    config: LedgerConfig,
    spill: Option<SpillFile>,
}

impl<S> IterationLedger<S>
where
    S: Serialize + DeserializeOwned + Footprint,
{
    pub fn new(config: LedgerConfig) -> Self {
        Self {
            entries: Vec::new(),
            resident_bytes: 0,
            config,
            spill: None,
        }
    }

    /// Appends the snapshot for `iteration`, which must follow the last one.
    pub fn push(&mut self, iteration: usize, state: S, diagnostic: f64) -> Result<()> {
        let expected = self.entries.last().map_or(1, |e| e.iteration + 1);
        if iteration != expected {
            return Err(Error::Argument(format!(
                "ledger expected iteration {expected}, got {iteration}"
            )));
        }
        let state_bytes = state.footprint_bytes();
        self.resident_bytes += state_bytes;
        self.entries.push(LedgerEntry {
            iteration,
            diagnostic,
            state_bytes,
            slot: Slot::Resident(state),
        });
        self.spill_over_budget()
    }

    fn spill_over_budget(&mut self) -> Result<()> {
        // the newest snapshot always stays resident
        let last = self.entries.len().saturating_sub(1);
        let mut i = 0;
        while self.resident_bytes > self.config.byte_budget && i < last {
            if let Slot::Resident(state) = &self.entries[i].slot {
                let offset = write_spill(&mut self.spill, &self.config, state)?;
                self.resident_bytes -= self.entries[i].state_bytes;
                self.entries[i].slot = Slot::Spilled { offset };
            }
            i += 1;
        }
        Ok(())
    }

    fn read_spill(&self, offset: u64) -> Result<S> {
        let spill = self
            .spill
            .as_ref()
            .ok_or_else(|| Error::Argument("entry marked spilled without a spill file".into()))?;
        let path = spill.file.path();
        let mut file: File = spill.file.reopen().map_err(|e| Error::io(path, e))?;
        file.seek(SeekFrom::Start(offset)).map_err(|e| Error::io(path, e))?;
        let mut line = String::new();
        BufReader::new(file)
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&line).map_err(|e| Error::Numeric(format!("corrupt ledger spill: {e}")))
    }

    /// Snapshot of the `pos`-th entry (0-based), reloaded from disk if spilled.
    pub fn state(&self, pos: usize) -> Result<Cow<'_, S>>
    where
        S: Clone,
    {
        let entry = self
            .entries
            .get(pos)
            .ok_or_else(|| Error::Argument(format!("no ledger entry {pos}")))?;
        match &entry.slot {
            Slot::Resident(s) => Ok(Cow::Borrowed(s)),
            Slot::Spilled { offset } => self.read_spill(*offset).map(Cow::Owned),
        }
    }
}

impl<S> IterationLedger<S> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LedgerEntry<S>] {
        &self.entries
    }

    pub fn last(&self) -> Option<&LedgerEntry<S>> {
        self.entries.last()
    }

    /// Latest snapshot; never spilled.
    pub fn last_state(&self) -> Option<&S> {
        self.entries.last().and_then(LedgerEntry::resident_state)
    }

    pub fn diagnostics(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.diagnostic).collect()
    }

    pub fn resident_bytes(&self) -> usize {
        self.resident_bytes
    }

    pub fn spilled_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_spilled()).count()
    }
}

fn write_spill<S: Serialize>(
    spill: &mut Option<SpillFile>,
    config: &LedgerConfig,
    state: &S,
) -> Result<u64> {
    if spill.is_none() {
        let file = match &config.spill_dir {
            Some(dir) => tempfile::NamedTempFile::new_in(dir),
            None => tempfile::NamedTempFile::new(),
        }
        .map_err(|e| Error::io(config.spill_dir.clone().unwrap_or_default(), e))?;
        *spill = Some(SpillFile { file, end: 0 });
    }
    let spill = spill.as_mut().expect("spill file initialized");
    let path = spill.file.path().to_path_buf();
    let mut line = serde_json::to_vec(state)
        .map_err(|e| Error::Numeric(format!("cannot serialize ledger state: {e}")))?;
    line.push(b'\n');
    let offset = spill.end;
    let handle = spill.file.as_file_mut();
    handle
        .seek(SeekFrom::Start(offset))
        .map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(handle);
    w.write_all(&line).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    spill.end += line.len() as u64;
    Ok(offset)
}

#[derive(Debug)]
pub struct Iterated<S> {
    pub state: S,
    pub ledger: IterationLedger<S>,
    pub converged: bool,
}

/// A failed step, together with the ledger of the iterations that succeeded.
#[derive(Debug)]
pub struct IterationFailure<S> {
    pub error: Error,
    pub ledger: IterationLedger<S>,
}

impl<S> From<IterationFailure<S>> for Error {
    fn from(f: IterationFailure<S>) -> Self {
        f.error
    }
}

/// Runs `step` until `converged` accepts the ledger or `max_iter` steps
/// have been taken.
///
/// `step` maps the current inter-iteration state to the next one plus a
/// scalar diagnostic. It gets the data by reference and the worker count;
/// all per-row work happens inside it.
pub fn iterate<D, S, F, C>(
    data: &D,
    workers: usize,
    init: S,
    max_iter: usize,
    config: LedgerConfig,
    mut step: F,
    mut converged: C,
) -> std::result::Result<Iterated<S>, IterationFailure<S>>
where
    D: ?Sized,
    S: Clone + Serialize + DeserializeOwned + Footprint,
    F: FnMut(&S, &D, usize) -> Result<(S, f64)>,
    C: FnMut(&IterationLedger<S>) -> bool,
{
    let mut ledger = IterationLedger::new(config);
    if max_iter == 0 {
        return Err(IterationFailure {
            error: Error::Argument("max_iter must be at least 1".into()),
            ledger,
        });
    }
    let mut current = init;
    for iteration in 1..=max_iter {
        let (next, diagnostic) = match step(&current, data, workers) {
            Ok(out) => out,
            Err(error) => return Err(IterationFailure { error, ledger }),
        };
        if let Err(error) = ledger.push(iteration, next.clone(), diagnostic) {
            return Err(IterationFailure { error, ledger });
        }
        current = next;
        if converged(&ledger) {
            return Ok(Iterated {
                state: current,
                ledger,
                converged: true,
            });
        }
    }
    Ok(Iterated {
        state: current,
        ledger,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halve(s: &f64, _: &(), _: usize) -> Result<(f64, f64)> {
        Ok((s / 2.0, *s))
    }

    #[test]
    fn immediate_convergence_runs_once() {
        let out = iterate(&(), 1, 8.0, 100, LedgerConfig::default(), halve, |_| true).unwrap();
        assert_eq!(out.ledger.len(), 1);
        assert_eq!(out.state, 4.0);
        assert!(out.converged);
    }

    #[test]
    fn cap_at_max_iter() {
        let out = iterate(&(), 1, 8.0, 5, LedgerConfig::default(), halve, |_| false).unwrap();
        assert_eq!(out.ledger.len(), 5);
        assert!(!out.converged);
        let iters: Vec<_> = out.ledger.entries().iter().map(|e| e.iteration).collect();
        assert_eq!(iters, vec![1, 2, 3, 4, 5]);
        assert_eq!(out.ledger.diagnostics(), vec![8.0, 4.0, 2.0, 1.0, 0.5]);
    }

    #[test]
    fn zero_max_iter_rejected() {
        let err = iterate(&(), 1, 1.0, 0, LedgerConfig::default(), halve, |_| true).unwrap_err();
        assert!(matches!(err.error, Error::Argument(_)));
    }

    #[test]
    fn step_error_returns_partial_ledger() {
        let mut calls = 0;
        let err = iterate(
            &(),
            1,
            1.0,
            10,
            LedgerConfig::default(),
            |s: &f64, _: &(), _| {
                calls += 1;
                if calls == 3 {
                    Err(Error::Numeric("boom".into()))
                } else {
                    Ok((s + 1.0, 0.0))
                }
            },
            |_| false,
        )
        .unwrap_err();
        assert_eq!(err.ledger.len(), 2);
        assert!(matches!(err.error, Error::Numeric(_)));
    }

    #[test]
    fn spills_old_states_and_reloads_them() {
        let config = LedgerConfig {
            byte_budget: 100,
            spill_dir: None,
        };
        let out = iterate(
            &(),
            1,
            vec![0.0; 4],
            6,
            config,
            |s: &Vec<f64>, _: &(), _| Ok((s.iter().map(|v| v + 1.0).collect(), s[0])),
            |_| false,
        )
        .unwrap();
        let ledger = &out.ledger;
        assert!(ledger.spilled_count() >= 4);
        assert!(ledger.last_state().is_some());
        assert!(ledger.resident_bytes() <= 100 || ledger.spilled_count() == ledger.len() - 1);
        for pos in 0..ledger.len() {
            let state = ledger.state(pos).unwrap();
            assert_eq!(state.as_ref(), &vec![(pos + 1) as f64; 4]);
        }
    }

    #[test]
    fn push_requires_consecutive_iterations() {
        let mut ledger: IterationLedger<f64> = IterationLedger::new(LedgerConfig::default());
        assert!(ledger.push(2, 1.0, 0.0).is_err());
        ledger.push(1, 1.0, 0.0).unwrap();
        assert!(ledger.push(1, 1.0, 0.0).is_err());
    }
}
