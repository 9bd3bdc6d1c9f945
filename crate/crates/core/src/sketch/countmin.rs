use super::codec::{Reader, Writer, KIND_COUNT_MIN};
use crate::error::{Error, Result};
use crate::fold::FoldSpec;
use crate::hash::{derive_seed, hash_bytes};

/// Count-Min sketch: `depth` rows of `width` counters, one hash per row.
/// A point query returns the smallest of the item's counters, which never
/// undercounts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMinState {
    width: usize,
    depth: usize,
    seed: u64,
    row_seeds: Vec<u64>,
    counters: Vec<u64>,
    total: u64,
}

impl CountMinState {
    pub const DEFAULT_EPS: f64 = 0.01;
    pub const DEFAULT_DELTA: f64 = 0.01;

    pub fn new(width: usize, depth: usize, seed: u64) -> Result<Self> {
        if width == 0 || depth == 0 {
            return Err(Error::Argument("Count-Min width and depth must be at least 1".into()));
        }
        Ok(Self {
            width,
            depth,
            seed,
            row_seeds: (0..depth as u64).map(|r| derive_seed(seed, r)).collect(),
            counters: vec![0; width * depth],
            total: 0,
        })
    }

    /// Sizes the sketch so an estimate exceeds the truth by more than
    /// `eps * total` with probability at most `delta`: width `ceil(e / eps)`,
    /// depth `ceil(ln(1 / delta))`.
    pub fn with_error(eps: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Argument("eps and delta must lie in (0, 1)".into()));
        }
        let width = (std::f64::consts::E / eps).ceil() as usize;
        let depth = (1.0 / delta).ln().ceil().max(1.0) as usize;
        Self::new(width, depth, seed)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.counters[r * self.width..(r + 1) * self.width]
    }

    /// Column of `item` in row `r`.
    pub fn column(&self, r: usize, item: &[u8]) -> usize {
        (hash_bytes(item, self.row_seeds[r]) % self.width as u64) as usize
    }

    fn bucket(&self, r: usize, item: &[u8]) -> usize {
        r * self.width + self.column(r, item)
    }

    pub fn update(&mut self, item: &[u8], count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::Argument("Count-Min increments must be at least 1".into()));
        }
        for r in 0..self.depth {
            let b = self.bucket(r, item);
            self.counters[b] += count;
        }
        self.total += count;
        Ok(())
    }

    pub fn estimate(&self, item: &[u8]) -> u64 {
        (0..self.depth)
            .map(|r| self.counters[self.bucket(r, item)])
            .min()
            .unwrap_or(0)
    }

    pub fn is_compatible(&self, other: &Self) -> bool {
        self.width == other.width && self.depth == other.depth && self.seed == other.seed
    }

    pub fn merge(mut self, other: &Self) -> Result<Self> {
        if !self.is_compatible(other) {
            return Err(Error::Merge(format!(
                "Count-Min {}x{} seed {} vs {}x{} seed {}",
                self.depth, self.width, self.seed, other.depth, other.width, other.seed
            )));
        }
        for (a, b) in self.counters.iter_mut().zip(&other.counters) {
            *a += b;
        }
        self.total += other.total;
        Ok(self)
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.header(KIND_COUNT_MIN);
        w.u64(self.width as u64);
        w.u64(self.depth as u64);
        w.u64(self.seed);
        w.u64(self.total);
        for &c in &self.counters {
            w.u64(c);
        }
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let width = r.len("width")?;
        let depth = r.len("depth")?;
        let seed = r.u64()?;
        let total = r.u64()?;
        let cells = width
            .checked_mul(depth)
            .filter(|&c| c <= r.remaining() / 8)
            .ok_or_else(|| Error::Format("counter array larger than the file".into()))?;
        let mut state = Self::new(width, depth, seed).map_err(|e| Error::Format(e.to_string()))?;
        for c in 0..cells {
            state.counters[c] = r.u64()?;
        }
        state.total = total;
        r.finish()?;
        for row in 0..depth {
            let sum = state.row(row).iter().try_fold(0u64, |s, &c| s.checked_add(c));
            if sum != Some(total) {
                return Err(Error::Format(format!("row {row} does not sum to the total")));
            }
        }
        Ok(state)
    }
}

/// Builds a Count-Min sketch over a slice of items, one increment each.
#[derive(Debug, Clone, Copy)]
pub struct CountMinFold {
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
}

impl CountMinFold {
    pub fn like(state: &CountMinState) -> Self {
        Self {
            width: state.width,
            depth: state.depth,
            seed: state.seed,
        }
    }
}

impl<T: AsRef<[u8]> + Sync> FoldSpec<[T]> for CountMinFold {
    type State = CountMinState;
    type Output = CountMinState;

    fn identity(&self) -> CountMinState {
        CountMinState::new(self.width.max(1), self.depth.max(1), self.seed).expect("non-zero shape")
    }

    fn transition(&self, state: &mut CountMinState, item: &T) -> Result<()> {
        state.update(item.as_ref(), 1)
    }

    fn merge(&self, left: CountMinState, right: CountMinState) -> Result<CountMinState> {
        left.merge(&right)
    }

    fn finalize(&self, state: CountMinState) -> Result<CountMinState> {
        Ok(state)
    }
}
