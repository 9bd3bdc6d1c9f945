use super::codec::{Reader, Writer, KIND_FLAJOLET_MARTIN};
use crate::error::{Error, Result};
use crate::fold::FoldSpec;
use crate::hash::{derive_seed, hash_bytes};

/// Flajolet-Martin bias correction constant.
pub const PHI: f64 = 0.77351;

/// Flajolet-Martin distinct counter with stochastic averaging over
/// `num_bitmaps` 64-bit bitmaps. Each item hashes to one bitmap and sets the
/// bit at the number of trailing zeros of a second hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmState {
    num_bitmaps: usize,
    seed: u64,
    bitmaps: Vec<u64>,
    items_seen: bool,
}

impl FmState {
    pub const DEFAULT_BITMAPS: usize = 64;

    pub fn new(num_bitmaps: usize, seed: u64) -> Result<Self> {
        if num_bitmaps == 0 {
            return Err(Error::Argument("need at least one bitmap".into()));
        }
        Ok(Self {
            num_bitmaps,
            seed,
            bitmaps: vec![0; num_bitmaps],
            items_seen: false,
        })
    }

    pub fn num_bitmaps(&self) -> usize {
        self.num_bitmaps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bitmaps(&self) -> &[u64] {
        &self.bitmaps
    }

    pub fn items_seen(&self) -> bool {
        self.items_seen
    }

    pub fn update(&mut self, item: &[u8]) {
        let which = hash_bytes(item, derive_seed(self.seed, 0)) % self.num_bitmaps as u64;
        let rho = hash_bytes(item, derive_seed(self.seed, 1)).trailing_zeros().min(63);
        self.bitmaps[which as usize] |= 1 << rho;
        self.items_seen = true;
    }

    /// `(m / PHI) * 2^(mean R)` with `R` the lowest unset bit of each
    /// bitmap. While the raw estimate is at most `2.5 m` and some bitmaps
    /// are still empty, the estimate is `m ln(m / empty)` instead, since the
    /// averaged formula is far too high for a handful of items.
    pub fn estimate(&self) -> f64 {
        if !self.items_seen {
            return 0.0;
        }
        let m = self.num_bitmaps as f64;
        let mean_r = self.bitmaps.iter().map(|b| b.trailing_ones() as f64).sum::<f64>() / m;
        let raw = m / PHI * mean_r.exp2();
        let empty = self.bitmaps.iter().filter(|&&b| b == 0).count();
        if raw <= 2.5 * m && empty > 0 {
            m * (m / empty as f64).ln()
        } else {
            raw
        }
    }

    pub fn is_compatible(&self, other: &Self) -> bool {
        self.num_bitmaps == other.num_bitmaps && self.seed == other.seed
    }

    pub fn merge(mut self, other: &Self) -> Result<Self> {
        if !self.is_compatible(other) {
            return Err(Error::Merge(format!(
                "Flajolet-Martin {} bitmaps seed {} vs {} bitmaps seed {}",
                self.num_bitmaps, self.seed, other.num_bitmaps, other.seed
            )));
        }
        for (a, b) in self.bitmaps.iter_mut().zip(&other.bitmaps) {
            *a |= b;
        }
        self.items_seen |= other.items_seen;
        Ok(self)
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.header(KIND_FLAJOLET_MARTIN);
        w.u64(self.num_bitmaps as u64);
        w.u64(self.seed);
        w.u8(self.items_seen as u8);
        for &b in &self.bitmaps {
            w.u64(b);
        }
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let num_bitmaps = r.len("bitmap count")?;
        let seed = r.u64()?;
        let items_seen = match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::Format(format!("bad items-seen flag {v}"))),
        };
        if num_bitmaps > r.remaining() / 8 {
            return Err(Error::Format("bitmap array larger than the file".into()));
        }
        let mut state = Self::new(num_bitmaps, seed).map_err(|e| Error::Format(e.to_string()))?;
        for b in state.bitmaps.iter_mut() {
            *b = r.u64()?;
        }
        r.finish()?;
        if !items_seen && state.bitmaps.iter().any(|&b| b != 0) {
            return Err(Error::Format("bits set on a sketch marked empty".into()));
        }
        state.items_seen = items_seen;
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FmFold {
    pub num_bitmaps: usize,
    pub seed: u64,
}

impl<T: AsRef<[u8]> + Sync> FoldSpec<[T]> for FmFold {
    type State = FmState;
    type Output = FmState;

    fn identity(&self) -> FmState {
        FmState::new(self.num_bitmaps.max(1), self.seed).expect("non-zero bitmap count")
    }

    fn transition(&self, state: &mut FmState, item: &T) -> Result<()> {
        state.update(item.as_ref());
        Ok(())
    }

    fn merge(&self, left: FmState, right: FmState) -> Result<FmState> {
        left.merge(&right)
    }

    fn finalize(&self, state: FmState) -> Result<FmState> {
        Ok(state)
    }
}
