//! Mergeable streaming summaries: Count-Min for point frequencies and
//! Flajolet-Martin for distinct counts. Both have integer or bitmap states,
//! so their folds give bit-identical results for any partitioning.

mod codec;
mod countmin;
mod fm;

pub use countmin::{CountMinFold, CountMinState};
pub use fm::{FmFold, FmState, PHI};

use std::path::Path;

use crate::error::{Error, Result};

/// A sketch of either kind, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sketch {
    CountMin(CountMinState),
    FlajoletMartin(FmState),
}

impl Sketch {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = codec::Writer::default();
        match self {
            Sketch::CountMin(s) => s.encode(&mut w),
            Sketch::FlajoletMartin(s) => s.encode(&mut w),
        }
        w.bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = codec::Reader::new(bytes);
        match r.header()? {
            codec::KIND_COUNT_MIN => CountMinState::decode(&mut r).map(Sketch::CountMin),
            codec::KIND_FLAJOLET_MARTIN => FmState::decode(&mut r).map(Sketch::FlajoletMartin),
            kind => Err(Error::Format(format!("unknown sketch kind {kind}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn merge(self, other: &Sketch) -> Result<Sketch> {
        match (self, other) {
            (Sketch::CountMin(a), Sketch::CountMin(b)) => a.merge(b).map(Sketch::CountMin),
            (Sketch::FlajoletMartin(a), Sketch::FlajoletMartin(b)) => a.merge(b).map(Sketch::FlajoletMartin),
            _ => Err(Error::Merge("cannot merge a Count-Min sketch with a Flajolet-Martin sketch".into())),
        }
    }
}
