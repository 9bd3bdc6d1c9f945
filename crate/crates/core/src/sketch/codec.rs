//! Binary layout: magic `FSKT`, version (u16), kind (u8), then the kind's
//! parameters, seed and cells. All integers little-endian.

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FSKT";
pub const VERSION: u16 = 1;
pub const KIND_COUNT_MIN: u8 = 1;
pub const KIND_FLAJOLET_MARTIN: u8 = 2;

#[derive(Default)]
pub struct Writer {
    pub bytes: Vec<u8>,
}

impl Writer {
    pub fn header(&mut self, kind: u8) {
        self.bytes.extend_from_slice(MAGIC);
        self.bytes.extend_from_slice(&VERSION.to_le_bytes());
        self.bytes.push(kind);
    }

    pub fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
}

pub struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Format("unexpected end of data".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Checks magic and version and returns the kind byte.
    pub fn header(&mut self) -> Result<u8> {
        if self.take(4)? != MAGIC {
            return Err(Error::Format("not a sketch file (bad magic)".into()));
        }
        let version = u16::from_le_bytes(self.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        self.u8()
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn len(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Format(format!("bad {what} {v}")))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(Error::Format(format!("{} trailing bytes", self.remaining())))
        }
    }
}
