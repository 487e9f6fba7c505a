//! Single-pass streams, the write-only output tape, and the memory ledger.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("end of stream")]
    EndOfStream,
    #[error("write at index {index} after index {last}")]
    OutOfOrderWrite { last: usize, index: usize },
    #[error("malformed stream file: {0}")]
    Format(String),
}

/// A stream read strictly left to right. Skipped symbols are never observed.
#[derive(Clone, Debug)]
pub struct SymbolStream<T> {
    source: Vec<T>,
    cursor: usize,
    observed: usize,
}

impl<T: Copy + PartialEq> SymbolStream<T> {
    pub fn new(source: Vec<T>) -> Self {
        SymbolStream { source, cursor: 0, observed: 0 }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }
    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
    pub fn position(&self) -> usize {
        self.cursor
    }
    pub fn remaining(&self) -> usize {
        self.source.len() - self.cursor
    }
    /// Number of symbols handed out so far.
    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn read_next(&mut self) -> Result<T, StreamError> {
        let s = *self.source.get(self.cursor).ok_or(StreamError::EndOfStream)?;
        self.cursor += 1;
        self.observed += 1;
        Ok(s)
    }

    /// Reads a run of equal symbols of length at most `max`, returning the symbol and count.
    pub fn read_run(&mut self, max: usize) -> Result<(T, usize), StreamError> {
        let first = self.read_next()?;
        let mut count = 1;
        while count < max && self.source.get(self.cursor) == Some(&first) {
            self.cursor += 1;
            self.observed += 1;
            count += 1;
        }
        Ok((first, count))
    }

    /// Advances the cursor past `count` symbols without reading them.
    pub fn skip(&mut self, count: usize) -> Result<(), StreamError> {
        if count > self.remaining() {
            self.cursor = self.source.len();
            return Err(StreamError::EndOfStream);
        }
        self.cursor += count;
        Ok(())
    }

    /// Skips forward to absolute position `pos`.
    pub fn skip_to(&mut self, pos: usize) -> Result<(), StreamError> {
        if pos < self.cursor {
            return Err(StreamError::Format(format!("cannot rewind from {} to {pos}", self.cursor)));
        }
        self.skip(pos - self.cursor)
    }

    pub fn into_inner(self) -> Vec<T> {
        self.source
    }
}

/// Left-to-right write-only output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutputTape {
    written: Vec<(usize, u8)>,
}

impl OutputTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, index: usize, bit: u8) -> Result<(), StreamError> {
        if let Some(&(last, _)) = self.written.last() {
            if index <= last {
                return Err(StreamError::OutOfOrderWrite { last, index });
            }
        }
        self.written.push((index, bit));
        Ok(())
    }

    pub fn entries(&self) -> &[(usize, u8)] {
        &self.written
    }
    pub fn len(&self) -> usize {
        self.written.len()
    }
    pub fn is_empty(&self) -> bool {
        self.written.is_empty()
    }
    pub fn next_index(&self) -> usize {
        self.written.last().map_or(0, |&(i, _)| i + 1)
    }

    /// The written bits if they form exactly positions `0..n`.
    pub fn bits(&self, n: usize) -> Option<Vec<u8>> {
        if self.written.len() != n || self.written.iter().enumerate().any(|(i, &(j, _))| i != j) {
            return None;
        }
        Some(self.written.iter().map(|&(_, b)| b).collect())
    }
}

/// Append-only bit buffer used for canonical state serialization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, least significant first.
    pub fn push(&mut self, value: u64, width: u32) {
        for b in 0..width {
            if self.len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if (value >> b) & 1 == 1 {
                *self.bytes.last_mut().expect("just pushed") |= 1 << (self.len % 8);
            }
            self.len += 1;
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.len
    }
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Bits needed to store values in `0..=max`.
pub fn width_for(max: u64) -> u32 {
    64 - max.leading_zeros()
}

/// Decoder state that survives between stream reads.
pub trait CanonicalState {
    /// Size of the canonical serialization, computed arithmetically.
    fn state_bits(&self) -> u64;
    fn encode_state(&self, out: &mut BitWriter);
}

/// Peak persistent state observed across checkpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemoryLedger {
    pub peak_bits: u64,
    pub budget_bits: u64,
    pub exceeded: bool,
    pub checkpoints: u64,
}

impl MemoryLedger {
    pub fn new(budget_bits: u64) -> Self {
        MemoryLedger { budget_bits, ..Default::default() }
    }

    pub fn checkpoint<S: CanonicalState + ?Sized>(&mut self, state: &S) {
        self.record(state.state_bits());
    }

    pub fn record(&mut self, bits: u64) {
        self.checkpoints += 1;
        self.peak_bits = self.peak_bits.max(bits);
        if bits > self.budget_bits {
            self.exceeded = true;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Bits = 0,
    Symbols = 1,
}

/// On-disk stream: magic `SCSF`, version, kind, width, reserved byte, `n` and length as
/// little-endian u64, then symbols packed least significant bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamFile {
    pub kind: SymbolKind,
    pub width: u8,
    pub n: u64,
    pub symbols: Vec<u32>,
}

const MAGIC: &[u8; 4] = b"SCSF";
const VERSION: u8 = 1;

impl StreamFile {
    pub fn bits(n: usize, bits: &[u8]) -> Self {
        StreamFile { kind: SymbolKind::Bits, width: 1, n: n as u64, symbols: bits.iter().map(|&b| (b & 1) as u32).collect() }
    }

    pub fn symbols(n: usize, width: u8, symbols: Vec<u32>) -> Self {
        StreamFile { kind: SymbolKind::Symbols, width, n: n as u64, symbols }
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.symbols.iter().map(|&s| s as u8).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.symbols.len() * self.width as usize / 8 + 1);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[VERSION, self.kind as u8, self.width, 0]);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&(self.symbols.len() as u64).to_le_bytes());
        let mut w = BitWriter::new();
        for &s in &self.symbols {
            w.push(s as u64, self.width as u32);
        }
        out.extend(w.into_bytes());
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, StreamError> {
        let bad = |m: &str| StreamError::Format(m.to_string());
        if data.len() < 24 || &data[..4] != MAGIC {
            return Err(bad("missing header"));
        }
        if data[4] != VERSION {
            return Err(bad("unsupported version"));
        }
        let kind = match data[5] {
            0 => SymbolKind::Bits,
            1 => SymbolKind::Symbols,
            _ => return Err(bad("unknown symbol kind")),
        };
        let width = data[6];
        if width == 0 || width > 32 || (kind == SymbolKind::Bits && width != 1) {
            return Err(bad("invalid symbol width"));
        }
        let n = u64::from_le_bytes(data[8..16].try_into().expect("8 bytes"));
        let len = u64::from_le_bytes(data[16..24].try_into().expect("8 bytes")) as usize;
        let payload = &data[24..];
        let total_bits = len.checked_mul(width as usize).ok_or_else(|| bad("length overflow"))?;
        if payload.len() != total_bits.div_ceil(8) {
            return Err(bad("payload length does not match header"));
        }
        let mut symbols = Vec::with_capacity(len);
        let mut bit = 0usize;
        for _ in 0..len {
            let mut v = 0u32;
            for b in 0..width as usize {
                if (payload[bit / 8] >> (bit % 8)) & 1 == 1 {
                    v |= 1 << b;
                }
                bit += 1;
            }
            symbols.push(v);
        }
        Ok(StreamFile { kind, width, n, symbols })
    }
}
