//! Nibble-granular variable-length integers and the zero-run/nonzero-run
//! grammar shared by the depth and color codecs.
//!
//! Each nibble carries three data bits and a continuation bit (bit 3). Groups
//! are emitted least-significant first. Two nibbles share a byte, low nibble
//! first; an odd trailing nibble is padded with zero.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("stream truncated")]
    TruncatedStream,
    #[error("runs cover {claimed} values but only {capacity} remain")]
    RunOverflow { claimed: u64, capacity: u64 },
    #[error("varint exceeds 32 bits")]
    VarintOverflow,
}

/// `(v << 1) ^ (v >> 31)`.
#[inline]
pub fn zigzag(v: i32) -> u32 {
    ((v << 1) ^ (v >> 31)) as u32
}

#[inline]
pub fn unzigzag(z: u32) -> i32 {
    ((z >> 1) as i32) ^ -((z & 1) as i32)
}

/// Moves the 3-bit groups of `v` into the low bits of consecutive nibbles:
/// 12-bit chunks to 16-bit lanes, then 6-bit halves to bytes, then 3-bit
/// groups to nibbles.
#[inline]
fn spread(v: u32) -> u64 {
    let x = v as u64;
    let a = (x & 0xFFF) | ((x & 0xFF_F000) << 4) | ((x & 0xF_FF00_0000) << 8);
    let b = (a & 0x003F_003F_003F) | ((a & 0x0FC0_0FC0_0FC0) << 2);
    (b & 0x0707_0707_0707) | ((b & 0x3838_3838_3838) << 1)
}

/// Inverse of [`spread`] for up to twelve nibbles; continuation bits are dropped.
#[inline]
fn gather(w: u64) -> u64 {
    let c = w & 0x7777_7777_7777;
    let b = (c & 0x0707_0707_0707) | ((c & 0x7070_7070_7070) >> 1);
    let a = (b & 0x003F_003F_003F) | ((b & 0x3F00_3F00_3F00) >> 2);
    (a & 0xFFF) | ((a & 0x0FFF_0000) >> 4) | ((a & 0x0FFF_0000_0000) >> 8)
}

/// Nibbles collect in a 64-bit register, low nibble first. After every
/// varint the register is stored whole and the cursor advances by the
/// complete bytes, so fewer than eight bits stay pending.
#[derive(Debug, Default)]
pub struct NibbleWriter {
    /// Zero-filled scratch; bytes past `len` are not yet part of the output.
    buf: Vec<u8>,
    len: usize,
    acc: u64,
    bits: u32,
}

impl NibbleWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bytes: usize) -> Self {
        NibbleWriter { buf: vec![0; bytes + 8], len: 0, acc: 0, bits: 0 }
    }

    /// Appends the low `count` bits of `word`; `count` is at most 56.
    #[inline(always)]
    fn push_bits(&mut self, word: u64, count: u32) {
        self.acc |= word << self.bits;
        self.bits += count;
        if self.len + 8 > self.buf.len() {
            self.grow();
        }
        self.buf[self.len..self.len + 8].copy_from_slice(&self.acc.to_le_bytes());
        let whole = self.bits / 8;
        self.len += whole as usize;
        self.acc = self.acc.checked_shr(8 * whole).unwrap_or(0);
        self.bits -= 8 * whole;
    }

    #[cold]
    fn grow(&mut self) {
        let size = (2 * self.buf.len()).max(64);
        self.buf.resize(size, 0);
    }

    #[inline]
    pub fn push_nibble(&mut self, nibble: u8) {
        debug_assert!(nibble < 16);
        self.push_bits(nibble as u64, 4);
    }

    #[inline(always)]
    pub fn push_uvarint(&mut self, value: u32) {
        // `| 1` gives zero a single group, like the other values below 8.
        let groups = (34 - (value | 1).leading_zeros()) / 3;
        let continuation = 0x0888_8888_8888u64 & ((1u64 << (4 * (groups - 1))) - 1);
        self.push_bits(spread(value) | continuation, 4 * groups);
    }

    /// Appends raw bytes after padding to a byte boundary.
    pub fn push_aligned_bytes(&mut self, raw: &[u8]) {
        self.pad();
        self.buf.truncate(self.len);
        self.buf.extend_from_slice(raw);
        self.len = self.buf.len();
    }

    fn pad(&mut self) {
        if self.bits > 0 {
            self.bits = 8;
            self.push_bits(0, 0);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.pad();
        self.buf.truncate(self.len);
        self.buf
    }
}

#[derive(Debug)]
pub struct NibbleReader<'a> {
    bytes: &'a [u8],
    /// Nibble offset of the next unread nibble.
    pos: usize,
}

impl<'a> NibbleReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        NibbleReader { bytes, pos: 0 }
    }

    /// Nibbles from `pos` on, low first, and how many of them exist (at most 16).
    #[inline(always)]
    fn window(&self) -> (u64, u32) {
        let byte = self.pos / 2;
        let half = (self.pos % 2) as u32;
        match self.bytes.get(byte..byte + 8) {
            Some(chunk) => (u64::from_le_bytes(chunk.try_into().expect("8 bytes")) >> (4 * half), 16 - half),
            None => self.tail_window(),
        }
    }

    #[cold]
    #[inline(never)]
    fn tail_window(&self) -> (u64, u32) {
        let byte = self.pos / 2;
        let half = (self.pos % 2) as u32;
        let mut chunk = [0u8; 8];
        let rest = self.bytes.get(byte..).unwrap_or(&[]);
        let take = rest.len().min(8);
        chunk[..take].copy_from_slice(&rest[..take]);
        (u64::from_le_bytes(chunk) >> (4 * half), (2 * take as u32).saturating_sub(half))
    }

    #[inline]
    pub fn next_nibble(&mut self) -> Result<u8, StreamError> {
        let byte = *self.bytes.get(self.pos / 2).ok_or(StreamError::TruncatedStream)?;
        let nibble = (byte >> (4 * (self.pos % 2))) & 0xF;
        self.pos += 1;
        Ok(nibble)
    }

    /// Decodes from the window when the whole varint is in it and fits in
    /// eleven nibbles and 32 bits.
    #[inline(always)]
    fn try_window(&mut self) -> Option<u32> {
        let (window, avail) = self.window();
        let count = (!window & 0x8888_8888_8888_8888).trailing_zeros() / 4 + 1;
        if count > avail.min(11) {
            return None;
        }
        let value = gather(window & ((1u64 << (4 * count)) - 1));
        if value > u32::MAX as u64 {
            return None;
        }
        self.pos += count as usize;
        Some(value as u32)
    }

    /// Takes `k` (at most 8) single-nibble varints at once, one per byte of
    /// the result.
    #[inline(always)]
    fn try_small(&mut self, k: u32) -> Option<u64> {
        let (window, avail) = self.window();
        let mask = (1u64 << (4 * k)) - 1;
        if avail < k || window & 0x8888_8888 & mask != 0 {
            return None;
        }
        let x = window & mask;
        let x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
        let x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
        let x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
        self.pos += k as usize;
        Some(x)
    }

    #[inline(always)]
    pub fn next_uvarint(&mut self) -> Result<u32, StreamError> {
        match self.try_window() {
            Some(v) => Ok(v),
            None => self.next_uvarint_checked(),
        }
    }

    #[cold]
    #[inline(never)]
    fn next_uvarint_checked(&mut self) -> Result<u32, StreamError> {
        let mut value: u64 = 0;
        let mut shift = 0u32;
        loop {
            let nibble = self.next_nibble()?;
            value |= ((nibble & 0x7) as u64) << shift;
            if value > u32::MAX as u64 {
                return Err(StreamError::VarintOverflow);
            }
            if nibble & 0x8 == 0 {
                return Ok(value as u32);
            }
            shift += 3;
            if shift > 32 {
                return Err(StreamError::VarintOverflow);
            }
        }
    }

    /// Skips the pad nibble, if any, and returns the byte offset reached.
    pub fn align(&mut self) -> usize {
        self.pos = self.pos.div_ceil(2) * 2;
        self.pos / 2
    }

    pub fn next_aligned_byte(&mut self) -> Result<u8, StreamError> {
        let at = self.align();
        let byte = *self.bytes.get(at).ok_or(StreamError::TruncatedStream)?;
        self.pos += 2;
        Ok(byte)
    }
}

/// Emits `values` (already zigzagged) with the run grammar
/// `repeat { zeroRun, nonzeroLen, nonzeroLen × value }`.
pub fn write_runs(writer: &mut NibbleWriter, values: &[u32]) {
    // Bit j of word w is set when values[64 w + j] is nonzero (or, in
    // `large`, at least 8); run ends are found by counting trailing zeros
    // instead of testing every value.
    let nonzero = bitmap(values, |v| v != 0);
    let large = bitmap(values, |v| v >= 8);
    // Low nibble of every value, two per byte, padded so that any position
    // can be read as a whole word. A run without large values is exactly
    // these nibbles.
    let n = values.len();
    let mut packed = vec![0u8; n.div_ceil(2) + 8];
    for (byte, pair) in packed.iter_mut().zip(values.chunks_exact(2)) {
        *byte = (pair[0] & 0xF) as u8 | ((pair[1] & 0xF) as u8) << 4;
    }
    if n % 2 == 1 {
        packed[n / 2] = (values[n - 1] & 0xF) as u8;
    }
    let mut i = 0;
    while i < n {
        let start = next_with(&nonzero, i, true).min(n);
        let end = next_with(&nonzero, start, false).min(n);
        writer.push_uvarint((start - i) as u32);
        writer.push_uvarint((end - start) as u32);
        if start < end && any_set(&large, start, end) {
            for &v in &values[start..end] {
                writer.push_uvarint(v);
            }
        } else {
            let mut s = start;
            while s < end {
                let c = (end - s).min(14);
                let b = s / 2;
                let word = u64::from_le_bytes(packed[b..b + 8].try_into().expect("8 bytes")) >> (4 * (s % 2));
                writer.push_bits(word & ((1u64 << (4 * c)) - 1), 4 * c as u32);
                s += c;
            }
        }
        i = end;
    }
}

fn bitmap(values: &[u32], test: impl Fn(u32) -> bool + Copy) -> Vec<u64> {
    let blocks = values.chunks_exact(64);
    let tail = blocks.remainder();
    let mut bits: Vec<u64> = blocks.map(|b| block_bits(b.try_into().expect("64 values"), test)).collect();
    if !tail.is_empty() {
        let mut padded = [0u32; 64];
        padded[..tail.len()].copy_from_slice(tail);
        bits.push(block_bits(&padded, test) & (u64::MAX >> (64 - tail.len())));
    }
    bits
}

#[inline]
fn block_bits(block: &[u32; 64], test: impl Fn(u32) -> bool) -> u64 {
    let mut m = 0u64;
    for (g, eight) in block.chunks_exact(8).enumerate() {
        let mut flags = [0u8; 8];
        for (f, &v) in flags.iter_mut().zip(eight) {
            *f = test(v) as u8;
        }
        // Moves the low bit of byte k to bit 56 + k.
        let packed = u64::from_le_bytes(flags).wrapping_mul(0x0102_0408_1020_4080) >> 56;
        m |= packed << (8 * g);
    }
    m
}

/// True when any bit in `from..to` is set; `from < to`.
#[inline]
fn any_set(bits: &[u64], from: usize, to: usize) -> bool {
    let (first, last) = (from / 64, (to - 1) / 64);
    let head = u64::MAX << (from % 64);
    let tail = u64::MAX >> (63 - (to - 1) % 64);
    if first == last {
        return bits[first] & head & tail != 0;
    }
    bits[first] & head != 0 || bits[first + 1..last].iter().any(|&w| w != 0) || bits[last] & tail != 0
}

/// First index at or after `from` whose bit equals `set`, or the bitmap length.
#[inline]
fn next_with(bits: &[u64], from: usize, set: bool) -> usize {
    let mut w = from / 64;
    let flip = if set { 0 } else { u64::MAX };
    let mut word = match bits.get(w) {
        Some(&b) => (b ^ flip) >> (from % 64) << (from % 64),
        None => return from,
    };
    loop {
        if word != 0 {
            return 64 * w + word.trailing_zeros() as usize;
        }
        w += 1;
        match bits.get(w) {
            Some(&b) => word = b ^ flip,
            None => return 64 * w,
        }
    }
}

/// Receives the values decoded by [`read_runs`].
pub trait RunSink {
    /// `z` is the nonzero value at `index`.
    fn put(&mut self, index: usize, z: u32);

    /// Values at `index..index + 8`, all below 8; a zero means the position
    /// keeps its zero. Only called when the eight positions exist.
    #[inline(always)]
    fn put8(&mut self, index: usize, z: [u8; 8]) {
        for (j, &v) in z.iter().enumerate() {
            if v != 0 {
                self.put(index + j, v as u32);
            }
        }
    }
}

impl<F: FnMut(usize, u32)> RunSink for F {
    #[inline(always)]
    fn put(&mut self, index: usize, z: u32) {
        self(index, z)
    }
}

/// Inverse of [`write_runs`]: hands every nonzero value to `sink` while
/// walking exactly `count` positions.
pub fn read_runs(
    reader: &mut NibbleReader<'_>,
    count: usize,
    mut sink: impl RunSink,
) -> Result<(), StreamError> {
    let mut pos = 0usize;
    while pos < count {
        let zeros = reader.next_uvarint()? as u64;
        let nonzeros = reader.next_uvarint()? as u64;
        let remaining = (count - pos) as u64;
        if zeros + nonzeros > remaining {
            return Err(StreamError::RunOverflow {
                claimed: zeros + nonzeros,
                capacity: remaining,
            });
        }
        pos += zeros as usize;
        let mut left = nonzeros as usize;
        while left > 0 {
            let k = left.min(8);
            if let Some(x) = reader.try_small(k as u32) {
                if pos + 8 <= count {
                    // Bytes of `x` past `k` are zero.
                    sink.put8(pos, x.to_le_bytes());
                } else {
                    for j in 0..k {
                        sink.put(pos + j, ((x >> (8 * j)) & 0xFF) as u32);
                    }
                }
                pos += k;
                left -= k;
                continue;
            }
            for _ in 0..k {
                sink.put(pos, reader.next_uvarint()?);
                pos += 1;
            }
            left -= k;
        }
    }
    Ok(())
}
