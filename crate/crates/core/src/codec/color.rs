//! Color-plane codecs.
//!
//! Every encoded color payload starts with a one-byte codec id. Id 0 is the
//! built-in lossless reference codec; every other id is refused at decode
//! time until a codec is registered for it.
//!
//! The reference codec splits the image into R, G and B planes. Each plane
//! stores its origin pixel raw, then the run grammar over zigzagged
//! horizontal deltas. The first pixel of a row predicts from the first pixel
//! of the row above. Planes are byte aligned.

use super::nibble::{read_runs, unzigzag, write_runs, zigzag, NibbleReader, NibbleWriter, StreamError};
use crate::model::ColorImage;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColorCodecError {
    #[error("unknown color codec id {0}")]
    UnknownCodecId(u8),
    #[error("color stream truncated")]
    TruncatedStream,
    #[error("{0} trailing bytes after color stream")]
    TrailingBytes(usize),
    #[error("malformed color stream: {0}")]
    Malformed(StreamError),
    #[error("reconstructed sample {0} outside 0..=255")]
    SampleOutOfRange(i32),
    #[error("color dimensions must be non-zero")]
    EmptyImage,
}

impl From<StreamError> for ColorCodecError {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::TruncatedStream => ColorCodecError::TruncatedStream,
            other => ColorCodecError::Malformed(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ColorCodecId {
    ReferenceLossless = 0,
    /// Reserved for a standardized video codec; no implementation ships.
    Standard = 1,
}

impl ColorCodecId {
    pub fn from_byte(byte: u8) -> Result<Self, ColorCodecError> {
        match byte {
            0 => Ok(ColorCodecId::ReferenceLossless),
            other => Err(ColorCodecError::UnknownCodecId(other)),
        }
    }
}

/// Stage that turns a color image into opaque bytes for the video message.
pub trait ColorCodec {
    fn id(&self) -> ColorCodecId;
    fn encode(&mut self, image: &ColorImage) -> Vec<u8>;
    fn decode(&mut self, bytes: &[u8], width: u32, height: u32) -> Result<ColorImage, ColorCodecError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ReferenceColorCodec;

impl ColorCodec for ReferenceColorCodec {
    fn id(&self) -> ColorCodecId {
        ColorCodecId::ReferenceLossless
    }

    fn encode(&mut self, image: &ColorImage) -> Vec<u8> {
        encode_color(image)
    }

    fn decode(&mut self, bytes: &[u8], width: u32, height: u32) -> Result<ColorImage, ColorCodecError> {
        decode_color(bytes, width, height)
    }
}

pub fn encode_color(image: &ColorImage) -> Vec<u8> {
    let (w, h) = (image.width as usize, image.height as usize);
    let mut writer = NibbleWriter::with_capacity(64);
    writer.push_aligned_bytes(&[ColorCodecId::ReferenceLossless as u8]);
    let mut deltas = Vec::with_capacity(w * h);
    for channel in 0..3 {
        let at = |x: usize, y: usize| image.data[3 * (y * w + x) + channel] as i32;
        deltas.clear();
        for y in 0..h {
            for x in 0..w {
                let predicted = match (x, y) {
                    (0, 0) => continue,
                    (0, _) => at(0, y - 1),
                    _ => at(x - 1, y),
                };
                deltas.push(zigzag(at(x, y) - predicted));
            }
        }
        writer.push_aligned_bytes(&[at(0, 0) as u8]);
        write_runs(&mut writer, &deltas);
    }
    writer.finish()
}

pub fn decode_color(bytes: &[u8], width: u32, height: u32) -> Result<ColorImage, ColorCodecError> {
    let id = *bytes.first().ok_or(ColorCodecError::TruncatedStream)?;
    ColorCodecId::from_byte(id)?;
    let (w, h) = (width as usize, height as usize);
    if w == 0 || h == 0 {
        return Err(ColorCodecError::EmptyImage);
    }
    let mut data = vec![0u8; 3 * w * h];
    let mut reader = NibbleReader::new(&bytes[1..]);
    let mut deltas = vec![0i32; w * h - 1];
    for channel in 0..3 {
        let origin = reader.next_aligned_byte()?;
        deltas.fill(0);
        read_runs(&mut reader, w * h - 1, |i, z| deltas[i] = unzigzag(z))?;
        let mut putback = |x: usize, y: usize, v: i32| {
            data[3 * (y * w + x) + channel] = v as u8;
            v
        };
        putback(0, 0, origin as i32);
        let mut row_start = origin as i32;
        let mut k = 0;
        for y in 0..h {
            let mut prev = row_start;
            for x in 0..w {
                if x == 0 && y == 0 {
                    continue;
                }
                let value = if x == 0 { row_start + deltas[k] } else { prev + deltas[k] };
                if !(0..=255).contains(&value) {
                    return Err(ColorCodecError::SampleOutOfRange(value));
                }
                k += 1;
                putback(x, y, value);
                if x == 0 {
                    row_start = value;
                }
                prev = value;
            }
        }
    }
    let consumed = 1 + reader.align();
    if consumed != bytes.len() {
        return Err(ColorCodecError::TrailingBytes(bytes.len() - consumed));
    }
    Ok(ColorImage { width, height, data })
}
