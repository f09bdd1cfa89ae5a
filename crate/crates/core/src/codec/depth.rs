//! Temporal depth codec.
//!
//! Every frame is coded as a zigzag delta against the previous
//! *reconstruction*, so the encoder and decoder track identical reference
//! buffers and thresholded error cannot drift. A keyframe is a delta against
//! an all-zero reference.

use super::nibble::{read_runs, unzigzag, write_runs, zigzag, NibbleReader, NibbleWriter, RunSink, StreamError};
use crate::model::DepthImage;
use thiserror::Error;

/// Frames between scheduled keyframes.
pub const KEYFRAME_INTERVAL: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DepthCodecError {
    #[error("frame is {got_w}x{got_h}, codec configured for {want_w}x{want_h}")]
    DimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("codec dimensions must be non-zero")]
    EmptyConfig,
    #[error(transparent)]
    Stream(#[from] StreamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthCodecConfig {
    pub width: u32,
    pub height: u32,
    /// Deltas with magnitude at or below this are coded as zero.
    pub change_threshold_mm: u16,
}

impl DepthCodecConfig {
    pub fn lossless(width: u32, height: u32) -> Self {
        DepthCodecConfig { width, height, change_threshold_mm: 0 }
    }

    fn pixel_count(&self) -> Result<usize, DepthCodecError> {
        let n = self.width as usize * self.height as usize;
        if n == 0 {
            return Err(DepthCodecError::EmptyConfig);
        }
        Ok(n)
    }

    fn check(&self, image: &DepthImage) -> Result<(), DepthCodecError> {
        if image.width != self.width || image.height != self.height || image.data.len() != image.pixel_count() {
            return Err(DepthCodecError::DimensionMismatch {
                got_w: image.width,
                got_h: image.height,
                want_w: self.width,
                want_h: self.height,
            });
        }
        Ok(())
    }
}

/// Whether frame `index` of a stream is a scheduled keyframe.
pub fn is_scheduled_keyframe(index: u32) -> bool {
    index.is_multiple_of(KEYFRAME_INTERVAL)
}

#[derive(Debug, Clone)]
pub struct DepthEncoder {
    config: DepthCodecConfig,
    reference: Vec<u16>,
    deltas: Vec<u32>,
}

impl DepthEncoder {
    pub fn new(config: DepthCodecConfig) -> Result<Self, DepthCodecError> {
        let n = config.pixel_count()?;
        Ok(DepthEncoder {
            config,
            reference: vec![0; n],
            deltas: vec![0; n],
        })
    }

    pub fn config(&self) -> &DepthCodecConfig {
        &self.config
    }

    /// Pixels of [`Self::reconstruction`], borrowed.
    pub fn reference(&self) -> &[u16] {
        &self.reference
    }

    /// The reconstruction the decoder will hold after decoding the last frame.
    pub fn reconstruction(&self) -> DepthImage {
        DepthImage {
            width: self.config.width,
            height: self.config.height,
            data: self.reference.clone(),
        }
    }

    pub fn encode(&mut self, frame: &DepthImage, keyframe: bool) -> Result<Vec<u8>, DepthCodecError> {
        self.config.check(frame)?;
        if keyframe {
            self.reference.fill(0);
        }
        let threshold = self.config.change_threshold_mm as i32;
        for ((delta, reference), &current) in self.deltas.iter_mut().zip(self.reference.iter_mut()).zip(&frame.data) {
            let d = current as i32 - *reference as i32;
            let changed = d.abs() > threshold;
            *delta = if changed { zigzag(d) } else { 0 };
            *reference = if changed { current } else { *reference };
        }
        let mut writer = NibbleWriter::with_capacity(self.deltas.len() / 4);
        write_runs(&mut writer, &self.deltas);
        Ok(writer.finish())
    }
}

#[derive(Debug, Clone)]
pub struct DepthDecoder {
    config: DepthCodecConfig,
    reference: Vec<u16>,
}

impl DepthDecoder {
    pub fn new(config: DepthCodecConfig) -> Result<Self, DepthCodecError> {
        let n = config.pixel_count()?;
        Ok(DepthDecoder { config, reference: vec![0; n] })
    }

    pub fn config(&self) -> &DepthCodecConfig {
        &self.config
    }

    /// Applies one coded frame. On error the reference buffer is left as it
    /// was before the call.
    pub fn decode(&mut self, bytes: &[u8], keyframe: bool) -> Result<DepthImage, DepthCodecError> {
        let mut next = if keyframe {
            vec![0; self.reference.len()]
        } else {
            self.reference.clone()
        };
        let mut reader = NibbleReader::new(bytes);
        read_runs(&mut reader, next.len(), AddDeltas(&mut next))?;
        self.reference.copy_from_slice(&next);
        Ok(DepthImage {
            width: self.config.width,
            height: self.config.height,
            data: next,
        })
    }
}

/// Adds decoded deltas onto a reference frame.
struct AddDeltas<'a>(&'a mut [u16]);

impl RunSink for AddDeltas<'_> {
    #[inline(always)]
    fn put(&mut self, index: usize, z: u32) {
        self.0[index] = self.0[index].wrapping_add(unzigzag(z) as u16);
    }

    #[inline(always)]
    fn put8(&mut self, index: usize, z: [u8; 8]) {
        let lanes: &mut [u16; 8] = (&mut self.0[index..index + 8]).try_into().expect("8 lanes");
        for (d, &v) in lanes.iter_mut().zip(&z) {
            *d = d.wrapping_add(unzigzag(v as u32) as u16);
        }
    }
}
