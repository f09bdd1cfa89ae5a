//! Receive side: reassembly, decoding, quad clouds and offline rendering.

pub mod decode;
pub mod image_io;
pub mod message;
pub mod ply;
pub mod quads;
pub mod raster;
pub mod reassembly;

use crate::codec::{ColorCodecError, DepthCodecError};
use crate::fec::FecError;
use thiserror::Error;

pub use decode::{DecodedFrame, FrameDecoder};
pub use message::{VideoMessage, MESSAGE_HEADER_LEN};
pub use ply::{export_ply, write_ply};
pub use quads::{build_quads, orient_quads, orient_quads_with, Orientation, Quad, QuadCloud, DEFAULT_ENLARGEMENT};
pub use raster::{coverage_metric, look_at, rasterize, Mask};
pub use reassembly::{Reassembler, ReassemblyEvent, FRAME_HORIZON};

#[derive(Debug, Error)]
pub enum ViewerError {
    #[error("malformed video message: {0}")]
    MalformedMessage(String),
    #[error("packet from session {got} on a reassembler bound to session {expected}")]
    ForeignSession { expected: u32, got: u32 },
    #[error("delta frame {frame_id} arrived without its reference frame")]
    MissingReference { frame_id: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("image file: {0}")]
    ImageFormat(String),
    #[error(transparent)]
    Fec(#[from] FecError),
    #[error(transparent)]
    Depth(#[from] DepthCodecError),
    #[error(transparent)]
    Color(#[from] ColorCodecError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for ViewerError {
    fn eq(&self, other: &Self) -> bool {
        use ViewerError::*;
        match (self, other) {
            (MalformedMessage(a), MalformedMessage(b))
            | (DimensionMismatch(a), DimensionMismatch(b))
            | (ImageFormat(a), ImageFormat(b)) => a == b,
            (ForeignSession { expected: a, got: b }, ForeignSession { expected: c, got: d }) => a == c && b == d,
            (MissingReference { frame_id: a }, MissingReference { frame_id: b }) => a == b,
            (Io(a), Io(b)) => a.kind() == b.kind(),
            _ => self.to_string() == other.to_string(),
        }
    }
}
