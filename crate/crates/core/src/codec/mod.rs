//! Depth and color codecs built on a shared nibble-varint run grammar.

pub mod color;
pub mod depth;
pub mod nibble;

pub use color::{decode_color, encode_color, ColorCodec, ColorCodecError, ColorCodecId, ReferenceColorCodec};
pub use depth::{DepthCodecConfig, DepthCodecError, DepthDecoder, DepthEncoder, KEYFRAME_INTERVAL};
pub use nibble::{unzigzag, zigzag, StreamError};
