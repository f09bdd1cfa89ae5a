//! Packetization and a systematic random-linear fountain code over GF(256).
//!
//! A message is split into `k` equal blocks. The first `k` packets carry the
//! blocks verbatim; every later packet carries a GF(256) combination of all
//! blocks whose coefficients are derived from the header alone, so a receiver
//! holding any `k` linearly independent packets recovers the message.

pub mod audio;
pub mod decoder;
pub mod encoder;
pub mod gf256;
pub mod packet;

use thiserror::Error;

pub use decoder::{DecodeProgress, FountainDecoder};
pub use encoder::{
    coefficient_row, fountain_encode, packet_count, packetize, SourceBlocks, SplitMix64, StreamKey,
    DEFAULT_MTU_PAYLOAD, DEFAULT_REDUNDANCY,
};
pub use packet::{FecPacket, PacketHeader, PacketType, HEADER_LEN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FecError {
    #[error("cannot packetize an empty message")]
    EmptyMessage,
    #[error("message of {len} bytes exceeds the addressable block count")]
    MessageTooLarge { len: usize },
    #[error("mtu payload {0} out of range")]
    InvalidMtu(usize),
    #[error("redundancy {0} must be a non-negative ratio")]
    InvalidRedundancy(f64),
    #[error("{0} packets exceed the 16-bit packet index")]
    TooManyPackets(usize),
    #[error("datagram of {len} bytes is shorter than the header")]
    Truncated { len: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown packet type {0}")]
    UnknownPacketType(u8),
    #[error("payload length {got} does not match {expected}")]
    PayloadLengthMismatch { expected: usize, got: usize },
    #[error("inconsistent header: {0}")]
    InconsistentHeader(&'static str),
    #[error("message already decoded")]
    AlreadyComplete,
}
