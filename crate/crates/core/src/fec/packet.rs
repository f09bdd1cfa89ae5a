//! Datagram wire format.
//!
//! ```text
//! offset  size  field
//!      0     2  magic "TG" (0x54 0x47)
//!      2     1  version (1)
//!      3     1  type (0 = video, 1 = audio)
//!      4     4  session id
//!      8     4  frame id
//!     12     2  packet index
//!     14     2  source block count k
//!     16     4  message length in bytes
//!     20     4  coefficient seed
//!     24     2  payload length
//!     26    10  reserved, zero
//!     36     …  payload
//! ```
//!
//! All integers are little-endian.

use super::FecError;

pub const HEADER_LEN: usize = 36;
pub const MAGIC: [u8; 2] = [0x54, 0x47];
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PacketType {
    Video = 0,
    /// Reserved for audio; carried verbatim without coding.
    Audio = 1,
}

impl PacketType {
    fn from_byte(b: u8) -> Result<Self, FecError> {
        match b {
            0 => Ok(PacketType::Video),
            1 => Ok(PacketType::Audio),
            other => Err(FecError::UnknownPacketType(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketHeader {
    pub packet_type: PacketType,
    pub session_id: u32,
    pub frame_id: u32,
    pub packet_index: u16,
    pub source_count: u16,
    pub message_len: u32,
    pub prng_seed: u32,
    pub payload_len: u16,
}

impl PacketHeader {
    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.packet_type as u8);
        out.extend_from_slice(&self.session_id.to_le_bytes());
        out.extend_from_slice(&self.frame_id.to_le_bytes());
        out.extend_from_slice(&self.packet_index.to_le_bytes());
        out.extend_from_slice(&self.source_count.to_le_bytes());
        out.extend_from_slice(&self.message_len.to_le_bytes());
        out.extend_from_slice(&self.prng_seed.to_le_bytes());
        out.extend_from_slice(&self.payload_len.to_le_bytes());
        out.extend_from_slice(&[0u8; 10]);
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, FecError> {
        if bytes.len() < HEADER_LEN {
            return Err(FecError::Truncated { len: bytes.len() });
        }
        if bytes[0..2] != MAGIC {
            return Err(FecError::BadMagic([bytes[0], bytes[1]]));
        }
        if bytes[2] != VERSION {
            return Err(FecError::UnsupportedVersion(bytes[2]));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        Ok(PacketHeader {
            packet_type: PacketType::from_byte(bytes[3])?,
            session_id: u32_at(4),
            frame_id: u32_at(8),
            packet_index: u16_at(12),
            source_count: u16_at(14),
            message_len: u32_at(16),
            prng_seed: u32_at(20),
            payload_len: u16_at(24),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FecPacket {
    pub header: PacketHeader,
    pub payload: Vec<u8>,
}

impl FecPacket {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        self.header.write_to(&mut out);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FecError> {
        let header = PacketHeader::parse(bytes)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != header.payload_len as usize {
            return Err(FecError::PayloadLengthMismatch {
                expected: header.payload_len as usize,
                got: payload.len(),
            });
        }
        Ok(FecPacket {
            header,
            payload: payload.to_vec(),
        })
    }

    pub fn is_systematic(&self) -> bool {
        self.header.packet_index < self.header.source_count
    }
}
