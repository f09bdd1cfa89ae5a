//! Raw PCM passthrough on the reserved audio packet type.
//!
//! Audio is carried uncoded: one datagram per chunk, `k = 1`, little-endian
//! 16-bit samples. The `frame_id` field holds a chunk sequence number.

use super::packet::{FecPacket, PacketHeader, PacketType};
use super::FecError;

pub fn pcm_packet(session_id: u32, sequence: u32, samples: &[i16]) -> Result<FecPacket, FecError> {
    let payload: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    if payload.is_empty() {
        return Err(FecError::EmptyMessage);
    }
    if payload.len() > u16::MAX as usize {
        return Err(FecError::MessageTooLarge { len: payload.len() });
    }
    Ok(FecPacket {
        header: PacketHeader {
            packet_type: PacketType::Audio,
            session_id,
            frame_id: sequence,
            packet_index: 0,
            source_count: 1,
            message_len: payload.len() as u32,
            prng_seed: 0,
            payload_len: payload.len() as u16,
        },
        payload,
    })
}

pub fn pcm_samples(packet: &FecPacket) -> Result<Vec<i16>, FecError> {
    if packet.header.packet_type != PacketType::Audio {
        return Err(FecError::InconsistentHeader("not an audio packet"));
    }
    if !packet.payload.len().is_multiple_of(2) {
        return Err(FecError::PayloadLengthMismatch {
            expected: packet.payload.len() + 1,
            got: packet.payload.len(),
        });
    }
    Ok(packet
        .payload
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect())
}
