use super::gf256;
use super::packet::{FecPacket, PacketHeader, PacketType};
use super::FecError;

/// Default payload bytes per datagram: a 1200-byte datagram minus the header.
pub const DEFAULT_MTU_PAYLOAD: usize = 1164;

/// Redundancy used by transmitters unless configured otherwise.
pub const DEFAULT_REDUNDANCY: f64 = 0.5;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 generator with its standard constants.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Coding coefficients of a repair packet.
///
/// The generator is seeded with `prng_seed XOR (packet_index × 0x9E3779B97F4A7C15)`
/// and its outputs are consumed as little-endian bytes, one coefficient per
/// byte. If all `k` bytes come out zero the seed is incremented and the row is
/// drawn again.
pub fn coefficient_row(prng_seed: u32, packet_index: u16, k: usize) -> Vec<u8> {
    let mut seed = (prng_seed as u64) ^ (packet_index as u64).wrapping_mul(GOLDEN_GAMMA);
    let mut row = vec![0u8; k];
    loop {
        let mut rng = SplitMix64::new(seed);
        for chunk in row.chunks_mut(8) {
            let bytes = rng.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
        if row.iter().any(|&c| c != 0) {
            return row;
        }
        seed = seed.wrapping_add(1);
    }
}

/// A message split into equal-size, zero-padded blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceBlocks {
    pub blocks: Vec<Vec<u8>>,
    pub message_len: usize,
    pub block_size: usize,
}

impl SourceBlocks {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }
}

pub fn packetize(message: &[u8], mtu_payload: usize) -> Result<SourceBlocks, FecError> {
    if mtu_payload == 0 || mtu_payload > u16::MAX as usize {
        return Err(FecError::InvalidMtu(mtu_payload));
    }
    if message.is_empty() {
        return Err(FecError::EmptyMessage);
    }
    if message.len() > u32::MAX as usize {
        return Err(FecError::MessageTooLarge { len: message.len() });
    }
    let blocks: Vec<Vec<u8>> = message
        .chunks(mtu_payload)
        .map(|c| {
            let mut b = c.to_vec();
            b.resize(mtu_payload, 0);
            b
        })
        .collect();
    if blocks.len() > u16::MAX as usize {
        return Err(FecError::MessageTooLarge { len: message.len() });
    }
    Ok(SourceBlocks {
        blocks,
        message_len: message.len(),
        block_size: mtu_payload,
    })
}

/// `ceil((1 + redundancy) · k)`, tolerant of float noise in the ratio.
pub fn packet_count(k: usize, redundancy: f64) -> usize {
    let raw = (1.0 + redundancy) * k as f64;
    ((raw - 1e-9).ceil() as usize).max(k)
}

/// Identifies the stream a message belongs to and seeds its repair rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub packet_type: PacketType,
    pub session_id: u32,
    pub frame_id: u32,
    pub prng_seed: u32,
}

pub fn fountain_encode(source: &SourceBlocks, redundancy: f64, key: StreamKey) -> Result<Vec<FecPacket>, FecError> {
    if !redundancy.is_finite() || redundancy < 0.0 {
        return Err(FecError::InvalidRedundancy(redundancy));
    }
    let k = source.k();
    let n = packet_count(k, redundancy);
    if n > u16::MAX as usize + 1 {
        return Err(FecError::TooManyPackets(n));
    }
    let header = |packet_index: usize| PacketHeader {
        packet_type: key.packet_type,
        session_id: key.session_id,
        frame_id: key.frame_id,
        packet_index: packet_index as u16,
        source_count: k as u16,
        message_len: source.message_len as u32,
        prng_seed: key.prng_seed,
        payload_len: source.block_size as u16,
    };
    let mut packets = Vec::with_capacity(n);
    for (i, block) in source.blocks.iter().enumerate() {
        packets.push(FecPacket {
            header: header(i),
            payload: block.clone(),
        });
    }
    for i in k..n {
        let coefficients = coefficient_row(key.prng_seed, i as u16, k);
        let mut payload = vec![0u8; source.block_size];
        for (block, &c) in source.blocks.iter().zip(&coefficients) {
            gf256::mul_add_slice(&mut payload, block, c);
        }
        packets.push(FecPacket {
            header: header(i),
            payload,
        });
    }
    Ok(packets)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEY: StreamKey = StreamKey {
        packet_type: PacketType::Video,
        session_id: 1,
        frame_id: 2,
        prng_seed: 0xDEAD_BEEF,
    };

    #[test]
    fn splitmix_reference_outputs() {
        // Published reference sequence for seed 0.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn packetize_sizes() {
        assert_eq!(packetize(&[1; 100], 100).unwrap().k(), 1);
        let two = packetize(&[7; 1201], 1200).unwrap();
        assert_eq!(two.k(), 2);
        assert_eq!(two.blocks[1][0], 7);
        assert!(two.blocks[1][1..].iter().all(|&b| b == 0));
        assert_eq!(two.blocks[1].len() - 1, 1199);
        assert_eq!(packetize(&vec![0; 57_600], 1200).unwrap().k(), 48);
        assert_eq!(packetize(&[], 10), Err(FecError::EmptyMessage));
        assert_eq!(packetize(&[1], 0), Err(FecError::InvalidMtu(0)));
    }

    #[test]
    fn emitted_counts() {
        let src = packetize(&[5; 400], 100).unwrap();
        assert_eq!(fountain_encode(&src, 0.5, KEY).unwrap().len(), 6);
        let none = fountain_encode(&src, 0.0, KEY).unwrap();
        assert_eq!(none.len(), 4);
        assert!(none.iter().all(FecPacket::is_systematic));
        for k in [1usize, 3, 4, 48, 100, 101] {
            assert_eq!(packet_count(k, 0.5), (3 * k).div_ceil(2));
        }
        assert_eq!(packet_count(10, 0.1), 11);
        assert!(fountain_encode(&src, -0.1, KEY).is_err());
    }

    #[test]
    fn systematic_packets_copy_blocks() {
        let msg: Vec<u8> = (0..250u32).map(|i| i as u8).collect();
        let src = packetize(&msg, 100).unwrap();
        let packets = fountain_encode(&src, 0.5, KEY).unwrap();
        for (i, p) in packets.iter().take(3).enumerate() {
            assert_eq!(p.payload, src.blocks[i]);
            assert_eq!(p.header.packet_index as usize, i);
            assert_eq!(p.header.message_len, 250);
        }
    }

    #[test]
    fn repair_payload_matches_matrix_oracle() {
        // Oracle: schoolbook GF(256) product via shift-and-reduce, no tables.
        fn mul(a: u8, b: u8) -> u8 {
            let (mut a, mut b, mut p) = (a as u16, b, 0u16);
            while b != 0 {
                if b & 1 == 1 {
                    p ^= a;
                }
                a <<= 1;
                if a & 0x100 != 0 {
                    a ^= 0x11B;
                }
                b >>= 1;
            }
            p as u8
        }
        let blocks = vec![vec![0x01, 0x80, 0xFF, 0x00], vec![0x02, 0x02, 0x10, 0x37]];
        let src = SourceBlocks { blocks: blocks.clone(), message_len: 8, block_size: 4 };
        let packets = fountain_encode(&src, 1.0, KEY).unwrap();
        assert_eq!(packets.len(), 4);
        for p in &packets[2..] {
            let c = coefficient_row(KEY.prng_seed, p.header.packet_index, 2);
            let expected: Vec<u8> = (0..4).map(|j| mul(c[0], blocks[0][j]) ^ mul(c[1], blocks[1][j])).collect();
            assert_eq!(p.payload, expected);
        }
    }

    #[test]
    fn coefficient_rows_are_deterministic_and_nonzero() {
        for index in 0..500u16 {
            let a = coefficient_row(99, index, 1);
            assert_eq!(a, coefficient_row(99, index, 1));
            assert_ne!(a[0], 0);
        }
        // Prefix property: rows for different k share leading bytes.
        assert_eq!(coefficient_row(5, 9, 20)[..8], coefficient_row(5, 9, 8)[..]);
    }
}
