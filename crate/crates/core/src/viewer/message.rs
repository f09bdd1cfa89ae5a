//! Per-frame video message: both compressed images and the floor estimate.
//!
//! Layout, little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | frame id |
//! | 4 | 1 | keyframe flag (0 or 1) |
//! | 5 | 2+2 | color width, height |
//! | 9 | 2+2 | depth width, height |
//! | 13 | 16 | floor nx, ny, nz, d as f32 |
//! | 29 | 4 | color byte count |
//! | 33 | 4 | depth byte count |
//! | 37 | .. | color bytes, then depth bytes |

use super::ViewerError;
use crate::model::FloorPlane;
use nalgebra::Vector3;

pub const MESSAGE_HEADER_LEN: usize = 37;
const FLOOR_UNIT_TOLERANCE: f32 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct VideoMessage {
    pub frame_id: u32,
    pub keyframe: bool,
    pub color_width: u16,
    pub color_height: u16,
    pub depth_width: u16,
    pub depth_height: u16,
    /// `[nx, ny, nz, d]`.
    pub floor: [f32; 4],
    pub color: Vec<u8>,
    pub depth: Vec<u8>,
}

impl VideoMessage {
    pub fn floor_from(plane: &FloorPlane) -> [f32; 4] {
        [
            plane.normal.x as f32,
            plane.normal.y as f32,
            plane.normal.z as f32,
            plane.distance as f32,
        ]
    }

    pub fn floor_plane(&self) -> FloorPlane {
        let [x, y, z, d] = self.floor.map(f64::from);
        let normal = Vector3::new(x, y, z);
        FloorPlane {
            normal: normal / normal.norm(),
            distance: d,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MESSAGE_HEADER_LEN + self.color.len() + self.depth.len());
        out.extend_from_slice(&self.frame_id.to_le_bytes());
        out.push(self.keyframe as u8);
        for dim in [self.color_width, self.color_height, self.depth_width, self.depth_height] {
            out.extend_from_slice(&dim.to_le_bytes());
        }
        for f in self.floor {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out.extend_from_slice(&(self.color.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.depth.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.color);
        out.extend_from_slice(&self.depth);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, ViewerError> {
        let bad = |why: String| ViewerError::MalformedMessage(why);
        if bytes.len() < MESSAGE_HEADER_LEN {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let keyframe = match bytes[4] {
            0 => false,
            1 => true,
            other => return Err(bad(format!("keyframe flag {other}"))),
        };
        let floor = [
            f32::from_bits(u32_at(13)),
            f32::from_bits(u32_at(17)),
            f32::from_bits(u32_at(21)),
            f32::from_bits(u32_at(25)),
        ];
        if floor.iter().any(|f| !f.is_finite()) {
            return Err(bad("non-finite floor".into()));
        }
        let norm = (floor[0] * floor[0] + floor[1] * floor[1] + floor[2] * floor[2]).sqrt();
        if (norm - 1.0).abs() > FLOOR_UNIT_TOLERANCE {
            return Err(bad(format!("floor normal length {norm}")));
        }
        let color_len = u32_at(29) as usize;
        let depth_len = u32_at(33) as usize;
        let body = &bytes[MESSAGE_HEADER_LEN..];
        if body.len() as u64 != color_len as u64 + depth_len as u64 {
            return Err(bad(format!(
                "declared {color_len} + {depth_len} payload bytes, found {}",
                body.len()
            )));
        }
        Ok(VideoMessage {
            frame_id: u32_at(0),
            keyframe,
            color_width: u16_at(5),
            color_height: u16_at(7),
            depth_width: u16_at(9),
            depth_height: u16_at(11),
            floor,
            color: body[..color_len].to_vec(),
            depth: body[color_len..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> VideoMessage {
        VideoMessage {
            frame_id: 0x0102_0304,
            keyframe: true,
            color_width: 720,
            color_height: 360,
            depth_width: 320,
            depth_height: 180,
            floor: [0.0, 1.0, 0.0, -1.25],
            color: vec![0xAA, 0xBB],
            depth: vec![0x12, 0x1A, 0x01],
        }
    }

    #[test]
    fn field_offsets() {
        let b = sample().to_bytes();
        assert_eq!(b.len(), MESSAGE_HEADER_LEN + 5);
        assert_eq!(&b[0..4], &[4, 3, 2, 1]);
        assert_eq!(b[4], 1);
        assert_eq!(&b[5..13], &[0xD0, 0x02, 0x68, 0x01, 0x40, 0x01, 0xB4, 0x00]);
        assert_eq!(&b[17..21], &1.0f32.to_le_bytes());
        assert_eq!(&b[25..29], &(-1.25f32).to_le_bytes());
        assert_eq!(&b[29..37], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&b[37..], &[0xAA, 0xBB, 0x12, 0x1A, 0x01]);
    }

    #[test]
    fn rejects_malformed() {
        let good = sample().to_bytes();
        assert!(VideoMessage::parse(&good[..36]).is_err());
        assert!(VideoMessage::parse(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(VideoMessage::parse(&extra).is_err());
        let mut flag = good.clone();
        flag[4] = 2;
        assert!(VideoMessage::parse(&flag).is_err());
        let mut floor = good.clone();
        floor[17..21].copy_from_slice(&0.9f32.to_le_bytes());
        assert!(VideoMessage::parse(&floor).is_err());
        let mut huge = good;
        huge[29..33].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(VideoMessage::parse(&huge).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            frame_id: u32, keyframe: bool, dims: [u16; 4], yaw in -3.0f32..3.0, tilt in 0.0f32..1.0,
            d in -5.0f32..5.0, color in proptest::collection::vec(any::<u8>(), 0..64),
            depth in proptest::collection::vec(any::<u8>(), 0..64),
        ) {
            let n = [tilt.sin() * yaw.cos(), tilt.cos(), tilt.sin() * yaw.sin()];
            let m = VideoMessage {
                frame_id, keyframe,
                color_width: dims[0], color_height: dims[1], depth_width: dims[2], depth_height: dims[3],
                floor: [n[0], n[1], n[2], d], color, depth,
            };
            prop_assert_eq!(VideoMessage::parse(&m.to_bytes()).unwrap(), m);
        }
    }
}
