use super::message::VideoMessage;
use super::ViewerError;
use crate::codec::{decode_color, DepthCodecConfig, DepthDecoder};
use crate::model::{ColorImage, DepthImage, FloorPlane};

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub frame_id: u32,
    pub keyframe: bool,
    pub color: ColorImage,
    pub depth: DepthImage,
    pub floor: FloorPlane,
}

/// Turns completed video messages of one stream back into images.
///
/// A delta frame can only be decoded on top of the frame immediately before
/// it; after a gap the stream must resume with a keyframe.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    depth: Option<DepthDecoder>,
    last_decoded: Option<u32>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_decoded(&self) -> Option<u32> {
        self.last_decoded
    }

    /// True when the next frame can be a delta frame.
    pub fn can_continue_from(&self, previous_frame: u32) -> bool {
        self.last_decoded == Some(previous_frame)
    }

    pub fn decode(&mut self, message: &VideoMessage) -> Result<DecodedFrame, ViewerError> {
        let (dw, dh) = (message.depth_width as u32, message.depth_height as u32);
        if !message.keyframe && (message.frame_id == 0 || !self.can_continue_from(message.frame_id - 1)) {
            return Err(ViewerError::MissingReference { frame_id: message.frame_id });
        }
        let fresh = self.depth.as_ref().is_none_or(|d| {
            let c = d.config();
            (c.width, c.height) != (dw, dh)
        });
        if fresh {
            if !message.keyframe {
                return Err(ViewerError::MissingReference { frame_id: message.frame_id });
            }
            self.depth = Some(DepthDecoder::new(DepthCodecConfig::lossless(dw, dh))?);
        }
        let color = decode_color(&message.color, message.color_width as u32, message.color_height as u32)?;
        let depth = self.depth.as_mut().expect("set above").decode(&message.depth, message.keyframe)?;
        self.last_decoded = Some(message.frame_id);
        Ok(DecodedFrame {
            frame_id: message.frame_id,
            keyframe: message.keyframe,
            color,
            depth,
            floor: message.floor_plane(),
        })
    }
}
