//! Deterministic end-to-end run: synthetic capture, transmit pipeline,
//! simulated lossy channel, viewer pipeline and a line-delimited report.
//!
//! Time is simulated. Frame `i` is captured at `i · FRAME_INTERVAL_MICROS`,
//! its packets leave [`PACKET_SPACING_MICROS`] apart, and the viewer drains
//! the channel just before the next capture. A frame the viewer has not
//! decoded by then counts as reported lost, and the transmitter answers with
//! a keyframe.

use crate::codec::depth::is_scheduled_keyframe;
use crate::codec::{encode_color, DepthCodecConfig, DepthEncoder};
use crate::fec::{fountain_encode, packetize, FecPacket, PacketType, SplitMix64, StreamKey, DEFAULT_MTU_PAYLOAD};
use crate::geometry::{
    compose_calibration, extract_floor, floor_aligned_pose, format_calibration, register_depth_to_color,
    registered_intrinsics, remove_background, FloorSmoother, RansacParams,
};
use crate::model::{CameraIntrinsics, DepthImage, FloorPlane, Pose, RgbdFrame};
use crate::scene::{Preset, Scene, SceneConfig, SyntheticCapture, CAMERA_HEIGHT_M, FIGURE_BASE, FRAME_INTERVAL_MICROS};
use crate::transport::{ChannelConfig, ChannelStats, SimChannel};
use crate::viewer::image_io::write_ppm;
use crate::viewer::{
    build_quads, coverage_metric, look_at, orient_quads, rasterize, FrameDecoder, QuadCloud, Reassembler,
    ReassemblyEvent, VideoMessage, DEFAULT_ENLARGEMENT,
};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use thiserror::Error;

pub const PACKET_SPACING_MICROS: u64 = 10;
/// Time allowed after the last frame for stragglers to arrive.
const DRAIN_MICROS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub preset: Preset,
    pub cameras: u8,
    pub redundancy: f64,
    /// Loss, latency, jitter and reordering. Its `seed` is ignored: every
    /// random stream is derived from [`SessionConfig::seed`].
    pub channel: ChannelConfig,
    pub seed: u64,
    pub frame_count: u32,
    /// Not echoed in reports, so a report does not depend on where it was written.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub mtu_payload: usize,
    pub depth_threshold_mm: u16,
    /// Keep only depths in `[near, far]` millimeters before registration.
    pub background_range_mm: Option<(u16, u16)>,
    pub depth_noise_mm: f64,
    pub enlargement: f64,
    /// Render, measure coverage and write images every this many frames;
    /// 0 disables rendering.
    pub render_every: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            preset: Preset::Default,
            cameras: 1,
            redundancy: 0.5,
            channel: ChannelConfig::default(),
            seed: 0,
            frame_count: 300,
            output_dir: None,
            mtu_payload: DEFAULT_MTU_PAYLOAD,
            depth_threshold_mm: 0,
            background_range_mm: None,
            depth_noise_mm: 0.0,
            enlargement: DEFAULT_ENLARGEMENT,
            render_every: 30,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::Config(m));
        if !(1..=2).contains(&self.cameras) {
            return bad(format!("cameras must be 1 or 2, got {}", self.cameras));
        }
        if !self.redundancy.is_finite() || self.redundancy < 0.0 {
            return bad(format!("redundancy must be a non-negative number, got {}", self.redundancy));
        }
        if self.frame_count == 0 {
            return bad("frame count must be at least 1".into());
        }
        if self.enlargement.is_nan() || self.enlargement <= 0.0 {
            return bad("enlargement must be positive".into());
        }
        if let Some((near, far)) = self.background_range_mm {
            if near >= far {
                return bad(format!("background range {near}..{far} is empty"));
            }
        }
        self.channel.validate().map_err(|e| SessionError::Config(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("camera {camera}, frame {frame}: {message}")]
    Frame { camera: usize, frame: u32, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameStatus {
    Decoded,
    /// Reassembly gave up on the frame (late or beyond the horizon).
    Dropped,
    /// Too few packets arrived to ever start or finish reassembly.
    Lost,
    /// Reassembled, but its reference frame was missing.
    Undecodable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub oriented: f64,
    pub unoriented: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub camera: usize,
    pub frame: u32,
    pub keyframe: bool,
    pub floor_detected: bool,
    pub floor: [f32; 4],
    pub color_bytes: usize,
    pub depth_bytes: usize,
    pub message_bytes: usize,
    pub source_blocks: usize,
    pub packets_sent: usize,
    pub reconstruction_sha256: String,
    pub status: FrameStatus,
    pub decoded_sha256: Option<String>,
    pub bit_exact: Option<bool>,
    pub coverage: Option<Coverage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub frames: u64,
    pub decoded: u64,
    pub dropped: u64,
    pub lost: u64,
    pub undecodable: u64,
    pub keyframes: u64,
    pub hash_mismatches: u64,
    pub completion_ratio: f64,
    pub packets_sent: u64,
    pub bytes_sent: u64,
    pub channels: Vec<ChannelStats>,
    pub mean_coverage: Option<Coverage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub frames: Vec<FrameRecord>,
    pub summary: SessionSummary,
}

impl SessionReport {
    /// One JSON object per line: the config, each frame, then the summary.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: serde_json::Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        line(serde_json::json!({ "config": self.config }));
        for f in &self.frames {
            line(serde_json::json!({ "frame": f }));
        }
        line(serde_json::json!({ "summary": self.summary }));
        out
    }

    pub fn all_bit_exact(&self) -> bool {
        self.summary.hash_mismatches == 0
    }
}

pub fn depth_sha256(depth: &DepthImage) -> String {
    hex::encode(Sha256::digest(depth.to_le_bytes()))
}

/// Independent 64-bit stream for `(purpose, camera, frame)`.
fn derive_seed(master: u64, purpose: u64, camera: usize, frame: u32) -> u64 {
    let mut sm = SplitMix64::new(master ^ purpose.wrapping_mul(0xD1B5_4A32_D192_ED03));
    sm.next_u64();
    let mut sm = SplitMix64::new(sm.next_u64() ^ ((camera as u64) << 32 | frame as u64));
    sm.next_u64()
}

const PURPOSE_CHANNEL: u64 = 1;
const PURPOSE_RANSAC: u64 = 2;
const PURPOSE_FEC: u64 = 3;
const PURPOSE_NOISE: u64 = 4;

/// Per-camera transmit side: background removal, registration, floor,
/// depth and color coding, message assembly and fountain coding.
pub struct TransmitPipeline {
    camera: usize,
    seed: u64,
    redundancy: f64,
    mtu_payload: usize,
    background_range_mm: Option<(u16, u16)>,
    encoder: DepthEncoder,
    smoother: FloorSmoother,
    last_floor: FloorPlane,
}

/// Everything the transmitter produced for one frame.
#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub message: VideoMessage,
    pub message_bytes: usize,
    pub floor_detected: bool,
    pub source_blocks: usize,
    pub packets: Vec<FecPacket>,
    /// Hash of the depth the receiver must reconstruct.
    pub reconstruction_sha256: String,
}

impl TransmitPipeline {
    /// Session id on the wire is `camera + 1`.
    pub fn new(config: &SessionConfig, camera: usize) -> Result<Self, SessionError> {
        let (width, height) = config.preset.depth_size();
        let codec = DepthCodecConfig { width, height, change_threshold_mm: config.depth_threshold_mm };
        Ok(TransmitPipeline {
            camera,
            seed: config.seed,
            redundancy: config.redundancy,
            mtu_payload: config.mtu_payload,
            background_range_mm: config.background_range_mm,
            encoder: DepthEncoder::new(codec).map_err(|e| SessionError::Config(e.to_string()))?,
            smoother: FloorSmoother::default(),
            last_floor: FloorPlane::ground(),
        })
    }

    pub fn session_id(&self) -> u32 {
        self.camera as u32 + 1
    }

    /// Codes frame `index`. It becomes a keyframe when scheduled or when
    /// `force_keyframe` reports that the viewer lost its reference.
    pub fn encode(&mut self, frame: &RgbdFrame, index: u32, force_keyframe: bool) -> Result<EncodedFrame, SessionError> {
        let fail = |message: String| SessionError::Frame { camera: self.camera, frame: index, message };
        let mut raw = frame.clone();
        if let Some((near, far)) = self.background_range_mm {
            raw.depth = remove_background(&frame.depth, near, far).map_err(|e| fail(e.to_string()))?;
        }
        let registered = register_depth_to_color(&raw);
        let params = RansacParams { seed: derive_seed(self.seed, PURPOSE_RANSAC, self.camera, index), ..RansacParams::default() };
        let detected = extract_floor(&registered, &registered_intrinsics(frame), &params).ok();
        if let Some(plane) = detected {
            self.last_floor = self.smoother.push(plane);
        }
        let keyframe = is_scheduled_keyframe(index) || force_keyframe;
        let depth = self.encoder.encode(&registered, keyframe).map_err(|e| fail(e.to_string()))?;
        let reconstruction_sha256 = depth_sha256(&self.encoder.reconstruction());
        let message = VideoMessage {
            frame_id: index,
            keyframe,
            color_width: frame.color.width as u16,
            color_height: frame.color.height as u16,
            depth_width: registered.width as u16,
            depth_height: registered.height as u16,
            floor: VideoMessage::floor_from(&self.last_floor),
            color: encode_color(&frame.color),
            depth,
        };
        let bytes = message.to_bytes();
        let blocks = packetize(&bytes, self.mtu_payload).map_err(|e| fail(e.to_string()))?;
        let key = StreamKey {
            packet_type: PacketType::Video,
            session_id: self.session_id(),
            frame_id: index,
            prng_seed: derive_seed(self.seed, PURPOSE_FEC, self.camera, index) as u32,
        };
        let packets = fountain_encode(&blocks, self.redundancy, key).map_err(|e| fail(e.to_string()))?;
        Ok(EncodedFrame {
            message,
            message_bytes: bytes.len(),
            floor_detected: detected.is_some(),
            source_blocks: blocks.k(),
            packets,
            reconstruction_sha256,
        })
    }
}

struct Viewer {
    reassembler: Reassembler,
    decoder: FrameDecoder,
    placement: Option<Pose>,
    latest_cloud: Option<(u32, QuadCloud)>,
}

/// Side view used for coverage: level, at camera height, 2.5 m to the
/// figure's left, looking at it.
pub fn side_view_pose() -> Pose {
    let target = FIGURE_BASE + Vector3::new(0.0, CAMERA_HEIGHT_M, 0.0);
    look_at(&(target + Vector3::new(2.5, 0.0, 0.0)), &target)
}

fn figure_only(scene: &Scene) -> Scene {
    let first = scene.bound.map_or(0, |b| b.first);
    Scene::new(scene.primitives[first..].to_vec())
}

pub fn run_session(config: &SessionConfig) -> Result<SessionReport, SessionError> {
    config.validate()?;
    let scene_config = SceneConfig {
        preset: config.preset,
        cameras: config.cameras,
        depth_noise_mm: config.depth_noise_mm,
        seed: derive_seed(config.seed, PURPOSE_NOISE, 0, 0),
    };
    let capture = SyntheticCapture::new(scene_config).map_err(SessionError::Config)?;
    let cameras = capture.rigs.len();
    let calibration = capture.calibration();
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
        if cameras > 1 {
            std::fs::write(dir.join("calibration.txt"), format_calibration(&calibration))?;
        }
    }
    let render_intrinsics: CameraIntrinsics = config.preset.depth_intrinsics();

    let mut transmitters = Vec::new();
    let mut viewers = Vec::new();
    let mut channels = Vec::new();
    for c in 0..cameras {
        transmitters.push(TransmitPipeline::new(config, c)?);
        viewers.push(Viewer { reassembler: Reassembler::new(), decoder: FrameDecoder::new(), placement: None, latest_cloud: None });
        let channel = ChannelConfig { seed: derive_seed(config.seed, PURPOSE_CHANNEL, c, 0), ..config.channel };
        channels.push(SimChannel::new(channel).map_err(|e| SessionError::Config(e.to_string()))?);
    }

    let mut force_keyframe = vec![false; cameras];
    let mut records: Vec<Vec<FrameRecord>> = vec![Vec::new(); cameras];
    let mut bytes_sent = 0u64;
    let mut packets_sent = 0u64;
    let mut coverages = Vec::new();

    for i in 0..config.frame_count {
        let now = i as u64 * FRAME_INTERVAL_MICROS;
        for c in 0..cameras {
            let fail = |message: String| SessionError::Frame { camera: c, frame: i, message };
            let encoded = transmitters[c].encode(&capture.frame(c, i), i, force_keyframe[c])?;
            for (j, p) in encoded.packets.iter().enumerate() {
                let datagram = p.to_bytes();
                bytes_sent += datagram.len() as u64;
                channels[c]
                    .send_datagram(datagram, now + j as u64 * PACKET_SPACING_MICROS)
                    .map_err(|e| fail(e.to_string()))?;
            }
            packets_sent += encoded.packets.len() as u64;
            records[c].push(FrameRecord {
                camera: c,
                frame: i,
                keyframe: encoded.message.keyframe,
                floor_detected: encoded.floor_detected,
                floor: encoded.message.floor,
                color_bytes: encoded.message.color.len(),
                depth_bytes: encoded.message.depth.len(),
                message_bytes: encoded.message_bytes,
                source_blocks: encoded.source_blocks,
                packets_sent: encoded.packets.len(),
                reconstruction_sha256: encoded.reconstruction_sha256,
                status: FrameStatus::Lost,
                decoded_sha256: None,
                bit_exact: None,
                coverage: None,
            });
        }

        let last = i + 1 == config.frame_count;
        let poll_at = if last { now + DRAIN_MICROS } else { now + FRAME_INTERVAL_MICROS - 1 };
        for c in 0..cameras {
            let deliveries = channels[c].poll_deliveries(poll_at).map_err(|e| SessionError::Frame {
                camera: c,
                frame: i,
                message: e.to_string(),
            })?;
            let mut events = Vec::new();
            for d in deliveries {
                let packet = FecPacket::from_bytes(&d.datagram).map_err(|e| SessionError::Frame {
                    camera: c,
                    frame: i,
                    message: e.to_string(),
                })?;
                events.extend(viewers[c].reassembler.push(&packet).map_err(|e| SessionError::Frame {
                    camera: c,
                    frame: packet.header.frame_id,
                    message: e.to_string(),
                })?);
            }
            if last {
                events.extend(viewers[c].reassembler.flush());
            }
            for event in events {
                apply_event(c, event, &mut viewers[c], &mut records[c], &calibration, config)?;
            }
            force_keyframe[c] = !viewers[c].decoder.can_continue_from(i);
        }

        if config.render_every > 0 && i % config.render_every == 0 {
            let clouds: Vec<QuadCloud> = viewers
                .iter()
                .filter_map(|v| v.latest_cloud.as_ref().filter(|(f, _)| *f == i).map(|(_, cl)| cl.clone()))
                .collect();
            if viewers[0].latest_cloud.as_ref().is_some_and(|(f, _)| *f == i) {
                let pose = side_view_pose();
                let eye = pose.translation;
                let oriented: Vec<QuadCloud> = clouds.iter().map(|cl| orient_quads(cl, &eye)).collect();
                let (color_on, depth_on) = rasterize(&oriented, &render_intrinsics, &pose);
                let (_, depth_off) = rasterize(&clouds, &render_intrinsics, &pose);
                let silhouette = figure_only(&SyntheticCapture::scene_at(i)).render_mask(&render_intrinsics, &pose);
                let coverage = Coverage {
                    oriented: coverage_metric(&depth_on, &silhouette).expect("same camera"),
                    unoriented: coverage_metric(&depth_off, &silhouette).expect("same camera"),
                };
                records[0][i as usize].coverage = Some(coverage);
                coverages.push(coverage);
                if let Some(dir) = &config.output_dir {
                    write_ppm(&color_on, &dir.join(format!("side_{i:05}.ppm"))).map_err(|e| SessionError::Frame {
                        camera: 0,
                        frame: i,
                        message: e.to_string(),
                    })?;
                }
            }
        }
    }

    let frames: Vec<FrameRecord> = records.into_iter().flatten().collect();
    let count = |s: FrameStatus| frames.iter().filter(|f| f.status == s).count() as u64;
    let decoded = count(FrameStatus::Decoded);
    let mean = |f: fn(&Coverage) -> f64| coverages.iter().map(f).sum::<f64>() / coverages.len() as f64;
    let summary = SessionSummary {
        frames: frames.len() as u64,
        decoded,
        dropped: count(FrameStatus::Dropped),
        lost: count(FrameStatus::Lost),
        undecodable: count(FrameStatus::Undecodable),
        keyframes: frames.iter().filter(|f| f.keyframe).count() as u64,
        hash_mismatches: frames.iter().filter(|f| f.bit_exact == Some(false)).count() as u64,
        completion_ratio: decoded as f64 / frames.len() as f64,
        packets_sent,
        bytes_sent,
        channels: channels.iter().map(|c| c.stats()).collect(),
        mean_coverage: (!coverages.is_empty()).then(|| Coverage { oriented: mean(|c| c.oriented), unoriented: mean(|c| c.unoriented) }),
    };
    let report = SessionReport { config: config.clone(), frames, summary };
    if let Some(dir) = &config.output_dir {
        std::fs::write(dir.join("report.jsonl"), report.to_jsonl())?;
    }
    Ok(report)
}

fn apply_event(
    camera: usize,
    event: ReassemblyEvent,
    viewer: &mut Viewer,
    records: &mut [FrameRecord],
    calibration: &[crate::geometry::CalibrationEntry],
    config: &SessionConfig,
) -> Result<(), SessionError> {
    match event {
        ReassemblyEvent::Dropped(f) => records[f as usize].status = FrameStatus::Dropped,
        ReassemblyEvent::Frame(message) => {
            let f = message.frame_id;
            let record = &mut records[f as usize];
            let decoded = match viewer.decoder.decode(&message) {
                Ok(d) => d,
                Err(crate::viewer::ViewerError::MissingReference { .. }) => {
                    record.status = FrameStatus::Undecodable;
                    return Ok(());
                }
                Err(e) => return Err(SessionError::Frame { camera, frame: f, message: e.to_string() }),
            };
            let hash = depth_sha256(&decoded.depth);
            record.bit_exact = Some(hash == record.reconstruction_sha256);
            record.decoded_sha256 = Some(hash);
            record.status = FrameStatus::Decoded;
            if config.render_every > 0 && f % config.render_every == 0 {
                let first = floor_aligned_pose(&decoded.floor, &Pose::identity());
                let placement = if camera == 0 {
                    first
                } else {
                    let world = compose_calibration(calibration, &first).expect("generated calibration is valid");
                    world[camera].1
                };
                viewer.placement = Some(placement);
                let intr = config.preset.color_intrinsics().scaled_to(decoded.depth.width, decoded.depth.height);
                let cloud = build_quads(&decoded.depth, &decoded.color, &intr, &placement, config.enlargement);
                viewer.latest_cloud = Some((f, cloud));
            }
        }
    }
    Ok(())
}
