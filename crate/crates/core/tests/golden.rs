//! Frozen wire-format and scene fixtures.
//!
//! `cargo test -p rgbdcast-core --test golden -- --ignored regenerate` rewrites
//! the files; every other test checks that today's code still produces them.

use rgbdcast_core::codec::{encode_color, DepthCodecConfig, DepthEncoder};
use rgbdcast_core::fec::{fountain_encode, packetize, FecPacket, PacketType, StreamKey};
use rgbdcast_core::model::{CameraIntrinsics, ColorImage, DepthImage, Pose};
use rgbdcast_core::scene::{Preset, Scene, SyntheticCapture, CAMERA_HEIGHT_M};
use rgbdcast_core::session::side_view_pose;
use rgbdcast_core::viewer::image_io::{decode_pgm16, encode_pgm16};
use rgbdcast_core::viewer::VideoMessage;
use nalgebra::Vector3;
use std::path::PathBuf;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn depth_keyframe() -> Vec<u8> {
    let mut enc = DepthEncoder::new(DepthCodecConfig::lossless(4, 1)).unwrap();
    enc.encode(&DepthImage::new(4, 1, vec![0, 0, 5, 0]).unwrap(), true).unwrap()
}

fn color_pixel() -> Vec<u8> {
    encode_color(&ColorImage::new(1, 1, vec![7, 0, 255]).unwrap())
}

/// First repair packet for a 3-block message.
fn fec_packet() -> Vec<u8> {
    let src = packetize(b"quads facing the viewer", 8).unwrap();
    let key = StreamKey { packet_type: PacketType::Video, session_id: 0x0A0B_0C0D, frame_id: 7, prng_seed: 0x00C0_FFEE };
    fountain_encode(&src, 0.5, key).unwrap()[3].to_bytes()
}

fn video_message() -> Vec<u8> {
    VideoMessage {
        frame_id: 42,
        keyframe: true,
        color_width: 1,
        color_height: 1,
        depth_width: 4,
        depth_height: 1,
        floor: [0.0, 0.8, 0.6, -1.5],
        color: color_pixel(),
        depth: depth_keyframe(),
    }
    .to_bytes()
}

/// Figure seen by the front camera, figure only, study depth geometry.
pub struct FigureFixture {
    pub intrinsics: CameraIntrinsics,
    pub source_pose: Pose,
    pub viewer_pose: Pose,
    pub depth: DepthImage,
    pub silhouette: DepthImage,
}

fn figure_scene() -> Scene {
    let full = SyntheticCapture::scene_at(0);
    Scene::new(full.primitives[full.bound.unwrap().first..].to_vec())
}

fn figure_fixture() -> FigureFixture {
    let intrinsics = Preset::Study.depth_intrinsics();
    let source_pose = Pose::from_parts(nalgebra::UnitQuaternion::identity(), Vector3::new(0.0, CAMERA_HEIGHT_M, 0.0));
    let viewer_pose = side_view_pose();
    let scene = figure_scene();
    let depth = scene.render_depth(&intrinsics, &source_pose);
    let mask = scene.render_mask(&intrinsics, &viewer_pose);
    let silhouette = DepthImage::new(
        intrinsics.width,
        intrinsics.height,
        mask.data.iter().map(|&b| b as u16).collect(),
    )
    .unwrap();
    FigureFixture { intrinsics, source_pose, viewer_pose, depth, silhouette }
}

fn pose_json(p: &Pose) -> serde_json::Value {
    let t = p.translation;
    serde_json::json!({ "wxyz": p.quaternion_wxyz(), "t": [t.x, t.y, t.z] })
}

fn figure_metadata(f: &FigureFixture) -> String {
    let k = f.intrinsics;
    let v = serde_json::json!({
        "intrinsics": { "fx": k.fx, "fy": k.fy, "cx": k.cx, "cy": k.cy, "width": k.width, "height": k.height },
        "source_pose": pose_json(&f.source_pose),
        "viewer_pose": pose_json(&f.viewer_pose),
    });
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

#[test]
#[ignore]
fn regenerate() {
    std::fs::create_dir_all(fixture("")).unwrap();
    std::fs::write(fixture("depth_keyframe_1x4.bin"), depth_keyframe()).unwrap();
    std::fs::write(fixture("color_1x1.bin"), color_pixel()).unwrap();
    std::fs::write(fixture("fec_packet.bin"), fec_packet()).unwrap();
    std::fs::write(fixture("video_message.bin"), video_message()).unwrap();
    let fig = figure_fixture();
    std::fs::write(fixture("figure_depth.pgm"), encode_pgm16(&fig.depth)).unwrap();
    std::fs::write(fixture("figure_silhouette.pgm"), encode_pgm16(&fig.silhouette)).unwrap();
    std::fs::write(fixture("figure.json"), figure_metadata(&fig)).unwrap();
}

fn read(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn codec_fixtures_are_current() {
    assert_eq!(read("depth_keyframe_1x4.bin"), [0x12, 0x1A, 0x01]);
    assert_eq!(read("depth_keyframe_1x4.bin"), depth_keyframe());
    assert_eq!(read("color_1x1.bin"), [0, 7, 0, 255]);
    assert_eq!(read("color_1x1.bin"), color_pixel());
}

#[test]
fn wire_fixtures_are_current() {
    assert_eq!(read("fec_packet.bin"), fec_packet());
    assert_eq!(read("video_message.bin"), video_message());
    let p = FecPacket::from_bytes(&read("fec_packet.bin")).unwrap();
    assert_eq!(p.to_bytes(), read("fec_packet.bin"));
}

#[test]
fn figure_fixture_is_current() {
    let fig = figure_fixture();
    assert_eq!(decode_pgm16(&read("figure_depth.pgm")).unwrap(), fig.depth);
    assert_eq!(decode_pgm16(&read("figure_silhouette.pgm")).unwrap(), fig.silhouette);
    assert_eq!(String::from_utf8(read("figure.json")).unwrap(), figure_metadata(&fig));
    assert!(fig.depth.valid_count() > 1000);
    assert!(fig.silhouette.valid_count() > 1000);
}
