//! Commands that never touch the network.

use anyhow::{bail, ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgbdcast_core::codec::{DepthCodecConfig, DepthDecoder, DepthEncoder};
use rgbdcast_core::fec::{fountain_encode, packetize, DecodeProgress, FountainDecoder, PacketType, StreamKey};
use rgbdcast_core::geometry::{
    compose_calibration, extract_floor, floor_aligned_pose, format_calibration, register_depth_to_color,
    registered_intrinsics, RansacParams,
};
use rgbdcast_core::model::{Pose, RgbdFrame};
use rgbdcast_core::scene::{Preset, Scene, SceneConfig, SyntheticCapture};
use rgbdcast_core::session::{run_session, side_view_pose, SessionConfig};
use rgbdcast_core::viewer::image_io::{read_pgm16, read_ppm, write_pgm16, write_ppm};
use rgbdcast_core::viewer::{build_quads, coverage_metric, export_ply, orient_quads, rasterize, QuadCloud};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

fn capture(seed: u64, preset: Preset, cameras: u8, noise_mm: f64) -> Result<SyntheticCapture> {
    SyntheticCapture::new(SceneConfig { preset, cameras, depth_noise_mm: noise_mm, seed }).map_err(anyhow::Error::msg)
}

fn frame_stem(camera: usize, frame: u32) -> String {
    format!("cam{camera}_{frame:05}")
}

pub fn gen_scene(seed: u64, preset: Preset, cameras: u8, frames: u32, noise_mm: f64, out: &Path) -> Result<()> {
    ensure!(frames >= 1, "frames must be at least 1");
    let capture = capture(seed, preset, cameras, noise_mm)?;
    std::fs::create_dir_all(out)?;
    for i in 0..frames {
        for c in 0..capture.rigs.len() {
            let frame = capture.frame(c, i);
            let stem = frame_stem(c, i);
            write_ppm(&frame.color, &out.join(format!("{stem}.ppm")))?;
            write_pgm16(&frame.depth, &out.join(format!("{stem}.pgm")))?;
        }
    }
    if capture.rigs.len() > 1 {
        std::fs::write(out.join("calibration.txt"), format_calibration(&capture.calibration()))?;
    }
    let rigs: Vec<_> = capture
        .rigs
        .iter()
        .map(|r| {
            serde_json::json!({
                "depth_intrinsics": r.depth_intrinsics,
                "color_intrinsics": r.color_intrinsics,
                "depth_pose_wxyz": r.pose.quaternion_wxyz(),
                "depth_pose_t": [r.pose.translation.x, r.pose.translation.y, r.pose.translation.z],
            })
        })
        .collect();
    let meta = serde_json::json!({ "seed": seed, "preset": preset, "frames": frames, "noise_mm": noise_mm, "rigs": rigs });
    std::fs::write(out.join("scene.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!("wrote {} frame(s) for {} camera(s) to {}", frames, capture.rigs.len(), out.display());
    Ok(())
}

pub fn simulate(config: &SessionConfig) -> Result<ExitCode> {
    let report = run_session(config)?;
    println!("{}", serde_json::to_string(&report.summary)?);
    Ok(if report.all_bit_exact() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub struct RenderOptions<'a> {
    pub seed: u64,
    pub preset: Preset,
    pub frame: u32,
    pub cameras: u8,
    pub enlargement: f64,
    pub input_dir: Option<&'a Path>,
    pub output_dir: &'a Path,
}

fn load_frame(capture: &SyntheticCapture, camera: usize, index: u32, input: Option<&Path>) -> Result<RgbdFrame> {
    let mut frame = capture.frame(camera, index);
    if let Some(dir) = input {
        let stem = frame_stem(camera, index);
        let color = read_ppm(&dir.join(format!("{stem}.ppm")))?;
        let depth = read_pgm16(&dir.join(format!("{stem}.pgm")))?;
        if (color.width, color.height) != (frame.color.width, frame.color.height)
            || (depth.width, depth.height) != (frame.depth.width, frame.depth.height)
        {
            bail!("{stem}: image sizes do not match the {:?} preset", capture.config.preset);
        }
        frame.color = color;
        frame.depth = depth;
    }
    Ok(frame)
}

pub fn render(opts: RenderOptions<'_>) -> Result<()> {
    let capture = capture(opts.seed, opts.preset, opts.cameras, 0.0)?;
    std::fs::create_dir_all(opts.output_dir)?;
    let mut clouds = Vec::new();
    let mut first_placement = None;
    for c in 0..capture.rigs.len() {
        let frame = load_frame(&capture, c, opts.frame, opts.input_dir)?;
        let registered = register_depth_to_color(&frame);
        let intr = registered_intrinsics(&frame);
        let placement = match first_placement {
            None => {
                let params = RansacParams { seed: opts.seed, ..RansacParams::default() };
                let floor = extract_floor(&registered, &intr, &params)?;
                let p = floor_aligned_pose(&floor, &Pose::identity());
                first_placement = Some(p);
                p
            }
            Some(first) => compose_calibration(&capture.calibration(), &first)?[c].1,
        };
        let cloud = build_quads(&registered, &frame.color, &intr, &placement, opts.enlargement);
        export_ply(&cloud, &opts.output_dir.join(format!("{}.ply", frame_stem(c, opts.frame))))?;
        clouds.push(cloud);
    }

    let view = side_view_pose();
    let intr = opts.preset.depth_intrinsics();
    let oriented: Vec<QuadCloud> = clouds.iter().map(|cl| orient_quads(cl, &view.translation)).collect();
    let (color_on, depth_on) = rasterize(&oriented, &intr, &view);
    let (color_off, depth_off) = rasterize(&clouds, &intr, &view);
    write_ppm(&color_on, &opts.output_dir.join("side_oriented.ppm"))?;
    write_ppm(&color_off, &opts.output_dir.join("side_unoriented.ppm"))?;

    let scene = SyntheticCapture::scene_at(opts.frame);
    let first = scene.bound.map_or(0, |b| b.first);
    let silhouette = Scene::new(scene.primitives[first..].to_vec()).render_mask(&intr, &view);
    let coverage = serde_json::json!({
        "frame": opts.frame,
        "quads": clouds.iter().map(|c| c.quads.len()).sum::<usize>(),
        "coverage_oriented": coverage_metric(&depth_on, &silhouette)?,
        "coverage_unoriented": coverage_metric(&depth_off, &silhouette)?,
    });
    println!("{coverage}");
    Ok(())
}

pub fn bench_codec(seed: u64, preset: Preset, frames: u32, threshold: u16, noise_mm: f64) -> Result<()> {
    ensure!(frames >= 1, "frames must be at least 1");
    let capture = capture(seed, preset, 1, noise_mm)?;
    let sequence: Vec<_> = (0..frames).map(|i| capture.frame(0, i).depth).collect();
    let (w, h) = preset.depth_size();
    let config = DepthCodecConfig { width: w, height: h, change_threshold_mm: threshold };
    let mut encoder = DepthEncoder::new(config)?;
    let mut decoder = DepthDecoder::new(config)?;
    let (mut key_bytes, mut keys, mut delta_bytes, mut deltas) = (0usize, 0usize, 0usize, 0usize);
    let (mut encode_s, mut decode_s) = (0.0, 0.0);
    let mut mismatches = 0;
    for (i, depth) in sequence.iter().enumerate() {
        let keyframe = rgbdcast_core::codec::depth::is_scheduled_keyframe(i as u32);
        let t = Instant::now();
        let bytes = encoder.encode(depth, keyframe)?;
        encode_s += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let out = decoder.decode(&bytes, keyframe)?;
        decode_s += t.elapsed().as_secs_f64();
        if out.data != encoder.reference() {
            mismatches += 1;
        }
        if keyframe {
            key_bytes += bytes.len();
            keys += 1;
        } else {
            delta_bytes += bytes.len();
            deltas += 1;
        }
    }
    let raw = (w * h * 2) as f64;
    let mean = |total: usize, n: usize| if n == 0 { None } else { Some(total as f64 / n as f64) };
    let summary = serde_json::json!({
        "frames": frames,
        "raw_bytes_per_frame": raw,
        "mean_keyframe_bytes": mean(key_bytes, keys),
        "mean_delta_bytes": mean(delta_bytes, deltas),
        "compression_ratio": raw * frames as f64 / (key_bytes + delta_bytes) as f64,
        "encode_ms_per_frame": 1e3 * encode_s / frames as f64,
        "decode_ms_per_frame": 1e3 * decode_s / frames as f64,
        "reconstruction_mismatches": mismatches,
    });
    println!("{summary}");
    ensure!(mismatches == 0, "decoder diverged from encoder reconstruction");
    Ok(())
}

pub fn bench_fec(seed: u64, k: usize, redundancy: f64, loss: f64, trials: u32, block: usize) -> Result<()> {
    ensure!(k >= 1 && block >= 1 && trials >= 1, "k, block and trials must be at least 1");
    ensure!((0.0..=1.0).contains(&loss), "loss must be in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut message = vec![0u8; k * block];
    let (mut successes, mut decode_s, mut packets) = (0u32, 0.0, 0usize);
    for trial in 0..trials {
        rng.fill(&mut message[..]);
        let src = packetize(&message, block)?;
        let key = StreamKey { packet_type: PacketType::Video, session_id: 1, frame_id: trial, prng_seed: rng.random() };
        let encoded = fountain_encode(&src, redundancy, key)?;
        packets = encoded.len();
        let t = Instant::now();
        let mut decoder = FountainDecoder::new(&encoded[0].header)?;
        let mut done = false;
        for p in encoded.iter().filter(|_| rng.random::<f64>() >= loss) {
            if let DecodeProgress::Done(out) = decoder.push(p)? {
                ensure!(out == message, "trial {trial}: decoded bytes differ");
                done = true;
                break;
            }
        }
        decode_s += t.elapsed().as_secs_f64();
        successes += done as u32;
    }
    let summary = serde_json::json!({
        "k": k,
        "packets": packets,
        "loss": loss,
        "trials": trials,
        "success_rate": successes as f64 / trials as f64,
        "decode_ms_per_trial": 1e3 * decode_s / trials as f64,
    });
    println!("{summary}");
    Ok(())
}
