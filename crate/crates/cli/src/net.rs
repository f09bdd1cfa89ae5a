//! Transmit and receive over real UDP sockets.
//!
//! The transmitter renders frames on one thread and codes and sends them on
//! another. The receiver reads the socket on one thread and reassembles and
//! decodes on another. The receiver may report a lost reference back to the
//! transmitter with an 8-byte datagram: `LOSS` followed by the frame id,
//! little-endian. The next frame is then sent as a keyframe.

use anyhow::{bail, Context, Result};
use rgbdcast_core::fec::FecPacket;
use rgbdcast_core::geometry::floor_aligned_pose;
use rgbdcast_core::model::Pose;
use rgbdcast_core::scene::{Preset, SceneConfig, SyntheticCapture, FRAME_INTERVAL_MICROS};
use rgbdcast_core::session::{depth_sha256, SessionConfig, TransmitPipeline};
use rgbdcast_core::transport::{DatagramChannel, Role, SignalingClient, UdpChannel};
use rgbdcast_core::viewer::image_io::write_ppm;
use rgbdcast_core::viewer::{build_quads, export_ply, FrameDecoder, Reassembler, ReassemblyEvent, ViewerError};
use serde::Serialize;
use std::io::Write as _;
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

const LOSS_TAG: &[u8; 4] = b"LOSS";

fn loss_report(frame_id: u32) -> [u8; 8] {
    let mut out = [0u8; 8];
    out[..4].copy_from_slice(LOSS_TAG);
    out[4..].copy_from_slice(&frame_id.to_le_bytes());
    out
}

fn parse_loss_report(datagram: &[u8]) -> Option<u32> {
    (datagram.len() == 8 && &datagram[..4] == LOSS_TAG).then(|| u32::from_le_bytes(datagram[4..8].try_into().unwrap()))
}

/// Joins `room` for the duration of the closure when a signaling server is given.
fn with_membership<T>(signaling: Option<&str>, room: Option<&str>, role: Role, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let (Some(server), Some(room)) = (signaling, room) else {
        return f();
    };
    let mut client = SignalingClient::connect(server).with_context(|| format!("connecting to {server}"))?;
    let membership = client.join(room, role)?;
    eprintln!("joined room {} as member {}", membership.room_id, membership.member.member_id);
    let out = f();
    client.leave(&membership.token)?;
    out
}

pub struct TransmitOptions<'a> {
    pub config: SessionConfig,
    pub camera: usize,
    pub bind: &'a str,
    pub peer: &'a str,
    /// Sleep so frames leave at the capture rate.
    pub realtime: bool,
    pub signaling: Option<&'a str>,
    pub room: Option<&'a str>,
}

pub fn transmit(opts: TransmitOptions<'_>) -> Result<()> {
    with_membership(opts.signaling, opts.room, Role::Transmitter, || transmit_inner(&opts))
}

fn transmit_inner(opts: &TransmitOptions<'_>) -> Result<()> {
    let config = &opts.config;
    let capture = SyntheticCapture::new(SceneConfig {
        preset: config.preset,
        cameras: config.cameras,
        depth_noise_mm: config.depth_noise_mm,
        seed: config.seed,
    })
    .map_err(anyhow::Error::msg)?;
    if opts.camera >= capture.rigs.len() {
        bail!("camera {} does not exist with {} camera(s)", opts.camera, capture.rigs.len());
    }
    let mut pipeline = TransmitPipeline::new(config, opts.camera)?;
    let mut socket = UdpChannel::bind(opts.bind)?;
    socket.connect(opts.peer)?;
    eprintln!("sending from {} to {}", socket.local_addr()?, opts.peer);

    let (tx, rx) = mpsc::sync_channel(4);
    let frames = config.frame_count;
    let camera = opts.camera;
    let producer = thread::spawn(move || {
        for i in 0..frames {
            if tx.send(capture.frame(camera, i)).is_err() {
                break;
            }
        }
    });

    let start = Instant::now();
    let mut force_keyframe = false;
    let (mut packets, mut bytes) = (0u64, 0u64);
    for (i, frame) in rx.iter().enumerate() {
        let i = i as u32;
        for datagram in socket.poll(0)? {
            if let Some(f) = parse_loss_report(&datagram) {
                eprintln!("viewer lost frame {f}");
                force_keyframe = true;
            }
        }
        if opts.realtime {
            let due = start + Duration::from_micros(i as u64 * FRAME_INTERVAL_MICROS);
            thread::sleep(due.saturating_duration_since(Instant::now()));
        }
        let encoded = pipeline.encode(&frame, i, force_keyframe)?;
        force_keyframe = false;
        for p in &encoded.packets {
            let datagram = p.to_bytes();
            bytes += datagram.len() as u64;
            socket.send(&datagram, 0)?;
        }
        packets += encoded.packets.len() as u64;
    }
    producer.join().expect("capture thread panicked");
    println!("{}", serde_json::json!({ "frames": frames, "packets_sent": packets, "bytes_sent": bytes }));
    Ok(())
}

pub struct ReceiveOptions<'a> {
    pub bind: &'a str,
    pub preset: Preset,
    /// Stop after this many frames have been decoded or given up on.
    pub frames: u32,
    /// Stop after this long without any datagram.
    pub idle_timeout: Duration,
    pub feedback: Option<&'a str>,
    pub output_dir: &'a Path,
    pub enlargement: f64,
    pub signaling: Option<&'a str>,
    pub room: Option<&'a str>,
}

#[derive(Serialize)]
struct ReceivedFrame {
    frame: u32,
    keyframe: Option<bool>,
    status: &'static str,
    depth_sha256: Option<String>,
}

pub fn receive(opts: ReceiveOptions<'_>) -> Result<()> {
    with_membership(opts.signaling, opts.room, Role::Viewer, || receive_inner(&opts))
}

fn receive_inner(opts: &ReceiveOptions<'_>) -> Result<()> {
    std::fs::create_dir_all(opts.output_dir)?;
    let mut socket = UdpChannel::bind(opts.bind)?;
    eprintln!("listening on {}", socket.local_addr()?);
    let mut feedback = match opts.feedback {
        Some(addr) => {
            let mut ch = UdpChannel::bind("0.0.0.0:0")?;
            ch.connect(addr)?;
            Some(ch)
        }
        None => None,
    };

    let (tx, rx) = mpsc::channel::<Vec<u8>>();
    let idle = opts.idle_timeout;
    let reader = thread::spawn(move || -> Result<()> {
        let mut last = Instant::now();
        while last.elapsed() < idle {
            let batch = socket.poll(0)?;
            if batch.is_empty() {
                thread::sleep(Duration::from_millis(1));
                continue;
            }
            last = Instant::now();
            for d in batch {
                if tx.send(d).is_err() {
                    return Ok(());
                }
            }
        }
        Ok(())
    });

    let mut reassembler = Reassembler::new();
    let mut decoder = FrameDecoder::new();
    let mut report = std::io::BufWriter::new(std::fs::File::create(opts.output_dir.join("received.jsonl"))?);
    let mut settled = 0u32;
    let mut decoded_count = 0u32;
    let mut last_frame = None;
    let mut write = |r: ReceivedFrame| -> Result<()> { Ok(writeln!(report, "{}", serde_json::to_string(&r)?)?) };
    'outer: for datagram in rx.iter() {
        let packet = match FecPacket::from_bytes(&datagram) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("ignoring datagram: {e}");
                continue;
            }
        };
        for event in reassembler.push(&packet)? {
            settled += 1;
            match event {
                ReassemblyEvent::Dropped(f) => {
                    write(ReceivedFrame { frame: f, keyframe: None, status: "dropped", depth_sha256: None })?;
                }
                ReassemblyEvent::Frame(message) => match decoder.decode(&message) {
                    Ok(frame) => {
                        decoded_count += 1;
                        write(ReceivedFrame {
                            frame: frame.frame_id,
                            keyframe: Some(frame.keyframe),
                            status: "decoded",
                            depth_sha256: Some(depth_sha256(&frame.depth)),
                        })?;
                        last_frame = Some(frame);
                    }
                    Err(ViewerError::MissingReference { frame_id }) => {
                        write(ReceivedFrame { frame: frame_id, keyframe: Some(false), status: "undecodable", depth_sha256: None })?;
                        if let Some(ch) = feedback.as_mut() {
                            ch.send(&loss_report(frame_id), 0)?;
                        }
                    }
                    Err(e) => return Err(e.into()),
                },
            }
            if settled >= opts.frames {
                break 'outer;
            }
        }
    }
    drop(rx);
    if let Some(frame) = &last_frame {
        let intr = opts.preset.color_intrinsics().scaled_to(frame.depth.width, frame.depth.height);
        let placement = floor_aligned_pose(&frame.floor, &Pose::identity());
        let cloud = build_quads(&frame.depth, &frame.color, &intr, &placement, opts.enlargement);
        export_ply(&cloud, &opts.output_dir.join("last_frame.ply"))?;
        write_ppm(&frame.color, &opts.output_dir.join("last_frame.ppm"))?;
    }
    reader.join().expect("socket thread panicked")?;
    println!("{}", serde_json::json!({ "settled": settled, "decoded": decoded_count }));
    Ok(())
}
