mod config;
mod net;
mod offline;

use anyhow::Result;
use clap::{CommandFactory, Parser, Subcommand};
use config::SessionArgs;
use rgbdcast_core::scene::Preset;
use rgbdcast_core::transport::Role;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

/// RGBD telepresence streaming: synthetic capture, coding, lossy transport
/// and quad-splat viewing.
#[derive(Parser)]
#[command(name = "rgbdcast", version)]
struct Cli {
    /// Master seed; every random stream of the run derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic scene to PPM color and 16-bit PGM depth files.
    GenScene {
        #[arg(long, default_value = "default")]
        preset: Preset,
        #[arg(long, default_value_t = 1)]
        cameras: u8,
        #[arg(long, default_value_t = 30)]
        frames: u32,
        #[arg(long, default_value_t = 0.0)]
        noise_mm: f64,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Run capture, coding, simulated channel and viewer end to end.
    /// Exits with status 1 when any decoded frame differs from the encoder's.
    Simulate {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Stream one synthetic camera over UDP.
    Transmit {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, default_value_t = 0)]
        camera: usize,
        /// Local address; loss reports from the viewer arrive here.
        #[arg(long, default_value = "0.0.0.0:0")]
        bind: String,
        #[arg(long)]
        peer: String,
        #[arg(long)]
        realtime: bool,
        #[arg(long, requires = "room")]
        signaling: Option<String>,
        #[arg(long)]
        room: Option<String>,
    },
    /// Receive one stream over UDP and write per-frame hashes plus the last
    /// frame as PLY and PPM.
    Receive {
        #[arg(long)]
        bind: String,
        #[arg(long, default_value = "default")]
        preset: Preset,
        #[arg(long, default_value_t = 300)]
        frames: u32,
        #[arg(long, default_value_t = 2000)]
        idle_timeout_ms: u64,
        /// Transmitter address for loss reports.
        #[arg(long)]
        feedback: Option<String>,
        #[arg(long, default_value_t = rgbdcast_core::viewer::DEFAULT_ENLARGEMENT)]
        enlargement: f64,
        #[arg(long, requires = "room")]
        signaling: Option<String>,
        #[arg(long)]
        room: Option<String>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Build quads for one frame and render them from the side.
    Render {
        #[arg(long, default_value = "default")]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        frame: u32,
        #[arg(long, default_value_t = 1)]
        cameras: u8,
        #[arg(long, default_value_t = rgbdcast_core::viewer::DEFAULT_ENLARGEMENT)]
        enlargement: f64,
        /// Read `cam{C}_{FRAME}` images written by gen-scene instead of rendering them.
        #[arg(long)]
        input_dir: Option<PathBuf>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Depth codec size and speed on the synthetic sequence.
    BenchCodec {
        #[arg(long, default_value = "default")]
        preset: Preset,
        #[arg(long, default_value_t = 64)]
        frames: u32,
        #[arg(long, default_value_t = 0)]
        depth_threshold_mm: u16,
        #[arg(long, default_value_t = 0.0)]
        noise_mm: f64,
    },
    /// Fountain code decode rate under iid loss.
    BenchFec {
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        redundancy: f64,
        #[arg(long, default_value_t = 0.2)]
        loss: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[arg(long, default_value_t = 1164)]
        block: usize,
    },
    /// Room signaling server and client.
    Rooms {
        #[command(subcommand)]
        action: RoomsAction,
    },
}

#[derive(Subcommand)]
enum RoomsAction {
    Serve {
        #[arg(long, default_value = "127.0.0.1:7400")]
        bind: String,
    },
    Create {
        #[arg(long, default_value = "127.0.0.1:7400")]
        server: String,
    },
    List {
        #[arg(long, default_value = "127.0.0.1:7400")]
        server: String,
    },
    Join {
        #[arg(long, default_value = "127.0.0.1:7400")]
        server: String,
        room: String,
        #[arg(long, default_value = "viewer")]
        role: Role,
    },
    Leave {
        #[arg(long, default_value = "127.0.0.1:7400")]
        server: String,
        token: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.seed.is_none() {
        Cli::command()
            .error(clap::error::ErrorKind::MissingRequiredArgument, "--seed <SEED> is required for every run")
            .exit();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed.expect("checked in main");
    match cli.command {
        Command::GenScene { preset, cameras, frames, noise_mm, output_dir } => {
            offline::gen_scene(seed, preset, cameras, frames, noise_mm, &output_dir)?
        }
        Command::Simulate { session, output_dir } => {
            let config = session.to_config(seed, Some(output_dir))?;
            return offline::simulate(&config);
        }
        Command::Transmit { session, camera, bind, peer, realtime, signaling, room } => net::transmit(net::TransmitOptions {
            config: session.to_config(seed, None)?,
            camera,
            bind: &bind,
            peer: &peer,
            realtime,
            signaling: signaling.as_deref(),
            room: room.as_deref(),
        })?,
        Command::Receive { bind, preset, frames, idle_timeout_ms, feedback, enlargement, signaling, room, output_dir } => {
            net::receive(net::ReceiveOptions {
                bind: &bind,
                preset,
                frames,
                idle_timeout: Duration::from_millis(idle_timeout_ms),
                feedback: feedback.as_deref(),
                output_dir: &output_dir,
                enlargement,
                signaling: signaling.as_deref(),
                room: room.as_deref(),
            })?
        }
        Command::Render { preset, frame, cameras, enlargement, input_dir, output_dir } => offline::render(offline::RenderOptions {
            seed,
            preset,
            frame,
            cameras,
            enlargement,
            input_dir: input_dir.as_deref(),
            output_dir: &output_dir,
        })?,
        Command::BenchCodec { preset, frames, depth_threshold_mm, noise_mm } => {
            offline::bench_codec(seed, preset, frames, depth_threshold_mm, noise_mm)?
        }
        Command::BenchFec { k, redundancy, loss, trials, block } => offline::bench_fec(seed, k, redundancy, loss, trials, block)?,
        Command::Rooms { action } => rooms(seed, action)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn rooms(seed: u64, action: RoomsAction) -> Result<()> {
    use rgbdcast_core::transport::{protocol::serve_blocking, RoomService, SignalingClient};
    use std::sync::Arc;
    match action {
        RoomsAction::Serve { bind } => {
            eprintln!("signaling on {bind}");
            serve_blocking(bind.as_str(), Arc::new(RoomService::new(seed)))?;
        }
        RoomsAction::Create { server } => println!("{}", SignalingClient::connect(server.as_str())?.create()?),
        RoomsAction::List { server } => {
            for room in SignalingClient::connect(server.as_str())?.list()? {
                println!("{}", serde_json::to_string(&room)?);
            }
        }
        RoomsAction::Join { server, room, role } => {
            println!("{}", serde_json::to_string(&SignalingClient::connect(server.as_str())?.join(&room, role)?)?)
        }
        RoomsAction::Leave { server, token } => SignalingClient::connect(server.as_str())?.leave(&token)?,
    }
    Ok(())
}
