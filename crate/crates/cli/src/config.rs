//! Session flags and the TOML overlay applied on top of them.

use anyhow::{Context, Result};
use clap::Args;
use rgbdcast_core::scene::Preset;
use rgbdcast_core::session::SessionConfig;
use rgbdcast_core::transport::ChannelConfig;
use serde_json::Value;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    #[arg(long, default_value = "default")]
    pub preset: Preset,
    #[arg(long, default_value_t = 1)]
    pub cameras: u8,
    #[arg(long, default_value_t = 0.5)]
    pub redundancy: f64,
    /// Independent per-datagram loss probability.
    #[arg(long, default_value_t = 0.0)]
    pub loss: f64,
    #[arg(long, default_value_t = 20_000)]
    pub latency_us: u64,
    #[arg(long, default_value_t = 2_000)]
    pub jitter_us: u64,
    /// Deliver datagrams in send order.
    #[arg(long)]
    pub in_order: bool,
    #[arg(long, default_value_t = 300)]
    pub frames: u32,
    #[arg(long, default_value_t = rgbdcast_core::fec::DEFAULT_MTU_PAYLOAD)]
    pub mtu: usize,
    #[arg(long, default_value_t = 0)]
    pub depth_threshold_mm: u16,
    /// Keep depths in NEAR..FAR millimeters, e.g. `500..3500`.
    #[arg(long, value_parser = parse_range)]
    pub background_range: Option<(u16, u16)>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_mm: f64,
    #[arg(long, default_value_t = rgbdcast_core::viewer::DEFAULT_ENLARGEMENT)]
    pub enlargement: f64,
    /// Write a side-view image and measure coverage every N frames; 0 disables.
    #[arg(long, default_value_t = 30)]
    pub render_every: u32,
    /// TOML file whose keys replace the flag values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(u16, u16), String> {
    let (a, b) = s.split_once("..").ok_or("expected NEAR..FAR")?;
    let near = a.trim().parse().map_err(|e| format!("near: {e}"))?;
    let far = b.trim().parse().map_err(|e| format!("far: {e}"))?;
    Ok((near, far))
}

impl SessionArgs {
    pub fn to_config(&self, seed: u64, output_dir: Option<PathBuf>) -> Result<SessionConfig> {
        let base = SessionConfig {
            preset: self.preset,
            cameras: self.cameras,
            redundancy: self.redundancy,
            channel: ChannelConfig {
                loss_probability: self.loss,
                mean_latency_micros: self.latency_us,
                jitter_micros: self.jitter_us,
                reordering_allowed: !self.in_order,
                seed: 0,
            },
            seed,
            frame_count: self.frames,
            output_dir,
            mtu_payload: self.mtu,
            depth_threshold_mm: self.depth_threshold_mm,
            background_range_mm: self.background_range,
            depth_noise_mm: self.noise_mm,
            enlargement: self.enlargement,
            render_every: self.render_every,
        };
        let config = match &self.config {
            Some(path) => overlay(&base, path)?,
            None => base,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Replaces every field of `base` that the TOML file sets. Tables merge
/// key by key, so `[channel] loss_probability = 0.1` keeps the other
/// channel fields.
pub fn overlay(base: &SessionConfig, path: &Path) -> Result<SessionConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut merged = serde_json::to_value(base)?;
    merge(&mut merged, serde_json::to_value(file)?);
    let mut config: SessionConfig =
        serde_json::from_value(merged).with_context(|| format!("applying {}", path.display()))?;
    if config.output_dir.is_none() {
        config.output_dir = base.output_dir.clone();
    }
    Ok(config)
}

fn merge(into: &mut Value, from: Value) {
    match (into, from) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        args: SessionArgs,
    }

    fn parse(extra: &[&str]) -> SessionArgs {
        Wrap::parse_from([&["x"], extra].concat()).args
    }

    #[test]
    fn flags_map_onto_config() {
        let c = parse(&["--preset", "study", "--loss", "0.25", "--in-order", "--background-range", "400..3000"])
            .to_config(9, None)
            .unwrap();
        assert_eq!(c.preset, Preset::Study);
        assert_eq!(c.channel.loss_probability, 0.25);
        assert!(!c.channel.reordering_allowed);
        assert_eq!(c.background_range_mm, Some((400, 3000)));
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn file_overrides_flags_field_by_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "frame_count = 12\n[channel]\nloss_probability = 0.3\n").unwrap();
        let mut args = parse(&["--frames", "99", "--loss", "0.1", "--jitter-us", "7"]);
        args.config = Some(path);
        let c = args.to_config(u64::MAX, None).unwrap();
        assert_eq!(c.frame_count, 12);
        assert_eq!(c.channel.loss_probability, 0.3);
        assert_eq!(c.channel.jitter_micros, 7);
        assert_eq!(c.seed, u64::MAX);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "frames = 12\n").unwrap();
        let mut args = parse(&[]);
        args.config = Some(path);
        assert!(args.to_config(1, None).is_err());
    }
}
