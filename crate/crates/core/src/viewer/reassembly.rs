//! Per-session packet reassembly with a real-time drop policy.
//!
//! A frame older than the newest completed frame is dropped: its workspace is
//! discarded and any later packets for it are ignored. Workspaces that fall
//! more than [`FRAME_HORIZON`] frames behind the newest packet are dropped as
//! well.

use super::message::VideoMessage;
use super::ViewerError;
use crate::fec::{DecodeProgress, FecPacket, FountainDecoder, PacketType};
use std::collections::{BTreeMap, BTreeSet};

pub const FRAME_HORIZON: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum ReassemblyEvent {
    Frame(VideoMessage),
    Dropped(u32),
}

#[derive(Debug, Default)]
pub struct Reassembler {
    session_id: Option<u32>,
    pending: BTreeMap<u32, FountainDecoder>,
    /// Completed or dropped frames still inside the horizon.
    resolved: BTreeSet<u32>,
    newest_completed: Option<u32>,
    newest_seen: Option<u32>,
    completed: u64,
    dropped: u64,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn completed_count(&self) -> u64 {
        self.completed
    }

    pub fn dropped_count(&self) -> u64 {
        self.dropped
    }

    pub fn pending_frames(&self) -> usize {
        self.pending.len()
    }

    pub fn newest_completed(&self) -> Option<u32> {
        self.newest_completed
    }

    fn drop_frame(&mut self, frame_id: u32, events: &mut Vec<ReassemblyEvent>) {
        if self.pending.remove(&frame_id).is_some() {
            self.dropped += 1;
            events.push(ReassemblyEvent::Dropped(frame_id));
        }
        self.resolved.insert(frame_id);
    }

    fn enforce_horizon(&mut self, newest: u32, events: &mut Vec<ReassemblyEvent>) {
        let floor = newest.saturating_sub(FRAME_HORIZON);
        let stale: Vec<u32> = self.pending.range(..floor).map(|(&f, _)| f).collect();
        for f in stale {
            self.drop_frame(f, events);
        }
        self.resolved = self.resolved.split_off(&floor);
    }

    /// Feeds one packet; returns the events it caused, in frame order.
    pub fn push(&mut self, packet: &FecPacket) -> Result<Vec<ReassemblyEvent>, ViewerError> {
        let mut events = Vec::new();
        if packet.header.packet_type != PacketType::Video {
            return Ok(events);
        }
        let session = *self.session_id.get_or_insert(packet.header.session_id);
        if packet.header.session_id != session {
            return Err(ViewerError::ForeignSession { expected: session, got: packet.header.session_id });
        }
        let frame_id = packet.header.frame_id;
        if self.newest_seen.is_none_or(|n| frame_id > n) {
            self.newest_seen = Some(frame_id);
            self.enforce_horizon(frame_id, &mut events);
        }
        let too_old = self.newest_completed.is_some_and(|n| frame_id <= n)
            || self.newest_seen.is_some_and(|n| frame_id < n.saturating_sub(FRAME_HORIZON));
        if self.resolved.contains(&frame_id) || too_old {
            return Ok(events);
        }
        let decoder = match self.pending.entry(frame_id) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => e.insert(FountainDecoder::new(&packet.header)?),
        };
        let DecodeProgress::Done(bytes) = decoder.push(packet)? else {
            return Ok(events);
        };
        self.pending.remove(&frame_id);
        self.resolved.insert(frame_id);
        let older: Vec<u32> = self.pending.range(..frame_id).map(|(&f, _)| f).collect();
        for f in older {
            self.drop_frame(f, &mut events);
        }
        self.newest_completed = Some(frame_id);
        let message = VideoMessage::parse(&bytes)?;
        if message.frame_id != frame_id {
            return Err(ViewerError::MalformedMessage(format!(
                "message frame id {} inside packets for frame {frame_id}",
                message.frame_id
            )));
        }
        self.completed += 1;
        events.push(ReassemblyEvent::Frame(message));
        Ok(events)
    }

    /// Drops every incomplete frame, e.g. at the end of a session.
    pub fn flush(&mut self) -> Vec<ReassemblyEvent> {
        let mut events = Vec::new();
        let all: Vec<u32> = self.pending.keys().copied().collect();
        for f in all {
            self.drop_frame(f, &mut events);
        }
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::{fountain_encode, packetize, StreamKey};

    fn message(frame_id: u32) -> VideoMessage {
        VideoMessage {
            frame_id,
            keyframe: false,
            color_width: 4,
            color_height: 4,
            depth_width: 4,
            depth_height: 4,
            floor: [0.0, 1.0, 0.0, -1.0],
            color: vec![frame_id as u8; 300],
            depth: vec![7; 200],
        }
    }

    fn packets(frame_id: u32) -> Vec<FecPacket> {
        let src = packetize(&message(frame_id).to_bytes(), 64).unwrap();
        let key = StreamKey { packet_type: PacketType::Video, session_id: 9, frame_id, prng_seed: frame_id * 31 + 1 };
        fountain_encode(&src, 0.5, key).unwrap()
    }

    fn feed(r: &mut Reassembler, pkts: &[FecPacket]) -> Vec<ReassemblyEvent> {
        pkts.iter().flat_map(|p| r.push(p).unwrap()).collect()
    }

    #[test]
    fn in_order_frame_completes_once() {
        let mut r = Reassembler::new();
        let events = feed(&mut r, &packets(0));
        assert_eq!(events, vec![ReassemblyEvent::Frame(message(0))]);
        assert_eq!(r.pending_frames(), 0);
        assert_eq!(r.completed_count(), 1);
    }

    #[test]
    fn late_frame_is_dropped() {
        let mut r = Reassembler::new();
        let p4 = packets(4);
        let p5 = packets(5);
        assert!(feed(&mut r, &p4[..2]).is_empty());
        let events = feed(&mut r, &p5);
        assert_eq!(events, vec![ReassemblyEvent::Dropped(4), ReassemblyEvent::Frame(message(5))]);
        assert!(feed(&mut r, &p4[2..]).is_empty());
        assert_eq!((r.completed_count(), r.dropped_count()), (1, 1));
    }

    #[test]
    fn stale_frame_without_workspace_is_ignored() {
        let mut r = Reassembler::new();
        feed(&mut r, &packets(5));
        assert!(feed(&mut r, &packets(3)).is_empty());
        assert_eq!(r.pending_frames(), 0);
    }

    #[test]
    fn interleaved_frames_both_complete() {
        let mut r = Reassembler::new();
        let a = packets(1);
        let b = packets(2);
        let mut mixed = Vec::new();
        for i in 0..a.len().max(b.len()) {
            mixed.extend(a.get(i).cloned());
            mixed.extend(b.get(i).cloned());
        }
        let events = feed(&mut r, &mixed);
        assert_eq!(events, vec![ReassemblyEvent::Frame(message(1)), ReassemblyEvent::Frame(message(2))]);
    }

    #[test]
    fn horizon_evicts_abandoned_workspace() {
        let mut r = Reassembler::new();
        feed(&mut r, &packets(0)[..1]);
        assert_eq!(r.pending_frames(), 1);
        let events = feed(&mut r, &packets(FRAME_HORIZON + 1)[..1]);
        assert_eq!(events, vec![ReassemblyEvent::Dropped(0)]);
        assert_eq!(r.flush(), vec![ReassemblyEvent::Dropped(FRAME_HORIZON + 1)]);
    }

    #[test]
    fn malformed_payload_is_reported() {
        let src = packetize(&[1, 2, 3], 64).unwrap();
        let key = StreamKey { packet_type: PacketType::Video, session_id: 9, frame_id: 0, prng_seed: 1 };
        let pkts = fountain_encode(&src, 0.5, key).unwrap();
        let mut r = Reassembler::new();
        assert!(matches!(r.push(&pkts[0]), Err(ViewerError::MalformedMessage(_))));
    }

    #[test]
    fn audio_and_foreign_sessions() {
        let mut r = Reassembler::new();
        let audio = crate::fec::audio::pcm_packet(9, 0, &[1, 2, 3]).unwrap();
        assert!(r.push(&audio).unwrap().is_empty());
        feed(&mut r, &packets(0)[..1]);
        let mut other = packets(1)[0].clone();
        other.header.session_id = 10;
        assert!(matches!(r.push(&other), Err(ViewerError::ForeignSession { .. })));
    }
}
