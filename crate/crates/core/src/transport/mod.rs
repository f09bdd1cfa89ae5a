//! Unreliable datagram channels and room signaling.

pub mod protocol;
pub mod signaling;
pub mod sim;
pub mod udp;

use thiserror::Error;

pub use protocol::{handle_line, Reply, Request, SignalingClient, SignalingServer};
pub use signaling::{Member, Membership, Role, Room, RoomService, RoomSummary, ROOM_ID_LEN};
pub use sim::{ChannelConfig, ChannelStats, Delivery, SimChannel};
pub use udp::UdpChannel;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),
    #[error("simulator time {now} is before current time {clock}")]
    TimeWentBackwards { now: u64, clock: u64 },
    #[error("unknown room {0}")]
    UnknownRoom(String),
    #[error("unknown membership token")]
    UnknownToken,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("server error: {0}")]
    Remote(String),
    #[error("channel has no peer")]
    NotConnected,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for TransportError {
    fn eq(&self, other: &Self) -> bool {
        use TransportError::*;
        match (self, other) {
            (InvalidConfig(a), InvalidConfig(b)) => a == b,
            (TimeWentBackwards { now: a, clock: b }, TimeWentBackwards { now: c, clock: d }) => a == c && b == d,
            (UnknownRoom(a), UnknownRoom(b)) => a == b,
            (UnknownToken, UnknownToken) | (NotConnected, NotConnected) => true,
            (Protocol(a), Protocol(b)) | (Remote(a), Remote(b)) => a == b,
            (Io(a), Io(b)) => a.kind() == b.kind(),
            _ => false,
        }
    }
}

/// Unreliable, unordered datagram link. Datagrams are delivered whole or not
/// at all.
pub trait DatagramChannel {
    fn send(&mut self, datagram: &[u8], now_micros: u64) -> Result<(), TransportError>;
    fn poll(&mut self, now_micros: u64) -> Result<Vec<Vec<u8>>, TransportError>;
}
