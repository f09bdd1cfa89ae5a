//! Room service: participants find each other by a short room id before
//! media flows over datagram channels.

use super::TransportError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Mutex;

pub const ROOM_ID_LEN: usize = 6;
const ROOM_ID_ALPHABET: &[u8; 36] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Transmitter,
    Viewer,
}

impl std::str::FromStr for Role {
    type Err = TransportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transmitter" => Ok(Role::Transmitter),
            "viewer" => Ok(Role::Viewer),
            _ => Err(TransportError::Protocol(format!("unknown role {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub member_id: u32,
    pub role: Role,
    /// Transmitters after the first need calibration before their frames
    /// are placed.
    pub additional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub room_id: String,
    pub transmitter_ids: Vec<u32>,
    pub viewer_ids: Vec<u32>,
    /// Logical creation time: the service's operation counter.
    pub created: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomSummary {
    pub room_id: String,
    pub transmitters: usize,
    pub viewers: usize,
    pub created: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub room_id: String,
    pub token: String,
    pub member: Member,
}

#[derive(Debug)]
struct State {
    rng: ChaCha8Rng,
    clock: u64,
    next_member: u32,
    rooms: BTreeMap<String, Room>,
    tokens: BTreeMap<String, (String, u32)>,
}

impl State {
    fn fresh_room_id(&mut self) -> String {
        loop {
            let id: String = (0..ROOM_ID_LEN)
                .map(|_| ROOM_ID_ALPHABET[self.rng.random_range(0..ROOM_ID_ALPHABET.len())] as char)
                .collect();
            if !self.rooms.contains_key(&id) {
                return id;
            }
        }
    }

    fn fresh_token(&mut self) -> String {
        loop {
            let token = format!("{:016x}", self.rng.random::<u64>());
            if !self.tokens.contains_key(&token) {
                return token;
            }
        }
    }
}

/// Thread-safe room registry. Ids and tokens come from a seeded generator so
/// a fixed seed and call sequence always produce the same transcript.
#[derive(Debug)]
pub struct RoomService {
    state: Mutex<State>,
}

impl RoomService {
    pub fn new(seed: u64) -> Self {
        RoomService {
            state: Mutex::new(State {
                rng: ChaCha8Rng::seed_from_u64(seed),
                clock: 0,
                next_member: 1,
                rooms: BTreeMap::new(),
                tokens: BTreeMap::new(),
            }),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        // State is never left half-updated, so a poisoned lock is still usable.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn create_room(&self) -> String {
        let mut s = self.lock();
        s.clock += 1;
        let room_id = s.fresh_room_id();
        let room = Room {
            room_id: room_id.clone(),
            transmitter_ids: Vec::new(),
            viewer_ids: Vec::new(),
            created: s.clock,
        };
        s.rooms.insert(room_id.clone(), room);
        room_id
    }

    pub fn join_room(&self, room_id: &str, role: Role) -> Result<Membership, TransportError> {
        let mut s = self.lock();
        if !s.rooms.contains_key(room_id) {
            return Err(TransportError::UnknownRoom(room_id.to_string()));
        }
        s.clock += 1;
        let member_id = s.next_member;
        s.next_member += 1;
        let token = s.fresh_token();
        let room = s.rooms.get_mut(room_id).expect("checked above");
        let additional = match role {
            Role::Transmitter => {
                room.transmitter_ids.push(member_id);
                room.transmitter_ids.len() > 1
            }
            Role::Viewer => {
                room.viewer_ids.push(member_id);
                false
            }
        };
        s.tokens.insert(token.clone(), (room_id.to_string(), member_id));
        Ok(Membership {
            room_id: room_id.to_string(),
            token,
            member: Member { member_id, role, additional },
        })
    }

    /// Removes a member; the room disappears with its last member.
    pub fn leave(&self, token: &str) -> Result<(), TransportError> {
        let mut s = self.lock();
        let (room_id, member_id) = s.tokens.remove(token).ok_or(TransportError::UnknownToken)?;
        s.clock += 1;
        let room = s.rooms.get_mut(&room_id).expect("token refers to a live room");
        room.transmitter_ids.retain(|&m| m != member_id);
        room.viewer_ids.retain(|&m| m != member_id);
        if room.transmitter_ids.is_empty() && room.viewer_ids.is_empty() {
            s.rooms.remove(&room_id);
        }
        Ok(())
    }

    /// Live rooms ordered by creation.
    pub fn list_rooms(&self) -> Vec<RoomSummary> {
        let s = self.lock();
        let mut out: Vec<RoomSummary> = s
            .rooms
            .values()
            .map(|r| RoomSummary {
                room_id: r.room_id.clone(),
                transmitters: r.transmitter_ids.len(),
                viewers: r.viewer_ids.len(),
                created: r.created,
            })
            .collect();
        out.sort_by_key(|r| r.created);
        out
    }

    pub fn room(&self, room_id: &str) -> Option<Room> {
        self.lock().rooms.get(room_id).cloned()
    }
}
