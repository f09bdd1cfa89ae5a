//! Line protocol for the room service.
//!
//! Requests are single lines:
//!
//! ```text
//! CREATE
//! JOIN <room-id> <transmitter|viewer>
//! LIST
//! LEAVE <token>
//! ```
//!
//! Each request gets one JSON line back, `{"ok":true,...}` on success or
//! `{"ok":false,"error":"..."}` otherwise.

use super::signaling::{Membership, Role, RoomService, RoomSummary};
use super::TransportError;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread::JoinHandle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub room_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub membership: Option<Membership>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rooms: Option<Vec<RoomSummary>>,
}

impl Reply {
    fn ok() -> Self {
        Reply { ok: true, error: None, room_id: None, membership: None, rooms: None }
    }

    fn error(message: String) -> Self {
        Reply { ok: false, error: Some(message), ..Reply::ok() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Create,
    Join { room_id: String, role: Role },
    List,
    Leave { token: String },
}

impl Request {
    pub fn parse(line: &str) -> Result<Request, TransportError> {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["CREATE"] => Ok(Request::Create),
            ["JOIN", id, role] => Ok(Request::Join { room_id: id.to_string(), role: role.parse()? }),
            ["LIST"] => Ok(Request::List),
            ["LEAVE", token] => Ok(Request::Leave { token: token.to_string() }),
            _ => Err(TransportError::Protocol(format!("unrecognized request {:?}", line.trim()))),
        }
    }

    pub fn to_line(&self) -> String {
        match self {
            Request::Create => "CREATE".into(),
            Request::Join { room_id, role } => {
                let role = match role {
                    Role::Transmitter => "transmitter",
                    Role::Viewer => "viewer",
                };
                format!("JOIN {room_id} {role}")
            }
            Request::List => "LIST".into(),
            Request::Leave { token } => format!("LEAVE {token}"),
        }
    }
}

pub fn execute(service: &RoomService, request: Request) -> Reply {
    match request {
        Request::Create => Reply { room_id: Some(service.create_room()), ..Reply::ok() },
        Request::Join { room_id, role } => match service.join_room(&room_id, role) {
            Ok(m) => Reply { membership: Some(m), ..Reply::ok() },
            Err(e) => Reply::error(e.to_string()),
        },
        Request::List => Reply { rooms: Some(service.list_rooms()), ..Reply::ok() },
        Request::Leave { token } => match service.leave(&token) {
            Ok(()) => Reply::ok(),
            Err(e) => Reply::error(e.to_string()),
        },
    }
}

/// Handles one request line and returns the reply line without a newline.
pub fn handle_line(service: &RoomService, line: &str) -> String {
    let reply = match Request::parse(line) {
        Ok(req) => execute(service, req),
        Err(e) => Reply::error(e.to_string()),
    };
    serde_json::to_string(&reply).expect("reply serializes")
}

fn serve_connection(service: &RoomService, stream: TcpStream) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut reply = handle_line(service, &line);
        reply.push('\n');
        writer.write_all(reply.as_bytes())?;
    }
    Ok(())
}

/// TCP front end; one thread per connection.
#[derive(Debug)]
pub struct SignalingServer {
    addr: SocketAddr,
    _accept: JoinHandle<()>,
}

impl SignalingServer {
    pub fn spawn(addr: impl ToSocketAddrs, service: Arc<RoomService>) -> Result<Self, TransportError> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let accept = std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let service = service.clone();
                std::thread::spawn(move || {
                    let _ = serve_connection(&service, stream);
                });
            }
        });
        Ok(SignalingServer { addr, _accept: accept })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }
}

/// Serves connections on the calling thread until the listener fails.
pub fn serve_blocking(addr: impl ToSocketAddrs, service: Arc<RoomService>) -> Result<(), TransportError> {
    let listener = TcpListener::bind(addr)?;
    for stream in listener.incoming() {
        let stream = stream?;
        let service = service.clone();
        std::thread::spawn(move || {
            let _ = serve_connection(&service, stream);
        });
    }
    Ok(())
}

#[derive(Debug)]
pub struct SignalingClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl SignalingClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr)?;
        Ok(SignalingClient { writer: stream.try_clone()?, reader: BufReader::new(stream) })
    }

    pub fn request(&mut self, request: &Request) -> Result<Reply, TransportError> {
        self.writer.write_all(format!("{}\n", request.to_line()).as_bytes())?;
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(TransportError::Protocol("server closed the connection".into()));
        }
        let reply: Reply =
            serde_json::from_str(line.trim_end()).map_err(|e| TransportError::Protocol(e.to_string()))?;
        match (&reply.ok, &reply.error) {
            (false, Some(msg)) => Err(TransportError::Remote(msg.clone())),
            (false, None) => Err(TransportError::Remote("unspecified error".into())),
            _ => Ok(reply),
        }
    }

    pub fn create(&mut self) -> Result<String, TransportError> {
        self.request(&Request::Create)?
            .room_id
            .ok_or_else(|| TransportError::Protocol("CREATE reply lacks room_id".into()))
    }

    pub fn join(&mut self, room_id: &str, role: Role) -> Result<Membership, TransportError> {
        self.request(&Request::Join { room_id: room_id.into(), role })?
            .membership
            .ok_or_else(|| TransportError::Protocol("JOIN reply lacks membership".into()))
    }

    pub fn list(&mut self) -> Result<Vec<RoomSummary>, TransportError> {
        self.request(&Request::List)?
            .rooms
            .ok_or_else(|| TransportError::Protocol("LIST reply lacks rooms".into()))
    }

    pub fn leave(&mut self, token: &str) -> Result<(), TransportError> {
        self.request(&Request::Leave { token: token.into() }).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_transcript() {
        let svc = RoomService::new(11);
        let created: Reply = serde_json::from_str(&handle_line(&svc, "CREATE")).unwrap();
        let id = created.room_id.unwrap();
        let joined: Reply = serde_json::from_str(&handle_line(&svc, &format!("JOIN {id} transmitter"))).unwrap();
        let m = joined.membership.unwrap();
        assert_eq!(m.room_id, id);
        assert_eq!(
            handle_line(&svc, "LIST"),
            format!(r#"{{"ok":true,"rooms":[{{"room_id":"{id}","transmitters":1,"viewers":0,"created":1}}]}}"#)
        );
        assert_eq!(handle_line(&svc, &format!("LEAVE {}", m.token)), r#"{"ok":true}"#);
        assert_eq!(handle_line(&svc, "LIST"), r#"{"ok":true,"rooms":[]}"#);
    }

    #[test]
    fn errors_are_replies() {
        let svc = RoomService::new(0);
        for bad in ["", "JOIN", "JOIN ABCDEF pilot", "DELETE x", "create"] {
            let r: Reply = serde_json::from_str(&handle_line(&svc, bad)).unwrap();
            assert!(!r.ok, "{bad}");
            assert!(r.error.is_some());
        }
        let r: Reply = serde_json::from_str(&handle_line(&svc, "JOIN NOROOM viewer")).unwrap();
        assert!(r.error.unwrap().contains("NOROOM"));
    }

    #[test]
    fn request_lines_round_trip() {
        for req in [
            Request::Create,
            Request::List,
            Request::Join { room_id: "A1B2C3".into(), role: Role::Viewer },
            Request::Leave { token: "00ff".into() },
        ] {
            assert_eq!(Request::parse(&req.to_line()).unwrap(), req);
        }
    }

    #[test]
    fn tcp_round_trip() {
        let server = SignalingServer::spawn("127.0.0.1:0", Arc::new(RoomService::new(5))).unwrap();
        let mut alice = SignalingClient::connect(server.local_addr()).unwrap();
        let mut bob = SignalingClient::connect(server.local_addr()).unwrap();
        let id = alice.create().unwrap();
        let a = alice.join(&id, Role::Transmitter).unwrap();
        let b = bob.join(&id, Role::Transmitter).unwrap();
        assert!(!a.member.additional && b.member.additional);
        assert_eq!(bob.list().unwrap()[0].transmitters, 2);
        assert!(matches!(bob.join("??????", Role::Viewer), Err(TransportError::Remote(_))));
        alice.leave(&a.token).unwrap();
        bob.leave(&b.token).unwrap();
        assert!(alice.list().unwrap().is_empty());
    }
}
