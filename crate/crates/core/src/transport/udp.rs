use super::{DatagramChannel, TransportError};
use std::io::ErrorKind;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};

const MAX_DATAGRAM: usize = 65_535;

/// Plain UDP binding of the datagram channel for loopback or LAN runs.
/// Time arguments are ignored; the network supplies its own.
#[derive(Debug)]
pub struct UdpChannel {
    socket: UdpSocket,
    peer: Option<SocketAddr>,
    buffer: Vec<u8>,
}

impl UdpChannel {
    pub fn bind(local: impl ToSocketAddrs) -> Result<Self, TransportError> {
        let socket = UdpSocket::bind(local)?;
        socket.set_nonblocking(true)?;
        Ok(UdpChannel {
            socket,
            peer: None,
            buffer: vec![0; MAX_DATAGRAM],
        })
    }

    pub fn connect(&mut self, peer: impl ToSocketAddrs) -> Result<(), TransportError> {
        let addr = peer
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| TransportError::InvalidConfig("peer address did not resolve".into()))?;
        self.peer = Some(addr);
        Ok(())
    }

    pub fn local_addr(&self) -> Result<SocketAddr, TransportError> {
        Ok(self.socket.local_addr()?)
    }
}

impl DatagramChannel for UdpChannel {
    fn send(&mut self, datagram: &[u8], _now_micros: u64) -> Result<(), TransportError> {
        let peer = self.peer.ok_or(TransportError::NotConnected)?;
        match self.socket.send_to(datagram, peer) {
            Ok(_) => Ok(()),
            // A full socket buffer is loss, which the channel contract allows.
            Err(e) if e.kind() == ErrorKind::WouldBlock => Ok(()),
            Err(e) => Err(e.into()),
        }
    }

    fn poll(&mut self, _now_micros: u64) -> Result<Vec<Vec<u8>>, TransportError> {
        let mut out = Vec::new();
        loop {
            match self.socket.recv_from(&mut self.buffer) {
                Ok((n, _)) => out.push(self.buffer[..n].to_vec()),
                Err(e) if e.kind() == ErrorKind::WouldBlock => return Ok(out),
                Err(e) => return Err(e.into()),
            }
        }
    }
}
