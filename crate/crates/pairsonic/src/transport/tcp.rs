//! TCP realization of the in-band channel with u32-BE length-prefixed
//! frames. The coordinator listens and broadcasts by iterated unicast;
//! participants hold a single connection (peer handle 0).

use std::collections::HashMap;
use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream};

use super::{InBandChannel, TransportError};
use crate::protocol::PeerHandle;

/// Frames larger than this are treated as a protocol violation.
const MAX_FRAME: usize = 1 << 20;

pub fn tcp_listen(host: &str, port: u16) -> Result<TcpCoordinatorChannel, TransportError> {
    let listener = TcpListener::bind((host, port))
        .map_err(|e| TransportError::Io(format!("bind {host}:{port}: {e}")))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| TransportError::Io(e.to_string()))?;
    Ok(TcpCoordinatorChannel {
        listener,
        peers: HashMap::new(),
        new_peers: Vec::new(),
        next_handle: 1,
    })
}

pub fn tcp_connect(host: &str, port: u16) -> Result<TcpParticipantChannel, TransportError> {
    let stream = TcpStream::connect((host, port))
        .map_err(|e| TransportError::ConnectFailed(format!("{host}:{port}: {e}")))?;
    stream
        .set_nonblocking(true)
        .map_err(|e| TransportError::Io(e.to_string()))?;
    stream.set_nodelay(true).ok();
    Ok(TcpParticipantChannel {
        peer: FramedPeer::new(stream),
        announced: false,
    })
}

/// Local port the coordinator is actually bound to (useful with port 0).
impl TcpCoordinatorChannel {
    pub fn local_port(&self) -> u16 {
        self.listener.local_addr().map(|a| a.port()).unwrap_or(0)
    }
}

struct FramedPeer {
    stream: TcpStream,
    buf: Vec<u8>,
    closed: bool,
}

impl FramedPeer {
    fn new(stream: TcpStream) -> Self {
        FramedPeer {
            stream,
            buf: Vec::new(),
            closed: false,
        }
    }

    fn pump(&mut self) -> Result<(), TransportError> {
        let mut chunk = [0u8; 4096];
        loop {
            match self.stream.read(&mut chunk) {
                Ok(0) => {
                    self.closed = true;
                    return Ok(());
                }
                Ok(n) => self.buf.extend_from_slice(&chunk[..n]),
                Err(e) if e.kind() == ErrorKind::WouldBlock => return Ok(()),
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.closed = true;
                    return Err(TransportError::Io(e.to_string()));
                }
            }
        }
    }

    /// Pops one complete frame (including its length prefix).
    fn pop_frame(&mut self) -> Result<Option<Vec<u8>>, TransportError> {
        if self.buf.len() < 4 {
            return Ok(None);
        }
        let len = u32::from_be_bytes([self.buf[0], self.buf[1], self.buf[2], self.buf[3]]) as usize;
        if len > MAX_FRAME {
            return Err(TransportError::Io("oversized frame".into()));
        }
        if self.buf.len() < 4 + len {
            return Ok(None);
        }
        let frame: Vec<u8> = self.buf.drain(..4 + len).collect();
        Ok(Some(frame))
    }

    fn write_all(&mut self, bytes: &[u8]) -> Result<(), TransportError> {
        let mut written = 0;
        while written < bytes.len() {
            match self.stream.write(&bytes[written..]) {
                Ok(n) => written += n,
                Err(e) if e.kind() == ErrorKind::WouldBlock => {
                    std::thread::sleep(std::time::Duration::from_millis(1));
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(TransportError::Io(e.to_string())),
            }
        }
        Ok(())
    }
}

pub struct TcpCoordinatorChannel {
    listener: TcpListener,
    peers: HashMap<PeerHandle, FramedPeer>,
    new_peers: Vec<PeerHandle>,
    next_handle: PeerHandle,
}

impl TcpCoordinatorChannel {
    fn accept_pending(&mut self) {
        loop {
            match self.listener.accept() {
                Ok((stream, _)) => {
                    stream.set_nonblocking(true).ok();
                    stream.set_nodelay(true).ok();
                    let handle = self.next_handle;
                    self.next_handle += 1;
                    self.peers.insert(handle, FramedPeer::new(stream));
                    self.new_peers.push(handle);
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => return,
                Err(_) => return,
            }
        }
    }
}

impl InBandChannel for TcpCoordinatorChannel {
    fn send(&mut self, peer: PeerHandle, frame: &[u8]) -> Result<(), TransportError> {
        let p = self
            .peers
            .get_mut(&peer)
            .ok_or(TransportError::UnknownPeer(peer))?;
        p.write_all(frame)
    }

    fn broadcast(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        let handles: Vec<PeerHandle> = self.peers.keys().copied().collect();
        for handle in handles {
            // a dead peer surfaces later via the round timer
            let _ = self.send(handle, frame);
        }
        Ok(())
    }

    fn receive(&mut self) -> Result<Option<(PeerHandle, Vec<u8>)>, TransportError> {
        self.accept_pending();
        let mut handles: Vec<PeerHandle> = self.peers.keys().copied().collect();
        handles.sort_unstable();
        for handle in handles {
            let peer = self.peers.get_mut(&handle).unwrap();
            peer.pump().ok();
            if let Some(frame) = peer.pop_frame()? {
                return Ok(Some((handle, frame)));
            }
        }
        Ok(None)
    }

    fn poll_connected(&mut self) -> Vec<PeerHandle> {
        self.accept_pending();
        std::mem::take(&mut self.new_peers)
    }
}

pub struct TcpParticipantChannel {
    peer: FramedPeer,
    announced: bool,
}

/// The participant addresses the coordinator as peer handle 0.
pub const COORDINATOR_HANDLE: PeerHandle = 0;

impl InBandChannel for TcpParticipantChannel {
    fn send(&mut self, peer: PeerHandle, frame: &[u8]) -> Result<(), TransportError> {
        if peer != COORDINATOR_HANDLE {
            return Err(TransportError::UnknownPeer(peer));
        }
        self.peer.write_all(frame)
    }

    fn broadcast(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        self.peer.write_all(frame)
    }

    fn receive(&mut self) -> Result<Option<(PeerHandle, Vec<u8>)>, TransportError> {
        self.peer.pump().ok();
        Ok(self.peer.pop_frame()?.map(|f| (COORDINATOR_HANDLE, f)))
    }

    fn poll_connected(&mut self) -> Vec<PeerHandle> {
        if self.announced {
            Vec::new()
        } else {
            self.announced = true;
            vec![COORDINATOR_HANDLE]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{digest, encode_message, Message, MessageBody, OuterCommitment, SessionId};

    fn frame(body: MessageBody) -> Vec<u8> {
        encode_message(&Message {
            session_id: SessionId([1; 8]),
            body,
        })
    }

    fn recv_blocking(
        chan: &mut dyn InBandChannel,
        timeout_ms: u64,
    ) -> Option<(PeerHandle, Vec<u8>)> {
        let deadline = std::time::Instant::now() + std::time::Duration::from_millis(timeout_ms);
        while std::time::Instant::now() < deadline {
            if let Ok(Some(got)) = chan.receive() {
                return Some(got);
            }
            std::thread::sleep(std::time::Duration::from_millis(1));
        }
        None
    }

    #[test]
    fn localhost_exchange() {
        let mut coord = tcp_listen("127.0.0.1", 0).unwrap();
        let port = coord.local_port();
        let mut part = tcp_connect("127.0.0.1", port).unwrap();

        let commit = frame(MessageBody::Commit {
            outer: OuterCommitment(digest(b"c")),
        });
        part.send(COORDINATOR_HANDLE, &commit).unwrap();
        let (handle, got) = recv_blocking(&mut coord, 2000).expect("commit arrives");
        assert_eq!(got, commit);
        assert_eq!(coord.poll_connected(), vec![handle]); // reported exactly once
        assert_eq!(coord.poll_connected(), Vec::<PeerHandle>::new());
        let roster = frame(MessageBody::Roster {
            outers: vec![OuterCommitment(digest(b"c"))],
        });
        coord.send(handle, &roster).unwrap();
        let (_, got) = recv_blocking(&mut part, 2000).expect("roster arrives");
        assert_eq!(got, roster);
    }

    #[test]
    fn connect_to_dead_port_fails() {
        let port = {
            let l = TcpListener::bind(("127.0.0.1", 0)).unwrap();
            l.local_addr().unwrap().port()
        }; // listener dropped, port closed
        assert!(matches!(
            tcp_connect("127.0.0.1", port),
            Err(TransportError::ConnectFailed(_))
        ));
    }

    #[test]
    fn split_frames_reassemble() {
        let mut coord = tcp_listen("127.0.0.1", 0).unwrap();
        let port = coord.local_port();
        let stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
        let msg = frame(MessageBody::Hello { protocol_version: 1 });
        // write byte by byte to force reassembly
        let mut s = stream;
        for b in &msg {
            use std::io::Write as _;
            s.write_all(&[*b]).unwrap();
            s.flush().unwrap();
        }
        let (_, got) = recv_blocking(&mut coord, 2000).expect("reassembled");
        assert_eq!(got, msg);
    }
}
