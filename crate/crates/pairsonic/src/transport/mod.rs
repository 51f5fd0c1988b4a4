//! Channel realizations: a reliable in-band session channel and a
//! broadcast OOB channel, for both simulation and real two-process runs.
//!
//! All implementations present a poll-style interface consumed by a single
//! protocol-driving thread; callbacks are not part of the contract.

mod file_oob;
mod sim_net;
mod tcp;

pub use file_oob::FileOobChannel;
pub use sim_net::{SimEndpoint, SimNetwork, SimOobEndpoint};
pub use tcp::{tcp_connect, tcp_listen, TcpCoordinatorChannel, TcpParticipantChannel};

use crate::protocol::PeerHandle;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("connect failed: {0}")]
    ConnectFailed(String),
    #[error("peer {0} disconnected")]
    PeerDisconnected(PeerHandle),
    #[error("unknown peer handle {0}")]
    UnknownPeer(PeerHandle),
    #[error("invalid transport descriptor: {0}")]
    BadDescriptor(String),
    #[error("I/O failure: {0}")]
    Io(String),
}

/// Reliable, ordered, message-boundary-preserving session channel.
pub trait InBandChannel {
    fn send(&mut self, peer: PeerHandle, frame: &[u8]) -> Result<(), TransportError>;
    /// Iterated unicast to every connected peer; never delivers to self.
    fn broadcast(&mut self, frame: &[u8]) -> Result<(), TransportError>;
    /// Non-blocking: next complete frame, if any.
    fn receive(&mut self) -> Result<Option<(PeerHandle, Vec<u8>)>, TransportError>;
    /// Peers that connected since the last call.
    fn poll_connected(&mut self) -> Vec<PeerHandle>;
}

/// Location-limited authentic broadcast; one emit, identical bytes to all
/// listeners.
pub trait OobChannel {
    fn emit(&mut self, payload: &[u8]) -> Result<(), TransportError>;
    fn poll(&mut self) -> Result<Vec<Vec<u8>>, TransportError>;
}

/// Parsed `tcp:<host>:<port>` or `sim:<token>` descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportDescriptor {
    Tcp { host: String, port: u16 },
    Sim { token: String },
}

impl TransportDescriptor {
    pub fn parse(s: &str) -> Result<Self, TransportError> {
        if s.len() > 64 {
            return Err(TransportError::BadDescriptor("descriptor too long".into()));
        }
        if let Some(rest) = s.strip_prefix("tcp:") {
            let (host, port) = rest
                .rsplit_once(':')
                .ok_or_else(|| TransportError::BadDescriptor(s.into()))?;
            let port = port
                .parse()
                .map_err(|_| TransportError::BadDescriptor(s.into()))?;
            Ok(TransportDescriptor::Tcp {
                host: host.into(),
                port,
            })
        } else if let Some(token) = s.strip_prefix("sim:") {
            Ok(TransportDescriptor::Sim { token: token.into() })
        } else {
            Err(TransportError::BadDescriptor(s.into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_parsing() {
        assert_eq!(
            TransportDescriptor::parse("tcp:192.168.49.1:7465").unwrap(),
            TransportDescriptor::Tcp {
                host: "192.168.49.1".into(),
                port: 7465
            }
        );
        assert_eq!(
            TransportDescriptor::parse("sim:0").unwrap(),
            TransportDescriptor::Sim { token: "0".into() }
        );
        assert!(TransportDescriptor::parse("quic:host:1").is_err());
        assert!(TransportDescriptor::parse("tcp:nope").is_err());
    }
}
