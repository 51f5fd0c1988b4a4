//! Event-driven coordinator and participant state machines.
//!
//! Sessions are pure transducers: `handle_event` consumes one [`Event`]
//! and returns the [`Action`]s the driver must perform. No I/O happens
//! here; transports feed events in and carry actions out. Identical
//! (seed, event sequence) pairs yield identical (state, action) sequences.

mod coordinator;
mod participant;

pub use coordinator::CoordinatorSession;
pub use participant::ParticipantSession;

use crate::wire::{
    make_commitment, AbortReason, ContactCard, InnerPreimage, Message, NoncePair, OobPayload,
    OuterCommitment, WireError,
};

/// Opaque transport-assigned connection identifier.
pub type PeerHandle = u64;
pub type TimerId = u32;

pub const PROTOCOL_VERSION: u8 = 1;
pub const DEFAULT_ROUND_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Coordinator,
    Participant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub round_timeout_ms: u64,
    pub protocol_version: u8,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            round_timeout_ms: DEFAULT_ROUND_TIMEOUT_MS,
            protocol_version: PROTOCOL_VERSION,
        }
    }
}

/// Inputs to a session.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Start,
    OobReceived(OobPayload),
    MessageReceived(PeerHandle, Message),
    /// A frame from this peer failed to decode; treated as tampering.
    MalformedMessageReceived(PeerHandle),
    PeerConnected(PeerHandle),
    UserConfirmed(bool),
    TimerFired(TimerId),
}

/// Outputs a driver must perform.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send(PeerHandle, Message),
    Broadcast(Message),
    EmitOob(OobPayload),
    /// Establish the in-band connection named by the descriptor, then feed
    /// back a `PeerConnected` event.
    Connect(String),
    SetTimer(TimerId, u64),
    CancelTimer(TimerId),
    DisplayLock,
    DisplayContacts(Vec<ContactCard>),
    DisplayAbort(AbortReason),
    ImportContacts(Vec<ContactCard>),
}

/// Which of the three phases a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initialization,
    Verification,
    Finalization,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionOutcome {
    Finalized { cards: Vec<ContactCard> },
    Aborted { reason: AbortReason, phase: Phase },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("group size {0} outside 2..=16")]
    GroupSizeOutOfBounds(usize),
    #[error("invalid contact card: {0}")]
    InvalidCard(WireError),
    #[error("event delivered to a terminal session")]
    IgnoredEvent,
    #[error("session is not terminal")]
    NotTerminal,
}

/// A device's own commitment material, fixed at session creation.
#[derive(Debug, Clone)]
pub(crate) struct Identity {
    pub nonces: NoncePair,
    pub inner: InnerPreimage,
    pub inner_bytes: Vec<u8>,
    pub outer: OuterCommitment,
}

impl Identity {
    pub fn new(card: ContactCard, rng: &mut dyn rand_core::RngCore) -> Self {
        let nonces = NoncePair::generate(rng);
        let (inner, outer) = make_commitment(&card, &nonces);
        let inner_bytes = inner.to_bytes();
        Identity {
            nonces,
            inner,
            inner_bytes,
            outer,
        }
    }
}

/// Rotating round timer: at most one live timer per session.
#[derive(Debug, Clone, Default)]
pub(crate) struct RoundTimer {
    current: Option<TimerId>,
    next_id: TimerId,
}

impl RoundTimer {
    /// Cancels the previous timer (if any) and arms a fresh one.
    pub fn rearm(&mut self, timeout_ms: u64, actions: &mut Vec<Action>) {
        if let Some(old) = self.current.take() {
            actions.push(Action::CancelTimer(old));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.current = Some(id);
        actions.push(Action::SetTimer(id, timeout_ms));
    }

    pub fn cancel(&mut self, actions: &mut Vec<Action>) {
        if let Some(old) = self.current.take() {
            actions.push(Action::CancelTimer(old));
        }
    }

    /// True iff this firing refers to the live timer.
    pub fn fired(&mut self, id: TimerId) -> bool {
        if self.current == Some(id) {
            self.current = None;
            true
        } else {
            false
        }
    }
}
