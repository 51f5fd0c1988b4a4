//! Participant session: joins an announced group, commits, verifies the
//! roster against the OOB aggregate, reveals, and confirms.

use super::{
    Action, Event, Identity, Phase, ProtocolConfig, ProtocolError, RoundTimer, SessionOutcome,
};
use super::PeerHandle;
use crate::wire::{
    aggregate, digest, verify_inner, verify_nonce, AbortReason, ContactCard, Digest,
    InnerPreimage, Message, MessageBody, OobPayload, OuterCommitment, SessionId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticipantState {
    AwaitInit,
    Joining,
    Committed,
    AwaitRoster,
    Revealing,
    Locked,
    AwaitSuccessSet,
    Finalized,
    Aborted,
}

#[derive(Debug)]
pub struct ParticipantSession {
    config: ProtocolConfig,
    own: Identity,
    state: ParticipantState,
    timer: RoundTimer,
    session_id: Option<SessionId>,
    group_size: usize,
    coordinator: Option<PeerHandle>,
    roster: Vec<OuterCommitment>,
    oob_aggregate: Option<Digest>,
    /// Verified inner preimages aligned with the roster.
    reveals: Vec<InnerPreimage>,
    abort_reason: Option<AbortReason>,
    abort_phase: Option<Phase>,
}

impl ParticipantSession {
    /// Creates a session listening for an OOB INIT announcement. Nonces
    /// are drawn eagerly so the commitment is fixed before any traffic.
    pub fn new(
        config: ProtocolConfig,
        card: ContactCard,
        rng: &mut dyn rand_core::RngCore,
    ) -> Result<(Self, Vec<Action>), ProtocolError> {
        let own = Identity::new(card, rng);
        let mut session = ParticipantSession {
            config,
            own,
            state: ParticipantState::AwaitInit,
            timer: RoundTimer::default(),
            session_id: None,
            group_size: 0,
            coordinator: None,
            roster: Vec::new(),
            oob_aggregate: None,
            reveals: Vec::new(),
            abort_reason: None,
            abort_phase: None,
        };
        let mut actions = Vec::new();
        session.timer.rearm(session.config.round_timeout_ms, &mut actions);
        Ok((session, actions))
    }

    pub fn state(&self) -> ParticipantState {
        self.state
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.state, ParticipantState::Finalized | ParticipantState::Aborted)
    }

    pub fn outer_commitment(&self) -> &OuterCommitment {
        &self.own.outer
    }

    pub fn outcome(&self) -> Result<SessionOutcome, ProtocolError> {
        match self.state {
            ParticipantState::Finalized => Ok(SessionOutcome::Finalized {
                cards: self.reveals.iter().map(|r| r.card.clone()).collect(),
            }),
            ParticipantState::Aborted => Ok(SessionOutcome::Aborted {
                reason: self.abort_reason.unwrap_or(AbortReason::IntegrityFailure),
                phase: self.abort_phase.unwrap_or(Phase::Verification),
            }),
            _ => Err(ProtocolError::NotTerminal),
        }
    }

    pub fn handle_event(&mut self, event: Event) -> Result<Vec<Action>, ProtocolError> {
        if self.is_terminal() {
            return Err(ProtocolError::IgnoredEvent);
        }
        let mut actions = Vec::new();
        match event {
            Event::Start => {}
            Event::OobReceived(payload) => self.handle_oob(payload, &mut actions),
            Event::PeerConnected(handle) => {
                if self.state == ParticipantState::Joining && self.coordinator.is_none() {
                    self.coordinator = Some(handle);
                    let session_id = self.session_id.expect("set on init");
                    actions.push(Action::Send(
                        handle,
                        Message {
                            session_id,
                            body: MessageBody::Hello {
                                protocol_version: self.config.protocol_version,
                            },
                        },
                    ));
                    actions.push(Action::Send(
                        handle,
                        Message {
                            session_id,
                            body: MessageBody::Commit { outer: self.own.outer },
                        },
                    ));
                    self.state = ParticipantState::Committed;
                    self.timer.rearm(self.config.round_timeout_ms, &mut actions);
                }
            }
            Event::MalformedMessageReceived(_) => {
                self.abort(AbortReason::IntegrityFailure, &mut actions);
            }
            Event::MessageReceived(_, msg) => {
                if Some(msg.session_id) != self.session_id {
                    return Ok(actions);
                }
                self.handle_message(msg.body, &mut actions);
            }
            Event::UserConfirmed(yes) => self.handle_confirmation(yes, &mut actions),
            Event::TimerFired(id) => {
                if self.timer.fired(id) {
                    self.abort(AbortReason::Timeout, &mut actions);
                }
            }
        }
        Ok(actions)
    }

    fn handle_oob(&mut self, payload: OobPayload, actions: &mut Vec<Action>) {
        match payload {
            OobPayload::Init {
                session_id,
                group_size,
                transport_descriptor,
            } => {
                if self.state != ParticipantState::AwaitInit {
                    return; // already joined a session
                }
                self.session_id = Some(session_id);
                self.group_size = group_size as usize;
                actions.push(Action::Connect(transport_descriptor));
                self.state = ParticipantState::Joining;
                self.timer.rearm(self.config.round_timeout_ms, actions);
            }
            OobPayload::Verify { session_id, aggregate } => {
                if Some(session_id) != self.session_id {
                    return;
                }
                match self.state {
                    ParticipantState::Committed | ParticipantState::AwaitRoster => {
                        if let Some(prev) = self.oob_aggregate {
                            if prev != aggregate {
                                // the channel is equivocation-free; two
                                // different digests mean tampering
                                return self.abort(AbortReason::OobMismatch, actions);
                            }
                            return;
                        }
                        self.oob_aggregate = Some(aggregate);
                        if self.state == ParticipantState::Committed {
                            self.state = ParticipantState::AwaitRoster;
                        }
                        self.try_verify_roster(actions);
                    }
                    _ => {}
                }
            }
        }
    }

    fn handle_message(&mut self, body: MessageBody, actions: &mut Vec<Action>) {
        use ParticipantState::*;
        match (body, self.state) {
            (MessageBody::Roster { outers }, Committed | AwaitRoster) => {
                if !self.roster.is_empty() {
                    return self.abort(AbortReason::IntegrityFailure, actions);
                }
                if outers.len() != self.group_size
                    || !outers.contains(&self.own.outer)
                {
                    return self.abort(AbortReason::IntegrityFailure, actions);
                }
                self.roster = outers;
                if self.state == Committed {
                    self.state = AwaitRoster;
                }
                self.try_verify_roster(actions);
            }
            (MessageBody::RevealSet { inners }, Revealing) => {
                self.accept_reveal_set(inners, actions);
            }
            (MessageBody::SuccessSet { nonces }, AwaitSuccessSet) => {
                self.accept_success_set(nonces, actions);
            }
            (MessageBody::Abort { abort_nonce, reason }, _) => {
                // verifiable only once the reveal set disclosed h_abort values
                let known = self
                    .reveals
                    .iter()
                    .any(|inner| verify_nonce(&inner.h_abort, &abort_nonce));
                if known {
                    self.abort(reason, actions);
                }
            }
            _ => self.abort(AbortReason::IntegrityFailure, actions),
        }
    }

    /// Once both the roster and the OOB digest are in, cross-check them.
    fn try_verify_roster(&mut self, actions: &mut Vec<Action>) {
        let (Some(oob), false) = (self.oob_aggregate, self.roster.is_empty()) else {
            return;
        };
        let session_id = self.session_id.expect("set on init");
        let recomputed = match aggregate(&session_id, self.group_size, &self.roster) {
            Ok(agg) => agg,
            Err(_) => return self.abort(AbortReason::IntegrityFailure, actions),
        };
        if recomputed != oob {
            return self.abort(AbortReason::OobMismatch, actions);
        }
        let coordinator = self.coordinator.expect("connected");
        actions.push(Action::Send(
            coordinator,
            Message {
                session_id,
                body: MessageBody::Reveal {
                    inner: self.own.inner_bytes.clone(),
                },
            },
        ));
        self.state = ParticipantState::Revealing;
        self.timer.rearm(self.config.round_timeout_ms, actions);
    }

    /// The reveal set must be a bijection onto the roster.
    fn accept_reveal_set(&mut self, inners: Vec<Vec<u8>>, actions: &mut Vec<Action>) {
        if inners.len() != self.group_size {
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        let mut verified: Vec<Option<InnerPreimage>> = vec![None; self.group_size];
        for bytes in &inners {
            let d = digest(bytes);
            let Some(idx) = self.roster.iter().position(|o| o.0 == d) else {
                return self.abort(AbortReason::IntegrityFailure, actions);
            };
            if verified[idx].is_some() {
                return self.abort(AbortReason::IntegrityFailure, actions);
            }
            match verify_inner(&self.roster[idx], bytes) {
                Ok(inner) => verified[idx] = Some(inner),
                Err(_) => return self.abort(AbortReason::IntegrityFailure, actions),
            }
        }
        if verified.iter().any(Option::is_none) {
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        self.reveals = verified.into_iter().map(Option::unwrap).collect();
        actions.push(Action::DisplayLock);
        self.state = ParticipantState::Locked;
        self.timer.rearm(self.config.round_timeout_ms, actions);
    }

    fn handle_confirmation(&mut self, yes: bool, actions: &mut Vec<Action>) {
        if self.state != ParticipantState::Locked {
            return;
        }
        if !yes {
            return self.abort(AbortReason::UserDeclined, actions);
        }
        let session_id = self.session_id.expect("set on init");
        actions.push(Action::Send(
            self.coordinator.expect("connected"),
            Message {
                session_id,
                body: MessageBody::Confirm {
                    success_nonce: self.own.nonces.success_nonce,
                },
            },
        ));
        self.state = ParticipantState::AwaitSuccessSet;
        self.timer.rearm(self.config.round_timeout_ms, actions);
    }

    /// Success nonces arrive in roster order; each must hash to the
    /// committed h_success of the matching reveal.
    fn accept_success_set(&mut self, nonces: Vec<[u8; 32]>, actions: &mut Vec<Action>) {
        if nonces.len() != self.group_size {
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        for (nonce, inner) in nonces.iter().zip(&self.reveals) {
            if !verify_nonce(&inner.h_success, nonce) {
                return self.abort(AbortReason::IntegrityFailure, actions);
            }
        }
        self.timer.cancel(actions);
        let cards: Vec<ContactCard> = self.reveals.iter().map(|r| r.card.clone()).collect();
        let own_idx = self
            .roster
            .iter()
            .position(|o| *o == self.own.outer)
            .expect("own outer in roster");
        let peer_cards: Vec<ContactCard> = cards
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != own_idx)
            .map(|(_, c)| c.clone())
            .collect();
        actions.push(Action::DisplayContacts(cards));
        actions.push(Action::ImportContacts(peer_cards));
        self.state = ParticipantState::Finalized;
    }

    fn abort(&mut self, reason: AbortReason, actions: &mut Vec<Action>) {
        if self.commitment_sent() {
            actions.push(Action::Broadcast(Message {
                session_id: self.session_id.expect("committed implies init"),
                body: MessageBody::Abort {
                    abort_nonce: self.own.nonces.abort_nonce,
                    reason,
                },
            }));
        }
        self.timer.cancel(actions);
        actions.push(Action::DisplayAbort(reason));
        self.abort_reason = Some(reason);
        self.abort_phase = Some(self.phase());
        self.state = ParticipantState::Aborted;
    }

    fn commitment_sent(&self) -> bool {
        use ParticipantState::*;
        !matches!(self.state, AwaitInit | Joining)
    }

    fn phase(&self) -> Phase {
        use ParticipantState::*;
        match self.state {
            AwaitInit | Joining => Phase::Initialization,
            Committed | AwaitRoster | Revealing | Locked => Phase::Verification,
            AwaitSuccessSet | Finalized => Phase::Finalization,
            Aborted => self.abort_phase.unwrap_or(Phase::Verification),
        }
    }

    /// Digest over the canonical encoding of the final card list.
    pub fn roster_digest(&self) -> Option<Digest> {
        if self.state != ParticipantState::Finalized {
            return None;
        }
        let mut buf = Vec::new();
        for inner in &self.reveals {
            buf.extend_from_slice(&crate::wire::encode_contact_card(&inner.card));
        }
        Some(digest(&buf))
    }
}
