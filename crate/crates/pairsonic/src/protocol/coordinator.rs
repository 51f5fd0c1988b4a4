//! Coordinator session: announces the group, collects commitments,
//! broadcasts the roster and aggregate, relays reveals and success nonces.
//!
//! The coordinator is untrusted for integrity; every participant re-does
//! all checks locally, so a malicious coordinator can only cause aborts.

use std::collections::BTreeMap;

use super::{
    Action, Event, Identity, Phase, ProtocolConfig, ProtocolError, RoundTimer, SessionOutcome,
};
use crate::wire::{
    aggregate, digest, verify_inner, verify_nonce, AbortReason, ContactCard, Digest,
    InnerPreimage, Message, MessageBody, OobPayload, OuterCommitment, SessionId,
    MAX_GROUP_SIZE, MIN_GROUP_SIZE,
};
use super::PeerHandle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinatorState {
    Announcing,
    Collecting,
    RosterSent,
    CollectReveals,
    RevealSetSent,
    Locked,
    CollectConfirms,
    Finalized,
    Aborted,
}

#[derive(Debug)]
pub struct CoordinatorSession {
    config: ProtocolConfig,
    session_id: SessionId,
    group_size: usize,
    own: Identity,
    state: CoordinatorState,
    timer: RoundTimer,
    connected: Vec<PeerHandle>,
    commits: BTreeMap<PeerHandle, OuterCommitment>,
    /// Sorted outers, fixed once all commitments are in.
    roster: Vec<OuterCommitment>,
    agg: Option<Digest>,
    /// Reveals aligned with the roster; the own slot is filled eagerly.
    reveals: Vec<Option<(InnerPreimage, Vec<u8>)>>,
    confirms: Vec<Option<[u8; 32]>>,
    own_confirmed: bool,
    abort_reason: Option<AbortReason>,
    abort_phase: Option<Phase>,
}

impl CoordinatorSession {
    /// Creates the session and announces it over the OOB channel.
    pub fn new(
        config: ProtocolConfig,
        group_size: usize,
        card: ContactCard,
        transport_descriptor: String,
        rng: &mut dyn rand_core::RngCore,
    ) -> Result<(Self, Vec<Action>), ProtocolError> {
        if !(MIN_GROUP_SIZE..=MAX_GROUP_SIZE).contains(&group_size) {
            return Err(ProtocolError::GroupSizeOutOfBounds(group_size));
        }
        let session_id = SessionId::generate(rng);
        let own = Identity::new(card, rng);
        let mut session = CoordinatorSession {
            config,
            session_id,
            group_size,
            own,
            state: CoordinatorState::Announcing,
            timer: RoundTimer::default(),
            connected: Vec::new(),
            commits: BTreeMap::new(),
            roster: Vec::new(),
            agg: None,
            reveals: Vec::new(),
            confirms: Vec::new(),
            own_confirmed: false,
            abort_reason: None,
            abort_phase: None,
        };
        let mut actions = vec![Action::EmitOob(OobPayload::Init {
            session_id,
            group_size: group_size as u8,
            transport_descriptor,
        })];
        session.timer.rearm(session.config.round_timeout_ms, &mut actions);
        Ok((session, actions))
    }

    pub fn state(&self) -> CoordinatorState {
        self.state
    }

    pub fn session_id(&self) -> &SessionId {
        &self.session_id
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.state, CoordinatorState::Finalized | CoordinatorState::Aborted)
    }

    pub fn outcome(&self) -> Result<SessionOutcome, ProtocolError> {
        match self.state {
            CoordinatorState::Finalized => Ok(SessionOutcome::Finalized {
                cards: self.roster_cards(),
            }),
            CoordinatorState::Aborted => Ok(SessionOutcome::Aborted {
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
            Event::PeerConnected(handle) => {
                if !self.connected.contains(&handle) {
                    self.connected.push(handle);
                }
            }
            Event::MalformedMessageReceived(_) => {
                self.abort(AbortReason::IntegrityFailure, &mut actions);
            }
            Event::MessageReceived(handle, msg) => {
                if msg.session_id != self.session_id {
                    return Ok(actions); // different session, not ours to judge
                }
                self.handle_message(handle, msg.body, &mut actions);
            }
            Event::UserConfirmed(yes) => self.handle_confirmation(yes, &mut actions),
            Event::TimerFired(id) => {
                if self.timer.fired(id) {
                    self.abort(AbortReason::Timeout, &mut actions);
                }
            }
            Event::OobReceived(_) => {
                // the coordinator is the OOB sender; its own emissions need
                // no re-verification
            }
        }
        Ok(actions)
    }

    fn handle_message(&mut self, handle: PeerHandle, body: MessageBody, actions: &mut Vec<Action>) {
        use CoordinatorState::*;
        match (body, self.state) {
            (MessageBody::Hello { protocol_version }, Announcing | Collecting) => {
                if protocol_version != self.config.protocol_version {
                    self.abort(AbortReason::IntegrityFailure, actions);
                }
            }
            (MessageBody::Commit { outer }, Announcing | Collecting) => {
                self.accept_commit(handle, outer, actions);
            }
            (MessageBody::Reveal { inner }, RosterSent | CollectReveals) => {
                self.accept_reveal(handle, inner, actions);
            }
            (MessageBody::Confirm { success_nonce }, Locked | CollectConfirms) => {
                self.accept_confirm(handle, success_nonce, actions);
            }
            (MessageBody::Abort { abort_nonce, reason }, _) => {
                self.accept_abort(abort_nonce, reason, actions);
            }
            // any other message is out of phase; strict state discipline
            _ => self.abort(AbortReason::IntegrityFailure, actions),
        }
    }

    fn accept_commit(&mut self, handle: PeerHandle, outer: OuterCommitment, actions: &mut Vec<Action>) {
        if self.commits.contains_key(&handle) {
            // duplicate commit from the same peer: splice suspicion
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        if outer == self.own.outer || self.commits.values().any(|o| *o == outer) {
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        self.commits.insert(handle, outer);
        self.state = CoordinatorState::Collecting;
        if self.commits.len() == self.group_size - 1 {
            let mut roster: Vec<OuterCommitment> = self.commits.values().copied().collect();
            roster.push(self.own.outer);
            roster.sort();
            let agg = match aggregate(&self.session_id, self.group_size, &roster) {
                Ok(agg) => agg,
                Err(_) => return self.abort(AbortReason::IntegrityFailure, actions),
            };
            self.reveals = vec![None; self.group_size];
            self.confirms = vec![None; self.group_size];
            let own_idx = roster.iter().position(|o| *o == self.own.outer).unwrap();
            self.reveals[own_idx] = Some((self.own.inner.clone(), self.own.inner_bytes.clone()));
            self.roster = roster.clone();
            self.agg = Some(agg);
            actions.push(Action::Broadcast(Message {
                session_id: self.session_id,
                body: MessageBody::Roster { outers: roster },
            }));
            actions.push(Action::EmitOob(OobPayload::Verify {
                session_id: self.session_id,
                aggregate: agg,
            }));
            self.timer.rearm(self.config.round_timeout_ms, actions);
            self.state = CoordinatorState::RosterSent;
        }
    }

    fn accept_reveal(&mut self, handle: PeerHandle, inner_bytes: Vec<u8>, actions: &mut Vec<Action>) {
        let Some(outer) = self.commits.get(&handle).copied() else {
            return self.abort(AbortReason::IntegrityFailure, actions);
        };
        let inner = match verify_inner(&outer, &inner_bytes) {
            Ok(inner) => inner,
            Err(_) => return self.abort(AbortReason::IntegrityFailure, actions),
        };
        let idx = self.roster.iter().position(|o| *o == outer).unwrap();
        if self.reveals[idx].is_some() {
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        self.reveals[idx] = Some((inner, inner_bytes));
        self.state = CoordinatorState::CollectReveals;
        if self.reveals.iter().all(Option::is_some) {
            let inners: Vec<Vec<u8>> = self
                .reveals
                .iter()
                .map(|r| r.as_ref().unwrap().1.clone())
                .collect();
            actions.push(Action::Broadcast(Message {
                session_id: self.session_id,
                body: MessageBody::RevealSet { inners },
            }));
            self.state = CoordinatorState::RevealSetSent;
            // all reveals verified against the roster on arrival, so the
            // coordinator's own lock condition already holds
            actions.push(Action::DisplayLock);
            self.timer.rearm(self.config.round_timeout_ms, actions);
            self.state = CoordinatorState::Locked;
        }
    }

    fn accept_confirm(&mut self, handle: PeerHandle, nonce: [u8; 32], actions: &mut Vec<Action>) {
        let Some(outer) = self.commits.get(&handle).copied() else {
            return self.abort(AbortReason::IntegrityFailure, actions);
        };
        let idx = self.roster.iter().position(|o| *o == outer).unwrap();
        let h_success = self.reveals[idx].as_ref().unwrap().0.h_success;
        if !verify_nonce(&h_success, &nonce) || self.confirms[idx].is_some() {
            return self.abort(AbortReason::IntegrityFailure, actions);
        }
        self.confirms[idx] = Some(nonce);
        self.try_finalize(actions);
    }

    fn handle_confirmation(&mut self, yes: bool, actions: &mut Vec<Action>) {
        if self.state != CoordinatorState::Locked {
            return; // the prompt is only live while locked
        }
        if !yes {
            return self.abort(AbortReason::UserDeclined, actions);
        }
        let own_idx = self.own_index();
        self.confirms[own_idx] = Some(self.own.nonces.success_nonce);
        self.own_confirmed = true;
        self.state = CoordinatorState::CollectConfirms;
        self.timer.rearm(self.config.round_timeout_ms, actions);
        self.try_finalize(actions);
    }

    fn try_finalize(&mut self, actions: &mut Vec<Action>) {
        if !self.own_confirmed || self.confirms.iter().any(Option::is_none) {
            return;
        }
        let nonces: Vec<[u8; 32]> = self.confirms.iter().map(|c| c.unwrap()).collect();
        actions.push(Action::Broadcast(Message {
            session_id: self.session_id,
            body: MessageBody::SuccessSet { nonces },
        }));
        self.timer.cancel(actions);
        let cards = self.roster_cards();
        let own_idx = self.own_index();
        let peer_cards: Vec<ContactCard> = cards
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != own_idx)
            .map(|(_, c)| c.clone())
            .collect();
        actions.push(Action::DisplayContacts(cards));
        actions.push(Action::ImportContacts(peer_cards));
        self.state = CoordinatorState::Finalized;
    }

    fn accept_abort(&mut self, nonce: [u8; 32], reason: AbortReason, actions: &mut Vec<Action>) {
        // verifiable only once the sender's inner (and thus h_abort) is known
        let known = self
            .reveals
            .iter()
            .flatten()
            .any(|(inner, _)| verify_nonce(&inner.h_abort, &nonce));
        if !known {
            return; // unverifiable release: treated as forgery
        }
        // relay so non-adjacent participants learn of the abort
        actions.push(Action::Broadcast(Message {
            session_id: self.session_id,
            body: MessageBody::Abort { abort_nonce: nonce, reason },
        }));
        self.abort(reason, actions);
    }

    fn abort(&mut self, reason: AbortReason, actions: &mut Vec<Action>) {
        if self.commitment_exchanged() {
            actions.push(Action::Broadcast(Message {
                session_id: self.session_id,
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
        self.state = CoordinatorState::Aborted;
    }

    /// The coordinator's commitment becomes public with the roster.
    fn commitment_exchanged(&self) -> bool {
        !self.roster.is_empty()
    }

    fn phase(&self) -> Phase {
        use CoordinatorState::*;
        match self.state {
            Announcing => Phase::Initialization,
            Collecting | RosterSent | CollectReveals | RevealSetSent | Locked => Phase::Verification,
            CollectConfirms | Finalized => Phase::Finalization,
            Aborted => self.abort_phase.unwrap_or(Phase::Verification),
        }
    }

    fn own_index(&self) -> usize {
        self.roster
            .iter()
            .position(|o| *o == self.own.outer)
            .expect("own outer in roster")
    }

    fn roster_cards(&self) -> Vec<ContactCard> {
        self.reveals
            .iter()
            .map(|r| r.as_ref().expect("complete reveals").0.card.clone())
            .collect()
    }

    /// Digest over the canonical encoding of the final card list, used by
    /// reports to check agreement.
    pub fn roster_digest(&self) -> Option<Digest> {
        if self.state != CoordinatorState::Finalized {
            return None;
        }
        let mut buf = Vec::new();
        for card in self.roster_cards() {
            buf.extend_from_slice(&crate::wire::encode_contact_card(&card));
        }
        Some(digest(&buf))
    }
}
