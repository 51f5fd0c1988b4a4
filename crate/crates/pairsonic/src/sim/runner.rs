//! The discrete-event driver behind `run_simulation`.

use std::collections::{BTreeMap, HashSet};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::protocol::{
    Action, CoordinatorSession, Event, Identity, ParticipantSession, ProtocolConfig, ProtocolError,
    SessionOutcome, TimerId,
};
use crate::transport::{
    InBandChannel, OobChannel, SimEndpoint, SimNetwork, SimOobEndpoint, TransportDescriptor,
};
use crate::wire::{
    decode_message, decode_oob, encode_message, ContactCard, Digest, Message, MessageBody,
    OobPayload, SessionId, MAX_GROUP_SIZE, MIN_GROUP_SIZE,
};

use super::{Adversary, DeviceReport, SimError, SimReport, UserOracle};

/// Hard cap on delivered events; exceeding it means a livelock bug.
const EVENT_BUDGET: usize = 50_000;

enum Session {
    Coordinator(CoordinatorSession),
    Participant(ParticipantSession),
}

impl Session {
    fn handle_event(&mut self, event: Event) -> Result<Vec<Action>, ProtocolError> {
        match self {
            Session::Coordinator(s) => s.handle_event(event),
            Session::Participant(s) => s.handle_event(event),
        }
    }

    fn is_terminal(&self) -> bool {
        match self {
            Session::Coordinator(s) => s.is_terminal(),
            Session::Participant(s) => s.is_terminal(),
        }
    }

    fn outcome(&self) -> Result<SessionOutcome, ProtocolError> {
        match self {
            Session::Coordinator(s) => s.outcome(),
            Session::Participant(s) => s.outcome(),
        }
    }

    fn roster_digest(&self) -> Option<Digest> {
        match self {
            Session::Coordinator(s) => s.roster_digest(),
            Session::Participant(s) => s.roster_digest(),
        }
    }

    fn role(&self) -> &'static str {
        match self {
            Session::Coordinator(_) => "coordinator",
            Session::Participant(_) => "participant",
        }
    }
}

struct Device {
    session: Session,
    endpoint: SimEndpoint,
    oob: SimOobEndpoint,
    timers: BTreeMap<TimerId, u64>,
}

/// Scripted rogue device used by `InjectExtraParticipant`: commits to the
/// announced session but never reveals.
struct FakeDevice {
    id: usize,
    endpoint: SimEndpoint,
    oob: SimOobEndpoint,
    identity: Identity,
    committed: bool,
}

struct Driver {
    group_size: usize,
    net: SimNetwork,
    devices: Vec<Device>,
    fake: Option<FakeDevice>,
    oracle: UserOracle,
    now_ms: u64,
    delivered: usize,
    trace: Vec<String>,
    locked: Vec<bool>,
    consulted: Vec<bool>,
    imported: Vec<usize>,
}

pub fn run_simulation(
    group_size: usize,
    adversary: Adversary,
    oracle: UserOracle,
    seed: u64,
    config: ProtocolConfig,
) -> Result<SimReport, SimError> {
    if !(MIN_GROUP_SIZE..=MAX_GROUP_SIZE).contains(&group_size) {
        return Err(SimError::GroupSizeOutOfBounds(group_size));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let cards: Vec<ContactCard> = (0..group_size)
        .map(|d| {
            let mut key = [0u8; 32];
            rand_core::RngCore::fill_bytes(&mut rng, &mut key);
            ContactCard::new(format!("user-{d:02}"), key).expect("valid generated card")
        })
        .collect();
    let adversary_identity = {
        let mut key = [0u8; 32];
        rand_core::RngCore::fill_bytes(&mut rng, &mut key);
        Identity::new(ContactCard::new("mallory", key).expect("valid card"), &mut rng)
    };

    let extra = usize::from(adversary == Adversary::InjectExtraParticipant);
    let net = SimNetwork::new(seed, group_size + extra);
    install_adversary(&net, &adversary, &adversary_identity);

    let fake = (extra == 1).then(|| FakeDevice {
        id: group_size,
        endpoint: net.endpoint(group_size),
        oob: net.oob_endpoint(group_size),
        identity: adversary_identity.clone(),
        committed: false,
    });

    let mut devices = Vec::with_capacity(group_size);
    let mut initial_actions = Vec::new();
    for (d, card) in cards.into_iter().enumerate() {
        let (session, actions) = if d == 0 {
            let (s, a) = CoordinatorSession::new(
                config.clone(),
                group_size,
                card,
                "sim:0".to_string(),
                &mut rng,
            )
            .map_err(|_| SimError::GroupSizeOutOfBounds(group_size))?;
            (Session::Coordinator(s), a)
        } else {
            let (s, a) =
                ParticipantSession::new(config.clone(), card, &mut rng).expect("participant setup");
            (Session::Participant(s), a)
        };
        devices.push(Device {
            session,
            endpoint: net.endpoint(d),
            oob: net.oob_endpoint(d),
            timers: BTreeMap::new(),
        });
        initial_actions.push(actions);
    }

    let mut driver = Driver {
        group_size,
        net,
        devices,
        fake,
        oracle: oracle.clone(),
        now_ms: 0,
        delivered: 0,
        trace: Vec::new(),
        locked: vec![false; group_size],
        consulted: vec![false; group_size],
        imported: vec![0; group_size],
    };
    for (d, actions) in initial_actions.into_iter().enumerate() {
        for action in actions {
            driver.execute(d, action);
        }
    }
    driver.run()?;

    let devices = driver
        .devices
        .iter()
        .enumerate()
        .map(|(d, dev)| DeviceReport {
            device: d,
            role: dev.session.role(),
            outcome: dev.session.outcome().expect("terminal after run"),
            roster_digest: dev.session.roster_digest(),
            imported: driver.imported[d],
        })
        .collect();
    Ok(SimReport {
        group_size,
        seed,
        adversary,
        oracle,
        config,
        devices,
        trace: driver.trace,
        virtual_ms: driver.now_ms,
    })
}

impl Driver {
    fn run(&mut self) -> Result<(), SimError> {
        loop {
            if self.delivered > EVENT_BUDGET {
                return Err(SimError::NonQuiescent {
                    budget: EVENT_BUDGET,
                });
            }
            if self.pump_pass() > 0 {
                continue;
            }
            if self.devices.iter().all(|d| d.session.is_terminal()) {
                return Ok(());
            }
            if self.consult_oracles() > 0 {
                continue;
            }
            if self.fire_next_timer() {
                continue;
            }
            // a non-terminal session always keeps a round timer armed
            return Err(SimError::NonQuiescent {
                budget: EVENT_BUDGET,
            });
        }
    }

    /// Pumps every device once; returns the number of delivered events.
    fn pump_pass(&mut self) -> usize {
        let mut moved = self.fake_step();
        for d in 0..self.devices.len() {
            moved += self.pump_device(d);
        }
        moved
    }

    fn pump_device(&mut self, d: usize) -> usize {
        let mut moved = 0;
        let terminal = self.devices[d].session.is_terminal();

        let connected = self.devices[d].endpoint.poll_connected();
        for handle in connected {
            if !terminal {
                self.deliver(d, Event::PeerConnected(handle));
                moved += 1;
            }
        }

        let oob_payloads = self.devices[d].oob.poll().unwrap_or_default();
        for bytes in oob_payloads {
            if terminal || self.devices[d].session.is_terminal() {
                continue; // drained and discarded
            }
            match decode_oob(&bytes) {
                Ok(payload) => {
                    self.deliver(d, Event::OobReceived(payload));
                    moved += 1;
                }
                Err(_) => self.push_trace(format!("dev{d} oob-undecodable ignored")),
            }
        }

        loop {
            let frame = self.devices[d].endpoint.receive().unwrap_or(None);
            let Some((from, bytes)) = frame else { break };
            if self.devices[d].session.is_terminal() {
                continue; // drain mail addressed to a finished session
            }
            match decode_message(&bytes) {
                Ok(msg) => {
                    self.push_trace(format!(
                        "dev{d} recv from={from} {}",
                        body_label(&msg.body)
                    ));
                    self.deliver_quiet(d, Event::MessageReceived(from, msg));
                }
                Err(_) => {
                    self.push_trace(format!("dev{d} recv from={from} malformed"));
                    self.deliver_quiet(d, Event::MalformedMessageReceived(from));
                }
            }
            moved += 1;
        }
        moved
    }

    fn deliver(&mut self, d: usize, event: Event) {
        match &event {
            Event::PeerConnected(h) => self.push_trace(format!("dev{d} connected peer={h}")),
            Event::OobReceived(p) => {
                self.push_trace(format!("dev{d} oob-recv {}", oob_label(p)))
            }
            Event::UserConfirmed(yes) => self.push_trace(format!(
                "dev{d} user {}",
                if *yes { "confirmed" } else { "declined" }
            )),
            Event::TimerFired(id) => self.push_trace(format!("dev{d} timer-fired id={id}")),
            _ => {}
        }
        self.deliver_quiet(d, event);
    }

    fn deliver_quiet(&mut self, d: usize, event: Event) {
        self.delivered += 1;
        let actions = self.devices[d].session.handle_event(event).unwrap_or_default();
        for action in actions {
            self.execute(d, action);
        }
    }

    fn execute(&mut self, d: usize, action: Action) {
        match action {
            Action::Send(peer, msg) => {
                self.push_trace(format!("dev{d} send to={peer} {}", body_label(&msg.body)));
                let _ = self.devices[d].endpoint.send(peer, &encode_message(&msg));
            }
            Action::Broadcast(msg) => {
                self.push_trace(format!("dev{d} broadcast {}", body_label(&msg.body)));
                let _ = self.devices[d].endpoint.broadcast(&encode_message(&msg));
            }
            Action::EmitOob(payload) => {
                self.push_trace(format!("dev{d} oob-emit {}", oob_label(&payload)));
                let bytes = crate::wire::encode_oob(&payload).expect("valid oob payload");
                let _ = self.devices[d].oob.emit(&bytes);
            }
            Action::Connect(descriptor) => {
                self.push_trace(format!("dev{d} connect {descriptor}"));
                if let Ok(TransportDescriptor::Sim { token }) =
                    TransportDescriptor::parse(&descriptor)
                {
                    if let Ok(target) = token.parse::<usize>() {
                        self.net.connect(d, target);
                    }
                }
            }
            Action::SetTimer(id, ms) => {
                self.devices[d].timers.insert(id, self.now_ms + ms);
            }
            Action::CancelTimer(id) => {
                self.devices[d].timers.remove(&id);
            }
            Action::DisplayLock => {
                self.push_trace(format!("dev{d} display-lock"));
                self.locked[d] = true;
            }
            Action::DisplayContacts(cards) => {
                self.push_trace(format!("dev{d} display-contacts {}", cards.len()));
            }
            Action::DisplayAbort(reason) => {
                self.push_trace(format!("dev{d} display-abort {}", reason.label()));
            }
            Action::ImportContacts(cards) => {
                self.push_trace(format!("dev{d} import {}", cards.len()));
                self.imported[d] = cards.len();
            }
        }
    }

    /// Prompts freshly locked devices; Honest confirms only when every
    /// device in the group shows the lock indicator.
    fn consult_oracles(&mut self) -> usize {
        let all_locked = self.locked.iter().all(|&l| l);
        let mut consulted = 0;
        for d in 0..self.group_size {
            if self.consulted[d] || !self.locked[d] || self.devices[d].session.is_terminal() {
                continue;
            }
            self.consulted[d] = true;
            let yes = self.oracle.decide(d, all_locked);
            self.deliver(d, Event::UserConfirmed(yes));
            consulted += 1;
        }
        consulted
    }

    /// Advances virtual time to the earliest pending timer and fires it.
    fn fire_next_timer(&mut self) -> bool {
        let next = self
            .devices
            .iter()
            .enumerate()
            .filter(|(_, dev)| !dev.session.is_terminal())
            .flat_map(|(d, dev)| dev.timers.iter().map(move |(&id, &at)| (at, d, id)))
            .min();
        let Some((at, d, id)) = next else {
            return false;
        };
        self.now_ms = self.now_ms.max(at);
        self.devices[d].timers.remove(&id);
        self.deliver(d, Event::TimerFired(id));
        true
    }

    /// Runs the scripted rogue device, if the adversary deploys one.
    fn fake_step(&mut self) -> usize {
        let Some(fake) = self.fake.as_mut() else {
            return 0;
        };
        let mut moved = 0;
        for bytes in fake.oob.poll().unwrap_or_default() {
            if fake.committed {
                continue;
            }
            if let Ok(OobPayload::Init { session_id, .. }) = decode_oob(&bytes) {
                self.net.connect(fake.id, 0);
                let hello = fake_message(session_id, MessageBody::Hello { protocol_version: 1 });
                let commit = fake_message(
                    session_id,
                    MessageBody::Commit {
                        outer: fake.identity.outer,
                    },
                );
                let _ = fake.endpoint.send(0, &hello);
                let _ = fake.endpoint.send(0, &commit);
                fake.committed = true;
                self.trace
                    .push(format!("t={} rogue{} commit", self.now_ms, fake.id));
                moved += 1;
            }
        }
        // the rogue ignores all in-band traffic; drain to allow quiescence
        while fake.endpoint.receive().unwrap_or(None).is_some() {}
        let _ = fake.endpoint.poll_connected();
        moved
    }

    fn push_trace(&mut self, line: String) {
        self.trace.push(format!("t={} {line}", self.now_ms));
    }
}

fn fake_message(session_id: SessionId, body: MessageBody) -> Vec<u8> {
    encode_message(&Message { session_id, body })
}

fn body_label(body: &MessageBody) -> &'static str {
    match body {
        MessageBody::Hello { .. } => "hello",
        MessageBody::Commit { .. } => "commit",
        MessageBody::Roster { .. } => "roster",
        MessageBody::Reveal { .. } => "reveal",
        MessageBody::RevealSet { .. } => "reveal-set",
        MessageBody::Confirm { .. } => "confirm",
        MessageBody::SuccessSet { .. } => "success-set",
        MessageBody::Abort { .. } => "abort",
    }
}

fn oob_label(payload: &OobPayload) -> &'static str {
    match payload {
        OobPayload::Init { .. } => "init",
        OobPayload::Verify { .. } => "verify",
    }
}

/// Wires the adversary's transport hooks into the network.
fn install_adversary(net: &SimNetwork, adversary: &Adversary, mallory: &Identity) {
    match adversary {
        Adversary::None | Adversary::InjectExtraParticipant => {}
        Adversary::FlipInBandBit { ordinal, bit } => {
            let (target, bit) = (*ordinal, *bit);
            net.set_in_band_hook(Box::new(move |ord, _, _, mut bytes| {
                if ord == target && !bytes.is_empty() {
                    let i = (bit / 8) % bytes.len();
                    bytes[i] ^= 1 << (bit % 8);
                }
                Some(bytes)
            }));
        }
        Adversary::DropMessage { ordinal } => {
            let target = *ordinal;
            net.set_in_band_hook(Box::new(move |ord, _, _, bytes| {
                (ord != target).then_some(bytes)
            }));
        }
        Adversary::SubstituteCommit { victim } => {
            let victim = *victim;
            let outer = mallory.outer;
            net.set_in_band_hook(Box::new(move |_, from, _, bytes| {
                if from == victim {
                    if let Ok(mut msg) = decode_message(&bytes) {
                        if matches!(msg.body, MessageBody::Commit { .. }) {
                            msg.body = MessageBody::Commit { outer };
                            return Some(encode_message(&msg));
                        }
                    }
                }
                Some(bytes)
            }));
        }
        Adversary::SubstituteReveal { victim } => {
            let victim = *victim;
            let inner = mallory.inner_bytes.clone();
            net.set_in_band_hook(Box::new(move |_, from, _, bytes| {
                if from == victim {
                    if let Ok(mut msg) = decode_message(&bytes) {
                        if matches!(msg.body, MessageBody::Reveal { .. }) {
                            msg.body = MessageBody::Reveal {
                                inner: inner.clone(),
                            };
                            return Some(encode_message(&msg));
                        }
                    }
                }
                Some(bytes)
            }));
        }
        Adversary::SplitRoster => {
            // Equivocating coordinator: odd-numbered participants receive a
            // roster whose coordinator slot holds Mallory's commitment. The
            // swapped slot is identified as the one never observed in a
            // COMMIT, so it is never the receiver's own (receivers would
            // abort with integrity-failure instead of detecting the OOB
            // mismatch this adversary is meant to exercise).
            let mallory_outer = mallory.outer;
            let mut committed: HashSet<[u8; 32]> = HashSet::new();
            net.set_in_band_hook(Box::new(move |_, from, to, bytes| {
                let Ok(mut msg) = decode_message(&bytes) else {
                    return Some(bytes);
                };
                match &mut msg.body {
                    MessageBody::Commit { outer } => {
                        committed.insert(*outer.as_bytes());
                    }
                    MessageBody::Roster { outers } if from == 0 && to % 2 == 1 => {
                        if let Some(slot) = outers
                            .iter_mut()
                            .find(|o| !committed.contains(o.as_bytes()))
                        {
                            *slot = mallory_outer;
                            // keep the wire-format requirement of a
                            // strictly ascending roster
                            outers.sort();
                            return Some(encode_message(&msg));
                        }
                    }
                    _ => {}
                }
                Some(bytes)
            }));
        }
        Adversary::SuppressAborts => {
            net.set_in_band_hook(Box::new(|_, _, _, bytes| {
                match decode_message(&bytes) {
                    Ok(Message {
                        body: MessageBody::Abort { .. },
                        ..
                    }) => None,
                    _ => Some(bytes),
                }
            }));
        }
        Adversary::TamperOobDigest { bit } => {
            // VERIFY layout: type(1) | session id(8) | digest(32)
            let bit = *bit;
            net.set_oob_hook(Box::new(move |mut bytes| {
                if bytes.first() == Some(&0x02) && bytes.len() == 41 {
                    let i = 9 + (bit / 8) % 32;
                    bytes[i] ^= 1 << (bit % 8);
                }
                bytes
            }));
        }
    }
}
