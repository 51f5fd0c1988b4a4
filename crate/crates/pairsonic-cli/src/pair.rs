//! The interactive multi-process pairing demo: one session per process,
//! TCP in-band, WAV files in a shared directory as the OOB channel.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write as _};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use pairsonic::modem::ModemConfig;
use pairsonic::protocol::{
    Action, CoordinatorSession, Event, ParticipantSession, ProtocolConfig, SessionOutcome, TimerId,
};
use pairsonic::transport::{
    tcp_connect, tcp_listen, FileOobChannel, InBandChannel, OobChannel, TransportDescriptor,
};
use pairsonic::wire::{
    decode_message, decode_oob, encode_message, encode_oob, AbortReason, ContactCard, OobPayload,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::cards;
use crate::{EXIT_DECLINED, EXIT_FAILURE, EXIT_INTEGRITY, EXIT_OK, EXIT_TIMEOUT, EXIT_USAGE};

pub enum RoleArg {
    Coordinate { group_size: usize, listen: String },
    Join,
}

pub struct PairArgs {
    pub role: RoleArg,
    pub contact: PathBuf,
    pub oob_dir: PathBuf,
    pub auto_confirm: bool,
    pub import: String,
    pub out: Option<PathBuf>,
    pub timeout_ms: u64,
}

enum ImportSelection {
    All,
    None,
    Indices(Vec<usize>),
}

impl ImportSelection {
    fn parse(s: &str) -> Option<ImportSelection> {
        match s {
            "all" => Some(ImportSelection::All),
            "none" => Some(ImportSelection::None),
            _ => {
                let ix: Result<Vec<usize>, _> = s.split(',').map(str::parse).collect();
                Some(ImportSelection::Indices(ix.ok()?))
            }
        }
    }

    fn apply(&self, cards: Vec<ContactCard>) -> Vec<ContactCard> {
        match self {
            ImportSelection::All => cards,
            ImportSelection::None => Vec::new(),
            ImportSelection::Indices(ix) => cards
                .into_iter()
                .enumerate()
                .filter(|(i, _)| ix.contains(i))
                .map(|(_, c)| c)
                .collect(),
        }
    }
}

enum Session {
    Coordinator(CoordinatorSession),
    Participant(ParticipantSession),
}

impl Session {
    fn handle_event(&mut self, event: Event) -> Vec<Action> {
        match self {
            Session::Coordinator(s) => s.handle_event(event),
            Session::Participant(s) => s.handle_event(event),
        }
        .unwrap_or_default()
    }

    fn is_terminal(&self) -> bool {
        match self {
            Session::Coordinator(s) => s.is_terminal(),
            Session::Participant(s) => s.is_terminal(),
        }
    }

    fn outcome(&self) -> Option<SessionOutcome> {
        match self {
            Session::Coordinator(s) => s.outcome().ok(),
            Session::Participant(s) => s.outcome().ok(),
        }
    }
}

enum InBand {
    Listening(pairsonic::transport::TcpCoordinatorChannel),
    Connected(pairsonic::transport::TcpParticipantChannel),
    /// Participant before the OOB announcement names the coordinator.
    Unconnected,
}

impl InBand {
    fn channel(&mut self) -> Option<&mut dyn InBandChannel> {
        match self {
            InBand::Listening(c) => Some(c),
            InBand::Connected(c) => Some(c),
            InBand::Unconnected => None,
        }
    }
}

struct Pairing {
    session: Session,
    inband: InBand,
    oob: FileOobChannel,
    timers: HashMap<TimerId, Instant>,
    pending: VecDeque<Event>,
    group_size: usize,
    auto_confirm: bool,
    import: ImportSelection,
    out: Option<PathBuf>,
}

pub fn run(args: PairArgs) -> u8 {
    let Some(import) = ImportSelection::parse(&args.import) else {
        eprintln!("error: --import must be all, none, or a comma-separated index list");
        return EXIT_USAGE;
    };
    let card_text = match std::fs::read_to_string(&args.contact) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", args.contact.display());
            return EXIT_USAGE;
        }
    };
    let card = match cards::parse_single_card(&card_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    if !args.oob_dir.is_dir() {
        eprintln!("error: --oob-dir {} is not a directory", args.oob_dir.display());
        return EXIT_USAGE;
    }
    let config = ProtocolConfig {
        round_timeout_ms: args.timeout_ms,
        ..ProtocolConfig::default()
    };
    let mut rng = StdRng::from_os_rng();
    let oob = FileOobChannel::new(args.oob_dir.clone(), ModemConfig::default());

    let (session, inband, initial_actions, group_size) = match args.role {
        RoleArg::Coordinate { group_size, listen } => {
            let Ok(TransportDescriptor::Tcp { host, port }) = TransportDescriptor::parse(&listen)
            else {
                eprintln!("error: --listen must look like tcp:host:port");
                return EXIT_USAGE;
            };
            let channel = match tcp_listen(&host, port) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_FAILURE;
                }
            };
            let descriptor = format!("tcp:{host}:{}", channel.local_port());
            match CoordinatorSession::new(config, group_size, card, descriptor, &mut rng) {
                Ok((s, a)) => (Session::Coordinator(s), InBand::Listening(channel), a, group_size),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        }
        RoleArg::Join => match ParticipantSession::new(config, card, &mut rng) {
            Ok((s, a)) => (Session::Participant(s), InBand::Unconnected, a, 0),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
    };

    let mut pairing = Pairing {
        session,
        inband,
        oob,
        timers: HashMap::new(),
        pending: VecDeque::new(),
        group_size,
        auto_confirm: args.auto_confirm,
        import,
        out: args.out,
    };
    for action in initial_actions {
        pairing.execute(action);
    }
    pairing.event_loop()
}

impl Pairing {
    fn event_loop(&mut self) -> u8 {
        while !self.session.is_terminal() {
            self.poll_sources();
            if self.pending.is_empty() {
                std::thread::sleep(Duration::from_millis(5));
                continue;
            }
            while let Some(event) = self.pending.pop_front() {
                for action in self.session.handle_event(event) {
                    self.execute(action);
                }
                if self.session.is_terminal() {
                    break;
                }
            }
        }
        match self.session.outcome() {
            Some(SessionOutcome::Finalized { cards }) => {
                println!("pairing complete: {} cards in the group", cards.len());
                EXIT_OK
            }
            Some(SessionOutcome::Aborted { reason, .. }) => {
                eprintln!("pairing aborted: {}", reason.label());
                match reason {
                    AbortReason::Timeout => EXIT_TIMEOUT,
                    AbortReason::OobMismatch | AbortReason::IntegrityFailure => EXIT_INTEGRITY,
                    AbortReason::UserDeclined => EXIT_DECLINED,
                }
            }
            None => EXIT_FAILURE,
        }
    }

    fn poll_sources(&mut self) {
        if let Some(channel) = self.inband.channel() {
            for handle in channel.poll_connected() {
                self.pending.push_back(Event::PeerConnected(handle));
            }
            loop {
                match channel.receive() {
                    Ok(Some((peer, frame))) => match decode_message(&frame) {
                        Ok(msg) => self.pending.push_back(Event::MessageReceived(peer, msg)),
                        Err(_) => self
                            .pending
                            .push_back(Event::MalformedMessageReceived(peer)),
                    },
                    Ok(None) | Err(_) => break,
                }
            }
        }
        match self.oob.poll() {
            Ok(payloads) => {
                for bytes in payloads {
                    match decode_oob(&bytes) {
                        Ok(payload) => {
                            if let OobPayload::Init { group_size, .. } = &payload {
                                self.group_size = *group_size as usize;
                            }
                            self.pending.push_back(Event::OobReceived(payload));
                        }
                        Err(_) => eprintln!("ignoring undecodable OOB payload"),
                    }
                }
            }
            Err(e) => eprintln!("OOB poll failed: {e}"),
        }
        let now = Instant::now();
        let due: Vec<TimerId> = self
            .timers
            .iter()
            .filter(|(_, at)| **at <= now)
            .map(|(&id, _)| id)
            .collect();
        for id in due {
            self.timers.remove(&id);
            self.pending.push_back(Event::TimerFired(id));
        }
    }

    fn execute(&mut self, action: Action) {
        match action {
            Action::Send(peer, msg) => {
                if let Some(channel) = self.inband.channel() {
                    let _ = channel.send(peer, &encode_message(&msg));
                }
            }
            Action::Broadcast(msg) => {
                if let Some(channel) = self.inband.channel() {
                    let _ = channel.broadcast(&encode_message(&msg));
                }
            }
            Action::EmitOob(payload) => {
                let bytes = encode_oob(&payload).expect("session emits valid payloads");
                if let Err(e) = self.oob.emit(&bytes) {
                    eprintln!("OOB emit failed: {e}");
                }
            }
            Action::Connect(descriptor) => self.connect(&descriptor),
            Action::SetTimer(id, ms) => {
                self.timers.insert(id, Instant::now() + Duration::from_millis(ms));
            }
            Action::CancelTimer(id) => {
                self.timers.remove(&id);
            }
            Action::DisplayLock => self.prompt_lock(),
            Action::DisplayContacts(cards) => {
                println!("group contact set ({} cards):", cards.len());
                for card in &cards {
                    println!("  - {}", card.name());
                }
                if let Some(path) = &self.out {
                    if let Err(e) = std::fs::write(path, cards::render_cards(&cards)) {
                        eprintln!("error: writing {}: {e}", path.display());
                    }
                }
            }
            Action::DisplayAbort(reason) => {
                eprintln!("ABORT: {}", reason.label());
            }
            Action::ImportContacts(cards) => {
                let selected = self.import.apply(cards);
                println!("imported {} peer card(s)", selected.len());
                for card in &selected {
                    println!("  + {}", card.name());
                }
            }
        }
    }

    fn connect(&mut self, descriptor: &str) {
        let Ok(TransportDescriptor::Tcp { host, port }) = TransportDescriptor::parse(descriptor)
        else {
            eprintln!("announced descriptor {descriptor:?} is not tcp; cannot join");
            self.pending.push_back(Event::TimerFired(u32::MAX)); // stale id, ignored
            return;
        };
        // the announcement proves the listener was up; tolerate brief races
        for attempt in 0..20 {
            match tcp_connect(&host, port) {
                Ok(channel) => {
                    self.inband = InBand::Connected(channel);
                    return;
                }
                Err(e) if attempt == 19 => eprintln!("connect to {descriptor} failed: {e}"),
                Err(_) => std::thread::sleep(Duration::from_millis(100)),
            }
        }
    }

    fn prompt_lock(&mut self) {
        println!("[LOCK] all {} commitments verified against the group digest", self.group_size);
        let confirmed = if self.auto_confirm {
            true
        } else {
            print!("All {} devices show the lock? [y/n] ", self.group_size);
            let _ = std::io::stdout().flush();
            let mut line = String::new();
            match std::io::stdin().lock().read_line(&mut line) {
                Ok(n) if n > 0 => matches!(line.trim(), "y" | "Y" | "yes"),
                _ => false, // EOF or read failure counts as a decline
            }
        };
        self.pending.push_back(Event::UserConfirmed(confirmed));
    }
}
