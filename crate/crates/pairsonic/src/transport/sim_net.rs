//! In-memory network for deterministic simulation.
//!
//! One FIFO per (sender, receiver) pair; delivery order is fixed by the
//! polling order of the simulation loop, so identical seeds and sends
//! produce identical traces. An interposition hook lets an adversary
//! observe, modify, drop, or inject in-band bytes; the OOB bus delivers
//! identical bytes to all listeners and exposes a separate tamper hook
//! used only to test detection behavior.

use std::cell::RefCell;
use std::collections::{BTreeMap, VecDeque};
use std::rc::Rc;

use super::{InBandChannel, OobChannel, TransportError};
use crate::protocol::PeerHandle;

pub type DeviceId = usize;

/// Hook over in-band sends: `(ordinal, from, to, bytes)` -> replacement
/// bytes, or `None` to drop the message.
pub type InBandHook = Box<dyn FnMut(u64, DeviceId, DeviceId, Vec<u8>) -> Option<Vec<u8>>>;
/// Hook over OOB emissions; all listeners still receive identical bytes.
pub type OobHook = Box<dyn FnMut(Vec<u8>) -> Vec<u8>>;

struct Inner {
    #[allow(dead_code)]
    seed: u64,
    device_count: usize,
    queues: BTreeMap<(DeviceId, DeviceId), VecDeque<Vec<u8>>>,
    pending_connects: BTreeMap<DeviceId, Vec<PeerHandle>>,
    connected: Vec<(DeviceId, DeviceId)>,
    oob_inboxes: BTreeMap<DeviceId, VecDeque<Vec<u8>>>,
    in_band_hook: Option<InBandHook>,
    oob_hook: Option<OobHook>,
    ordinal: u64,
}

impl Inner {
    fn send(&mut self, from: DeviceId, to: DeviceId, bytes: &[u8]) {
        let ordinal = self.ordinal;
        self.ordinal += 1;
        let bytes = match &mut self.in_band_hook {
            Some(hook) => match hook(ordinal, from, to, bytes.to_vec()) {
                Some(bytes) => bytes,
                None => return, // dropped by the adversary
            },
            None => bytes.to_vec(),
        };
        self.queues.entry((from, to)).or_default().push_back(bytes);
    }
}

/// Shared simulated network; clone-able handle.
#[derive(Clone)]
pub struct SimNetwork(Rc<RefCell<Inner>>);

impl SimNetwork {
    pub fn new(seed: u64, device_count: usize) -> Self {
        SimNetwork(Rc::new(RefCell::new(Inner {
            seed,
            device_count,
            queues: BTreeMap::new(),
            pending_connects: BTreeMap::new(),
            connected: Vec::new(),
            oob_inboxes: BTreeMap::new(),
            in_band_hook: None,
            oob_hook: None,
            ordinal: 0,
        })))
    }

    pub fn set_in_band_hook(&self, hook: InBandHook) {
        self.0.borrow_mut().in_band_hook = Some(hook);
    }

    pub fn set_oob_hook(&self, hook: OobHook) {
        self.0.borrow_mut().oob_hook = Some(hook);
    }

    /// Establishes a bidirectional connection; both sides observe it via
    /// `poll_connected`, each using the remote device id as peer handle.
    pub fn connect(&self, from: DeviceId, to: DeviceId) {
        let mut inner = self.0.borrow_mut();
        if inner.connected.contains(&(from, to)) {
            return;
        }
        inner.connected.push((from, to));
        inner.connected.push((to, from));
        inner
            .pending_connects
            .entry(to)
            .or_default()
            .push(from as PeerHandle);
        inner
            .pending_connects
            .entry(from)
            .or_default()
            .push(to as PeerHandle);
    }

    /// Injects an in-band message as if `from` had sent it (adversarial
    /// use; still passes through the interposition hook).
    pub fn inject(&self, from: DeviceId, to: DeviceId, bytes: &[u8]) {
        self.0.borrow_mut().send(from, to, bytes);
    }

    pub fn endpoint(&self, device: DeviceId) -> SimEndpoint {
        SimEndpoint {
            net: self.clone(),
            device,
        }
    }

    pub fn oob_endpoint(&self, device: DeviceId) -> SimOobEndpoint {
        SimOobEndpoint {
            net: self.clone(),
            device,
        }
    }

    /// True when no queued message or pending connect remains.
    pub fn quiescent(&self) -> bool {
        let inner = self.0.borrow();
        inner.queues.values().all(VecDeque::is_empty)
            && inner.pending_connects.values().all(Vec::is_empty)
            && inner.oob_inboxes.values().all(VecDeque::is_empty)
    }
}

/// One device's view of the in-band network.
pub struct SimEndpoint {
    net: SimNetwork,
    device: DeviceId,
}

impl InBandChannel for SimEndpoint {
    fn send(&mut self, peer: PeerHandle, frame: &[u8]) -> Result<(), TransportError> {
        let mut inner = self.net.0.borrow_mut();
        let to = peer as DeviceId;
        if !inner.connected.contains(&(self.device, to)) {
            return Err(TransportError::UnknownPeer(peer));
        }
        inner.send(self.device, to, frame);
        Ok(())
    }

    fn broadcast(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        let mut inner = self.net.0.borrow_mut();
        let targets: Vec<DeviceId> = inner
            .connected
            .iter()
            .filter(|(a, _)| *a == self.device)
            .map(|(_, b)| *b)
            .collect();
        for to in targets {
            inner.send(self.device, to, frame);
        }
        Ok(())
    }

    fn receive(&mut self) -> Result<Option<(PeerHandle, Vec<u8>)>, TransportError> {
        let mut inner = self.net.0.borrow_mut();
        // fixed ascending sender order keeps delivery deterministic
        let device = self.device;
        for ((from, _), queue) in inner
            .queues
            .iter_mut()
            .filter(|((_, to), _)| *to == device)
        {
            if let Some(bytes) = queue.pop_front() {
                return Ok(Some((*from as PeerHandle, bytes)));
            }
        }
        Ok(None)
    }

    fn poll_connected(&mut self) -> Vec<PeerHandle> {
        std::mem::take(
            self.net
                .0
                .borrow_mut()
                .pending_connects
                .entry(self.device)
                .or_default(),
        )
    }
}

/// One device's view of the OOB broadcast bus.
pub struct SimOobEndpoint {
    net: SimNetwork,
    device: DeviceId,
}

impl OobChannel for SimOobEndpoint {
    fn emit(&mut self, payload: &[u8]) -> Result<(), TransportError> {
        let mut inner = self.net.0.borrow_mut();
        let bytes = match &mut inner.oob_hook {
            Some(hook) => hook(payload.to_vec()),
            None => payload.to_vec(),
        };
        let device_count = inner.device_count;
        for listener in (0..device_count).filter(|d| *d != self.device) {
            inner
                .oob_inboxes
                .entry(listener)
                .or_default()
                .push_back(bytes.clone());
        }
        Ok(())
    }

    fn poll(&mut self) -> Result<Vec<Vec<u8>>, TransportError> {
        let mut inner = self.net.0.borrow_mut();
        Ok(inner
            .oob_inboxes
            .entry(self.device)
            .or_default()
            .drain(..)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delivery_is_fifo_and_deterministic() {
        let run = || {
            let net = SimNetwork::new(1, 3);
            net.connect(1, 0);
            net.connect(2, 0);
            let mut p1 = net.endpoint(1);
            let mut p2 = net.endpoint(2);
            p1.send(0, b"a1").unwrap();
            p2.send(0, b"b1").unwrap();
            p1.send(0, b"a2").unwrap();
            let mut coord = net.endpoint(0);
            let mut seen = Vec::new();
            while let Some((from, bytes)) = coord.receive().unwrap() {
                seen.push((from, bytes));
            }
            seen
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn hook_substitutes_bytes() {
        let net = SimNetwork::new(1, 2);
        net.connect(1, 0);
        net.set_in_band_hook(Box::new(|_, _, _, mut bytes| {
            bytes[0] ^= 0xFF;
            Some(bytes)
        }));
        net.endpoint(1).send(0, b"\x00rest").unwrap();
        let (_, bytes) = net.endpoint(0).receive().unwrap().unwrap();
        assert_eq!(bytes[0], 0xFF);
    }

    #[test]
    fn hook_drops_messages() {
        let net = SimNetwork::new(1, 2);
        net.connect(1, 0);
        net.set_in_band_hook(Box::new(|ordinal, _, _, bytes| {
            if ordinal == 0 {
                None
            } else {
                Some(bytes)
            }
        }));
        let mut p = net.endpoint(1);
        p.send(0, b"dropped").unwrap();
        p.send(0, b"kept").unwrap();
        let (_, bytes) = net.endpoint(0).receive().unwrap().unwrap();
        assert_eq!(bytes, b"kept");
        assert!(net.endpoint(0).receive().unwrap().is_none());
    }

    #[test]
    fn oob_reaches_all_listeners_identically() {
        let net = SimNetwork::new(1, 4);
        net.oob_endpoint(0).emit(b"hello all").unwrap();
        for d in 1..4 {
            assert_eq!(net.oob_endpoint(d).poll().unwrap(), vec![b"hello all".to_vec()]);
        }
        // emitter does not hear itself
        assert!(net.oob_endpoint(0).poll().unwrap().is_empty());
    }

    #[test]
    fn send_requires_connection() {
        let net = SimNetwork::new(1, 2);
        assert!(matches!(
            net.endpoint(1).send(0, b"x"),
            Err(TransportError::UnknownPeer(0))
        ));
    }
}
