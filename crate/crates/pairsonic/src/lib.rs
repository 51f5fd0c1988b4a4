//! Infrastructure-less group pairing: n co-located devices exchange
//! authenticated contact cards using an untrusted in-band channel plus an
//! acoustic out-of-band broadcast for verification.
//!
//! Crate layout:
//! - [`wire`] — canonical byte formats, SHA-256 commitments, aggregate digest
//! - [`protocol`] — pure event-driven coordinator/participant state machines
//! - [`modem`] — MFSK data-over-sound codec with Reed-Solomon and CRC-32
//! - [`transport`] — in-memory, TCP, and WAV-file channel realizations
//! - [`sim`] — deterministic adversarial simulator over virtual time

pub mod modem;
pub mod protocol;
pub mod sim;
pub mod transport;
pub mod wire;
