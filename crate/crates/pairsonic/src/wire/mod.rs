//! Canonical byte encodings, hashing, nested commitments, and the aggregate
//! digest. Everything here is a pure function over byte sequences; the rest
//! of the crate builds on these bit-exact formats.

mod card;
mod commit;
mod message;
mod oob;

pub use card::{decode_contact_card, encode_contact_card, ContactCard, MAX_EXTENSIONS};
pub use commit::{
    aggregate, make_commitment, verify_inner, verify_nonce, InnerPreimage, NoncePair,
    OuterCommitment,
};
pub use message::{
    decode_frame_payload, decode_message, encode_message, AbortReason, Message, MessageBody,
};
pub use oob::{decode_oob, encode_oob, OobPayload, MAX_GROUP_SIZE, MIN_GROUP_SIZE};

use sha2::{Digest as _, Sha256};

/// Errors produced by the wire formats.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("invalid contact card: {0}")]
    InvalidCard(&'static str),
    #[error("malformed contact card: {0}")]
    MalformedCard(&'static str),
    #[error("commitment mismatch")]
    CommitmentMismatch,
    #[error("malformed inner preimage: {0}")]
    MalformedInner(&'static str),
    #[error("aggregate size mismatch: got {got}, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("duplicate commitment")]
    DuplicateCommitment,
    #[error("malformed message: {0}")]
    MalformedMessage(&'static str),
    #[error("malformed OOB payload: {0}")]
    MalformedOob(&'static str),
}

/// 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

/// SHA-256 over a byte sequence.
pub fn digest(bytes: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update(bytes);
    Digest(h.finalize().into())
}

/// Session identifier, drawn from the coordinator's RNG at session start.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SessionId(pub [u8; 8]);

impl SessionId {
    pub fn generate(rng: &mut dyn rand_core::RngCore) -> Self {
        let mut id = [0u8; 8];
        rng.fill_bytes(&mut id);
        SessionId(id)
    }
}

impl std::fmt::Debug for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SessionId(")?;
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // FIPS 180-4 test vectors.
    #[test]
    fn sha256_empty() {
        assert_eq!(
            digest(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn sha256_abc() {
        assert_eq!(
            digest(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn digest_is_32_bytes() {
        assert_eq!(digest(b"anything").as_bytes().len(), 32);
    }
}
