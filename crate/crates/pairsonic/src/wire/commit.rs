//! Two-level nested commitments and the group aggregate digest.
//!
//! The inner preimage binds a contact card together with the digests of a
//! success nonce and an abort nonce; the outer commitment is the digest of
//! the inner bytes. Revealing happens in stages: inner first, then one of
//! the two nonces depending on outcome.

use super::{digest, ContactCard, Digest, SessionId, WireError};
use crate::wire::{decode_contact_card, encode_contact_card};

const INNER_MAGIC: &[u8; 4] = b"PSIN";
const INNER_VERSION: u8 = 0x01;
const AGGREGATE_TAG: &[u8; 4] = b"PSAG";
const AGGREGATE_VERSION: u8 = 0x01;

/// Pre-committed success/abort nonce pair.
///
/// The success nonce is released only after user confirmation, the abort
/// nonce only on abort.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NoncePair {
    pub success_nonce: [u8; 32],
    pub abort_nonce: [u8; 32],
}

impl NoncePair {
    pub fn generate(rng: &mut dyn rand_core::RngCore) -> Self {
        let mut success_nonce = [0u8; 32];
        let mut abort_nonce = [0u8; 32];
        rng.fill_bytes(&mut success_nonce);
        loop {
            rng.fill_bytes(&mut abort_nonce);
            if abort_nonce != success_nonce {
                break;
            }
        }
        NoncePair {
            success_nonce,
            abort_nonce,
        }
    }
}

/// Parsed inner layer of a nested commitment.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InnerPreimage {
    pub h_success: Digest,
    pub h_abort: Digest,
    pub card: ContactCard,
}

impl InnerPreimage {
    /// Canonical PSIN byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let card_bytes = encode_contact_card(&self.card);
        let mut out = Vec::with_capacity(4 + 1 + 32 + 32 + 2 + card_bytes.len());
        out.extend_from_slice(INNER_MAGIC);
        out.push(INNER_VERSION);
        out.extend_from_slice(self.h_success.as_bytes());
        out.extend_from_slice(self.h_abort.as_bytes());
        out.extend_from_slice(&(card_bytes.len() as u16).to_be_bytes());
        out.extend_from_slice(&card_bytes);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < 4 + 1 + 32 + 32 + 2 {
            return Err(WireError::MalformedInner("truncated header"));
        }
        if &bytes[..4] != INNER_MAGIC {
            return Err(WireError::MalformedInner("bad magic"));
        }
        if bytes[4] != INNER_VERSION {
            return Err(WireError::MalformedInner("unsupported version"));
        }
        let mut h_success = [0u8; 32];
        h_success.copy_from_slice(&bytes[5..37]);
        let mut h_abort = [0u8; 32];
        h_abort.copy_from_slice(&bytes[37..69]);
        let card_len = u16::from_be_bytes([bytes[69], bytes[70]]) as usize;
        let card_bytes = &bytes[71..];
        if card_bytes.len() != card_len {
            return Err(WireError::MalformedInner("card length mismatch"));
        }
        let card =
            decode_contact_card(card_bytes).map_err(|_| WireError::MalformedInner("bad card"))?;
        Ok(InnerPreimage {
            h_success: Digest(h_success),
            h_abort: Digest(h_abort),
            card,
        })
    }

    /// The outer commitment over this preimage.
    pub fn commit(&self) -> OuterCommitment {
        OuterCommitment(digest(&self.to_bytes()))
    }
}

/// Outer layer: digest of the full inner preimage bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OuterCommitment(pub Digest);

impl OuterCommitment {
    pub fn as_bytes(&self) -> &[u8; 32] {
        self.0.as_bytes()
    }
}

/// Builds the nested commitment for a card and its nonce pair.
pub fn make_commitment(card: &ContactCard, nonces: &NoncePair) -> (InnerPreimage, OuterCommitment) {
    let inner = InnerPreimage {
        h_success: digest(&nonces.success_nonce),
        h_abort: digest(&nonces.abort_nonce),
        card: card.clone(),
    };
    let outer = inner.commit();
    (inner, outer)
}

/// Opens a nested commitment: accepts iff the bytes hash to `outer` and
/// parse as a valid inner preimage.
pub fn verify_inner(
    outer: &OuterCommitment,
    inner_bytes: &[u8],
) -> Result<InnerPreimage, WireError> {
    if digest(inner_bytes) != outer.0 {
        return Err(WireError::CommitmentMismatch);
    }
    InnerPreimage::parse(inner_bytes)
}

/// Order-invariant aggregate digest over the group's outer commitments.
pub fn aggregate(
    session_id: &SessionId,
    group_size: usize,
    outers: &[OuterCommitment],
) -> Result<Digest, WireError> {
    if outers.is_empty() || outers.len() != group_size {
        return Err(WireError::SizeMismatch {
            got: outers.len(),
            expected: group_size,
        });
    }
    let mut sorted: Vec<&OuterCommitment> = outers.iter().collect();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(WireError::DuplicateCommitment);
        }
    }
    let mut buf = Vec::with_capacity(4 + 1 + 8 + 1 + 32 * sorted.len());
    buf.extend_from_slice(AGGREGATE_TAG);
    buf.push(AGGREGATE_VERSION);
    buf.extend_from_slice(&session_id.0);
    buf.push(group_size as u8);
    for outer in sorted {
        buf.extend_from_slice(outer.as_bytes());
    }
    Ok(digest(&buf))
}

/// True iff `nonce` hashes to the committed digest.
pub fn verify_nonce(expected: &Digest, nonce: &[u8; 32]) -> bool {
    digest(nonce) == *expected
}
