//! In-band session messages and their length-prefixed wire format.
//!
//! Frame layout: `u32be length | type u8 | session_id (8 bytes) | body`,
//! where the length counts everything after the prefix.

use super::{OuterCommitment, SessionId, WireError};
use crate::wire::Digest;

const TYPE_HELLO: u8 = 0x00;
const TYPE_COMMIT: u8 = 0x01;
const TYPE_ROSTER: u8 = 0x02;
const TYPE_REVEAL: u8 = 0x03;
const TYPE_REVEAL_SET: u8 = 0x04;
const TYPE_CONFIRM: u8 = 0x05;
const TYPE_SUCCESS_SET: u8 = 0x06;
const TYPE_ABORT: u8 = 0x07;

/// Why a session aborted.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum AbortReason {
    UserDeclined,
    OobMismatch,
    Timeout,
    IntegrityFailure,
}

impl AbortReason {
    pub fn code(self) -> u8 {
        match self {
            AbortReason::UserDeclined => 0x01,
            AbortReason::OobMismatch => 0x02,
            AbortReason::Timeout => 0x03,
            AbortReason::IntegrityFailure => 0x04,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0x01 => Some(AbortReason::UserDeclined),
            0x02 => Some(AbortReason::OobMismatch),
            0x03 => Some(AbortReason::Timeout),
            0x04 => Some(AbortReason::IntegrityFailure),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AbortReason::UserDeclined => "user-declined",
            AbortReason::OobMismatch => "oob-mismatch",
            AbortReason::Timeout => "timeout",
            AbortReason::IntegrityFailure => "integrity-failure",
        }
    }
}

/// Message body variants. Inner preimages travel as raw bytes so that the
/// receiver verifies exactly what was sent.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MessageBody {
    Hello { protocol_version: u8 },
    Commit { outer: OuterCommitment },
    /// All outer commitments, strictly ascending bytewise.
    Roster { outers: Vec<OuterCommitment> },
    Reveal { inner: Vec<u8> },
    RevealSet { inners: Vec<Vec<u8>> },
    Confirm { success_nonce: [u8; 32] },
    SuccessSet { nonces: Vec<[u8; 32]> },
    Abort { abort_nonce: [u8; 32], reason: AbortReason },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Message {
    pub session_id: SessionId,
    pub body: MessageBody,
}

impl MessageBody {
    fn type_byte(&self) -> u8 {
        match self {
            MessageBody::Hello { .. } => TYPE_HELLO,
            MessageBody::Commit { .. } => TYPE_COMMIT,
            MessageBody::Roster { .. } => TYPE_ROSTER,
            MessageBody::Reveal { .. } => TYPE_REVEAL,
            MessageBody::RevealSet { .. } => TYPE_REVEAL_SET,
            MessageBody::Confirm { .. } => TYPE_CONFIRM,
            MessageBody::SuccessSet { .. } => TYPE_SUCCESS_SET,
            MessageBody::Abort { .. } => TYPE_ABORT,
        }
    }
}

pub fn encode_message(msg: &Message) -> Vec<u8> {
    let mut body = Vec::new();
    match &msg.body {
        MessageBody::Hello { protocol_version } => body.push(*protocol_version),
        MessageBody::Commit { outer } => body.extend_from_slice(outer.as_bytes()),
        MessageBody::Roster { outers } => {
            body.push(outers.len() as u8);
            for outer in outers {
                body.extend_from_slice(outer.as_bytes());
            }
        }
        MessageBody::Reveal { inner } => body.extend_from_slice(inner),
        MessageBody::RevealSet { inners } => {
            body.push(inners.len() as u8);
            for inner in inners {
                body.extend_from_slice(&(inner.len() as u16).to_be_bytes());
                body.extend_from_slice(inner);
            }
        }
        MessageBody::Confirm { success_nonce } => body.extend_from_slice(success_nonce),
        MessageBody::SuccessSet { nonces } => {
            body.push(nonces.len() as u8);
            for nonce in nonces {
                body.extend_from_slice(nonce);
            }
        }
        MessageBody::Abort { abort_nonce, reason } => {
            body.extend_from_slice(abort_nonce);
            body.push(reason.code());
        }
    }
    let payload_len = 1 + 8 + body.len();
    let mut out = Vec::with_capacity(4 + payload_len);
    out.extend_from_slice(&(payload_len as u32).to_be_bytes());
    out.push(msg.body.type_byte());
    out.extend_from_slice(&msg.session_id.0);
    out.extend_from_slice(&body);
    out
}

/// Decodes one complete frame; the buffer must contain exactly one message.
pub fn decode_message(bytes: &[u8]) -> Result<Message, WireError> {
    if bytes.len() < 4 {
        return Err(WireError::MalformedMessage("missing length prefix"));
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let rest = &bytes[4..];
    if rest.len() != len {
        return Err(WireError::MalformedMessage("length prefix mismatch"));
    }
    decode_frame_payload(rest)
}

/// Decodes the payload of a frame (the bytes after the length prefix).
pub fn decode_frame_payload(payload: &[u8]) -> Result<Message, WireError> {
    if payload.len() < 1 + 8 {
        return Err(WireError::MalformedMessage("truncated header"));
    }
    let type_byte = payload[0];
    let mut session_id = [0u8; 8];
    session_id.copy_from_slice(&payload[1..9]);
    let body = &payload[9..];
    let body = match type_byte {
        TYPE_HELLO => {
            let [protocol_version] = exact::<1>(body)?;
            MessageBody::Hello { protocol_version }
        }
        TYPE_COMMIT => MessageBody::Commit {
            outer: OuterCommitment(Digest(exact::<32>(body)?)),
        },
        TYPE_ROSTER => {
            if body.is_empty() {
                return Err(WireError::MalformedMessage("truncated roster"));
            }
            let n = body[0] as usize;
            if body.len() != 1 + 32 * n {
                return Err(WireError::MalformedMessage("roster length mismatch"));
            }
            let mut outers = Vec::with_capacity(n);
            for chunk in body[1..].chunks_exact(32) {
                let mut value = [0u8; 32];
                value.copy_from_slice(chunk);
                let outer = OuterCommitment(Digest(value));
                if let Some(prev) = outers.last() {
                    if *prev >= outer {
                        return Err(WireError::MalformedMessage("roster not strictly ascending"));
                    }
                }
                outers.push(outer);
            }
            MessageBody::Roster { outers }
        }
        TYPE_REVEAL => {
            if body.is_empty() {
                return Err(WireError::MalformedMessage("empty reveal"));
            }
            MessageBody::Reveal { inner: body.to_vec() }
        }
        TYPE_REVEAL_SET => {
            if body.is_empty() {
                return Err(WireError::MalformedMessage("truncated reveal set"));
            }
            let n = body[0] as usize;
            let mut rest = &body[1..];
            let mut inners = Vec::with_capacity(n);
            for _ in 0..n {
                if rest.len() < 2 {
                    return Err(WireError::MalformedMessage("truncated reveal entry"));
                }
                let entry_len = u16::from_be_bytes([rest[0], rest[1]]) as usize;
                rest = &rest[2..];
                if rest.len() < entry_len {
                    return Err(WireError::MalformedMessage("truncated reveal entry"));
                }
                inners.push(rest[..entry_len].to_vec());
                rest = &rest[entry_len..];
            }
            if !rest.is_empty() {
                return Err(WireError::MalformedMessage("trailing bytes in reveal set"));
            }
            MessageBody::RevealSet { inners }
        }
        TYPE_CONFIRM => MessageBody::Confirm {
            success_nonce: exact::<32>(body)?,
        },
        TYPE_SUCCESS_SET => {
            if body.is_empty() {
                return Err(WireError::MalformedMessage("truncated success set"));
            }
            let n = body[0] as usize;
            if body.len() != 1 + 32 * n {
                return Err(WireError::MalformedMessage("success set length mismatch"));
            }
            let mut nonces = Vec::with_capacity(n);
            for chunk in body[1..].chunks_exact(32) {
                let mut nonce = [0u8; 32];
                nonce.copy_from_slice(chunk);
                nonces.push(nonce);
            }
            MessageBody::SuccessSet { nonces }
        }
        TYPE_ABORT => {
            let raw = exact::<33>(body)?;
            let mut abort_nonce = [0u8; 32];
            abort_nonce.copy_from_slice(&raw[..32]);
            let reason = AbortReason::from_code(raw[32])
                .ok_or(WireError::MalformedMessage("unknown abort reason"))?;
            MessageBody::Abort { abort_nonce, reason }
        }
        _ => return Err(WireError::MalformedMessage("unknown message type")),
    };
    Ok(Message {
        session_id: SessionId(session_id),
        body,
    })
}

fn exact<const N: usize>(body: &[u8]) -> Result<[u8; N], WireError> {
    if body.len() != N {
        return Err(WireError::MalformedMessage("body length mismatch"));
    }
    let mut out = [0u8; N];
    out.copy_from_slice(body);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::digest;

    fn sid() -> SessionId {
        SessionId([0xaa, 0xbb, 0xcc, 0xdd, 0x01, 0x02, 0x03, 0x04])
    }

    #[test]
    fn commit_round_trip() {
        for i in 0..8u8 {
            let msg = Message {
                session_id: sid(),
                body: MessageBody::Commit {
                    outer: OuterCommitment(digest(&[i])),
                },
            };
            assert_eq!(decode_message(&encode_message(&msg)).unwrap(), msg);
        }
    }

    #[test]
    fn unsorted_roster_rejected() {
        let a = OuterCommitment(digest(b"a"));
        let b = OuterCommitment(digest(b"b"));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let msg = Message {
            session_id: sid(),
            body: MessageBody::Roster { outers: vec![hi, lo] },
        };
        assert_eq!(
            decode_message(&encode_message(&msg)).unwrap_err(),
            WireError::MalformedMessage("roster not strictly ascending")
        );
    }

    #[test]
    fn length_prefix_beyond_buffer_rejected() {
        let msg = Message {
            session_id: sid(),
            body: MessageBody::Hello { protocol_version: 1 },
        };
        let mut bytes = encode_message(&msg);
        bytes[3] += 4; // claim 4 more bytes than present
        assert_eq!(
            decode_message(&bytes).unwrap_err(),
            WireError::MalformedMessage("length prefix mismatch")
        );
    }

    #[test]
    fn unknown_type_rejected() {
        let msg = Message {
            session_id: sid(),
            body: MessageBody::Hello { protocol_version: 1 },
        };
        let mut bytes = encode_message(&msg);
        bytes[4] = 0x7f;
        assert_eq!(
            decode_message(&bytes).unwrap_err(),
            WireError::MalformedMessage("unknown message type")
        );
    }

    #[test]
    fn abort_round_trip_all_reasons() {
        for reason in [
            AbortReason::UserDeclined,
            AbortReason::OobMismatch,
            AbortReason::Timeout,
            AbortReason::IntegrityFailure,
        ] {
            let msg = Message {
                session_id: sid(),
                body: MessageBody::Abort {
                    abort_nonce: [0x5a; 32],
                    reason,
                },
            };
            assert_eq!(decode_message(&encode_message(&msg)).unwrap(), msg);
        }
    }
}
