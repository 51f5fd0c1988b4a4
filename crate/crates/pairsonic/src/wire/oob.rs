//! Out-of-band payloads carried over the acoustic channel.
//!
//! INIT announces a session (id, group size, transport descriptor) so
//! participants can join; VERIFY broadcasts the aggregate digest every
//! device must match before proceeding.

use super::{Digest, SessionId, WireError};

pub const MIN_GROUP_SIZE: usize = 2;
pub const MAX_GROUP_SIZE: usize = 16;

const TAG_INIT: u8 = 0x01;
const TAG_VERIFY: u8 = 0x02;
const OOB_VERSION: u8 = 0x01;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OobPayload {
    Init {
        session_id: SessionId,
        group_size: u8,
        transport_descriptor: String,
    },
    Verify {
        session_id: SessionId,
        aggregate: Digest,
    },
}

impl OobPayload {
    pub fn session_id(&self) -> &SessionId {
        match self {
            OobPayload::Init { session_id, .. } => session_id,
            OobPayload::Verify { session_id, .. } => session_id,
        }
    }
}

pub fn encode_oob(payload: &OobPayload) -> Result<Vec<u8>, WireError> {
    match payload {
        OobPayload::Init {
            session_id,
            group_size,
            transport_descriptor,
        } => {
            let size = *group_size as usize;
            if !(MIN_GROUP_SIZE..=MAX_GROUP_SIZE).contains(&size) {
                return Err(WireError::MalformedOob("group size out of range"));
            }
            let desc = transport_descriptor.as_bytes();
            if desc.is_empty() || desc.len() > 64 {
                return Err(WireError::MalformedOob("descriptor length out of range"));
            }
            let mut out = Vec::with_capacity(12 + desc.len());
            out.push(TAG_INIT);
            out.push(OOB_VERSION);
            out.extend_from_slice(&session_id.0);
            out.push(*group_size);
            out.push(desc.len() as u8);
            out.extend_from_slice(desc);
            Ok(out)
        }
        OobPayload::Verify { session_id, aggregate } => {
            let mut out = Vec::with_capacity(41);
            out.push(TAG_VERIFY);
            out.extend_from_slice(&session_id.0);
            out.extend_from_slice(aggregate.as_bytes());
            Ok(out)
        }
    }
}

pub fn decode_oob(bytes: &[u8]) -> Result<OobPayload, WireError> {
    if bytes.is_empty() {
        return Err(WireError::MalformedOob("empty payload"));
    }
    match bytes[0] {
        TAG_INIT => {
            if bytes.len() < 12 {
                return Err(WireError::MalformedOob("truncated init"));
            }
            if bytes[1] != OOB_VERSION {
                return Err(WireError::MalformedOob("unsupported version"));
            }
            let mut session_id = [0u8; 8];
            session_id.copy_from_slice(&bytes[2..10]);
            let group_size = bytes[10];
            if !(MIN_GROUP_SIZE..=MAX_GROUP_SIZE).contains(&(group_size as usize)) {
                return Err(WireError::MalformedOob("group size out of range"));
            }
            let desc_len = bytes[11] as usize;
            if desc_len == 0 || desc_len > 64 {
                return Err(WireError::MalformedOob("descriptor length out of range"));
            }
            if bytes.len() != 12 + desc_len {
                return Err(WireError::MalformedOob("init length mismatch"));
            }
            let transport_descriptor = std::str::from_utf8(&bytes[12..])
                .map_err(|_| WireError::MalformedOob("descriptor is not UTF-8"))?
                .to_owned();
            Ok(OobPayload::Init {
                session_id: SessionId(session_id),
                group_size,
                transport_descriptor,
            })
        }
        TAG_VERIFY => {
            if bytes.len() != 41 {
                return Err(WireError::MalformedOob("verify length mismatch"));
            }
            let mut session_id = [0u8; 8];
            session_id.copy_from_slice(&bytes[1..9]);
            let mut aggregate = [0u8; 32];
            aggregate.copy_from_slice(&bytes[9..41]);
            Ok(OobPayload::Verify {
                session_id: SessionId(session_id),
                aggregate: Digest(aggregate),
            })
        }
        _ => Err(WireError::MalformedOob("unknown payload tag")),
    }
}
