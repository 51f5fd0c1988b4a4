//! Contact card and its canonical "CC1" byte encoding.
//!
//! Layout: `"PC" 0x01 | name_len u8 | name | key_len u8 (=32) | key |
//! ext_count u8 | (klen u8 | key | vlen u16be | value)*`. Extension keys
//! are stored sorted ascending bytewise, so equal cards always encode to
//! identical bytes.

use super::WireError;

pub const MAX_EXTENSIONS: usize = 16;

const MAGIC: &[u8; 2] = b"PC";
const VERSION: u8 = 0x01;

/// A user's identity payload: display name, opaque public key, extensions.
///
/// The public key is carried and authenticated as 32 opaque bytes; no key
/// operations are performed on it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContactCard {
    name: String,
    public_key: [u8; 32],
    extensions: Vec<(Vec<u8>, Vec<u8>)>,
}

impl ContactCard {
    /// Builds a card without extensions.
    pub fn new(name: impl Into<String>, public_key: [u8; 32]) -> Result<Self, WireError> {
        Self::with_extensions(name, public_key, Vec::new())
    }

    /// Builds a card with extensions; insertion order is irrelevant, keys
    /// are canonicalized to ascending bytewise order.
    pub fn with_extensions(
        name: impl Into<String>,
        public_key: [u8; 32],
        mut extensions: Vec<(Vec<u8>, Vec<u8>)>,
    ) -> Result<Self, WireError> {
        let name = name.into();
        if name.is_empty() || name.len() > 64 {
            return Err(WireError::InvalidCard("name length must be 1..=64 bytes"));
        }
        if extensions.len() > MAX_EXTENSIONS {
            return Err(WireError::InvalidCard("at most 16 extensions"));
        }
        extensions.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in extensions.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(WireError::InvalidCard("duplicate extension key"));
            }
        }
        for (k, v) in &extensions {
            if k.is_empty() || k.len() > 32 {
                return Err(WireError::InvalidCard("extension key length must be 1..=32"));
            }
            if v.len() > 1024 {
                return Err(WireError::InvalidCard("extension value exceeds 1024 bytes"));
            }
        }
        Ok(ContactCard {
            name,
            public_key,
            extensions,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn public_key(&self) -> &[u8; 32] {
        &self.public_key
    }

    pub fn extensions(&self) -> &[(Vec<u8>, Vec<u8>)] {
        &self.extensions
    }
}

/// Canonical encoding; identical cards yield identical bytes.
pub fn encode_contact_card(card: &ContactCard) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + card.name.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(card.name.len() as u8);
    out.extend_from_slice(card.name.as_bytes());
    out.push(32);
    out.extend_from_slice(&card.public_key);
    out.push(card.extensions.len() as u8);
    for (k, v) in &card.extensions {
        out.push(k.len() as u8);
        out.extend_from_slice(k);
        out.extend_from_slice(&(v.len() as u16).to_be_bytes());
        out.extend_from_slice(v);
    }
    out
}

/// Exact inverse of [`encode_contact_card`]; rejects trailing bytes.
pub fn decode_contact_card(bytes: &[u8]) -> Result<ContactCard, WireError> {
    let mut r = Reader(bytes);
    if r.take(2)? != MAGIC {
        return Err(WireError::MalformedCard("bad magic"));
    }
    if r.u8()? != VERSION {
        return Err(WireError::MalformedCard("unsupported version"));
    }
    let name_len = r.u8()? as usize;
    if name_len == 0 || name_len > 64 {
        return Err(WireError::MalformedCard("name length out of range"));
    }
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| WireError::MalformedCard("name is not UTF-8"))?
        .to_owned();
    if r.u8()? != 32 {
        return Err(WireError::MalformedCard("key length must be 32"));
    }
    let mut public_key = [0u8; 32];
    public_key.copy_from_slice(r.take(32)?);
    let ext_count = r.u8()? as usize;
    if ext_count > MAX_EXTENSIONS {
        return Err(WireError::MalformedCard("too many extensions"));
    }
    let mut extensions = Vec::with_capacity(ext_count);
    let mut prev_key: Option<Vec<u8>> = None;
    for _ in 0..ext_count {
        let klen = r.u8()? as usize;
        if klen == 0 || klen > 32 {
            return Err(WireError::MalformedCard("extension key length out of range"));
        }
        let key = r.take(klen)?.to_vec();
        if let Some(prev) = &prev_key {
            if *prev >= key {
                return Err(WireError::MalformedCard("extension keys not strictly ascending"));
            }
        }
        let vlen = r.u16_be()? as usize;
        if vlen > 1024 {
            return Err(WireError::MalformedCard("extension value too long"));
        }
        let value = r.take(vlen)?.to_vec();
        prev_key = Some(key.clone());
        extensions.push((key, value));
    }
    if !r.0.is_empty() {
        return Err(WireError::MalformedCard("trailing bytes"));
    }
    Ok(ContactCard {
        name,
        public_key,
        extensions,
    })
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.0.len() < n {
            return Err(WireError::MalformedCard("truncated"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16_be(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }
}
