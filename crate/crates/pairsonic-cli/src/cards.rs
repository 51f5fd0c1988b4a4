//! Structured-text contact card files.
//!
//! One card per block, blocks separated by blank lines:
//!
//! ```text
//! name: Alice
//! key: <64 hex chars>
//! ext: note=coffee friend
//! ```
//!
//! `ext:` lines are optional and repeatable; the part before the first
//! `=` is the extension key.

use anyhow::{anyhow, bail, Context, Result};
use pairsonic::wire::ContactCard;

pub fn parse_card_file(text: &str) -> Result<Vec<ContactCard>> {
    let mut cards = Vec::new();
    for (i, block) in text.split("\n\n").enumerate() {
        let mut name: Option<String> = None;
        let mut key: Option<[u8; 32]> = None;
        let mut extensions: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
        for line in block.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (field, value) = line
                .split_once(':')
                .ok_or_else(|| anyhow!("card {i}: line without `field:` prefix: {line:?}"))?;
            let value = value.trim();
            match field.trim() {
                "name" => name = Some(value.to_string()),
                "key" => key = Some(parse_hex_key(value).context(format!("card {i}"))?),
                "ext" => {
                    let (k, v) = value
                        .split_once('=')
                        .ok_or_else(|| anyhow!("card {i}: ext without `=`: {value:?}"))?;
                    extensions.push((k.as_bytes().to_vec(), v.as_bytes().to_vec()));
                }
                other => bail!("card {i}: unknown field {other:?}"),
            }
        }
        if name.is_none() && key.is_none() && extensions.is_empty() {
            continue; // stray blank block
        }
        let name = name.ok_or_else(|| anyhow!("card {i}: missing name"))?;
        let key = key.ok_or_else(|| anyhow!("card {i}: missing key"))?;
        let card = ContactCard::with_extensions(name, key, extensions)
            .map_err(|e| anyhow!("card {i}: {e}"))?;
        cards.push(card);
    }
    if cards.is_empty() {
        bail!("no contact cards in file");
    }
    Ok(cards)
}

pub fn parse_single_card(text: &str) -> Result<ContactCard> {
    let mut cards = parse_card_file(text)?;
    if cards.len() != 1 {
        bail!("expected exactly one contact card, found {}", cards.len());
    }
    Ok(cards.remove(0))
}

pub fn render_cards(cards: &[ContactCard]) -> String {
    let mut out = String::new();
    for (i, card) in cards.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("name: {}\n", card.name()));
        out.push_str("key: ");
        for b in card.public_key() {
            out.push_str(&format!("{b:02x}"));
        }
        out.push('\n');
        for (k, v) in card.extensions() {
            out.push_str(&format!(
                "ext: {}={}\n",
                String::from_utf8_lossy(k),
                String::from_utf8_lossy(v)
            ));
        }
    }
    out
}

fn parse_hex_key(s: &str) -> Result<[u8; 32]> {
    if s.len() != 64 || !s.chars().all(|c| c.is_ascii_hexdigit()) {
        bail!("key must be 64 hex characters");
    }
    let mut key = [0u8; 32];
    for (i, byte) in key.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).expect("validated hex");
    }
    Ok(key)
}
