//! Frame layout: `len u8 | payload | crc32 (4 bytes over len||payload) |
//! rs parity over (len||payload||crc32)`. One byte per symbol on the air.

use super::crc::crc32;
use super::rs::{rs_decode, rs_encode};
use super::ModemError;

pub const MAX_PAYLOAD: usize = 192;

/// Serializes a payload into the full frame byte sequence.
pub fn build_frame(payload: &[u8], rs_parity: usize) -> Result<Vec<u8>, ModemError> {
    if payload.is_empty() || payload.len() > MAX_PAYLOAD {
        return Err(ModemError::PayloadTooLarge(payload.len()));
    }
    let mut frame = Vec::with_capacity(1 + payload.len() + 4 + rs_parity);
    frame.push(payload.len() as u8);
    frame.extend_from_slice(payload);
    let crc = crc32(&frame);
    frame.extend_from_slice(&crc.to_be_bytes());
    let parity = rs_encode(&frame, rs_parity)?;
    frame.extend_from_slice(&parity);
    Ok(frame)
}

/// Number of frame bytes for a given payload length.
pub fn frame_len(payload_len: usize, rs_parity: usize) -> usize {
    1 + payload_len + 4 + rs_parity
}

/// Corrects and validates a received frame. Returns the payload, or `None`
/// when RS fails, the corrected length byte disagrees with the frame
/// extent, or the CRC does not check out.
pub fn parse_frame(frame: &[u8], rs_parity: usize) -> Option<Vec<u8>> {
    let data = rs_decode(frame, rs_parity).ok()?;
    if data.len() < 1 + 1 + 4 {
        return None;
    }
    let len = data[0] as usize;
    if len == 0 || len > MAX_PAYLOAD || data.len() != 1 + len + 4 {
        return None;
    }
    let (body, crc_bytes) = data.split_at(1 + len);
    let expected = u32::from_be_bytes([crc_bytes[0], crc_bytes[1], crc_bytes[2], crc_bytes[3]]);
    if crc32(body) != expected {
        return None;
    }
    Some(body[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn round_trip() {
        let payload = b"frame me".to_vec();
        let frame = build_frame(&payload, 8).unwrap();
        assert_eq!(frame.len(), frame_len(payload.len(), 8));
        assert_eq!(parse_frame(&frame, 8).unwrap(), payload);
    }

    #[test]
    fn corrupted_within_radius_recovers() {
        let mut rng = StdRng::seed_from_u64(5);
        let payload: Vec<u8> = (0..100).map(|_| rng.random()).collect();
        let frame = build_frame(&payload, 8).unwrap();
        for _ in 0..50 {
            let mut hit = frame.clone();
            for _ in 0..4 {
                let pos = rng.random_range(0..hit.len());
                hit[pos] ^= rng.random_range(1..=255u8);
            }
            assert_eq!(parse_frame(&hit, 8).unwrap(), payload);
        }
    }

    #[test]
    fn overloaded_corruption_rejected() {
        let mut rng = StdRng::seed_from_u64(6);
        let payload: Vec<u8> = (0..64).map(|_| rng.random()).collect();
        let frame = build_frame(&payload, 8).unwrap();
        let mut false_accepts = 0;
        for _ in 0..500 {
            let mut hit = frame.clone();
            let mut positions: Vec<usize> = (0..hit.len()).collect();
            for k in 0..8 {
                let j = rng.random_range(k..positions.len());
                positions.swap(k, j);
            }
            for &pos in &positions[..8] {
                hit[pos] ^= rng.random_range(1..=255u8);
            }
            match parse_frame(&hit, 8) {
                None => {}
                Some(decoded) if decoded == payload => {
                    // 8 errors can still land within radius of the original
                    // codeword only if some cancel; count as accept
                }
                Some(_) => false_accepts += 1,
            }
        }
        assert_eq!(false_accepts, 0, "CRC must catch RS miscorrections");
    }

    #[test]
    fn payload_bounds() {
        assert!(matches!(build_frame(&[], 8), Err(ModemError::PayloadTooLarge(0))));
        let big = vec![0u8; MAX_PAYLOAD + 1];
        assert!(build_frame(&big, 8).is_err());
        let max = vec![0u8; MAX_PAYLOAD];
        assert!(build_frame(&max, 8).is_ok());
        assert!(build_frame(&max, 32).is_ok());
    }
}
