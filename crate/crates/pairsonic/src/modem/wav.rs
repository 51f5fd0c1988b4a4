//! Minimal 16-bit mono PCM WAV reader/writer.

use super::{ModemError, PcmBuffer};
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn wav_write(path: &Path, pcm: &PcmBuffer) -> Result<(), ModemError> {
    let data_len = pcm.samples.len() * 2;
    let byte_rate = pcm.sample_rate * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&pcm.sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &pcm.samples {
        let clamped = s.clamp(-1.0, 1.0);
        let q = (clamped * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| ModemError::Io(e.to_string()))?;
    file.write_all(&out).map_err(|e| ModemError::Io(e.to_string()))
}

pub fn wav_read(path: &Path) -> Result<PcmBuffer, ModemError> {
    let bytes = fs::read(path).map_err(|e| ModemError::Io(e.to_string()))?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(ModemError::UnsupportedWav("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12usize;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes([bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]])
            as usize;
        let body_start = pos + 8;
        if body_start + size > bytes.len() {
            return Err(ModemError::UnsupportedWav("truncated chunk".into()));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(ModemError::UnsupportedWav("short fmt chunk".into()));
                }
                let format = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let sample_rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                let bits = u16::from_le_bytes([body[14], body[15]]);
                fmt = Some((format, channels, sample_rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_start + size + (size & 1); // chunks are word-aligned
    }
    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| ModemError::UnsupportedWav("missing fmt chunk".into()))?;
    if format != 1 {
        return Err(ModemError::UnsupportedWav(format!(
            "compressed format tag {format}"
        )));
    }
    if channels != 1 {
        return Err(ModemError::UnsupportedWav(format!("{channels} channels")));
    }
    if bits != 16 {
        return Err(ModemError::UnsupportedWav(format!("{bits}-bit samples")));
    }
    let data = data.ok_or_else(|| ModemError::UnsupportedWav("missing data chunk".into()))?;
    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32767.0)
        .collect();
    Ok(PcmBuffer { samples, sample_rate })
}
