//! MFSK modulation and Goertzel-based demodulation.
//!
//! Each symbol sums one tone from each 16-tone bank (low nibble on bank 0,
//! high nibble on bank 1). Four preamble symbols with the marker pairs
//! (0,15),(15,0),(0,15),(15,0) precede the frame. All tones land exactly
//! on DFT bins of the symbol window, so a clean aligned symbol has zero
//! inter-tone leakage.

use super::frame::{build_frame, frame_len, parse_frame, MAX_PAYLOAD};
use super::{ModemConfig, ModemError, PcmBuffer, PREAMBLE_SYMBOLS, TONES_PER_BANK, TONE_COUNT};

const RAMP_MS: f64 = 2.0;
/// Marker tone indices (bank0, bank1) for the alternating preamble.
const PREAMBLE_PATTERN: [(usize, usize); 2] = [(0, 15), (15, 0)];
/// 6 dB over the running median band energy.
const SYNC_THRESHOLD: f64 = 3.981;

/// Modulates a payload into a mono PCM buffer at the configured rate.
pub fn modulate(config: &ModemConfig, payload: &[u8]) -> Result<PcmBuffer, ModemError> {
    config.validate()?;
    if payload.is_empty() || payload.len() > MAX_PAYLOAD {
        return Err(ModemError::PayloadTooLarge(payload.len()));
    }
    let frame = build_frame(payload, config.rs_parity_bytes)?;
    let sym = config.symbol_samples();
    let total_symbols = PREAMBLE_SYMBOLS + frame.len();
    let mut samples = Vec::with_capacity(total_symbols * sym);

    let mut tone_indices = Vec::with_capacity(total_symbols);
    for k in 0..PREAMBLE_SYMBOLS {
        tone_indices.push(PREAMBLE_PATTERN[k % 2]);
    }
    for &byte in &frame {
        tone_indices.push(((byte & 0x0F) as usize, (byte >> 4) as usize));
    }

    // At the default rate every tone completes an integer number of
    // cycles per symbol, so a tone's waveform over one symbol window is
    // the same for every symbol; synthesize each tone once and reuse it.
    let half_amp = (config.amplitude / 2.0) as f64;
    let mut tone_tables: Vec<Vec<f64>> = Vec::with_capacity(TONE_COUNT);
    for bank in 0..2 {
        for index in 0..TONES_PER_BANK {
            let f = config.tone_frequency(bank, index)?;
            let w = 2.0 * std::f64::consts::PI * f / config.sample_rate as f64;
            tone_tables.push((0..sym).map(|n| half_amp * (w * n as f64).sin()).collect());
        }
    }
    // raised-cosine ramps at symbol boundaries avoid keying clicks
    let ramp_samples =
        ((RAMP_MS / 1000.0) * config.sample_rate as f64).round() as usize;
    let mut gain = vec![1.0f64; sym];
    for n in 0..ramp_samples.min(sym) {
        let x = n as f64 / ramp_samples as f64;
        let g = 0.5 * (1.0 - (std::f64::consts::PI * x).cos());
        gain[n] *= g;
        gain[sym - 1 - n] *= g;
    }
    for (i0, i1) in tone_indices {
        let t0 = &tone_tables[i0];
        let t1 = &tone_tables[TONES_PER_BANK + i1];
        samples.extend((0..sym).map(|n| ((t0[n] + t1[n]) * gain[n]) as f32));
    }
    Ok(PcmBuffer {
        samples,
        sample_rate: config.sample_rate,
    })
}

/// Per-attempt diagnostics from the scanning demodulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncAttempt {
    pub start_sample: usize,
    pub outcome: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeReport {
    pub frames: Vec<(Vec<u8>, usize)>,
    pub attempts: Vec<SyncAttempt>,
}

/// Scans a buffer and returns every frame whose CRC validates, in order.
pub fn demodulate(
    config: &ModemConfig,
    pcm: &PcmBuffer,
) -> Result<Vec<(Vec<u8>, usize)>, ModemError> {
    Ok(demodulate_report(config, pcm)?.frames)
}

/// Like [`demodulate`] but also reports sync hits and RS/CRC failures.
pub fn demodulate_report(
    config: &ModemConfig,
    pcm: &PcmBuffer,
) -> Result<DecodeReport, ModemError> {
    config.validate()?;
    if pcm.sample_rate != config.sample_rate {
        return Err(ModemError::RateMismatch {
            got: pcm.sample_rate,
            expected: config.sample_rate,
        });
    }
    let sym = config.symbol_samples();
    let hop = (sym / 8).max(1);
    let coeffs = ToneCoeffs::new(config);
    let mut report = DecodeReport::default();

    let mut s = 0usize;
    while s + (PREAMBLE_SYMBOLS + 1) * sym <= pcm.samples.len() {
        if !preamble_at(&coeffs, &pcm.samples, s, sym) {
            s += hop;
            continue;
        }
        // fine alignment around the coarse hit
        let lo = s.saturating_sub(hop);
        let hi = (s + hop).min(pcm.samples.len() - (PREAMBLE_SYMBOLS + 1) * sym);
        let fine_step = (hop / 8).max(1);
        let mut best = (f64::MIN, s);
        let mut pos = lo;
        while pos <= hi {
            let score = preamble_score(&coeffs, &pcm.samples, pos, sym);
            if score > best.0 {
                best = (score, pos);
            }
            pos += fine_step;
        }
        let start = best.1;
        let data_start = start + PREAMBLE_SYMBOLS * sym;

        // trust the raw length symbol to size the frame, re-sync on failure
        let len_byte = decode_symbol(&coeffs, &pcm.samples, data_start, sym);
        let len = len_byte as usize;
        let n_frame = frame_len(len, config.rs_parity_bytes);
        if len == 0 || len > MAX_PAYLOAD || data_start + n_frame * sym > pcm.samples.len() {
            report.attempts.push(SyncAttempt {
                start_sample: start,
                outcome: "bad-length",
            });
            s += hop;
            continue;
        }
        let mut frame = Vec::with_capacity(n_frame);
        for k in 0..n_frame {
            frame.push(decode_symbol(&coeffs, &pcm.samples, data_start + k * sym, sym));
        }
        match parse_frame(&frame, config.rs_parity_bytes) {
            Some(payload) => {
                report.attempts.push(SyncAttempt {
                    start_sample: start,
                    outcome: "decoded",
                });
                report.frames.push((payload, start));
                s = data_start + n_frame * sym;
            }
            None => {
                report.attempts.push(SyncAttempt {
                    start_sample: start,
                    outcome: "rs-or-crc-failure",
                });
                s += hop;
            }
        }
    }
    Ok(report)
}

struct ToneCoeffs {
    /// 2·cos(2π·f/fs) per tone, bank-0 tones first.
    coeffs: Vec<f64>,
    /// Absolute energy floor; rejects sync on all-zero input.
    floor: f64,
}

impl ToneCoeffs {
    fn new(config: &ModemConfig) -> Self {
        let mut coeffs = Vec::with_capacity(TONE_COUNT);
        for bank in 0..2 {
            for index in 0..TONES_PER_BANK {
                let f = config.tone_frequency(bank, index).expect("valid tone");
                coeffs.push(2.0 * (2.0 * std::f64::consts::PI * f / config.sample_rate as f64).cos());
            }
        }
        let sym = config.symbol_samples() as f64;
        ToneCoeffs {
            coeffs,
            floor: 1e-10 * sym * sym,
        }
    }
}

/// Goertzel energy of one tone over a window.
fn goertzel(samples: &[f32], coeff: f64) -> f64 {
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    for &x in samples {
        let s0 = x as f64 + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    s1 * s1 + s2 * s2 - coeff * s1 * s2
}

/// All 32 tone energies in one pass over the window. Running the 32
/// independent Goertzel recurrences side by side breaks the per-tone
/// dependency chain, letting the inner loop vectorize.
fn window_energies(coeffs: &ToneCoeffs, samples: &[f32], start: usize, sym: usize) -> [f64; 32] {
    let window = &samples[start..start + sym];
    let c: [f64; 32] = coeffs.coeffs[..32].try_into().expect("32 tones");
    let mut s1 = [0.0f64; 32];
    let mut s2 = [0.0f64; 32];
    for &x in window {
        let x = x as f64;
        for i in 0..32 {
            let s0 = x + c[i] * s1[i] - s2[i];
            s2[i] = s1[i];
            s1[i] = s0;
        }
    }
    let mut out = [0.0f64; 32];
    for i in 0..32 {
        out[i] = s1[i] * s1[i] + s2[i] * s2[i] - c[i] * s1[i] * s2[i];
    }
    out
}

fn median(energies: &[f64; 32]) -> f64 {
    let mut sorted = *energies;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    0.5 * (sorted[15] + sorted[16])
}

/// Marker bins for preamble symbol k: bank0 index and bank1 index.
fn marker_bins(k: usize) -> (usize, usize) {
    let (i0, i1) = PREAMBLE_PATTERN[k % 2];
    (i0, TONES_PER_BANK + i1)
}

fn preamble_at(coeffs: &ToneCoeffs, samples: &[f32], start: usize, sym: usize) -> bool {
    for k in 0..PREAMBLE_SYMBOLS {
        let e = window_energies(coeffs, samples, start + k * sym, sym);
        let (b0, b1) = marker_bins(k);
        let marker_min = e[b0].min(e[b1]);
        if marker_min < coeffs.floor {
            return false;
        }
        let med = median(&e);
        if marker_min < SYNC_THRESHOLD * med {
            return false;
        }
    }
    true
}

/// Alignment metric: only the marker-bin energies matter, so skip the
/// other 30 Goertzel filters.
fn preamble_score(coeffs: &ToneCoeffs, samples: &[f32], start: usize, sym: usize) -> f64 {
    let mut score = 0.0;
    for k in 0..PREAMBLE_SYMBOLS {
        let window = &samples[start + k * sym..start + (k + 1) * sym];
        let (b0, b1) = marker_bins(k);
        score += goertzel(window, coeffs.coeffs[b0]) + goertzel(window, coeffs.coeffs[b1]);
    }
    score
}

fn decode_symbol(coeffs: &ToneCoeffs, samples: &[f32], start: usize, sym: usize) -> u8 {
    let e = window_energies(coeffs, samples, start, sym);
    let low = argmax(&e[..TONES_PER_BANK]);
    let high = argmax(&e[TONES_PER_BANK..]);
    (low as u8) | ((high as u8) << 4)
}

fn argmax(energies: &[f64]) -> usize {
    let mut best = 0;
    for (i, &e) in energies.iter().enumerate() {
        if e > energies[best] {
            best = i;
        }
    }
    best
}
