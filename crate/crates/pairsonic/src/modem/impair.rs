//! Deterministic channel impairments for robustness testing.

use super::PcmBuffer;
use rand_chacha::rand_core::SeedableRng;
use rand_core::RngCore;

/// One impairment step; a list applies in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Impairment {
    /// Additive white Gaussian noise at the given SNR relative to the
    /// buffer's signal power.
    Awgn { snr_db: f64, seed: u64 },
    Gain(f32),
    DcOffset(f32),
    /// Random leading/trailing silence, at most `max_ms` each side.
    Pad { max_ms: u32, seed: u64 },
}

pub fn impair(pcm: &PcmBuffer, impairments: &[Impairment]) -> PcmBuffer {
    let mut out = pcm.clone();
    for step in impairments {
        match step {
            Impairment::Awgn { snr_db, seed } => {
                let signal_power = out
                    .samples
                    .iter()
                    .map(|&x| (x as f64) * (x as f64))
                    .sum::<f64>()
                    / out.samples.len().max(1) as f64;
                let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
                let sigma = noise_power.sqrt();
                let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(*seed);
                let mut i = 0;
                while i < out.samples.len() {
                    let (a, b) = gaussian_pair(&mut rng);
                    out.samples[i] += (sigma * a) as f32;
                    if i + 1 < out.samples.len() {
                        out.samples[i + 1] += (sigma * b) as f32;
                    }
                    i += 2;
                }
            }
            Impairment::Gain(g) => {
                for x in &mut out.samples {
                    *x *= g;
                }
            }
            Impairment::DcOffset(d) => {
                for x in &mut out.samples {
                    *x += d;
                }
            }
            Impairment::Pad { max_ms, seed } => {
                let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(*seed);
                let max = (*max_ms as u64 * out.sample_rate as u64 / 1000) as usize;
                let lead = if max == 0 { 0 } else { rng.next_u64() as usize % (max + 1) };
                let trail = if max == 0 { 0 } else { rng.next_u64() as usize % (max + 1) };
                let mut samples = vec![0.0f32; lead];
                samples.extend_from_slice(&out.samples);
                samples.extend(std::iter::repeat(0.0f32).take(trail));
                out.samples = samples;
            }
        }
    }
    out
}

/// Box-Muller from two uniform draws.
fn gaussian_pair(rng: &mut impl RngCore) -> (f64, f64) {
    loop {
        let u1 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        if u1 > 0.0 {
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            return (r * theta.cos(), r * theta.sin());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::{demodulate, modulate, ModemConfig};

    #[test]
    fn unity_gain_is_identity() {
        let config = ModemConfig::default();
        let pcm = modulate(&config, b"identity").unwrap();
        let out = impair(&pcm, &[Impairment::Gain(1.0)]);
        assert_eq!(out.samples, pcm.samples);
    }

    #[test]
    fn awgn_is_deterministic() {
        let config = ModemConfig::default();
        let pcm = modulate(&config, b"noise").unwrap();
        let a = impair(&pcm, &[Impairment::Awgn { snr_db: 20.0, seed: 3 }]);
        let b = impair(&pcm, &[Impairment::Awgn { snr_db: 20.0, seed: 3 }]);
        assert_eq!(a.samples, b.samples);
        let c = impair(&pcm, &[Impairment::Awgn { snr_db: 20.0, seed: 4 }]);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn negligible_noise_still_decodes() {
        let config = ModemConfig::default();
        let payload = b"sixty db".to_vec();
        let pcm = modulate(&config, &payload).unwrap();
        let noisy = impair(&pcm, &[Impairment::Awgn { snr_db: 60.0, seed: 1 }]);
        let frames = demodulate(&config, &noisy).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].0, payload);
    }

    #[test]
    fn pad_preserves_payload_region() {
        let config = ModemConfig::default();
        let payload = b"padded out".to_vec();
        let pcm = modulate(&config, &payload).unwrap();
        let padded = impair(&pcm, &[Impairment::Pad { max_ms: 300, seed: 9 }]);
        assert!(padded.samples.len() >= pcm.samples.len());
        let frames = demodulate(&config, &padded).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].0, payload);
    }
}
