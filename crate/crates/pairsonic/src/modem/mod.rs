//! Data-over-sound physical layer: MFSK modulation over two frequency
//! bands, with framing, Reed-Solomon error correction, CRC validation and
//! WAV/PCM interfaces.
//!
//! One symbol carries one byte: two banks of 16 tones, the low nibble on
//! bank 0 and the high nibble on bank 1, both tones summed.

mod crc;
mod dsp;
mod frame;
mod gf256;
mod impair;
mod rs;
mod wav;

pub use crc::crc32;
pub use dsp::{demodulate, demodulate_report, modulate, DecodeReport, SyncAttempt};
pub use frame::{build_frame, parse_frame, MAX_PAYLOAD};
pub use impair::{impair, Impairment};
pub use rs::{rs_decode, rs_encode};
pub use wav::{wav_read, wav_write};

/// Errors produced by the modem layer.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModemError {
    #[error("payload length {0} outside 1..={MAX_PAYLOAD}")]
    PayloadTooLarge(usize),
    #[error("reed-solomon block too large: {data} data + {parity} parity bytes")]
    RsBlockTooLarge { data: usize, parity: usize },
    #[error("uncorrectable reed-solomon block")]
    Uncorrectable,
    #[error("invalid modem config: {0}")]
    InvalidConfig(&'static str),
    #[error("tone index out of range")]
    IndexOutOfRange,
    #[error("unsupported WAV file: {0}")]
    UnsupportedWav(String),
    #[error("sample rate mismatch: buffer {got} Hz, config {expected} Hz")]
    RateMismatch { got: u32, expected: u32 },
    #[error("WAV I/O failed: {0}")]
    Io(String),
}

/// The two supported frequency bands; both are 4500 Hz wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Audible,
    Ultrasonic,
}

impl Band {
    pub fn start_hz(self) -> f64 {
        match self {
            Band::Audible => 1875.0,
            Band::Ultrasonic => 15000.0,
        }
    }

    pub fn end_hz(self) -> f64 {
        self.start_hz() + BAND_WIDTH_HZ
    }
}

pub const BAND_WIDTH_HZ: f64 = 4500.0;
pub const TONES_PER_BANK: usize = 16;
pub const TONE_COUNT: usize = 2 * TONES_PER_BANK;
/// 4500 / 32 = 140.625 Hz between adjacent tones.
pub const TONE_SPACING_HZ: f64 = BAND_WIDTH_HZ / TONE_COUNT as f64;
/// Inset of the lowest tone from the band edge: roughly half a tone
/// spacing, rounded to 4 DFT bins of the default 64 ms window so every
/// tone stays bin-aligned. A carrier keyed on and off exactly at the
/// band edge would spread half its switching sidebands below the band;
/// the inset keeps that spread inside, so frames stay spectrally
/// contained. The highest tone ends up 78.125 Hz under the top edge.
pub const TONE_EDGE_OFFSET_HZ: f64 = 62.5;
pub const PREAMBLE_SYMBOLS: usize = 4;

/// MFSK signal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModemConfig {
    pub sample_rate: u32,
    pub band: Band,
    pub symbol_duration_ms: u32,
    pub rs_parity_bytes: usize,
    pub amplitude: f32,
}

impl Default for ModemConfig {
    fn default() -> Self {
        ModemConfig {
            sample_rate: 48_000,
            band: Band::Audible,
            symbol_duration_ms: 64,
            rs_parity_bytes: 8,
            amplitude: 0.5,
        }
    }
}

impl ModemConfig {
    pub fn validate(&self) -> Result<(), ModemError> {
        if self.sample_rate == 0 {
            return Err(ModemError::InvalidConfig("sample rate must be positive"));
        }
        if self.symbol_duration_ms == 0 {
            return Err(ModemError::InvalidConfig("symbol duration must be positive"));
        }
        // DFT bin width must be finer than the tone spacing
        let resolution = 1000.0 / self.symbol_duration_ms as f64;
        if resolution > TONE_SPACING_HZ {
            return Err(ModemError::InvalidConfig(
                "symbol too short for tone spacing",
            ));
        }
        if self.rs_parity_bytes % 2 != 0 || !(2..=32).contains(&self.rs_parity_bytes) {
            return Err(ModemError::InvalidConfig(
                "rs parity bytes must be even and in 2..=32",
            ));
        }
        if !(0.0..=1.0).contains(&self.amplitude) || self.amplitude == 0.0 {
            return Err(ModemError::InvalidConfig("amplitude must be in (0, 1]"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.band.end_hz() >= nyquist {
            return Err(ModemError::InvalidConfig("band exceeds Nyquist frequency"));
        }
        Ok(())
    }

    pub fn with_band(band: Band) -> Self {
        ModemConfig {
            band,
            ..ModemConfig::default()
        }
    }

    /// Samples per symbol.
    pub fn symbol_samples(&self) -> usize {
        (self.sample_rate as u64 * self.symbol_duration_ms as u64 / 1000) as usize
    }

    /// Frequency of tone `index` in `bank`.
    pub fn tone_frequency(&self, bank: usize, index: usize) -> Result<f64, ModemError> {
        if bank > 1 || index >= TONES_PER_BANK {
            return Err(ModemError::IndexOutOfRange);
        }
        Ok(self.band.start_hz()
            + TONE_EDGE_OFFSET_HZ
            + (bank * TONES_PER_BANK + index) as f64 * TONE_SPACING_HZ)
    }
}

/// Mono sampled audio.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl PcmBuffer {
    pub fn silence(sample_rate: u32, samples: usize) -> Self {
        PcmBuffer {
            samples: vec![0.0; samples],
            sample_rate,
        }
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}
