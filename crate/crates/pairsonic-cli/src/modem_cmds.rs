//! The modem tooling subcommands: encode, decode, impair.

use std::path::Path;

use pairsonic::modem::{
    demodulate, impair, modulate, wav_read, wav_write, Band, Impairment, ModemConfig,
};

use crate::{EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

pub fn encode(config: ModemConfig, input: &Path, output: &Path) -> u8 {
    let payload = match std::fs::read(input) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: reading {}: {e}", input.display());
            return EXIT_FAILURE;
        }
    };
    let pcm = match modulate(&config, &payload) {
        Ok(pcm) => pcm,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = wav_write(output, &pcm) {
        eprintln!("error: writing {}: {e}", output.display());
        return EXIT_FAILURE;
    }
    eprintln!(
        "wrote {} ({:.3} s of audio)",
        output.display(),
        pcm.duration_secs()
    );
    EXIT_OK
}

pub fn decode(band: Option<Band>, input: &Path) -> u8 {
    let pcm = match wav_read(input) {
        Ok(pcm) => pcm,
        Err(e) => {
            eprintln!("error: reading {}: {e}", input.display());
            return EXIT_FAILURE;
        }
    };
    let bands: Vec<Band> = match band {
        Some(b) => vec![b],
        None => vec![Band::Audible, Band::Ultrasonic],
    };
    let mut found = false;
    for band in bands {
        let frames = match demodulate(&ModemConfig::with_band(band), &pcm) {
            Ok(frames) => frames,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_FAILURE;
            }
        };
        for (payload, _) in &frames {
            let hex: String = payload.iter().map(|b| format!("{b:02x}")).collect();
            println!("{hex}");
            found = true;
        }
        if found {
            break; // a signal lives in exactly one band
        }
    }
    if found {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

pub fn impair_wav(snr_db: f64, seed: u64, input: &Path, output: &Path) -> u8 {
    let pcm = match wav_read(input) {
        Ok(pcm) => pcm,
        Err(e) => {
            eprintln!("error: reading {}: {e}", input.display());
            return EXIT_FAILURE;
        }
    };
    let noisy = impair(&pcm, &[Impairment::Awgn { snr_db, seed }]);
    if let Err(e) = wav_write(output, &noisy) {
        eprintln!("error: writing {}: {e}", output.display());
        return EXIT_FAILURE;
    }
    EXIT_OK
}
