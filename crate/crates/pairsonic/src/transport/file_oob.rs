//! OOB channel over modulated WAV files in a shared directory.
//!
//! `emit` modulates the payload and writes the next `oob-%04d.wav`;
//! `poll` reads unseen files in filename order and demodulates them.
//! Files are written to a temp name and renamed so readers never observe
//! partial writes.

use std::collections::BTreeSet;
use std::path::PathBuf;

use super::{OobChannel, TransportError};
use crate::modem::{demodulate, modulate, wav_read, wav_write, ModemConfig};

pub struct FileOobChannel {
    dir: PathBuf,
    config: ModemConfig,
    seen: BTreeSet<String>,
    /// Filenames that failed to read or demodulate, with the reason.
    pub diagnostics: Vec<(String, String)>,
}

impl FileOobChannel {
    pub fn new(dir: PathBuf, config: ModemConfig) -> Self {
        FileOobChannel {
            dir,
            config,
            seen: BTreeSet::new(),
            diagnostics: Vec::new(),
        }
    }

    fn next_index(&self) -> u32 {
        list_oob_files(&self.dir)
            .iter()
            .filter_map(|name| parse_index(name))
            .max()
            .map_or(1, |max| max + 1)
    }
}

fn list_oob_files(dir: &PathBuf) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|n| n.starts_with("oob-") && n.ends_with(".wav"))
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn parse_index(name: &str) -> Option<u32> {
    name.strip_prefix("oob-")?.strip_suffix(".wav")?.parse().ok()
}

impl OobChannel for FileOobChannel {
    fn emit(&mut self, payload: &[u8]) -> Result<(), TransportError> {
        let pcm = modulate(&self.config, payload).map_err(|e| TransportError::Io(e.to_string()))?;
        let name = format!("oob-{:04}.wav", self.next_index());
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let path = self.dir.join(&name);
        wav_write(&tmp, &pcm).map_err(|e| TransportError::Io(e.to_string()))?;
        std::fs::rename(&tmp, &path).map_err(|e| TransportError::Io(e.to_string()))?;
        self.seen.insert(name); // don't hear our own emission
        Ok(())
    }

    fn poll(&mut self) -> Result<Vec<Vec<u8>>, TransportError> {
        let mut payloads = Vec::new();
        for name in list_oob_files(&self.dir) {
            if self.seen.contains(&name) {
                continue;
            }
            self.seen.insert(name.clone());
            let path = self.dir.join(&name);
            let pcm = match wav_read(&path) {
                Ok(pcm) => pcm,
                Err(e) => {
                    self.diagnostics.push((name, e.to_string()));
                    continue;
                }
            };
            match demodulate(&self.config, &pcm) {
                Ok(frames) if !frames.is_empty() => {
                    payloads.extend(frames.into_iter().map(|(p, _)| p));
                }
                Ok(_) => self.diagnostics.push((name, "no decodable frame".into())),
                Err(e) => self.diagnostics.push((name, e.to_string())),
            }
        }
        Ok(payloads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{encode_oob, OobPayload, SessionId};

    #[test]
    fn emit_then_poll_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let config = ModemConfig::default();
        let mut tx = FileOobChannel::new(dir.path().to_path_buf(), config.clone());
        let mut rx = FileOobChannel::new(dir.path().to_path_buf(), config);
        let payload = encode_oob(&OobPayload::Init {
            session_id: SessionId([5; 8]),
            group_size: 3,
            transport_descriptor: "tcp:127.0.0.1:7465".into(),
        })
        .unwrap();
        tx.emit(&payload).unwrap();
        assert_eq!(rx.poll().unwrap(), vec![payload]);
        // emitter does not re-hear its own file
        assert!(tx.poll().unwrap().is_empty());
        // nothing new on a second poll
        assert!(rx.poll().unwrap().is_empty());
    }

    #[test]
    fn empty_directory_polls_empty() {
        let dir = tempfile::tempdir().unwrap();
        let mut rx = FileOobChannel::new(dir.path().to_path_buf(), ModemConfig::default());
        assert!(rx.poll().unwrap().is_empty());
    }

    #[test]
    fn truncated_wav_skipped_with_diagnostic() {
        let dir = tempfile::tempdir().unwrap();
        let config = ModemConfig::default();
        let mut tx = FileOobChannel::new(dir.path().to_path_buf(), config.clone());
        tx.emit(b"will be truncated").unwrap();
        let path = dir.path().join("oob-0001.wav");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..40]).unwrap();
        let mut rx = FileOobChannel::new(dir.path().to_path_buf(), config);
        assert!(rx.poll().unwrap().is_empty());
        assert_eq!(rx.diagnostics.len(), 1);
        assert_eq!(rx.diagnostics[0].0, "oob-0001.wav");
    }
}
