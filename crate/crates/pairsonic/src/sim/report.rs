//! Structured, reproducible simulation reports.
//!
//! `to_text` renders a stable-field-order document suitable for golden
//! files; identical (config, seed) runs produce byte-identical text.

use crate::protocol::{Phase, ProtocolConfig, SessionOutcome};
use crate::wire::Digest;

use super::{Adversary, UserOracle};

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceReport {
    pub device: usize,
    pub role: &'static str,
    pub outcome: SessionOutcome,
    /// Digest over the canonical card list; present iff finalized.
    pub roster_digest: Option<Digest>,
    /// Number of peer cards this device imported.
    pub imported: usize,
}

impl DeviceReport {
    pub fn finalized(&self) -> bool {
        matches!(self.outcome, SessionOutcome::Finalized { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub group_size: usize,
    pub seed: u64,
    pub adversary: Adversary,
    pub oracle: UserOracle,
    pub config: ProtocolConfig,
    pub devices: Vec<DeviceReport>,
    pub trace: Vec<String>,
    pub virtual_ms: u64,
}

impl SimReport {
    pub fn finalized_count(&self) -> usize {
        self.devices.iter().filter(|d| d.finalized()).count()
    }

    pub fn all_finalized(&self) -> bool {
        self.finalized_count() == self.devices.len()
    }

    /// True iff every finalized device holds the same roster digest.
    pub fn roster_digests_agree(&self) -> bool {
        let mut digests = self
            .devices
            .iter()
            .filter_map(|d| d.roster_digest.as_ref());
        match digests.next() {
            Some(first) => digests.all(|d| d == first),
            None => true,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("simulation-report v1\n");
        out.push_str(&format!("group-size: {}\n", self.group_size));
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!("adversary: {}\n", self.adversary.name()));
        out.push_str(&format!("oracle: {}\n", self.oracle.name()));
        out.push_str(&format!(
            "round-timeout-ms: {}\n",
            self.config.round_timeout_ms
        ));
        out.push_str(&format!("virtual-ms: {}\n", self.virtual_ms));
        for d in &self.devices {
            out.push_str(&format!("device {} role={} ", d.device, d.role));
            match &d.outcome {
                SessionOutcome::Finalized { cards } => {
                    out.push_str(&format!(
                        "outcome=finalized cards={} roster={}",
                        cards.len(),
                        d.roster_digest
                            .as_ref()
                            .map(Digest::to_hex)
                            .unwrap_or_default()
                    ));
                }
                SessionOutcome::Aborted { reason, phase } => {
                    out.push_str(&format!(
                        "outcome=aborted reason={} phase={}",
                        reason.label(),
                        phase_label(*phase)
                    ));
                }
            }
            out.push_str(&format!(" imported={}\n", d.imported));
        }
        out.push_str("trace:\n");
        for line in &self.trace {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

pub(crate) fn phase_label(phase: Phase) -> &'static str {
    match phase {
        Phase::Initialization => "initialization",
        Phase::Verification => "verification",
        Phase::Finalization => "finalization",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSummary {
    pub name: String,
    pub runs: usize,
    pub devices_total: usize,
    pub devices_finalized: usize,
    pub devices_aborted: usize,
    pub safety_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixSummary {
    pub rows: Vec<ScenarioSummary>,
    pub any_violation: bool,
}

impl MatrixSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("scenario runs finalized aborted violation\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{} {} {}/{} {}/{} {}\n",
                r.name,
                r.runs,
                r.devices_finalized,
                r.devices_total,
                r.devices_aborted,
                r.devices_total,
                if r.safety_violation { "YES" } else { "no" }
            ));
        }
        out
    }
}
