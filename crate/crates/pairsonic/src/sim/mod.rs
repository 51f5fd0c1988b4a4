//! Deterministic discrete-event harness: N virtual devices run the
//! protocol over the in-memory network under a configurable adversary and
//! user-confirmation oracle, producing a machine-checkable report.
//!
//! Time is virtual. The loop pumps deliverable events to exhaustion, then
//! consults the confirmation oracle for freshly locked devices, and only
//! when nothing else can move fires the earliest pending timer. Identical
//! (config, seed) pairs yield byte-identical reports.

mod report;
mod runner;

pub use report::{DeviceReport, MatrixSummary, ScenarioSummary, SimReport};
pub use runner::run_simulation;

use crate::protocol::ProtocolConfig;

/// Attacker model. Every variant operates only through transport hooks
/// (or, for the injected participant, a scripted extra device); none can
/// read device-internal nonces before their release.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Adversary {
    None,
    /// Flip one bit of the in-band message with the given send ordinal.
    FlipInBandBit { ordinal: u64, bit: usize },
    /// Replace the victim's COMMIT with one for an attacker-chosen card.
    SubstituteCommit { victim: usize },
    /// Replace the victim's REVEAL with an attacker-chosen preimage.
    SubstituteReveal { victim: usize },
    /// Equivocate the roster: odd-numbered participants receive a roster
    /// with the coordinator's commitment swapped for the attacker's.
    SplitRoster,
    /// A scripted extra device joins the announced session and commits,
    /// competing for one of the group slots, but never reveals.
    InjectExtraParticipant,
    /// Silently drop the in-band message with the given send ordinal.
    DropMessage { ordinal: u64 },
    /// Drop every ABORT message (tests abort totality).
    SuppressAborts,
    /// Flip one bit of the acoustically broadcast VERIFY digest. All
    /// listeners still hear identical (tampered) bytes.
    TamperOobDigest { bit: usize },
}

impl Adversary {
    /// Stable label, also accepted by [`Adversary::parse`].
    pub fn name(&self) -> String {
        match self {
            Adversary::None => "none".into(),
            Adversary::FlipInBandBit { ordinal, bit } => format!("flip-bit:{ordinal},{bit}"),
            Adversary::SubstituteCommit { victim } => format!("substitute-commit:{victim}"),
            Adversary::SubstituteReveal { victim } => format!("substitute-reveal:{victim}"),
            Adversary::SplitRoster => "split-roster".into(),
            Adversary::InjectExtraParticipant => "inject-extra".into(),
            Adversary::DropMessage { ordinal } => format!("drop:{ordinal}"),
            Adversary::SuppressAborts => "suppress-aborts".into(),
            Adversary::TamperOobDigest { bit } => format!("tamper-oob:{bit}"),
        }
    }

    pub fn parse(s: &str) -> Option<Adversary> {
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        Some(match (head, params) {
            ("none", None) => Adversary::None,
            ("flip-bit", Some(p)) => {
                let (a, b) = p.split_once(',')?;
                Adversary::FlipInBandBit {
                    ordinal: a.parse().ok()?,
                    bit: b.parse().ok()?,
                }
            }
            ("substitute-commit", Some(p)) => Adversary::SubstituteCommit {
                victim: p.parse().ok()?,
            },
            ("substitute-reveal", Some(p)) => Adversary::SubstituteReveal {
                victim: p.parse().ok()?,
            },
            ("split-roster", None) => Adversary::SplitRoster,
            ("inject-extra", None) => Adversary::InjectExtraParticipant,
            ("drop", Some(p)) => Adversary::DropMessage {
                ordinal: p.parse().ok()?,
            },
            ("suppress-aborts", None) => Adversary::SuppressAborts,
            ("tamper-oob", Some(p)) => Adversary::TamperOobDigest {
                bit: p.parse().ok()?,
            },
            _ => return None,
        })
    }

    /// True for adversaries that substitute or corrupt a committed value;
    /// any finalization under such an adversary is a safety violation.
    pub fn modifies_committed_values(&self) -> bool {
        !matches!(
            self,
            Adversary::None | Adversary::DropMessage { .. } | Adversary::SuppressAborts
        )
    }
}

/// Models the human lock-confirmation decision; consulted at most once per
/// device, only while that device shows the lock indicator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserOracle {
    /// Confirms iff all n devices in the group show the lock indicator.
    Honest,
    AlwaysConfirm,
    AlwaysDecline,
    /// Only the listed device indices confirm; the rest decline.
    ConfirmSubset(Vec<usize>),
}

impl UserOracle {
    pub fn name(&self) -> String {
        match self {
            UserOracle::Honest => "honest".into(),
            UserOracle::AlwaysConfirm => "always-confirm".into(),
            UserOracle::AlwaysDecline => "always-decline".into(),
            UserOracle::ConfirmSubset(ix) => {
                let list: Vec<String> = ix.iter().map(|i| i.to_string()).collect();
                format!("subset:{}", list.join(","))
            }
        }
    }

    pub fn parse(s: &str) -> Option<UserOracle> {
        Some(match s {
            "honest" => UserOracle::Honest,
            "always-confirm" => UserOracle::AlwaysConfirm,
            "always-decline" => UserOracle::AlwaysDecline,
            _ => {
                let p = s.strip_prefix("subset:")?;
                let ix: Result<Vec<usize>, _> = p.split(',').map(str::parse).collect();
                UserOracle::ConfirmSubset(ix.ok()?)
            }
        })
    }

    fn decide(&self, device: usize, all_locked: bool) -> bool {
        match self {
            UserOracle::Honest => all_locked,
            UserOracle::AlwaysConfirm => true,
            UserOracle::AlwaysDecline => false,
            UserOracle::ConfirmSubset(ix) => ix.contains(&device),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("group size {0} outside 2..=16")]
    GroupSizeOutOfBounds(usize),
    #[error("simulation did not reach quiescence within {budget} events")]
    NonQuiescent { budget: usize },
}

/// A named (group size, adversary, oracle) combination for matrix runs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub group_size: usize,
    pub adversary: Adversary,
    pub oracle: UserOracle,
}

/// Runs every scenario over every seed and aggregates outcome counts.
pub fn run_matrix(
    scenarios: &[Scenario],
    seeds: &[u64],
    config: &ProtocolConfig,
) -> Result<MatrixSummary, SimError> {
    assert!(
        !scenarios.is_empty() && !seeds.is_empty(),
        "matrix needs at least one scenario and one seed"
    );
    let mut rows = Vec::new();
    for scenario in scenarios {
        let mut finalized = 0usize;
        let mut aborted = 0usize;
        let mut total = 0usize;
        for &seed in seeds {
            let report = run_simulation(
                scenario.group_size,
                scenario.adversary.clone(),
                scenario.oracle.clone(),
                seed,
                config.clone(),
            )?;
            finalized += report.finalized_count();
            total += report.devices.len();
            aborted += report.devices.len() - report.finalized_count();
        }
        let safety_violation = scenario.adversary.modifies_committed_values() && finalized > 0;
        rows.push(ScenarioSummary {
            name: scenario.name.clone(),
            runs: seeds.len(),
            devices_total: total,
            devices_finalized: finalized,
            devices_aborted: aborted,
            safety_violation,
        });
    }
    let any_violation = rows.iter().any(|r| r.safety_violation);
    Ok(MatrixSummary {
        rows,
        any_violation,
    })
}

#[cfg(test)]
mod tests;
