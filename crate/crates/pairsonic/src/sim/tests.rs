use super::*;
use crate::protocol::SessionOutcome;
use crate::wire::AbortReason;

fn run(
    n: usize,
    adversary: Adversary,
    oracle: UserOracle,
    seed: u64,
) -> SimReport {
    run_simulation(n, adversary, oracle, seed, ProtocolConfig::default()).expect("quiescent run")
}

fn abort_reason(report: &SimReport, device: usize) -> AbortReason {
    match report.devices[device].outcome {
        SessionOutcome::Aborted { reason, .. } => reason,
        SessionOutcome::Finalized { .. } => panic!("device {device} finalized"),
    }
}

#[test]
fn honest_three_device_run_finalizes() {
    let report = run(3, Adversary::None, UserOracle::Honest, 7);
    assert!(report.all_finalized(), "{}", report.to_text());
    assert!(report.roster_digests_agree());
    for d in &report.devices {
        match &d.outcome {
            SessionOutcome::Finalized { cards } => assert_eq!(cards.len(), 3),
            other => panic!("unexpected outcome {other:?}"),
        }
        assert_eq!(d.imported, 2);
        assert!(d.roster_digest.is_some());
    }
    let locks = report
        .trace
        .iter()
        .filter(|l| l.contains("display-lock"))
        .count();
    assert_eq!(locks, 3);
}

#[test]
fn honest_runs_cover_group_size_range() {
    for n in [2, 5, 16] {
        let report = run(n, Adversary::None, UserOracle::Honest, 11);
        assert!(report.all_finalized(), "n={n}:\n{}", report.to_text());
        assert!(report.roster_digests_agree());
    }
}

#[test]
fn reports_are_reproducible() {
    let a = run(4, Adversary::None, UserOracle::Honest, 42).to_text();
    let b = run(4, Adversary::None, UserOracle::Honest, 42).to_text();
    assert_eq!(a, b);
    let c = run(4, Adversary::None, UserOracle::Honest, 43).to_text();
    assert_ne!(a, c, "different seeds must change session material");
}

#[test]
fn always_decline_aborts_without_imports() {
    let report = run(3, Adversary::None, UserOracle::AlwaysDecline, 3);
    assert_eq!(report.finalized_count(), 0);
    for d in 0..3 {
        assert_eq!(abort_reason(&report, d), AbortReason::UserDeclined);
        assert_eq!(report.devices[d].imported, 0);
    }
    assert!(!report.trace.iter().any(|l| l.contains("import")));
}

#[test]
fn single_decliner_cascades_to_everyone() {
    // devices 0 and 1 confirm; device 2 declines and its released abort
    // nonce (verifiable after the reveal round) halts the whole group
    let report = run(
        3,
        Adversary::None,
        UserOracle::ConfirmSubset(vec![0, 1]),
        9,
    );
    assert_eq!(report.finalized_count(), 0);
    for d in 0..3 {
        assert_eq!(abort_reason(&report, d), AbortReason::UserDeclined);
    }
}

#[test]
fn suppressed_aborts_still_block_finalization() {
    // with ABORT messages suppressed the decliner's halt signal is lost,
    // but the missing CONFIRM makes the success set impossible: the rest
    // time out instead of finalizing (abort totality)
    let report = run(
        4,
        Adversary::SuppressAborts,
        UserOracle::ConfirmSubset(vec![0, 1, 2]),
        21,
    );
    assert_eq!(report.finalized_count(), 0);
    assert_eq!(abort_reason(&report, 3), AbortReason::UserDeclined);
    for d in 0..3 {
        assert_eq!(abort_reason(&report, d), AbortReason::Timeout);
    }
}

#[test]
fn tampered_oob_digest_aborts_all_participants() {
    for bit in [0, 17, 255] {
        let report = run(4, Adversary::TamperOobDigest { bit }, UserOracle::Honest, 5);
        assert_eq!(report.finalized_count(), 0, "bit {bit}");
        for d in 1..4 {
            assert_eq!(abort_reason(&report, d), AbortReason::OobMismatch, "bit {bit}");
        }
        // the coordinator emitted the digest; it starves waiting for reveals
        assert_eq!(abort_reason(&report, 0), AbortReason::Timeout);
        assert!(!report.trace.iter().any(|l| l.contains("import")));
    }
}

#[test]
fn substituted_commit_defeated() {
    let report = run(4, Adversary::SubstituteCommit { victim: 1 }, UserOracle::Honest, 13);
    assert_eq!(report.finalized_count(), 0, "{}", report.to_text());
    // the victim's own commitment is missing from the roster it receives
    assert_eq!(abort_reason(&report, 1), AbortReason::IntegrityFailure);
}

#[test]
fn substituted_reveal_defeated() {
    let report = run(4, Adversary::SubstituteReveal { victim: 2 }, UserOracle::Honest, 13);
    assert_eq!(report.finalized_count(), 0, "{}", report.to_text());
    // the coordinator sees a preimage that fails its committed outer
    assert_eq!(abort_reason(&report, 0), AbortReason::IntegrityFailure);
}

#[test]
fn split_roster_detected_by_oob_broadcast() {
    let report = run(4, Adversary::SplitRoster, UserOracle::Honest, 31);
    assert_eq!(report.finalized_count(), 0, "{}", report.to_text());
    // the partition holding the divergent roster detects the mismatch
    for d in [1, 3] {
        assert_eq!(abort_reason(&report, d), AbortReason::OobMismatch);
    }
}

#[test]
fn injected_participant_defeated() {
    let report = run(4, Adversary::InjectExtraParticipant, UserOracle::Honest, 17);
    assert_eq!(report.finalized_count(), 0, "{}", report.to_text());
    assert!(report.trace.iter().any(|l| l.contains("rogue4 commit")));
    for d in 0..4 {
        assert!(
            matches!(
                abort_reason(&report, d),
                AbortReason::IntegrityFailure | AbortReason::Timeout
            ),
            "device {d}: {}",
            report.to_text()
        );
    }
}

#[test]
fn dropped_commit_times_out_everywhere() {
    // ordinal 1 is the first participant's COMMIT (its HELLO is ordinal 0)
    let report = run(4, Adversary::DropMessage { ordinal: 1 }, UserOracle::Honest, 2);
    assert_eq!(report.finalized_count(), 0, "{}", report.to_text());
    for d in 0..4 {
        assert_eq!(abort_reason(&report, d), AbortReason::Timeout);
    }
    assert_eq!(report.virtual_ms, crate::protocol::DEFAULT_ROUND_TIMEOUT_MS);
}

/// Send ordinals of substantive messages in an honest n=4 schedule. The
/// HELLO ordinals (0, 2, 4) are excluded: HELLO carries no committed
/// value, so corrupting one either aborts (version byte) or is ignored
/// (session id) without compromising any exchanged key material. The
/// SUCCESS_SET ordinals (18..=20) are excluded too: those sends happen
/// after every device has confirmed, so corrupting one copy can only
/// strand its recipient — see `corrupted_success_set_strands_only_target`.
pub(super) const SUBSTANTIVE_ORDINALS_N4: [u64; 15] =
    [1, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17];

#[test]
fn flipped_bits_never_finalize() {
    for seed in 0..15u64 {
        let adversary = Adversary::FlipInBandBit {
            ordinal: SUBSTANTIVE_ORDINALS_N4[seed as usize % 15],
            bit: (seed as usize).wrapping_mul(31) + 3,
        };
        let report = run(4, adversary.clone(), UserOracle::Honest, seed);
        assert_eq!(
            report.finalized_count(),
            0,
            "{:?}:\n{}",
            adversary,
            report.to_text()
        );
    }
}

/// Corrupting a SUCCESS_SET copy happens after unanimous confirmation —
/// past the point of no return. The targeted device must abort without
/// importing anything, while the rest finalize the already-agreed roster.
#[test]
fn corrupted_success_set_strands_only_target() {
    // ordinals 18..=20 are the coordinator's SUCCESS_SET fan-out at n=4
    for (ordinal, target) in [(18u64, 1usize), (19, 2), (20, 3)] {
        let adversary = Adversary::FlipInBandBit { ordinal, bit: 100 };
        let report = run(4, adversary, UserOracle::Honest, 7);
        assert_eq!(report.finalized_count(), 3, "{}", report.to_text());
        assert!(report.roster_digests_agree(), "{}", report.to_text());
        let stranded = &report.devices[target];
        assert!(
            matches!(stranded.outcome, SessionOutcome::Aborted { .. }),
            "{}",
            report.to_text()
        );
        assert_eq!(stranded.imported, 0);
    }
}

#[test]
fn group_size_bounds_enforced() {
    for n in [0, 1, 17] {
        assert_eq!(
            run_simulation(n, Adversary::None, UserOracle::Honest, 1, ProtocolConfig::default()),
            Err(SimError::GroupSizeOutOfBounds(n))
        );
    }
}

#[test]
fn matrix_aggregates_and_flags_violations() {
    let scenarios = vec![
        Scenario {
            name: "honest".into(),
            group_size: 3,
            adversary: Adversary::None,
            oracle: UserOracle::Honest,
        },
        Scenario {
            name: "substitute-commit".into(),
            group_size: 3,
            adversary: Adversary::SubstituteCommit { victim: 1 },
            oracle: UserOracle::Honest,
        },
    ];
    let seeds: Vec<u64> = (0..5).collect();
    let summary = run_matrix(&scenarios, &seeds, &ProtocolConfig::default()).unwrap();
    assert_eq!(summary.rows[0].devices_finalized, 15);
    assert_eq!(summary.rows[0].devices_aborted, 0);
    assert_eq!(summary.rows[1].devices_finalized, 0);
    assert!(!summary.any_violation);
    assert!(summary.to_text().contains("honest 5 15/15 0/15 no"));
}

#[test]
fn adversary_and_oracle_labels_round_trip() {
    let adversaries = [
        Adversary::None,
        Adversary::FlipInBandBit { ordinal: 3, bit: 5 },
        Adversary::SubstituteCommit { victim: 1 },
        Adversary::SubstituteReveal { victim: 2 },
        Adversary::SplitRoster,
        Adversary::InjectExtraParticipant,
        Adversary::DropMessage { ordinal: 9 },
        Adversary::SuppressAborts,
        Adversary::TamperOobDigest { bit: 100 },
    ];
    for a in adversaries {
        assert_eq!(Adversary::parse(&a.name()), Some(a));
    }
    let oracles = [
        UserOracle::Honest,
        UserOracle::AlwaysConfirm,
        UserOracle::AlwaysDecline,
        UserOracle::ConfirmSubset(vec![0, 2]),
    ];
    for o in oracles {
        assert_eq!(UserOracle::parse(&o.name()), Some(o));
    }
    assert_eq!(Adversary::parse("bogus"), None);
    assert_eq!(UserOracle::parse("bogus"), None);
}
