//! Command-line driver: adversarial simulation, modem tooling, and a
//! multi-process pairing demo over TCP + WAV-file OOB.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 timeout
//! abort, 4 OOB-mismatch or integrity abort, 5 user-declined abort.

mod cards;
mod modem_cmds;
mod pair;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pairsonic::modem::{Band, ModemConfig};
use pairsonic::protocol::ProtocolConfig;
use pairsonic::sim::{run_simulation, Adversary, UserOracle};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TIMEOUT: u8 = 3;
pub const EXIT_INTEGRITY: u8 = 4;
pub const EXIT_DECLINED: u8 = 5;

#[derive(Parser)]
#[command(name = "pairsonic", about = "Group pairing over sound: demo, simulator, modem tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandArg {
    Audible,
    Ultrasonic,
}

impl From<BandArg> for Band {
    fn from(b: BandArg) -> Band {
        match b {
            BandArg::Audible => Band::Audible,
            BandArg::Ultrasonic => Band::Ultrasonic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one deterministic adversarial simulation and print its report.
    Simulate {
        /// Group size (2..=16).
        #[arg(long)]
        devices: usize,
        /// Adversary, e.g. none, substitute-commit:1, tamper-oob:17.
        #[arg(long, default_value = "none")]
        adversary: String,
        /// Confirmation oracle: honest, always-confirm, always-decline, subset:0,2.
        #[arg(long, default_value = "honest")]
        oracle: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
    },
    /// Modulate a payload file into a WAV.
    ModemEncode {
        #[arg(long, value_enum, default_value = "audible")]
        band: BandArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Demodulate a WAV; prints recovered payloads as hex lines.
    ModemDecode {
        /// Band to listen in; both bands are tried when omitted.
        #[arg(long, value_enum)]
        band: Option<BandArg>,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Add deterministic white noise to a WAV.
    ModemImpair {
        /// Signal-to-noise ratio in dB.
        #[arg(long)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Announce a pairing session and coordinate it.
    PairCoordinate {
        /// Total number of devices, this one included (2..=16).
        #[arg(long)]
        group_size: usize,
        /// Contact card file to offer to the group.
        #[arg(long)]
        contact: PathBuf,
        /// Directory shared with the other devices for OOB WAV exchange.
        #[arg(long)]
        oob_dir: PathBuf,
        /// In-band listen descriptor, e.g. tcp:127.0.0.1:7465.
        #[arg(long)]
        listen: String,
        /// Skip the lock prompt (CI); equivalent to answering yes.
        #[arg(long)]
        auto_confirm: bool,
        /// Which finalized peer cards to import: all, none, or indices 0,2.
        #[arg(long, default_value = "all")]
        import: String,
        /// Write the finalized group card set to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
    },
    /// Listen for an announced session and join it.
    PairJoin {
        #[arg(long)]
        contact: PathBuf,
        #[arg(long)]
        oob_dir: PathBuf,
        #[arg(long)]
        auto_confirm: bool,
        #[arg(long, default_value = "all")]
        import: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate {
            devices,
            adversary,
            oracle,
            seed,
            report,
            timeout_ms,
        } => cmd_simulate(devices, &adversary, &oracle, seed, report, timeout_ms),
        Command::ModemEncode { band, input, output } => {
            modem_cmds::encode(ModemConfig::with_band(band.into()), &input, &output)
        }
        Command::ModemDecode { band, input } => {
            modem_cmds::decode(band.map(Band::from), &input)
        }
        Command::ModemImpair {
            snr,
            seed,
            input,
            output,
        } => modem_cmds::impair_wav(snr, seed, &input, &output),
        Command::PairCoordinate {
            group_size,
            contact,
            oob_dir,
            listen,
            auto_confirm,
            import,
            out,
            timeout_ms,
        } => pair::run(pair::PairArgs {
            role: pair::RoleArg::Coordinate { group_size, listen },
            contact,
            oob_dir,
            auto_confirm,
            import,
            out,
            timeout_ms,
        }),
        Command::PairJoin {
            contact,
            oob_dir,
            auto_confirm,
            import,
            out,
            timeout_ms,
        } => pair::run(pair::PairArgs {
            role: pair::RoleArg::Join,
            contact,
            oob_dir,
            auto_confirm,
            import,
            out,
            timeout_ms,
        }),
    };
    ExitCode::from(code)
}

fn cmd_simulate(
    devices: usize,
    adversary: &str,
    oracle: &str,
    seed: u64,
    report_path: Option<PathBuf>,
    timeout_ms: u64,
) -> u8 {
    let Some(adversary) = Adversary::parse(adversary) else {
        eprintln!("error: unknown adversary {adversary:?}");
        return EXIT_USAGE;
    };
    let Some(oracle) = UserOracle::parse(oracle) else {
        eprintln!("error: unknown oracle {oracle:?}");
        return EXIT_USAGE;
    };
    let config = ProtocolConfig {
        round_timeout_ms: timeout_ms,
        ..ProtocolConfig::default()
    };
    let violation_possible = adversary.modifies_committed_values();
    let report = match run_simulation(devices, adversary, oracle, seed, config) {
        Ok(report) => report,
        Err(pairsonic::sim::SimError::GroupSizeOutOfBounds(n)) => {
            eprintln!("error: --devices {n} outside 2..=16");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = report_path {
        if let Err(e) = std::fs::write(&path, &text) {
            eprintln!("error: writing {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if violation_possible && report.finalized_count() > 0 {
        eprintln!("SAFETY VIOLATION: device finalized under an active adversary");
        return EXIT_FAILURE;
    }
    EXIT_OK
}
