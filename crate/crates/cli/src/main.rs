//! `frodo`: KEM operations, KAT replay and the processor model.

// stdout writes that tolerate a closed pipe
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

mod error;
mod kat_cmd;
mod kem_cmd;
mod sim_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use frodo_core::SecurityLevel;
use frodo_sim::Phase;

use error::{CliError, CliResult};
use kem_cmd::Randomness;

#[derive(Parser)]
#[command(
    name = "frodo",
    version,
    about = "FrodoKEM (SHAKE) and a cycle model of its co-processor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    #[value(name = "640")]
    L640,
    #[value(name = "976")]
    L976,
    #[value(name = "1344")]
    L1344,
    All,
}

impl LevelArg {
    fn levels(self) -> Vec<SecurityLevel> {
        match self {
            LevelArg::L640 => vec![SecurityLevel::Frodo640],
            LevelArg::L976 => vec![SecurityLevel::Frodo976],
            LevelArg::L1344 => vec![SecurityLevel::Frodo1344],
            LevelArg::All => SecurityLevel::ALL.to_vec(),
        }
    }

    fn single(self) -> CliResult<SecurityLevel> {
        match self.levels().as_slice() {
            [l] => Ok(*l),
            _ => Err(CliError::Usage("this command needs a single level".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Keygen,
    Encaps,
    Decaps,
    All,
}

impl PhaseArg {
    fn phases(self) -> Vec<Phase> {
        match self {
            PhaseArg::Keygen => vec![Phase::KeyGen],
            PhaseArg::Encaps => vec![Phase::Encaps],
            PhaseArg::Decaps => vec![Phase::Decaps],
            PhaseArg::All => Phase::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair.
    Keygen {
        #[arg(long)]
        level: LevelArg,
        /// 48-byte DRBG seed in hex; OS randomness when absent.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sk: PathBuf,
    },
    /// Encapsulate to a public key.
    Encaps {
        #[arg(long)]
        level: LevelArg,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long)]
        ss: Option<PathBuf>,
    },
    /// Decapsulate a ciphertext.
    Decaps {
        #[arg(long)]
        level: LevelArg,
        #[arg(long)]
        sk: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long)]
        ss: Option<PathBuf>,
    },
    /// Replay a NIST-style .rsp known-answer file.
    Kat {
        /// Inferred from the secret key size when absent.
        #[arg(long)]
        level: Option<LevelArg>,
        #[arg(long)]
        rsp: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the processor model and compare with published cycle counts.
    Sim {
        #[arg(long, default_value = "640")]
        level: LevelArg,
        #[arg(long, default_value = "keygen")]
        phase: PhaseArg,
        #[arg(long, default_value = "on")]
        overlap: Switch,
        /// 48-byte DRBG seed in hex for the phase inputs.
        #[arg(long)]
        seed: Option<String>,
        /// Write the cycle report here (text, or JSON with --json).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Keygen { level, seed, pk, sk } => {
            let rand = Randomness::from_seed(seed.as_deref())?;
            kem_cmd::keygen(level.single()?, rand, &pk, &sk)?;
            Ok(true)
        }
        Command::Encaps {
            level,
            seed,
            pk,
            ct,
            ss,
        } => {
            let rand = Randomness::from_seed(seed.as_deref())?;
            kem_cmd::encaps(level.single()?, rand, &pk, &ct, ss.as_ref())?;
            Ok(true)
        }
        Command::Decaps { level, sk, ct, ss } => {
            kem_cmd::decaps(level.single()?, &sk, &ct, ss.as_ref())?;
            Ok(true)
        }
        Command::Kat { level, rsp, json } => {
            let level = level.map(LevelArg::single).transpose()?;
            kat_cmd::run(level, &rsp, json)
        }
        Command::Sim {
            level,
            phase,
            overlap,
            seed,
            report,
            json,
        } => {
            let seed = seed.as_deref().map(kem_cmd::parse_seed).transpose()?;
            sim_cmd::run(
                &level.levels(),
                &phase.phases(),
                matches!(overlap, Switch::On),
                seed.as_deref(),
                report.as_deref(),
                json,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("frodo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
