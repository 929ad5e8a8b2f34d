//! `aaa-mdp`: solve, evaluate and stress-test the AAA surgery-timing model.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use aaa_mdp::model::{EventComposition, TerminalReward};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aaa-mdp",
    version,
    about = "Finite-horizon MDP model for AAA surgery timing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Parameter file (TOML).
    #[arg(long)]
    params: PathBuf,

    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Terminal reward at the final age.
    #[arg(long, default_value = "qaly", value_parser = parse_terminal)]
    terminal: TerminalReward,

    /// Order in which background death and rupture are resolved each year.
    #[arg(long, value_enum, default_value_t = Events::BackgroundFirst)]
    events: Events,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Events {
    BackgroundFirst,
    RuptureFirst,
}

impl From<Events> for EventComposition {
    fn from(e: Events) -> Self {
        match e {
            Events::BackgroundFirst => EventComposition::BackgroundFirst,
            Events::RuptureFirst => EventComposition::RuptureFirst,
        }
    }
}

fn parse_terminal(s: &str) -> Result<TerminalReward, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal policy and expected-QALY map.
    Solve(Common),
    /// Expected-QALY map of a given policy.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// `opt`, `p55`, or a policy-grid CSV file.
        #[arg(long, default_value = "p55")]
        policy: String,
    },
    /// QALY gain of the optimal policy over the 55 mm rule.
    Compare(Common),
    /// Surgery ratio over randomly perturbed parameter sets.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// FAMILY=FRACTION, repeatable. Defaults to rupture_prob=0.25.
        #[arg(long = "width")]
        widths: Vec<String>,
    },
    /// Optimal policy under scaled rupture risk for selected bins.
    Bias {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,0.75,0.5")]
        factors: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "55-60mm,60-65mm,65-70mm")]
        bins: Vec<String>,
    },
    /// Check a parameter file and print its validation report.
    Validate {
        #[arg(long)]
        params: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(common) => commands::solve(&common),
        Command::Evaluate { common, policy } => commands::evaluate(&common, &policy),
        Command::Compare(common) => commands::compare(&common),
        Command::Sensitivity {
            common,
            seed,
            replicates,
            widths,
        } => commands::sensitivity(&common, seed, replicates, &widths),
        Command::Bias {
            common,
            factors,
            bins,
        } => commands::bias(&common, &factors, &bins),
        Command::Validate { params } => commands::validate(&params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
