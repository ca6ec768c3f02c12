//! Command-line front end.
//!
//! Every command writes into the directory given by `--out`: fixed file
//! names plus a `manifest.txt`. Exit codes: 0 success, 2 input error,
//! 3 solver error, 4 size error, 5 identification error.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::Treatment;
use crate::error::Error;

pub use config::{parse_config, BidderSpec, SellerSpec, SimSpec};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "auctionlab",
    version,
    about = "Auction equilibria, simulation and revealed-preference tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate an equilibrium bid function.
    Equilibrium(EquilibriumArgs),
    /// Simulate auction sessions from a configuration file.
    Simulate(SimulateArgs),
    /// Revealed-preference tests of each bidder's data.
    TestRp(TestRpArgs),
    /// Estimate seller tolerance, bidding slopes or seller types.
    Estimate(EstimateArgs),
}

fn parse_treatment(s: &str) -> Result<Treatment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[arg(long, value_parser = parse_treatment)]
    pub treatment: Treatment,
    /// Seller tolerance for overcharging (NCSP only).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Sup-norm tolerance on the first-order condition.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured number of rounds.
    #[arg(long)]
    pub rounds: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreatmentFilter {
    All,
    Fp,
    Ncsp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeliefArg {
    Equilibrium,
    Population,
}

/// Where the NCSP test takes `γ` from.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaArg {
    /// Estimate from the NCSP rounds of the data.
    Auto,
    Value(f64),
    /// `gamma_hat` of a run manifest.
    Manifest(PathBuf),
}

fn parse_gamma(s: &str) -> Result<GammaArg, String> {
    if s == "auto" {
        return Ok(GammaArg::Auto);
    }
    if let Ok(g) = s.parse::<f64>() {
        return if g > 0.0 && g.is_finite() {
            Ok(GammaArg::Value(g))
        } else {
            Err(format!("gamma must be positive, got {s}"))
        };
    }
    let p = PathBuf::from(s);
    if p.is_dir() {
        Ok(GammaArg::Manifest(p.join(manifest::MANIFEST_NAME)))
    } else if p.is_file() {
        Ok(GammaArg::Manifest(p))
    } else {
        Err(format!(
            "'{s}' is neither auto, a number, nor an existing manifest"
        ))
    }
}

/// Significance levels, in the order given.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    if s.trim().is_empty() || s == "none" {
        return Ok(Levels(vec![]));
    }
    s.split(',')
        .map(|x| {
            let p: f64 = x
                .trim()
                .parse()
                .map_err(|_| format!("bad significance level '{x}'"))?;
            if p > 0.0 && p < 1.0 {
                Ok(p)
            } else {
                Err(format!("significance level {p} outside (0, 1)"))
            }
        })
        .collect::<Result<_, _>>()
        .map(Levels)
}

#[derive(Debug, Args)]
pub struct TestRpArgs {
    /// Rounds or bids CSV, or a directory holding rounds.csv / bids.csv.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = TreatmentFilter::All)]
    pub treatment: TreatmentFilter,
    #[arg(long, value_enum, default_value_t = BeliefArg::Equilibrium)]
    pub belief: BeliefArg,
    /// `auto`, a positive number, or a run manifest (file or directory).
    #[arg(long, value_parser = parse_gamma, default_value = "auto")]
    pub gamma: GammaArg,
    /// Also compute the learning-weighted index.
    #[arg(long)]
    pub learning: bool,
    /// First-price supergradient with the equilibrium-bid Jacobian.
    #[arg(long)]
    pub jacobian: bool,
    /// Alternative sign convention for the NCSP concavity rows.
    #[arg(long)]
    pub printed_signs: bool,
    /// Comma-separated significance levels for power-corrected pass rates,
    /// or `none`.
    #[arg(long, value_parser = parse_levels, default_value = "0.10,0.05")]
    pub power: Levels,
    /// Synthetic random bidders per treatment for calibration; 0 disables it.
    #[arg(long, default_value_t = 1000)]
    pub power_subjects: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateWhat {
    Gamma,
    Bidfn,
    Sellers,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub what: EstimateWhat,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_)
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::DegenerateObservation { .. } => 2,
        Error::NonConvergence { .. } | Error::Solver(_) | Error::Singular(_) => 3,
        Error::Size { .. } => 4,
        Error::Identification(_) | Error::UndefinedStatistic(_) => 5,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("AUCTIONLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Domain(format!(
            "AUCTIONLAB_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    // A pool that already exists (tests calling `run` twice) is left alone.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Results go to stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|()| {
        let mut stdout = std::io::stdout().lock();
        match &cli.command {
            Command::Equilibrium(a) => commands::equilibrium(a, &mut stdout),
            Command::Simulate(a) => commands::simulate(a, &mut stdout),
            Command::TestRp(a) => commands::test_rp(a, &mut stdout),
            Command::Estimate(a) => commands::estimate(a, &mut stdout),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::NonConvergence {
                iterations: 1,
                residual: 1.0
            }),
            3
        );
        assert_eq!(
            exit_code(&Error::Size {
                what: "x",
                actual: 30,
                limit: 20
            }),
            4
        );
        assert_eq!(exit_code(&Error::Identification(String::new())), 5);
    }

    #[test]
    fn argument_parsers() {
        assert_eq!(parse_gamma("auto").unwrap(), GammaArg::Auto);
        assert_eq!(parse_gamma("10").unwrap(), GammaArg::Value(10.0));
        assert!(parse_gamma("-1").is_err());
        assert!(parse_gamma("/no/such/file").is_err());
        assert_eq!(parse_levels("0.1, 0.05").unwrap().0, vec![0.1, 0.05]);
        assert!(parse_levels("none").unwrap().0.is_empty());
        assert!(parse_levels("1.5").is_err());
    }

    #[test]
    fn subcommand_names() {
        let c =
            Cli::try_parse_from(["auctionlab", "test-rp", "--data", "d", "--out", "o"]).unwrap();
        match c.command {
            Command::TestRp(a) => {
                assert_eq!(a.power.0, vec![0.10, 0.05]);
                assert_eq!(a.gamma, GammaArg::Auto);
            }
            other => panic!("{other:?}"),
        }
    }
}
