use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thermal_bell::photon::SourceKind;

#[derive(Parser, Debug)]
#[command(name = "thermal-bell", version, about = "CHSH violation with thermal and pseudo-thermal light")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Thermal,
    Pseudothermal,
}

impl From<Kind> for SourceKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Thermal => SourceKind::Thermal,
            Kind::Pseudothermal => SourceKind::Pseudothermal,
        }
    }
}

/// Flags accepted by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Fock cutoff for dense computations.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Probability mass allowed in truncated photon-number tails.
    #[arg(long, default_value_t = 1e-12)]
    pub tail_eps: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// ℬ_max for thermal light over a β_A × β_B grid.
    #[command(args_override_self = true)]
    Fig2 {
        #[arg(long, default_value_t = 0.01)]
        a_min: f64,
        #[arg(long, default_value_t = 1.0)]
        a_max: f64,
        #[arg(long)]
        b_min: Option<f64>,
        #[arg(long)]
        b_max: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[command(flatten)]
        common: Common,
    },
    /// ⟨n⟩_B at which ℬ_max = 2, for each ⟨n⟩_A, for both source kinds.
    #[command(args_override_self = true)]
    Border {
        #[arg(long, default_value_t = 0.5)]
        a_min: f64,
        #[arg(long, default_value_t = 50.0)]
        a_max: f64,
        #[arg(long, default_value_t = 0.5)]
        a_step: f64,
        #[arg(long, default_value_t = 0.01)]
        b_min: f64,
        #[arg(long, default_value_t = 1e4)]
        b_max: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Violation report for identical sources; with only --omega, the
    /// minimal temperature.
    #[command(args_override_self = true)]
    Threshold {
        #[arg(long, value_enum, default_value_t = Kind::Thermal)]
        kind: Kind,
        /// Angular frequency in rad/s.
        #[arg(long)]
        omega: Option<f64>,
        /// Temperature in kelvin.
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        mean_n: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Oracle-versus-closed-form checks; exits 3 on any failure.
    #[command(args_override_self = true)]
    Verify {
        /// Replace every tolerance with this value.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Kerr phase in units of π.
        #[arg(long, default_value_t = 1.0)]
        kerr_phase: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Multi-mode sources: product vacuum overlap and minimal mode count.
    #[command(args_override_self = true)]
    Multimode {
        /// Comma-separated kind:mean list, e.g. thermal:1,pseudothermal:0.5
        #[arg(long, conflicts_with_all = ["kind", "mean_n", "count"])]
        modes: Option<String>,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        mean_n: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerated and closed-form CHSH value for one pair of sources.
    #[command(args_override_self = true)]
    Bell {
        #[command(flatten)]
        sources: Sources,
        /// Also search all angles on a grid with this step (degrees).
        #[arg(long)]
        search_step: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of the CHSH value.
    #[command(args_override_self = true)]
    Sample {
        #[command(flatten)]
        sources: Sources,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Sources {
    #[arg(long, value_enum, default_value_t = Kind::Thermal)]
    pub kind_a: Kind,
    #[arg(long)]
    pub mean_a: f64,
    /// Defaults to --kind-a.
    #[arg(long, value_enum)]
    pub kind_b: Option<Kind>,
    /// Defaults to --mean-a.
    #[arg(long)]
    pub mean_b: Option<f64>,
    /// θ_A, θ'_A, θ_B, θ'_B in radians.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
}
