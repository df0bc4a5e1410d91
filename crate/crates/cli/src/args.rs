use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "nonlocal-cascade", version, about = "Sequential sharing of CHSH and Svetlichny nonlocality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One Alice and n sequential Bobs on a bipartite pure state.
    ///
    /// CSV columns: k,gamma_k,simulated,bound,violated
    ChshCascade(ChshArgs),
    /// Alice, Bob and n sequential Charlies on a generalized GHZ state.
    ///
    /// CSV columns: k,gamma_k,simulated,closed_form,violated
    SvetlichnyCascade(SvetlichnyArgs),
    /// Search for the largest angle that keeps n observers' sharpness below 1.
    ///
    /// CSV columns: n,theta_n,theta,k,gamma_k
    FindTheta(FindThetaArgs),
    /// Evaluate a quantity over a parameter grid.
    Sweep(SweepArgs),
    /// Run the closed-form vs simulation self-checks. Exits 1 if any fails.
    ///
    /// CSV columns: suite,check,max_error,tolerance,passed
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Measurement angle. With none of the three flags the angle is searched for.
#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
pub struct ThetaArgs {
    /// Angle in radians, in (0, pi/4].
    #[arg(long, allow_hyphen_values = true, value_parser = parse_real)]
    pub theta: Option<f64>,
    /// Angle as a fraction of pi, in (0, 1/4].
    #[arg(long, allow_hyphen_values = true)]
    pub theta_frac_pi: Option<f64>,
    /// Search for theta (the default).
    #[arg(long)]
    pub auto_theta: bool,
}

impl ThetaArgs {
    /// `None` means search.
    pub fn fixed(&self) -> Option<f64> {
        self.theta.or(self.theta_frac_pi.map(|f| f * PI))
    }
}

#[derive(Args, Debug)]
pub struct ChshArgs {
    /// Schmidt coefficients, comma separated, non-increasing.
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<f64>,
    /// Bob's dimension; defaults to the number of coefficients.
    #[arg(long)]
    pub dim_b: Option<usize>,
    /// Number of sequential Bobs.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// Explicit sharpness values instead of the recursive schedule.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gammas: Option<Vec<f64>>,
    /// Rescale the coefficients to unit norm.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct GhzArgs {
    /// sin^2(2 alpha) of the GHZ state, in (0, 1].
    #[arg(long = "sin2-2alpha", allow_hyphen_values = true)]
    pub sin2_2alpha: Option<f64>,
    /// State angle alpha in radians, in (0, pi/2).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_real)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SvetlichnyArgs {
    #[command(flatten)]
    pub state: GhzArgs,
    /// Number of sequential Charlies.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// Explicit sharpness values instead of the recursive schedule.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gammas: Option<Vec<f64>>,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Chsh,
    Svetlichny,
}

#[derive(Args, Debug)]
pub struct FindThetaArgs {
    #[arg(long, value_enum, default_value_t = Scenario::Chsh)]
    pub scenario: Scenario,
    #[arg(long)]
    pub n: usize,
    /// Entanglement measure L of the bipartite state (chsh).
    #[arg(long = "l", default_value_t = 1.0, allow_hyphen_values = true)]
    pub l: f64,
    /// sin^2(2 alpha) of the GHZ state (svetlichny).
    #[arg(long = "sin2-2alpha", default_value_t = 1.0, allow_hyphen_values = true)]
    pub sin2_2alpha: f64,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub epsilon: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// `START,STOP,STEPS`, inclusive; a single number is a one-point grid.
/// Bounds accept `pi` expressions such as `pi/4` or `0.25pi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridArg {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(subcommand)]
    pub kind: SweepKind,
}

#[derive(Subcommand, Debug)]
pub enum SweepKind {
    /// First Bob's sharpness as a function of theta.
    ///
    /// CSV columns: theta,gamma_1
    Gamma1 {
        #[arg(long, value_parser = parse_grid)]
        theta: GridArg,
        #[arg(long = "l", default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Feasibility edge theta_n and working angle for a range of n.
    ///
    /// CSV columns: n,theta_n,theta (empty where the search fails)
    ThetaN {
        /// `START,STOP`
        #[arg(long = "n-range", value_delimiter = ',', num_args = 1..=2)]
        n_range: Vec<usize>,
        #[arg(long = "l", default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Number of Charlies sharing Svetlichny nonlocality against sin^2(2 alpha).
    ///
    /// CSV columns: sin2_2alpha,max_k_violated
    SvetlichnyMaxK {
        #[arg(long = "sin2-2alpha", value_parser = parse_grid)]
        sin2_2alpha: GridArg,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Number of Bobs violating CHSH over a (theta, L) grid.
    ///
    /// CSV columns: theta,L,max_k_violated
    ChshMaxK {
        #[arg(long, value_parser = parse_grid)]
        theta: GridArg,
        #[arg(long = "l", value_parser = parse_grid, default_value = "1")]
        l: GridArg,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

impl SweepKind {
    pub fn out(&self) -> &OutputArgs {
        match self {
            SweepKind::Gamma1 { out, .. }
            | SweepKind::ThetaN { out, .. }
            | SweepKind::SvetlichnyMaxK { out, .. }
            | SweepKind::ChshMaxK { out, .. } => out,
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// appendix-a, theorem-3, theorem-4, channel or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// A float, or a multiple / fraction of pi: `pi`, `pi/4`, `0.25pi`, `-pi/8`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let bad = || format!("'{s}' is not a number or pi expression");
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d.parse::<f64>().map_err(|_| bad())?)),
        None => (body, None),
    };
    let factor = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(f) => f.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(sign * factor * PI / den.unwrap_or(1.0))
}

pub fn parse_grid(s: &str) -> Result<GridArg, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x] => {
            let x = parse_real(x)?;
            Ok(GridArg { start: x, stop: x, steps: 1 })
        }
        [a, b, n] => {
            let steps = n.trim().parse::<usize>().map_err(|_| format!("'{n}' is not a step count"))?;
            Ok(GridArg { start: parse_real(a)?, stop: parse_real(b)?, steps })
        }
        _ => Err(format!("'{s}' is not START,STOP,STEPS")),
    }
}
