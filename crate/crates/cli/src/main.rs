mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ekscope", version, about = "Prime omega windows and interval estimates for ω(m)")]
pub struct Cli {
    /// Cache sieved windows under the cache directory.
    #[arg(long, global = true)]
    pub cache: bool,

    /// Cache directory; setting it also turns caching on.
    #[arg(long, global = true, env = "EKSCOPE_CACHE", value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// ω and Ω for every integer in [center − j, center + j].
    Window {
        #[arg(long, value_parser = parse_int)]
        center: u64,
        #[arg(long)]
        j: u64,
    },
    /// Conventional and fuzzy coverage of one estimator.
    Coverage(CoverageArgs),
    /// Inclusion and exclusion points for k = 1..k_max.
    Points {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        level: Level,
        #[arg(long, default_value_t = 8)]
        k_max: u32,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift: f64,
    },
    /// Bounds of every estimator at the given m or ℓ₂ values.
    Intervals {
        #[command(flatten)]
        at: Location,
        #[command(flatten)]
        level: Level,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1")]
        lambda: Vec<f64>,
        /// Trained model; adds the three trained estimators.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
    /// Fit a trained model on a grid of m.
    Train(TrainArgs),
    /// Occurrences of ω(m) above the λ = 1 upper bound.
    Separation {
        #[command(flatten)]
        level: Level,
        #[arg(long, value_parser = parse_int)]
        n_max: u64,
        #[arg(long)]
        count: usize,
        /// `lo:hi:step` grid of z values; overrides --alpha/--z.
        #[arg(long, value_name = "LO:HI:STEP")]
        z_grid: Option<String>,
    },
    /// Width-minimizing λ on a grid of ℓ₂ values.
    OptimalLambda {
        #[arg(long)]
        z: f64,
        /// Comma list, or `lo:hi:count` spaced geometrically.
        #[arg(long, value_name = "GRID")]
        ell2_grid: String,
    },
    /// ω(φ(m)) against its normal order ℓ₂²/2.
    Ep {
        #[arg(long, value_parser = parse_int)]
        m_lo: u64,
        #[arg(long, value_parser = parse_int)]
        m_hi: u64,
        #[arg(long, default_value_t = 1)]
        step: u64,
        #[arg(long, default_value_t = 0.25)]
        lambda: f64,
        /// Emit one row per m instead of the summary.
        #[arg(long)]
        rows: bool,
    },
    /// Distance between the empirical CDF of the statistic and Φ.
    CdfCheck {
        #[arg(long, value_delimiter = ',', value_parser = parse_int, required = true)]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        lambda: Vec<f64>,
    },
}

/// Coverage level as α or z; defaults to z = 0.9.
#[derive(Args, Debug, Clone, Copy)]
pub struct Level {
    #[arg(long, conflicts_with = "z")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub z: Option<f64>,
}

/// Integers `m` or raw ℓ₂ values.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Location {
    /// Comma list; accepts `100000`, `1e8`, `10^8`.
    #[arg(long, value_delimiter = ',', value_parser = parse_int)]
    pub m: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub ell2: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Boxcox,
    Score,
    Poisson,
    TrainedBoxcox,
    TrainedScore,
    TrainedPoisson,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub at: Location,
    #[arg(long, default_value_t = 2000)]
    pub j: u64,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Boxcox)]
    pub estimator: EstimatorKind,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[command(flatten)]
    pub level: Level,
    /// Shift of the Box-Cox centre, e.g. −1.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Also report fuzzy coverage.
    #[arg(long)]
    pub fuzzy: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaForm {
    Sd,
    Variance,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "10000", value_parser = parse_int)]
    pub m_lo: u64,
    #[arg(long, default_value = "1000000", value_parser = parse_int)]
    pub m_hi: u64,
    #[arg(long, default_value_t = 1000)]
    pub step: u64,
    #[arg(long, default_value_t = 2000)]
    pub j: u64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Dump the smoothed series as CSV.
    #[arg(long, value_name = "FILE")]
    pub series: Option<PathBuf>,
    /// Read ω from a saved window file instead of sieving.
    #[arg(long, value_name = "FILE")]
    pub window_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "search_powers")]
    pub q_mu: Option<f64>,
    #[arg(long, conflicts_with = "search_powers")]
    pub q_sigma: Option<f64>,
    /// Use the correlation-maximizing powers instead of q_mu = 1, q_sigma = 1/λ.
    #[arg(long)]
    pub search_powers: bool,
    #[arg(long, value_enum, default_value_t = EtaForm::Sd)]
    pub eta: EtaForm,
}

/// Parses `123`, `1e8`, `2.5e6` or `10^8` into an exact integer.
pub fn parse_int(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let (mant, exp) = if let Some((b, e)) = s.split_once('^') {
        if b != "10" {
            return Err(format!("only powers of 10 are supported: {s}"));
        }
        ("1", e)
    } else if let Some((m, e)) = s.split_once(['e', 'E']) {
        (m, e)
    } else {
        return Err(format!("not an integer: {s}"));
    };
    let exp: u32 = exp.parse().map_err(|_| format!("bad exponent in {s}"))?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int_part}{frac_part}");
    let shift = exp
        .checked_sub(frac_part.len() as u32)
        .ok_or_else(|| format!("{s} is not an integer"))?;
    let base: u64 = digits.parse().map_err(|_| format!("bad mantissa in {s}"))?;
    10u64
        .checked_pow(shift)
        .and_then(|p| base.checked_mul(p))
        .ok_or_else(|| format!("{s} does not fit in 64 bits"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
