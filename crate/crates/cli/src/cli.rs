use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gam_core::sweep::snr_range_db;
use gam_core::Scheme;

/// Golden angle modulation: constellations, mutual information, optimization.
#[derive(Debug, Parser)]
#[command(name = "gam", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a constellation, write its JSON file and print its metrics.
    Generate(GenerateArgs),
    /// Print power, PAPR, entropy, minimum distance and DC offset.
    Metrics(MetricsArgs),
    /// Mutual information over an SNR grid, with capacity reference rows.
    MiSweep(MiSweepArgs),
    /// Maximize MI over the radii of a 16-point (or any N) bell GAM.
    Optimize(OptimizeArgs),
    /// Symbol error rate of minimum-distance detection over an SNR grid.
    SerSweep(SerSweepArgs),
    /// SNR needed by each scheme to reach a target MI, and the gaps.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mc,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Hr,
    Disc,
}

pub fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|_| {
        let names: Vec<_> = Scheme::ALL.iter().map(|s| s.as_str()).collect();
        format!("unknown scheme '{s}' (expected one of {})", names.join(", "))
    })
}

/// SNR points in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrList(pub Vec<f64>);

/// `a,b,c` or `start:stop:step`, in dB.
pub fn parse_snr_list(s: &str) -> Result<SnrList, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad SNR '{t}': {e}"));
    if s.contains(':') {
        let parts: Vec<_> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("SNR range must be start:stop:step, got '{s}'"));
        };
        snr_range_db(num(a)?, num(b)?, num(c)?)
            .map(SnrList)
            .map_err(|e| e.to_string())
    } else {
        let v = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("SNR values must be finite, got '{s}'"));
        }
        Ok(SnrList(v))
    }
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Constellation scheme; repeat or separate by commas for several.
    #[arg(long, value_parser = parse_scheme, value_delimiter = ',', required_unless_present = "input")]
    pub scheme: Vec<Scheme>,
    /// Number of points; repeat or separate by commas for several.
    #[arg(long, value_delimiter = ',', required_unless_present = "input")]
    pub n: Vec<usize>,
    /// Average power.
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Constellation JSON file instead of --scheme/--n.
    #[arg(long, conflicts_with_all = ["scheme", "n"])]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file. Defaults to stdout, or a file in $GAM_OUT_DIR when set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Output file. Defaults to `<scheme>-<n>.json` in $GAM_OUT_DIR or the
    /// working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Args)]
pub struct Estimation {
    #[arg(long, value_enum, default_value_t = MethodArg::Mc)]
    pub method: MethodArg,
    /// Monte Carlo samples per SNR point.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 512)]
    pub nodes: usize,
    /// Grid half width beyond the constellation, in noise standard deviations.
    #[arg(long, default_value_t = 10.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MiSweepArgs {
    #[command(flatten)]
    pub source: Source,
    /// SNR points in dB: `a,b,c` or `start:stop:step`.
    #[arg(long, value_parser = parse_snr_list, allow_hyphen_values = true)]
    pub snr: SnrList,
    #[command(flatten)]
    pub estimation: Estimation,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Average SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: f64,
    /// Upper bound on peak over mean power (linear).
    #[arg(long)]
    pub papr_cap: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitArg::Hr)]
    pub init: InitArg,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Stop when an iteration improves MI by less than this many bits.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Grid nodes per axis of the objective.
    #[arg(long, default_value_t = 192)]
    pub nodes: usize,
    /// Average power of the written constellation.
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Exit with status 3 when the solver does not converge.
    #[arg(long)]
    pub strict: bool,
    /// Result JSON. Defaults to `g1-<n>.result.json` in $GAM_OUT_DIR or the
    /// working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Constellation JSON. Defaults to `g1-<n>.json` next to the result.
    #[arg(long)]
    pub constellation_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SerSweepArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_parser = parse_snr_list, allow_hyphen_values = true)]
    pub snr: SnrList,
    /// Symbols per SNR point.
    #[arg(long, default_value_t = 100_000)]
    pub symbols: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Target MI in bits per channel use.
    #[arg(long)]
    pub target_mi: f64,
    /// MI sweep CSV files to read instead of computing sweeps.
    #[arg(long = "input", conflicts_with_all = ["scheme", "n"], required_unless_present = "scheme")]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_parser = parse_scheme, value_delimiter = ',', requires = "n")]
    pub scheme: Vec<Scheme>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// SNR points in dB for computed sweeps.
    #[arg(long, value_parser = parse_snr_list, allow_hyphen_values = true, requires = "scheme")]
    pub snr: Option<SnrList>,
    #[command(flatten)]
    pub estimation: Estimation,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}
