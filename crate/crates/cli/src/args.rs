//! Command-line surface. Every flag can also come from an `LBPSPOT_*`
//! environment variable of the same name.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use lbpspot_core::lbp::{LbpMode, LbpParams};
use lbpspot_core::{EdgeRatioMode, ExtractConfig, DEFAULT_LAMBDA};

use crate::manifest::Split;

#[derive(Parser, Debug)]
#[command(
    name = "lbpspot",
    version,
    about = "Query-by-example word spotting over segmented word images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extract descriptors for a manifest and write an index file
    Index(IndexArgs),
    /// Rank indexed words against a query image
    Query(QueryArgs),
    /// Run the all-words-as-queries benchmark over an index
    Evaluate(EvaluateArgs),
    /// Dump one image's zones, edge ratios, and descriptor
    Describe(DescribeArgs),
}

/// Extraction parameters, spelled out with defaults. Used by commands
/// that create descriptors from scratch.
#[derive(Args, Debug, Clone)]
pub struct ExtractFlags {
    /// Median prefilter radius in pixels (0 disables)
    #[arg(long, default_value_t = 1, env = "LBPSPOT_MEDIAN_RADIUS")]
    pub median_radius: u32,

    /// LBP neighbor count
    #[arg(long = "lbp-p", default_value_t = 8, env = "LBPSPOT_LBP_P")]
    pub lbp_p: u8,

    /// LBP sampling radius in pixels
    #[arg(long = "lbp-r", default_value_t = 1.0, env = "LBPSPOT_LBP_R")]
    pub lbp_r: f64,

    /// LBP difference threshold
    #[arg(long = "lbp-t", default_value_t = 0, env = "LBPSPOT_LBP_T")]
    pub lbp_t: u8,

    /// Neighborhood sampling: block3x3 or circular
    #[arg(long = "lbp-mode", default_value = "block3x3", env = "LBPSPOT_LBP_MODE")]
    pub lbp_mode: LbpMode,

    /// Quad-split depth (2 gives 4 + 16 zones)
    #[arg(long, default_value_t = 2, env = "LBPSPOT_LEVELS")]
    pub levels: u32,

    /// Histogram weighting denominator: zone or global
    #[arg(long, default_value = "zone", env = "LBPSPOT_EDGE_RATIO")]
    pub edge_ratio: EdgeRatioMode,
}

impl ExtractFlags {
    pub fn to_config(&self) -> ExtractConfig {
        ExtractConfig {
            median_radius: self.median_radius,
            lbp: LbpParams {
                p: self.lbp_p,
                r: self.lbp_r,
                t: self.lbp_t,
                mode: self.lbp_mode,
            },
            levels: self.levels,
            edge_ratio: self.edge_ratio,
        }
    }
}

/// Extraction parameters as optional assertions. Commands that serve an
/// existing index take its stored config as the truth; any flag given
/// here must agree with it, otherwise the command refuses to run.
#[derive(Args, Debug, Clone, Default)]
pub struct ExtractOverrides {
    /// Must match the index's median radius when given
    #[arg(long, env = "LBPSPOT_MEDIAN_RADIUS")]
    pub median_radius: Option<u32>,

    /// Must match the index's LBP neighbor count when given
    #[arg(long = "lbp-p", env = "LBPSPOT_LBP_P")]
    pub lbp_p: Option<u8>,

    /// Must match the index's LBP radius when given
    #[arg(long = "lbp-r", env = "LBPSPOT_LBP_R")]
    pub lbp_r: Option<f64>,

    /// Must match the index's LBP threshold when given
    #[arg(long = "lbp-t", env = "LBPSPOT_LBP_T")]
    pub lbp_t: Option<u8>,

    /// Must match the index's LBP mode when given
    #[arg(long = "lbp-mode", env = "LBPSPOT_LBP_MODE")]
    pub lbp_mode: Option<LbpMode>,

    /// Must match the index's split depth when given
    #[arg(long, env = "LBPSPOT_LEVELS")]
    pub levels: Option<u32>,

    /// Must match the index's edge-ratio mode when given
    #[arg(long, env = "LBPSPOT_EDGE_RATIO")]
    pub edge_ratio: Option<EdgeRatioMode>,
}

impl ExtractOverrides {
    /// Mismatch descriptions against a loaded config; empty means
    /// compatible.
    pub fn mismatches(&self, config: &ExtractConfig) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(v) = self.median_radius {
            if v != config.median_radius {
                out.push(format!("median-radius: {v} != {}", config.median_radius));
            }
        }
        if let Some(v) = self.lbp_p {
            if v != config.lbp.p {
                out.push(format!("lbp-p: {v} != {}", config.lbp.p));
            }
        }
        if let Some(v) = self.lbp_r {
            if v != config.lbp.r {
                out.push(format!("lbp-r: {v} != {}", config.lbp.r));
            }
        }
        if let Some(v) = self.lbp_t {
            if v != config.lbp.t {
                out.push(format!("lbp-t: {v} != {}", config.lbp.t));
            }
        }
        if let Some(v) = self.lbp_mode {
            if v != config.lbp.mode {
                out.push(format!("lbp-mode: {v} != {}", config.lbp.mode));
            }
        }
        if let Some(v) = self.levels {
            if v != config.levels {
                out.push(format!("levels: {v} != {}", config.levels));
            }
        }
        if let Some(v) = self.edge_ratio {
            if v != config.edge_ratio {
                out.push(format!("edge-ratio: {v} != {}", config.edge_ratio));
            }
        }
        out
    }
}

/// Manifest subset selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

impl SplitChoice {
    pub fn to_filter(self) -> Option<Split> {
        match self {
            SplitChoice::Train => Some(Split::Train),
            SplitChoice::Test => Some(Split::Test),
            SplitChoice::All => None,
        }
    }
}

impl fmt::Display for SplitChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitChoice::Train => "train",
            SplitChoice::Test => "test",
            SplitChoice::All => "all",
        })
    }
}

impl FromStr for SplitChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitChoice::Train),
            "test" => Ok(SplitChoice::Test),
            "all" => Ok(SplitChoice::All),
            other => Err(format!("unknown split {other:?}, expected train, test, or all")),
        }
    }
}

pub fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, got {other:?}")),
    }
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    /// Manifest file: tab-separated path, transcription, page, split
    pub manifest: PathBuf,

    /// Output index file
    #[arg(long, short = 'o', env = "LBPSPOT_OUTPUT")]
    pub output: PathBuf,

    /// Manifest split to index: train, test, or all
    #[arg(long, default_value = "all", env = "LBPSPOT_SPLIT")]
    pub split: SplitChoice,

    #[command(flatten)]
    pub extract: ExtractFlags,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Index file to search
    #[arg(long, env = "LBPSPOT_INDEX")]
    pub index: PathBuf,

    /// Query word image
    pub image: PathBuf,

    /// Number of results
    #[arg(long, short, default_value_t = 10, env = "LBPSPOT_K")]
    pub k: usize,

    /// Width penalty weight
    #[arg(long, default_value_t = DEFAULT_LAMBDA, env = "LBPSPOT_LAMBDA")]
    pub lambda: f64,

    /// Drop candidates whose width agreement is below this instead of
    /// penalizing them
    #[arg(long, env = "LBPSPOT_WIDTH_FILTER")]
    pub width_filter: Option<f64>,

    #[command(flatten)]
    pub extract: ExtractOverrides,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Index file holding the benchmark corpus (typically the test split)
    #[arg(long, env = "LBPSPOT_INDEX")]
    pub index: PathBuf,

    /// Width penalty weight
    #[arg(long, default_value_t = DEFAULT_LAMBDA, env = "LBPSPOT_LAMBDA")]
    pub lambda: f64,

    /// on|off: leave each query out of its own candidate set
    #[arg(
        long,
        default_value = "on",
        value_parser = parse_on_off,
        env = "LBPSPOT_EXCLUDE_SELF"
    )]
    pub exclude_self: bool,

    /// Drop candidates whose width agreement is below this
    #[arg(long, env = "LBPSPOT_WIDTH_FILTER")]
    pub width_filter: Option<f64>,

    /// Comma-separated lambda values to try; the best mAP wins and its
    /// lambda is reported as metric.chosen_lambda
    #[arg(long, value_delimiter = ',', env = "LBPSPOT_LAMBDA_SWEEP")]
    pub lambda_sweep: Option<Vec<f64>>,

    /// Also write the report to this file
    #[arg(long, env = "LBPSPOT_REPORT")]
    pub report: Option<PathBuf>,

    #[command(flatten)]
    pub extract: ExtractOverrides,
}

#[derive(Args, Debug)]
pub struct DescribeArgs {
    /// Word image to dissect
    pub image: PathBuf,

    /// Write the uniform-LBP label map as a PNG
    #[arg(long, env = "LBPSPOT_DUMP_LBP")]
    pub dump_lbp: Option<PathBuf>,

    /// Write the binary mask with zone boundaries as a PNG
    #[arg(long, env = "LBPSPOT_DUMP_ZONES")]
    pub dump_zones: Option<PathBuf>,

    #[command(flatten)]
    pub extract: ExtractFlags,
}
