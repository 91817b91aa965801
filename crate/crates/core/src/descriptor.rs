//! Word descriptor assembly: pooled uniform-LBP histograms weighted by
//! edge density.
//!
//! The pipeline median-filters the gray image, binarizes it with Otsu's
//! threshold, derives centroid-adapted zones and a stroke edge map from
//! the mask, and computes uniform-LBP labels on the filtered gray image.
//! Each zone contributes one histogram over the uniform labels
//! (nonuniform pixels are discarded), L1-normalized and scaled by the
//! zone's edge ratio, and the blocks are concatenated in fixed zone order.
//! With the default 8-neighbor operator and two split levels that is
//! 20 zones of 9 bins, a 180-component vector.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::image::{
    edge_map, median_filter, otsu_threshold, BinaryImage, GrayImage, ImageError, OtsuThreshold,
    Region,
};
use crate::lbp::{lbp_transform, LabelMap, LbpError, LbpParams};
use crate::spatial::{expected_zone_count, sample_zones, SpatialError, ZoneSet, MAX_LEVELS};
use crate::scalar::Scalar;

pub const MAX_MEDIAN_RADIUS: u32 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum DescriptorError {
    #[error("invalid extraction config: {0}")]
    InvalidConfig(String),
    #[error("image {width}x{height} is below the {min}x{min} extraction minimum")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("edge ratio {0} is outside [0, 1]")]
    EdgeRatioOutOfRange(f64),
    #[error(transparent)]
    Lbp(#[from] LbpError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Denominator used when weighting a zone's histogram by edge content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRatioMode {
    /// Edge pixels in the zone over the zone's pixel count.
    Zone,
    /// Edge pixels in the zone over the image's total edge pixel count.
    Global,
}

impl fmt::Display for EdgeRatioMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeRatioMode::Zone => "zone",
            EdgeRatioMode::Global => "global",
        })
    }
}

impl FromStr for EdgeRatioMode {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zone" => Ok(EdgeRatioMode::Zone),
            "global" => Ok(EdgeRatioMode::Global),
            other => Err(DescriptorError::InvalidConfig(format!(
                "unknown edge-ratio mode {other:?}, expected zone or global"
            ))),
        }
    }
}

/// Every knob of the extraction pipeline.
///
/// Two descriptors are comparable only when their configs match, so the
/// whole struct folds into a [`fingerprint`](ExtractConfig::fingerprint)
/// that persisted indexes carry and queries verify.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    /// Median filter radius in pixels (window side 2r+1); 0 disables.
    pub median_radius: u32,
    pub lbp: LbpParams,
    /// Quad-split depth; zones per image is the sum of 4^l over levels.
    pub levels: u32,
    pub edge_ratio: EdgeRatioMode,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            median_radius: 1,
            lbp: LbpParams::default(),
            levels: 2,
            edge_ratio: EdgeRatioMode::Zone,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if self.median_radius > MAX_MEDIAN_RADIUS {
            return Err(DescriptorError::InvalidConfig(format!(
                "median radius must be <= {MAX_MEDIAN_RADIUS}, got {}",
                self.median_radius
            )));
        }
        if self.levels == 0 || self.levels > MAX_LEVELS {
            return Err(DescriptorError::InvalidConfig(format!(
                "levels must be in 1..={MAX_LEVELS}, got {}",
                self.levels
            )));
        }
        self.lbp.validate()?;
        Ok(())
    }

    /// Descriptor length: zone count times uniform bin count.
    pub fn dim(&self) -> usize {
        expected_zone_count(self.levels) * self.lbp.uniform_bins()
    }

    /// Smallest acceptable image side.
    pub fn min_side(&self) -> u32 {
        (2 * self.lbp.margin() + 1).max(4)
    }

    /// Stable 64-bit digest of every parameter that shapes descriptor
    /// values (FNV-1a over a fixed little-endian field layout). Query-time
    /// knobs like the width penalty weight are deliberately not included.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(20);
        bytes.extend_from_slice(&self.median_radius.to_le_bytes());
        bytes.push(self.lbp.p);
        bytes.push(match self.lbp.mode {
            crate::lbp::LbpMode::Block3x3 => 0,
            crate::lbp::LbpMode::CircularInterpolated => 1,
        });
        bytes.push(self.lbp.t);
        bytes.extend_from_slice(&self.lbp.r.to_bits().to_le_bytes());
        bytes.extend_from_slice(&self.levels.to_le_bytes());
        bytes.push(match self.edge_ratio {
            EdgeRatioMode::Zone => 0,
            EdgeRatioMode::Global => 1,
        });
        fnv1a_64(&bytes)
    }
}

fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Fixed-length word feature plus the retrieval side channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor<S: Scalar> {
    /// Concatenated weighted histogram blocks, all components >= 0.
    pub values: Vec<S>,
    /// Source image width in pixels, consumed by the width-ratio penalty.
    pub width: u32,
    /// Transcription, when the corpus provides one.
    pub label: Option<String>,
}

impl<S: Scalar> Descriptor<S> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Histogram of uniform labels 0..=P over a zone's valid pixels.
///
/// Margin pixels never count; the nonuniform label P+1 is dropped. A zone
/// lying entirely inside the margin (or empty) yields all zeros.
pub fn zone_histogram(map: &LabelMap, zone: Region) -> Result<Vec<u64>, DescriptorError> {
    zone.check_within(map.width(), map.height())?;
    let bins = map.neighbor_count() as usize + 1;
    let mut hist = vec![0u64; bins];
    for y in zone.top..zone.bottom {
        for x in zone.left..zone.right {
            if map.is_valid(x, y) {
                let label = map.get(x, y) as usize;
                if label < bins {
                    hist[label] += 1;
                }
            }
        }
    }
    Ok(hist)
}

/// L1-normalize a histogram and scale it to the given edge ratio.
///
/// An empty histogram stays a zero block regardless of the ratio.
pub fn normalize_and_weight<S: Scalar>(
    hist: &[u64],
    edge_ratio: S,
) -> Result<Vec<S>, DescriptorError> {
    if edge_ratio < S::zero() || edge_ratio > S::one() {
        return Err(DescriptorError::EdgeRatioOutOfRange(
            edge_ratio.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Ok(vec![S::zero(); hist.len()]);
    }
    let total = S::from_count(total);
    Ok(hist
        .iter()
        .map(|&h| S::from_count(h) / total * edge_ratio)
        .collect())
}

/// Intermediate products of one extraction, kept for inspection tooling.
#[derive(Debug, Clone)]
pub struct ExtractionTrace<S: Scalar> {
    pub descriptor: Descriptor<S>,
    pub zones: ZoneSet,
    /// One edge ratio per zone, in zone order.
    pub edge_ratios: Vec<S>,
    pub threshold: OtsuThreshold,
    pub mask: BinaryImage,
    pub labels: LabelMap,
    pub edges: BinaryImage,
}

fn foreground_in(bin: &BinaryImage, zone: Region) -> u64 {
    let mut count = 0u64;
    for y in zone.top..zone.bottom {
        for x in zone.left..zone.right {
            if bin.get(x, y) {
                count += 1;
            }
        }
    }
    count
}

/// Full extraction pipeline, returning the intermediates alongside the
/// descriptor.
pub fn extract_trace<S: Scalar>(
    img: &GrayImage,
    config: &ExtractConfig,
) -> Result<ExtractionTrace<S>, DescriptorError> {
    config.validate()?;
    let min = config.min_side();
    if img.width() < min || img.height() < min {
        return Err(DescriptorError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min,
        });
    }
    let filtered = median_filter(img, config.median_radius);
    let threshold = otsu_threshold(&filtered);
    let mask = if threshold.degenerate {
        BinaryImage::blank(filtered.width(), filtered.height()).expect("nonzero dims")
    } else {
        crate::image::binarize(&filtered, threshold.value)
    };
    let zones = sample_zones(&mask, config.levels)?;
    let labels = lbp_transform(&filtered, &config.lbp)?;
    let edges = edge_map(&mask);
    let total_edges = edges.foreground_count() as u64;

    let mut values = Vec::with_capacity(config.dim());
    let mut edge_ratios = Vec::with_capacity(expected_zone_count(config.levels));
    for &zone in zones.zones() {
        let hist = zone_histogram(&labels, zone)?;
        let zone_edges = foreground_in(&edges, zone);
        let denominator = match config.edge_ratio {
            EdgeRatioMode::Zone => zone.area(),
            EdgeRatioMode::Global => total_edges,
        };
        let ratio = if denominator == 0 {
            S::zero()
        } else {
            S::from_count(zone_edges) / S::from_count(denominator)
        };
        edge_ratios.push(ratio);
        values.extend(normalize_and_weight(&hist, ratio)?);
    }
    debug_assert_eq!(values.len(), config.dim());
    Ok(ExtractionTrace {
        descriptor: Descriptor {
            values,
            width: img.width(),
            label: None,
        },
        zones,
        edge_ratios,
        threshold,
        mask,
        labels,
        edges,
    })
}

/// Extract one word descriptor.
pub fn extract_descriptor<S: Scalar>(
    img: &GrayImage,
    config: &ExtractConfig,
) -> Result<Descriptor<S>, DescriptorError> {
    extract_trace(img, config).map(|trace| trace.descriptor)
}
