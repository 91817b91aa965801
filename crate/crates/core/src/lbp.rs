//! Local binary pattern transform and uniform-pattern labeling.
//!
//! A pixel's raw code packs the sign bits of its neighbor-minus-center
//! differences; codes whose circular bit sequence has at most two
//! transitions are "uniform" and labeled by their popcount, everything
//! else collapses into the miscellaneous label `P + 1`. Neighbors are read
//! counter-clockwise starting from the east neighbor; the convention is
//! arbitrary but frozen so codes are reproducible.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, PartialEq)]
pub enum LbpError {
    #[error("invalid LBP parameters: {0}")]
    InvalidParams(String),
    #[error("pixel ({x},{y}) is inside the {margin}-pixel validity margin")]
    OutOfMargin { x: u32, y: u32, margin: u32 },
    #[error("image {width}x{height} is smaller than the {min}x{min} minimum for radius {radius}")]
    ImageTooSmall {
        width: u32,
        height: u32,
        min: u32,
        radius: f64,
    },
}

/// Neighborhood sampling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbpMode {
    /// The 8 grid neighbors of a 3x3 block; requires P = 8, R = 1.
    Block3x3,
    /// P points on a circle of radius R, bilinearly interpolated.
    CircularInterpolated,
}

impl fmt::Display for LbpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LbpMode::Block3x3 => "block3x3",
            LbpMode::CircularInterpolated => "circular",
        })
    }
}

impl FromStr for LbpMode {
    type Err = LbpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block3x3" => Ok(LbpMode::Block3x3),
            "circular" => Ok(LbpMode::CircularInterpolated),
            other => Err(LbpError::InvalidParams(format!(
                "unknown LBP mode {other:?}, expected block3x3 or circular"
            ))),
        }
    }
}

/// LBP operator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbpParams {
    /// Neighbor count.
    pub p: u8,
    /// Sampling radius in pixels.
    pub r: f64,
    /// Difference threshold: a neighbor counts as "not below" the center
    /// when `neighbor - center >= t`. The standard operator uses t = 0,
    /// which sends flat patches to the all-ones code.
    pub t: u8,
    pub mode: LbpMode,
}

impl Default for LbpParams {
    fn default() -> Self {
        Self {
            p: 8,
            r: 1.0,
            t: 0,
            mode: LbpMode::Block3x3,
        }
    }
}

impl LbpParams {
    pub fn validate(&self) -> Result<(), LbpError> {
        if self.p < 4 || self.p > 24 {
            return Err(LbpError::InvalidParams(format!(
                "neighbor count P must be in 4..=24, got {}",
                self.p
            )));
        }
        if !self.r.is_finite() || self.r < 1.0 {
            return Err(LbpError::InvalidParams(format!(
                "radius R must be >= 1, got {}",
                self.r
            )));
        }
        if self.mode == LbpMode::Block3x3 && (self.p != 8 || self.r != 1.0) {
            return Err(LbpError::InvalidParams(format!(
                "block3x3 mode requires P=8, R=1 (got P={}, R={})",
                self.p, self.r
            )));
        }
        Ok(())
    }

    /// Border width excluded from the transform.
    pub fn margin(&self) -> u32 {
        self.r.ceil() as u32
    }

    /// Number of histogram bins after nonuniform suppression (labels 0..=P).
    pub fn uniform_bins(&self) -> usize {
        self.p as usize + 1
    }
}

/// Per-pixel uniform-LBP labels with a validity border.
///
/// Pixels closer than `margin` to any edge carry no texture evidence and
/// are excluded from every histogram; their stored label is zero-filled
/// and must not be read without checking [`LabelMap::is_valid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u8>,
    margin: u32,
    p: u8,
}

impl LabelMap {
    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn margin(&self) -> u32 {
        self.margin
    }

    /// Neighbor count the labels were computed with.
    #[inline]
    pub fn neighbor_count(&self) -> u8 {
        self.p
    }

    #[inline]
    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        x >= self.margin
            && y >= self.margin
            && x < self.width - self.margin
            && y < self.height - self.margin
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y as usize * self.width as usize + x as usize]
    }
}

#[inline]
fn sign_bit(diff: f64, t: u8) -> u32 {
    (diff >= t as f64) as u32
}

fn bilinear(img: &GrayImage, fx: f64, fy: f64) -> f64 {
    let x0 = fx.floor();
    let y0 = fy.floor();
    let dx = fx - x0;
    let dy = fy - y0;
    let x0 = x0 as u32;
    let y0 = y0 as u32;
    // The +1 samples carry zero weight when dx or dy is exactly 0; clamp so
    // an on-grid sample at the last valid column never reads out of bounds.
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let p00 = img.get(x0, y0) as f64;
    let p10 = img.get(x1, y0) as f64;
    let p01 = img.get(x0, y1) as f64;
    let p11 = img.get(x1, y1) as f64;
    (1.0 - dx) * (1.0 - dy) * p00 + dx * (1.0 - dy) * p10 + (1.0 - dx) * dy * p01 + dx * dy * p11
}

/// Raw LBP code at one pixel: bit p is the sign of neighbor p minus the
/// center, neighbors counter-clockwise from east.
pub fn lbp_code(img: &GrayImage, x: u32, y: u32, params: &LbpParams) -> Result<u32, LbpError> {
    params.validate()?;
    let margin = params.margin();
    if x < margin || y < margin || x + margin >= img.width() || y + margin >= img.height() {
        return Err(LbpError::OutOfMargin { x, y, margin });
    }
    Ok(code_unchecked(img, x, y, params))
}

fn code_unchecked(img: &GrayImage, x: u32, y: u32, params: &LbpParams) -> u32 {
    let center = img.get(x, y) as i32;
    match params.mode {
        LbpMode::Block3x3 => {
            // E, NE, N, NW, W, SW, S, SE (counter-clockwise, y axis down)
            let neighbors = [
                img.get(x + 1, y),
                img.get(x + 1, y - 1),
                img.get(x, y - 1),
                img.get(x - 1, y - 1),
                img.get(x - 1, y),
                img.get(x - 1, y + 1),
                img.get(x, y + 1),
                img.get(x + 1, y + 1),
            ];
            let t = params.t as i32;
            let mut code = 0u32;
            for (p, &g) in neighbors.iter().enumerate() {
                code |= (((g as i32 - center) >= t) as u32) << p;
            }
            code
        }
        LbpMode::CircularInterpolated => {
            let mut code = 0u32;
            for p in 0..params.p {
                let angle = 2.0 * std::f64::consts::PI * p as f64 / params.p as f64;
                let fx = x as f64 + params.r * angle.cos();
                let fy = y as f64 - params.r * angle.sin();
                let g = bilinear(img, fx, fy);
                code |= sign_bit(g - center as f64, params.t) << p;
            }
            code
        }
    }
}

/// Circular transition count of a code's bit sequence (Ojala's U).
pub fn uniformity(code: u32, p: u8) -> u32 {
    debug_assert!(p >= 1 && (p as u32) < 32 && code < (1u32 << p));
    let rotated = (code >> 1) | ((code & 1) << (p - 1));
    (code ^ rotated).count_ones()
}

/// Uniform label: popcount for codes with at most two transitions, the
/// miscellaneous label `P + 1` otherwise.
pub fn uniform_label(code: u32, p: u8) -> u8 {
    if uniformity(code, p) <= 2 {
        code.count_ones() as u8
    } else {
        p + 1
    }
}

/// Precomputed code -> label table for P = 8.
pub fn build_uniform_lut() -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (code, slot) in lut.iter_mut().enumerate() {
        *slot = uniform_label(code as u32, 8);
    }
    lut
}

/// Dense uniform-label map over every valid pixel.
pub fn lbp_transform(img: &GrayImage, params: &LbpParams) -> Result<LabelMap, LbpError> {
    params.validate()?;
    let margin = params.margin();
    let min = 2 * margin + 1;
    if img.width() < min || img.height() < min {
        return Err(LbpError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min,
            radius: params.r,
        });
    }
    let w = img.width() as usize;
    let mut labels = vec![0u8; w * img.height() as usize];
    if params.mode == LbpMode::Block3x3 {
        let lut = build_uniform_lut();
        for y in margin..img.height() - margin {
            for x in margin..img.width() - margin {
                let code = code_unchecked(img, x, y, params);
                labels[y as usize * w + x as usize] = lut[code as usize];
            }
        }
    } else {
        for y in margin..img.height() - margin {
            for x in margin..img.width() - margin {
                let code = code_unchecked(img, x, y, params);
                labels[y as usize * w + x as usize] = uniform_label(code, params.p);
            }
        }
    }
    Ok(LabelMap {
        width: img.width(),
        height: img.height(),
        labels,
        margin,
        p: params.p,
    })
}
