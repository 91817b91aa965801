//! Pixel-level primitives: grayscale conversion, median denoising, Otsu
//! binarization, edge maps and foreground centers of mass.
//!
//! Intensity convention throughout the crate: 0 is black ink, 255 is white
//! paper, and binary foreground means ink (intensity at or below the
//! threshold).

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1 (got {width}x{height})")]
    ZeroDimension { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    PixelCountMismatch { expected: usize, actual: usize },
    #[error("unsupported channel count {0} (expected 1..=4)")]
    UnsupportedChannels(u32),
    #[error("region [{left},{right})x[{top},{bottom}) is empty")]
    EmptyRegion {
        left: u32,
        top: u32,
        right: u32,
        bottom: u32,
    },
    #[error("region [{left},{right})x[{top},{bottom}) exceeds image {width}x{height}")]
    RegionOutOfBounds {
        left: u32,
        top: u32,
        right: u32,
        bottom: u32,
        width: u32,
        height: u32,
    },
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::PixelCountMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> u8,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn constant(width: u32, height: u32, value: u8) -> Result<Self, ImageError> {
        Self::new(
            width,
            height,
            vec![value; width as usize * height as usize],
        )
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

/// Boolean raster; `true` marks foreground (ink).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32, mask: Vec<bool>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width as usize * height as usize;
        if mask.len() != expected {
            return Err(ImageError::PixelCountMismatch {
                expected,
                actual: mask.len(),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    /// All-background mask with the given dimensions.
    pub fn blank(width: u32, height: u32) -> Result<Self, ImageError> {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> bool,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let mut mask = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self::new(width, height, mask)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.mask[y as usize * self.width as usize + x as usize]
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Axis-aligned pixel rectangle: `left`/`top` inclusive, `right`/`bottom`
/// exclusive.
///
/// The public constructor rejects empty rectangles. Zero-area regions do
/// exist internally: a degenerate quad split of a one-pixel-wide axis has
/// nowhere to put an interior boundary, and its starved children keep the
/// zone count and the exact-partition property intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
}

impl Region {
    pub fn new(left: u32, top: u32, right: u32, bottom: u32) -> Result<Self, ImageError> {
        if left >= right || top >= bottom {
            return Err(ImageError::EmptyRegion {
                left,
                top,
                right,
                bottom,
            });
        }
        Ok(Self {
            left,
            top,
            right,
            bottom,
        })
    }

    pub(crate) fn allow_empty(left: u32, top: u32, right: u32, bottom: u32) -> Self {
        debug_assert!(left <= right && top <= bottom);
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    /// Region covering a whole raster.
    pub fn full(width: u32, height: u32) -> Self {
        Self {
            left: 0,
            top: 0,
            right: width,
            bottom: height,
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.right - self.left
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.bottom - self.top
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.left == self.right || self.top == self.bottom
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.left && x < self.right && y >= self.top && y < self.bottom
    }

    pub fn check_within(&self, width: u32, height: u32) -> Result<(), ImageError> {
        if self.right > width || self.bottom > height {
            return Err(ImageError::RegionOutOfBounds {
                left: self.left,
                top: self.top,
                right: self.right,
                bottom: self.bottom,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Rec. 601 luminance reduction of an interleaved multi-channel raster.
///
/// One channel passes through; three channels map via
/// `round(0.299 R + 0.587 G + 0.114 B)`. Two- and four-channel rasters are
/// treated as gray+alpha and RGB+alpha, with alpha ignored.
pub fn to_grayscale(
    width: u32,
    height: u32,
    channels: u32,
    data: &[u8],
) -> Result<GrayImage, ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height });
    }
    if channels == 0 || channels > 4 {
        return Err(ImageError::UnsupportedChannels(channels));
    }
    let count = width as usize * height as usize;
    let expected = count * channels as usize;
    if data.len() != expected {
        return Err(ImageError::PixelCountMismatch {
            expected,
            actual: data.len(),
        });
    }
    let pixels = match channels {
        1 => data.to_vec(),
        2 => data.chunks_exact(2).map(|px| px[0]).collect(),
        _ => data
            .chunks_exact(channels as usize)
            .map(|px| {
                let luma =
                    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
                luma.round() as u8
            })
            .collect(),
    };
    GrayImage::new(width, height, pixels)
}

/// Median filter with a `(2 radius + 1)^2` window and replicated borders.
///
/// Radius 0 is the identity.
pub fn median_filter(img: &GrayImage, radius: u32) -> GrayImage {
    if radius == 0 {
        return img.clone();
    }
    let w = img.width() as i64;
    let h = img.height() as i64;
    let r = radius as i64;
    let side = (2 * radius + 1) as usize;
    let mut window = vec![0u8; side * side];
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut n = 0;
            for dy in -r..=r {
                let sy = (y + dy).clamp(0, h - 1) as u32;
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w - 1) as u32;
                    window[n] = img.get(sx, sy);
                    n += 1;
                }
            }
            let mid = n / 2;
            let (_, median, _) = window[..n].select_nth_unstable(mid);
            out.push(*median);
        }
    }
    GrayImage::new(img.width(), img.height(), out).expect("dimensions preserved")
}

/// Otsu threshold plus a degeneracy marker for single-valued histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtsuThreshold {
    pub value: u8,
    /// Set when the histogram has a single occupied bin; callers treat the
    /// whole image as background.
    pub degenerate: bool,
}

/// Threshold maximizing between-class variance over the 256-bin histogram.
///
/// Foreground is defined as intensity <= threshold (ink is dark); ties are
/// broken toward the lowest qualifying threshold.
pub fn otsu_threshold(img: &GrayImage) -> OtsuThreshold {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let total: u64 = img.pixels().len() as u64;
    let total_sum: u64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u64 * c)
        .sum();

    let mut best: Option<(f64, u8)> = None;
    let mut w0: u64 = 0;
    let mut s0: u64 = 0;
    for t in 0..=255u16 {
        w0 += hist[t as usize];
        s0 += t as u64 * hist[t as usize];
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let mean0 = s0 as f64 / w0 as f64;
        let mean1 = (total_sum - s0) as f64 / w1 as f64;
        let variance = w0 as f64 * w1 as f64 * (mean0 - mean1) * (mean0 - mean1);
        if best.is_none_or(|(v, _)| variance > v) {
            best = Some((variance, t as u8));
        }
    }
    match best {
        Some((_, value)) => OtsuThreshold {
            value,
            degenerate: false,
        },
        // Single occupied bin: report the constant itself.
        None => OtsuThreshold {
            value: img.pixels()[0],
            degenerate: true,
        },
    }
}

/// Mask of pixels at or below the threshold.
pub fn binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    let mask = img.pixels().iter().map(|&p| p <= threshold).collect();
    BinaryImage::new(img.width(), img.height(), mask).expect("dimensions preserved")
}

/// Otsu threshold applied with the degenerate-histogram convention: a
/// single-valued image yields an all-background mask.
pub fn otsu_binarize(img: &GrayImage) -> BinaryImage {
    let otsu = otsu_threshold(img);
    if otsu.degenerate {
        BinaryImage::blank(img.width(), img.height()).expect("nonzero dimensions")
    } else {
        binarize(img, otsu.value)
    }
}

/// Inner-gradient edge map: a pixel is an edge iff it is foreground and at
/// least one in-bounds 4-neighbor is background.
pub fn edge_map(bin: &BinaryImage) -> BinaryImage {
    let w = bin.width();
    let h = bin.height();
    BinaryImage::from_fn(w, h, |x, y| {
        if !bin.get(x, y) {
            return false;
        }
        (x > 0 && !bin.get(x - 1, y))
            || (x + 1 < w && !bin.get(x + 1, y))
            || (y > 0 && !bin.get(x, y - 1))
            || (y + 1 < h && !bin.get(x, y + 1))
    })
    .expect("dimensions preserved")
}

/// Center of mass of a region's foreground, in fractional pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
    /// Set when the region holds no foreground; the coordinates then fall
    /// back to the region's geometric center.
    pub empty: bool,
}

/// Mean x and y of foreground pixels inside `region`.
pub fn center_of_mass(bin: &BinaryImage, region: Region) -> Result<Centroid, ImageError> {
    region.check_within(bin.width(), bin.height())?;
    let mut count: u64 = 0;
    let mut sum_x: u64 = 0;
    let mut sum_y: u64 = 0;
    for y in region.top..region.bottom {
        for x in region.left..region.right {
            if bin.get(x, y) {
                count += 1;
                sum_x += x as u64;
                sum_y += y as u64;
            }
        }
    }
    if count == 0 {
        return Ok(Centroid {
            x: (region.left + region.right - 1) as f64 / 2.0,
            y: (region.top + region.bottom - 1) as f64 / 2.0,
            empty: true,
        });
    }
    Ok(Centroid {
        x: sum_x as f64 / count as f64,
        y: sum_y as f64 / count as f64,
        empty: false,
    })
}
