//! Image file decoding and debug raster encoding.
//!
//! Decoded files are reduced to grayscale by the core's own Rec. 601
//! conversion rather than the decoder's, so descriptor values depend only
//! on pixel data and never on the decoding library's colorimetry.

use std::path::{Path, PathBuf};

use image::DynamicImage;
use thiserror::Error;

use lbpspot_core::image::{to_grayscale, BinaryImage, ImageError};
use lbpspot_core::lbp::LabelMap;
use lbpspot_core::spatial::ZoneSet;
use lbpspot_core::GrayImage;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("cannot decode {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("cannot encode {path}: {source}")]
    Encode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Convert {
        path: PathBuf,
        source: ImageError,
    },
}

/// Decode an image file into the core gray raster.
pub fn load_gray(path: &Path) -> Result<GrayImage, ImageIoError> {
    let decoded = image::open(path).map_err(|source| ImageIoError::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let convert = |source| ImageIoError::Convert {
        path: path.to_path_buf(),
        source,
    };
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            to_grayscale(w, h, 1, buf.as_raw()).map_err(convert)
        }
        DynamicImage::ImageLumaA8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            to_grayscale(w, h, 2, buf.as_raw()).map_err(convert)
        }
        DynamicImage::ImageRgb8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            to_grayscale(w, h, 3, buf.as_raw()).map_err(convert)
        }
        DynamicImage::ImageRgba8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            to_grayscale(w, h, 4, buf.as_raw()).map_err(convert)
        }
        other => {
            // deeper bit depths funnel through an 8-bit RGB view
            let buf = other.to_rgb8();
            let (w, h) = (buf.width(), buf.height());
            to_grayscale(w, h, 3, buf.as_raw()).map_err(convert)
        }
    }
}

fn save_png(path: &Path, width: u32, height: u32, pixels: Vec<u8>) -> Result<(), ImageIoError> {
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(width, height, pixels).expect("sized buffer");
    buf.save(path).map_err(|source| ImageIoError::Encode {
        path: path.to_path_buf(),
        source,
    })
}

/// Dump an LBP label map as a PNG, labels spread over the gray range
/// (label 0 black through label 9 bright; margin pixels white).
pub fn save_label_png(path: &Path, labels: &LabelMap) -> Result<(), ImageIoError> {
    let mut pixels = Vec::with_capacity((labels.width() * labels.height()) as usize);
    for y in 0..labels.height() {
        for x in 0..labels.width() {
            if labels.is_valid(x, y) {
                pixels.push(labels.get(x, y).saturating_mul(25));
            } else {
                pixels.push(255);
            }
        }
    }
    save_png(path, labels.width(), labels.height(), pixels)
}

/// Dump the binary mask with zone boundaries overlaid in mid-gray.
pub fn save_zone_png(path: &Path, mask: &BinaryImage, zones: &ZoneSet) -> Result<(), ImageIoError> {
    let mut pixels = vec![0u8; (mask.width() * mask.height()) as usize];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let i = (y * mask.width() + x) as usize;
            pixels[i] = if mask.get(x, y) { 0 } else { 255 };
        }
    }
    let deepest = zones.levels();
    for zone in zones.level(deepest) {
        if zone.is_empty() {
            continue;
        }
        for x in zone.left..zone.right {
            pixels[(zone.top * mask.width() + x) as usize] = 128;
        }
        for y in zone.top..zone.bottom {
            pixels[(y * mask.width() + zone.left) as usize] = 128;
        }
    }
    save_png(path, mask.width(), mask.height(), pixels)
}
