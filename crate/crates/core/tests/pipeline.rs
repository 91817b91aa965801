//! Cross-module properties of the extraction pipeline: invariance to
//! intensity remaps, locality of zone blocks, and corpus-level
//! determinism.

use lbpspot_core::descriptor::{normalize_and_weight, zone_histogram};
use lbpspot_core::image::{
    binarize, edge_map, median_filter, otsu_threshold, BinaryImage, GrayImage,
};
use lbpspot_core::lbp::lbp_transform;
use lbpspot_core::retrieval::CorpusItem;
use lbpspot_core::spatial::sample_zones;
use lbpspot_core::{
    build_index, extract_descriptor, extract_trace, Descriptor32, Descriptor64, ExtractConfig,
    LbpParams,
};

fn xorshift(state: &mut u64) -> u64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    *state
}

fn random_image(width: u32, height: u32, seed: u64, max_value: u8) -> GrayImage {
    let mut state = seed | 1;
    GrayImage::from_fn(width, height, |_, _| {
        (xorshift(&mut state) % (max_value as u64 + 1)) as u8
    })
    .unwrap()
}

/// With the binary mask pinned (fixed threshold on the original image),
/// a strictly increasing affine remap of the intensities changes nothing:
/// the median filter commutes with monotone maps, LBP signs are
/// difference-based, and zones and edge weights come from the shared mask.
#[test]
fn fixed_mask_pipeline_is_bit_identical_under_remap() {
    let params = LbpParams::default();
    for seed in 0..40u64 {
        let img = random_image(24, 16, seed * 7 + 1, 100);
        let remapped =
            GrayImage::from_fn(24, 16, |x, y| 2 * img.get(x, y) + 40).unwrap();

        let filtered = median_filter(&img, 1);
        let filtered_r = median_filter(&remapped, 1);

        let labels = lbp_transform(&filtered, &params).unwrap();
        let labels_r = lbp_transform(&filtered_r, &params).unwrap();
        assert_eq!(labels, labels_r, "seed {seed}: label maps diverged");

        // shared mask fixed from the original image only
        let mask = binarize(&filtered, 50);
        let zones = sample_zones(&mask, 2).unwrap();
        let edges = edge_map(&mask);

        for zone in zones.zones() {
            let edge_count = (zone.top..zone.bottom)
                .flat_map(|y| (zone.left..zone.right).map(move |x| (x, y)))
                .filter(|&(x, y)| edges.get(x, y))
                .count() as u64;
            let ratio = if zone.area() == 0 {
                0.0
            } else {
                edge_count as f64 / zone.area() as f64
            };
            let block: Vec<f64> =
                normalize_and_weight(&zone_histogram(&labels, *zone).unwrap(), ratio).unwrap();
            let block_r: Vec<f64> =
                normalize_and_weight(&zone_histogram(&labels_r, *zone).unwrap(), ratio).unwrap();
            assert_eq!(block, block_r, "seed {seed}");
        }
    }
}

/// A uniform brightness shift leaves differences untouched, so whenever
/// Otsu's threshold tracks the shift (it almost always does), the whole
/// descriptor is bit-identical.
#[test]
fn brightness_shift_preserves_descriptor_when_threshold_tracks() {
    let config = ExtractConfig::default();
    let mut tracked = 0;
    for seed in 0..50u64 {
        let shift = (seed % 5 + 1) as u8 * 10;
        let img = random_image(30, 18, seed * 13 + 5, 180);
        let shifted =
            GrayImage::from_fn(30, 18, |x, y| img.get(x, y) + shift).unwrap();

        let t = otsu_threshold(&median_filter(&img, 1));
        let t_shifted = otsu_threshold(&median_filter(&shifted, 1));
        if t.degenerate || t_shifted.value != t.value + shift {
            continue;
        }
        tracked += 1;
        let a: lbpspot_core::Descriptor<f64> = extract_descriptor(&img, &config).unwrap();
        let b: lbpspot_core::Descriptor<f64> = extract_descriptor(&shifted, &config).unwrap();
        assert_eq!(a, b, "seed {seed}, shift {shift}");
    }
    assert!(tracked >= 40, "only {tracked}/50 shifts kept the threshold");
}

/// Zones that contain no ink at all must contribute exactly zero blocks.
///
/// The centroid splits chase the mass, so most shapes leave a little ink
/// in every zone; a one-pixel-high stroke is the exception, because the
/// horizontal cut lands exactly on the stroke row and the entire northern
/// half goes ink-free. The median filter is off so the thin stroke
/// survives binarization.
#[test]
fn zones_without_ink_contribute_zero_blocks() {
    let img = GrayImage::from_fn(40, 24, |x, y| {
        if y == 9 && (5..35).contains(&x) {
            20
        } else {
            235
        }
    })
    .unwrap();
    let config = ExtractConfig {
        median_radius: 0,
        ..ExtractConfig::default()
    };
    let trace = extract_trace::<f64>(&img, &config).unwrap();
    assert!(trace.mask.foreground_count() > 0);

    let mut empty_zones = 0;
    for (i, zone) in trace.zones.zones().enumerate() {
        let has_ink = (zone.top..zone.bottom)
            .flat_map(|y| (zone.left..zone.right).map(move |x| (x, y)))
            .any(|(x, y)| trace.mask.get(x, y));
        if !has_ink {
            empty_zones += 1;
            let block = &trace.descriptor.values[i * 9..(i + 1) * 9];
            assert!(
                block.iter().all(|&v| v == 0.0),
                "ink-free zone {i} has a nonzero block"
            );
        }
    }
    assert!(
        empty_zones >= 3,
        "expected several ink-free zones, found {empty_zones}"
    );
}

/// Corpus processing order cannot leak into the result: the index is
/// id-sorted and each descriptor depends only on its own image.
#[test]
fn corpus_descriptors_independent_of_processing_order() {
    let config = ExtractConfig::default();
    let corpus: Vec<CorpusItem> = (0..6)
        .map(|i| CorpusItem {
            id: format!("word-{i}"),
            page: format!("page-{}", i / 3),
            label: Some(format!("label{}", i % 2)),
            image: random_image(28 + i * 3, 18, 1000 + i as u64, 255),
        })
        .collect();
    let mut reversed = corpus.clone();
    reversed.reverse();

    let forward = build_index::<f64>(&corpus, &config).unwrap();
    let backward = build_index::<f64>(&reversed, &config).unwrap();
    assert_eq!(forward.index, backward.index);
    assert!(forward.failures.is_empty());
}

/// Both scalar instantiations stay available through the crate-root
/// aliases and agree to single precision.
#[test]
fn scalar_aliases_cover_f32_and_f64() {
    let img = random_image(32, 20, 99, 255);
    let config = ExtractConfig::default();
    let single: Descriptor32 = extract_descriptor(&img, &config).unwrap();
    let double: Descriptor64 = extract_descriptor(&img, &config).unwrap();
    assert_eq!(single.dim(), double.dim());
    for (a, b) in single.values.iter().zip(&double.values) {
        assert!((*a as f64 - b).abs() < 1e-6);
    }
}

/// A blank page stays an all-zero vector through the whole pipeline, and
/// masks, edges and labels stay consistent on the way.
#[test]
fn blank_page_trace_is_coherent() {
    let img = GrayImage::constant(36, 20, 244).unwrap();
    let trace = extract_trace::<f64>(&img, &ExtractConfig::default()).unwrap();
    assert!(trace.threshold.degenerate);
    assert_eq!(trace.mask.foreground_count(), 0);
    assert_eq!(trace.edges.foreground_count(), 0);
    assert!(trace.descriptor.values.iter().all(|&v| v == 0.0));
    assert_eq!(trace.descriptor.values.len(), 180);
    // zones still partition the raster
    let full: BinaryImage = trace.mask.clone();
    for level in 1..=trace.zones.levels() {
        for y in 0..full.height() {
            for x in 0..full.width() {
                let owners = trace
                    .zones
                    .level(level)
                    .iter()
                    .filter(|z| z.contains(x, y))
                    .count();
                assert_eq!(owners, 1);
            }
        }
    }
}
