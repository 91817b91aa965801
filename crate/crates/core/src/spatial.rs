//! Content-adaptive zoning via recursive center-of-mass quad splits.
//!
//! Each region is cut once horizontally and once vertically at its
//! foreground centroid (rounded half-up, pinned inside the region), giving
//! four children that tile the parent exactly. Splitting the whole image
//! and then each child yields the 4 + 16 zones used for pooling. Regions
//! with an axis of extent one cannot host an interior cut; their starved
//! children are zero-area, which keeps the zone count and the partition
//! property intact.

use thiserror::Error;

use crate::image::{center_of_mass, BinaryImage, ImageError, Region};

pub const MAX_LEVELS: u32 = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpatialError {
    #[error("levels must be in 1..={MAX_LEVELS}, got {0}")]
    InvalidLevels(u32),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// One centroid split of a region into NW, NE, SW, SE children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSplit {
    /// Children in NW, NE, SW, SE order.
    pub children: [Region; 4],
    /// First column of the eastern children.
    pub split_x: u32,
    /// First row of the southern children.
    pub split_y: u32,
    /// Set when an axis was too thin to cut, leaving zero-area children.
    pub degenerate: bool,
}

#[inline]
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Pin a split coordinate so both sides keep at least one pixel when the
/// axis allows it; a single-pixel axis collapses the high side instead.
fn split_coord(centroid: f64, lo: u32, hi: u32) -> u32 {
    debug_assert!(lo < hi);
    let min = lo + 1;
    let max = (hi - 1).max(min);
    round_half_up(centroid).clamp(min as f64, max as f64) as u32
}

/// Split `region` at the centroid of its foreground in `mask`.
///
/// An empty foreground falls back to the geometric center, so blank
/// regions still split deterministically. An already-empty region (from an
/// earlier degenerate split) yields four empty children.
pub fn quad_split(mask: &BinaryImage, region: Region) -> Result<QuadSplit, SpatialError> {
    region.check_within(mask.width(), mask.height())?;
    if region.is_empty() {
        let empty = Region::allow_empty(region.left, region.top, region.left, region.top);
        return Ok(QuadSplit {
            children: [empty; 4],
            split_x: region.left,
            split_y: region.top,
            degenerate: true,
        });
    }
    let c = center_of_mass(mask, region)?;
    let sx = split_coord(c.x, region.left, region.right);
    let sy = split_coord(c.y, region.top, region.bottom);
    let child = |l: u32, t: u32, r: u32, b: u32| Region::allow_empty(l, t, r, b);
    Ok(QuadSplit {
        children: [
            child(region.left, region.top, sx, sy),
            child(sx, region.top, region.right, sy),
            child(region.left, sy, sx, region.bottom),
            child(sx, sy, region.right, region.bottom),
        ],
        split_x: sx,
        split_y: sy,
        degenerate: region.width() < 2 || region.height() < 2,
    })
}

/// Zones from `levels` rounds of recursive quad splitting.
///
/// Level l holds 4^l regions; the pooled zone sequence concatenates the
/// levels in order, each level enumerated parent-by-parent with children
/// in NW, NE, SW, SE order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneSet {
    per_level: Vec<Vec<Region>>,
    degenerate: bool,
}

impl ZoneSet {
    pub fn levels(&self) -> u32 {
        self.per_level.len() as u32
    }

    /// Regions of one level, 1-based.
    pub fn level(&self, level: u32) -> &[Region] {
        &self.per_level[(level - 1) as usize]
    }

    /// All pooled zones in descriptor order.
    pub fn zones(&self) -> impl Iterator<Item = &Region> {
        self.per_level.iter().flatten()
    }

    pub fn zone_count(&self) -> usize {
        self.per_level.iter().map(Vec::len).sum()
    }

    /// True when any split hit a single-pixel axis or an empty region.
    pub fn had_degenerate_split(&self) -> bool {
        self.degenerate
    }
}

/// Total zone count for a level budget: sum of 4^l for l in 1..=levels.
pub fn expected_zone_count(levels: u32) -> usize {
    (1..=levels).map(|l| 4usize.pow(l)).sum()
}

/// Recursively split the full mask into centroid-adapted zones.
pub fn sample_zones(mask: &BinaryImage, levels: u32) -> Result<ZoneSet, SpatialError> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(SpatialError::InvalidLevels(levels));
    }
    let mut per_level: Vec<Vec<Region>> = Vec::with_capacity(levels as usize);
    let mut degenerate = false;
    let mut parents = vec![Region::full(mask.width(), mask.height())];
    for _ in 0..levels {
        let mut children = Vec::with_capacity(parents.len() * 4);
        for parent in &parents {
            let split = quad_split(mask, *parent)?;
            degenerate |= split.degenerate;
            children.extend_from_slice(&split.children);
        }
        per_level.push(children.clone());
        parents = children;
    }
    Ok(ZoneSet {
        per_level,
        degenerate,
    })
}
