//! Learning-free word spotting for segmented handwritten word images.
//!
//! The pipeline turns each word image into a fixed-length texture
//! descriptor (median filter, Otsu binarization, centroid-adapted zoning,
//! uniform local binary patterns pooled per zone and weighted by edge
//! density) and ranks candidates for a query image by Bray-Curtis
//! distance plus a width-ratio penalty. No training, codebooks, or
//! learned projections are involved; a corpus is usable the moment its
//! descriptors are extracted.
//!
//! Modules follow the pipeline: [`image`] holds raster primitives,
//! [`lbp`] the texture operator, [`spatial`] the zoning, [`descriptor`]
//! the feature assembly, [`retrieval`] indexing and ranking, and [`eval`]
//! the benchmark metrics. Numeric work is generic over the scalar type
//! through [`scalar::Scalar`]; the crate root exports `f32` and `f64`
//! aliases for the common instantiations.

pub mod descriptor;
pub mod eval;
pub mod image;
pub mod lbp;
pub mod retrieval;
pub mod scalar;
pub mod spatial;

pub use descriptor::{
    extract_descriptor, extract_trace, Descriptor, DescriptorError, EdgeRatioMode, ExtractConfig,
    ExtractionTrace,
};
pub use eval::{evaluate, EvalError, EvalProtocol, EvalReport, QueryOutcome};
pub use image::{BinaryImage, GrayImage, ImageError, Region};
pub use lbp::{LabelMap, LbpError, LbpMode, LbpParams};
pub use retrieval::{
    bray_curtis, build_index, query, score, CorpusItem, Hit, Index, IndexBuild, IndexEntry,
    QueryParams, RankedList, RetrievalError, DEFAULT_LAMBDA,
};
pub use scalar::Scalar;
pub use spatial::{quad_split, sample_zones, QuadSplit, SpatialError, ZoneSet};

/// Single-precision descriptor.
pub type Descriptor32 = Descriptor<f32>;
/// Double-precision descriptor, the default for persisted indexes.
pub type Descriptor64 = Descriptor<f64>;
pub type Index32 = Index<f32>;
pub type Index64 = Index<f64>;
pub type RankedList32 = RankedList<f32>;
pub type RankedList64 = RankedList<f64>;
pub type QueryParams32 = QueryParams<f32>;
pub type QueryParams64 = QueryParams<f64>;
pub type EvalProtocol32 = EvalProtocol<f32>;
pub type EvalProtocol64 = EvalProtocol<f64>;
