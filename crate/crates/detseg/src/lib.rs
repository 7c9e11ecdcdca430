//! File formats, segmentation backends and the conversion pipeline built on
//! `detseg-core`.

pub mod ablation;
pub mod cli;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod segmenter;

pub use ablation::{run_ablation, AblationOptions};
pub use error::{Error, Result};
pub use pipeline::{audit_dataset, compute_stats, convert_dataset, ConvertOptions, Recipe};
pub use segmenter::{backend_from_spec, Backend, SegmentRequest, SegmentResponse};
