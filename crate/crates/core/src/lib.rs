//! Allocation-only building blocks for turning detection annotations into
//! segmentation labels.
//!
//! Everything in this crate is pure: box and polygon arithmetic, prompt
//! construction, column-major run-length masks, tile planning, selection of
//! backend candidates, IoU metrics and mask-size histograms. File formats,
//! backends and the conversion pipeline live in the `detseg` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod annotation;
pub mod category;
pub mod error;
pub mod geometry;
pub mod mask;
pub mod metrics;
pub mod prompt;
pub mod rle;
pub mod select;
pub mod stats;
pub mod tiling;

pub use annotation::InstanceAnnotation;
pub use category::{Category, CategoryTable, DatasetTag};
pub use error::{Error, Result};
pub use geometry::{HBox, Point, RBox, Shape};
pub use mask::{InstanceMask, SemanticMap};
pub use metrics::{IouSample, MiouResult};
pub use prompt::{BasicPrompt, PromptCombo, PromptConfig, PromptMode, PromptSet};
pub use rle::{Bitmask, RleMask};
pub use tiling::{TileSpec, TilingPolicy};
