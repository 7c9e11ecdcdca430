//! Dataset conversion and statistics.

pub mod audit;
pub mod convert;
pub mod recipe;

pub use audit::{audit_dataset, compute_stats, Audit};
pub use convert::{convert_dataset, ConvertOptions, ConvertOutcome};
pub use recipe::Recipe;
