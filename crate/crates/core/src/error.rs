use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(&'static str),

    #[error("degenerate polygon with area {area}")]
    DegeneratePolygon { area: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("prompt rasterization produced no positive cells")]
    EmptyPrompt,

    #[error("corrupt RLE: counts sum to {actual}, expected {expected}")]
    CorruptRle { expected: u64, actual: u64 },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("mIOU is undefined without at least one sample with a nonempty union")]
    UndefinedMetric,

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("invalid category table: {0}")]
    CategoryTable(String),

    #[error("histogram edges must be non-empty and strictly increasing")]
    InvalidEdges,
}
