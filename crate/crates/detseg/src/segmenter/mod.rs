//! Promptable segmentation backends.

pub mod oracle;
pub mod remote;
pub mod wire;

use std::sync::Arc;

use detseg_core::select::Candidate;
use detseg_core::PromptSet;
use image::DynamicImage;

use crate::error::{Error, Result};

pub use oracle::{ErosionOracle, FillOracle};
pub use remote::{RemoteBackend, RemoteConfig};

/// One tile and the prompt sets to segment on it.
pub struct SegmentRequest<'a> {
    /// Echoed back by remote backends; also seeds stochastic oracles.
    pub id: String,
    pub image: &'a DynamicImage,
    pub prompts: Vec<PromptSet>,
    pub multimask: bool,
}

impl SegmentRequest<'_> {
    pub fn dims(&self) -> (u32, u32) {
        (self.image.width(), self.image.height())
    }

    pub fn check(&self) -> Result<()> {
        let (w, h) = self.dims();
        for (i, p) in self.prompts.iter().enumerate() {
            if p.point.is_none() && p.bbox.is_none() && p.mask.is_none() {
                return Err(Error::Config(format!("{}: prompt {i} is empty", self.id)));
            }
            if !p.within(w, h) {
                return Err(Error::Config(format!(
                    "{}: prompt {i} lies outside the {w}x{h} tile",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Candidate lists aligned with the request's prompt sets. An empty list
/// means the backend failed on that prompt.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentResponse {
    pub id: String,
    pub results: Vec<Vec<Candidate>>,
}

pub trait Backend: Send + Sync {
    /// The spec string the backend was built from.
    fn name(&self) -> String;

    fn health(&self) -> Result<()> {
        Ok(())
    }

    fn segment(&self, req: &SegmentRequest) -> Result<SegmentResponse>;
}

/// Build a backend from `oracle:fill`, `oracle:erosion[:radius]` or an
/// `http://` base URL.
pub fn backend_from_spec(spec: &str, seed: u64, remote: RemoteConfig) -> Result<Arc<dyn Backend>> {
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Ok(Arc::new(RemoteBackend::new(spec, remote)?));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["oracle", "fill"] => Ok(Arc::new(FillOracle)),
        ["oracle", "erosion"] => Ok(Arc::new(ErosionOracle::new(oracle::DEFAULT_EROSION_RADIUS, seed))),
        ["oracle", "erosion", r] => {
            let radius = r
                .parse()
                .map_err(|_| Error::Config(format!("bad erosion radius in {spec:?}")))?;
            Ok(Arc::new(ErosionOracle::new(radius, seed)))
        }
        _ => Err(Error::Config(format!(
            "unknown backend {spec:?}; expected a URL, oracle:fill or oracle:erosion[:radius]"
        ))),
    }
}
