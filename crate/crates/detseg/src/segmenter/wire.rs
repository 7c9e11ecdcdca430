//! JSON bodies of the remote segmentation protocol.

use detseg_core::prompt::{CenterPoint, MaskPrompt};
use detseg_core::select::Candidate;
use detseg_core::{HBox, PromptSet, RleMask};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirePoint {
    pub x: f64,
    pub y: f64,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMask {
    pub width: u32,
    pub height: u32,
    pub magnitude: f64,
    pub positive_rle: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirePrompt {
    pub point: Option<WirePoint>,
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 4]>,
    pub mask: Option<WireMask>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: String,
    pub image_png_b64: String,
    pub multimask: bool,
    pub prompts: Vec<WirePrompt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    /// `[height, width]`
    pub size: [u32; 2],
    pub rle: Vec<u32>,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireResult {
    pub candidates: Vec<WireCandidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: String,
    pub results: Vec<WireResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub model: String,
    pub ready: bool,
}

impl From<&PromptSet> for WirePrompt {
    fn from(p: &PromptSet) -> Self {
        WirePrompt {
            point: p.point.map(|c| WirePoint {
                x: c.x,
                y: c.y,
                label: CenterPoint::LABEL,
            }),
            bbox: p.bbox.map(|b| b.to_array()),
            mask: p.mask.as_ref().map(|m| WireMask {
                width: m.width(),
                height: m.height(),
                magnitude: m.magnitude(),
                positive_rle: m.positive_rle().counts,
            }),
        }
    }
}

impl WirePrompt {
    /// Server-side view of the prompt, with the mask grid rebuilt from its
    /// positive runs.
    pub fn to_prompt_set(&self) -> Result<PromptSet> {
        let point = match &self.point {
            Some(p) if p.label != CenterPoint::LABEL => {
                return Err(Error::Protocol(format!("point label {} is not foreground", p.label)))
            }
            Some(p) => Some(CenterPoint { x: p.x, y: p.y }),
            None => None,
        };
        let bbox = self.bbox.map(HBox::try_from).transpose()?;
        let mask = self
            .mask
            .as_ref()
            .map(|m| {
                let rle = RleMask {
                    height: m.height,
                    width: m.width,
                    counts: m.positive_rle.clone(),
                };
                MaskPrompt::from_positive_rle(&rle, m.magnitude)
            })
            .transpose()?;
        Ok(PromptSet {
            point,
            bbox,
            mask,
            combo_id: String::new(),
        })
    }
}

impl WireCandidate {
    pub fn into_candidate(self, width: u32, height: u32) -> Result<Candidate> {
        if self.size != [height, width] {
            return Err(Error::Protocol(format!(
                "candidate size {:?} does not match the {height}x{width} tile",
                self.size
            )));
        }
        if !self.score.is_finite() {
            return Err(Error::Protocol(format!("non-finite score {}", self.score)));
        }
        let rle = RleMask {
            height,
            width,
            counts: self.rle,
        };
        rle.check().map_err(|e| Error::Protocol(e.to_string()))?;
        Ok(Candidate {
            rle,
            score: self.score,
        })
    }

    pub fn from_candidate(c: &Candidate) -> Self {
        WireCandidate {
            size: [c.rle.height, c.rle.width],
            rle: c.rle.counts.clone(),
            score: c.score,
        }
    }
}
