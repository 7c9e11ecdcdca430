//! Per-tile instance records:
//! `{"size":[H,W],"instances":[{"category","rle","score","valid","bbox"}]}`.

use std::path::Path;

use detseg_core::{InstanceMask, RleMask};
use serde::{Deserialize, Serialize};

use crate::error::{read_text, write_bytes, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileInstance {
    pub category: u16,
    pub rle: Vec<u32>,
    pub score: f64,
    pub valid: bool,
    /// `[x0, y0, x1, y1]` in pixel edges, `null` for an empty mask.
    pub bbox: Option<[f64; 4]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileInstances {
    /// `[height, width]`
    pub size: [u32; 2],
    pub instances: Vec<TileInstance>,
}

impl TileInstances {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            size: [height, width],
            instances: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.size[1]
    }

    pub fn height(&self) -> u32 {
        self.size[0]
    }

    pub fn push(&mut self, category: u16, mask: &InstanceMask) {
        self.instances.push(TileInstance {
            category,
            rle: mask.rle.counts.clone(),
            score: mask.score,
            valid: mask.valid,
            bbox: mask.bbox.map(|b| b.to_array()),
        });
    }

    /// Rebuild the mask of entry `i`, checking its runs against the tile size.
    pub fn mask(&self, i: usize) -> Result<InstanceMask> {
        let inst = &self.instances[i];
        let rle = RleMask {
            height: self.height(),
            width: self.width(),
            counts: inst.rle.clone(),
        };
        rle.check()?;
        let mut m = InstanceMask::from_rle(rle, inst.score);
        m.valid = inst.valid;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_text(path)?).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}
