use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rbox_to_rhbox, HBox, RBox};

/// One annotated object from a detection dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceAnnotation {
    pub category_id: u16,
    pub hbox: Option<HBox>,
    pub rbox: Option<RBox>,
    pub difficult: bool,
    pub source_instance_id: String,
}

/// Which box kinds a dataset (or a single instance) provides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxAvailability {
    pub hbox: bool,
    pub rbox: bool,
}

impl InstanceAnnotation {
    pub fn new(
        category_id: u16,
        hbox: Option<HBox>,
        rbox: Option<RBox>,
        difficult: bool,
        source_instance_id: impl Into<String>,
    ) -> Result<Self> {
        if hbox.is_none() && rbox.is_none() {
            return Err(Error::InvalidBox("annotation carries no box"));
        }
        Ok(Self {
            category_id,
            hbox,
            rbox,
            difficult,
            source_instance_id: source_instance_id.into(),
        })
    }

    pub fn availability(&self) -> BoxAvailability {
        BoxAvailability {
            hbox: self.hbox.is_some(),
            rbox: self.rbox.is_some(),
        }
    }

    pub fn rhbox(&self) -> Option<HBox> {
        self.rbox.as_ref().map(rbox_to_rhbox)
    }

    /// The H-Box when present, else the RH-Box.
    pub fn outer_box(&self) -> HBox {
        self.hbox
            .or_else(|| self.rhbox())
            .expect("annotation invariant: at least one box")
    }
}

impl BoxAvailability {
    pub fn union(self, other: Self) -> Self {
        Self {
            hbox: self.hbox || other.hbox,
            rbox: self.rbox || other.rbox,
        }
    }

    pub fn intersect(self, other: Self) -> Self {
        Self {
            hbox: self.hbox && other.hbox,
            rbox: self.rbox && other.rbox,
        }
    }
}
