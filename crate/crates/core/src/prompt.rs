//! Prompt construction from box annotations.
//!
//! Six basic prompts are derived from an annotation: the center point (CP),
//! the H-Box, the RH-Box (horizontal hull of the R-Box) and mask prompts
//! rasterized from the H-Box, the R-Box and the RH-Box. A [`PromptCombo`]
//! selects any realizable subset of them.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotation::InstanceAnnotation;
use crate::error::{Error, Result};
use crate::geometry::{HBox, Point, Shape};
use crate::mask::rasterize_cells;
use crate::rle::{rle_decode, rle_encode, Bitmask, RleMask};

pub const DEFAULT_MASK_GRID: u32 = 256;
pub const DEFAULT_MAGNITUDE: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicPrompt {
    CenterPoint,
    HBox,
    HBoxMask,
    RBoxMask,
    RhBox,
    RhBoxMask,
}

impl BasicPrompt {
    /// Column order of the ablation table.
    pub const ALL: [BasicPrompt; 6] = [
        BasicPrompt::CenterPoint,
        BasicPrompt::HBox,
        BasicPrompt::HBoxMask,
        BasicPrompt::RBoxMask,
        BasicPrompt::RhBox,
        BasicPrompt::RhBoxMask,
    ];

    pub fn key(self) -> &'static str {
        match self {
            BasicPrompt::CenterPoint => "cp",
            BasicPrompt::HBox => "hbox",
            BasicPrompt::HBoxMask => "hbox-m",
            BasicPrompt::RBoxMask => "rbox-m",
            BasicPrompt::RhBox => "rhbox",
            BasicPrompt::RhBoxMask => "rhbox-m",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BasicPrompt::CenterPoint => "CP",
            BasicPrompt::HBox => "H-Box",
            BasicPrompt::HBoxMask => "H-Box-M",
            BasicPrompt::RBoxMask => "R-Box-M",
            BasicPrompt::RhBox => "RH-Box",
            BasicPrompt::RhBoxMask => "RH-Box-M",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    fn is_mask(self) -> bool {
        matches!(
            self,
            BasicPrompt::HBoxMask | BasicPrompt::RBoxMask | BasicPrompt::RhBoxMask
        )
    }
}

impl FromStr for BasicPrompt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = crate::category::normalize_name(s);
        BasicPrompt::ALL
            .into_iter()
            .find(|p| crate::category::normalize_name(p.key()) == key)
            .ok_or_else(|| Error::Config(alloc::format!("unknown prompt kind {s:?}")))
    }
}

/// A set of basic prompts, e.g. `cp+hbox`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PromptCombo(u8);

impl PromptCombo {
    pub fn from_prompts(prompts: &[BasicPrompt]) -> Self {
        Self(prompts.iter().fold(0, |acc, p| acc | p.bit()))
    }

    pub fn contains(self, p: BasicPrompt) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn prompts(self) -> impl Iterator<Item = BasicPrompt> {
        BasicPrompt::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    /// Canonical identifier, members joined by `+` in table column order.
    pub fn id(self) -> String {
        let parts: Vec<&str> = self.prompts().map(BasicPrompt::key).collect();
        parts.join("+")
    }

    /// Rejects empty combos and combos with two box or two mask members.
    pub fn check(self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("empty prompt combination".into()));
        }
        if self.contains(BasicPrompt::HBox) && self.contains(BasicPrompt::RhBox) {
            return Err(Error::Config(alloc::format!(
                "combo {} carries two box prompts",
                self.id()
            )));
        }
        if self.prompts().filter(|p| p.is_mask()).count() > 1 {
            return Err(Error::Config(alloc::format!(
                "combo {} carries more than one mask prompt",
                self.id()
            )));
        }
        Ok(())
    }

    /// The fifteen prompt combinations of the published ablation, in row order.
    pub fn ablation_rows() -> Vec<PromptCombo> {
        use BasicPrompt::*;
        let rows: [&[BasicPrompt]; 15] = [
            &[CenterPoint],
            &[HBox],
            &[HBoxMask],
            &[CenterPoint, HBox],
            &[HBox, HBoxMask],
            &[CenterPoint, HBoxMask],
            &[CenterPoint, HBox, HBoxMask],
            &[RBoxMask],
            &[CenterPoint, RBoxMask],
            &[RhBox],
            &[RhBoxMask],
            &[CenterPoint, RhBox],
            &[RhBox, RhBoxMask],
            &[CenterPoint, RhBoxMask],
            &[CenterPoint, RhBox, RhBoxMask],
        ];
        rows.iter().map(|r| PromptCombo::from_prompts(r)).collect()
    }
}

impl fmt::Debug for PromptCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PromptCombo({})", self.id())
    }
}

impl fmt::Display for PromptCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for PromptCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let prompts = s
            .split('+')
            .map(|part| part.trim().parse())
            .collect::<Result<Vec<BasicPrompt>>>()?;
        let combo = PromptCombo::from_prompts(&prompts);
        combo.check()?;
        Ok(combo)
    }
}

impl TryFrom<String> for PromptCombo {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PromptCombo> for String {
    fn from(c: PromptCombo) -> Self {
        c.id()
    }
}

/// The single-box prompt used for dataset conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    HBox,
    RhBox,
}

impl PromptMode {
    pub fn combo(self) -> PromptCombo {
        match self {
            PromptMode::HBox => PromptCombo::from_prompts(&[BasicPrompt::HBox]),
            PromptMode::RhBox => PromptCombo::from_prompts(&[BasicPrompt::RhBox]),
        }
    }
}

impl FromStr for PromptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match crate::category::normalize_name(s).as_str() {
            "hbox" => Ok(PromptMode::HBox),
            "rhbox" => Ok(PromptMode::RhBox),
            _ => Err(Error::Config(alloc::format!("unknown prompt mode {s:?}"))),
        }
    }
}

/// Which box a center point is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxSource {
    HBox,
    RBox,
    RhBox,
}

/// Foreground point prompt. Background points are never produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterPoint {
    pub x: f64,
    pub y: f64,
}

impl CenterPoint {
    /// Point label on the wire; `1` marks foreground.
    pub const LABEL: u8 = 1;

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Low-resolution score grid with `+magnitude` over the active region and
/// `-magnitude` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskPrompt {
    positive: Bitmask,
    magnitude: f64,
}

impl MaskPrompt {
    pub fn new(positive: Bitmask, magnitude: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(Error::Config(alloc::format!(
                "mask magnitude must be positive, got {magnitude}"
            )));
        }
        if positive.count_ones() == 0 {
            return Err(Error::EmptyPrompt);
        }
        Ok(Self {
            positive,
            magnitude,
        })
    }

    /// Rebuild from the wire form: positive-cell RLE plus magnitude.
    pub fn from_positive_rle(rle: &RleMask, magnitude: f64) -> Result<Self> {
        Self::new(rle_decode(rle)?, magnitude)
    }

    pub fn width(&self) -> u32 {
        self.positive.width()
    }

    pub fn height(&self) -> u32 {
        self.positive.height()
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn positive(&self) -> &Bitmask {
        &self.positive
    }

    pub fn positive_count(&self) -> u64 {
        self.positive.count_ones()
    }

    pub fn score(&self, col: u32, row: u32) -> f64 {
        if self.positive.get(col, row) {
            self.magnitude
        } else {
            -self.magnitude
        }
    }

    /// Row-major score grid.
    pub fn scores(&self) -> Vec<f64> {
        self.positive
            .as_row_major()
            .iter()
            .map(|&p| if p { self.magnitude } else { -self.magnitude })
            .collect()
    }

    pub fn positive_rle(&self) -> RleMask {
        rle_encode(&self.positive)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptConfig {
    pub combo: PromptCombo,
    pub grid_width: u32,
    pub grid_height: u32,
    pub magnitude: f64,
}

impl PromptConfig {
    pub fn new(combo: PromptCombo) -> Self {
        Self {
            combo,
            grid_width: DEFAULT_MASK_GRID,
            grid_height: DEFAULT_MASK_GRID,
            magnitude: DEFAULT_MAGNITUDE,
        }
    }

    pub fn with_grid(mut self, width: u32, height: u32) -> Self {
        self.grid_width = width;
        self.grid_height = height;
        self
    }

    pub fn with_magnitude(mut self, magnitude: f64) -> Self {
        self.magnitude = magnitude;
        self
    }

    pub fn check(&self) -> Result<()> {
        self.combo.check()?;
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(Error::Config("mask grid dimensions must be positive".into()));
        }
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(Error::Config("mask magnitude must be positive".into()));
        }
        Ok(())
    }
}

/// The prompt payload for one instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PromptSet {
    pub point: Option<CenterPoint>,
    pub bbox: Option<HBox>,
    pub mask: Option<MaskPrompt>,
    pub combo_id: String,
}

fn missing(combo: PromptCombo, what: &str) -> Error {
    Error::Config(alloc::format!("combo {} needs an {what}", combo.id()))
}

fn require_hbox(a: &InstanceAnnotation, combo: PromptCombo) -> Result<HBox> {
    a.hbox.ok_or_else(|| missing(combo, "H-Box"))
}

fn require_rhbox(a: &InstanceAnnotation, combo: PromptCombo) -> Result<HBox> {
    a.rhbox().ok_or_else(|| missing(combo, "R-Box"))
}

pub fn center_point(a: &InstanceAnnotation, source: BoxSource) -> Result<CenterPoint> {
    let p = match source {
        BoxSource::HBox => a
            .hbox
            .ok_or_else(|| Error::Config("center point needs an H-Box".into()))?
            .center(),
        BoxSource::RhBox => a
            .rhbox()
            .ok_or_else(|| Error::Config("center point needs an R-Box".into()))?
            .center(),
        BoxSource::RBox => a
            .rbox
            .as_ref()
            .ok_or_else(|| Error::Config("center point needs an R-Box".into()))?
            .vertex_mean(),
    };
    Ok(CenterPoint { x: p.x, y: p.y })
}

/// Where a combo's center point comes from: the box the other members use,
/// else the H-Box when the annotation has one, else the R-Box.
fn point_source(a: &InstanceAnnotation, combo: PromptCombo) -> BoxSource {
    use BasicPrompt::*;
    if combo.contains(HBox) || combo.contains(HBoxMask) {
        BoxSource::HBox
    } else if combo.contains(RBoxMask) {
        BoxSource::RBox
    } else if combo.contains(RhBox) || combo.contains(RhBoxMask) {
        BoxSource::RhBox
    } else if a.hbox.is_some() {
        BoxSource::HBox
    } else {
        BoxSource::RBox
    }
}

/// Rasterize a box or polygon into a `grid_width x grid_height` score grid
/// laid over `extent`. A cell is positive when its center lies inside the
/// shape, boundary included.
pub fn rasterize_mask_prompt(
    shape: &Shape,
    grid_width: u32,
    grid_height: u32,
    extent: &HBox,
    magnitude: f64,
) -> Result<MaskPrompt> {
    if grid_width == 0 || grid_height == 0 {
        return Err(Error::Config("mask grid dimensions must be positive".into()));
    }
    if !(extent.width() > 0.0 && extent.height() > 0.0) {
        return Err(Error::Config("image extent must have positive size".into()));
    }
    if shape.bounds().intersection(extent).is_none() {
        return Err(Error::EmptyPrompt);
    }
    let cells = rasterize_cells(shape, grid_width, grid_height, extent);
    MaskPrompt::new(cells, magnitude)
}

/// Assemble the prompt set a combo asks for. `image_width` and
/// `image_height` are the extent mask prompts are laid over.
pub fn build_prompt_set(
    a: &InstanceAnnotation,
    cfg: &PromptConfig,
    image_width: u32,
    image_height: u32,
) -> Result<PromptSet> {
    use BasicPrompt::*;
    cfg.check()?;
    let combo = cfg.combo;

    let point = if combo.contains(CenterPoint) {
        let source = point_source(a, combo);
        Some(center_point(a, source).map_err(|_| match source {
            BoxSource::HBox => missing(combo, "H-Box"),
            _ => missing(combo, "R-Box"),
        })?)
    } else {
        None
    };

    let bbox = if combo.contains(HBox) {
        Some(require_hbox(a, combo)?)
    } else if combo.contains(RhBox) {
        Some(require_rhbox(a, combo)?)
    } else {
        None
    };

    let shape = if combo.contains(HBoxMask) {
        Some(Shape::Box(require_hbox(a, combo)?))
    } else if combo.contains(RBoxMask) {
        Some(Shape::Polygon(
            a.rbox.clone().ok_or_else(|| missing(combo, "R-Box"))?,
        ))
    } else if combo.contains(RhBoxMask) {
        Some(Shape::Box(require_rhbox(a, combo)?))
    } else {
        None
    };
    let extent = crate::geometry::HBox::from_dims(image_width, image_height);
    let mask = shape
        .map(|s| {
            rasterize_mask_prompt(&s, cfg.grid_width, cfg.grid_height, &extent, cfg.magnitude)
        })
        .transpose()?;

    Ok(PromptSet {
        point,
        bbox,
        mask,
        combo_id: combo.id(),
    })
}

/// The box a prediction for this combo is checked against: the box member,
/// else the mask member's hull, else the box the center point came from.
pub fn reference_box(a: &InstanceAnnotation, combo: PromptCombo) -> Result<HBox> {
    use BasicPrompt::*;
    if combo.contains(HBox) || combo.contains(HBoxMask) {
        return require_hbox(a, combo);
    }
    if combo.contains(RhBox) || combo.contains(RhBoxMask) || combo.contains(RBoxMask) {
        return require_rhbox(a, combo);
    }
    match point_source(a, combo) {
        BoxSource::HBox => require_hbox(a, combo),
        _ => require_rhbox(a, combo),
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::HBox => "hbox",
            PromptMode::RhBox => "rhbox",
        })
    }
}

impl PromptSet {
    /// Every coordinate of the point and box lies inside `[0, w] x [0, h]`.
    pub fn within(&self, width: u32, height: u32) -> bool {
        let frame = HBox::from_dims(width, height);
        self.point.is_none_or(|p| frame.contains(p.point()))
            && self.bbox.is_none_or(|b| {
                frame.contains(Point::new(b.x_min, b.y_min))
                    && frame.contains(Point::new(b.x_max, b.y_max))
            })
    }
}
