//! Fixed-size tiling of large source images.
//!
//! Tile origins step by the stride along each axis; the last tile on an axis
//! is anchored to the far edge instead of running past it. Images smaller
//! than the tile size yield a single tile at the origin, either zero-padded
//! to the full tile size or kept at their own size.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::annotation::InstanceAnnotation;
use crate::error::{Error, Result};
use crate::geometry::{clip_polygon_to_rect, HBox, RBox};

pub const DEFAULT_RETENTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallImageMode {
    /// Zero-pad to the full tile size.
    #[default]
    Pad,
    /// Emit the image at its own size.
    Keep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingPolicy {
    pub tile_size: u32,
    pub stride: u32,
    pub retention: f64,
    pub small_image: SmallImageMode,
}

impl TilingPolicy {
    pub fn new(tile_size: u32, stride: u32, retention: f64) -> Result<Self> {
        let policy = Self {
            tile_size,
            stride,
            retention,
            small_image: SmallImageMode::Pad,
        };
        policy.check()?;
        Ok(policy)
    }

    /// Default stride for a tile size: 824 (200 px overlap) for 1024 tiles,
    /// no overlap otherwise.
    pub fn default_stride(tile_size: u32) -> u32 {
        if tile_size == 1024 {
            824
        } else {
            tile_size
        }
    }

    pub fn for_tile_size(tile_size: u32) -> Result<Self> {
        Self::new(tile_size, Self::default_stride(tile_size), DEFAULT_RETENTION)
    }

    pub fn check(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::Config("tile size must be positive".into()));
        }
        if self.stride == 0 || self.stride > self.tile_size {
            return Err(Error::Config(format!(
                "stride {} must lie in 1..={}",
                self.stride, self.tile_size
            )));
        }
        if !(self.retention > 0.0 && self.retention <= 1.0) {
            return Err(Error::Config(format!(
                "retention {} must lie in (0, 1]",
                self.retention
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub image_id: String,
    pub row: u32,
    pub col: u32,
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub source_width: u32,
    pub source_height: u32,
}

impl TileSpec {
    /// `<image_id>__<row>_<col>`
    pub fn name(&self) -> String {
        format!("{}__{}_{}", self.image_id, self.row, self.col)
    }

    pub fn window(&self) -> HBox {
        HBox::from_dims(self.width, self.height).translate(f64::from(self.x), f64::from(self.y))
    }

    pub fn padded(&self) -> bool {
        self.x + self.width > self.source_width || self.y + self.height > self.source_height
    }
}

/// Tile origins along one axis.
pub fn axis_origins(dim: u32, tile: u32, stride: u32) -> Vec<u32> {
    if dim <= tile {
        return vec![0];
    }
    let mut origins = Vec::new();
    let mut o = 0u32;
    loop {
        if o + tile >= dim {
            origins.push(dim - tile);
            break;
        }
        origins.push(o);
        o += stride;
    }
    origins.dedup();
    origins
}

/// Row-major tile plan for one source image.
pub fn plan_tiles(image_id: &str, width: u32, height: u32, policy: &TilingPolicy) -> Vec<TileSpec> {
    let t = policy.tile_size;
    let extent = |dim: u32| match policy.small_image {
        SmallImageMode::Keep => dim.min(t),
        SmallImageMode::Pad => t,
    };
    let xs = axis_origins(width, t, policy.stride);
    let ys = axis_origins(height, t, policy.stride);
    let mut tiles = Vec::with_capacity(xs.len() * ys.len());
    for (row, &y) in (0u32..).zip(&ys) {
        for (col, &x) in (0u32..).zip(&xs) {
            tiles.push(TileSpec {
                image_id: image_id.into(),
                row,
                col,
                x,
                y,
                width: extent(width),
                height: extent(height),
                source_width: width,
                source_height: height,
            });
        }
    }
    tiles
}

/// An annotation that survived cropping, in tile-local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CroppedInstance {
    /// Index into the source annotation list.
    pub index: usize,
    pub annotation: InstanceAnnotation,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CropOutcome {
    pub kept: Vec<CroppedInstance>,
    /// Source indices of instances overlapping the tile whose retained
    /// fraction fell below the threshold.
    pub dropped: Vec<usize>,
}

impl CropOutcome {
    /// Instances that overlap the tile at all.
    pub fn overlapping(&self) -> usize {
        self.kept.len() + self.dropped.len()
    }
}

/// Clip `instances` to `tile`, translate survivors into tile-local
/// coordinates and drop those keeping less than `retention` of their box area.
///
/// The H-Box decides retention when present, else the R-Box. Instances
/// with no overlapping area are not part of the tile and appear in neither
/// list.
pub fn crop_annotations(
    instances: &[InstanceAnnotation],
    tile: &TileSpec,
    retention: f64,
) -> CropOutcome {
    let window = tile.window();
    let (dx, dy) = (-f64::from(tile.x), -f64::from(tile.y));
    let mut out = CropOutcome::default();

    for (index, inst) in instances.iter().enumerate() {
        let clipped_h = inst.hbox.and_then(|b| b.intersection(&window));
        let clipped_r = inst
            .rbox
            .as_ref()
            .map(|r| clip_polygon_to_rect(r.vertices(), &window))
            .filter(|poly| !poly.is_empty())
            .and_then(|poly| RBox::new(poly).ok());

        let (kept_area, full_area) = match (&inst.hbox, &inst.rbox) {
            (Some(h), _) => (clipped_h.map_or(0.0, |c| c.area()), h.area()),
            (None, Some(r)) => (clipped_r.as_ref().map_or(0.0, RBox::area), r.area()),
            (None, None) => continue,
        };
        let overlaps = if full_area > 0.0 {
            kept_area > 0.0
        } else {
            clipped_h.is_some()
        };
        if !overlaps {
            continue;
        }
        let fraction = if full_area > 0.0 {
            kept_area / full_area
        } else {
            1.0
        };
        let hbox = clipped_h.map(|b| b.translate(dx, dy));
        let rbox = clipped_r.map(|r| r.translate(dx, dy));
        if fraction < retention || (hbox.is_none() && rbox.is_none()) {
            out.dropped.push(index);
            continue;
        }
        out.kept.push(CroppedInstance {
            index,
            annotation: InstanceAnnotation {
                category_id: inst.category_id,
                hbox,
                rbox,
                difficult: inst.difficult,
                source_instance_id: inst.source_instance_id.clone(),
            },
        });
    }
    out
}

/// Copy the tile window out of a row-major pixel buffer, filling the part of
/// the window beyond the source with `P::default()`.
pub fn crop_pixels<P: Copy + Default>(
    src: &[P],
    src_width: u32,
    src_height: u32,
    tile: &TileSpec,
) -> Result<Vec<P>> {
    if (src_width, src_height) != (tile.source_width, tile.source_height)
        || src.len() != src_width as usize * src_height as usize
    {
        return Err(Error::DimensionMismatch {
            expected: (tile.source_width, tile.source_height),
            actual: (src_width, src_height),
        });
    }
    let (tw, th) = (tile.width as usize, tile.height as usize);
    let mut out = vec![P::default(); tw * th];
    let copy_w = (src_width.saturating_sub(tile.x) as usize).min(tw);
    let copy_h = (src_height.saturating_sub(tile.y) as usize).min(th);
    for row in 0..copy_h {
        let s = (tile.y as usize + row) * src_width as usize + tile.x as usize;
        out[row * tw..row * tw + copy_w].copy_from_slice(&src[s..s + copy_w]);
    }
    Ok(out)
}
