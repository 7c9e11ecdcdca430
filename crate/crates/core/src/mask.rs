//! Instance masks, semantic maps and pixel-level rasterization.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{floor_i64, HBox, Point, Shape};
use crate::rle::{rle_encode, Bitmask, RleMask};

/// A binary segmentation mask with its derived attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMask {
    pub rle: RleMask,
    pub area: u64,
    pub bbox: Option<HBox>,
    pub score: f64,
    pub valid: bool,
}

impl InstanceMask {
    /// Derives area and tight box from the runs. `valid` starts out false.
    pub fn from_rle(rle: RleMask, score: f64) -> Self {
        let area = rle.area();
        let bbox = rle.bbox();
        Self {
            rle,
            area,
            bbox,
            score,
            valid: false,
        }
    }

    pub fn from_bitmask(mask: &Bitmask, score: f64) -> Self {
        Self::from_rle(rle_encode(mask), score)
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.rle.width, self.rle.height)
    }
}

/// Per-pixel category index, row-major, `0` = background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticMap {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u8>,
}

impl SemanticMap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    /// Pixel count per nonzero label.
    pub fn label_counts(&self) -> BTreeMap<u8, u64> {
        let mut counts = BTreeMap::new();
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }
}

/// Paint instance masks into one semantic map.
///
/// Masks are painted in decreasing area order (stable on input order), so
/// where instances overlap the smaller one wins.
pub fn render_semantic_map(
    instances: &[(&InstanceMask, u8)],
    width: u32,
    height: u32,
) -> Result<SemanticMap> {
    for (m, _) in instances {
        if m.dims() != (width, height) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: m.dims(),
            });
        }
        m.rle.check()?;
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|&a, &b| instances[b].0.area.cmp(&instances[a].0.area));

    let mut map = SemanticMap::new(width, height);
    let h = u64::from(height);
    for idx in order {
        let (m, label) = instances[idx];
        for (start, end) in m.rle.one_runs() {
            for i in start..end {
                let x = i / h;
                let y = i % h;
                map.labels[(y * u64::from(width) + x) as usize] = label;
            }
        }
    }
    Ok(map)
}

/// Pixel mask of the pixels whose centers lie inside `shape`.
pub fn rasterize_region(shape: &Shape, width: u32, height: u32) -> Bitmask {
    rasterize_cells(shape, width, height, &HBox::from_dims(width, height))
}

/// Sample `shape` at the centers of a `cols x rows` grid laid uniformly over
/// `extent`. Only cells near the shape's bounds are tested.
pub(crate) fn rasterize_cells(shape: &Shape, cols: u32, rows: u32, extent: &HBox) -> Bitmask {
    let mut mask = Bitmask::new(cols, rows);
    if cols == 0 || rows == 0 {
        return mask;
    }
    let b = shape.bounds();
    let sx = f64::from(cols) / extent.width();
    let sy = f64::from(rows) / extent.height();
    // cell center (c + 0.5) / s + origin lies in [min, max] roughly for
    // c in [(min - origin) * s - 0.5, (max - origin) * s - 0.5]; pad by one
    // cell and let the exact test decide.
    let range = |lo: f64, hi: f64, origin: f64, s: f64, n: u32| {
        let first = floor_i64((lo - origin) * s - 0.5).max(0);
        let last = (floor_i64((hi - origin) * s - 0.5) + 1).min(i64::from(n) - 1);
        (first, last)
    };
    let (x_lo, x_hi) = range(b.x_min, b.x_max, extent.x_min, sx, cols);
    let (y_lo, y_hi) = range(b.y_min, b.y_max, extent.y_min, sy, rows);
    for y in y_lo..=y_hi {
        let cy = extent.y_min + (y as f64 + 0.5) / sy;
        for x in x_lo..=x_hi {
            let cx = extent.x_min + (x as f64 + 0.5) / sx;
            if shape.contains(Point::new(cx, cy)) {
                mask.set(x as u32, y as u32, true);
            }
        }
    }
    mask
}

/// Binary erosion with a `(2r + 1)`-wide square structuring element.
/// Pixels beyond the mask edge count as background.
pub fn erode(mask: &Bitmask, radius: u32) -> Bitmask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let r = i64::from(radius);
    // Separable: erode rows, then columns.
    let horizontal = Bitmask::from_fn(w, h, |x, y| {
        let (x, y) = (i64::from(x), i64::from(y));
        (x - r..=x + r).all(|xx| xx >= 0 && xx < i64::from(w) && mask.get(xx as u32, y as u32))
    });
    Bitmask::from_fn(w, h, |x, y| {
        let (x, y) = (i64::from(x), i64::from(y));
        (y - r..=y + r)
            .all(|yy| yy >= 0 && yy < i64::from(h) && horizontal.get(x as u32, yy as u32))
    })
}

/// Split an instance-valued raster into one mask per distinct nonzero value,
/// ordered by value.
pub fn split_instances(values: &[u32], width: u32, height: u32) -> Result<Vec<(u32, Bitmask)>> {
    let expected = width as usize * height as usize;
    if values.len() != expected {
        return Err(Error::CorruptRle {
            expected: expected as u64,
            actual: values.len() as u64,
        });
    }
    let mut by_value: BTreeMap<u32, Bitmask> = BTreeMap::new();
    for (i, &v) in values.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let x = (i % width as usize) as u32;
        let y = (i / width as usize) as u32;
        by_value
            .entry(v)
            .or_insert_with(|| Bitmask::new(width, height))
            .set(x, y, true);
    }
    Ok(by_value.into_iter().collect())
}
