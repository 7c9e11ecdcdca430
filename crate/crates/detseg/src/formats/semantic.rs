//! Semantic maps as single-channel 8-bit PNGs (pixel value = category id)
//! with a `palette.json` sidecar for display colors.

use std::path::Path;

use detseg_core::{CategoryTable, SemanticMap};
use image::{GrayImage, ImageFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn write_semantic_png(map: &SemanticMap, path: &Path) -> Result<()> {
    let img = GrayImage::from_raw(map.width, map.height, map.labels.clone())
        .expect("label buffer matches map dims");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

pub fn read_semantic_png(path: &Path) -> Result<SemanticMap> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let image::DynamicImage::ImageLuma8(gray) = img else {
        return Err(Error::Image {
            path: path.to_path_buf(),
            message: "semantic map must be 8-bit single channel".into(),
        });
    };
    Ok(SemanticMap {
        width: gray.width(),
        height: gray.height(),
        labels: gray.into_raw(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub id: u16,
    pub name: String,
    pub color: [u8; 3],
}

/// Index 0 is black background; categories get evenly spread hues.
pub fn palette(table: &CategoryTable) -> Vec<PaletteEntry> {
    let n = table.len().max(1) as f64;
    let mut out = vec![PaletteEntry {
        id: 0,
        name: "background".into(),
        color: [0, 0, 0],
    }];
    for c in table.categories() {
        let hue = f64::from(c.id - 1) / n;
        out.push(PaletteEntry {
            id: c.id,
            name: c.name.clone(),
            color: hsv_to_rgb(hue, 0.75, 0.95),
        });
    }
    out
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let sector = (h * 6.0).floor();
    let f = h * 6.0 - sector;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    let (r, g, b) = match sector as i32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| (c * 255.0).round() as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let map = SemanticMap {
            width: 3,
            height: 2,
            labels: vec![0, 1, 2, 3, 0, 37],
        };
        write_semantic_png(&map, &path).unwrap();
        assert_eq!(read_semantic_png(&path).unwrap(), map);
    }

    #[test]
    fn palette_covers_table() {
        let p = palette(&CategoryTable::fast());
        assert_eq!(p.len(), 38);
        assert_eq!(p[0].color, [0, 0, 0]);
        let mut colors: Vec<[u8; 3]> = p.iter().map(|e| e.color).collect();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), 38);
    }
}
