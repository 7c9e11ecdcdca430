//! Ground truth for prompt ablations: images with instance-valued masks.
//!
//! A set is a directory holding `index.json`:
//!
//! ```json
//! {"name": "hrsc-test",
//!  "categories": [["ship", "SH"]],
//!  "images": [{"id": "100000001", "image": "img/100000001.png",
//!              "mask": "mask/100000001.png",
//!              "instances": [{"id": "a", "category": "ship", "value": 1,
//!                             "hbox": [x0, y0, x1, y1],
//!                             "rbox": [[x, y], [x, y], [x, y], [x, y]]}]}]}
//! ```
//!
//! Mask pixels hold the instance `value` (0 = background) as 8- or 16-bit
//! gray, or as RGB packed into `r << 16 | g << 8 | b`.

use std::collections::BTreeMap;
use std::path::Path;

use detseg_core::mask::split_instances;
use detseg_core::{CategoryTable, HBox, InstanceAnnotation, InstanceMask, RBox};
use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtIndex {
    pub name: String,
    #[serde(default)]
    pub categories: Option<Vec<(String, String)>>,
    pub images: Vec<GtImageEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtImageEntry {
    pub id: String,
    pub image: String,
    pub mask: String,
    pub instances: Vec<GtInstanceEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtInstanceEntry {
    pub id: String,
    pub category: String,
    pub value: u32,
    #[serde(default)]
    pub hbox: Option<HBox>,
    #[serde(default)]
    pub rbox: Option<RBox>,
}

/// One instance cut out of an instance-valued mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GtMask {
    pub value: u32,
    pub category: u16,
    pub mask: InstanceMask,
}

pub struct GtInstance {
    pub annotation: InstanceAnnotation,
    pub mask: InstanceMask,
}

pub struct GtImage {
    pub id: String,
    pub image: DynamicImage,
    pub instances: Vec<GtInstance>,
}

pub struct GtSet {
    pub name: String,
    pub categories: CategoryTable,
    pub images: Vec<GtImage>,
}

/// One mask per distinct nonzero value, in value order. Every value must
/// appear in `colors`, which maps it to a category.
pub fn parse_hrsc_gt(
    values: &[u32],
    width: u32,
    height: u32,
    colors: &BTreeMap<u32, u16>,
) -> Result<Vec<GtMask>> {
    split_instances(values, width, height)?
        .into_iter()
        .map(|(value, bits)| {
            let category = *colors.get(&value).ok_or_else(|| {
                Error::Integrity(format!("mask value {value} has no entry in the color table"))
            })?;
            Ok(GtMask {
                value,
                category,
                mask: InstanceMask::from_bitmask(&bits, 1.0),
            })
        })
        .collect()
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Instance values of a mask image, row-major.
pub fn mask_values(img: &DynamicImage, path: &Path) -> Result<Vec<u32>> {
    Ok(match img {
        DynamicImage::ImageLuma8(g) => g.pixels().map(|p| u32::from(p.0[0])).collect(),
        DynamicImage::ImageLuma16(g) => g.pixels().map(|p| u32::from(p.0[0])).collect(),
        DynamicImage::ImageRgb8(c) => c
            .pixels()
            .map(|p| u32::from(p.0[0]) << 16 | u32::from(p.0[1]) << 8 | u32::from(p.0[2]))
            .collect(),
        DynamicImage::ImageRgba8(c) => c
            .pixels()
            .map(|p| u32::from(p.0[0]) << 16 | u32::from(p.0[1]) << 8 | u32::from(p.0[2]))
            .collect(),
        _ => {
            return Err(Error::Image {
                path: path.to_path_buf(),
                message: "unsupported mask pixel format".into(),
            })
        }
    })
}

pub fn load_gt_set(dir: &Path) -> Result<GtSet> {
    let index_path = dir.join("index.json");
    let index: GtIndex = serde_json::from_str(&read_text(&index_path)?).map_err(|e| Error::Schema {
        path: index_path.display().to_string(),
        message: e.to_string(),
    })?;
    let categories = match &index.categories {
        Some(entries) => CategoryTable::custom(entries)?,
        None => CategoryTable::custom(&[("ship", "SH")])?,
    };

    let mut images = Vec::with_capacity(index.images.len());
    for entry in &index.images {
        let image_path = dir.join(&entry.image);
        let image = open_image(&image_path)?;
        let mask_path = dir.join(&entry.mask);
        let mask_img = open_image(&mask_path)?;
        if (mask_img.width(), mask_img.height()) != (image.width(), image.height()) {
            return Err(Error::Integrity(format!(
                "{}: mask is {}x{}, image is {}x{}",
                mask_path.display(),
                mask_img.width(),
                mask_img.height(),
                image.width(),
                image.height()
            )));
        }
        let (w, h) = (image.width(), image.height());

        let mut colors = BTreeMap::new();
        let mut annotations = Vec::with_capacity(entry.instances.len());
        for inst in &entry.instances {
            let category = categories.resolve(&inst.category)?;
            if inst.value == 0 {
                return Err(Error::Config(format!(
                    "{}: instance {} uses the background value 0",
                    entry.id, inst.id
                )));
            }
            if colors.insert(inst.value, category).is_some() {
                return Err(Error::Config(format!(
                    "{}: mask value {} used twice",
                    entry.id, inst.value
                )));
            }
            annotations.push(InstanceAnnotation::new(
                category,
                inst.hbox,
                inst.rbox.clone(),
                false,
                inst.id.clone(),
            )?);
        }

        let values = mask_values(&mask_img, &mask_path)?;
        let mut by_value: BTreeMap<u32, GtMask> = parse_hrsc_gt(&values, w, h, &colors)
            .map_err(|e| Error::Integrity(format!("{}: {e}", mask_path.display())))?
            .into_iter()
            .map(|m| (m.value, m))
            .collect();

        let instances = entry
            .instances
            .iter()
            .zip(annotations)
            .map(|(inst, annotation)| {
                let mask = by_value
                    .remove(&inst.value)
                    .map(|m| m.mask)
                    .unwrap_or_else(|| {
                        InstanceMask::from_rle(detseg_core::RleMask::empty(w, h), 1.0)
                    });
                GtInstance { annotation, mask }
            })
            .collect();
        images.push(GtImage {
            id: entry.id.clone(),
            image,
            instances,
        });
    }
    Ok(GtSet {
        name: index.name,
        categories,
        images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_only() {
        let colors = BTreeMap::from([(1, 1)]);
        assert!(parse_hrsc_gt(&[0; 12], 4, 3, &colors).unwrap().is_empty());
    }

    #[test]
    fn two_instances_are_disjoint() {
        let values = [0, 1, 1, 0, 2, 2, 0, 0, 2];
        let colors = BTreeMap::from([(1, 1), (2, 1)]);
        let got = parse_hrsc_gt(&values, 3, 3, &colors).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(
            detseg_core::rle::intersection_area(&got[0].mask.rle, &got[1].mask.rle).unwrap(),
            0
        );
    }

    #[test]
    fn areas_match_value_histogram() {
        let values: Vec<u32> = (0..64u32).map(|i| [0, 3, 9, 40][((i * 3 + i / 8) % 4) as usize]).collect();
        let colors = BTreeMap::from([(3, 1), (9, 2), (40, 1)]);
        let got = parse_hrsc_gt(&values, 8, 8, &colors).unwrap();
        for m in &got {
            let expected = values.iter().filter(|&&v| v == m.value).count() as u64;
            assert_eq!(m.mask.area, expected, "value {}", m.value);
        }
        assert_eq!(got.iter().map(|m| m.category).collect::<Vec<_>>(), vec![1, 2, 1]);
    }

    #[test]
    fn unknown_value_is_an_error() {
        let colors = BTreeMap::from([(1, 1)]);
        assert!(parse_hrsc_gt(&[0, 1, 5, 0], 2, 2, &colors).is_err());
    }
}
