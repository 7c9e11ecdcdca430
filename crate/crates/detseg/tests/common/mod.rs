#![allow(dead_code)]

//! Synthetic datasets for integration tests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma, Rgb, RgbImage};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use detseg_core::CategoryTable;
use serde_json::json;

/// Integer box `[x0, y0, x1, y1)` in pixels.
pub type PxBox = [u32; 4];

pub fn textured(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| Rgb([(x % 251) as u8, (y % 241) as u8, ((x ^ y) % 256) as u8]))
}

pub fn quad(b: PxBox) -> String {
    let [x0, y0, x1, y1] = b;
    format!("{x0} {y0} {x1} {y0} {x1} {y1} {x0} {y1}")
}

/// One source image with DOTA-style labels.
pub struct DotaImage {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<(&'static str, PxBox)>,
}

pub fn write_dota_dataset(root: &Path, images: &[DotaImage]) {
    std::fs::create_dir_all(root.join("images")).unwrap();
    std::fs::create_dir_all(root.join("annotations")).unwrap();
    for img in images {
        textured(img.width, img.height)
            .save(root.join("images").join(format!("{}.png", img.id)))
            .unwrap();
        let mut text = String::from("imagesource:synthetic\ngsd:0.5\n");
        for (cat, b) in &img.objects {
            text.push_str(&format!("{} {} 0\n", quad(*b), cat));
        }
        std::fs::write(root.join("annotations").join(format!("{}.txt", img.id)), text).unwrap();
    }
}

pub fn write_voc_dataset(root: &Path, id: &str, w: u32, h: u32, objects: &[(&str, PxBox)]) {
    std::fs::create_dir_all(root.join("images")).unwrap();
    std::fs::create_dir_all(root.join("annotations")).unwrap();
    textured(w, h).save(root.join("images").join(format!("{id}.png"))).unwrap();
    let mut xml = format!(
        "<annotation>\n  <filename>{id}.png</filename>\n  <size><width>{w}</width><height>{h}</height><depth>3</depth></size>\n"
    );
    for (name, [x0, y0, x1, y1]) in objects {
        xml.push_str(&format!(
            "  <object><name>{name}</name><difficult>0</difficult><bndbox><xmin>{x0}</xmin><ymin>{y0}</ymin><xmax>{x1}</xmax><ymax>{y1}</ymax></bndbox></object>\n"
        ));
    }
    xml.push_str("</annotation>\n");
    std::fs::write(root.join("annotations").join(format!("{id}.xml")), xml).unwrap();
}

/// Non-overlapping random boxes, one per cell of a `cols x rows` grid,
/// kept `margin` pixels away from each cell edge.
pub fn grid_boxes(rng: &mut ChaCha8Rng, w: u32, h: u32, cols: u32, rows: u32, count: usize, margin: u32) -> Vec<PxBox> {
    let (cw, ch) = (w / cols, h / rows);
    assert!(count as u32 <= cols * rows);
    let mut span = |lo: u32, cell: u32| {
        let inner = cell - 2 * margin;
        let a = rng.next_u32() % (inner - 4);
        let len = 4 + rng.next_u32() % (inner - a - 3);
        (lo + margin + a, lo + margin + a + len)
    };
    (0..count as u32)
        .map(|i| {
            let (cx, cy) = (i % cols * cw, i / cols * ch);
            let (x0, x1) = span(cx, cw);
            let (y0, y1) = span(cy, ch);
            [x0, y0, x1.min(cx + cw - margin), y1.min(cy + ch - margin)]
        })
        .collect()
}

/// Ground-truth set whose instance masks are exactly the box interiors.
/// Returns the boxes per image.
pub fn write_gt_set(root: &Path, images: usize, per_image: usize, size: u32, seed: u64) -> Vec<Vec<PxBox>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::fs::create_dir_all(root.join("img")).unwrap();
    std::fs::create_dir_all(root.join("mask")).unwrap();
    let mut entries = Vec::new();
    let mut all = Vec::new();
    for i in 0..images {
        let id = format!("{:09}", 100_000_001 + i);
        let boxes = grid_boxes(&mut rng, size, size, 3, 2, per_image, 10);
        let mut mask = GrayImage::new(size, size);
        for (k, [x0, y0, x1, y1]) in boxes.iter().enumerate() {
            for y in *y0..*y1 {
                for x in *x0..*x1 {
                    mask.put_pixel(x, y, Luma([k as u8 + 1]));
                }
            }
        }
        textured(size, size).save(root.join("img").join(format!("{id}.png"))).unwrap();
        mask.save(root.join("mask").join(format!("{id}.png"))).unwrap();
        let instances: Vec<_> = boxes
            .iter()
            .enumerate()
            .map(|(k, b)| {
                json!({"id": format!("{id}-{k}"), "category": "ship", "value": k + 1,
                       "hbox": [b[0], b[1], b[2], b[3]]})
            })
            .collect();
        entries.push(json!({"id": id, "image": format!("img/{id}.png"),
                            "mask": format!("mask/{id}.png"), "instances": instances}));
        all.push(boxes);
    }
    let index = json!({"name": "synthetic", "images": entries});
    std::fs::write(root.join("index.json"), serde_json::to_string_pretty(&index).unwrap()).unwrap();
    all
}

/// Every file under `dir` keyed by its relative path.
pub fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(path.strip_prefix(base).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// A dataset exercising overlap, retention drops and edge anchoring:
/// a 2048 x 2048 image (9 tiles at 1024/824) and a small 700 x 500 one.
pub fn mixed_dota(root: &Path) {
    write_dota_dataset(
        root,
        &[
            DotaImage {
                id: "big".into(),
                width: 2048,
                height: 2048,
                objects: vec![
                    ("plane", [100, 100, 180, 160]),
                    // Straddles the 824 and 1024 tile seams.
                    ("ship", [800, 900, 1100, 1000]),
                    ("small-vehicle", [1500, 1500, 1520, 1530]),
                    ("harbor", [1900, 40, 2048, 300]),
                    ("storage-tank", [1010, 1010, 1040, 1040]),
                ],
            },
            DotaImage {
                id: "small".into(),
                width: 700,
                height: 500,
                objects: vec![("tennis-court", [10, 20, 110, 70]), ("plane", [600, 400, 700, 500])],
            },
        ],
    );
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const POOL: &[&str] = &["a", "Z", "0", "_", "-", " ", "\"", "\\", "é", "船", "\n", "/"];
    (0..rng.next_u32() % 12).map(|_| POOL[(rng.next_u32() as usize) % POOL.len()]).collect()
}

fn random_f64(rng: &mut ChaCha8Rng) -> f64 {
    // Full-precision values in (0, 1], plus a few awkward ones.
    match rng.next_u32() % 4 {
        0 => 0.1,
        1 => 1.0 / 3.0,
        _ => (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 + f64::MIN_POSITIVE,
    }
}

/// A structurally arbitrary manifest; summary and records need not agree.
pub fn random_manifest(rng: &mut ChaCha8Rng) -> detseg::formats::manifest::DatasetManifest {
    use detseg::formats::manifest::*;
    use detseg::formats::InputFormat;
    use detseg_core::select::SelectionPolicy;
    use detseg_core::tiling::SmallImageMode;
    use detseg_core::{PromptCombo, TilingPolicy};

    let tables = [CategoryTable::sota(), CategoryTable::sior(), CategoryTable::fast()];
    let table = tables[(rng.next_u32() % 3) as usize].clone();
    let combos = PromptCombo::ablation_rows();
    let tile = 1 + rng.next_u32() % 2048;
    let config = ConfigSnapshot {
        recipe: random_text(rng),
        input_format: [InputFormat::Dota, InputFormat::Voc, InputFormat::Fair1m][(rng.next_u32() % 3) as usize],
        tiling: TilingPolicy {
            tile_size: tile,
            stride: 1 + rng.next_u32() % tile,
            retention: random_f64(rng),
            small_image: if rng.next_u32() % 2 == 0 { SmallImageMode::Pad } else { SmallImageMode::Keep },
        },
        edge_tiles: "anchor".into(),
        combo: combos[(rng.next_u32() as usize) % combos.len()],
        allow_rhbox_fallback: rng.next_u32() % 2 == 0,
        mask_grid: [1 + rng.next_u32() % 1024, 1 + rng.next_u32() % 1024],
        magnitude: random_f64(rng) * 1e4,
        multimask: rng.next_u32() % 2 == 0,
        selection: SelectionPolicy::HighestScore,
        backend: random_text(rng),
        seed: rng.next_u64(),
        failure_budget: random_f64(rng),
    };
    let mut m = DatasetManifest::new(table.clone(), config);
    for _ in 0..rng.next_u32() % 4 {
        m.images.push(ImageRecord {
            id: random_text(rng),
            file: random_text(rng),
            width: rng.next_u32(),
            height: rng.next_u32(),
            annotation_file: (rng.next_u32() % 2 == 0).then(|| random_text(rng)),
            rejected_annotations: rng.next_u64(),
        });
    }
    let statuses = [InstanceStatus::Valid, InstanceStatus::Invalid, InstanceStatus::Dropped, InstanceStatus::Failed];
    for _ in 0..rng.next_u32() % 5 {
        let instances = (0..rng.next_u32() % 6)
            .map(|_| InstanceRecord {
                source_instance_id: random_text(rng),
                category: 1 + (rng.next_u32() as u16) % table.len() as u16,
                status: statuses[(rng.next_u32() % 4) as usize],
                mask_index: (rng.next_u32() % 2 == 0).then(|| rng.next_u32() as usize),
                area: rng.next_u64(),
            })
            .collect();
        m.tiles.push(TileRecord {
            name: random_text(rng),
            image_id: random_text(rng),
            row: rng.next_u32(),
            col: rng.next_u32(),
            x: rng.next_u32(),
            y: rng.next_u32(),
            width: rng.next_u32(),
            height: rng.next_u32(),
            padded: rng.next_u32() % 2 == 0,
            image: random_text(rng),
            sem_map: random_text(rng),
            instances_file: random_text(rng),
            instances,
        });
    }
    m.summary = Summary {
        images: rng.next_u64(),
        tiles: rng.next_u64(),
        cropped_instances: rng.next_u64(),
        valid: rng.next_u64(),
        invalid: rng.next_u64(),
        dropped_by_retention: rng.next_u64(),
        backend_failed: rng.next_u64(),
        rejected_annotations: rng.next_u64(),
    };
    m
}
