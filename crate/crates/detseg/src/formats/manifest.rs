//! The dataset index written next to a conversion's output tree.

use std::path::Path;

use detseg_core::select::SelectionPolicy;
use detseg_core::{CategoryTable, DatasetTag, PromptCombo, TilingPolicy};
use serde::{Deserialize, Serialize};

use super::InputFormat;
use crate::error::{read_text, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub recipe: String,
    pub input_format: InputFormat,
    pub tiling: TilingPolicy,
    /// Edge tiles are anchored to the far edge rather than padded.
    pub edge_tiles: String,
    pub combo: PromptCombo,
    pub allow_rhbox_fallback: bool,
    /// `[width, height]` of the mask-prompt score grid.
    pub mask_grid: [u32; 2],
    pub magnitude: f64,
    pub multimask: bool,
    pub selection: SelectionPolicy,
    pub backend: String,
    pub seed: u64,
    pub failure_budget: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceStatus {
    Valid,
    Invalid,
    /// Kept less than the retention fraction of its box inside the tile.
    Dropped,
    /// No usable answer from the backend, or no prompt could be built.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub source_instance_id: String,
    pub category: u16,
    pub status: InstanceStatus,
    /// Position in the tile's instance file, for valid and invalid masks.
    pub mask_index: Option<usize>,
    pub area: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileRecord {
    pub name: String,
    pub image_id: String,
    pub row: u32,
    pub col: u32,
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub padded: bool,
    pub image: String,
    pub sem_map: String,
    pub instances_file: String,
    pub instances: Vec<InstanceRecord>,
}

impl TileRecord {
    pub fn count(&self, status: InstanceStatus) -> u64 {
        self.instances.iter().filter(|i| i.status == status).count() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub id: String,
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub annotation_file: Option<String>,
    pub rejected_annotations: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub images: u64,
    pub tiles: u64,
    pub cropped_instances: u64,
    pub valid: u64,
    pub invalid: u64,
    pub dropped_by_retention: u64,
    pub backend_failed: u64,
    pub rejected_annotations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub dataset: DatasetTag,
    pub categories: CategoryTable,
    pub config: ConfigSnapshot,
    pub images: Vec<ImageRecord>,
    pub tiles: Vec<TileRecord>,
    pub summary: Summary,
}

impl DatasetManifest {
    pub fn new(categories: CategoryTable, config: ConfigSnapshot) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            dataset: categories.tag,
            categories,
            config,
            images: Vec::new(),
            tiles: Vec::new(),
            summary: Summary::default(),
        }
    }

    /// Summary recomputed from the image and tile records.
    pub fn tally(&self) -> Summary {
        let mut s = Summary {
            images: self.images.len() as u64,
            tiles: self.tiles.len() as u64,
            rejected_annotations: self.images.iter().map(|i| i.rejected_annotations).sum(),
            ..Summary::default()
        };
        for t in &self.tiles {
            s.cropped_instances += t.instances.len() as u64;
            s.valid += t.count(InstanceStatus::Valid);
            s.invalid += t.count(InstanceStatus::Invalid);
            s.dropped_by_retention += t.count(InstanceStatus::Dropped);
            s.backend_failed += t.count(InstanceStatus::Failed);
        }
        s
    }

    /// Problems with the record structure itself, independent of files.
    pub fn consistency_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if let Err(e) = self.categories.validate() {
            problems.push(e.to_string());
        }
        if self.tally() != self.summary {
            problems.push(format!(
                "summary {:?} disagrees with the tile records {:?}",
                self.summary,
                self.tally()
            ));
        }
        for t in &self.tiles {
            if !self.images.iter().any(|i| i.id == t.image_id) {
                problems.push(format!("tile {} refers to unknown image {}", t.name, t.image_id));
            }
            for inst in &t.instances {
                if !self.categories.contains_id(inst.category) {
                    problems.push(format!(
                        "tile {} instance {} has unknown category {}",
                        t.name, inst.source_instance_id, inst.category
                    ));
                }
                let needs_mask = matches!(inst.status, InstanceStatus::Valid | InstanceStatus::Invalid);
                if needs_mask != inst.mask_index.is_some() {
                    problems.push(format!(
                        "tile {} instance {} status {:?} with mask index {:?}",
                        t.name, inst.source_instance_id, inst.status, inst.mask_index
                    ));
                }
            }
        }
        problems
    }

    /// Output files referenced by the manifest that are missing under `root`.
    pub fn missing_files(&self, root: &Path) -> Vec<String> {
        self.tiles
            .iter()
            .flat_map(|t| [&t.image, &t.sem_map, &t.instances_file])
            .filter(|rel| !root.join(rel).is_file())
            .map(|rel| rel.to_string())
            .collect()
    }
}

/// Pretty-printed JSON with a trailing newline. Field order is fixed by the
/// type definitions and maps are ordered, so equal manifests give equal
/// bytes.
pub fn write_manifest(m: &DatasetManifest) -> Result<String> {
    let mut s = serde_json::to_string_pretty(m)?;
    s.push('\n');
    Ok(s)
}

pub fn read_manifest(text: &str) -> Result<DatasetManifest> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Schema {
            path: "manifest".into(),
            message: "missing schema_version".into(),
        })?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    let m: DatasetManifest = serde_json::from_value(value).map_err(|e| Error::Schema {
        path: "manifest".into(),
        message: e.to_string(),
    })?;
    m.categories.validate()?;
    Ok(m)
}

/// Accepts the manifest file or the output directory holding it. With
/// `strict`, every referenced file must exist and the summary must match.
pub fn read_manifest_file(path: &Path, strict: bool) -> Result<(DatasetManifest, std::path::PathBuf)> {
    let file = if path.is_dir() {
        path.join("manifest.json")
    } else {
        path.to_path_buf()
    };
    let root = file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ".".into());
    let m = read_manifest(&read_text(&file)?)?;
    if strict {
        let mut problems = m.consistency_problems();
        problems.extend(
            m.missing_files(&root)
                .into_iter()
                .map(|f| format!("missing file {f}")),
        );
        if !problems.is_empty() {
            return Err(Error::Integrity(problems.join("; ")));
        }
    }
    Ok((m, root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use detseg_core::PromptMode;

    pub(crate) fn snapshot() -> ConfigSnapshot {
        ConfigSnapshot {
            recipe: "sota".into(),
            input_format: InputFormat::Dota,
            tiling: TilingPolicy::for_tile_size(1024).unwrap(),
            edge_tiles: "anchor".into(),
            combo: PromptMode::HBox.combo(),
            allow_rhbox_fallback: false,
            mask_grid: [256, 256],
            magnitude: 1000.0,
            multimask: false,
            selection: SelectionPolicy::HighestScore,
            backend: "oracle:fill".into(),
            seed: 0,
            failure_budget: 0.05,
        }
    }

    fn tile(name: &str, statuses: &[InstanceStatus]) -> TileRecord {
        TileRecord {
            name: name.into(),
            image_id: "img".into(),
            row: 0,
            col: 0,
            x: 0,
            y: 0,
            width: 8,
            height: 8,
            padded: false,
            image: format!("images/{name}.png"),
            sem_map: format!("sem_maps/{name}.png"),
            instances_file: format!("instances/{name}.json"),
            instances: statuses
                .iter()
                .enumerate()
                .map(|(i, &status)| InstanceRecord {
                    source_instance_id: i.to_string(),
                    category: 1,
                    status,
                    mask_index: matches!(status, InstanceStatus::Valid | InstanceStatus::Invalid)
                        .then_some(i),
                    area: 3,
                })
                .collect(),
        }
    }

    fn two_tiles() -> DatasetManifest {
        use InstanceStatus::*;
        let mut m = DatasetManifest::new(CategoryTable::sota(), snapshot());
        m.images.push(ImageRecord {
            id: "img".into(),
            file: "img.png".into(),
            width: 16,
            height: 8,
            annotation_file: Some("img.txt".into()),
            rejected_annotations: 1,
        });
        m.tiles.push(tile("img__0_0", &[Valid, Invalid, Dropped]));
        m.tiles.push(tile("img__0_1", &[Valid, Failed]));
        m.summary = m.tally();
        m
    }

    #[test]
    fn empty_and_populated_round_trip() {
        let empty = DatasetManifest::new(CategoryTable::sior(), snapshot());
        assert_eq!(read_manifest(&write_manifest(&empty).unwrap()).unwrap(), empty);

        let m = two_tiles();
        assert_eq!(m.summary.cropped_instances, 5);
        let text = write_manifest(&m).unwrap();
        assert_eq!(read_manifest(&text).unwrap(), m);
        assert_eq!(write_manifest(&read_manifest(&text).unwrap()).unwrap(), text);
        assert!(m.consistency_problems().is_empty());
    }

    #[test]
    fn version_mismatch() {
        let text = write_manifest(&two_tiles())
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(
            read_manifest(&text),
            Err(Error::Version { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn strict_read_reports_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = two_tiles();
        std::fs::write(dir.path().join("manifest.json"), write_manifest(&m).unwrap()).unwrap();
        assert!(read_manifest_file(dir.path(), false).is_ok());
        let err = read_manifest_file(dir.path(), true).unwrap_err();
        assert!(err.to_string().contains("missing file images/img__0_0.png"), "{err}");
    }

    #[test]
    fn tampered_summary_is_inconsistent() {
        let mut m = two_tiles();
        m.summary.valid += 1;
        assert_eq!(m.consistency_problems().len(), 1);
    }
}
