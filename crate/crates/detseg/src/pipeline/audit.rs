//! Recount statistics from written files and check a dataset's integrity.

use std::path::Path;

use detseg_core::mask::render_semantic_map;
use detseg_core::stats::StatsReport;

use crate::error::{Error, Result};
use crate::formats::manifest::{read_manifest_file, DatasetManifest, InstanceStatus};
use crate::formats::semantic::read_semantic_png;
use crate::formats::tile_json::TileInstances;

pub struct Audit {
    pub manifest: DatasetManifest,
    pub stats: StatsReport,
    pub problems: Vec<String>,
}

/// Walk every tile of the dataset at `path` (manifest file or output
/// directory), rebuilding the statistics and collecting every
/// inconsistency instead of stopping at the first. Each semantic map must
/// equal the one painted from the tile's valid masks.
pub fn audit_dataset(path: &Path) -> Result<Audit> {
    let (manifest, root) = read_manifest_file(path, false)?;
    let mut problems = manifest.consistency_problems();
    problems.extend(
        manifest
            .missing_files(&root)
            .into_iter()
            .map(|f| format!("missing file {f}")),
    );
    let mut stats = StatsReport::new(&manifest.categories);

    for tile in &manifest.tiles {
        let dims = (tile.width, tile.height);
        let sem_path = root.join(&tile.sem_map);
        let mut sem_map = None;
        if sem_path.is_file() {
            match read_semantic_png(&sem_path) {
                Ok(map) if (map.width, map.height) != dims => problems.push(format!(
                    "{}: semantic map is {}x{}, tile is {}x{}",
                    tile.sem_map, map.width, map.height, dims.0, dims.1
                )),
                Ok(map) => {
                    if let Some(bad) = map
                        .label_counts()
                        .keys()
                        .find(|&&l| !manifest.categories.contains_id(u16::from(l)))
                    {
                        problems.push(format!("{}: label {bad} is not a category", tile.sem_map));
                    }
                    stats.add_semantic_map(&map);
                    sem_map = Some(map);
                }
                Err(e) => problems.push(e.to_string()),
            }
        }

        let inst_path = root.join(&tile.instances_file);
        let file = if inst_path.is_file() {
            match TileInstances::read(&inst_path) {
                Ok(f) => Some(f),
                Err(e) => {
                    problems.push(e.to_string());
                    None
                }
            }
        } else {
            None
        };
        if let Some(f) = &file {
            if (f.width(), f.height()) != dims {
                problems.push(format!("{}: size {:?} does not match the tile", tile.instances_file, f.size));
            }
            let referenced = tile.instances.iter().filter(|r| r.mask_index.is_some()).count();
            if referenced != f.instances.len() {
                problems.push(format!(
                    "{}: {} masks stored, {} referenced",
                    tile.instances_file,
                    f.instances.len(),
                    referenced
                ));
            }
        }

        let mut painted = Vec::new();
        for rec in &tile.instances {
            match rec.status {
                InstanceStatus::Dropped => stats.dropped_by_retention += 1,
                InstanceStatus::Failed => stats.backend_failed += 1,
                InstanceStatus::Invalid => stats.invalid_instances += 1,
                InstanceStatus::Valid => {}
            }
            let (Some(f), Some(i)) = (&file, rec.mask_index) else {
                continue;
            };
            if i >= f.instances.len() {
                problems.push(format!("{}: mask index {i} out of range", tile.instances_file));
                continue;
            }
            let mask = match f.mask(i) {
                Ok(m) => m,
                Err(e) => {
                    problems.push(format!("{} mask {i}: {e}", tile.instances_file));
                    continue;
                }
            };
            let stored = &f.instances[i];
            let expect_valid = rec.status == InstanceStatus::Valid;
            if stored.valid != expect_valid
                || stored.category != rec.category
                || mask.area != rec.area
                || stored.bbox != mask.bbox.map(|b| b.to_array())
            {
                problems.push(format!(
                    "{} mask {i} disagrees with the manifest record for {}",
                    tile.instances_file, rec.source_instance_id
                ));
            }
            if expect_valid {
                if mask.area == 0 {
                    problems.push(format!("{} mask {i} is valid but empty", tile.instances_file));
                }
                stats.add_valid_instance(rec.category, mask.area);
                if let Ok(label) = u8::try_from(rec.category) {
                    painted.push((mask, label));
                }
            }
        }
        if let (Some(map), Some(_)) = (&sem_map, &file) {
            let pairs: Vec<_> = painted.iter().map(|(m, l)| (m, *l)).collect();
            match render_semantic_map(&pairs, tile.width, tile.height) {
                Ok(expected) if expected.labels != map.labels => problems.push(format!(
                    "{}: labels differ from the tile's valid instance masks",
                    tile.sem_map
                )),
                Ok(_) => {}
                Err(e) => problems.push(format!("{}: {e}", tile.sem_map)),
            }
        }
    }
    Ok(Audit {
        manifest,
        stats,
        problems,
    })
}

/// Statistics recomputed from the written files: pixel counts from the
/// semantic maps, instance counts and sizes from valid instance masks.
pub fn compute_stats(path: &Path) -> Result<StatsReport> {
    let audit = audit_dataset(path)?;
    if !audit.problems.is_empty() {
        return Err(Error::Integrity(audit.problems.join("; ")));
    }
    Ok(audit.stats)
}
