//! Detection dataset in, tiled segmentation dataset out.
//!
//! Input layout: `<input>/images/<id>.<ext>` with optional
//! `<input>/annotations/<id>.txt` (DOTA) or `<id>.xml` (VOC, FAIR1M).
//! Output layout: `images/`, `sem_maps/`, `instances/`, `manifest.json`,
//! `stats.json`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use detseg_core::annotation::BoxAvailability;
use detseg_core::mask::render_semantic_map;
use detseg_core::metrics::choose_prompt_mode;
use detseg_core::prompt::{build_prompt_set, reference_box};
use detseg_core::select::{select_mask, validate_mask, SelectionPolicy};
use detseg_core::stats::StatsReport;
use detseg_core::tiling::{crop_annotations, crop_pixels, plan_tiles};
use detseg_core::{CategoryTable, InstanceAnnotation, InstanceMask, PromptMode, TileSpec, TilingPolicy};
use image::{DynamicImage, ImageBuffer, ImageFormat, Pixel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recipe::Recipe;
use crate::error::{create_dir, read_text, write_bytes, Error, Result};
use crate::formats::manifest::{
    write_manifest, ConfigSnapshot, DatasetManifest, ImageRecord, InstanceRecord, InstanceStatus,
    TileRecord,
};
use crate::formats::semantic::{palette, write_semantic_png};
use crate::formats::tile_json::TileInstances;
use crate::formats::{InputFormat, Parsed};
use crate::segmenter::{Backend, SegmentRequest};

const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "tif", "tiff", "bmp", "webp"];
/// Attempted instances before the failure budget is enforced mid-run.
const BUDGET_WARMUP: u64 = 100;

#[derive(Clone, Debug)]
pub struct ConvertOptions {
    pub workers: usize,
    pub seed: u64,
    pub resume: bool,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        Self {
            workers: 4,
            seed: 0,
            resume: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvertOutcome {
    pub manifest: DatasetManifest,
    pub stats: StatsReport,
    pub manifest_path: PathBuf,
}

struct Source {
    id: String,
    image: PathBuf,
    annotation: Option<PathBuf>,
    parsed: Parsed,
}

/// Everything one source image contributes, also the checkpoint payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ImageResult {
    config: ConfigSnapshot,
    record: ImageRecord,
    tiles: Vec<TileRecord>,
    stats: StatsReport,
    attempted: u64,
    failed: u64,
}

struct Shared<'a> {
    recipe: &'a Recipe,
    table: &'a CategoryTable,
    policy: TilingPolicy,
    config: ConfigSnapshot,
    backend: &'a dyn Backend,
    output: &'a Path,
    resume: bool,
    interrupt: &'a AtomicBool,
    abort: AtomicBool,
    attempted: AtomicU64,
    failed: AtomicU64,
}

fn discover(input: &Path) -> Result<Vec<(String, PathBuf, Option<PathBuf>)>> {
    let images_dir = input.join("images");
    let entries = std::fs::read_dir(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&images_dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(String::from) else {
            continue;
        };
        found.push((id, path));
    }
    found.sort();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(found.len());
    for (id, path) in found {
        if id.contains("__") {
            return Err(Error::Config(format!(
                "image id {id:?} contains \"__\", which tile names reserve"
            )));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Config(format!("two source images share the id {id:?}")));
        }
        let candidates: Vec<PathBuf> = ["txt", "xml"]
            .iter()
            .map(|ext| input.join("annotations").join(format!("{id}.{ext}")))
            .filter(|p| p.is_file())
            .collect();
        if candidates.len() > 1 {
            return Err(Error::Config(format!("{id} has both .txt and .xml annotations")));
        }
        out.push((id, path, candidates.into_iter().next()));
    }
    Ok(out)
}

fn load_sources(recipe: &Recipe, table: &CategoryTable, input: &Path) -> Result<Vec<Source>> {
    discover(input)?
        .into_iter()
        .map(|(id, image, annotation)| {
            let parsed = match &annotation {
                None => Parsed::default(),
                Some(path) => {
                    let text = read_text(path)?;
                    let found = InputFormat::sniff(path, &text)?;
                    if found != recipe.input_format {
                        return Err(Error::Config(format!(
                            "{}: recipe {} reads {} annotations, this file is {found}",
                            path.display(),
                            recipe.name,
                            recipe.input_format
                        )));
                    }
                    found.parse(&text, table, &path.display().to_string())?
                }
            };
            Ok(Source {
                id,
                image,
                annotation,
                parsed,
            })
        })
        .collect()
}

/// Refuse inputs that cannot be prompted the way the recipe says.
fn check_availability(recipe: &Recipe, sources: &[Source]) -> Result<()> {
    let all = sources.iter().flat_map(|s| &s.parsed.instances);
    let available = all
        .clone()
        .fold(BoxAvailability::default(), |acc, a| acc.union(a.availability()));
    if available.hbox || available.rbox {
        let ruled = choose_prompt_mode(available)?;
        if ruled != recipe.prompt_mode {
            log::warn!(
                "input boxes call for {ruled} prompts; recipe {} uses {}",
                recipe.name,
                recipe.prompt_mode
            );
        }
    }
    let (lacking, what) = match recipe.prompt_mode {
        PromptMode::RhBox => (all.filter(|a| a.rbox.is_none()).count(), "R-Box"),
        PromptMode::HBox if recipe.allow_rhbox_fallback => (0, "H-Box"),
        PromptMode::HBox => (all.filter(|a| a.hbox.is_none()).count(), "H-Box"),
    };
    if lacking > 0 {
        let hint = if recipe.prompt_mode == PromptMode::HBox {
            " (allow_rhbox_fallback prompts them with their RH-Box)"
        } else {
            ""
        };
        return Err(Error::Config(format!(
            "recipe {} builds {} prompts but {lacking} instances have no {}{hint}",
            recipe.name,
            recipe.prompt_mode,
            what
        )));
    }
    Ok(())
}

fn crop_raw<S: Copy + Default, const N: usize>(
    raw: &[S],
    width: u32,
    height: u32,
    tile: &TileSpec,
) -> Result<Vec<S>>
where
    [S; N]: Default,
{
    let pixels: Vec<[S; N]> = raw
        .chunks_exact(N)
        .map(|c| c.try_into().expect("chunk of N"))
        .collect();
    Ok(crop_pixels(&pixels, width, height, tile)?
        .into_iter()
        .flatten()
        .collect())
}

fn crop_buffer<P, const N: usize>(
    buf: &ImageBuffer<P, Vec<P::Subpixel>>,
    tile: &TileSpec,
) -> Result<ImageBuffer<P, Vec<P::Subpixel>>>
where
    P: Pixel,
    P::Subpixel: Default,
    [P::Subpixel; N]: Default,
{
    let raw = crop_raw::<P::Subpixel, N>(buf.as_raw(), buf.width(), buf.height(), tile)?;
    Ok(ImageBuffer::from_raw(tile.width, tile.height, raw).expect("cropped buffer size"))
}

/// Copy the tile window, zero-padding beyond the source. Pixel formats
/// other than 8/16-bit gray, RGB and RGBA are converted to 8-bit RGB.
pub fn crop_image(img: &DynamicImage, tile: &TileSpec) -> Result<DynamicImage> {
    use DynamicImage as D;
    Ok(match img {
        D::ImageLuma8(b) => D::ImageLuma8(crop_buffer::<_, 1>(b, tile)?),
        D::ImageLuma16(b) => D::ImageLuma16(crop_buffer::<_, 1>(b, tile)?),
        D::ImageRgb8(b) => D::ImageRgb8(crop_buffer::<_, 3>(b, tile)?),
        D::ImageRgb16(b) => D::ImageRgb16(crop_buffer::<_, 3>(b, tile)?),
        D::ImageRgba8(b) => D::ImageRgba8(crop_buffer::<_, 4>(b, tile)?),
        D::ImageRgba16(b) => D::ImageRgba16(crop_buffer::<_, 4>(b, tile)?),
        other => D::ImageRgb8(crop_buffer::<_, 3>(&other.to_rgb8(), tile)?),
    })
}

fn save_png(img: &DynamicImage, path: &Path) -> Result<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

struct TileResult {
    record: TileRecord,
    stats: StatsReport,
    attempted: u64,
    failed: u64,
}

fn process_tile(
    sh: &Shared,
    source: &Source,
    img: &DynamicImage,
    tile: &TileSpec,
) -> Result<TileResult> {
    let name = tile.name();
    let crop = crop_annotations(&source.parsed.instances, tile, sh.policy.retention);
    let tile_img = crop_image(img, tile)?;
    let image_rel = format!("images/{name}.png");
    save_png(&tile_img, &sh.output.join(&image_rel))?;

    // (source index, record) pairs, sorted by source index at the end.
    let mut records: Vec<(usize, InstanceRecord)> = Vec::new();
    let mut stats = StatsReport::new(sh.table);
    for &idx in &crop.dropped {
        let a = &source.parsed.instances[idx];
        records.push((
            idx,
            InstanceRecord {
                source_instance_id: a.source_instance_id.clone(),
                category: a.category_id,
                status: InstanceStatus::Dropped,
                mask_index: None,
                area: 0,
            },
        ));
        stats.dropped_by_retention += 1;
    }

    // Build prompts; an instance whose prompt cannot be built counts as failed.
    let base = sh.recipe.combo();
    let mut prompted = Vec::new();
    let mut prompts = Vec::new();
    for kept in &crop.kept {
        let a: &InstanceAnnotation = &kept.annotation;
        let combo = if a.hbox.is_none() && sh.recipe.prompt_mode == PromptMode::HBox {
            Recipe::fallback_combo(base)
        } else {
            base
        };
        match build_prompt_set(a, &sh.recipe.prompt_config(combo), tile.width, tile.height) {
            Ok(p) => {
                prompted.push((kept.index, a, Some(combo)));
                prompts.push(p);
            }
            Err(detseg_core::Error::EmptyPrompt) => {
                log::warn!("{name}: instance {} gave an empty prompt", a.source_instance_id);
                prompted.push((kept.index, a, None));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let results = if prompts.is_empty() {
        Vec::new()
    } else {
        let req = SegmentRequest {
            id: name.clone(),
            image: &tile_img,
            prompts,
            multimask: sh.recipe.multimask,
        };
        match sh.backend.segment(&req) {
            Ok(resp) if resp.results.len() == req.prompts.len() => resp.results,
            Ok(resp) => {
                log::warn!(
                    "{name}: backend returned {} results for {} prompts",
                    resp.results.len(),
                    req.prompts.len()
                );
                vec![Vec::new(); req.prompts.len()]
            }
            Err(e) => {
                log::warn!("{name}: backend failed: {e}");
                vec![Vec::new(); req.prompts.len()]
            }
        }
    };

    let mut tile_json = TileInstances::new(tile.width, tile.height);
    let mut painted: Vec<(InstanceMask, u8)> = Vec::new();
    let mut results = results.into_iter();
    let (mut attempted, mut failed) = (0, 0);
    for (idx, a, combo) in prompted {
        attempted += 1;
        let candidates = match combo {
            Some(_) => results.next().unwrap_or_default(),
            None => Vec::new(),
        };
        let chosen = combo.and_then(|c| {
            select_mask(&candidates, SelectionPolicy::HighestScore).map(|(_, m)| (c, m))
        });
        let (status, mask_index, area) = match chosen {
            None => {
                failed += 1;
                stats.backend_failed += 1;
                (InstanceStatus::Failed, None, 0)
            }
            Some((c, mut mask)) => {
                let reference = reference_box(a, c)?;
                mask.valid = validate_mask(&mask, &reference, tile.width, tile.height);
                let area = mask.area;
                tile_json.push(a.category_id, &mask);
                let status = if mask.valid {
                    stats.add_valid_instance(a.category_id, area);
                    let label = u8::try_from(a.category_id).expect("category tables hold at most 255 entries");
                    painted.push((mask, label));
                    InstanceStatus::Valid
                } else {
                    stats.invalid_instances += 1;
                    InstanceStatus::Invalid
                };
                (status, Some(tile_json.instances.len() - 1), area)
            }
        };
        records.push((
            idx,
            InstanceRecord {
                source_instance_id: a.source_instance_id.clone(),
                category: a.category_id,
                status,
                mask_index,
                area,
            },
        ));
    }

    let pairs: Vec<(&InstanceMask, u8)> = painted.iter().map(|(m, l)| (m, *l)).collect();
    let map = render_semantic_map(&pairs, tile.width, tile.height)?;
    stats.add_semantic_map(&map);
    let sem_rel = format!("sem_maps/{name}.png");
    write_semantic_png(&map, &sh.output.join(&sem_rel))?;
    let inst_rel = format!("instances/{name}.json");
    tile_json.write(&sh.output.join(&inst_rel))?;

    records.sort_by_key(|(idx, _)| *idx);
    Ok(TileResult {
        record: TileRecord {
            name,
            image_id: tile.image_id.clone(),
            row: tile.row,
            col: tile.col,
            x: tile.x,
            y: tile.y,
            width: tile.width,
            height: tile.height,
            padded: tile.padded(),
            image: image_rel,
            sem_map: sem_rel,
            instances_file: inst_rel,
            instances: records.into_iter().map(|(_, r)| r).collect(),
        },
        stats,
        attempted,
        failed,
    })
}

fn checkpoint_path(output: &Path, id: &str) -> PathBuf {
    output.join("checkpoints").join(format!("{id}.json"))
}

fn load_checkpoint(sh: &Shared, id: &str) -> Result<Option<ImageResult>> {
    let path = checkpoint_path(sh.output, id);
    if !sh.resume || !path.is_file() {
        return Ok(None);
    }
    let done: ImageResult = serde_json::from_str(&read_text(&path)?).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if done.config != sh.config {
        return Err(Error::Config(format!(
            "{}: checkpoint was written with a different configuration",
            path.display()
        )));
    }
    Ok(Some(done))
}

/// Refuse to resume from checkpoints written under another configuration
/// before any image is touched.
fn check_checkpoints(dir: &Path, config: &ConfigSnapshot) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let done: ImageResult = serde_json::from_str(&read_text(&path)?).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if &done.config != config {
            return Err(Error::Config(format!(
                "{}: checkpoint was written with a different configuration",
                path.display()
            )));
        }
    }
    Ok(())
}

fn process_image(sh: &Shared, source: &Source) -> Result<ImageResult> {
    if sh.interrupt.load(Ordering::SeqCst) {
        return Err(Error::Interrupted);
    }
    if sh.abort.load(Ordering::SeqCst) {
        return Err(budget_error(sh));
    }
    if let Some(done) = load_checkpoint(sh, &source.id)? {
        log::info!("{}: resumed from checkpoint", source.id);
        sh.attempted.fetch_add(done.attempted, Ordering::SeqCst);
        sh.failed.fetch_add(done.failed, Ordering::SeqCst);
        return Ok(done);
    }

    let img = image::open(&source.image).map_err(|e| Error::Image {
        path: source.image.clone(),
        message: e.to_string(),
    })?;
    let (w, h) = (img.width(), img.height());
    let mut stats = StatsReport::new(sh.table);
    let mut tiles = Vec::new();
    let (mut attempted, mut failed) = (0, 0);
    for tile in plan_tiles(&source.id, w, h, &sh.policy) {
        let t = process_tile(sh, source, &img, &tile)?;
        stats.merge(&t.stats)?;
        attempted += t.attempted;
        failed += t.failed;
        tiles.push(t.record);
    }
    let result = ImageResult {
        config: sh.config.clone(),
        record: ImageRecord {
            id: source.id.clone(),
            file: file_name(&source.image),
            width: w,
            height: h,
            annotation_file: source.annotation.as_deref().map(file_name),
            rejected_annotations: source.parsed.rejected.len() as u64,
        },
        tiles,
        stats,
        attempted,
        failed,
    };
    write_bytes(
        &checkpoint_path(sh.output, &source.id),
        serde_json::to_string(&result)?.as_bytes(),
    )?;
    log::info!(
        "{}: {} tiles, {} instances prompted, {} failed",
        source.id,
        result.tiles.len(),
        attempted,
        failed
    );

    let total_attempted = sh.attempted.fetch_add(attempted, Ordering::SeqCst) + attempted;
    let total_failed = sh.failed.fetch_add(failed, Ordering::SeqCst) + failed;
    if total_attempted >= BUDGET_WARMUP && over_budget(total_failed, total_attempted, sh.recipe.failure_budget) {
        sh.abort.store(true, Ordering::SeqCst);
        return Err(budget_error(sh));
    }
    Ok(result)
}

fn over_budget(failed: u64, attempted: u64, budget: f64) -> bool {
    attempted > 0 && failed as f64 > budget * attempted as f64
}

fn budget_error(sh: &Shared) -> Error {
    Error::FailureBudget {
        failed: sh.failed.load(Ordering::SeqCst),
        attempted: sh.attempted.load(Ordering::SeqCst),
        budget: sh.recipe.failure_budget * 100.0,
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// The configuration recorded in the manifest. Worker count and resume are
/// left out so they cannot change the output bytes.
pub fn snapshot(recipe: &Recipe, backend: &dyn Backend, seed: u64) -> Result<ConfigSnapshot> {
    Ok(ConfigSnapshot {
        recipe: recipe.name.clone(),
        input_format: recipe.input_format,
        tiling: recipe.policy()?,
        edge_tiles: "anchor".into(),
        combo: recipe.combo(),
        allow_rhbox_fallback: recipe.allow_rhbox_fallback,
        mask_grid: recipe.mask_grid,
        magnitude: recipe.magnitude,
        multimask: recipe.multimask,
        selection: SelectionPolicy::HighestScore,
        backend: backend.name(),
        seed,
        failure_budget: recipe.failure_budget,
    })
}

pub fn convert_dataset(
    recipe: &Recipe,
    input: &Path,
    output: &Path,
    backend: Arc<dyn Backend>,
    opts: &ConvertOptions,
    interrupt: &AtomicBool,
) -> Result<ConvertOutcome> {
    recipe.check()?;
    if opts.workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let table = recipe.table()?;
    let sources = load_sources(recipe, &table, input)?;
    check_availability(recipe, &sources)?;
    backend.health()?;

    for dir in ["images", "sem_maps", "instances"] {
        create_dir(&output.join(dir))?;
    }
    let checkpoints = output.join("checkpoints");
    if !opts.resume && checkpoints.exists() {
        std::fs::remove_dir_all(&checkpoints).map_err(|e| Error::io(&checkpoints, e))?;
    }
    create_dir(&checkpoints)?;
    let config = snapshot(recipe, backend.as_ref(), opts.seed)?;
    if opts.resume {
        check_checkpoints(&checkpoints, &config)?;
    }

    let sh = Shared {
        recipe,
        table: &table,
        policy: recipe.policy()?,
        config,
        backend: backend.as_ref(),
        output,
        resume: opts.resume,
        interrupt,
        abort: AtomicBool::new(false),
        attempted: AtomicU64::new(0),
        failed: AtomicU64::new(0),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", opts.workers)))?;
    let results: Vec<Result<ImageResult>> =
        pool.install(|| sources.par_iter().map(|s| process_image(&sh, s)).collect());

    // Report an interruption over the follow-on errors it causes.
    if results.iter().any(|r| matches!(r, Err(Error::Interrupted))) {
        return Err(Error::Interrupted);
    }
    let results: Vec<ImageResult> = results.into_iter().collect::<Result<_>>()?;

    let attempted = results.iter().map(|r| r.attempted).sum();
    let failed = results.iter().map(|r| r.failed).sum();
    if over_budget(failed, attempted, recipe.failure_budget) {
        return Err(Error::FailureBudget {
            failed,
            attempted,
            budget: recipe.failure_budget * 100.0,
        });
    }

    let mut manifest = DatasetManifest::new(table.clone(), sh.config.clone());
    let mut stats = StatsReport::new(&table);
    for r in results {
        stats.merge(&r.stats)?;
        manifest.images.push(r.record);
        manifest.tiles.extend(r.tiles);
    }
    manifest.summary = manifest.tally();

    let manifest_path = output.join("manifest.json");
    write_bytes(&manifest_path, write_manifest(&manifest)?.as_bytes())?;
    let mut stats_json = serde_json::to_string_pretty(&stats)?;
    stats_json.push('\n');
    write_bytes(&output.join("stats.json"), stats_json.as_bytes())?;
    let mut palette_json = serde_json::to_string_pretty(&palette(&table))?;
    palette_json.push('\n');
    write_bytes(&output.join("sem_maps").join("palette.json"), palette_json.as_bytes())?;
    std::fs::remove_dir_all(&checkpoints).map_err(|e| Error::io(&checkpoints, e))?;

    Ok(ConvertOutcome {
        manifest,
        stats,
        manifest_path,
    })
}
