//! Score prompt combinations against ground-truth instance masks.

use detseg_core::metrics::{iou_sample, miou, AblationReport, AblationRow, IouSample};
use detseg_core::prompt::{build_prompt_set, reference_box, PromptConfig, DEFAULT_MAGNITUDE, DEFAULT_MASK_GRID};
use detseg_core::select::{select_mask, validate_mask, SelectionPolicy};
use detseg_core::PromptCombo;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::gt::{GtImage, GtSet};
use crate::segmenter::{Backend, SegmentRequest};

#[derive(Clone, Debug)]
pub struct AblationOptions {
    pub mask_grid: [u32; 2],
    pub magnitude: f64,
    pub multimask: bool,
    pub workers: usize,
}

impl Default for AblationOptions {
    fn default() -> Self {
        Self {
            mask_grid: [DEFAULT_MASK_GRID, DEFAULT_MASK_GRID],
            magnitude: DEFAULT_MAGNITUDE,
            multimask: false,
            workers: 4,
        }
    }
}

#[derive(Default)]
struct ImageTally {
    samples: Vec<IouSample>,
    invalid: u64,
    failed: u64,
}

fn score_image(img: &GtImage, cfg: &PromptConfig, backend: &dyn Backend, multimask: bool) -> Result<ImageTally> {
    let (w, h) = (img.image.width(), img.image.height());
    let mut tally = ImageTally::default();
    // Indices of instances that got a prompt, in request order.
    let mut prompted = Vec::new();
    let mut prompts = Vec::new();
    for (i, inst) in img.instances.iter().enumerate() {
        match build_prompt_set(&inst.annotation, cfg, w, h) {
            Ok(p) => {
                prompted.push(i);
                prompts.push(p);
            }
            Err(detseg_core::Error::EmptyPrompt) => tally.failed += 1,
            Err(e) => {
                return Err(Error::Config(format!(
                    "{} instance {}: {e}",
                    img.id, inst.annotation.source_instance_id
                )))
            }
        }
    }
    if prompts.is_empty() {
        return Ok(tally);
    }
    let req = SegmentRequest {
        id: format!("{}:{}", img.id, cfg.combo.id()),
        image: &img.image,
        prompts,
        multimask,
    };
    let results = match backend.segment(&req) {
        Ok(resp) if resp.results.len() == prompted.len() => resp.results,
        Ok(_) | Err(_) => {
            log::warn!("{}: backend gave no usable answer", req.id);
            tally.failed += prompted.len() as u64;
            return Ok(tally);
        }
    };
    for (i, candidates) in prompted.into_iter().zip(results) {
        let inst = &img.instances[i];
        let id = inst.annotation.source_instance_id.clone();
        let Some((_, pred)) = select_mask(&candidates, SelectionPolicy::HighestScore) else {
            tally.failed += 1;
            continue;
        };
        let reference = reference_box(&inst.annotation, cfg.combo)?;
        if validate_mask(&pred, &reference, w, h) {
            tally.samples.push(iou_sample(id, &pred, &inst.mask)?);
        } else {
            tally.invalid += 1;
            tally.samples.push(IouSample::new(id, 0, inst.mask.area)?);
        }
    }
    Ok(tally)
}

/// One report row per combo, in the order given. Images are scored in
/// parallel and aggregated in index order.
pub fn run_ablation(
    gt: &GtSet,
    combos: &[PromptCombo],
    backend: &dyn Backend,
    opts: &AblationOptions,
) -> Result<AblationReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start workers: {e}")))?;
    let mut report = AblationReport::new(gt.name.clone(), backend.name());
    for &combo in combos {
        let cfg = PromptConfig::new(combo)
            .with_grid(opts.mask_grid[0], opts.mask_grid[1])
            .with_magnitude(opts.magnitude);
        cfg.check()?;
        let tallies: Vec<ImageTally> = pool.install(|| {
            gt.images
                .par_iter()
                .map(|img| score_image(img, &cfg, backend, opts.multimask))
                .collect::<Result<_>>()
        })?;
        let mut samples = Vec::new();
        let (mut invalid, mut failed) = (0, 0);
        for t in tallies {
            samples.extend(t.samples);
            invalid += t.invalid;
            failed += t.failed;
        }
        let result = match miou(&samples) {
            Ok(r) => Some(r),
            Err(detseg_core::Error::UndefinedMetric) => None,
            Err(e) => return Err(e.into()),
        };
        log::info!("{combo}: {} samples, {invalid} invalid, {failed} failed", samples.len());
        report.push(AblationRow {
            combo,
            result,
            invalid,
            failed,
        })?;
    }
    Ok(report)
}

/// `all` for the fifteen standard rows, else a comma-separated list of
/// combo ids such as `hbox,cp+hbox`.
pub fn parse_combos(s: &str) -> Result<Vec<PromptCombo>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(PromptCombo::ablation_rows());
    }
    let combos = s
        .split(',')
        .map(|c| c.trim().parse::<PromptCombo>().map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    if combos.is_empty() {
        return Err(Error::Config("no combos given".into()));
    }
    Ok(combos)
}
