//! Instance-level and pixel-level mean IoU.
//!
//! With `I_i` and `U_i` the intersection and union pixel counts of the
//! `i`-th of `N` instances:
//!
//! * `miou_instance = (1 / N) * sum(I_i / U_i)`
//! * `miou_pixel = sum(I_i) / sum(U_i)`

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::annotation::BoxAvailability;
use crate::error::{Error, Result};
use crate::mask::InstanceMask;
use crate::prompt::{BasicPrompt, PromptCombo, PromptMode};
use crate::rle::intersection_area;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IouSample {
    pub instance_id: String,
    pub intersection: u64,
    pub union: u64,
}

impl IouSample {
    pub fn new(instance_id: impl Into<String>, intersection: u64, union: u64) -> Result<Self> {
        if intersection > union {
            return Err(Error::Config(format!(
                "intersection {intersection} exceeds union {union}"
            )));
        }
        Ok(Self {
            instance_id: instance_id.into(),
            intersection,
            union,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiouResult {
    pub miou_instance: f64,
    pub miou_pixel: f64,
    /// Samples entering both means.
    pub n: usize,
    /// Samples with an empty union, left out of both means.
    pub excluded: usize,
}

pub fn iou_sample(
    instance_id: impl Into<String>,
    pred: &InstanceMask,
    gt: &InstanceMask,
) -> Result<IouSample> {
    let intersection = intersection_area(&pred.rle, &gt.rle)?;
    let union = pred.rle.area() + gt.rle.area() - intersection;
    IouSample::new(instance_id, intersection, union)
}

pub fn miou(samples: &[IouSample]) -> Result<MiouResult> {
    let mut n = 0usize;
    let mut ratio_sum = 0.0;
    let mut i_sum = 0u64;
    let mut u_sum = 0u64;
    for s in samples.iter().filter(|s| s.union > 0) {
        n += 1;
        ratio_sum += s.intersection as f64 / s.union as f64;
        i_sum += s.intersection;
        u_sum += s.union;
    }
    if n == 0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(MiouResult {
        miou_instance: ratio_sum / n as f64,
        miou_pixel: i_sum as f64 / u_sum as f64,
        n,
        excluded: samples.len() - n,
    })
}

/// Use the RH-Box when a dataset only has rotated boxes, otherwise the H-Box.
pub fn choose_prompt_mode(available: BoxAvailability) -> Result<PromptMode> {
    match (available.hbox, available.rbox) {
        (true, _) => Ok(PromptMode::HBox),
        (false, true) => Ok(PromptMode::RhBox),
        (false, false) => Err(Error::Config(
            "no box annotations available to build prompts from".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub combo: PromptCombo,
    /// `None` when no sample had a nonempty union.
    pub result: Option<MiouResult>,
    /// Predictions that failed validation, scored with zero intersection.
    pub invalid: u64,
    /// Instances without any prediction (backend failure or unbuildable
    /// prompt), left out of the means.
    pub failed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub dataset: String,
    pub backend: String,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn new(dataset: impl Into<String>, backend: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            backend: backend.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: AblationRow) -> Result<()> {
        if self.rows.iter().any(|r| r.combo == row.combo) {
            return Err(Error::Config(format!("duplicate combo {}", row.combo)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn row(&self, combo: PromptCombo) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.combo == combo)
    }

    /// Check-mark table with one column per basic prompt followed by the two
    /// metrics in percent.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let widths: Vec<usize> = BasicPrompt::ALL.iter().map(|p| p.label().len()).collect();
        for (p, w) in BasicPrompt::ALL.iter().zip(&widths) {
            let _ = write!(out, "{:^w$}  ", p.label(), w = *w);
        }
        let _ = writeln!(out, "| {:>8}  {:>8}  {:>7}  {:>6}", "mIOU_I", "mIOU_P", "invalid", "failed");
        let rule_len = out.trim_end().chars().count();
        out.extend(core::iter::repeat_n('-', rule_len));
        out.push('\n');
        for row in &self.rows {
            for (p, w) in BasicPrompt::ALL.iter().zip(&widths) {
                let mark = if row.combo.contains(*p) { "x" } else { "" };
                let _ = write!(out, "{:^w$}  ", mark, w = *w);
            }
            match row.result {
                Some(r) => {
                    let _ = write!(
                        out,
                        "| {:>8.2}  {:>8.2}",
                        r.miou_instance * 100.0,
                        r.miou_pixel * 100.0
                    );
                }
                None => {
                    let _ = write!(out, "| {:>8}  {:>8}", "n/a", "n/a");
                }
            }
            let _ = writeln!(out, "  {:>7}  {:>6}", row.invalid, row.failed);
        }
        out
    }
}
