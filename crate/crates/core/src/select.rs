//! Choosing and validating one mask per prompt set.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geometry::{floor_i64, HBox};
use crate::mask::InstanceMask;
use crate::rle::RleMask;

/// One mask proposed by a backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub rle: RleMask,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Highest score, then larger area, then the lexicographically smaller
    /// run list, then lower candidate index.
    #[default]
    HighestScore,
}

fn rank(a: &(usize, &Candidate, u64), b: &(usize, &Candidate, u64)) -> Ordering {
    b.1.score
        .total_cmp(&a.1.score)
        .then(b.2.cmp(&a.2))
        .then_with(|| a.1.rle.counts.cmp(&b.1.rle.counts))
        .then(a.0.cmp(&b.0))
}

/// Pick one candidate; returns its index and the derived instance mask.
pub fn select_mask(
    candidates: &[Candidate],
    policy: SelectionPolicy,
) -> Option<(usize, InstanceMask)> {
    match policy {
        SelectionPolicy::HighestScore => {
            let ranked: Vec<(usize, &Candidate, u64)> = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c, c.rle.area()))
                .collect();
            let best = ranked.into_iter().min_by(rank)?;
            Some((best.0, InstanceMask::from_rle(best.1.rle.clone(), best.1.score)))
        }
    }
}

/// Pixel columns (or rows) a closed interval touches; a zero-width interval
/// still touches the pixel containing it.
fn pixel_span(lo: f64, hi: f64, n: u32) -> Option<(u64, u64)> {
    let first = floor_i64(lo);
    let last = (-floor_i64(-hi) - 1).max(first);
    let first = first.max(0);
    let last = last.min(i64::from(n) - 1);
    (first <= last).then_some((first as u64, last as u64))
}

/// A mask is valid when it is nonempty and some of its pixels overlap the
/// box its prompt was built from.
pub fn validate_mask(mask: &InstanceMask, prompt_box: &HBox, width: u32, height: u32) -> bool {
    if mask.dims() != (width, height) || mask.rle.check().is_err() || mask.rle.area() == 0 {
        return false;
    }
    let (Some((c0, c1)), Some((r0, r1))) = (
        pixel_span(prompt_box.x_min, prompt_box.x_max, width),
        pixel_span(prompt_box.y_min, prompt_box.y_max, height),
    ) else {
        return false;
    };
    let h = u64::from(height);
    mask.rle.one_runs().any(|(start, end)| {
        let first_col = (start / h).max(c0);
        let last_col = ((end - 1) / h).min(c1);
        (first_col..=last_col).any(|c| {
            let lo = start.max(c * h + r0);
            let hi = end.min(c * h + r1 + 1);
            lo < hi
        })
    })
}
