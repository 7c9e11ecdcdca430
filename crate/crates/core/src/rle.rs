//! Column-major run-length encoding of binary masks.
//!
//! Counts alternate runs of 0s and 1s walking the mask column by column
//! (top to bottom, then left to right). The first run is always a 0-run and
//! may be empty, so an all-ones mask encodes as `[0, h * w]`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HBox;

/// Dense binary mask stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Bitmask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_row_major(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::CorruptRle {
                expected: expected as u64,
                actual: bits.len() as u64,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn as_row_major(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: u32,
    pub width: u32,
    pub counts: Vec<u32>,
}

pub fn rle_encode(mask: &Bitmask) -> RleMask {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..mask.width {
        for y in 0..mask.height {
            let v = mask.get(x, y);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: mask.height,
        width: mask.width,
        counts,
    }
}

pub fn rle_decode(rle: &RleMask) -> Result<Bitmask> {
    rle.check()?;
    let mut mask = Bitmask::new(rle.width, rle.height);
    let h = u64::from(rle.height);
    for (start, end) in rle.one_runs() {
        for idx in start..end {
            let x = (idx / h) as u32;
            let y = (idx % h) as u32;
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}

impl RleMask {
    pub fn pixel_count(&self) -> u64 {
        u64::from(self.height) * u64::from(self.width)
    }

    /// Counts must sum to `height * width`.
    pub fn check(&self) -> Result<()> {
        let actual: u64 = self.counts.iter().map(|&c| u64::from(c)).sum();
        let expected = self.pixel_count();
        if actual != expected {
            return Err(Error::CorruptRle { expected, actual });
        }
        Ok(())
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            height,
            width,
            counts: vec![height * width],
        }
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| u64::from(c)).sum()
    }

    /// Half-open column-major index ranges of the 1-runs.
    pub fn one_runs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += u64::from(c);
            (i % 2 == 1 && c > 0).then_some((start, pos))
        })
    }

    /// Tight pixel-edge box of the 1-region, `None` when empty.
    pub fn bbox(&self) -> Option<HBox> {
        let h = u64::from(self.height);
        if h == 0 {
            return None;
        }
        let mut acc: Option<(u64, u64, u64, u64)> = None;
        for (start, end) in self.one_runs() {
            let last = end - 1;
            let (x0, x1) = (start / h, last / h);
            // A run spanning a column boundary reaches both the last row of
            // its first column and the first row of its last column.
            let (y0, y1) = if x0 == x1 {
                (start % h, last % h)
            } else {
                (0, h - 1)
            };
            acc = Some(match acc {
                None => (x0, y0, x1, y1),
                Some((ax0, ay0, ax1, ay1)) => (ax0.min(x0), ay0.min(y0), ax1.max(x1), ay1.max(y1)),
            });
        }
        acc.map(|(x0, y0, x1, y1)| HBox {
            x_min: x0 as f64,
            y_min: y0 as f64,
            x_max: (x1 + 1) as f64,
            y_max: (y1 + 1) as f64,
        })
    }
}

/// Number of pixels set in both masks, computed on the runs directly.
pub fn intersection_area(a: &RleMask, b: &RleMask) -> Result<u64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch {
            expected: (a.width, a.height),
            actual: (b.width, b.height),
        });
    }
    a.check()?;
    b.check()?;
    let mut ra = a.one_runs().peekable();
    let mut rb = b.one_runs().peekable();
    let mut total = 0u64;
    while let (Some(&(s1, e1)), Some(&(s2, e2))) = (ra.peek(), rb.peek()) {
        let lo = s1.max(s2);
        let hi = e1.min(e2);
        if hi > lo {
            total += hi - lo;
        }
        if e1 <= e2 {
            ra.next();
        } else {
            rb.next();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_and_all_one() {
        let zeros = Bitmask::new(2, 2);
        assert_eq!(rle_encode(&zeros).counts, vec![4]);
        let ones = Bitmask::from_fn(3, 3, |_, _| true);
        assert_eq!(rle_encode(&ones).counts, vec![0, 9]);
    }

    #[test]
    fn column_major_walk() {
        // column-major bits [0, 1, 1, 0] on 2x2: column 0 = (0, 1), column 1 = (1, 0)
        let mut m = Bitmask::new(2, 2);
        m.set(0, 1, true);
        m.set(1, 0, true);
        let rle = rle_encode(&m);
        assert_eq!(rle.counts, vec![1, 2, 1]);
        assert_eq!(rle_decode(&rle).unwrap(), m);
    }

    #[test]
    fn decode_rejects_bad_sum() {
        let rle = RleMask {
            height: 2,
            width: 2,
            counts: vec![1, 2],
        };
        assert_eq!(
            rle_decode(&rle),
            Err(Error::CorruptRle {
                expected: 4,
                actual: 3
            })
        );
    }

    #[test]
    fn bbox_is_tight() {
        let m = Bitmask::from_fn(10, 8, |x, y| (2..5).contains(&x) && (3..7).contains(&y));
        let rle = rle_encode(&m);
        assert_eq!(rle.bbox(), Some(HBox::new(2.0, 3.0, 5.0, 7.0).unwrap()));
        assert_eq!(rle.area(), 12);
        assert_eq!(rle_encode(&Bitmask::new(3, 3)).bbox(), None);
    }

    #[test]
    fn bbox_of_run_wrapping_columns() {
        // Single run from (x=0, y=3) to (x=1, y=0) on a 4-row mask.
        let m = Bitmask::from_fn(3, 4, |x, y| (x == 0 && y == 3) || (x == 1 && y == 0));
        let rle = rle_encode(&m);
        assert_eq!(rle.counts, vec![3, 2, 7]);
        assert_eq!(rle.bbox(), Some(HBox::new(0.0, 0.0, 2.0, 4.0).unwrap()));
    }

    #[test]
    fn run_intersection() {
        let a = rle_encode(&Bitmask::from_fn(6, 5, |x, _| x < 3));
        let b = rle_encode(&Bitmask::from_fn(6, 5, |x, y| x >= 2 && y < 2));
        assert_eq!(intersection_area(&a, &b).unwrap(), 2);
        let c = RleMask::empty(5, 6);
        assert!(matches!(
            intersection_area(&a, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
