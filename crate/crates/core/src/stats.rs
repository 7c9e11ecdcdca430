//! Per-category pixel and instance counts and mask-size histograms.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::category::CategoryTable;
use crate::error::{Error, Result};
use crate::mask::SemanticMap;

/// Lower bin edges in pixels; the last bin is open-ended (`[100000, inf)`).
pub const DEFAULT_SIZE_EDGES: [u64; 8] = [0, 100, 500, 1_000, 5_000, 10_000, 50_000, 100_000];

/// Half-open bins `[edges[k], edges[k + 1])` plus a final `[edges[last], inf)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<u64>,
    pub counts: Vec<u64>,
    /// Values below the first edge.
    pub underflow: u64,
}

impl Histogram {
    pub fn new(edges: &[u64]) -> Result<Self> {
        if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidEdges);
        }
        Ok(Self {
            edges: edges.to_vec(),
            counts: vec![0; edges.len()],
            underflow: 0,
        })
    }

    pub fn add(&mut self, value: u64) {
        // index of the last edge <= value
        match self.edges.partition_point(|&e| e <= value) {
            0 => self.underflow += 1,
            k => self.counts[k - 1] += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow
    }

    /// Add another histogram's counts; edges must match.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::InvalidEdges);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        Ok(())
    }
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new(&DEFAULT_SIZE_EDGES).expect("default edges are increasing")
    }
}

pub fn mask_size_histogram(areas: &[u64], edges: &[u64]) -> Result<Histogram> {
    let mut h = Histogram::new(edges)?;
    areas.iter().for_each(|&a| h.add(a));
    Ok(h)
}

/// Dataset profile. Only valid instances enter the instance counts and the
/// size histogram; pixel counts come from the semantic maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub tiles: u64,
    pub category_pixels: BTreeMap<u16, u64>,
    pub category_instances: BTreeMap<u16, u64>,
    pub size_histogram: Histogram,
    pub valid_instances: u64,
    pub invalid_instances: u64,
    pub dropped_by_retention: u64,
    pub backend_failed: u64,
}

impl StatsReport {
    /// All-zero report with one entry per category of `table`.
    pub fn new(table: &CategoryTable) -> Self {
        let zeros: BTreeMap<u16, u64> = table.categories().iter().map(|c| (c.id, 0)).collect();
        Self {
            tiles: 0,
            category_pixels: zeros.clone(),
            category_instances: zeros,
            size_histogram: Histogram::default(),
            valid_instances: 0,
            invalid_instances: 0,
            dropped_by_retention: 0,
            backend_failed: 0,
        }
    }

    pub fn add_semantic_map(&mut self, map: &SemanticMap) {
        self.tiles += 1;
        for (label, n) in map.label_counts() {
            *self.category_pixels.entry(u16::from(label)).or_insert(0) += n;
        }
    }

    pub fn add_valid_instance(&mut self, category: u16, area: u64) {
        self.valid_instances += 1;
        *self.category_instances.entry(category).or_insert(0) += 1;
        self.size_histogram.add(area);
    }

    pub fn merge(&mut self, other: &StatsReport) -> Result<()> {
        self.size_histogram.merge(&other.size_histogram)?;
        self.tiles += other.tiles;
        for (k, v) in &other.category_pixels {
            *self.category_pixels.entry(*k).or_insert(0) += v;
        }
        for (k, v) in &other.category_instances {
            *self.category_instances.entry(*k).or_insert(0) += v;
        }
        self.valid_instances += other.valid_instances;
        self.invalid_instances += other.invalid_instances;
        self.dropped_by_retention += other.dropped_by_retention;
        self.backend_failed += other.backend_failed;
        Ok(())
    }

    pub fn total_pixels(&self) -> u64 {
        self.category_pixels.values().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_edges_bin_small_areas() {
        let h = mask_size_histogram(&[50], &DEFAULT_SIZE_EDGES).unwrap();
        assert_eq!(h.counts[0], 1);
        let h = mask_size_histogram(&[99, 100], &DEFAULT_SIZE_EDGES).unwrap();
        assert_eq!(&h.counts[..2], &[1, 1]);
        let h = mask_size_histogram(&[100_000, 7_000_000], &DEFAULT_SIZE_EDGES).unwrap();
        assert_eq!(h.counts[7], 2);
    }

    #[test]
    fn merging_adds_counts() {
        let table = CategoryTable::custom(&[("ship", "SH"), ("car", "CA")]).unwrap();
        let mut a = StatsReport::new(&table);
        a.add_valid_instance(1, 10);
        let mut b = StatsReport::new(&table);
        b.add_valid_instance(1, 500);
        b.add_valid_instance(2, 50);
        b.backend_failed = 2;
        a.merge(&b).unwrap();
        assert_eq!(a.valid_instances, 3);
        assert_eq!(a.category_instances, BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(&a.size_histogram.counts[..3], &[2, 0, 1]);
        assert_eq!(a.backend_failed, 2);

        let mut odd = StatsReport::new(&table);
        odd.size_histogram = Histogram::new(&[0, 1]).unwrap();
        assert!(a.merge(&odd).is_err());
    }

    #[test]
    fn underflow_and_bad_edges() {
        let h = mask_size_histogram(&[1, 10, 20], &[5, 15]).unwrap();
        assert_eq!((h.underflow, h.counts.clone()), (1, vec![1, 1]));
        assert_eq!(h.total(), 3);
        assert_eq!(mask_size_histogram(&[], &[]), Err(Error::InvalidEdges));
        assert_eq!(mask_size_histogram(&[], &[3, 3]), Err(Error::InvalidEdges));
    }

    #[test]
    fn report_accumulates() {
        let table = CategoryTable::sior();
        let mut r = StatsReport::new(&table);
        assert_eq!(r.category_instances.len(), 20);
        assert_eq!(r.total_pixels(), 0);
        r.add_valid_instance(3, 10);
        r.add_valid_instance(3, 500);
        assert_eq!(r.category_instances[&3], 2);
        assert_eq!(r.size_histogram.counts[0], 1);
        assert_eq!(r.size_histogram.counts[2], 1);
        let mut map = SemanticMap::new(2, 2);
        map.labels = vec![3, 3, 0, 1];
        r.add_semantic_map(&map);
        assert_eq!((r.category_pixels[&3], r.category_pixels[&1], r.tiles), (2, 1, 1));
    }
}
