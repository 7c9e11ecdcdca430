//! Parser/writer round trips and manifest serialization.

mod common;

use detseg::formats::dota::{parse_dota, write_dota};
use detseg::formats::fair1m::{parse_fair1m_xml, write_fair1m_xml};
use detseg::formats::manifest::{read_manifest, write_manifest, SCHEMA_VERSION};
use detseg::formats::voc::{parse_voc_xml, write_voc_xml};
use detseg::Error;
use detseg_core::geometry::rbox_to_rhbox;
use detseg_core::{CategoryTable, HBox, InstanceAnnotation, Point, RBox};
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A rotated rectangle, kept when it is a valid quadrilateral.
fn rotated_rect() -> impl Strategy<Value = Option<RBox>> {
    (0.0..2000.0f64, 0.0..2000.0f64, 1.0..300.0f64, 1.0..300.0f64, 0.0..std::f64::consts::PI).prop_map(
        |(cx, cy, w, h, t)| {
            let (s, c) = t.sin_cos();
            let corners = [(-w, -h), (w, -h), (w, h), (-w, h)]
                .map(|(dx, dy)| Point::new(cx + (dx * c - dy * s) / 2.0, cy + (dx * s + dy * c) / 2.0));
            RBox::quad(corners).ok()
        },
    )
}

fn category(table: &CategoryTable) -> impl Strategy<Value = u16> {
    1..=table.len() as u16
}

/// Instances as the DOTA parser produces them, ids by ordinal.
fn dota_instances() -> impl Strategy<Value = Vec<InstanceAnnotation>> {
    prop::collection::vec((category(&CategoryTable::sota()), rotated_rect(), any::<bool>()), 0..12).prop_map(|v| {
        v.into_iter()
            .filter_map(|(c, r, d)| r.map(|r| (c, r, d)))
            .enumerate()
            .map(|(i, (c, r, d))| {
                let hbox = r.is_axis_aligned().then(|| rbox_to_rhbox(&r));
                InstanceAnnotation::new(c, hbox, Some(r), d, i.to_string()).unwrap()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dota_round_trip(instances in dota_instances()) {
        let table = CategoryTable::sota();
        let text = write_dota(&instances, &table).unwrap();
        let parsed = parse_dota(&text, &table, "p.txt").unwrap();
        prop_assert!(parsed.rejected.is_empty());
        prop_assert_eq!(parsed.instances, instances);
    }

    #[test]
    fn voc_round_trip(
        raw in prop::collection::vec(
            (category(&CategoryTable::sior()), 0u32..4000, 0u32..4000, 1u32..500, 1u32..500, any::<bool>(), 0u8..4),
            0..12,
        )
    ) {
        let table = CategoryTable::sior();
        let instances: Vec<InstanceAnnotation> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (c, x, y, w, h, d, frac))| {
                // Quarter-pixel coordinates exercise non-integer output.
                let off = f64::from(frac) * 0.25;
                let b = HBox::new(f64::from(x) + off, f64::from(y), f64::from(x + w), f64::from(y + h) + off).unwrap();
                InstanceAnnotation::new(c, Some(b), None, d, i.to_string()).unwrap()
            })
            .collect();
        let text = write_voc_xml(&instances, &table).unwrap();
        let parsed = parse_voc_xml(&text, &table, "p.xml").unwrap();
        prop_assert_eq!(parsed.instances, instances);
    }

    #[test]
    fn fair1m_round_trip(raw in prop::collection::vec((category(&CategoryTable::fast()), rotated_rect()), 0..12)) {
        let table = CategoryTable::fast();
        let instances: Vec<InstanceAnnotation> = raw
            .into_iter()
            .filter_map(|(c, r)| r.map(|r| (c, r)))
            .enumerate()
            .map(|(i, (c, r))| InstanceAnnotation::new(c, None, Some(r), false, i.to_string()).unwrap())
            .collect();
        let text = write_fair1m_xml(&instances, &table).unwrap();
        let parsed = parse_fair1m_xml(&text, &table, "p.xml").unwrap();
        prop_assert_eq!(parsed.instances, instances);
    }
}

#[test]
fn manifest_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = common::random_manifest(&mut rng);
        let text = write_manifest(&m).unwrap();
        let back = read_manifest(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_manifest(&back).unwrap(), text);
    }
}

#[test]
fn manifest_version_and_fields_are_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let text = write_manifest(&common::random_manifest(&mut rng)).unwrap();
    let newer = text.replacen(
        &format!("\"schema_version\": {SCHEMA_VERSION}"),
        &format!("\"schema_version\": {}", SCHEMA_VERSION + 1),
        1,
    );
    assert!(matches!(read_manifest(&newer), Err(Error::Version { .. })));
    let extra = text.replacen('{', "{\n  \"surprise\": 1,", 1);
    assert!(matches!(read_manifest(&extra), Err(Error::Schema { .. })));
    assert!(read_manifest("{}").is_err());
}
