use detseg_core::geometry::{HBox, Point, RBox};
use detseg_core::tiling::{crop_annotations, plan_tiles, TilingPolicy};
use detseg_core::InstanceAnnotation;
use proptest::prelude::*;

fn policy() -> impl Strategy<Value = (u32, u32, u32, u32)> {
    (16u32..300).prop_flat_map(|t| (Just(t), 1..=t, 1u32..1200, 1u32..1200))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tiles_cover_every_pixel((t, s, w, h) in policy()) {
        let p = TilingPolicy::new(t, s, 0.5).unwrap();
        let tiles = plan_tiles("img", w, h, &p);
        // The plan is a grid, so coverage per axis implies pixel coverage.
        for (dim, origins, extent) in [
            (w, tiles.iter().filter(|t| t.row == 0).map(|t| t.x).collect::<Vec<_>>(), tiles[0].width),
            (h, tiles.iter().filter(|t| t.col == 0).map(|t| t.y).collect::<Vec<_>>(), tiles[0].height),
        ] {
            let mut hits = vec![0u32; dim as usize];
            for o in origins {
                for i in o..(o + extent).min(dim) {
                    hits[i as usize] += 1;
                }
            }
            prop_assert!(hits.iter().all(|&n| n >= 1));
            if s == t && dim % t == 0 {
                prop_assert!(hits.iter().all(|&n| n == 1));
            }
        }
        prop_assert_eq!(tiles.len(), tiles.iter().filter(|t| t.row == 0).count() * tiles.iter().filter(|t| t.col == 0).count());
        let mut names: Vec<String> = tiles.iter().map(|t| t.name()).collect();
        names.dedup();
        prop_assert_eq!(names.len(), tiles.len());
    }

    #[test]
    fn stride_equal_to_tile_partitions(t in 8u32..200, nx in 1u32..6, ny in 1u32..6) {
        let p = TilingPolicy::new(t, t, 0.5).unwrap();
        let tiles = plan_tiles("img", t * nx, t * ny, &p);
        prop_assert_eq!(tiles.len() as u32, nx * ny);
        let covered: u64 = tiles.iter().map(|t| u64::from(t.width) * u64::from(t.height)).sum();
        prop_assert_eq!(covered, u64::from(t * nx) * u64::from(t * ny));
    }

    #[test]
    fn cropped_boxes_stay_inside_tile(
        (t, s, w, h) in policy(),
        boxes in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.01..0.5f64, 0.01..0.5f64, any::<bool>()), 1..10),
    ) {
        let p = TilingPolicy::new(t, s, 0.5).unwrap();
        let anns: Vec<InstanceAnnotation> = boxes
            .iter()
            .map(|&(fx, fy, fw, fh, rotated)| {
                let (x0, y0) = (fx * f64::from(w), fy * f64::from(h));
                let b = HBox::new(x0, y0, x0 + fw * f64::from(w) + 1.0, y0 + fh * f64::from(h) + 1.0).unwrap();
                if rotated {
                    let c = b.center();
                    let r = RBox::quad([
                        Point::new(c.x, b.y_min),
                        Point::new(b.x_max, c.y),
                        Point::new(c.x, b.y_max),
                        Point::new(b.x_min, c.y),
                    ])
                    .unwrap();
                    InstanceAnnotation::new(1, None, Some(r), false, "r").unwrap()
                } else {
                    InstanceAnnotation::new(1, Some(b), None, false, "h").unwrap()
                }
            })
            .collect();
        let tol = 1e-9;
        for tile in plan_tiles("img", w, h, &p) {
            let out = crop_annotations(&anns, &tile, 0.5);
            let (tw, th) = (f64::from(tile.width), f64::from(tile.height));
            for kept in &out.kept {
                let a = &kept.annotation;
                if let Some(b) = a.hbox {
                    prop_assert!(b.x_min >= -tol && b.y_min >= -tol && b.x_max <= tw + tol && b.y_max <= th + tol);
                }
                if let Some(r) = &a.rbox {
                    prop_assert!(r.vertices().iter().all(|v| v.x >= -tol && v.y >= -tol && v.x <= tw + tol && v.y <= th + tol));
                }
            }
        }
    }
}
