//! In-process stand-ins for a segmentation model.
//!
//! Both derive a region from the prompt set: the box if there is one, else
//! the mask prompt's positive cells mapped back onto pixels, else a square
//! of half-width [`POINT_EXTENT`] around the point. The fill oracle returns
//! that region; the erosion oracle shrinks it.

use detseg_core::mask::{erode, rasterize_region};
use detseg_core::rle::rle_encode;
use detseg_core::select::Candidate;
use detseg_core::{Bitmask, HBox, PromptSet, Shape};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Backend, SegmentRequest, SegmentResponse};
use crate::error::Result;

pub const POINT_EXTENT: f64 = 8.0;
pub const DEFAULT_EROSION_RADIUS: u32 = 1;
pub const EROSION_SCORE: f64 = 0.9;

pub fn prompt_region(p: &PromptSet, width: u32, height: u32) -> Bitmask {
    if let Some(b) = p.bbox {
        return rasterize_region(&Shape::Box(b), width, height);
    }
    if let Some(m) = &p.mask {
        let (gw, gh) = (u64::from(m.width()), u64::from(m.height()));
        let (w, h) = (u64::from(width), u64::from(height));
        // pixel center (x + 0.5) / w * gw, floored
        return Bitmask::from_fn(width, height, |x, y| {
            let col = ((2 * u64::from(x) + 1) * gw / (2 * w)).min(gw - 1);
            let row = ((2 * u64::from(y) + 1) * gh / (2 * h)).min(gh - 1);
            m.positive().get(col as u32, row as u32)
        });
    }
    if let Some(c) = p.point {
        let square = HBox {
            x_min: c.x - POINT_EXTENT,
            y_min: c.y - POINT_EXTENT,
            x_max: c.x + POINT_EXTENT,
            y_max: c.y + POINT_EXTENT,
        };
        return rasterize_region(&Shape::Box(square), width, height);
    }
    Bitmask::new(width, height)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FillOracle;

impl Backend for FillOracle {
    fn name(&self) -> String {
        "oracle:fill".into()
    }

    fn segment(&self, req: &SegmentRequest) -> Result<SegmentResponse> {
        req.check()?;
        let (w, h) = req.dims();
        let results = req
            .prompts
            .iter()
            .map(|p| {
                vec![Candidate {
                    rle: rle_encode(&prompt_region(p, w, h)),
                    score: 1.0,
                }]
            })
            .collect();
        Ok(SegmentResponse {
            id: req.id.clone(),
            results,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ErosionOracle {
    pub radius: u32,
    pub seed: u64,
}

impl ErosionOracle {
    pub fn new(radius: u32, seed: u64) -> Self {
        Self { radius, seed }
    }

    fn rng(&self, request_id: &str, prompt: usize) -> ChaCha8Rng {
        // FNV-1a over (seed, id, prompt index): stable across platforms.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let bytes = self
            .seed
            .to_le_bytes()
            .into_iter()
            .chain(request_id.bytes())
            .chain((prompt as u64).to_le_bytes());
        for b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        ChaCha8Rng::seed_from_u64(h)
    }

    pub fn candidates(&self, region: &Bitmask, multimask: bool, request_id: &str, prompt: usize) -> Vec<Candidate> {
        let mut out = vec![Candidate {
            rle: rle_encode(&erode(region, self.radius)),
            score: EROSION_SCORE,
        }];
        if multimask {
            let extra = self.rng(request_id, prompt).next_u32() % 3;
            for j in 1..=extra {
                out.push(Candidate {
                    rle: rle_encode(&erode(region, self.radius + j)),
                    score: EROSION_SCORE - 0.1 * f64::from(j),
                });
            }
        }
        out
    }
}

impl Backend for ErosionOracle {
    fn name(&self) -> String {
        format!("oracle:erosion:{}", self.radius)
    }

    fn segment(&self, req: &SegmentRequest) -> Result<SegmentResponse> {
        req.check()?;
        let (w, h) = req.dims();
        let results = req
            .prompts
            .iter()
            .enumerate()
            .map(|(i, p)| self.candidates(&prompt_region(p, w, h), req.multimask, &req.id, i))
            .collect();
        Ok(SegmentResponse {
            id: req.id.clone(),
            results,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use detseg_core::prompt::{CenterPoint, MaskPrompt};
    use detseg_core::rle::rle_decode;
    use image::DynamicImage;

    fn boxed(b: [f64; 4]) -> PromptSet {
        PromptSet {
            point: None,
            bbox: Some(HBox::try_from(b).unwrap()),
            mask: None,
            combo_id: "hbox".into(),
        }
    }

    fn request(img: &DynamicImage, prompts: Vec<PromptSet>, multimask: bool) -> SegmentRequest<'_> {
        SegmentRequest {
            id: "t".into(),
            image: img,
            prompts,
            multimask,
        }
    }

    #[test]
    fn fill_returns_box_interior() {
        let img = DynamicImage::new_luma8(20, 20);
        let resp = FillOracle.segment(&request(&img, vec![boxed([2.0, 3.0, 7.0, 5.0])], false)).unwrap();
        assert_eq!(resp.results.len(), 1);
        let c = &resp.results[0][0];
        assert_eq!(c.score, 1.0);
        let expected = Bitmask::from_fn(20, 20, |x, y| (2..7).contains(&x) && (3..5).contains(&y));
        assert_eq!(rle_decode(&c.rle).unwrap(), expected);
    }

    #[test]
    fn erosion_of_9x9_box() {
        let img = DynamicImage::new_luma8(20, 20);
        let oracle = ErosionOracle::new(1, 42);
        let resp = oracle.segment(&request(&img, vec![boxed([0.0, 0.0, 9.0, 9.0])], false)).unwrap();
        let c = &resp.results[0][0];
        assert_eq!(c.score, 0.9);
        let expected = Bitmask::from_fn(20, 20, |x, y| (1..8).contains(&x) && (1..8).contains(&y));
        assert_eq!(rle_decode(&c.rle).unwrap(), expected);
    }

    #[test]
    fn erosion_multimask_depends_only_on_inputs() {
        let img = DynamicImage::new_luma8(40, 40);
        let prompts: Vec<PromptSet> = (0..8).map(|i| boxed([f64::from(i), 2.0, 30.0, 30.0])).collect();
        let a = ErosionOracle::new(1, 7).segment(&request(&img, prompts.clone(), true)).unwrap();
        let b = ErosionOracle::new(1, 7).segment(&request(&img, prompts.clone(), true)).unwrap();
        assert_eq!(a, b);
        assert!(a.results.iter().any(|r| r.len() > 1));
        for r in &a.results {
            assert!(r.windows(2).all(|w| w[0].score > w[1].score));
        }
    }

    #[test]
    fn mask_and_point_regions() {
        let positive = Bitmask::from_fn(4, 4, |x, _| x < 2);
        let p = PromptSet {
            point: None,
            bbox: None,
            mask: Some(MaskPrompt::new(positive, 1000.0).unwrap()),
            combo_id: "hbox-m".into(),
        };
        let region = prompt_region(&p, 8, 8);
        assert_eq!(region, Bitmask::from_fn(8, 8, |x, _| x < 4));

        let p = PromptSet {
            point: Some(CenterPoint { x: 20.0, y: 20.0 }),
            bbox: None,
            mask: None,
            combo_id: "cp".into(),
        };
        // pixel centers 12.5..=27.5
        assert_eq!(prompt_region(&p, 40, 40).count_ones(), 16 * 16);
    }

    #[test]
    fn out_of_tile_prompt_is_rejected() {
        let img = DynamicImage::new_luma8(10, 10);
        assert!(FillOracle.segment(&request(&img, vec![boxed([0.0, 0.0, 11.0, 5.0])], false)).is_err());
    }
}
