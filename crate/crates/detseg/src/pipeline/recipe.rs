//! Conversion recipes: which parser, tiling, prompts and categories to use.

use std::path::Path;

use detseg_core::prompt::{BasicPrompt, DEFAULT_MAGNITUDE, DEFAULT_MASK_GRID};
use detseg_core::tiling::{SmallImageMode, DEFAULT_RETENTION};
use detseg_core::{CategoryTable, DatasetTag, PromptCombo, PromptConfig, PromptMode, TilingPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};
use crate::formats::InputFormat;

pub const DEFAULT_FAILURE_BUDGET: f64 = 0.05;

fn default_retention() -> f64 {
    DEFAULT_RETENTION
}

fn default_budget() -> f64 {
    DEFAULT_FAILURE_BUDGET
}

fn default_grid() -> [u32; 2] {
    [DEFAULT_MASK_GRID, DEFAULT_MASK_GRID]
}

fn default_magnitude() -> f64 {
    DEFAULT_MAGNITUDE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub name: String,
    pub dataset: DatasetTag,
    pub input_format: InputFormat,
    /// `(name, abbreviation)` pairs; required for custom datasets.
    #[serde(default)]
    pub categories: Option<Vec<(String, String)>>,
    pub tile_size: u32,
    /// Defaults to 824 for 1024-pixel tiles, else the tile size.
    #[serde(default)]
    pub stride: Option<u32>,
    #[serde(default = "default_retention")]
    pub retention: f64,
    #[serde(default)]
    pub small_image: SmallImageMode,
    pub prompt_mode: PromptMode,
    /// Overrides the single box prompt implied by `prompt_mode`.
    #[serde(default)]
    pub combo: Option<PromptCombo>,
    /// Let an H-Box recipe prompt R-Box-only instances with their RH-Box.
    #[serde(default)]
    pub allow_rhbox_fallback: bool,
    #[serde(default = "default_grid")]
    pub mask_grid: [u32; 2],
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    #[serde(default)]
    pub multimask: bool,
    #[serde(default = "default_budget")]
    pub failure_budget: f64,
    #[serde(default)]
    pub backend: Option<String>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Recipe {
    fn pinned(name: &str, dataset: DatasetTag, input_format: InputFormat, tile_size: u32, mode: PromptMode) -> Self {
        Recipe {
            name: name.into(),
            dataset,
            input_format,
            categories: None,
            tile_size,
            stride: None,
            retention: DEFAULT_RETENTION,
            small_image: SmallImageMode::Pad,
            prompt_mode: mode,
            combo: None,
            allow_rhbox_fallback: false,
            mask_grid: default_grid(),
            magnitude: DEFAULT_MAGNITUDE,
            multimask: false,
            failure_budget: DEFAULT_FAILURE_BUDGET,
            backend: None,
            workers: None,
        }
    }

    /// `sota`/`dota`, `sior`/`dior` or `fast`/`fair1m`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sota" | "dota" => Some(Self::pinned("sota", DatasetTag::Sota, InputFormat::Dota, 1024, PromptMode::HBox)),
            "sior" | "dior" => Some(Self::pinned("sior", DatasetTag::Sior, InputFormat::Voc, 800, PromptMode::HBox)),
            "fast" | "fair1m" => Some(Self::pinned("fast", DatasetTag::Fast, InputFormat::Fair1m, 600, PromptMode::RhBox)),
            _ => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        self.dataset != DatasetTag::Custom
    }

    /// A built-in name, or a path to a JSON recipe.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(r) = Self::builtin(name_or_path) {
            return Ok(r);
        }
        let path = Path::new(name_or_path);
        if !path.is_file() {
            return Err(Error::Config(format!(
                "unknown recipe {name_or_path:?}; use sota, sior, fast or a JSON file"
            )));
        }
        let recipe: Recipe = serde_json::from_str(&read_text(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        recipe.check()?;
        Ok(recipe)
    }

    pub fn table(&self) -> Result<CategoryTable> {
        match (&self.categories, CategoryTable::builtin(self.dataset)) {
            (Some(entries), _) => {
                let mut t = CategoryTable::custom(entries)?;
                t.tag = self.dataset;
                Ok(t)
            }
            (None, Some(t)) => Ok(t),
            (None, None) => Err(Error::Config(format!(
                "recipe {} has a custom dataset but no categories",
                self.name
            ))),
        }
    }

    pub fn policy(&self) -> Result<TilingPolicy> {
        let mut p = TilingPolicy::new(
            self.tile_size,
            self.stride.unwrap_or(TilingPolicy::default_stride(self.tile_size)),
            self.retention,
        )?;
        p.small_image = self.small_image;
        Ok(p)
    }

    pub fn combo(&self) -> PromptCombo {
        self.combo.unwrap_or(self.prompt_mode.combo())
    }

    pub fn prompt_config(&self, combo: PromptCombo) -> PromptConfig {
        PromptConfig::new(combo)
            .with_grid(self.mask_grid[0], self.mask_grid[1])
            .with_magnitude(self.magnitude)
    }

    /// Static checks, including the pinned parameters of the built-ins.
    pub fn check(&self) -> Result<()> {
        self.policy()?;
        self.table()?;
        self.prompt_config(self.combo()).check()?;
        if !(0.0..=1.0).contains(&self.failure_budget) {
            return Err(Error::Config(format!(
                "failure budget {} must lie in [0, 1]",
                self.failure_budget
            )));
        }
        let combo = self.combo();
        let uses_hbox = combo.contains(BasicPrompt::HBox) || combo.contains(BasicPrompt::HBoxMask);
        if self.prompt_mode == PromptMode::RhBox && uses_hbox {
            return Err(Error::Config(format!(
                "recipe {} prompts with RH-Boxes; combo {combo} needs H-Boxes",
                self.name
            )));
        }
        if let Some(pinned) = Self::builtin(&self.name).filter(|_| self.is_builtin()) {
            if self.prompt_mode != pinned.prompt_mode {
                return Err(Error::Config(format!(
                    "recipe {} is pinned to {} prompts, refusing {}",
                    self.name, pinned.prompt_mode, self.prompt_mode
                )));
            }
            if self.tile_size != pinned.tile_size {
                return Err(Error::Config(format!(
                    "recipe {} is pinned to {} pixel tiles, refusing {}",
                    self.name, pinned.tile_size, self.tile_size
                )));
            }
        }
        Ok(())
    }

    /// The combo for an instance: R-Box-only instances under an H-Box
    /// recipe swap H-Box members for their RH-Box counterparts.
    pub fn fallback_combo(combo: PromptCombo) -> PromptCombo {
        let swapped: Vec<BasicPrompt> = combo
            .prompts()
            .map(|p| match p {
                BasicPrompt::HBox => BasicPrompt::RhBox,
                BasicPrompt::HBoxMask => BasicPrompt::RhBoxMask,
                other => other,
            })
            .collect();
        PromptCombo::from_prompts(&swapped)
    }
}
