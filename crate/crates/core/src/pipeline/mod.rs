//! Declarative, seeded preprocessing pipelines.
//!
//! A pipeline is an ordered list of steps plus a seed. Random steps make a
//! Bernoulli draw keyed only by `(seed, image id, step index)`, so a batch
//! gives the same bytes no matter how many workers run it or in what order
//! the images arrive.

mod config;
mod random;
mod runner;

pub use config::parse_pipeline;
pub use random::{flip_applies, flip_draw};
pub use runner::{
    apply_pipeline, run_pipeline, run_pipeline_with, FlipDecision, ImageStatus, RunRecord,
    RunReport,
};

use crate::enhance::{ben_enhance, clahe, green_ben, green_clahe, BenParams, ClaheParams};
use crate::imagecore::{
    extract_green, flip_horizontal, flip_vertical, normalize, replicate_to_rgb, resize_bilinear,
    Depth, ImageBuffer, NormalizationParams,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    Resize,
    RandomHflip,
    RandomVflip,
    Normalize,
    Green,
    Ben,
    Clahe,
    GreenBen,
    GreenClahe,
    ReplicateRgb,
}

impl StepKind {
    pub const ALL: [StepKind; 10] = [
        StepKind::Resize,
        StepKind::RandomHflip,
        StepKind::RandomVflip,
        StepKind::Normalize,
        StepKind::Green,
        StepKind::Ben,
        StepKind::Clahe,
        StepKind::GreenBen,
        StepKind::GreenClahe,
        StepKind::ReplicateRgb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StepKind::Resize => "resize",
            StepKind::RandomHflip => "random_hflip",
            StepKind::RandomVflip => "random_vflip",
            StepKind::Normalize => "normalize",
            StepKind::Green => "green",
            StepKind::Ben => "ben",
            StepKind::Clahe => "clahe",
            StepKind::GreenBen => "green_ben",
            StepKind::GreenClahe => "green_clahe",
            StepKind::ReplicateRgb => "replicate_rgb",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_random(self) -> bool {
        matches!(self, StepKind::RandomHflip | StepKind::RandomVflip)
    }
}

impl std::fmt::Display for StepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Resize {
        width: usize,
        height: usize,
    },
    RandomHflip {
        probability: f64,
    },
    RandomVflip {
        probability: f64,
    },
    Normalize(NormalizationParams),
    Green,
    Ben(BenParams),
    Clahe(ClaheParams),
    GreenBen {
        params: BenParams,
        replicate: bool,
    },
    GreenClahe {
        params: ClaheParams,
        replicate: bool,
    },
    ReplicateRgb,
}

impl Step {
    pub fn kind(&self) -> StepKind {
        match self {
            Step::Resize { .. } => StepKind::Resize,
            Step::RandomHflip { .. } => StepKind::RandomHflip,
            Step::RandomVflip { .. } => StepKind::RandomVflip,
            Step::Normalize(_) => StepKind::Normalize,
            Step::Green => StepKind::Green,
            Step::Ben(_) => StepKind::Ben,
            Step::Clahe(_) => StepKind::Clahe,
            Step::GreenBen { .. } => StepKind::GreenBen,
            Step::GreenClahe { .. } => StepKind::GreenClahe,
            Step::ReplicateRgb => StepKind::ReplicateRgb,
        }
    }

    pub fn probability(&self) -> Option<f64> {
        match self {
            Step::RandomHflip { probability } | Step::RandomVflip { probability } => {
                Some(*probability)
            }
            _ => None,
        }
    }

    /// Applies a deterministic step, or a random step whose draw is `apply`.
    pub(crate) fn apply(&self, img: &ImageBuffer, apply: bool) -> Result<ImageBuffer> {
        match self {
            Step::Resize { width, height } => resize_bilinear(img, *width, *height),
            Step::RandomHflip { .. } if apply => Ok(flip_horizontal(img)),
            Step::RandomVflip { .. } if apply => Ok(flip_vertical(img)),
            Step::RandomHflip { .. } | Step::RandomVflip { .. } => Ok(img.clone()),
            Step::Normalize(p) => normalize(img, p),
            Step::Green => extract_green(img),
            Step::Ben(p) => ben_enhance(img, p),
            Step::Clahe(p) => clahe(img, p),
            Step::GreenBen { params, replicate } => green_ben(img, params, *replicate),
            Step::GreenClahe { params, replicate } => green_clahe(img, params, *replicate),
            Step::ReplicateRgb => replicate_to_rgb(img),
        }
    }
}

/// Validated pipeline: non-empty, at most one `normalize`, and only as the
/// last step.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineSpec {
    steps: Vec<Step>,
    seed: u64,
    output_depth: Depth,
}

impl PipelineSpec {
    /// The output depth follows from whether the pipeline ends in `normalize`.
    pub fn new(steps: Vec<Step>, seed: u64) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Validation("pipeline has no steps".to_string()));
        }
        for (i, s) in steps.iter().enumerate() {
            if s.kind() == StepKind::Normalize && i + 1 != steps.len() {
                return Err(Error::Validation(format!(
                    "step {i} (normalize) must be the last step"
                )));
            }
            if let Some(p) = s.probability() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Validation(format!(
                        "step {i} ({}): probability {p} outside [0, 1]",
                        s.kind()
                    )));
                }
            }
            if let Step::Resize { width, height } = s {
                if *width == 0 || *height == 0 {
                    return Err(Error::Validation(format!(
                        "step {i} (resize): target must be at least 1x1"
                    )));
                }
            }
            if let Step::Ben(p) | Step::GreenBen { params: p, .. } = s {
                p.validate()
                    .map_err(|e| Error::Validation(format!("step {i} ({}): {e}", s.kind())))?;
            }
        }
        let output_depth = if steps.last().map(Step::kind) == Some(StepKind::Normalize) {
            Depth::Float
        } else {
            Depth::Int8
        };
        Ok(PipelineSpec {
            steps,
            seed,
            output_depth,
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn output_depth(&self) -> Depth {
        self.output_depth
    }

    /// Output of the pipeline truncated after `step_index`, with every random
    /// step forced to apply.
    pub fn preview_step(&self, step_index: usize, img: &ImageBuffer) -> Result<ImageBuffer> {
        if step_index >= self.steps.len() {
            return Err(Error::contract(format!(
                "step index {step_index} out of range for {} steps",
                self.steps.len()
            )));
        }
        let mut cur = img.clone();
        for step in &self.steps[..=step_index] {
            cur = step.apply(&cur, true)?;
        }
        Ok(cur)
    }
}

/// Free-function form of [`PipelineSpec::preview_step`].
pub fn preview_step(
    spec: &PipelineSpec,
    step_index: usize,
    img: &ImageBuffer,
) -> Result<ImageBuffer> {
    spec.preview_step(step_index, img)
}
