//! TOML pipeline documents.
//!
//! ```toml
//! seed = 2024
//!
//! [[steps]]
//! kind = "green_ben"        # sigma = "auto" | <number>, alpha, beta, bias, replicate
//! replicate = true
//!
//! [[steps]]
//! kind = "resize"
//! width = 224
//! height = 224
//!
//! [[steps]]
//! kind = "random_hflip"
//! probability = 0.5
//!
//! [[steps]]
//! kind = "normalize"        # mean / std default to the ImageNet statistics
//! ```
//!
//! Keys outside the table above, or keys that do not belong to a step's
//! kind, are rejected.

use serde::Deserialize;

use super::{PipelineSpec, Step, StepKind};
use crate::enhance::{BenParams, ClaheParams, Sigma};
use crate::imagecore::NormalizationParams;
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    output_depth: Option<String>,
    steps: Vec<RawStep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    kind: String,
    probability: Option<f64>,
    width: Option<usize>,
    height: Option<usize>,
    mean: Option<Vec<f64>>,
    std: Option<Vec<f64>>,
    sigma: Option<Sigma>,
    alpha: Option<f64>,
    beta: Option<f64>,
    bias: Option<f64>,
    tiles_x: Option<usize>,
    tiles_y: Option<usize>,
    clip_limit: Option<f64>,
    replicate: Option<bool>,
}

impl RawStep {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => {$(if self.$f.is_some() { v.push(stringify!($f)); })*};
        }
        check!(
            probability,
            width,
            height,
            mean,
            std,
            sigma,
            alpha,
            beta,
            bias,
            tiles_x,
            tiles_y,
            clip_limit,
            replicate
        );
        v
    }
}

fn allowed(kind: StepKind) -> &'static [&'static str] {
    match kind {
        StepKind::Resize => &["width", "height"],
        StepKind::RandomHflip | StepKind::RandomVflip => &["probability"],
        StepKind::Normalize => &["mean", "std"],
        StepKind::Green | StepKind::ReplicateRgb => &[],
        StepKind::Ben => &["sigma", "alpha", "beta", "bias"],
        StepKind::Clahe => &["tiles_x", "tiles_y", "clip_limit"],
        StepKind::GreenBen => &["sigma", "alpha", "beta", "bias", "replicate"],
        StepKind::GreenClahe => &["tiles_x", "tiles_y", "clip_limit", "replicate"],
    }
}

fn ben_params(raw: &RawStep) -> BenParams {
    let d = BenParams::default();
    BenParams {
        sigma: raw.sigma.unwrap_or(d.sigma),
        alpha: raw.alpha.unwrap_or(d.alpha),
        beta: raw.beta.unwrap_or(d.beta),
        bias: raw.bias.unwrap_or(d.bias),
    }
}

fn clahe_params(raw: &RawStep) -> Result<ClaheParams> {
    let d = ClaheParams::default();
    ClaheParams::new(
        raw.tiles_x.unwrap_or(d.tiles_x()),
        raw.tiles_y.unwrap_or(d.tiles_y()),
        raw.clip_limit.unwrap_or(d.clip_limit()),
    )
}

fn build_step(index: usize, raw: &RawStep) -> Result<Step> {
    let kind = StepKind::from_name(&raw.kind)
        .ok_or_else(|| Error::Validation(format!("step {index}: unknown kind '{}'", raw.kind)))?;
    let ctx = |msg: String| Error::Validation(format!("step {index} ({kind}): {msg}"));
    let ok = allowed(kind);
    if let Some(bad) = raw.present().into_iter().find(|k| !ok.contains(k)) {
        return Err(ctx(format!("'{bad}' is not a parameter of this step")));
    }
    let step = match kind {
        StepKind::Resize => Step::Resize {
            width: raw.width.ok_or_else(|| ctx("missing 'width'".into()))?,
            height: raw.height.ok_or_else(|| ctx("missing 'height'".into()))?,
        },
        StepKind::RandomHflip => Step::RandomHflip {
            probability: raw.probability.unwrap_or(0.5),
        },
        StepKind::RandomVflip => Step::RandomVflip {
            probability: raw.probability.unwrap_or(0.5),
        },
        StepKind::Normalize => match (&raw.mean, &raw.std) {
            (None, None) => Step::Normalize(NormalizationParams::imagenet()),
            (Some(m), Some(s)) => Step::Normalize(
                NormalizationParams::new(m.clone(), s.clone()).map_err(|e| ctx(e.to_string()))?,
            ),
            _ => return Err(ctx("'mean' and 'std' must be given together".into())),
        },
        StepKind::Green => Step::Green,
        StepKind::ReplicateRgb => Step::ReplicateRgb,
        StepKind::Ben => Step::Ben(ben_params(raw)),
        StepKind::Clahe => Step::Clahe(clahe_params(raw).map_err(|e| ctx(e.to_string()))?),
        StepKind::GreenBen => Step::GreenBen {
            params: ben_params(raw),
            replicate: raw.replicate.unwrap_or(false),
        },
        StepKind::GreenClahe => Step::GreenClahe {
            params: clahe_params(raw).map_err(|e| ctx(e.to_string()))?,
            replicate: raw.replicate.unwrap_or(false),
        },
    };
    Ok(step)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a TOML pipeline document.
pub fn parse_pipeline(text: &str) -> Result<PipelineSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let steps = raw
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| build_step(i, s))
        .collect::<Result<Vec<_>>>()?;
    let spec = PipelineSpec::new(steps, raw.seed)?;
    if let Some(d) = raw.output_depth.as_deref() {
        let want = match d.to_ascii_lowercase().as_str() {
            "int8" => crate::imagecore::Depth::Int8,
            "float" => crate::imagecore::Depth::Float,
            other => {
                return Err(Error::Validation(format!(
                    "output_depth must be int8 or float, got '{other}'"
                )))
            }
        };
        if want != spec.output_depth() {
            return Err(Error::Validation(format!(
                "output_depth '{d}' requires {} normalize step",
                if want == crate::imagecore::Depth::Float {
                    "a final"
                } else {
                    "no"
                }
            )));
        }
    }
    Ok(spec)
}
