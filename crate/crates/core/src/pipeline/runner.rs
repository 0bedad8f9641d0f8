use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::random::flip_applies;
use super::PipelineSpec;
use crate::imagecore::{load_image, save_float_raw, save_image, Depth, ImageBuffer};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlipDecision {
    pub step: usize,
    pub kind: String,
    pub applied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageStatus {
    Ok,
    Failed,
}

/// Outcome for one input image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub id: String,
    pub status: ImageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub flips: Vec<FlipDecision>,
    /// Wall-clock time spent on this image.
    pub ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    /// In input order.
    pub records: Vec<RunRecord>,
    pub workers: usize,
    pub total_ms: f64,
}

impl RunReport {
    pub fn ok_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.status == ImageStatus::Ok)
            .count()
    }

    pub fn failed_count(&self) -> usize {
        self.records.len() - self.ok_count()
    }

    pub fn mean_ms(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.records.iter().map(|r| r.ms).sum::<f64>() / self.records.len() as f64
        }
    }

    /// One JSON object per line. Without `timing` the `ms` field is zeroed,
    /// which makes two runs of the same batch compare equal byte for byte.
    pub fn to_jsonl(&self, timing: bool) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mut r = r.clone();
            if !timing {
                r.ms = 0.0;
            }
            out.push_str(&serde_json::to_string(&r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl(true)).map_err(|e| Error::io(path, e))
    }
}

/// Runs every step on one image, drawing random steps from `(seed, id, step)`.
pub fn apply_pipeline(
    spec: &PipelineSpec,
    id: &str,
    img: &ImageBuffer,
) -> Result<(ImageBuffer, Vec<FlipDecision>)> {
    let mut cur = img.clone();
    let mut flips = Vec::new();
    for (i, step) in spec.steps().iter().enumerate() {
        let apply = match step.probability() {
            Some(p) => {
                let applied = flip_applies(spec.seed(), id, i, p);
                flips.push(FlipDecision {
                    step: i,
                    kind: step.kind().to_string(),
                    applied,
                });
                applied
            }
            None => false,
        };
        debug_assert!(step.probability().is_some() == step.kind().is_random());
        cur = step.apply(&cur, apply)?;
    }
    Ok((cur, flips))
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\', '\0']) {
        return Err(Error::Validation(format!(
            "id '{id}' cannot be used as an output file name"
        )));
    }
    Ok(())
}

fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".fundus-write-probe");
    fs::File::create(&probe)
        .and_then(|mut f| f.write_all(b""))
        .map_err(|e| Error::io(dir, e))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn process_one(
    spec: &PipelineSpec,
    id: &str,
    input: &Path,
    out_dir: &Path,
) -> (Result<PathBuf>, Vec<FlipDecision>) {
    let run = || -> Result<(PathBuf, Vec<FlipDecision>)> {
        check_id(id)?;
        let img = load_image(input)?;
        let (out, flips) = apply_pipeline(spec, id, &img)?;
        let path = match spec.output_depth() {
            Depth::Int8 => {
                let p = out_dir.join(format!("{id}.png"));
                save_image(&out, &p)?;
                p
            }
            Depth::Float => {
                let p = out_dir.join(format!("{id}.f32"));
                save_float_raw(&out, &p)?;
                p
            }
        };
        Ok((path, flips))
    };
    match run() {
        Ok((p, f)) => (Ok(p), f),
        Err(e) => (Err(e), Vec::new()),
    }
}

/// [`run_pipeline_with`] without progress reporting.
pub fn run_pipeline(
    spec: &PipelineSpec,
    inputs: &[(String, PathBuf)],
    out_dir: impl AsRef<Path>,
    workers: usize,
) -> Result<RunReport> {
    run_pipeline_with(spec, inputs, out_dir, workers, &|_, _| {})
}

/// Processes a batch on `workers` threads.
///
/// Per-image failures are recorded and do not stop the batch. Duplicate ids
/// and an unusable output directory are fatal. `progress(done, total)` is
/// called after each image.
pub fn run_pipeline_with(
    spec: &PipelineSpec,
    inputs: &[(String, PathBuf)],
    out_dir: impl AsRef<Path>,
    workers: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<RunReport> {
    let out_dir = out_dir.as_ref();
    if workers == 0 {
        return Err(Error::contract(
            "worker count must be at least 1".to_string(),
        ));
    }
    let mut seen = HashSet::new();
    if let Some((dup, _)) = inputs.iter().find(|(id, _)| !seen.insert(id.as_str())) {
        return Err(Error::Validation(format!("duplicate input id '{dup}'")));
    }
    ensure_writable(out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
    let started = Instant::now();
    let done = AtomicUsize::new(0);
    let total = inputs.len();
    let records = pool.install(|| {
        inputs
            .par_iter()
            .map(|(id, path)| {
                let t0 = Instant::now();
                let (res, flips) = process_one(spec, id, path, out_dir);
                let ms = t0.elapsed().as_secs_f64() * 1e3;
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                match res {
                    Ok(output) => RunRecord {
                        id: id.clone(),
                        status: ImageStatus::Ok,
                        error: None,
                        output: Some(output),
                        flips,
                        ms,
                    },
                    Err(e) => RunRecord {
                        id: id.clone(),
                        status: ImageStatus::Failed,
                        error: Some(e.to_string()),
                        output: None,
                        flips,
                        ms,
                    },
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(RunReport {
        records,
        workers,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}
