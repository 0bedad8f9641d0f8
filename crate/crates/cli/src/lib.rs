//! `fundus` command-line front end.
//!
//! Exit codes: 0 success, 1 validation or contract error (including bad
//! arguments), 2 I/O error.

mod glyphs;
pub mod montage;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fundus_core::dataset::{load_image_list, load_manifest, split_summary, DatasetSchema};
use fundus_core::enhance::{
    ben_enhance, clahe, green_ben, green_clahe, BenParams, ClaheParams, Sigma,
};
use fundus_core::imagecore::{extract_green, load_image, save_image, ImageBuffer};
use fundus_core::metrics::{load_predictions, report_with, Averaging};
use fundus_core::pipeline::{parse_pipeline, run_pipeline_with};
use fundus_core::{Error, Result};

pub use montage::{build_montage, Method};

#[derive(Debug, Parser)]
#[command(
    name = "fundus",
    version,
    about = "Retinal fundus preprocessing and evaluation tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enhance a single image.
    Enhance(EnhanceArgs),
    /// Run a TOML pipeline over every image listed in a manifest.
    Pipeline(PipelineArgs),
    /// Validate a manifest and print its split summary.
    Dataset(DatasetArgs),
    /// Score a predictions CSV.
    Metrics(MetricsArgs),
    /// Tile the original and enhanced versions side by side.
    Montage(MontageArgs),
}

#[derive(Debug, Args)]
struct EnhanceArgs {
    /// green, ben, clahe, greenben or greenclahe
    method: String,
    input: PathBuf,
    output: PathBuf,
    #[command(flatten)]
    params: MethodFlags,
}

#[derive(Debug, Args, Default)]
struct MethodFlags {
    /// Blur sigma for Ben methods: a positive number or "auto".
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    bias: Option<f64>,
    /// CLAHE tile grid as COLSxROWS, e.g. 8x8.
    #[arg(long)]
    tiles: Option<String>,
    /// CLAHE clip limit in multiples of the uniform bin height.
    #[arg(long, allow_hyphen_values = true)]
    clip: Option<f64>,
    /// Write green-channel results as 3-channel images.
    #[arg(long)]
    replicate: bool,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    config: PathBuf,
    manifest: PathBuf,
    out_dir: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "FUNDUS_WORKERS")]
    workers: Option<usize>,
    /// Validate the manifest against a dataset schema before running.
    #[arg(long)]
    schema: Option<String>,
    /// Zero the per-image timings in the report.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    manifest: PathBuf,
    /// messidor, idrid, deepdrid or custom:<dr>[:<dme>]
    #[arg(long)]
    schema: String,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    predictions: PathBuf,
    #[arg(long)]
    schema: String,
    /// macro or micro
    #[arg(long, default_value = "macro")]
    average: String,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MontageArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(required = true)]
    methods: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Enhance(a) => cmd_enhance(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Dataset(a) => cmd_dataset(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Montage(a) => cmd_montage(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Decode { .. } => 2,
        _ => 1,
    }
}

fn parse_tiles(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Validation(format!("tiles must look like 8x8, got '{s}'"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

impl MethodFlags {
    fn ben(&self) -> Result<BenParams> {
        let d = BenParams::default();
        let p = BenParams {
            sigma: self
                .sigma
                .as_deref()
                .map(str::parse::<Sigma>)
                .transpose()?
                .unwrap_or(d.sigma),
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            bias: self.bias.unwrap_or(d.bias),
        };
        p.validate()?;
        Ok(p)
    }

    fn clahe(&self) -> Result<ClaheParams> {
        let d = ClaheParams::default();
        let (tx, ty) = match &self.tiles {
            Some(t) => parse_tiles(t)?,
            None => (d.tiles_x(), d.tiles_y()),
        };
        ClaheParams::new(tx, ty, self.clip.unwrap_or(d.clip_limit()))
    }

    /// Rejects flags that the method would silently ignore.
    fn check_relevant(&self, method: Method) -> Result<()> {
        let ben = self.sigma.is_some()
            || self.alpha.is_some()
            || self.beta.is_some()
            || self.bias.is_some();
        let cl = self.tiles.is_some() || self.clip.is_some();
        let (uses_ben, uses_clahe, uses_rep) = match method {
            Method::Green => (false, false, true),
            Method::Ben => (true, false, false),
            Method::Clahe => (false, true, false),
            Method::GreenBen => (true, false, true),
            Method::GreenClahe => (false, true, true),
        };
        if (ben && !uses_ben) || (cl && !uses_clahe) || (self.replicate && !uses_rep) {
            return Err(Error::Validation(format!(
                "flag not used by method '{}'",
                method.name()
            )));
        }
        Ok(())
    }
}

/// Runs one enhancement method with the given flags.
fn enhance_with(
    method: Method,
    img: &ImageBuffer,
    flags: &MethodFlags,
) -> Result<(ImageBuffer, String)> {
    Ok(match method {
        Method::Green => {
            let g = extract_green(img)?;
            let g = if flags.replicate {
                fundus_core::imagecore::replicate_to_rgb(&g)?
            } else {
                g
            };
            (g, format!("replicate={}", flags.replicate))
        }
        Method::Ben => {
            let p = flags.ben()?;
            (ben_enhance(img, &p)?, ben_summary(&p))
        }
        Method::Clahe => {
            let p = flags.clahe()?;
            (clahe(img, &p)?, clahe_summary(&p))
        }
        Method::GreenBen => {
            let p = flags.ben()?;
            (
                green_ben(img, &p, flags.replicate)?,
                format!("{} replicate={}", ben_summary(&p), flags.replicate),
            )
        }
        Method::GreenClahe => {
            let p = flags.clahe()?;
            (
                green_clahe(img, &p, flags.replicate)?,
                format!("{} replicate={}", clahe_summary(&p), flags.replicate),
            )
        }
    })
}

fn ben_summary(p: &BenParams) -> String {
    format!(
        "sigma={} alpha={} beta={} bias={}",
        p.sigma, p.alpha, p.beta, p.bias
    )
}

fn clahe_summary(p: &ClaheParams) -> String {
    format!(
        "tiles={}x{} clip={}",
        p.tiles_x(),
        p.tiles_y(),
        p.clip_limit()
    )
}

fn cmd_enhance(a: EnhanceArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    a.params.check_relevant(method)?;
    // Surface bad parameters before touching the filesystem.
    match method {
        Method::Ben | Method::GreenBen => drop(a.params.ben()?),
        Method::Clahe | Method::GreenClahe => drop(a.params.clahe()?),
        Method::Green => {}
    }
    let start = Instant::now();
    let img = load_image(&a.input)?;
    let (out, params) = enhance_with(method, &img, &a.params)?;
    save_image(&out, &a.output)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    println!(
        "{} {params} {}x{} {ms:.1} ms",
        method.name(),
        out.width(),
        out.height()
    );
    Ok(())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).map_err(|e| Error::Io {
        path: a.config.clone(),
        source: e,
    })?;
    let spec = parse_pipeline(&text)?;
    let inputs = match &a.schema {
        Some(s) => {
            let schema: DatasetSchema = s.parse()?;
            let dir = a.manifest.parent().unwrap_or(Path::new("")).to_path_buf();
            load_manifest(&a.manifest, &schema)?
                .into_iter()
                .map(|r| {
                    let p = r.resolved_path(&dir);
                    (r.id, p)
                })
                .collect()
        }
        None => load_image_list(&a.manifest)?,
    };
    let workers = a.workers.unwrap_or_else(default_workers);
    let every = (inputs.len() / 10).max(1);
    let progress = move |done: usize, total: usize| {
        if done.is_multiple_of(every) || done == total {
            eprintln!("processed {done}/{total}");
        }
    };
    let report = run_pipeline_with(&spec, &inputs, &a.out_dir, workers, &progress)?;
    let report_path = a.out_dir.join("run_report.jsonl");
    fs::write(&report_path, report.to_jsonl(!a.no_timing)).map_err(|e| Error::Io {
        path: report_path.clone(),
        source: e,
    })?;
    for r in report.records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "failed {}: {}",
            r.id,
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!(
        "{} ok, {} failed, {} workers, {:.1} ms total, report {}",
        report.ok_count(),
        report.failed_count(),
        report.workers,
        report.total_ms,
        report_path.display()
    );
    Ok(())
}

fn cmd_dataset(a: DatasetArgs) -> Result<()> {
    let schema: DatasetSchema = a.schema.parse()?;
    let records = load_manifest(&a.manifest, &schema)?;
    print!("{}", split_summary(&records, &schema));
    Ok(())
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let schema: DatasetSchema = a.schema.parse()?;
    let averaging: Averaging = a.average.parse()?;
    let records = load_predictions(&a.predictions, &schema)?;
    let report = report_with(&records, &schema, averaging)?;
    print!("{report}");
    if let Some(out) = &a.out {
        fs::write(out, report.to_json()).map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn cmd_montage(a: MontageArgs) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<Method>>>()?;
    let img = load_image(&a.input)?;
    let out = build_montage(&img, &methods)?;
    save_image(&out, &a.output)?;
    println!(
        "montage original {} -> {}",
        a.methods.join(" "),
        a.output.display()
    );
    Ok(())
}

/// Applies `method` with its default parameters, as `enhance` does without flags.
pub fn enhance_default(method: Method, img: &ImageBuffer) -> Result<ImageBuffer> {
    enhance_with(method, img, &MethodFlags::default()).map(|(i, _)| i)
}
