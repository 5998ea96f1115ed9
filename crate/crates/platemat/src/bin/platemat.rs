//! Command-line front end: single-frame extraction, batch runs, matte
//! scoring, and synthetic scene generation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use platemat::config::PipelineConfig;
use platemat::io::{load_image, load_matte, save_image, save_matte, BitDepth};
use platemat::metrics::{sig6, FrameMetrics, MetricReport};
use platemat::pipeline::{extract_frame, jobs_from_dir, parse_manifest, run_batch};
use platemat::synth::{synth_generate, SceneSpec, ShapeKind};
use platemat::{Error, Result};

/// Foreground matte extraction against a static background plate.
#[derive(Parser)]
#[command(name = "platemat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Extract(ExtractArgs),
    Batch(BatchArgs),
    Eval(EvalArgs),
    Synth(SynthArgs),
}

/// Configuration source shared by the extraction commands. Defaults come
/// first, then the file, then `--set` overrides, in that order.
#[derive(Args)]
struct ConfigArgs {
    /// Configuration file, line-oriented `key = value` with `#` comments.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Single `key=value` override; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        cfg.apply_overrides(&self.set)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_bits(s: &str) -> std::result::Result<BitDepth, String> {
    match s {
        "8" => Ok(BitDepth::Eight),
        "16" => Ok(BitDepth::Sixteen),
        _ => Err(format!("expected 8 or 16, got {s:?}")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got {s:?}"));
    }
    let a = parts[0].trim().parse().map_err(|_| format!("bad number {:?}", parts[0]))?;
    let b = parts[1].trim().parse().map_err(|_| format!("bad number {:?}", parts[1]))?;
    Ok((a, b))
}

fn parse_rgb(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected r,g,b, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| format!("bad number {part:?}"))?;
    }
    Ok(out)
}

/// Extract the matte of one frame against its plate.
#[derive(Args)]
struct ExtractArgs {
    /// Input frame (.png or .pgm).
    frame: PathBuf,

    /// Background plate, same dimensions as the frame.
    plate: PathBuf,

    /// Output matte path.
    out: PathBuf,

    /// Output sample width in bits.
    #[arg(long, value_name = "8|16", default_value = "8", value_parser = parse_bits)]
    bits: BitDepth,

    #[command(flatten)]
    config: ConfigArgs,
}

fn run_extract(args: &ExtractArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let frame = load_image(&args.frame)?;
    let plate = load_image(&args.plate)?;
    let (matte, report) = extract_frame(&frame, &plate, &cfg)?;
    save_matte(&matte, &args.out, args.bits)?;
    let residual = report.residual_history.last().copied().unwrap_or(f64::NAN);
    println!(
        "{}: {} after {} iterations, residual {}",
        args.out.display(),
        if report.converged { "converged" } else { "stopped" },
        report.iterations_used,
        sig6(residual),
    );
    Ok(())
}

/// Matte a set of frames, from a manifest or a frame directory.
#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct BatchArgs {
    /// Job manifest, one `frame plate output [truth]` line per job;
    /// relative paths resolve against the manifest's directory.
    #[arg(long, value_name = "FILE", group = "source")]
    manifest: Option<PathBuf>,

    /// Directory of frames, processed in lexicographic name order.
    #[arg(long, value_name = "DIR", group = "source", requires = "plate", requires = "out_dir")]
    frames: Option<PathBuf>,

    /// Shared plate for directory mode.
    #[arg(long, value_name = "FILE", requires = "frames")]
    plate: Option<PathBuf>,

    /// Output directory for directory mode; created if missing.
    #[arg(long, value_name = "DIR", requires = "frames")]
    out_dir: Option<PathBuf>,

    /// Directory of reference mattes matched by file name; matched frames
    /// are scored.
    #[arg(long, value_name = "DIR", requires = "frames")]
    truth_dir: Option<PathBuf>,

    /// Couple frames through time instead of matting them independently.
    /// Requires one shared plate and at least `temporal_window` frames.
    #[arg(long)]
    temporal: bool,

    /// Metric report destination; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,

    /// Output sample width in bits.
    #[arg(long, value_name = "8|16", default_value = "8", value_parser = parse_bits)]
    bits: BitDepth,

    #[command(flatten)]
    config: ConfigArgs,
}

fn emit_report(report: &MetricReport, dest: Option<&Path>) -> Result<()> {
    match dest {
        Some(path) => std::fs::write(path, report.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{}", report.to_text());
            Ok(())
        }
    }
}

fn run_batch_cmd(args: &BatchArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let jobs = match (&args.manifest, &args.frames) {
        (Some(manifest), _) => {
            let text = std::fs::read_to_string(manifest).map_err(|source| Error::Io {
                path: manifest.clone(),
                source,
            })?;
            let base = manifest
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            parse_manifest(&text, base)?
        }
        (None, Some(frames)) => {
            let out_dir = args.out_dir.as_deref().expect("clap enforces out_dir");
            std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
                path: out_dir.to_path_buf(),
                source,
            })?;
            jobs_from_dir(
                frames,
                args.plate.as_deref().expect("clap enforces plate"),
                out_dir,
                args.truth_dir.as_deref(),
            )?
        }
        (None, None) => unreachable!("clap enforces a job source"),
    };
    let outcome = run_batch(&jobs, &cfg, args.temporal, args.bits)?;
    println!("wrote {} mattes", outcome.frames_written);
    if let Some(report) = &outcome.report {
        emit_report(report, args.report.as_deref())?;
    }
    Ok(())
}

/// Score predicted mattes against reference mattes.
#[derive(Args)]
struct EvalArgs {
    /// Predicted matte, or a directory of them.
    pred: PathBuf,

    /// Reference matte, or a directory matched by file name.
    truth: PathBuf,

    /// Pixel tolerance of the boundary F-measure.
    #[arg(long, value_name = "PX", default_value_t = 2)]
    contour_tol: usize,

    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

fn raster_names(dir: &Path) -> Result<Vec<std::ffi::OsString>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        let lower = name.to_string_lossy().to_ascii_lowercase();
        if lower.ends_with(".png") || lower.ends_with(".pgm") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn missing(path: PathBuf, what: &str) -> Error {
    Error::Io {
        path,
        source: std::io::Error::new(std::io::ErrorKind::NotFound, what.to_string()),
    }
}

fn eval_pairs(pred: &Path, truth: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if pred.is_dir() {
        if !truth.is_dir() {
            return Err(missing(
                truth.to_path_buf(),
                "expected a directory of reference mattes",
            ));
        }
        let names = raster_names(pred)?;
        if names.is_empty() {
            return Err(Error::EmptyBatch);
        }
        names
            .into_iter()
            .map(|name| {
                let truth_path = truth.join(&name);
                if !truth_path.exists() {
                    return Err(missing(truth_path, "no matching reference matte"));
                }
                let label = Path::new(&name)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| name.to_string_lossy().into_owned());
                Ok((label, pred.join(&name), truth_path))
            })
            .collect()
    } else {
        let label = pred
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| pred.display().to_string());
        Ok(vec![(label, pred.to_path_buf(), truth.to_path_buf())])
    }
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let mut scored = Vec::new();
    for (label, pred_path, truth_path) in eval_pairs(&args.pred, &args.truth)? {
        let pred = load_matte(&pred_path)?;
        let truth = load_matte(&truth_path)?;
        scored.push(FrameMetrics::evaluate(label, &pred, &truth, args.contour_tol)?);
    }
    let report = MetricReport::from_frames(scored)?;
    emit_report(&report, args.report.as_deref())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShapeArg {
    Square,
    Disk,
}

/// Generate a synthetic scene: a textured plate, composited frames, and
/// exact truth mattes, reproducible from the seed.
#[derive(Args)]
struct SynthArgs {
    /// Output directory; receives plate.png, frames/NNN.png, truth/NNN.png.
    out_dir: PathBuf,

    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Scene width in pixels.
    #[arg(long, default_value_t = 64)]
    width: usize,

    /// Scene height in pixels.
    #[arg(long, default_value_t = 64)]
    height: usize,

    /// Number of frames.
    #[arg(long, default_value_t = 1)]
    frames: usize,

    /// Foreground silhouette.
    #[arg(long, value_enum, default_value_t = ShapeArg::Square)]
    shape: ShapeArg,

    /// Side length (square) or diameter (disk) in pixels.
    #[arg(long, default_value_t = 24.0)]
    size: f64,

    /// Shape center at frame 0; the image center when omitted.
    #[arg(long, value_name = "X,Y", value_parser = parse_pair)]
    center: Option<(f64, f64)>,

    /// Center displacement per frame, in pixels.
    #[arg(long, value_name = "DX,DY", default_value = "0,0", value_parser = parse_pair)]
    motion: (f64, f64),

    /// Base foreground color in [0,1]; contrasts the plate when omitted.
    #[arg(long, value_name = "R,G,B", value_parser = parse_rgb)]
    fg_color: Option<[f64; 3]>,

    /// Amplitude of the smooth surface texture.
    #[arg(long, default_value_t = 0.1)]
    texture_amp: f64,

    /// Uniform brightness offset on every frame's background.
    #[arg(long, default_value_t = 0.0)]
    brightness: f64,

    /// Maximum per-axis whole-plate shift per frame, in pixels.
    #[arg(long, default_value_t = 0)]
    jitter_px: i64,

    /// Standard deviation of per-pixel frame noise.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        width: args.width,
        height: args.height,
        frames: args.frames,
        shape: match args.shape {
            ShapeArg::Square => ShapeKind::Square,
            ShapeArg::Disk => ShapeKind::Disk,
        },
        center: args
            .center
            .unwrap_or((args.width as f64 / 2.0, args.height as f64 / 2.0)),
        size: args.size,
        motion: args.motion,
        fg_color: args.fg_color,
        texture_amp: args.texture_amp,
        brightness: args.brightness,
        jitter_px: args.jitter_px,
        noise_sigma: args.noise_sigma,
    };
    let scene = synth_generate(&spec, args.seed)?;

    let frames_dir = args.out_dir.join("frames");
    let truth_dir = args.out_dir.join("truth");
    for dir in [&args.out_dir, &frames_dir, &truth_dir] {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
    }
    save_image(&scene.plate, args.out_dir.join("plate.png"))?;
    for (t, (frame, truth)) in scene.frames.iter().zip(&scene.truths).enumerate() {
        save_image(frame, frames_dir.join(format!("{t:03}.png")))?;
        save_matte(truth, truth_dir.join(format!("{t:03}.png")), BitDepth::Eight)?;
    }
    println!(
        "wrote plate and {} frames to {}",
        scene.frames.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract(args) => run_extract(args),
        Command::Batch(args) => run_batch_cmd(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
