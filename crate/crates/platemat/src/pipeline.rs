//! End-to-end extraction: builds the matting, background, and smoothing
//! agents for a frame (or a short volume of frames), runs the consensus
//! iteration, and emits the clamped matte.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::background::{BackgroundAgent, BackgroundPrior};
use crate::config::PipelineConfig;
use crate::consensus::{mace_iterate, AgentOp, EquilibriumReport, StackedState};
use crate::error::{Error, Result};
use crate::io::{load_image, load_matte, save_matte, BitDepth};
use crate::matting::{build_dual_laplacian, DualLayerLaplacian, MattingAgent};
use crate::metrics::{FrameMetrics, MetricReport};
use crate::raster::{AlphaMatte, Image};
use crate::tv::{MatteVolume, TvAgent};

/// Extracts the matte for one frame against its plate.
pub fn extract_frame(
    frame: &Image,
    plate: &Image,
    cfg: &PipelineConfig,
) -> Result<(AlphaMatte, EquilibriumReport)> {
    cfg.validate()?;
    frame.ensure_same_dims(plate)?;
    let prior = BackgroundPrior::build(frame, plate, &cfg.prior_params())?;
    extract_frame_with_prior(frame, plate, &prior, cfg)
}

/// Like [`extract_frame`], but with a caller-supplied prior, so degraded
/// or precomputed priors can be injected.
pub fn extract_frame_with_prior(
    frame: &Image,
    plate: &Image,
    prior: &BackgroundPrior,
    cfg: &PipelineConfig,
) -> Result<(AlphaMatte, EquilibriumReport)> {
    cfg.validate()?;
    frame.ensure_same_dims(plate)?;
    frame.ensure_finite()?;
    plate.ensure_finite()?;
    let (w, h) = frame.dims();
    assert_eq!(prior.r0().dims(), (w, h), "prior must match the frame");

    let lap = build_dual_laplacian(frame, plate, cfg.eta, cfg.eps)?;
    let matting = MattingAgent::new(lap, cfg.lambda1, cfg.kappa, cfg.theta);
    let background = BackgroundAgent::new(prior.r0().clone(), cfg.lambda2, cfg.gamma)?;
    let tv = TvAgent::new(w, h, 1, cfg.spatial_weights(), cfg.lambda3);
    let agents: [&dyn AgentOp; 3] = [&matting, &background, &tv];

    let initial = StackedState::uniform(prior.r0().as_slice().to_vec(), agents.len())?;
    let report = mace_iterate(initial, &agents, &cfg.mace_options())?;
    let matte = AlphaMatte::from_vec(w, h, report.solution.clone()).clamped_unit();
    Ok((matte, report))
}

/// Applies one inner agent per frame slice of a stacked volume.
struct SliceAgent<A> {
    name: &'static str,
    slice_len: usize,
    inner: Vec<A>,
}

impl<A: AgentOp> AgentOp for SliceAgent<A> {
    fn name(&self) -> &str {
        self.name
    }

    fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(input.len(), self.slice_len * self.inner.len());
        let results: Vec<Result<Vec<f64>>> = self
            .inner
            .par_iter()
            .zip(input.par_chunks(self.slice_len))
            .map(|(agent, slice)| agent.apply(slice))
            .collect();
        let mut out = Vec::with_capacity(input.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

fn volume_consensus(
    laps: Vec<DualLayerLaplacian>,
    r0: Vec<f64>,
    width: usize,
    height: usize,
    cfg: &PipelineConfig,
) -> Result<(MatteVolume, EquilibriumReport)> {
    let frames = laps.len();
    let matting = SliceAgent {
        name: "matting",
        slice_len: width * height,
        inner: laps
            .into_iter()
            .map(|lap| MattingAgent::new(lap, cfg.lambda1, cfg.kappa, cfg.theta))
            .collect(),
    };
    let background = BackgroundAgent::from_entries(r0.clone(), cfg.lambda2, cfg.gamma)?;
    let tv = TvAgent::new(width, height, frames, cfg.temporal_weights(), cfg.lambda3);
    let agents: [&dyn AgentOp; 3] = [&matting, &background, &tv];

    let initial = StackedState::uniform(r0, agents.len())?;
    let report = mace_iterate(initial, &agents, &cfg.mace_options())?;
    let volume = MatteVolume::from_vec(width, height, frames, report.solution.clone());
    Ok((volume, report))
}

/// Extracts a short frame volume jointly, coupling the frames through the
/// temporal smoothing term. The returned mattes are clamped; the report
/// covers the whole volume.
pub fn extract_volume(
    frames: &[Image],
    plate: &Image,
    cfg: &PipelineConfig,
) -> Result<(Vec<AlphaMatte>, EquilibriumReport)> {
    let mut priors = Vec::with_capacity(frames.len());
    for frame in frames {
        frame.ensure_same_dims(plate)?;
        priors.push(BackgroundPrior::build(frame, plate, &cfg.prior_params())?);
    }
    extract_volume_with_priors(frames, plate, &priors, cfg)
}

/// Like [`extract_volume`], but with one caller-supplied prior per frame.
pub fn extract_volume_with_priors(
    frames: &[Image],
    plate: &Image,
    priors: &[BackgroundPrior],
    cfg: &PipelineConfig,
) -> Result<(Vec<AlphaMatte>, EquilibriumReport)> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptyBatch);
    }
    assert_eq!(priors.len(), frames.len(), "one prior per frame");
    plate.ensure_finite()?;
    let (w, h) = plate.dims();
    let mut laps = Vec::with_capacity(frames.len());
    let mut r0 = Vec::with_capacity(frames.len() * w * h);
    for (frame, prior) in frames.iter().zip(priors) {
        frame.ensure_same_dims(plate)?;
        frame.ensure_finite()?;
        assert_eq!(prior.r0().dims(), (w, h), "prior must match the frame");
        laps.push(build_dual_laplacian(frame, plate, cfg.eta, cfg.eps)?);
        r0.extend_from_slice(prior.r0().as_slice());
    }
    let (volume, report) = volume_consensus(laps, r0, w, h, cfg)?;
    let mattes = (0..frames.len())
        .map(|t| volume.frame(t).clamped_unit())
        .collect();
    Ok((mattes, report))
}

/// Temporal extraction over a full sequence: each output frame comes from a
/// sliding window of `cfg.temporal_window` frames centered on it (clipped
/// at the ends), solved jointly. Per-frame operators are built once and
/// shared across overlapping windows.
pub fn extract_sequence(
    frames: &[Image],
    plate: &Image,
    cfg: &PipelineConfig,
) -> Result<Vec<AlphaMatte>> {
    cfg.validate()?;
    let total = frames.len();
    let window = cfg.temporal_window;
    if total < window {
        return Err(Error::TooFewFrames {
            got: total,
            need: window,
        });
    }
    plate.ensure_finite()?;
    let (w, h) = plate.dims();
    let mut laps = Vec::with_capacity(total);
    let mut priors = Vec::with_capacity(total);
    for frame in frames {
        frame.ensure_same_dims(plate)?;
        frame.ensure_finite()?;
        laps.push(build_dual_laplacian(frame, plate, cfg.eta, cfg.eps)?);
        priors.push(BackgroundPrior::build(frame, plate, &cfg.prior_params())?);
    }

    let mut cache: HashMap<usize, MatteVolume> = HashMap::new();
    let mut out = Vec::with_capacity(total);
    for i in 0..total {
        let start = i.saturating_sub(window / 2).min(total - window);
        if !cache.contains_key(&start) {
            let window_laps = laps[start..start + window].to_vec();
            let mut r0 = Vec::with_capacity(window * w * h);
            for prior in &priors[start..start + window] {
                r0.extend_from_slice(prior.r0().as_slice());
            }
            let (volume, _) = volume_consensus(window_laps, r0, w, h, cfg)?;
            cache.insert(start, volume);
        }
        out.push(cache[&start].frame(i - start).clamped_unit());
    }
    Ok(out)
}

/// One batch entry: a frame to matte, its plate, where the matte goes, and
/// an optional reference matte for scoring.
#[derive(Debug, Clone)]
pub struct FrameJob {
    pub frame: PathBuf,
    pub plate: PathBuf,
    pub output: PathBuf,
    pub truth: Option<PathBuf>,
}

/// What a batch run produced.
#[derive(Debug)]
pub struct BatchOutcome {
    pub frames_written: usize,
    /// Scores over the jobs that carried a reference matte; `None` if none did.
    pub report: Option<MetricReport>,
}

fn frame_error(index: usize, path: &Path, source: Error) -> Error {
    Error::Frame {
        index,
        path: path.to_path_buf(),
        source: Box::new(source),
    }
}

fn job_label(job: &FrameJob, index: usize) -> String {
    job.frame
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| index.to_string())
}

fn spatial_batch(jobs: &[FrameJob], cfg: &PipelineConfig) -> Result<Vec<AlphaMatte>> {
    let mut plates: HashMap<&Path, Image> = HashMap::new();
    for (index, job) in jobs.iter().enumerate() {
        if !plates.contains_key(job.plate.as_path()) {
            let plate =
                load_image(&job.plate).map_err(|e| frame_error(index, &job.plate, e))?;
            plates.insert(job.plate.as_path(), plate);
        }
    }
    let results: Vec<std::result::Result<AlphaMatte, (usize, Error)>> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| {
            let frame = load_image(&job.frame).map_err(|e| (index, e))?;
            let (matte, _) = extract_frame(&frame, &plates[job.plate.as_path()], cfg)
                .map_err(|e| (index, e))?;
            Ok(matte)
        })
        .collect();
    let mut mattes = Vec::with_capacity(jobs.len());
    for r in results {
        match r {
            Ok(matte) => mattes.push(matte),
            Err((index, e)) => return Err(frame_error(index, &jobs[index].frame, e)),
        }
    }
    Ok(mattes)
}

fn temporal_batch(jobs: &[FrameJob], cfg: &PipelineConfig) -> Result<Vec<AlphaMatte>> {
    let plate_path = &jobs[0].plate;
    for job in jobs {
        if &job.plate != plate_path {
            return Err(Error::MixedPlates {
                expected: plate_path.clone(),
                found: job.plate.clone(),
            });
        }
    }
    let plate = load_image(plate_path).map_err(|e| frame_error(0, plate_path, e))?;
    let mut frames = Vec::with_capacity(jobs.len());
    for (index, job) in jobs.iter().enumerate() {
        frames.push(load_image(&job.frame).map_err(|e| frame_error(index, &job.frame, e))?);
    }
    extract_sequence(&frames, &plate, cfg)
}

/// Runs a batch of extraction jobs. Spatial mode mattes each frame
/// independently (in parallel); temporal mode requires one shared plate and
/// solves sliding windows jointly. Mattes are written as they complete;
/// scores are gathered for jobs that carry a reference.
pub fn run_batch(
    jobs: &[FrameJob],
    cfg: &PipelineConfig,
    temporal: bool,
    depth: BitDepth,
) -> Result<BatchOutcome> {
    cfg.validate()?;
    if jobs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mattes = if temporal {
        temporal_batch(jobs, cfg)?
    } else {
        spatial_batch(jobs, cfg)?
    };

    let mut scored = Vec::new();
    for (index, (job, matte)) in jobs.iter().zip(&mattes).enumerate() {
        save_matte(matte, &job.output, depth).map_err(|e| frame_error(index, &job.output, e))?;
        if let Some(truth_path) = &job.truth {
            let truth = load_matte(truth_path).map_err(|e| frame_error(index, truth_path, e))?;
            scored.push(
                FrameMetrics::evaluate(job_label(job, index), matte, &truth, cfg.contour_tol)
                    .map_err(|e| frame_error(index, &job.frame, e))?,
            );
        }
    }
    let report = if scored.is_empty() {
        None
    } else {
        Some(MetricReport::from_frames(scored)?)
    };
    Ok(BatchOutcome {
        frames_written: mattes.len(),
        report,
    })
}

/// Parses a batch manifest: one job per line as `frame plate output
/// [truth]`, whitespace separated, `#` starting a comment. Relative paths
/// resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<FrameJob>> {
    let resolve = |s: &str| {
        let p = Path::new(s);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut jobs = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(Error::ConfigParse {
                line: index + 1,
                message: format!(
                    "expected `frame plate output [truth]`, got {} fields",
                    fields.len()
                ),
            });
        }
        jobs.push(FrameJob {
            frame: resolve(fields[0]),
            plate: resolve(fields[1]),
            output: resolve(fields[2]),
            truth: fields.get(3).map(|s| resolve(s)),
        });
    }
    if jobs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(jobs)
}

/// Builds jobs from a directory of frames: every `.png`/`.pgm` file, in
/// lexicographic name order, matted against one shared plate. A job picks
/// up a reference matte when a file of the same name exists in `truth_dir`.
pub fn jobs_from_dir(
    frames_dir: &Path,
    plate: &Path,
    out_dir: &Path,
    truth_dir: Option<&Path>,
) -> Result<Vec<FrameJob>> {
    let entries = std::fs::read_dir(frames_dir).map_err(|source| Error::Io {
        path: frames_dir.to_path_buf(),
        source,
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: frames_dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        let lower = name.to_string_lossy().to_ascii_lowercase();
        if lower.ends_with(".png") || lower.ends_with(".pgm") {
            names.push(name);
        }
    }
    names.sort();
    let jobs: Vec<FrameJob> = names
        .into_iter()
        .map(|name| FrameJob {
            frame: frames_dir.join(&name),
            plate: plate.to_path_buf(),
            output: out_dir.join(&name),
            truth: truth_dir.and_then(|dir| {
                let p = dir.join(&name);
                p.exists().then_some(p)
            }),
        })
        .collect();
    if jobs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::BitDepth;

    fn flat_scene(w: usize, h: usize) -> (Image, Image) {
        let plate = Image::from_fn(w, h, |x, y| {
            [
                0.3 + 0.002 * x as f64,
                0.4,
                0.35 + 0.002 * y as f64,
            ]
        });
        (plate.clone(), plate)
    }

    #[test]
    fn unchanged_scene_yields_an_empty_matte() {
        let (frame, plate) = flat_scene(32, 32);
        let cfg = PipelineConfig::default();
        let (matte, report) = extract_frame(&frame, &plate, &cfg).unwrap();
        assert!(matte.mean() <= 0.02, "mean {}", matte.mean());
        assert!(report.iterations_used >= 1);
        for v in matte.as_slice() {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn zeroed_prior_suppresses_detection_entirely() {
        // Even with a visible foreground square, a prior that claims
        // "nothing changed" pins the matte near zero: detection is
        // prior-driven by construction.
        let (mut frame, plate) = flat_scene(24, 24);
        for y in 8..16 {
            for x in 8..16 {
                *frame.pixel_mut(x, y) = [1.0, 0.1, 0.1];
            }
        }
        let cfg = PipelineConfig::default();
        let zero = BackgroundPrior::from_r0(AlphaMatte::constant(24, 24, 0.0));
        let (matte, _) = extract_frame_with_prior(&frame, &plate, &zero, &cfg).unwrap();
        assert!(matte.mean() <= 0.02, "mean {}", matte.mean());
    }

    #[test]
    fn volume_of_identical_frames_stays_consistent() {
        let (frame, plate) = flat_scene(16, 16);
        let frames = vec![frame.clone(), frame];
        let cfg = PipelineConfig::default();
        let (mattes, report) = extract_volume(&frames, &plate, &cfg).unwrap();
        assert_eq!(mattes.len(), 2);
        assert!(report.iterations_used >= 1);
        for (a, b) in mattes[0].as_slice().iter().zip(mattes[1].as_slice()) {
            assert!((a - b).abs() <= 1e-2);
        }
        assert!(mattes[0].mean() <= 0.02);
    }

    #[test]
    fn single_job_batch_matches_direct_extraction() {
        let dir = tempfile::tempdir().unwrap();
        let (frame, plate) = flat_scene(16, 16);
        let frame_path = dir.path().join("frame.png");
        let plate_path = dir.path().join("plate.png");
        let out_path = dir.path().join("matte.png");
        crate::io::save_image(&frame, &frame_path).unwrap();
        crate::io::save_image(&plate, &plate_path).unwrap();

        let cfg = PipelineConfig::default();
        let jobs = vec![FrameJob {
            frame: frame_path.clone(),
            plate: plate_path.clone(),
            output: out_path.clone(),
            truth: None,
        }];
        let outcome = run_batch(&jobs, &cfg, false, BitDepth::Sixteen).unwrap();
        assert_eq!(outcome.frames_written, 1);
        assert!(outcome.report.is_none());

        // The batch goes through 8-bit PNG frames, so compare against a
        // direct extraction of the same decoded images.
        let decoded_frame = load_image(&frame_path).unwrap();
        let decoded_plate = load_image(&plate_path).unwrap();
        let (direct, _) = extract_frame(&decoded_frame, &decoded_plate, &cfg).unwrap();
        let reread = load_matte(&out_path).unwrap();
        for (a, b) in reread.as_slice().iter().zip(direct.as_slice()) {
            assert!((a - b).abs() <= 1.0 / 65535.0 + 1e-12);
        }
    }

    #[test]
    fn batch_with_truth_produces_a_report() {
        let dir = tempfile::tempdir().unwrap();
        let (frame, plate) = flat_scene(16, 16);
        let frame_path = dir.path().join("frame.png");
        let plate_path = dir.path().join("plate.png");
        let truth_path = dir.path().join("truth.png");
        crate::io::save_image(&frame, &frame_path).unwrap();
        crate::io::save_image(&plate, &plate_path).unwrap();
        save_matte(
            &AlphaMatte::constant(16, 16, 0.0),
            &truth_path,
            BitDepth::Eight,
        )
        .unwrap();

        let jobs = vec![FrameJob {
            frame: frame_path,
            plate: plate_path,
            output: dir.path().join("matte.png"),
            truth: Some(truth_path),
        }];
        let outcome = run_batch(&jobs, &PipelineConfig::default(), false, BitDepth::Eight).unwrap();
        let report = outcome.report.unwrap();
        assert_eq!(report.frames.len(), 1);
        assert_eq!(report.frames[0].frame, "frame");
        assert!(report.mae <= 0.02);
    }

    #[test]
    fn temporal_batch_rejects_mixed_plates() {
        let job = |plate: &str| FrameJob {
            frame: PathBuf::from("f.png"),
            plate: PathBuf::from(plate),
            output: PathBuf::from("out.png"),
            truth: None,
        };
        let jobs = vec![job("a.png"), job("b.png")];
        let err = run_batch(&jobs, &PipelineConfig::default(), true, BitDepth::Eight).unwrap_err();
        assert!(matches!(err, Error::MixedPlates { .. }));
    }

    #[test]
    fn sequence_shorter_than_the_window_is_rejected() {
        let (frame, plate) = flat_scene(8, 8);
        let cfg = PipelineConfig::default();
        let err = extract_sequence(&[frame], &plate, &cfg).unwrap_err();
        assert!(matches!(err, Error::TooFewFrames { got: 1, need: 5 }));
    }

    #[test]
    fn manifest_lines_parse_with_comments_and_truths() {
        let base = Path::new("/data");
        let text = "\
# frames for the demo shot
f0.png plate.png out/f0.png gt/f0.png
f1.png plate.png out/f1.png   # no reference yet
";
        let jobs = parse_manifest(text, base).unwrap();
        assert_eq!(jobs.len(), 2);
        assert_eq!(jobs[0].frame, Path::new("/data/f0.png"));
        assert_eq!(jobs[0].truth.as_deref(), Some(Path::new("/data/gt/f0.png")));
        assert_eq!(jobs[1].truth, None);
        assert_eq!(jobs[1].output, Path::new("/data/out/f1.png"));

        let err = parse_manifest("a.png b.png\n", base).unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = parse_manifest("# only comments\n", base).unwrap_err();
        assert!(matches!(err, Error::EmptyBatch));
    }

    #[test]
    fn directory_jobs_come_back_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        let frames = dir.path().join("frames");
        let truths = dir.path().join("truth");
        std::fs::create_dir_all(&frames).unwrap();
        std::fs::create_dir_all(&truths).unwrap();
        for name in ["b.png", "a.png", "c.pgm", "notes.txt"] {
            std::fs::write(frames.join(name), b"x").unwrap();
        }
        std::fs::write(truths.join("a.png"), b"x").unwrap();

        let jobs = jobs_from_dir(
            &frames,
            &dir.path().join("plate.png"),
            &dir.path().join("out"),
            Some(&truths),
        )
        .unwrap();
        let names: Vec<_> = jobs
            .iter()
            .map(|j| j.frame.file_name().unwrap().to_str().unwrap().to_owned())
            .collect();
        assert_eq!(names, ["a.png", "b.png", "c.pgm"]);
        assert!(jobs[0].truth.is_some());
        assert!(jobs[1].truth.is_none());
    }
}
