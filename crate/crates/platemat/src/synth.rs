//! Synthetic test scenes: a textured background plate, frames compositing
//! a moving shape over it, and the exact binary truth mattes.
//!
//! Frames derive from the plate by optional whole-plate jitter, a uniform
//! brightness offset, and per-pixel Gaussian noise, mimicking the ways a
//! captured plate goes stale (camera vibration, auto-exposure, sensor
//! noise). The plate itself stays clean; with every perturbation at zero, a
//! frame equals the plate bit for bit outside the shape.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::raster::{AlphaMatte, Image};

/// Foreground silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Square,
    Disk,
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub shape: ShapeKind,
    /// Shape center in pixel coordinates at frame 0.
    pub center: (f64, f64),
    /// Side length (square) or diameter (disk) in pixels.
    pub size: f64,
    /// Center displacement per frame, in pixels.
    pub motion: (f64, f64),
    /// Base foreground color; `None` picks the color-cube corner farthest
    /// from the plate's mean, pulled slightly inward so texture stays in
    /// range.
    pub fg_color: Option<[f64; 3]>,
    /// Amplitude of the surface texture on both the plate and the
    /// foreground. Texture is spatially smooth (interpolated from a coarse
    /// random grid), like a physical surface; per-pixel sensor noise
    /// belongs to `noise_sigma` instead.
    pub texture_amp: f64,
    /// Uniform brightness offset applied to every frame's background.
    pub brightness: f64,
    /// Maximum per-axis whole-plate shift per frame, in pixels.
    pub jitter_px: i64,
    /// Standard deviation of per-pixel Gaussian frame noise.
    pub noise_sigma: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            frames: 1,
            shape: ShapeKind::Square,
            center: (32.0, 32.0),
            size: 24.0,
            motion: (0.0, 0.0),
            fg_color: None,
            texture_amp: 0.1,
            brightness: 0.0,
            jitter_px: 0,
            noise_sigma: 0.0,
        }
    }
}

/// A generated scene: the clean plate, the composited frames, their binary
/// truth mattes, and the per-frame jitter actually applied.
#[derive(Debug, Clone)]
pub struct SynthSequence {
    pub plate: Image,
    pub frames: Vec<Image>,
    pub truths: Vec<AlphaMatte>,
    pub jitters: Vec<(i64, i64)>,
}

fn validate(spec: &SceneSpec) -> Result<()> {
    if spec.width < 3 || spec.height < 3 {
        return Err(Error::ImageTooSmall {
            width: spec.width,
            height: spec.height,
            min: 3,
        });
    }
    if spec.frames == 0 {
        return Err(Error::TooFewFrames { got: 0, need: 1 });
    }
    for (name, value) in [
        ("texture_amp", spec.texture_amp),
        ("noise_sigma", spec.noise_sigma),
        ("size", spec.size),
    ] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                value,
                constraint: "must be nonnegative and finite",
            });
        }
    }
    if spec.jitter_px < 0 {
        return Err(Error::InvalidParameter {
            name: "jitter_px",
            value: spec.jitter_px as f64,
            constraint: "must be nonnegative",
        });
    }
    Ok(())
}

fn truth_at(spec: &SceneSpec, t: usize) -> AlphaMatte {
    let cx = spec.center.0 + spec.motion.0 * t as f64;
    let cy = spec.center.1 + spec.motion.1 * t as f64;
    let half = spec.size / 2.0;
    AlphaMatte::from_fn(spec.width, spec.height, |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        let inside = match spec.shape {
            ShapeKind::Square => (px - cx).abs() <= half && (py - cy).abs() <= half,
            ShapeKind::Disk => {
                let (dx, dy) = (px - cx, py - cy);
                dx * dx + dy * dy <= half * half
            }
        };
        if inside {
            1.0
        } else {
            0.0
        }
    })
}

/// Grid spacing of the value-noise texture, in pixels.
const TEXTURE_CELL: usize = 8;

struct ValueNoise {
    grid: Vec<[f64; 3]>,
    gw: usize,
}

impl ValueNoise {
    fn draw(rng: &mut ChaCha8Rng, w: usize, h: usize, amp: f64) -> Self {
        let gw = w / TEXTURE_CELL + 2;
        let gh = h / TEXTURE_CELL + 2;
        let mut grid = vec![[0.0f64; 3]; gw * gh];
        for node in grid.iter_mut() {
            for c in node.iter_mut() {
                *c = rng.gen_range(-amp..amp);
            }
        }
        Self { grid, gw }
    }

    /// Bilinear interpolation keeps window-sized patches near-affine in
    /// color, the regime local color models are built for.
    fn at(&self, x: usize, y: usize) -> [f64; 3] {
        let (gx, fx) = (x / TEXTURE_CELL, (x % TEXTURE_CELL) as f64 / TEXTURE_CELL as f64);
        let (gy, fy) = (y / TEXTURE_CELL, (y % TEXTURE_CELL) as f64 / TEXTURE_CELL as f64);
        let mut out = [0.0; 3];
        for (c, slot) in out.iter_mut().enumerate() {
            let top = self.grid[gy * self.gw + gx][c] * (1.0 - fx)
                + self.grid[gy * self.gw + gx + 1][c] * fx;
            let bot = self.grid[(gy + 1) * self.gw + gx][c] * (1.0 - fx)
                + self.grid[(gy + 1) * self.gw + gx + 1][c] * fx;
            *slot = top * (1.0 - fy) + bot * fy;
        }
        out
    }
}

/// Generates a scene deterministically from its seed.
pub fn synth_generate(spec: &SceneSpec, seed: u64) -> Result<SynthSequence> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width, spec.height);

    // Plate: a smooth two-tone wash plus smooth surface texture, kept away
    // from the color-cube faces so frame-side perturbations cannot clip.
    let base: [f64; 3] = [
        rng.gen_range(0.3..0.55),
        rng.gen_range(0.3..0.55),
        rng.gen_range(0.3..0.55),
    ];
    let sweep: [f64; 3] = [
        rng.gen_range(-0.08..0.08),
        rng.gen_range(-0.08..0.08),
        rng.gen_range(-0.08..0.08),
    ];
    let phase: (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    let texture = (spec.texture_amp > 0.0)
        .then(|| ValueNoise::draw(&mut rng, w, h, spec.texture_amp));
    let fg_texture = (spec.texture_amp > 0.0)
        .then(|| ValueNoise::draw(&mut rng, w, h, spec.texture_amp));
    let mut plate = Image::from_fn(w, h, |x, y| {
        let u = (x as f64 / w as f64 + phase.0) * std::f64::consts::TAU;
        let v = (y as f64 / h as f64 + phase.1) * std::f64::consts::TAU;
        let wave = 0.5 * (u.sin() + v.cos());
        let tex = texture.as_ref().map_or([0.0; 3], |t| t.at(x, y));
        [
            base[0] + sweep[0] * wave + tex[0],
            base[1] + sweep[1] * wave + tex[1],
            base[2] + sweep[2] * wave + tex[2],
        ]
    });
    for px in plate.data_mut() {
        for c in px.iter_mut() {
            *c = c.clamp(0.0, 1.0);
        }
    }

    let fg = spec.fg_color.unwrap_or_else(|| {
        let mean = plate.mean_color();
        [
            if mean[0] < 0.5 { 0.85 } else { 0.15 },
            if mean[1] < 0.5 { 0.85 } else { 0.15 },
            if mean[2] < 0.5 { 0.85 } else { 0.15 },
        ]
    });

    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("finite sigma"))
    } else {
        None
    };

    let mut frames = Vec::with_capacity(spec.frames);
    let mut truths = Vec::with_capacity(spec.frames);
    let mut jitters = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let jitter = if spec.jitter_px > 0 {
            (
                rng.gen_range(-spec.jitter_px..=spec.jitter_px),
                rng.gen_range(-spec.jitter_px..=spec.jitter_px),
            )
        } else {
            (0, 0)
        };
        let background = if jitter == (0, 0) && spec.brightness == 0.0 {
            plate.clone()
        } else {
            let shifted = plate.shifted(jitter.0, jitter.1);
            Image::from_fn(w, h, |x, y| {
                let p = shifted.pixel(x, y);
                [
                    p[0] + spec.brightness,
                    p[1] + spec.brightness,
                    p[2] + spec.brightness,
                ]
            })
        };
        let truth = truth_at(spec, t);
        let mut frame = Image::from_fn(w, h, |x, y| {
            if truth.get(x, y) >= 0.5 {
                let tex = fg_texture.as_ref().map_or([0.0; 3], |t| t.at(x, y));
                [
                    (fg[0] + tex[0]).clamp(0.0, 1.0),
                    (fg[1] + tex[1]).clamp(0.0, 1.0),
                    (fg[2] + tex[2]).clamp(0.0, 1.0),
                ]
            } else {
                background.pixel(x, y)
            }
        });
        if let Some(dist) = noise {
            for px in frame.data_mut() {
                for c in px.iter_mut() {
                    *c += dist.sample(&mut rng);
                }
            }
        }
        if spec.brightness != 0.0 || noise.is_some() {
            for px in frame.data_mut() {
                for c in px.iter_mut() {
                    *c = c.clamp(0.0, 1.0);
                }
            }
        }
        frames.push(frame);
        truths.push(truth);
        jitters.push(jitter);
    }

    Ok(SynthSequence {
        plate,
        frames,
        truths,
        jitters,
    })
}
