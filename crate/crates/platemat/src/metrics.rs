//! Matte quality metrics: soft intersection-over-union, mean absolute
//! error, and a boundary F-measure, plus the per-frame report they roll
//! up into.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::raster::AlphaMatte;

/// Soft intersection-over-union `sum(min) / sum(max)`.
///
/// Inputs are expected in `[0, 1]`. Two identically zero mattes agree
/// perfectly and score 1.
pub fn iou(pred: &AlphaMatte, gt: &AlphaMatte) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    pred.ensure_finite()?;
    gt.ensure_finite()?;
    let mut inter = 0.0;
    let mut union = 0.0;
    for (a, b) in pred.as_slice().iter().zip(gt.as_slice()) {
        inter += a.min(*b);
        union += a.max(*b);
    }
    if union == 0.0 {
        return Ok(1.0);
    }
    Ok(inter / union)
}

/// Mean absolute difference over pixels.
pub fn mae(pred: &AlphaMatte, gt: &AlphaMatte) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    pred.ensure_finite()?;
    gt.ensure_finite()?;
    let n = pred.as_slice().len() as f64;
    let total: f64 = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(total / n)
}

// Boundary map of the mask binarized at 0.5: a foreground pixel whose
// 4-neighborhood leaves the foreground (the image edge counts as outside).
fn boundary(matte: &AlphaMatte) -> Vec<bool> {
    let (w, h) = matte.dims();
    let fg = |x: usize, y: usize| matte.get(x, y) >= 0.5;
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !fg(x, y) {
                continue;
            }
            let on_edge = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            let exposed = on_edge
                || !fg(x - 1, y)
                || !fg(x + 1, y)
                || !fg(x, y - 1)
                || !fg(x, y + 1);
            out[y * w + x] = exposed;
        }
    }
    out
}

// Dilation by the closed disk of radius `tol` pixels.
fn dilate(mask: &[bool], w: usize, h: usize, tol: usize) -> Vec<bool> {
    let r = tol as i64;
    let mut out = vec![false; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !mask[(y * w as i64 + x) as usize] {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy > r * r {
                        continue;
                    }
                    let (xj, yj) = (x + dx, y + dy);
                    if xj >= 0 && yj >= 0 && xj < w as i64 && yj < h as i64 {
                        out[(yj * w as i64 + xj) as usize] = true;
                    }
                }
            }
        }
    }
    out
}

fn matched_fraction(source: &[bool], target_dilated: &[bool]) -> f64 {
    let total = source.iter().filter(|&&b| b).count();
    if total == 0 {
        return 0.0;
    }
    let hit = source
        .iter()
        .zip(target_dilated)
        .filter(|(&s, &t)| s && t)
        .count();
    hit as f64 / total as f64
}

/// Boundary F-measure after binarizing both mattes at 0.5.
///
/// Precision matches predicted boundary pixels against the truth boundary
/// dilated by `tol_px`; recall goes the other way; `F = 2PR / (P + R)`.
/// Two boundary-free masks agree and score 1; if only one side has a
/// boundary the score is 0.
pub fn contour_f(pred: &AlphaMatte, gt: &AlphaMatte, tol_px: usize) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    pred.ensure_finite()?;
    gt.ensure_finite()?;
    let (w, h) = pred.dims();
    let bp = boundary(pred);
    let bg = boundary(gt);
    let pred_has = bp.iter().any(|&b| b);
    let gt_has = bg.iter().any(|&b| b);
    if !pred_has && !gt_has {
        return Ok(1.0);
    }
    let precision = matched_fraction(&bp, &dilate(&bg, w, h, tol_px));
    let recall = matched_fraction(&bg, &dilate(&bp, w, h, tol_px));
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Formats a value with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0.00000".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Metrics of one evaluated frame.
#[derive(Debug, Clone)]
pub struct FrameMetrics {
    pub frame: String,
    pub iou: f64,
    pub mae: f64,
    pub contour_f: f64,
}

impl FrameMetrics {
    pub fn evaluate(frame: impl Into<String>, pred: &AlphaMatte, gt: &AlphaMatte, tol_px: usize) -> Result<Self> {
        Ok(Self {
            frame: frame.into(),
            iou: iou(pred, gt)?,
            mae: mae(pred, gt)?,
            contour_f: contour_f(pred, gt, tol_px)?,
        })
    }
}

/// Aggregate report: per-frame rows plus their means. The structure and
/// temporal-stability slots exist for downstream tooling and stay empty
/// here.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
    pub iou: f64,
    pub mae: f64,
    pub contour_f: f64,
    pub structure: Option<f64>,
    pub temporal_stability: Option<f64>,
}

impl MetricReport {
    pub fn from_frames(frames: Vec<FrameMetrics>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = frames.len() as f64;
        let iou = frames.iter().map(|f| f.iou).sum::<f64>() / n;
        let mae = frames.iter().map(|f| f.mae).sum::<f64>() / n;
        let contour_f = frames.iter().map(|f| f.contour_f).sum::<f64>() / n;
        Ok(Self {
            frames,
            iou,
            mae,
            contour_f,
            structure: None,
            temporal_stability: None,
        })
    }

    /// One line per frame and a final aggregate line.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for f in &self.frames {
            writeln!(
                out,
                "frame {} iou {} mae {} contour_f {}",
                f.frame,
                sig6(f.iou),
                sig6(f.mae),
                sig6(f.contour_f)
            )?;
        }
        writeln!(
            out,
            "aggregate iou {} mae {} contour_f {}",
            sig6(self.iou),
            sig6(self.mae),
            sig6(self.contour_f)
        )
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("utf8 report")
    }
}
