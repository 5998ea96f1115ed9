//! Background agent: plate-disagreement prior and its closed-form update.
//!
//! The prior `r0 = r_c * r_e` fuses two views of "how foreground does this
//! pixel look":
//!
//! * `r_c` turns a bilateral-weighted color distance between frame and plate
//!   into a saturating score,
//! * `r_e` measures, per flood-filled superpixel, what fraction of the strong
//!   gradients disagree with the plate's gradients.
//!
//! The agent itself minimizes
//! `(a - r0)^2 + lambda2 (a - z)^2 + gamma a (1 - a)` per pixel, which has
//! the closed form `(2 r0 + 2 lambda2 z - gamma) / (2 + 2 lambda2 - 2 gamma)`.
//! The concave `gamma` term nudges the matte away from indecisive values; it
//! keeps the objective strictly convex as long as `gamma < 1 + lambda2`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::consensus::AgentOp;
use crate::error::{Error, Result};
use crate::raster::{AlphaMatte, Image};

/// Half-width of the bilateral window; 2 gives the 5x5 neighborhood.
const BILATERAL_RADIUS: i64 = 2;

fn color_dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dr = a[0] - b[0];
    let dg = a[1] - b[1];
    let db = a[2] - b[2];
    dr * dr + dg * dg + db * db
}

/// Per-pixel bilateral average of the squared frame/plate color residual.
///
/// Weights combine spatial and range kernels,
/// `exp(-|x_i - x_j|^2 / 2 hs^2) * exp(-|I_i - I_j|^2 / 2 hr^2)`,
/// normalized to sum to one over the in-bounds 5x5 window.
pub fn bilateral_color_distance(image: &Image, plate: &Image, hs: f64, hr: f64) -> Result<AlphaMatte> {
    image.ensure_same_dims(plate)?;
    image.ensure_finite()?;
    plate.ensure_finite()?;
    for (name, value) in [("hs", hs), ("hr", hr)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                value,
                constraint: "must be positive and finite",
            });
        }
    }
    let (w, h) = image.dims();
    let inv_2hs2 = 1.0 / (2.0 * hs * hs);
    let inv_2hr2 = 1.0 / (2.0 * hr * hr);

    let mut out = AlphaMatte::new(w, h);
    out.as_mut_slice()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, slot) in row.iter_mut().enumerate() {
                let ci = image.pixel(x, y);
                let mut weight_sum = 0.0;
                let mut acc = 0.0;
                for dy in -BILATERAL_RADIUS..=BILATERAL_RADIUS {
                    let yj = y as i64 + dy;
                    if yj < 0 || yj >= h as i64 {
                        continue;
                    }
                    for dx in -BILATERAL_RADIUS..=BILATERAL_RADIUS {
                        let xj = x as i64 + dx;
                        if xj < 0 || xj >= w as i64 {
                            continue;
                        }
                        let cj = image.pixel(xj as usize, yj as usize);
                        let pj = plate.pixel(xj as usize, yj as usize);
                        let spatial = (dx * dx + dy * dy) as f64;
                        let weight =
                            (-spatial * inv_2hs2).exp() * (-color_dist2(ci, cj) * inv_2hr2).exp();
                        weight_sum += weight;
                        acc += weight * color_dist2(cj, pj);
                    }
                }
                // The center tap always contributes weight 1.
                *slot = acc / weight_sum;
            }
        });
    Ok(out)
}

/// Saturating color score `1 - exp(-delta^2 / (2 sigma_delta^2))`.
pub fn color_term(delta: &AlphaMatte, sigma_delta: f64) -> Result<AlphaMatte> {
    if !(sigma_delta > 0.0) || !sigma_delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_delta",
            value: sigma_delta,
            constraint: "must be positive and finite",
        });
    }
    let inv = 1.0 / (2.0 * sigma_delta * sigma_delta);
    Ok(AlphaMatte::from_vec(
        delta.width(),
        delta.height(),
        delta
            .as_slice()
            .iter()
            .map(|d| 1.0 - (-d * d * inv).exp())
            .collect(),
    ))
}

/// Segments the frame into superpixels by seeded flood fill.
///
/// Scanning row-major, every unlabeled pixel seeds a 4-connected BFS that
/// absorbs neighbors whose color lies within `flood_tol` of the *seed*
/// (not of the neighbor reached through), so a slow color ramp breaks into
/// bands instead of merging end to end. Labels are dense from zero in seed
/// order.
pub fn flood_fill_superpixels(image: &Image, flood_tol: f64) -> Result<Vec<usize>> {
    if !(flood_tol >= 0.0) || !flood_tol.is_finite() {
        return Err(Error::InvalidParameter {
            name: "flood_tol",
            value: flood_tol,
            constraint: "must be nonnegative and finite",
        });
    }
    image.ensure_finite()?;
    let (w, h) = image.dims();
    let tol2 = flood_tol * flood_tol;
    let mut labels = vec![usize::MAX; w * h];
    let mut next_label = 0;
    let mut queue = VecDeque::new();
    for seed in 0..w * h {
        if labels[seed] != usize::MAX {
            continue;
        }
        let seed_color = image.pixel(seed % w, seed / w);
        labels[seed] = next_label;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let neighbors = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ];
            for j in neighbors.into_iter().flatten() {
                if labels[j] == usize::MAX
                    && color_dist2(image.pixel(j % w, j / w), seed_color) <= tol2
                {
                    labels[j] = next_label;
                    queue.push_back(j);
                }
            }
        }
        next_label += 1;
    }
    Ok(labels)
}

/// Forward-difference color gradients with replicate padding, so the last
/// row/column carries zero gradient.
#[derive(Debug, Clone)]
pub struct GradientField {
    gx: Vec<[f64; 3]>,
    gy: Vec<[f64; 3]>,
}

impl GradientField {
    pub fn of(image: &Image) -> GradientField {
        let (w, h) = image.dims();
        let mut gx = vec![[0.0; 3]; w * h];
        let mut gy = vec![[0.0; 3]; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let here = image.pixel(x, y);
                if x + 1 < w {
                    let right = image.pixel(x + 1, y);
                    for c in 0..3 {
                        gx[i][c] = right[c] - here[c];
                    }
                }
                if y + 1 < h {
                    let below = image.pixel(x, y + 1);
                    for c in 0..3 {
                        gy[i][c] = below[c] - here[c];
                    }
                }
            }
        }
        GradientField { gx, gy }
    }

    /// Euclidean norm of the six gradient components at pixel `i`.
    pub fn magnitude(&self, i: usize) -> f64 {
        let s: f64 = self.gx[i].iter().chain(self.gy[i].iter()).map(|g| g * g).sum();
        s.sqrt()
    }

    /// Euclidean distance between this field and `other` at pixel `i`.
    pub fn distance(&self, other: &GradientField, i: usize) -> f64 {
        let mut s = 0.0;
        for c in 0..3 {
            let dx = self.gx[i][c] - other.gx[i][c];
            let dy = self.gy[i][c] - other.gy[i][c];
            s += dx * dx + dy * dy;
        }
        s.sqrt()
    }
}

/// Per-superpixel fraction of strong gradients that disagree with the plate.
///
/// A pixel is *active* when its stronger gradient magnitude exceeds `tau_a`;
/// an active pixel *disagrees* when the gradient distance between frame and
/// plate exceeds `tau_theta`. Superpixels with no active pixel score zero.
pub fn edge_term(
    image: &Image,
    plate: &Image,
    labels: &[usize],
    tau_a: f64,
    tau_theta: f64,
) -> Result<AlphaMatte> {
    image.ensure_same_dims(plate)?;
    let (w, h) = image.dims();
    let gi = GradientField::of(image);
    let gp = GradientField::of(plate);
    let regions = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut active = vec![0u32; regions];
    let mut disagree = vec![0u32; regions];
    for i in 0..w * h {
        let a = gi.magnitude(i).max(gp.magnitude(i));
        if a > tau_a {
            active[labels[i]] += 1;
            if gi.distance(&gp, i) > tau_theta {
                disagree[labels[i]] += 1;
            }
        }
    }
    let score: Vec<f64> = active
        .iter()
        .zip(&disagree)
        .map(|(&a, &d)| if a == 0 { 0.0 } else { f64::from(d) / f64::from(a) })
        .collect();
    Ok(AlphaMatte::from_vec(
        w,
        h,
        labels.iter().map(|&l| score[l]).collect(),
    ))
}

/// Parameters of the plate-disagreement prior.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundPriorParams {
    pub hs: f64,
    pub hr: f64,
    pub sigma_delta: f64,
    pub flood_tol: f64,
    pub tau_a: f64,
    pub tau_theta: f64,
}

impl Default for BackgroundPriorParams {
    fn default() -> Self {
        Self {
            hs: 5.0,
            hr: 5.0,
            sigma_delta: 10.0,
            flood_tol: 0.05,
            tau_a: 0.01,
            tau_theta: 0.02,
        }
    }
}

/// The fused prior and the intermediate maps it was built from.
#[derive(Debug, Clone)]
pub struct BackgroundPrior {
    r0: AlphaMatte,
    color: AlphaMatte,
    edge: AlphaMatte,
    labels: Vec<usize>,
}

impl BackgroundPrior {
    /// Wraps a caller-supplied prior map directly, bypassing the color and
    /// edge analysis. Useful for injecting degraded priors in robustness
    /// experiments.
    pub fn from_r0(r0: AlphaMatte) -> Self {
        let labels = vec![0; r0.as_slice().len()];
        Self {
            color: r0.clone(),
            edge: AlphaMatte::constant(r0.width(), r0.height(), 1.0),
            labels,
            r0,
        }
    }

    pub fn build(image: &Image, plate: &Image, params: &BackgroundPriorParams) -> Result<BackgroundPrior> {
        let delta = bilateral_color_distance(image, plate, params.hs, params.hr)?;
        let color = color_term(&delta, params.sigma_delta)?;
        let labels = flood_fill_superpixels(image, params.flood_tol)?;
        let edge = edge_term(image, plate, &labels, params.tau_a, params.tau_theta)?;
        let r0 = AlphaMatte::from_vec(
            image.width(),
            image.height(),
            color
                .as_slice()
                .iter()
                .zip(edge.as_slice())
                .map(|(c, e)| c * e)
                .collect(),
        );
        Ok(BackgroundPrior {
            r0,
            color,
            edge,
            labels,
        })
    }

    pub fn r0(&self) -> &AlphaMatte {
        &self.r0
    }

    pub fn color(&self) -> &AlphaMatte {
        &self.color
    }

    pub fn edge(&self) -> &AlphaMatte {
        &self.edge
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

fn check_agent_params(lambda2: f64, gamma: f64) -> Result<()> {
    if !(lambda2 >= 0.0) || !lambda2.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda2",
            value: lambda2,
            constraint: "must be nonnegative and finite",
        });
    }
    if !(gamma >= 0.0) || !(gamma < 1.0 + lambda2) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            constraint: "must lie in [0, 1 + lambda2)",
        });
    }
    Ok(())
}

/// Closed-form background update
/// `(2 r0 + 2 lambda2 z - gamma) / (2 + 2 lambda2 - 2 gamma)` per pixel.
pub fn background_agent_eval(
    z: &AlphaMatte,
    r0: &AlphaMatte,
    lambda2: f64,
    gamma: f64,
) -> Result<AlphaMatte> {
    z.ensure_same_dims(r0)?;
    z.ensure_finite()?;
    check_agent_params(lambda2, gamma)?;
    let denom = 2.0 + 2.0 * lambda2 - 2.0 * gamma;
    Ok(AlphaMatte::from_vec(
        z.width(),
        z.height(),
        z.as_slice()
            .iter()
            .zip(r0.as_slice())
            .map(|(zi, ri)| (2.0 * ri + 2.0 * lambda2 * zi - gamma) / denom)
            .collect(),
    ))
}

/// The background agent as a consensus participant. Holds raw prior
/// entries so it works unchanged over a single frame or a stacked volume.
pub struct BackgroundAgent {
    r0: Vec<f64>,
    lambda2: f64,
    gamma: f64,
}

impl BackgroundAgent {
    pub fn new(r0: AlphaMatte, lambda2: f64, gamma: f64) -> Result<Self> {
        Self::from_entries(r0.into_vec(), lambda2, gamma)
    }

    /// Builds the agent over raw prior entries, e.g. concatenated frames.
    pub fn from_entries(r0: Vec<f64>, lambda2: f64, gamma: f64) -> Result<Self> {
        check_agent_params(lambda2, gamma)?;
        Ok(Self { r0, lambda2, gamma })
    }
}

impl AgentOp for BackgroundAgent {
    fn name(&self) -> &str {
        "background"
    }

    fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(input.len(), self.r0.len());
        if let Some(index) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let denom = 2.0 + 2.0 * self.lambda2 - 2.0 * self.gamma;
        Ok(input
            .iter()
            .zip(&self.r0)
            .map(|(zi, ri)| (2.0 * ri + 2.0 * self.lambda2 * zi - self.gamma) / denom)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::check_firm_nonexpansiveness;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |_, _| {
            [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            ]
        })
    }

    /// Oracle: golden-section minimization of the per-pixel objective
    /// `(a - r0)^2 + lambda2 (a - z)^2 + gamma a (1 - a)`.
    fn golden_section_argmin(r0: f64, z: f64, lambda2: f64, gamma: f64) -> f64 {
        let f = |a: f64| (a - r0).powi(2) + lambda2 * (a - z).powi(2) + gamma * a * (1.0 - a);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-20.0, 20.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..200 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn closed_form_matches_golden_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        for _ in 0..50 {
            let r0 = rng.gen_range(0.0..1.0);
            let z = rng.gen_range(-0.5..1.5);
            let lambda2 = rng.gen_range(0.1..5.0);
            let gamma = rng.gen_range(0.0..1.0);
            let zm = AlphaMatte::from_vec(1, 1, vec![z]);
            let rm = AlphaMatte::from_vec(1, 1, vec![r0]);
            let got = background_agent_eval(&zm, &rm, lambda2, gamma).unwrap().as_slice()[0];
            let want = golden_section_argmin(r0, z, lambda2, gamma);
            assert!(
                (got - want).abs() <= 1e-8,
                "r0={r0} z={z} l2={lambda2} g={gamma}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn closed_form_frozen_values() {
        // Saturated prior and estimate overshoot 1 slightly: 5.95 / 5.9.
        let z = AlphaMatte::from_vec(1, 1, vec![1.0]);
        let r0 = AlphaMatte::from_vec(1, 1, vec![1.0]);
        let got = background_agent_eval(&z, &r0, 2.0, 0.05).unwrap().as_slice()[0];
        assert!((got - 5.95 / 5.9).abs() < 1e-15);
        assert!(got > 1.0, "the update is allowed to overshoot [0, 1]");
    }

    #[test]
    fn agent_slope_is_firmly_nonexpansive() {
        let r0 = AlphaMatte::from_vec(4, 4, (0..16).map(|i| i as f64 / 16.0).collect());
        let agent = BackgroundAgent::new(r0, 2.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(203);
        let slack = check_firm_nonexpansiveness(
            &agent,
            move || (0..16).map(|_| rng.gen_range(-1.0..2.0)).collect(),
            50,
        )
        .unwrap();
        assert!(slack <= 1e-12, "slack {slack}");
    }

    #[test]
    fn agent_param_validation() {
        let z = AlphaMatte::from_vec(1, 1, vec![0.5]);
        let r0 = AlphaMatte::from_vec(1, 1, vec![0.5]);
        assert!(matches!(
            background_agent_eval(&z, &r0, 2.0, 3.0),
            Err(Error::InvalidParameter { name: "gamma", .. })
        ));
        assert!(matches!(
            background_agent_eval(&z, &r0, -1.0, 0.05),
            Err(Error::InvalidParameter { name: "lambda2", .. })
        ));
        // gamma may exceed 1 when lambda2 backs it up.
        assert!(background_agent_eval(&z, &r0, 2.0, 1.5).is_ok());
    }

    #[test]
    fn bilateral_with_huge_bandwidths_is_a_box_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(211);
        let image = random_image(&mut rng, 7, 7);
        let plate = random_image(&mut rng, 7, 7);
        let delta = bilateral_color_distance(&image, &plate, 1e6, 1e6).unwrap();
        let (w, h) = (7i64, 7i64);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                let mut n = 0.0;
                for dy in -2..=2i64 {
                    for dx in -2..=2i64 {
                        let (xj, yj) = (x + dx, y + dy);
                        if xj < 0 || yj < 0 || xj >= w || yj >= h {
                            continue;
                        }
                        acc += color_dist2(
                            image.pixel(xj as usize, yj as usize),
                            plate.pixel(xj as usize, yj as usize),
                        );
                        n += 1.0;
                    }
                }
                let want = acc / n;
                let got = delta.get(x as usize, y as usize);
                assert!((got - want).abs() <= 1e-9, "({x},{y}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn bilateral_with_vanishing_spatial_bandwidth_keeps_the_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(223);
        let image = random_image(&mut rng, 6, 5);
        let plate = random_image(&mut rng, 6, 5);
        let delta = bilateral_color_distance(&image, &plate, 1e-3, 5.0).unwrap();
        for y in 0..5 {
            for x in 0..6 {
                let want = color_dist2(image.pixel(x, y), plate.pixel(x, y));
                assert!((delta.get(x, y) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn color_term_frozen_value() {
        // delta equal to sigma_delta scores 1 - e^{-1/2}.
        let delta = AlphaMatte::from_vec(1, 1, vec![10.0]);
        let r = color_term(&delta, 10.0).unwrap();
        assert!((r.as_slice()[0] - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        // Identical frame and plate score zero.
        let zero = AlphaMatte::from_vec(1, 1, vec![0.0]);
        assert_eq!(color_term(&zero, 10.0).unwrap().as_slice()[0], 0.0);
    }

    #[test]
    fn flood_fill_checkerboard_isolates_every_pixel() {
        let image = Image::from_fn(4, 4, |x, y| {
            if (x + y) % 2 == 0 {
                [0.0, 0.0, 0.0]
            } else {
                [1.0, 1.0, 1.0]
            }
        });
        let labels = flood_fill_superpixels(&image, 0.05).unwrap();
        assert_eq!(labels, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn flood_fill_half_planes() {
        let image = Image::from_fn(6, 4, |x, _| {
            if x < 3 {
                [0.2, 0.2, 0.2]
            } else {
                [0.8, 0.8, 0.8]
            }
        });
        let labels = flood_fill_superpixels(&image, 0.05).unwrap();
        for y in 0..4 {
            for x in 0..6 {
                assert_eq!(labels[y * 6 + x], usize::from(x >= 3));
            }
        }
    }

    #[test]
    fn flood_fill_measures_distance_to_the_seed() {
        // Per-step color distance 0.03 stays under the tolerance, but the
        // fill compares against the seed, so the ramp breaks into pairs.
        let image = Image::from_fn(8, 1, |x, _| [x as f64 * 0.03, 0.0, 0.0]);
        let labels = flood_fill_superpixels(&image, 0.05).unwrap();
        assert_eq!(labels, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn edge_term_flags_a_stripe_against_a_flat_plate() {
        let plate = Image::from_fn(9, 9, |_, _| [0.5, 0.5, 0.5]);
        let image = Image::from_fn(9, 9, |x, _| {
            if (3..=5).contains(&x) {
                [0.9, 0.9, 0.9]
            } else {
                [0.5, 0.5, 0.5]
            }
        });
        let labels = flood_fill_superpixels(&image, 0.05).unwrap();
        let re = edge_term(&image, &plate, &labels, 0.01, 0.02).unwrap();
        // Forward differences fire on the left side of each color step, so
        // the left surround (x = 2) and the stripe (x = 5) hold active
        // gradients, all disagreeing with the flat plate. The right surround
        // has no active pixel and scores zero by convention.
        for y in 0..9 {
            for x in 0..9 {
                let want = if x <= 5 { 1.0 } else { 0.0 };
                assert_eq!(re.get(x, y), want, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn edge_term_ignores_a_pure_brightness_shift() {
        // Same gradients in frame and plate: active pixels exist but none
        // disagree.
        let plate = Image::from_fn(8, 8, |x, _| {
            let v = x as f64 / 8.0;
            [v, v, v]
        });
        let image = Image::from_fn(8, 8, |x, _| {
            let v = x as f64 / 8.0 + 0.1;
            [v, v, v]
        });
        let labels = flood_fill_superpixels(&image, 0.05).unwrap();
        let re = edge_term(&image, &plate, &labels, 0.01, 0.02).unwrap();
        for &v in re.as_slice() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn edge_term_scores_zero_without_active_pixels() {
        let flat = Image::from_fn(5, 5, |_, _| [0.3, 0.3, 0.3]);
        let labels = flood_fill_superpixels(&flat, 0.05).unwrap();
        let re = edge_term(&flat, &flat, &labels, 0.01, 0.02).unwrap();
        for &v in re.as_slice() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn prior_highlights_an_object_missing_from_the_plate() {
        let plate = Image::from_fn(12, 12, |x, y| {
            let v = 0.3 + 0.02 * ((x + y) as f64 / 24.0);
            [v, v, v]
        });
        let mut image = plate.clone();
        for y in 3..9 {
            for x in 3..9 {
                *image.pixel_mut(x, y) = [0.9, 0.1, 0.1];
            }
        }
        // Bandwidths match the unit color range of the rasters.
        let params = BackgroundPriorParams {
            hs: 2.0,
            hr: 0.2,
            sigma_delta: 0.2,
            ..BackgroundPriorParams::default()
        };
        let prior = BackgroundPrior::build(&image, &plate, &params).unwrap();
        let mut inside = 0.0;
        let mut outside = 0.0;
        let mut n_in = 0.0;
        let mut n_out = 0.0;
        for y in 0..12 {
            for x in 0..12 {
                let v = prior.r0().get(x, y);
                assert!((0.0..=1.0).contains(&v));
                if (4..8).contains(&x) && (4..8).contains(&y) {
                    inside += v;
                    n_in += 1.0;
                } else if !(2..10).contains(&x) || !(2..10).contains(&y) {
                    outside += v;
                    n_out += 1.0;
                }
            }
        }
        assert!(inside / n_in > 0.5, "inside mean {}", inside / n_in);
        assert!(outside / n_out < 0.05, "outside mean {}", outside / n_out);
    }
}
