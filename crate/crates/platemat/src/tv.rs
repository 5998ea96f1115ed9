//! Total-variation smoothing agent.
//!
//! The agent evaluates the proximal map of a weighted anisotropic-in-time,
//! isotropic-in-space total variation: it minimizes
//!
//! ```text
//! TV(a) + lambda3 |a - z|^2
//! TV(a) = sum_sites sqrt(bx gx^2 + by gy^2 + bt gt^2)
//! ```
//!
//! over a scalar volume, with forward differences and replicate padding (the
//! far row/column/frame carries zero gradient). Setting `bt = 0` decouples
//! the frames, and the solver then runs per frame; setting `bt > 0` couples
//! a temporal window into one joint smoothing problem.
//!
//! The solve is a primal-dual (Chambolle-Pock) iteration. The fidelity term
//! is strongly convex, so the accelerated variant applies: starting from
//! `tau = sigma = 1 / L` with `L^2 = 4 (bx + by + bt)`, every step rescales
//! `tau` down and `sigma` up by the extrapolation factor
//! `theta = 1 / sqrt(1 + 4 lambda3 tau)`. Iterations stop once the relative
//! primal-dual gap falls under `inner_tol`; exhausting `inner_max` first is
//! an error carrying the final gap.

use rayon::prelude::*;

use crate::consensus::AgentOp;
use crate::error::{Error, Result};
use crate::raster::AlphaMatte;

/// Default relative primal-dual gap at which the inner solve stops. By
/// strong convexity of the fidelity, a gap of g certifies a matte within
/// `sqrt(g * (1 + objective) / lambda3)` of the exact minimizer, so even on
/// low-energy instances (where the relative gap is hardest to shrink) this
/// default pins the matte to a few 1e-3 in the 2-norm.
pub const DEFAULT_INNER_TOL: f64 = 1e-4;
/// Default iteration cap for the inner solve. The iterations needed for the
/// dual certificate grow with image diameter and shrink with the instance's
/// energy; near-binary 64x64 mattes sit around 2000 at the default gap.
/// Converged solves stop early, so the margin is cheap.
pub const DEFAULT_INNER_MAX: usize = 6000;

/// Gradient weights `(bx, by, bt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvWeights {
    pub beta_x: f64,
    pub beta_y: f64,
    pub beta_t: f64,
}

impl TvWeights {
    /// Purely spatial smoothing: frames stay independent.
    pub fn spatial() -> Self {
        Self {
            beta_x: 1.0,
            beta_y: 1.0,
            beta_t: 0.0,
        }
    }

    /// Spatial smoothing plus a quarter-weight temporal coupling.
    pub fn temporal() -> Self {
        Self {
            beta_x: 1.0,
            beta_y: 1.0,
            beta_t: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("beta_x", self.beta_x),
            ("beta_y", self.beta_y),
            ("beta_t", self.beta_t),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    constraint: "must be nonnegative and finite",
                });
            }
        }
        Ok(())
    }

    fn is_zero(&self) -> bool {
        self.beta_x == 0.0 && self.beta_y == 0.0 && self.beta_t == 0.0
    }
}

/// A scalar volume over `frames` mattes, stored frame-major:
/// `data[t * w * h + y * w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatteVolume {
    width: usize,
    height: usize,
    frames: usize,
    data: Vec<f64>,
}

impl MatteVolume {
    pub fn new(width: usize, height: usize, frames: usize) -> Self {
        Self {
            width,
            height,
            frames,
            data: vec![0.0; width * height * frames],
        }
    }

    pub fn from_vec(width: usize, height: usize, frames: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * frames);
        Self {
            width,
            height,
            frames,
            data,
        }
    }

    pub fn from_frames(frames: &[AlphaMatte]) -> Result<Self> {
        let first = frames.first().ok_or(Error::TooFewFrames { got: 0, need: 1 })?;
        let (w, h) = first.dims();
        let mut data = Vec::with_capacity(w * h * frames.len());
        for frame in frames {
            first.ensure_same_dims(frame)?;
            data.extend_from_slice(frame.as_slice());
        }
        Ok(Self {
            width: w,
            height: h,
            frames: frames.len(),
            data,
        })
    }

    pub fn single(frame: &AlphaMatte) -> Self {
        Self {
            width: frame.width(),
            height: frame.height(),
            frames: 1,
            data: frame.as_slice().to_vec(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, t: usize) -> f64 {
        self.data[t * self.width * self.height + y * self.width + x]
    }

    pub fn frame(&self, t: usize) -> AlphaMatte {
        let wh = self.width * self.height;
        AlphaMatte::from_vec(
            self.width,
            self.height,
            self.data[t * wh..(t + 1) * wh].to_vec(),
        )
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

// Weighted forward-difference gradient of one site.
#[inline]
fn site_gradient(
    data: &[f64],
    x: usize,
    y: usize,
    t: usize,
    w: usize,
    h: usize,
    frames: usize,
    sb: [f64; 3],
) -> [f64; 3] {
    let wh = w * h;
    let i = t * wh + y * w + x;
    let gx = if x + 1 < w { data[i + 1] - data[i] } else { 0.0 };
    let gy = if y + 1 < h { data[i + w] - data[i] } else { 0.0 };
    let gt = if t + 1 < frames { data[i + wh] - data[i] } else { 0.0 };
    [sb[0] * gx, sb[1] * gy, sb[2] * gt]
}

/// The weighted total variation of a volume.
pub fn tv_seminorm(vol: &MatteVolume, weights: &TvWeights) -> Result<f64> {
    weights.validate()?;
    vol.ensure_finite()?;
    let (w, h, frames) = (vol.width, vol.height, vol.frames);
    let sb = [weights.beta_x.sqrt(), weights.beta_y.sqrt(), weights.beta_t.sqrt()];
    let mut total = 0.0;
    for t in 0..frames {
        for y in 0..h {
            for x in 0..w {
                let g = site_gradient(&vol.data, x, y, t, w, h, frames, sb);
                total += (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            }
        }
    }
    Ok(total)
}

// Adjoint of the weighted gradient applied to a per-site dual field.
fn apply_adjoint(p: &[[f64; 3]], out: &mut [f64], w: usize, h: usize, frames: usize, sb: [f64; 3]) {
    let wh = w * h;
    for (i, slot) in out.iter_mut().enumerate() {
        let t = i / wh;
        let r = i % wh;
        let y = r / w;
        let x = r % w;
        let mut acc = 0.0;
        // Forward difference D has adjoint (D' p)_j = p_{j-1} - p_j with the
        // out-of-range taps dropped.
        if x > 0 {
            acc += sb[0] * p[i - 1][0];
        }
        if x + 1 < w {
            acc -= sb[0] * p[i][0];
        }
        if y > 0 {
            acc += sb[1] * p[i - w][1];
        }
        if y + 1 < h {
            acc -= sb[1] * p[i][1];
        }
        if t > 0 {
            acc += sb[2] * p[i - wh][2];
        }
        if t + 1 < frames {
            acc -= sb[2] * p[i][2];
        }
        *slot = acc;
    }
}

/// Proximal map of the weighted total variation: minimizes
/// `TV(a) + lambda3 |a - z|^2` with explicit solver controls.
pub fn tv_prox_with(
    z: &MatteVolume,
    weights: &TvWeights,
    lambda3: f64,
    inner_tol: f64,
    inner_max: usize,
) -> Result<MatteVolume> {
    weights.validate()?;
    z.ensure_finite()?;
    if !(lambda3 > 0.0) || !lambda3.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda3",
            value: lambda3,
            constraint: "must be positive and finite",
        });
    }
    // No smoothing term: the fidelity minimizer is the input itself.
    if weights.is_zero() {
        return Ok(z.clone());
    }
    // Decoupled frames solve independently; dispatching per frame makes the
    // single-frame and volume paths agree bit for bit.
    if weights.beta_t == 0.0 && z.frames > 1 {
        let wh = z.width * z.height;
        let solved: Vec<Vec<f64>> = (0..z.frames)
            .into_par_iter()
            .map(|t| {
                let frame = MatteVolume::from_vec(
                    z.width,
                    z.height,
                    1,
                    z.data[t * wh..(t + 1) * wh].to_vec(),
                );
                tv_prox_with(&frame, weights, lambda3, inner_tol, inner_max).map(|v| v.data)
            })
            .collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(z.data.len());
        for frame in solved {
            data.extend_from_slice(&frame);
        }
        return Ok(MatteVolume::from_vec(z.width, z.height, z.frames, data));
    }

    let (w, h, frames) = (z.width, z.height, z.frames);
    let n = z.data.len();
    let sb = [weights.beta_x.sqrt(), weights.beta_y.sqrt(), weights.beta_t.sqrt()];
    let step = 1.0 / (4.0 * (weights.beta_x + weights.beta_y + weights.beta_t)).sqrt();
    let (mut sigma, mut tau) = (step, step);

    let mut alpha = z.data.clone();
    let mut alpha_bar = alpha.clone();
    let mut p = vec![[0.0f64; 3]; n];
    let mut adjoint = vec![0.0f64; n];

    let mut best_gap = f64::INFINITY;
    for _ in 0..inner_max {
        // Dual ascent with a per-site unit-ball projection.
        for t in 0..frames {
            for y in 0..h {
                for x in 0..w {
                    let i = t * w * h + y * w + x;
                    let g = site_gradient(&alpha_bar, x, y, t, w, h, frames, sb);
                    let cand = [
                        p[i][0] + sigma * g[0],
                        p[i][1] + sigma * g[1],
                        p[i][2] + sigma * g[2],
                    ];
                    let norm = (cand[0] * cand[0] + cand[1] * cand[1] + cand[2] * cand[2]).sqrt();
                    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
                    for c in 0..3 {
                        p[i][c] = cand[c] * scale;
                    }
                }
            }
        }
        apply_adjoint(&p, &mut adjoint, w, h, frames, sb);

        // Proximal step on the fidelity, extrapolated by theta.
        let fidelity = 2.0 * tau * lambda3;
        let theta = 1.0 / (1.0 + 2.0 * fidelity).sqrt();
        for i in 0..n {
            let next = (alpha[i] - tau * adjoint[i] + fidelity * z.data[i]) / (1.0 + fidelity);
            alpha_bar[i] = next + theta * (next - alpha[i]);
            alpha[i] = next;
        }
        tau *= theta;
        sigma /= theta;

        // The dual value for feasible p is <z, K'p> - |K'p|^2 / (4 lambda3);
        // the gap against the primal objective certifies optimality.
        let mut dual = 0.0;
        let mut fit = 0.0;
        for i in 0..n {
            dual += z.data[i] * adjoint[i] - adjoint[i] * adjoint[i] / (4.0 * lambda3);
            let d = alpha[i] - z.data[i];
            fit += d * d;
        }
        let mut primal = lambda3 * fit;
        for t in 0..frames {
            for y in 0..h {
                for x in 0..w {
                    let g = site_gradient(&alpha, x, y, t, w, h, frames, sb);
                    primal += (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                }
            }
        }
        let gap = (primal - dual).max(0.0) / (1.0 + primal.abs() + dual.abs());
        if gap <= inner_tol {
            return Ok(MatteVolume::from_vec(w, h, frames, alpha));
        }
        // The last-iterate gap oscillates near its floor; report the best
        // certificate seen rather than whatever the final bounce left.
        best_gap = best_gap.min(gap);
    }
    Err(Error::TvDidNotConverge {
        iterations: inner_max,
        residual: best_gap,
    })
}

/// [`tv_prox_with`] at the default solver settings.
pub fn tv_prox(z: &MatteVolume, weights: &TvWeights, lambda3: f64) -> Result<MatteVolume> {
    tv_prox_with(z, weights, lambda3, DEFAULT_INNER_TOL, DEFAULT_INNER_MAX)
}

/// The smoothing agent as a consensus participant.
pub struct TvAgent {
    width: usize,
    height: usize,
    frames: usize,
    weights: TvWeights,
    lambda3: f64,
    inner_tol: f64,
    inner_max: usize,
}

impl TvAgent {
    pub fn new(width: usize, height: usize, frames: usize, weights: TvWeights, lambda3: f64) -> Self {
        Self {
            width,
            height,
            frames,
            weights,
            lambda3,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max: DEFAULT_INNER_MAX,
        }
    }

    pub fn with_inner_params(mut self, inner_tol: f64, inner_max: usize) -> Self {
        self.inner_tol = inner_tol;
        self.inner_max = inner_max;
        self
    }
}

impl AgentOp for TvAgent {
    fn name(&self) -> &str {
        "tv"
    }

    fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        let z = MatteVolume::from_vec(self.width, self.height, self.frames, input.to_vec());
        Ok(tv_prox_with(&z, &self.weights, self.lambda3, self.inner_tol, self.inner_max)?.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::check_firm_nonexpansiveness;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn fidelity(a: &[f64], z: &[f64], lambda3: f64) -> f64 {
        lambda3 * a.iter().zip(z).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
    }

    fn objective(vol: &MatteVolume, z: &MatteVolume, weights: &TvWeights, lambda3: f64) -> f64 {
        tv_seminorm(vol, weights).unwrap() + fidelity(&vol.data, &z.data, lambda3)
    }

    /// Oracle: diminishing-step subgradient descent on the same objective.
    /// Returns the best objective value seen.
    fn subgradient_best(
        start: &MatteVolume,
        z: &MatteVolume,
        weights: &TvWeights,
        lambda3: f64,
        steps: usize,
        step_scale: f64,
    ) -> f64 {
        let (w, h, frames) = (start.width, start.height, start.frames);
        let sb = [weights.beta_x.sqrt(), weights.beta_y.sqrt(), weights.beta_t.sqrt()];
        let n = start.data.len();
        let mut alpha = start.clone();
        let mut best = objective(&alpha, z, weights, lambda3);
        let mut q = vec![[0.0f64; 3]; n];
        let mut grad = vec![0.0f64; n];
        for k in 1..=steps {
            for t in 0..frames {
                for y in 0..h {
                    for x in 0..w {
                        let i = t * w * h + y * w + x;
                        let g = site_gradient(&alpha.data, x, y, t, w, h, frames, sb);
                        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                        q[i] = if norm > 1e-12 {
                            [g[0] / norm, g[1] / norm, g[2] / norm]
                        } else {
                            [0.0; 3]
                        };
                    }
                }
            }
            apply_adjoint(&q, &mut grad, w, h, frames, sb);
            let step = step_scale / (k as f64).sqrt();
            for i in 0..n {
                alpha.data[i] -= step * (grad[i] + 2.0 * lambda3 * (alpha.data[i] - z.data[i]));
            }
            best = best.min(objective(&alpha, z, weights, lambda3));
        }
        best
    }

    fn random_volume(rng: &mut ChaCha8Rng, w: usize, h: usize, frames: usize) -> MatteVolume {
        MatteVolume::from_vec(
            w,
            h,
            frames,
            (0..w * h * frames).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
    }

    #[test]
    fn seminorm_counts_a_step_edge() {
        // Left half 0, right half 1 on 4x4: one unit jump per row.
        let vol = MatteVolume::from_vec(
            4,
            4,
            1,
            (0..16).map(|i| if i % 4 >= 2 { 1.0 } else { 0.0 }).collect(),
        );
        let tv = tv_seminorm(&vol, &TvWeights::spatial()).unwrap();
        assert!((tv - 4.0).abs() < 1e-12);
    }

    #[test]
    fn seminorm_counts_a_temporal_jump() {
        // Two constant frames 0 and 1: only the temporal gradient fires,
        // scaled by sqrt(0.25).
        let mut vol = MatteVolume::new(4, 4, 2);
        for i in 16..32 {
            vol.data_mut()[i] = 1.0;
        }
        let tv = tv_seminorm(&vol, &TvWeights::temporal()).unwrap();
        assert!((tv - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_return_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(301);
        let z = random_volume(&mut rng, 5, 4, 2);
        let weights = TvWeights {
            beta_x: 0.0,
            beta_y: 0.0,
            beta_t: 0.0,
        };
        let out = tv_prox(&z, &weights, 4.0).unwrap();
        assert_eq!(out.data, z.data);
    }

    #[test]
    fn constant_input_is_a_fixed_point() {
        let z = MatteVolume::from_vec(6, 6, 1, vec![0.37; 36]);
        let out = tv_prox(&z, &TvWeights::spatial(), 4.0).unwrap();
        for (a, b) in out.data.iter().zip(&z.data) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn huge_fidelity_returns_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(307);
        let z = random_volume(&mut rng, 6, 6, 1);
        let out = tv_prox_with(&z, &TvWeights::spatial(), 1e6, 1e-8, 5000).unwrap();
        let worst = out
            .data
            .iter()
            .zip(&z.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-3, "max deviation {worst}");
    }

    #[test]
    fn output_stays_within_the_input_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(311);
        let z = random_volume(&mut rng, 8, 8, 1);
        let out = tv_prox_with(&z, &TvWeights::spatial(), 4.0, 1e-7, 2000).unwrap();
        let lo = z.data.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = z.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for &v in &out.data {
            assert!(v >= lo - 1e-6 && v <= hi + 1e-6, "{v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn prox_does_not_increase_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(313);
        for _ in 0..5 {
            let z = random_volume(&mut rng, 7, 5, 1);
            let out = tv_prox_with(&z, &TvWeights::spatial(), 4.0, 1e-7, 2000).unwrap();
            let at_out = objective(&out, &z, &TvWeights::spatial(), 4.0);
            let at_z = objective(&z, &z, &TvWeights::spatial(), 4.0);
            assert!(at_out <= at_z + 1e-10, "{at_out} vs {at_z}");
        }
    }

    #[test]
    fn prox_objective_is_not_improvable_by_subgradient_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(317);
        let z = random_volume(&mut rng, 6, 6, 1);
        let weights = TvWeights::spatial();
        let out = tv_prox_with(&z, &weights, 4.0, 1e-9, 20_000).unwrap();
        let at_out = objective(&out, &z, &weights, 4.0);
        // Warm-started descent cannot find anything meaningfully better.
        let warm_best = subgradient_best(&out, &z, &weights, 4.0, 2000, 1e-3);
        assert!(at_out <= warm_best + 1e-4 * at_out.abs(), "{at_out} vs {warm_best}");
        // Cold-started descent from the input does not beat the prox either.
        let cold_best = subgradient_best(&z, &z, &weights, 4.0, 2000, 1e-2);
        assert!(at_out <= cold_best + 1e-4 * at_out.abs(), "{at_out} vs {cold_best}");
    }

    #[test]
    fn spatial_volume_prox_equals_per_frame_prox_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(331);
        let vol = random_volume(&mut rng, 6, 5, 3);
        let joint = tv_prox(&vol, &TvWeights::spatial(), 4.0).unwrap();
        for t in 0..3 {
            let single = MatteVolume::single(&vol.frame(t));
            let solo = tv_prox(&single, &TvWeights::spatial(), 4.0).unwrap();
            assert_eq!(&joint.frame(t).as_slice(), &solo.data.as_slice(), "frame {t}");
        }
    }

    #[test]
    fn temporal_coupling_shrinks_a_flickering_pixel() {
        // Frames alternate 0 / 1 at one pixel; temporal smoothing pulls the
        // flicker toward its mean while the frames stay flat elsewhere.
        let mut vol = MatteVolume::new(5, 5, 5);
        for t in 0..5 {
            let v = if t % 2 == 0 { 0.0 } else { 1.0 };
            vol.data_mut()[t * 25 + 12] = v;
        }
        let out = tv_prox_with(&vol, &TvWeights::temporal(), 4.0, 1e-7, 2000).unwrap();
        let spread: f64 = (0..4)
            .map(|t| (out.get(2, 2, t + 1) - out.get(2, 2, t)).abs())
            .sum();
        assert!(spread < 4.0, "temporal spread {spread} not reduced");
    }

    #[test]
    fn exhausted_iteration_budget_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(337);
        let z = random_volume(&mut rng, 8, 8, 1);
        let err = tv_prox_with(&z, &TvWeights::spatial(), 4.0, 1e-12, 3).unwrap_err();
        assert!(matches!(err, Error::TvDidNotConverge { iterations: 3, .. }));
    }

    #[test]
    fn agent_is_firmly_nonexpansive() {
        let agent = TvAgent::new(8, 8, 1, TvWeights::spatial(), 4.0).with_inner_params(1e-9, 20_000);
        let mut rng = ChaCha8Rng::seed_from_u64(347);
        let slack = check_firm_nonexpansiveness(
            &agent,
            move || (0..64).map(|_| rng.gen_range(0.0..1.0)).collect(),
            20,
        )
        .unwrap();
        assert!(slack <= 1e-8, "slack {slack}");
    }

    #[test]
    fn volume_frame_round_trip() {
        let a = AlphaMatte::from_vec(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = AlphaMatte::from_vec(3, 2, vec![0.7, 0.8, 0.9, 1.0, 0.0, 0.5]);
        let vol = MatteVolume::from_frames(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(vol.frames(), 2);
        assert_eq!(vol.frame(0).as_slice(), a.as_slice());
        assert_eq!(vol.frame(1).as_slice(), b.as_slice());
        assert_eq!(vol.get(2, 1, 1), 0.5);
        assert!(matches!(
            MatteVolume::from_frames(&[]),
            Err(Error::TooFewFrames { got: 0, need: 1 })
        ));
    }
}

