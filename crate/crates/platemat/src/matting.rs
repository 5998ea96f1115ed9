//! Dual-layer closed-form matting agent.
//!
//! The agent minimizes `a' L a + lambda1 (a - z)' D (a - z)` where `L` is a
//! matting Laplacian built from the frame *and* the background plate, and `D`
//! is a diagonal confidence read off the incoming estimate through a sigmoid.
//! Every 3x3 window contributes a rank-structured block: the window's affine
//! color model is eliminated in closed form, with plate pixels entering as a
//! second layer whose matte is pinned to zero and weighted by `eta`.
//!
//! Per fully interior window w (n = 9 pixels, image colors I_i, plate colors
//! P_i):
//!
//! ```text
//! S  = sum_i I_i I_i' + eta sum_i P_i P_i' + eps Id
//! mu = sum_i (I_i + eta P_i)            c = n (1 + eta)
//! T  = S - mu mu' / c                   m = mu / c
//! L_w(i,j) = delta_ij - ( 1/c + (I_i - m)' T^{-1} (I_j - m) )
//! ```
//!
//! Windows are accumulated into one sparse matrix; `a' L a` then equals the
//! summed least-squares residual of fitting each window's affine color model
//! to the matte with the plate layer held at zero.

use rayon::prelude::*;

use crate::consensus::AgentOp;
use crate::error::{Error, Result};
use crate::raster::{AlphaMatte, Image};
use crate::sparse::{cg_solve, DiagMatrix, SparseSymMatrix, WindowBlock};

/// Default relative-residual tolerance for the inner conjugate-gradient solve.
pub const DEFAULT_CG_TOL: f64 = 1e-6;
/// Default iteration cap for the inner conjugate-gradient solve.
pub const DEFAULT_CG_MAX_ITER: usize = 2000;

const WINDOW_SIDE: usize = 3;
const WINDOW_PIXELS: usize = 9;

/// Sigmoid confidence diagonal derived from an incoming matte estimate:
/// entries `1 / (1 + exp(-kappa (z_i - theta)))`.
#[derive(Debug, Clone)]
pub struct ConfidenceDiag {
    diag: DiagMatrix,
    kappa: f64,
    theta: f64,
}

impl ConfidenceDiag {
    pub fn diag(&self) -> &DiagMatrix {
        &self.diag
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Evaluates the sigmoid confidence for every entry of `z`.
pub fn confidence_from_input(z: &[f64], kappa: f64, theta: f64) -> Result<ConfidenceDiag> {
    let entries: Vec<f64> = z
        .iter()
        .map(|zi| 1.0 / (1.0 + (-kappa * (zi - theta)).exp()))
        .collect();
    Ok(ConfidenceDiag {
        diag: DiagMatrix::new(entries)?,
        kappa,
        theta,
    })
}

/// The assembled dual-layer matting Laplacian for one frame/plate pair.
#[derive(Debug, Clone)]
pub struct DualLayerLaplacian {
    matrix: SparseSymMatrix,
    width: usize,
    height: usize,
    eta: f64,
    eps: f64,
}

impl DualLayerLaplacian {
    pub fn matrix(&self) -> &SparseSymMatrix {
        &self.matrix
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The energy `a' L a`.
    pub fn quadratic_form(&self, alpha: &[f64]) -> f64 {
        let mut y = vec![0.0; alpha.len()];
        self.matrix.matvec(alpha, &mut y);
        alpha.iter().zip(&y).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Mat3([[f64; 3]; 3]);

impl Mat3 {
    fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    fn inverse(&self) -> Result<Mat3> {
        let det = self.det();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::SingularWindow { det });
        }
        let m = &self.0;
        let inv_det = 1.0 / det;
        let mut out = [[0.0; 3]; 3];
        out[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
        out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
        out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
        out[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
        out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
        out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
        out[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
        out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
        out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
        Ok(Mat3(out))
    }

    fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

// Second moments, first moment, and normalization of one window.
fn window_moments(image: &Image, plate: &Image, eta: f64, eps: f64, cx: usize, cy: usize) -> (Mat3, [f64; 3], f64) {
    let mut sigma = [[0.0; 3]; 3];
    let mut mu = [0.0; 3];
    for dy in 0..WINDOW_SIDE {
        for dx in 0..WINDOW_SIDE {
            let x = cx + dx - 1;
            let y = cy + dy - 1;
            let ip = image.pixel(x, y);
            let pp = plate.pixel(x, y);
            for r in 0..3 {
                for c in 0..3 {
                    sigma[r][c] += ip[r] * ip[c] + eta * pp[r] * pp[c];
                }
                mu[r] += ip[r] + eta * pp[r];
            }
        }
    }
    for r in 0..3 {
        sigma[r][r] += eps;
    }
    let c = WINDOW_PIXELS as f64 * (1.0 + eta);
    (Mat3(sigma), mu, c)
}

fn window_block(image: &Image, plate: &Image, eta: f64, eps: f64, cx: usize, cy: usize) -> Result<WindowBlock> {
    let width = image.width();
    let (sigma, mu, c) = window_moments(image, plate, eta, eps, cx, cy);

    let mut t = sigma;
    for r in 0..3 {
        for col in 0..3 {
            t.0[r][col] -= mu[r] * mu[col] / c;
        }
    }
    let t_inv = t.inverse()?;
    let mu_hat = [mu[0] / c, mu[1] / c, mu[2] / c];

    let mut indices = Vec::with_capacity(WINDOW_PIXELS);
    let mut centered = [[0.0; 3]; WINDOW_PIXELS];
    for dy in 0..WINDOW_SIDE {
        for dx in 0..WINDOW_SIDE {
            let x = cx + dx - 1;
            let y = cy + dy - 1;
            let p = image.pixel(x, y);
            centered[dy * WINDOW_SIDE + dx] = [p[0] - mu_hat[0], p[1] - mu_hat[1], p[2] - mu_hat[2]];
            indices.push(y * width + x);
        }
    }

    // Upper triangle computed once and mirrored: blocks come out exactly
    // symmetric regardless of rounding.
    let mut values = vec![0.0; WINDOW_PIXELS * WINDOW_PIXELS];
    let transformed: Vec<[f64; 3]> = centered.iter().map(|v| t_inv.mul_vec(*v)).collect();
    for p in 0..WINDOW_PIXELS {
        for q in p..WINDOW_PIXELS {
            let mut v = -(1.0 / c + dot3(centered[p], transformed[q]));
            if p == q {
                v += 1.0;
            }
            values[p * WINDOW_PIXELS + q] = v;
            values[q * WINDOW_PIXELS + p] = v;
        }
    }
    Ok(WindowBlock::new(indices, values))
}

/// Builds the dual-layer Laplacian over every fully interior 3x3 window.
pub fn build_dual_laplacian(image: &Image, plate: &Image, eta: f64, eps: f64) -> Result<DualLayerLaplacian> {
    image.ensure_same_dims(plate)?;
    image.ensure_finite()?;
    plate.ensure_finite()?;
    let (width, height) = image.dims();
    if width < WINDOW_SIDE || height < WINDOW_SIDE {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min: WINDOW_SIDE,
        });
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            constraint: "must be positive",
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            constraint: "must be positive",
        });
    }

    let centers: Vec<(usize, usize)> = (1..height - 1)
        .flat_map(|cy| (1..width - 1).map(move |cx| (cx, cy)))
        .collect();
    let blocks: Vec<WindowBlock> = centers
        .par_iter()
        .map(|&(cx, cy)| window_block(image, plate, eta, eps, cx, cy))
        .collect::<Result<_>>()?;
    let matrix = SparseSymMatrix::assemble_from_window_blocks(width * height, &blocks)?;
    Ok(DualLayerLaplacian {
        matrix,
        width,
        height,
        eta,
        eps,
    })
}

/// One evaluation of the matting agent with explicit solver controls:
/// solves `(L + lambda1 D) a = lambda1 D z` with `D` read from `z`.
pub fn matting_agent_eval_with(
    z: &AlphaMatte,
    lap: &DualLayerLaplacian,
    lambda1: f64,
    kappa: f64,
    theta: f64,
    cg_tol: f64,
    cg_max_iter: usize,
) -> Result<AlphaMatte> {
    if z.dims() != (lap.width(), lap.height()) {
        return Err(Error::DimensionMismatch {
            left_width: z.width(),
            left_height: z.height(),
            right_width: lap.width(),
            right_height: lap.height(),
        });
    }
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda1",
            value: lambda1,
            constraint: "must be positive",
        });
    }
    z.ensure_finite()?;
    let conf = confidence_from_input(z.as_slice(), kappa, theta)?;
    solve_with_confidence(z, lap, lambda1, conf.diag(), cg_tol, cg_max_iter)
}

/// [`matting_agent_eval_with`] at the default solver settings.
pub fn matting_agent_eval(
    z: &AlphaMatte,
    lap: &DualLayerLaplacian,
    lambda1: f64,
    kappa: f64,
    theta: f64,
) -> Result<AlphaMatte> {
    matting_agent_eval_with(z, lap, lambda1, kappa, theta, DEFAULT_CG_TOL, DEFAULT_CG_MAX_ITER)
}

fn solve_with_confidence(
    z: &AlphaMatte,
    lap: &DualLayerLaplacian,
    lambda1: f64,
    diag: &DiagMatrix,
    cg_tol: f64,
    cg_max_iter: usize,
) -> Result<AlphaMatte> {
    let shift = diag.scaled(lambda1)?;
    let b: Vec<f64> = shift
        .entries()
        .iter()
        .zip(z.as_slice())
        .map(|(s, zi)| s * zi)
        .collect();
    let x = cg_solve(lap.matrix(), Some(&shift), &b, cg_tol, cg_max_iter)?;
    Ok(AlphaMatte::from_vec(z.width(), z.height(), x))
}

enum ConfidenceMode {
    /// Recompute the sigmoid diagonal from the incoming estimate on every call.
    Adaptive { kappa: f64, theta: f64 },
    /// Keep one fixed diagonal; the agent is then a linear proximal-type map.
    Frozen(DiagMatrix),
}

/// The matting agent as a consensus participant.
pub struct MattingAgent {
    lap: DualLayerLaplacian,
    lambda1: f64,
    mode: ConfidenceMode,
    cg_tol: f64,
    cg_max_iter: usize,
}

impl MattingAgent {
    pub fn new(lap: DualLayerLaplacian, lambda1: f64, kappa: f64, theta: f64) -> Self {
        Self {
            lap,
            lambda1,
            mode: ConfidenceMode::Adaptive { kappa, theta },
            cg_tol: DEFAULT_CG_TOL,
            cg_max_iter: DEFAULT_CG_MAX_ITER,
        }
    }

    pub fn with_frozen_confidence(lap: DualLayerLaplacian, lambda1: f64, diag: DiagMatrix) -> Self {
        Self {
            lap,
            lambda1,
            mode: ConfidenceMode::Frozen(diag),
            cg_tol: DEFAULT_CG_TOL,
            cg_max_iter: DEFAULT_CG_MAX_ITER,
        }
    }

    pub fn with_cg_params(mut self, cg_tol: f64, cg_max_iter: usize) -> Self {
        self.cg_tol = cg_tol;
        self.cg_max_iter = cg_max_iter;
        self
    }
}

impl AgentOp for MattingAgent {
    fn name(&self) -> &str {
        "matting"
    }

    fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        let z = AlphaMatte::from_vec(self.lap.width(), self.lap.height(), input.to_vec());
        let out = match &self.mode {
            ConfidenceMode::Adaptive { kappa, theta } => matting_agent_eval_with(
                &z,
                &self.lap,
                self.lambda1,
                *kappa,
                *theta,
                self.cg_tol,
                self.cg_max_iter,
            )?,
            ConfidenceMode::Frozen(diag) => {
                solve_with_confidence(&z, &self.lap, self.lambda1, diag, self.cg_tol, self.cg_max_iter)?
            }
        };
        Ok(out.into_vec())
    }
}
