//! The smoothing agent in isolation: total-variation proximal maps on a
//! noisy step image and on a flickering frame stack.
//!
//! The spatial prox removes pixel noise while keeping the step edge; the
//! temporal weight additionally pulls a frame that disagrees with its
//! neighbors back toward them. Run with `cargo run --example tv_denoise`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use platemat::metrics::sig6;
use platemat::tv::{tv_prox, tv_seminorm, MatteVolume, TvWeights};

const W: usize = 24;
const H: usize = 24;

fn step(x: usize) -> f64 {
    if x < W / 2 {
        0.1
    } else {
        0.9
    }
}

fn mae_to_clean(vol: &MatteVolume) -> f64 {
    let mut sum = 0.0;
    for t in 0..vol.frames() {
        for y in 0..H {
            for x in 0..W {
                sum += (vol.get(x, y, t) - step(x)).abs();
            }
        }
    }
    sum / vol.len() as f64
}

fn main() -> platemat::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let noise = Normal::new(0.0, 0.08).expect("finite sigma");

    // One noisy frame, spatial smoothing only.
    let noisy = MatteVolume::from_vec(
        W,
        H,
        1,
        (0..W * H)
            .map(|i| step(i % W) + noise.sample(&mut rng))
            .collect(),
    );
    let spatial = TvWeights::spatial();
    let smoothed = tv_prox(&noisy, &spatial, 4.0)?;
    println!("spatial prox on a noisy step (lambda3 = 4):");
    println!("  mae to clean   before {}  after {}", sig6(mae_to_clean(&noisy)), sig6(mae_to_clean(&smoothed)));
    println!("  tv seminorm    before {}  after {}",
        sig6(tv_seminorm(&noisy, &spatial)?),
        sig6(tv_seminorm(&smoothed, &spatial)?));
    let across = (smoothed.get(W / 2 - 1, H / 2, 0) - smoothed.get(W / 2, H / 2, 0)).abs();
    println!("  step height across the edge after smoothing: {}", sig6(across));
    println!();

    // Three clean frames, the middle one flickering upward.
    let mut frames = Vec::new();
    for t in 0..3 {
        let lift = if t == 1 { 0.25 } else { 0.0 };
        frames.extend((0..W * H).map(|i| (step(i % W) + lift).min(1.0)));
    }
    let flickering = MatteVolume::from_vec(W, H, 3, frames);
    let temporal = TvWeights::temporal();
    let settled = tv_prox(&flickering, &temporal, 4.0)?;
    let probe = (W / 4, H / 2);
    println!("temporal prox on a flickering middle frame (beta_t = 0.25):");
    for t in 0..3 {
        println!(
            "  frame {t}: probe pixel before {}  after {}",
            sig6(flickering.get(probe.0, probe.1, t)),
            sig6(settled.get(probe.0, probe.1, t))
        );
    }
    let residual_flicker = settled.get(probe.0, probe.1, 1)
        - 0.5 * (settled.get(probe.0, probe.1, 0) + settled.get(probe.0, probe.1, 2));
    println!("  flicker left at the probe: {}", sig6(residual_flicker));
    Ok(())
}
