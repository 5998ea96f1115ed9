//! Builds the plate-disagreement prior on a deliberately stale plate and
//! shows how its two factors divide the work: the color term flags pixels
//! whose neighborhood no longer matches the plate, and the edge term
//! clears superpixels whose disagreement is explained by global drift
//! rather than an occluding object.
//!
//! Run with `cargo run --example background_prior`.

use platemat::config::PipelineConfig;
use platemat::metrics::sig6;
use platemat::raster::AlphaMatte;
use platemat::synth::{synth_generate, SceneSpec};

fn mean_where(values: &AlphaMatte, mask: &AlphaMatte, inside: bool) -> f64 {
    let mut sum = 0.0;
    let mut count = 0.0;
    for (v, m) in values.as_slice().iter().zip(mask.as_slice()) {
        if (*m >= 0.5) == inside {
            sum += v;
            count += 1.0;
        }
    }
    sum / count
}

fn ascii(matte: &AlphaMatte) {
    let shades = [' ', '.', ':', '*', '#'];
    let (w, h) = matte.dims();
    for y in 0..h {
        let row: String = (0..w)
            .map(|x| {
                let v = matte.get(x, y).clamp(0.0, 1.0);
                shades[(v * 4.0).round() as usize]
            })
            .collect();
        println!("    {row}");
    }
}

fn main() -> platemat::Result<()> {
    // A red square over a textured plate, with the plate gone stale: the
    // frames are brighter, shifted a pixel, and noisy.
    let spec = SceneSpec {
        width: 32,
        height: 32,
        center: (16.0, 16.0),
        size: 16.0,
        fg_color: Some([0.85, 0.2, 0.2]),
        texture_amp: 0.15,
        brightness: 0.05,
        jitter_px: 1,
        noise_sigma: 0.01,
        ..SceneSpec::default()
    };
    let scene = synth_generate(&spec, 9)?;
    let truth = &scene.truths[0];

    // Bandwidths sized for unit-range colors on a desk-scale image.
    let cfg = PipelineConfig {
        sigma_delta: 0.08,
        hr: 0.2,
        hs: 2.0,
        ..PipelineConfig::default()
    };
    let prior = platemat::background::BackgroundPrior::build(
        &scene.frames[0],
        &scene.plate,
        &cfg.prior_params(),
    )?;

    println!("scene: 16 px square, plate +0.05 brightness, 1 px jitter, noise 0.01");
    println!();
    println!("color term  (foreground mean {}, background mean {})",
        sig6(mean_where(prior.color(), truth, true)),
        sig6(mean_where(prior.color(), truth, false)));
    println!("edge term   (foreground mean {}, background mean {})",
        sig6(mean_where(prior.edge(), truth, true)),
        sig6(mean_where(prior.edge(), truth, false)));
    println!("rough matte (foreground mean {}, background mean {})",
        sig6(mean_where(prior.r0(), truth, true)),
        sig6(mean_where(prior.r0(), truth, false)));

    let segments = prior.labels().iter().copied().max().unwrap_or(0) + 1;
    println!("superpixels: {segments}");
    println!();
    println!("rough matte r0:");
    ascii(prior.r0());
    Ok(())
}
