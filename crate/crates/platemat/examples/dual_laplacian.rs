//! Assembles the two-layer matting Laplacian for a small frame/plate pair
//! and probes its quadratic form. Each window fits one affine color-to-alpha
//! map that must send frame colors to the matte and plate colors to zero,
//! so the zero matte is free, the true silhouette is cheap, and anything
//! that lifts the background or ignores the colors is expensive. Ends with
//! the coordinate-format debug dump of the matrix corner.
//!
//! Run with `cargo run --example dual_laplacian`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use platemat::matting::build_dual_laplacian;
use platemat::metrics::sig6;
use platemat::sparse::min_eigenvalue_estimate;
use platemat::synth::{synth_generate, SceneSpec};

fn main() -> platemat::Result<()> {
    let spec = SceneSpec {
        width: 12,
        height: 12,
        center: (6.0, 6.0),
        size: 6.0,
        fg_color: Some([0.85, 0.2, 0.2]),
        texture_amp: 0.05,
        ..SceneSpec::default()
    };
    let scene = synth_generate(&spec, 3)?;
    let lap = build_dual_laplacian(&scene.frames[0], &scene.plate, 1.0, 1e-7)?;

    let n = lap.width() * lap.height();
    let matrix = lap.matrix();
    println!(
        "matrix: {n} x {n}, {} stored entries, max asymmetry {:.1e}",
        matrix.nnz(),
        matrix.max_asymmetry()
    );
    println!(
        "smallest eigenvalue (power-iteration estimate): {}",
        sig6(min_eigenvalue_estimate(matrix, 300))
    );
    println!();

    // Outside the square the frame equals the plate, so a lifted constant
    // asks one affine map to send the same colors to two different values.
    let truth: Vec<f64> = scene.truths[0].as_slice().to_vec();
    let zero = vec![0.0; n];
    let lifted = vec![0.7; n];
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let random: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    println!("quadratic form alpha' L alpha");
    println!("  zero matte        {}", sig6(lap.quadratic_form(&zero)));
    println!("  true silhouette   {}", sig6(lap.quadratic_form(&truth)));
    println!("  lifted constant   {}", sig6(lap.quadratic_form(&lifted)));
    println!("  random matte      {}", sig6(lap.quadratic_form(&random)));
    println!();

    let mut dump = Vec::new();
    matrix
        .write_coo_text(&mut dump)
        .expect("write to memory");
    let text = String::from_utf8(dump).expect("ascii dump");
    println!("coordinate dump, first 8 of {} lines:", text.lines().count());
    for line in text.lines().take(8) {
        println!("  {line}");
    }
    Ok(())
}
