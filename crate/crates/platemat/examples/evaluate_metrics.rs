//! The three matte scores on hand-built cases whose values are knowable
//! at a glance, ending with an assembled multi-frame report in the same
//! text format the command-line tools emit.
//!
//! Run with `cargo run --example evaluate_metrics`.

use platemat::metrics::{contour_f, iou, mae, sig6, FrameMetrics, MetricReport};
use platemat::raster::AlphaMatte;

fn square(w: usize, h: usize, x0: usize, y0: usize, side: usize) -> AlphaMatte {
    AlphaMatte::from_fn(w, h, |x, y| {
        if (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y) {
            1.0
        } else {
            0.0
        }
    })
}

fn main() -> platemat::Result<()> {
    // Two 3-pixel strips overlapping in one pixel: intersection 1, union 3.
    let a = AlphaMatte::from_vec(3, 1, vec![1.0, 1.0, 0.0]);
    let b = AlphaMatte::from_vec(3, 1, vec![0.0, 1.0, 1.0]);
    println!("strip overlap      iou {}   (exactly 1/3)", sig6(iou(&a, &b)?));

    // Soft mattes count fractional coverage, not thresholded pixels.
    let half = AlphaMatte::from_vec(2, 1, vec![0.5, 0.5]);
    let full = AlphaMatte::from_vec(2, 1, vec![1.0, 1.0]);
    println!("half-coverage      iou {}   mae {}", sig6(iou(&half, &full)?), sig6(mae(&half, &full)?));

    // A one-pixel shift keeps every boundary pixel within tolerance 2, so
    // the boundary score stays perfect while iou drops.
    let truth = square(16, 16, 4, 4, 8);
    let shifted = square(16, 16, 5, 4, 8);
    println!(
        "shifted square     iou {}   contour_f(tol 2) {}",
        sig6(iou(&shifted, &truth)?),
        sig6(contour_f(&shifted, &truth, 2)?)
    );

    // Disjoint silhouettes share no boundary within tolerance.
    let far = square(16, 16, 12, 12, 3);
    println!(
        "disjoint square    iou {}   contour_f(tol 2) {}",
        sig6(iou(&far, &truth)?),
        sig6(contour_f(&far, &truth, 2)?)
    );
    println!();

    let frames = vec![
        FrameMetrics::evaluate("000", &truth, &truth, 2)?,
        FrameMetrics::evaluate("001", &shifted, &truth, 2)?,
        FrameMetrics::evaluate("002", &far, &truth, 2)?,
    ];
    let report = MetricReport::from_frames(frames)?;
    println!("report text (one line per frame, then the mean):");
    print!("{}", report.to_text());
    Ok(())
}
