//! Property audit of the three agents: each must be firmly nonexpansive,
//! the condition that keeps the consensus iteration from diverging. The
//! checker samples random input pairs and reports the worst slack of
//! `|F(x)-F(y)|^2 + |(x-y)-(F(x)-F(y))|^2 <= |x-y|^2`; a negative worst
//! slack means every sampled pair passed with margin.
//!
//! Run with `cargo run --release --example agent_properties`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use platemat::background::BackgroundAgent;
use platemat::config::PipelineConfig;
use platemat::consensus::{check_firm_nonexpansiveness, AgentOp};
use platemat::matting::{build_dual_laplacian, confidence_from_input, MattingAgent};
use platemat::synth::{synth_generate, SceneSpec};
use platemat::tv::{TvAgent, TvWeights};

const SIDE: usize = 12;

fn main() -> platemat::Result<()> {
    let cfg = PipelineConfig::default();
    let spec = SceneSpec {
        width: SIDE,
        height: SIDE,
        center: (6.0, 6.0),
        size: 6.0,
        ..SceneSpec::default()
    };
    let scene = synth_generate(&spec, 14)?;
    let n = SIDE * SIDE;

    // The matting solve is linear only once its confidence gate is fixed;
    // freeze the gate fully open to probe the core solve. Solver slop
    // shows up as positive slack, so run the inner solves tight.
    let lap = build_dual_laplacian(&scene.frames[0], &scene.plate, cfg.eta, cfg.eps)?;
    let open_gate = confidence_from_input(&vec![1.0; n], cfg.kappa, cfg.theta)?;
    let matting = MattingAgent::with_frozen_confidence(lap, cfg.lambda1, open_gate.diag().clone())
        .with_cg_params(1e-12, 10_000);

    let background = BackgroundAgent::new(scene.truths[0].clone(), cfg.lambda2, cfg.gamma)?;

    let tv = TvAgent::new(SIDE, SIDE, 1, TvWeights::spatial(), cfg.lambda3)
        .with_inner_params(1e-8, 60_000);

    let agents: [&dyn AgentOp; 3] = [&matting, &background, &tv];
    println!("worst firm-nonexpansiveness slack over 200 random pairs in [-0.5, 1.5]^n:");
    for (i, agent) in agents.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let worst = check_firm_nonexpansiveness(
            *agent,
            || (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect(),
            200,
        )?;
        println!("  {:12} {worst:+.3e}", agent.name());
    }

    // A plain average with a constant is nonexpansive but NOT firm once
    // the step overshoots; the checker flags it.
    struct Overshoot;
    impl AgentOp for Overshoot {
        fn name(&self) -> &str {
            "overshoot"
        }
        fn apply(&self, z: &[f64]) -> platemat::Result<Vec<f64>> {
            // Reflection through 0.5: nonexpansive, never firmly so.
            Ok(z.iter().map(|v| 1.0 - v).collect())
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let worst = check_firm_nonexpansiveness(
        &Overshoot,
        || (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect(),
        200,
    )?;
    println!("  {:12} {worst:+.3e}  (a reflection, rejected as expected)", "overshoot");
    Ok(())
}
