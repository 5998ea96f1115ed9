//! Smallest possible consensus run: two agents that disagree about where a
//! scalar signal belongs, meeting in the middle.
//!
//! Each agent is the proximal map of a quadratic pull toward its own
//! anchor, so both are firmly nonexpansive and the equilibrium is the
//! midpoint. Run with `cargo run --example consensus_toy`.

use platemat::consensus::{
    mace_iterate, verify_equilibrium, AgentOp, FnAgent, MaceOptions, StackedState,
};
use platemat::metrics::sig6;

fn main() -> platemat::Result<()> {
    // prox of x -> |x - a|^2 with unit weight: half-step toward the anchor.
    let toward_zero = FnAgent::new("toward-zero", |z: &[f64]| {
        z.iter().map(|v| 0.5 * v).collect()
    });
    let toward_one = FnAgent::new("toward-one", |z: &[f64]| {
        z.iter().map(|v| 0.5 * (v + 1.0)).collect()
    });
    let agents: [&dyn AgentOp; 2] = [&toward_zero, &toward_one];

    let initial = StackedState::uniform(vec![0.2; 4], agents.len())?;
    let options = MaceOptions {
        tol: 1e-9,
        max_iter: 100,
        // Two pure constant-pull agents cycle under the plain sweep;
        // averaging damps the cycle into linear convergence.
        mann_weight: 0.5,
    };
    let report = mace_iterate(initial, &agents, &options)?;

    println!("converged: {} in {} iterations", report.converged, report.iterations_used);
    for (i, r) in report.residual_history.iter().enumerate() {
        println!("  iteration {:2}  residual {}", i + 1, sig6(*r));
    }
    println!("solution (all entries): {}", sig6(report.solution[0]));
    println!("expected midpoint:      0.500000");

    // Each agent still pulls toward its anchor; the tensions record the
    // balanced disagreement and cancel in the average.
    for (agent, u) in agents.iter().zip(&report.tensions) {
        println!("tension of {:12} {}", agent.name(), sig6(u[0]));
    }

    let diag = verify_equilibrium(&report, &agents, 1e-6)?;
    println!(
        "equilibrium check: agents [{}], consensus {}, pass {}",
        diag.agent_residuals
            .iter()
            .map(|r| sig6(*r))
            .collect::<Vec<_>>()
            .join(", "),
        sig6(diag.consensus_residual),
        diag.pass
    );
    Ok(())
}
